#pragma once

#include <Eigen/Core>

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace any3d {

// Exact k-nearest-neighbor search over a fixed point set using a uniform
// hash grid. Results are ordered by (squared distance, index), so ties are
// broken deterministically and the output matches a brute-force sort.
class KnnGrid {
public:
    explicit KnnGrid(std::span<const Eigen::Vector3d> points, double cell_size = 0.0);

    // The k nearest points to query (k <= size()).
    void query(const Eigen::Vector3d& query, std::size_t k, std::vector<std::size_t>& out) const;

    std::size_t size() const { return points_.size(); }
    double cell_size() const { return cell_; }

private:
    struct Cell {
        std::int64_t key;
        std::uint32_t begin;
        std::uint32_t end;
    };

    std::int64_t cell_coord(double x, int axis) const;
    const Cell* find(std::int64_t cx, std::int64_t cy, std::int64_t cz) const;

    std::span<const Eigen::Vector3d> points_;
    double cell_ = 1.0;
    Eigen::Vector3d origin_ = Eigen::Vector3d::Zero();
    Eigen::Matrix<std::int64_t, 3, 1> dims_;
    std::vector<std::uint32_t> order_;
    std::vector<Cell> cells_;  // sorted by key
    std::vector<Eigen::Vector3d> sorted_;  // points_ in order_
    // cells_ position + 1 per grid cell, 0 when empty; only for small grids.
    std::vector<std::uint32_t> dense_;
};

}  // namespace any3d
