#include "any3d/knn.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <utility>

#include "any3d/error.hpp"

namespace any3d {
namespace {

using Candidate = std::pair<double, std::size_t>;

}  // namespace

KnnGrid::KnnGrid(std::span<const Eigen::Vector3d> points, double cell_size) : points_(points) {
    require(!points.empty(), "knn: empty point set");
    require(points.size() < std::numeric_limits<std::uint32_t>::max(), "knn: too many points");
    Eigen::Vector3d lo = points[0], hi = points[0];
    for (const auto& p : points) {
        require(p.allFinite(), "knn: non-finite point");
        lo = lo.cwiseMin(p);
        hi = hi.cwiseMax(p);
    }
    origin_ = lo;
    const Eigen::Vector3d extent = (hi - lo).cwiseMax(1e-9);

    cell_ = cell_size;
    if (cell_ <= 0.0) {
        // Start from a volumetric guess and shrink while cells are crowded;
        // surface-like clouds need much smaller cells than the guess.
        // Flat or collinear clouds would otherwise get a near-zero volume.
        const Eigen::Vector3d span = extent.cwiseMax(extent.maxCoeff() * 1e-3);
        cell_ = std::cbrt(span.prod() * 8.0 / static_cast<double>(points.size()));
        cell_ = std::max(cell_, extent.maxCoeff() * 1e-6);
    }

    std::vector<std::int64_t> keys(points.size());
    for (int attempt = 0;; ++attempt) {
        for (int a = 0; a < 3; ++a) dims_[a] = static_cast<std::int64_t>(std::floor(extent[a] / cell_)) + 1;
        for (std::size_t i = 0; i < points.size(); ++i) {
            const auto cx = cell_coord(points[i].x(), 0);
            const auto cy = cell_coord(points[i].y(), 1);
            const auto cz = cell_coord(points[i].z(), 2);
            keys[i] = (cz * dims_[1] + cy) * dims_[0] + cx;
        }
        order_.resize(points.size());
        for (std::size_t i = 0; i < order_.size(); ++i) order_[i] = static_cast<std::uint32_t>(i);
        std::stable_sort(order_.begin(), order_.end(),
                         [&](std::uint32_t a, std::uint32_t b) { return keys[a] < keys[b]; });
        cells_.clear();
        for (std::size_t j = 0; j < order_.size();) {
            std::size_t e = j;
            while (e < order_.size() && keys[order_[e]] == keys[order_[j]]) ++e;
            cells_.push_back({keys[order_[j]], static_cast<std::uint32_t>(j), static_cast<std::uint32_t>(e)});
            j = e;
        }
        const double occupancy = static_cast<double>(points.size()) / static_cast<double>(cells_.size());
        if (cell_size > 0.0 || occupancy <= 8.0 || attempt >= 8) break;
        cell_ *= 0.5;
    }

    sorted_.resize(points.size());
    for (std::size_t j = 0; j < order_.size(); ++j) sorted_[j] = points[order_[j]];
    constexpr std::int64_t kDenseLimit = std::int64_t{1} << 24;
    if (dims_[0] <= kDenseLimit && dims_[1] <= kDenseLimit && dims_[2] <= kDenseLimit &&
        dims_[0] * dims_[1] <= kDenseLimit && dims_[0] * dims_[1] * dims_[2] <= kDenseLimit) {
        dense_.assign(static_cast<std::size_t>(dims_[0] * dims_[1] * dims_[2]), 0);
        for (std::size_t c = 0; c < cells_.size(); ++c)
            dense_[static_cast<std::size_t>(cells_[c].key)] = static_cast<std::uint32_t>(c + 1);
    }
}

std::int64_t KnnGrid::cell_coord(double x, int axis) const {
    return static_cast<std::int64_t>(std::floor((x - origin_[axis]) / cell_));
}

const KnnGrid::Cell* KnnGrid::find(std::int64_t cx, std::int64_t cy, std::int64_t cz) const {
    if (cx < 0 || cy < 0 || cz < 0 || cx >= dims_[0] || cy >= dims_[1] || cz >= dims_[2]) return nullptr;
    const std::int64_t key = (cz * dims_[1] + cy) * dims_[0] + cx;
    if (!dense_.empty()) {
        const std::uint32_t c = dense_[static_cast<std::size_t>(key)];
        return c ? &cells_[c - 1] : nullptr;
    }
    auto it = std::lower_bound(cells_.begin(), cells_.end(), key,
                               [](const Cell& c, std::int64_t k) { return c.key < k; });
    return (it != cells_.end() && it->key == key) ? &*it : nullptr;
}

void KnnGrid::query(const Eigen::Vector3d& q, std::size_t k, std::vector<std::size_t>& out) const {
    require(k >= 1 && k <= points_.size(), "knn: k must lie in [1, size]");
    std::vector<Candidate> heap;  // max-heap on (d2, index)
    heap.reserve(k + 1);
    const std::int64_t qc[3] = {cell_coord(q.x(), 0), cell_coord(q.y(), 1), cell_coord(q.z(), 2)};

    auto visit = [&](std::int64_t cx, std::int64_t cy, std::int64_t cz) {
        const Cell* cell = find(cx, cy, cz);
        if (!cell) return;
        if (heap.size() == k) {
            // Skip cells that cannot hold anything closer than the current k-th.
            const std::int64_t cc[3] = {cx, cy, cz};
            double gap2 = 0.0;
            for (int a = 0; a < 3; ++a) {
                const double lo = origin_[a] + static_cast<double>(cc[a]) * cell_;
                const double gap = std::max({lo - q[a], q[a] - (lo + cell_), 0.0});
                gap2 += gap * gap;
            }
            if (gap2 > heap.front().first) return;
        }
        for (std::uint32_t j = cell->begin; j < cell->end; ++j) {
            const std::size_t idx = order_[j];
            const Candidate c{(sorted_[j] - q).squaredNorm(), idx};
            if (heap.size() < k) {
                heap.push_back(c);
                std::push_heap(heap.begin(), heap.end());
            } else if (c < heap.front()) {
                std::pop_heap(heap.begin(), heap.end());
                heap.back() = c;
                std::push_heap(heap.begin(), heap.end());
            }
        }
    };

    for (std::int64_t r = 0;; ++r) {
        for (std::int64_t dz = -r; dz <= r; ++dz) {
            const std::int64_t cz = qc[2] + dz;
            if (cz < 0 || cz >= dims_[2]) continue;
            for (std::int64_t dy = -r; dy <= r; ++dy) {
                const std::int64_t cy = qc[1] + dy;
                if (cy < 0 || cy >= dims_[1]) continue;
                const bool face = (std::abs(dz) == r || std::abs(dy) == r);
                const std::int64_t step = face ? 1 : 2 * r;
                for (std::int64_t dx = -r; dx <= r; dx += step) visit(qc[0] + dx, cy, cz);
            }
        }

        bool covers_grid = true;
        double bound = std::numeric_limits<double>::infinity();
        for (int a = 0; a < 3; ++a) {
            covers_grid = covers_grid && qc[a] - r <= 0 && qc[a] + r >= dims_[a] - 1;
            // A side already past the grid edge hides nothing.
            if (qc[a] - r > 0) bound = std::min(bound, q[a] - (origin_[a] + static_cast<double>(qc[a] - r) * cell_));
            if (qc[a] + r < dims_[a] - 1)
                bound = std::min(bound, origin_[a] + static_cast<double>(qc[a] + r + 1) * cell_ - q[a]);
        }
        if (covers_grid) break;
        // Every unvisited point is at distance >= bound; ties at exactly the
        // bound may still win on index, so require strict inequality.
        if (heap.size() == k && bound > 0.0 && heap.front().first < bound * bound) break;
    }

    std::sort_heap(heap.begin(), heap.end());
    out.resize(heap.size());
    for (std::size_t i = 0; i < heap.size(); ++i) out[i] = heap[i].second;
}

}  // namespace any3d
