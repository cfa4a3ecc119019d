#include <Eigen/Eigenvalues>

#include "any3d/error.hpp"
#include "any3d/geometry.hpp"
#include "any3d/knn.hpp"

namespace any3d {

NormalEstimate estimate_normals(const PointCloud& cloud, int k) {
    require(k >= 3, "normals: k must be at least 3");
    require(cloud.size() >= static_cast<std::size_t>(k), "normals: cloud has fewer than k points");

    NormalEstimate result;
    result.cloud = cloud;
    result.cloud.normals.assign(cloud.size(), Eigen::Vector3d(0.0, 0.0, -1.0));

    const KnnGrid grid(cloud.coords);
    std::vector<std::size_t> nbrs;
    for (std::size_t i = 0; i < cloud.size(); ++i) {
        const Eigen::Vector3d& p = cloud.coords[i];
        grid.query(p, static_cast<std::size_t>(k), nbrs);

        Eigen::Vector3d mean = Eigen::Vector3d::Zero();
        for (std::size_t j : nbrs) mean += cloud.coords[j];
        mean /= static_cast<double>(nbrs.size());
        Eigen::Matrix3d cov = Eigen::Matrix3d::Zero();
        for (std::size_t j : nbrs) {
            const Eigen::Vector3d d = cloud.coords[j] - mean;
            cov.noalias() += d * d.transpose();
        }
        cov /= static_cast<double>(nbrs.size());

        const Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es(cov);
        const Eigen::Vector3d lambda = es.eigenvalues();  // ascending
        if (es.info() != Eigen::Success || !(lambda[2] > 0.0) || lambda[1] <= 1e-12 * lambda[2]) {
            result.degenerate.push_back(i);
            continue;
        }
        Eigen::Vector3d n = es.eigenvectors().col(0).normalized();
        if (n.dot(-p) < 0.0) n = -n;
        result.cloud.normals[i] = n;
    }
    return result;
}

}  // namespace any3d
