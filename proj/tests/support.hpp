#pragma once

#include <cmath>

#include <Eigen/Dense>

#include "ugwb/kernel_projection.hpp"

namespace support {

/// Grid samples of a Gaussian bump normalized in the grid inner product.
inline Eigen::VectorXcd gaussian_samples(const ugwb::GridSpec& grid, double sigma, double cx = 0.0, double cy = 0.0) {
    Eigen::VectorXcd v(static_cast<Eigen::Index>(grid.total_points()));
    for (std::size_t i = 0; i < grid.total_points(); ++i) {
        const auto x = grid.point(i);
        const double r2 = (x[0] - cx) * (x[0] - cx) + (x[1] - cy) * (x[1] - cy) + x[2] * x[2];
        v(static_cast<Eigen::Index>(i)) = std::exp(-r2 / (2.0 * sigma * sigma));
    }
    v /= std::sqrt(grid.weight() * v.squaredNorm());
    return v;
}

/// Rank-1 projection onto a normalized Gaussian: K = psi psi^*.
inline ugwb::KernelProjection gaussian_rank1(const ugwb::GridSpec& grid, double sigma, double cx = 0.0,
                                             double cy = 0.0) {
    const Eigen::VectorXcd psi = gaussian_samples(grid, sigma, cx, cy);
    return ugwb::KernelProjection::from_range_basis(std::sqrt(grid.weight()) * psi, grid);
}

}  // namespace support
