#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>

#include "ugwb/special_functions.hpp"

namespace ugwb {

/// Largest number of grid points a dense operator may be built on.
inline constexpr std::size_t kMaxGridPoints = 8192;

/// Midpoint-rule grid on the box [-half_width, half_width]^dim.
///
/// Points sit at cell centers, x_a = -L + (i_a + 1/2) h, and are numbered with the
/// first axis fastest: index = i_0 + N i_1 (+ N^2 i_2).
class GridSpec {
public:
    GridSpec() = default;

    GridSpec(int dim, double half_width, int points_per_axis, std::size_t max_points = kMaxGridPoints)
        : dim_(dim), half_width_(half_width), points_per_axis_(points_per_axis) {
        if (dim != 2 && dim != 3) throw std::invalid_argument("GridSpec: dim must be 2 or 3");
        if (!(half_width > 0.0)) throw std::invalid_argument("GridSpec: half_width must be positive");
        if (points_per_axis < 1) throw std::invalid_argument("GridSpec: points_per_axis must be positive");
        if (total_points() > max_points) {
            throw std::invalid_argument("GridSpec: " + std::to_string(total_points()) + " points exceed the cap of " +
                                        std::to_string(max_points));
        }
    }

    /// Unit-spaced lattice of n x n sites centered on the origin.
    static GridSpec lattice(int n) { return GridSpec(2, 0.5 * n, n); }

    int dim() const { return dim_; }
    double half_width() const { return half_width_; }
    int points_per_axis() const { return points_per_axis_; }
    double spacing() const { return 2.0 * half_width_ / points_per_axis_; }
    double weight() const { return std::pow(spacing(), dim_); }

    std::size_t total_points() const {
        std::size_t n = 1;
        for (int a = 0; a < dim_; ++a) n *= static_cast<std::size_t>(points_per_axis_);
        return n;
    }

    double coordinate(int i) const { return -half_width_ + (i + 0.5) * spacing(); }

    std::array<int, 3> axis_indices(std::size_t index) const {
        std::array<int, 3> ia{0, 0, 0};
        const auto n = static_cast<std::size_t>(points_per_axis_);
        for (int a = 0; a < dim_; ++a) {
            ia[a] = static_cast<int>(index % n);
            index /= n;
        }
        return ia;
    }

    /// Coordinates of a point; unused trailing components are zero.
    std::array<double, 3> point(std::size_t index) const {
        const auto ia = axis_indices(index);
        std::array<double, 3> x{0.0, 0.0, 0.0};
        for (int a = 0; a < dim_; ++a) x[a] = coordinate(ia[a]);
        return x;
    }

    double norm(std::size_t index) const {
        const auto x = point(index);
        return std::sqrt(x[0] * x[0] + x[1] * x[1] + x[2] * x[2]);
    }

    double jbracket_at(std::size_t index) const { return ugwb::jbracket(point(index)); }

    double distance(std::size_t i, std::size_t j) const {
        const auto x = point(i);
        const auto y = point(j);
        double acc = 0.0;
        for (int a = 0; a < 3; ++a) acc += (x[a] - y[a]) * (x[a] - y[a]);
        return std::sqrt(acc);
    }

    friend bool operator==(const GridSpec&, const GridSpec&) = default;

private:
    int dim_ = 2;
    double half_width_ = 1.0;
    int points_per_axis_ = 1;
};

}  // namespace ugwb
