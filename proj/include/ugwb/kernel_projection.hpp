#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "ugwb/errors.hpp"
#include "ugwb/grid.hpp"
#include "ugwb/special_functions.hpp"

namespace ugwb {

using cplx = std::complex<double>;

/// |P(x,y)| <= c e^{-beta |x-y|}.
struct DecayEnvelope {
    double c = 0.0;
    double beta = 0.0;
};

/// Weight G >= 1 on [0, inf) with near-triangle constant c_g:
/// G(|x-y|) <= c_g G(|x-z|) G(|z-y|).
struct LocalizationFunction {
    std::function<double(double)> eval;
    double c_g = 1.0;
    std::string name;

    double operator()(double r) const { return eval(r); }

    /// G(r) = e^{q <r>}. Since <a+b> <= <a> + <b>, c_g = 1.
    static LocalizationFunction exponential(double q) {
        return {[q](double r) { return std::exp(q * jbracket(r)); }, 1.0, "exp(q<x>)"};
    }

    static LocalizationFunction constant() {
        return {[](double) { return 1.0; }, 1.0, "1"};
    }
};

struct LocalizationCheck {
    double max_triangle_ratio = 0.0;  ///< max of G(|x-y|) / (G(|x-z|) G(|z-y|)) over sampled triples
    bool triangle_ok = false;
    bool at_least_one = false;
    bool nondecreasing = false;
    bool diverges = false;  ///< G at the largest sample exceeds 1e3 G(0)
    std::size_t samples = 0;

    bool ok() const { return triangle_ok && at_least_one && nondecreasing; }
};

/// Samples triples uniformly in [-radius, radius]^dim and radii in [0, radius].
inline LocalizationCheck check_localization_function(const LocalizationFunction& g, int dim, double radius,
                                                     std::size_t samples, std::uint64_t seed) {
    LocalizationCheck out;
    out.samples = samples;
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> coord(-radius, radius);
    auto dist = [dim](const std::array<double, 3>& a, const std::array<double, 3>& b) {
        double s = 0.0;
        for (int k = 0; k < dim; ++k) s += (a[k] - b[k]) * (a[k] - b[k]);
        return std::sqrt(s);
    };
    for (std::size_t s = 0; s < samples; ++s) {
        std::array<double, 3> x{}, y{}, z{};
        for (int k = 0; k < dim; ++k) {
            x[k] = coord(rng);
            y[k] = coord(rng);
            z[k] = coord(rng);
        }
        const double ratio = g(dist(x, y)) / (g(dist(x, z)) * g(dist(z, y)));
        out.max_triangle_ratio = std::max(out.max_triangle_ratio, ratio);
    }
    out.triangle_ok = out.max_triangle_ratio <= g.c_g * (1.0 + 1e-12);

    std::uniform_real_distribution<double> rad(0.0, radius);
    std::vector<double> rs(samples);
    for (auto& r : rs) r = rad(rng);
    rs.push_back(0.0);
    rs.push_back(radius);
    std::sort(rs.begin(), rs.end());
    out.at_least_one = true;
    out.nondecreasing = true;
    double prev = g(rs.front());
    for (double r : rs) {
        const double v = g(r);
        if (v < 1.0) out.at_least_one = false;
        if (v < prev) out.nondecreasing = false;
        prev = v;
    }
    out.diverges = g(radius) > 1e3 * g(0.0);
    return out;
}

/// Max-norm Hermiticity defect max |A_ij - conj(A_ji)|.
inline double hermiticity_residual(const Eigen::MatrixXcd& a) {
    double r = 0.0;
    for (Eigen::Index j = 0; j < a.cols(); ++j)
        for (Eigen::Index i = j; i < a.rows(); ++i) r = std::max(r, std::abs(a(i, j) - std::conj(a(j, i))));
    return r;
}

/// A projection given by its kernel sampled on a grid, K(i,j) ~ P(x_i, x_j).
///
/// As an operator on grid functions, (P psi)(x_i) = sum_j K(i,j) psi(x_j) w with w the
/// cell weight, so the matrix in orthonormal grid coordinates is w K. The kernel is
/// made exactly Hermitian on construction. When the producer knows an orthonormal
/// basis U of the range (orthonormal coordinates, w K = U U*), it can attach it.
class KernelProjection {
public:
    KernelProjection() = default;

    KernelProjection(Eigen::MatrixXcd kernel, GridSpec grid, std::optional<DecayEnvelope> decay = std::nullopt)
        : kernel_(std::move(kernel)), grid_(grid), decay_(decay) {
        const auto n = static_cast<Eigen::Index>(grid_.total_points());
        if (kernel_.rows() != n || kernel_.cols() != n) {
            throw DimensionMismatch("KernelProjection: kernel is " + std::to_string(kernel_.rows()) + "x" +
                                    std::to_string(kernel_.cols()) + " but the grid has " + std::to_string(n) +
                                    " points");
        }
        construction_asymmetry_ = symmetrize(kernel_);
    }

    /// K = U U* / w from an orthonormal range basis.
    static KernelProjection from_range_basis(Eigen::MatrixXcd basis, GridSpec grid,
                                             std::optional<DecayEnvelope> decay = std::nullopt) {
        const auto n = static_cast<Eigen::Index>(grid.total_points());
        if (basis.rows() != n) throw DimensionMismatch("KernelProjection: range basis rows differ from grid size");
        Eigen::MatrixXcd k(n, n);
        if (basis.cols() > 0) {
            k.noalias() = basis * basis.adjoint();
            k /= grid.weight();
        } else {
            k.setZero();
        }
        KernelProjection p(std::move(k), grid, decay);
        p.range_basis_ = std::move(basis);
        return p;
    }

    static KernelProjection zero(GridSpec grid) {
        const auto n = static_cast<Eigen::Index>(grid.total_points());
        return from_range_basis(Eigen::MatrixXcd(n, 0), grid);
    }

    const Eigen::MatrixXcd& kernel() const { return kernel_; }
    const GridSpec& grid() const { return grid_; }
    std::size_t size() const { return static_cast<std::size_t>(kernel_.rows()); }
    const std::optional<DecayEnvelope>& decay() const { return decay_; }
    void set_decay(std::optional<DecayEnvelope> d) { decay_ = d; }
    const std::optional<Eigen::MatrixXcd>& range_basis() const { return range_basis_; }
    double construction_asymmetry() const { return construction_asymmetry_; }

    /// w K: the operator in orthonormal grid coordinates.
    Eigen::MatrixXcd orthonormal_matrix() const { return grid_.weight() * kernel_; }

private:
    static double symmetrize(Eigen::MatrixXcd& k) {
        double defect = 0.0;
        for (Eigen::Index j = 0; j < k.cols(); ++j) {
            for (Eigen::Index i = j + 1; i < k.rows(); ++i) {
                defect = std::max(defect, std::abs(k(i, j) - std::conj(k(j, i))));
                const cplx avg = 0.5 * (k(i, j) + std::conj(k(j, i)));
                k(i, j) = avg;
                k(j, i) = std::conj(avg);
            }
            defect = std::max(defect, 2.0 * std::fabs(k(j, j).imag()));
            k(j, j) = k(j, j).real();
        }
        return defect;
    }

    Eigen::MatrixXcd kernel_;
    GridSpec grid_;
    std::optional<DecayEnvelope> decay_;
    std::optional<Eigen::MatrixXcd> range_basis_;
    double construction_asymmetry_ = 0.0;
};

struct ProjectionReport {
    double hermiticity_residual = 0.0;
    double idempotency_residual = 0.0;  ///< max |(K W K - K)_ij| with W the cell weights
    std::size_t decay_violations = 0;
    double max_decay_ratio = 0.0;       ///< max |K_ij| / (C e^{-beta d_ij}); only with decay metadata
    double tol = 0.0;
    bool passed = false;
};

/// Hermiticity is measured before the constructor's symmetrization.
inline ProjectionReport verify_projection(const KernelProjection& p, double tol) {
    ProjectionReport r;
    r.tol = tol;
    r.hermiticity_residual = p.construction_asymmetry();
    const auto& k = p.kernel();
    if (k.size() > 0) {
        Eigen::MatrixXcd sq(k.rows(), k.cols());
        sq.noalias() = k * k;
        sq *= p.grid().weight();
        sq -= k;
        r.idempotency_residual = sq.cwiseAbs().maxCoeff();
    }
    if (const auto& d = p.decay()) {
        const auto& g = p.grid();
        for (Eigen::Index j = 0; j < k.cols(); ++j) {
            for (Eigen::Index i = 0; i < k.rows(); ++i) {
                const double env = d->c * std::exp(-d->beta * g.distance(i, j));
                const double ratio = std::abs(k(i, j)) / env;
                r.max_decay_ratio = std::max(r.max_decay_ratio, ratio);
                if (std::abs(k(i, j)) > env + tol) ++r.decay_violations;
            }
        }
    }
    r.passed = r.hermiticity_residual <= tol && r.idempotency_residual <= tol && r.decay_violations == 0;
    return r;
}

}  // namespace ugwb
