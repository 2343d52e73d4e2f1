#pragma once

// Exact Landau-level analytics in the symmetric gauge: the angular-momentum basis
// phi_{n,k}, the eigenvalues lambda_{n,k} of P_n e^{-q<X>} P_n, their brackets for
// the lowest level, and the level's projection kernel sampled on a grid.

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "ugwb/errors.hpp"
#include "ugwb/grid.hpp"
#include "ugwb/kernel_projection.hpp"
#include "ugwb/parallel.hpp"
#include "ugwb/radius.hpp"
#include "ugwb/special_functions.hpp"

namespace ugwb {

struct LandauSpec {
    double b = 1.0;  ///< magnetic field strength
    int n = 0;       ///< level index
    double q = 1.0;  ///< decay rate of f = e^{-q<x>}
    int k_max = 0;   ///< largest angular index of interest

    void validate() const {
        if (!(b > 0.0)) throw std::invalid_argument("LandauSpec: b must be positive");
        if (n < 0) throw std::invalid_argument("LandauSpec: n must be nonnegative");
        if (!(q > 0.0)) throw std::invalid_argument("LandauSpec: q must be positive");
        if (k_max < -n) throw std::invalid_argument("LandauSpec: k_max must be >= -n");
    }

    /// E_n = (b/2)(2n+1)
    double energy() const { return 0.5 * b * (2.0 * n + 1.0); }
};

struct LandauEigenvalue {
    int k = 0;
    double lambda = 0.0;
    double err_estimate = 0.0;
    double radius = 0.0;
    bool radius_clamped = false;
    std::optional<double> lower_bound;  ///< only for n = 0
    std::optional<double> upper_bound;
};

namespace detail {

inline double log_binomial(double top, double k) {
    return std::lgamma(top + 1.0) - std::lgamma(k + 1.0) - std::lgamma(top - k + 1.0);
}

/// log Gamma(p+1, x) for integer p >= 0.
inline double log_gamma_upper(int p, double x) {
    if (x <= 0.0) return std::lgamma(p + 1.0);
    const double lx = std::log(x);
    double peak = -std::numeric_limits<double>::infinity();
    std::vector<double> terms(p + 1);
    for (int i = 0; i <= p; ++i) {
        terms[i] = std::lgamma(p + 1.0) - x + i * lx - std::lgamma(i + 1.0);
        peak = std::max(peak, terms[i]);
    }
    double acc = 0.0;
    for (double t : terms) acc += std::exp(t - peak);
    return peak + std::log(acc);
}

/// Canonical (n, k) with k >= 0, using lambda_{n,-m} = lambda_{n-m,m} and the matching
/// identity L_n^{(-m)}(xi) = (-xi)^m (n-m)!/n! L_{n-m}^{(m)}(xi).
inline std::pair<int, int> canonical_index(int n, int k) {
    if (k >= 0) return {n, k};
    return {n + k, -k};
}

/// (n!/(k+n)!) e^{-xi} xi^k L_n^{(k)}(xi)^2 for k >= 0, the radial density of |phi_{n,k}|^2.
inline double radial_density(int n, int k, double xi) {
    const double l = laguerre(n, k, xi);
    if (xi <= 0.0) return k == 0 ? l * l : 0.0;
    const double logc = std::lgamma(n + 1.0) - std::lgamma(k + n + 1.0) + k * std::log(xi) - xi;
    return std::exp(logc) * l * l;
}

/// Bound on the mass of radial_density beyond x, from |L_n^{(k)}| <= sum_m |c_m| xi^m.
inline double radial_tail_bound(int n, int k, double x) {
    std::vector<double> a(n + 1);
    for (int m = 0; m <= n; ++m) a[m] = std::exp(log_binomial(n + k, n - m) - std::lgamma(m + 1.0));
    std::vector<double> sq(2 * n + 1, 0.0);
    for (int i = 0; i <= n; ++i)
        for (int j = 0; j <= n; ++j) sq[i + j] += a[i] * a[j];
    const double logc = std::lgamma(n + 1.0) - std::lgamma(k + n + 1.0);
    double acc = 0.0;
    for (int j = 0; j <= 2 * n; ++j) acc += sq[j] * std::exp(logc + log_gamma_upper(k + j, x));
    return acc;
}

}  // namespace detail

/// phi_{n,k}(x) = sqrt(n!/(k+n)!) [sqrt(b/2)(x1 + i x2)]^k L_n^{(k)}(b|x|^2/2) sqrt(b/2pi) e^{-b|x|^2/4}.
/// Negative k use the equivalent form (-1)^m sqrt((n-m)!/n!) conj(w)^m L_{n-m}^{(m)}(xi), m = -k.
inline cplx landau_basis_eval(double b, int n, int k, double x1, double x2) {
    if (k < -n) throw std::invalid_argument("landau_basis_eval: k must be >= -n");
    const double s = std::sqrt(0.5 * b);
    const double xi = 0.5 * b * (x1 * x1 + x2 * x2);
    const double gauss_log = 0.5 * std::log(b / (2.0 * std::numbers::pi)) - 0.5 * xi;
    const double theta = std::atan2(x2, x1);
    const int m = std::abs(k);
    const int nn = k >= 0 ? n : n + k;
    const double lag = laguerre(nn, m, xi);
    double log_mag = gauss_log + 0.5 * (std::lgamma(nn + 1.0) - std::lgamma(nn + m + 1.0));
    if (m > 0) {
        if (xi == 0.0) return {0.0, 0.0};
        log_mag += m * std::log(s * std::hypot(x1, x2));
    }
    const double sign = (k < 0 && (m % 2 == 1)) ? -1.0 : 1.0;
    return std::polar(sign * std::exp(log_mag) * lag, k * theta);
}

inline cplx landau_basis_eval(const LandauSpec& spec, int k, const std::array<double, 2>& x) {
    return landau_basis_eval(spec.b, spec.n, k, x[0], x[1]);
}

/// e^{-q}(1+2q/b)^{-(k+1)} <= lambda_{0,k} <= e^{-q}
inline Bracket lambda_bounds_0k(int k, double q, double b) {
    if (k < 0) throw std::invalid_argument("lambda_bounds_0k: k must be nonnegative");
    return {std::exp(-q - (k + 1.0) * std::log1p(2.0 * q / b)), std::exp(-q)};
}

/// 1 <= <r_{0,k}> <= 1 + ((k+1)/q) ln(1+2q/b)
inline Bracket radius_bracket_0k(int k, double q, double b) {
    if (k < 0) throw std::invalid_argument("radius_bracket_0k: k must be nonnegative");
    return {1.0, 1.0 + (k + 1.0) / q * std::log1p(2.0 * q / b)};
}

/// lambda_{n,k} = (n!/(k+n)!) int_0^inf e^{-q<sqrt(2 xi/b)>} e^{-xi} xi^k L_n^{(k)}(xi)^2 dxi,
/// to absolute accuracy tol.
inline LandauEigenvalue lambda_nk(const LandauSpec& spec, int k, double tol) {
    spec.validate();
    if (k < -spec.n) throw std::invalid_argument("lambda_nk: k must be >= -n");
    const auto [n, kk] = detail::canonical_index(spec.n, k);
    const double b = spec.b;
    const double q = spec.q;
    auto integrand = [=](double xi) {
        return std::exp(-q * std::sqrt(1.0 + 2.0 * xi / b)) * detail::radial_density(n, kk, xi);
    };
    const double eq = std::exp(-q);
    auto tail = [=](double x) { return eq * detail::radial_tail_bound(n, kk, x); };
    const auto res = integrate_adaptive(integrand, tol, tail);

    LandauEigenvalue out;
    out.k = k;
    out.lambda = res.value;
    out.err_estimate = res.err_estimate;
    if (out.lambda > 0.0 && out.lambda < 1.0) {
        const auto r = radius_from_lambda(out.lambda, q);
        out.radius = r.radius;
        out.radius_clamped = r.clamped;
    }
    if (spec.n == 0) {
        const auto br = lambda_bounds_0k(k, q, b);
        out.lower_bound = br.lower;
        out.upper_bound = br.upper;
    }
    return out;
}

/// lambda_nk for k = -n .. k_max, evaluated in parallel; results are in k order.
inline std::vector<LandauEigenvalue> landau_spectrum(const LandauSpec& spec, double tol) {
    spec.validate();
    const std::size_t count = static_cast<std::size_t>(spec.k_max + spec.n + 1);
    std::vector<LandauEigenvalue> out(count);
    parallel_for(count, [&](std::size_t i) { out[i] = lambda_nk(spec, static_cast<int>(i) - spec.n, tol); });
    return out;
}

struct PlaneQuadratureOptions {
    double tol = 1e-12;        ///< stop when successive refinements differ by less
    double extra_xi = 60.0;    ///< box covers xi = b R^2 / 2 up to (k + n) + extra_xi
    int max_refinements = 5;
};

/// <phi_{n,k}, g(x) phi_{n,k'}> by midpoint quadrature on a square in the plane,
/// halving the step until two successive values agree to opts.tol.
template <class Weight>
cplx landau_plane_matrix_element(double b, int n, int k, int kp, Weight&& g, const PlaneQuadratureOptions& opts = {}) {
    const double xi_max = std::max(k, kp) + n + opts.extra_xi + 8.0 * std::sqrt(std::max(k, kp) + n + 1.0);
    const double half = std::sqrt(2.0 * xi_max / b);
    double h = 0.4 / std::sqrt(b);
    cplx prev{std::numeric_limits<double>::quiet_NaN(), 0.0};
    for (int level = 0; level <= opts.max_refinements; ++level) {
        const int pts = static_cast<int>(std::ceil(2.0 * half / h));
        const double step = 2.0 * half / pts;
        std::vector<cplx> rows(static_cast<std::size_t>(pts));
        parallel_for(rows.size(), [&](std::size_t iy) {
            const double y = -half + (static_cast<double>(iy) + 0.5) * step;
            cplx acc{0.0, 0.0};
            for (int ix = 0; ix < pts; ++ix) {
                const double x = -half + (ix + 0.5) * step;
                acc += std::conj(landau_basis_eval(b, n, k, x, y)) * g(x, y) * landau_basis_eval(b, n, kp, x, y);
            }
            rows[iy] = acc;
        });
        cplx sum{0.0, 0.0};
        for (const auto& r : rows) sum += r;
        sum *= step * step;
        if (level > 0 && std::abs(sum - prev) <= opts.tol) return sum;
        prev = sum;
        h *= 0.5;
    }
    throw NonConvergence("landau_plane_matrix_element: refinement did not settle");
}

/// <phi_{n,k}, W_n phi_{n,k'}> with W_n = P_n e^{-q<X>} P_n, computed in position space
/// (not through the radial reduction), so its diagonality is a genuine check.
inline cplx toeplitz_element(const LandauSpec& spec, int k, int kp, const PlaneQuadratureOptions& opts = {}) {
    spec.validate();
    if (k < -spec.n || kp < -spec.n) throw std::invalid_argument("toeplitz_element: indices must be >= -n");
    const double q = spec.q;
    return landau_plane_matrix_element(
        spec.b, spec.n, k, kp, [q](double x, double y) { return std::exp(-q * std::sqrt(1.0 + x * x + y * y)); },
        opts);
}

struct KernelSum {
    cplx value{0.0, 0.0};
    double tail_estimate = 0.0;  ///< Cauchy-Schwarz bound on the omitted terms
    bool truncation_warning = false;
};

namespace detail {

/// sum_{k > k_trunc} |phi_{n,k}(x)|^2 at |x| = r.
inline double landau_point_tail(double b, int n, int k_trunc, double r) {
    const double xi = 0.5 * b * r * r;
    const double pref = b / (2.0 * std::numbers::pi);
    double acc = 0.0;
    for (int k = std::max(k_trunc + 1, -n);; ++k) {
        const auto [nn, kk] = canonical_index(n, k);
        const double t = pref * radial_density(nn, kk, xi);
        acc += t;
        if (k > xi + n + 20 && t <= 1e-18 * std::max(acc, 1e-300)) break;
        if (k > k_trunc + 100000) break;
    }
    return acc;
}

}  // namespace detail

/// P_n(x, y) = sum_{k=-n}^{k_trunc} phi_{n,k}(x) conj(phi_{n,k}(y)).
inline KernelSum landau_projection_kernel(int n, double b, const std::array<double, 2>& x,
                                          const std::array<double, 2>& y, int k_trunc, double warn_tol = 1e-10) {
    KernelSum out;
    for (int k = -n; k <= k_trunc; ++k)
        out.value += landau_basis_eval(b, n, k, x[0], x[1]) * std::conj(landau_basis_eval(b, n, k, y[0], y[1]));
    const double tx = detail::landau_point_tail(b, n, k_trunc, std::hypot(x[0], x[1]));
    const double ty = detail::landau_point_tail(b, n, k_trunc, std::hypot(y[0], y[1]));
    out.tail_estimate = std::sqrt(tx * ty);
    out.truncation_warning = out.tail_estimate > warn_tol;
    return out;
}

/// Smallest k_trunc whose omitted diagonal mass is below tol everywhere within radius r_max.
inline int landau_default_k_trunc(int n, double b, double r_max, double tol = 1e-10) {
    int k = -n;
    for (;; ++k) {
        double worst = 0.0;
        for (int s = 1; s <= 16; ++s) worst = std::max(worst, detail::landau_point_tail(b, n, k, r_max * s / 16.0));
        if (worst <= tol) return k;
    }
}

inline double corner_radius(const GridSpec& grid) {
    return std::sqrt(static_cast<double>(grid.dim())) * grid.half_width();
}

/// Phi(i, c) = phi_{n, k_lo + c}(x_i) for a 2D grid.
inline Eigen::MatrixXcd landau_basis_matrix(int n, double b, const GridSpec& grid, int k_lo, int k_hi) {
    if (grid.dim() != 2) throw std::invalid_argument("landau_basis_matrix: the Landau problem is planar");
    const auto npts = static_cast<Eigen::Index>(grid.total_points());
    Eigen::MatrixXcd phi(npts, k_hi - k_lo + 1);
    parallel_for(static_cast<std::size_t>(npts), [&](std::size_t i) {
        const auto x = grid.point(i);
        for (int k = k_lo; k <= k_hi; ++k) phi(static_cast<Eigen::Index>(i), k - k_lo) = landau_basis_eval(b, n, k, x[0], x[1]);
    });
    return phi;
}

/// The truncated kernel sum sampled on the grid, K = Phi Phi*. Restricted to a finite box
/// this is chi P chi, which is not idempotent near the boundary.
inline KernelProjection landau_sampled_kernel(int n, double b, const GridSpec& grid,
                                              std::optional<int> k_trunc = std::nullopt) {
    const int kt = k_trunc.value_or(landau_default_k_trunc(n, b, corner_radius(grid)));
    const Eigen::MatrixXcd phi = landau_basis_matrix(n, b, grid, -n, kt);
    Eigen::MatrixXcd k(phi.rows(), phi.rows());
    k.noalias() = phi * phi.adjoint();
    return KernelProjection(std::move(k), grid);
}

/// Grid projection for the n-th Landau level on a finite box: the spectral projection of
/// the sampled kernel (in orthonormal grid coordinates) onto eigenvalues above 1/2.
/// Eigenpairs come from the small Gram matrix w Phi* Phi, so the cost is linear in the
/// number of grid points apart from forming the kernel itself.
inline KernelProjection landau_grid_projection(int n, double b, const GridSpec& grid,
                                               std::optional<int> k_trunc = std::nullopt) {
    const int kt = k_trunc.value_or(landau_default_k_trunc(n, b, corner_radius(grid)));
    const Eigen::MatrixXcd phi = landau_basis_matrix(n, b, grid, -n, kt);
    const double w = grid.weight();
    const Eigen::MatrixXcd gram = w * (phi.adjoint() * phi);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(gram);
    if (es.info() != Eigen::Success) throw NonConvergence("landau_grid_projection: Gram eigensolver failed");
    std::vector<Eigen::Index> keep;
    for (Eigen::Index j = 0; j < es.eigenvalues().size(); ++j)
        if (es.eigenvalues()(j) > 0.5) keep.push_back(j);
    Eigen::MatrixXcd basis(phi.rows(), static_cast<Eigen::Index>(keep.size()));
    for (std::size_t c = 0; c < keep.size(); ++c) {
        const Eigen::Index j = keep[c];
        basis.col(static_cast<Eigen::Index>(c)) =
            std::sqrt(w) * (phi * es.eigenvectors().col(j)) / std::sqrt(es.eigenvalues()(j));
    }
    return KernelProjection::from_range_basis(std::move(basis), grid);
}

}  // namespace ugwb
