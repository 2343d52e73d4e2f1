#pragma once

// The generic pipeline for a kernel-represented projection P on a grid:
// W_f = P f(X) P, its eigendecomposition, degeneracy grouping, localization radii and
// the Hilbert-Schmidt bound M = ||G(|X|) P f(X)||_HS^2 + 1 on the radial localization
// integrals of the resulting basis.

#include <algorithm>
#include <array>
#include <cmath>
#include <concepts>
#include <complex>
#include <limits>
#include <numeric>
#include <optional>
#include <string>
#include <type_traits>
#include <vector>

#include <Eigen/Dense>

#include "ugwb/errors.hpp"
#include "ugwb/grid.hpp"
#include "ugwb/kernel_projection.hpp"
#include "ugwb/radius.hpp"
#include "ugwb/special_functions.hpp"

namespace ugwb {

/// Eigenvalues sorted decreasingly with matching unit eigenvectors as columns.
struct Eigenpairs {
    Eigen::VectorXd values;
    Eigen::MatrixXcd vectors;
};

/// Full dense Hermitian eigendecomposition (Householder tridiagonalization followed by
/// implicit QL). Only the lower triangle of w is read.
inline Eigenpairs eigendecompose(const Eigen::MatrixXcd& w) {
    if (w.rows() != w.cols()) throw DimensionMismatch("eigendecompose: matrix is not square");
    Eigenpairs out;
    if (w.rows() == 0) return out;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(w);
    if (es.info() != Eigen::Success) throw NonConvergence("eigendecompose: QL iteration did not converge");
    const auto n = w.rows();
    // Eigen returns increasing order; reversing keeps equal eigenvalues in solver order
    // relative to each other (reversed), which grouping makes irrelevant.
    out.values = es.eigenvalues().reverse();
    out.vectors = es.eigenvectors().rowwise().reverse();
    (void)n;
    return out;
}

/// f evaluated at every grid point.
template <class F>
Eigen::VectorXd sample_on_grid(const GridSpec& grid, F&& f) {
    Eigen::VectorXd v(static_cast<Eigen::Index>(grid.total_points()));
    for (std::size_t i = 0; i < grid.total_points(); ++i) v(static_cast<Eigen::Index>(i)) = f(grid.point(i));
    return v;
}

/// f(x) = e^{-q <x>} on the grid.
inline Eigen::VectorXd radial_decay_weight(const GridSpec& grid, double q) {
    return sample_on_grid(grid, [q](const std::array<double, 3>& x) { return std::exp(-q * jbracket(x)); });
}

/// Matrix of W_f = P f(X) P in orthonormal grid coordinates: w^2 K diag(f) K.
inline Eigen::MatrixXcd assemble_wf(const KernelProjection& p, const Eigen::VectorXd& f_values) {
    const auto n = static_cast<Eigen::Index>(p.size());
    if (f_values.size() != n) {
        throw DimensionMismatch("assemble_wf: f has " + std::to_string(f_values.size()) + " samples for " +
                                std::to_string(n) + " grid points");
    }
    if ((f_values.array() < 0.0).any() || !f_values.allFinite())
        throw std::invalid_argument("assemble_wf: f must be nonnegative and finite on the grid");
    const double w = p.grid().weight();
    Eigen::MatrixXcd right = (w * f_values).asDiagonal() * p.kernel();
    Eigen::MatrixXcd out(n, n);
    out.noalias() = (w * p.kernel()) * right;
    // Exact Hermiticity; the product differs from its adjoint only by rounding.
    for (Eigen::Index j = 0; j < n; ++j) {
        for (Eigen::Index i = j + 1; i < n; ++i) {
            const cplx avg = 0.5 * (out(i, j) + std::conj(out(j, i)));
            out(i, j) = avg;
            out(j, i) = std::conj(avg);
        }
        out(j, j) = out(j, j).real();
    }
    return out;
}

template <class F>
    requires std::convertible_to<std::invoke_result_t<F, const std::array<double, 3>&>, double>
Eigen::MatrixXcd assemble_wf(const KernelProjection& p, F&& f) {
    return assemble_wf(p, sample_on_grid(p.grid(), std::forward<F>(f)));
}

/// Columns of one eigenvalue cluster.
struct LevelGroup {
    double lambda = 0.0;  ///< mean of the merged eigenvalues
    std::vector<Eigen::Index> columns;
    std::size_t multiplicity() const { return columns.size(); }
};

/// Merges consecutive eigenvalues with |lambda_a - lambda_b| <= rel_tol lambda_a into one
/// level and discards eigenvalues <= floor. `values` must be sorted decreasingly.
inline std::vector<LevelGroup> group_degeneracies(const Eigen::VectorXd& values, double rel_tol, double floor) {
    std::vector<LevelGroup> levels;
    double prev = 0.0;
    for (Eigen::Index i = 0; i < values.size(); ++i) {
        const double v = values(i);
        if (!(v > floor)) break;
        if (!levels.empty() && std::fabs(prev - v) <= rel_tol * prev) {
            levels.back().columns.push_back(i);
        } else {
            levels.push_back({v, {i}});
        }
        prev = v;
    }
    for (auto& level : levels) {
        double acc = 0.0;
        for (auto c : level.columns) acc += values(c);
        level.lambda = acc / static_cast<double>(level.columns.size());
    }
    return levels;
}

/// int e^{q |<x> - <r>|} |psi(x)|^2 dx by the midpoint rule; psi holds grid samples.
inline double localization_integral(const Eigen::Ref<const Eigen::VectorXcd>& psi, double r, double q,
                                    const GridSpec& grid) {
    if (psi.size() != static_cast<Eigen::Index>(grid.total_points()))
        throw DimensionMismatch("localization_integral: vector length differs from grid size");
    const double jr = jbracket(r);
    double acc = 0.0;
    for (Eigen::Index i = 0; i < psi.size(); ++i)
        acc += std::exp(q * std::fabs(grid.jbracket_at(static_cast<std::size_t>(i)) - jr)) * std::norm(psi(i));
    return acc * grid.weight();
}

/// int e^{q (<r> - <x>)} |psi(x)|^2 dx, which equals 1 for an exact eigenvector in Ran P.
inline double normalization_identity(const Eigen::Ref<const Eigen::VectorXcd>& psi, double r, double q,
                                     const GridSpec& grid) {
    const double jr = jbracket(r);
    double acc = 0.0;
    for (Eigen::Index i = 0; i < psi.size(); ++i)
        acc += std::exp(q * (jr - grid.jbracket_at(static_cast<std::size_t>(i)))) * std::norm(psi(i));
    return acc * grid.weight();
}

struct HsBound {
    double hs_norm_sq = 0.0;  ///< ||G(|X|) P f(X)||_HS^2 on the grid
    double m_bound = 1.0;     ///< hs_norm_sq + 1
    double growth_rate = 0.0; ///< slope of log shell-averaged row mass over the outer shells
    bool overflow = false;
};

/// M = ||G(|X|) P f(X)||_HS^2 + 1 with the grid HS norm w^2 sum_ij |G(|x_i|) K_ij f(x_j)|^2.
///
/// The row masses G(|x_i|)^2 sum_j |K_ij f_j|^2 w^2 are averaged over radial shells inside
/// the inscribed ball. When the kernel decays faster than G grows they stay flat; when
/// it does not, they grow exponentially and `overflow` is raised (slope above q_ref/2,
/// q_ref being the growth rate of log G at large radius).
inline HsBound hs_bound(const KernelProjection& p, const Eigen::VectorXd& f_values, const LocalizationFunction& g) {
    const auto& grid = p.grid();
    const auto n = static_cast<Eigen::Index>(p.size());
    if (f_values.size() != n) throw DimensionMismatch("hs_bound: f has the wrong number of samples");
    const double w = grid.weight();
    const auto& k = p.kernel();
    Eigen::VectorXd col_scale = f_values * w;  // f_j w
    Eigen::VectorXd row_mass = Eigen::VectorXd::Zero(n);
    for (Eigen::Index j = 0; j < n; ++j) {
        const double s = col_scale(j) * col_scale(j);
        for (Eigen::Index i = 0; i < n; ++i) row_mass(i) += std::norm(k(i, j)) * s;
    }
    HsBound out;
    for (Eigen::Index i = 0; i < n; ++i) {
        const double gi = g(grid.norm(static_cast<std::size_t>(i)));
        row_mass(i) *= gi * gi;
        out.hs_norm_sq += row_mass(i);
    }
    out.m_bound = out.hs_norm_sq + 1.0;
    if (!std::isfinite(out.hs_norm_sq)) {
        out.overflow = true;
        return out;
    }

    constexpr int shells = 12;
    const double rmax = grid.half_width();
    std::array<double, shells> sum{};
    std::array<int, shells> count{};
    for (Eigen::Index i = 0; i < n; ++i) {
        const double r = grid.norm(static_cast<std::size_t>(i));
        if (r >= rmax) continue;
        const int s = std::min(shells - 1, static_cast<int>(r / rmax * shells));
        sum[s] += row_mass(i);
        ++count[s];
    }
    std::vector<double> xs, ys;
    for (int s = shells / 2; s < shells; ++s) {
        if (count[s] == 0 || !(sum[s] > 0.0)) continue;
        xs.push_back((s + 0.5) * rmax / shells);
        ys.push_back(std::log(sum[s] / count[s]));
    }
    if (xs.size() >= 3) {
        const double mx = std::accumulate(xs.begin(), xs.end(), 0.0) / xs.size();
        const double my = std::accumulate(ys.begin(), ys.end(), 0.0) / ys.size();
        double sxy = 0.0, sxx = 0.0;
        for (std::size_t i = 0; i < xs.size(); ++i) {
            sxy += (xs[i] - mx) * (ys[i] - my);
            sxx += (xs[i] - mx) * (xs[i] - mx);
        }
        out.growth_rate = sxy / sxx;
        // Growth rate of log G itself near the edge of the inscribed ball.
        const double r1 = 0.5 * rmax, r2 = rmax;
        const double g_rate = (std::log(g(r2)) - std::log(g(r1))) / (r2 - r1);
        out.overflow = g_rate > 0.0 && out.growth_rate > 0.5 * g_rate;
    }
    return out;
}

/// The C4 rotation (x, y) -> (-y, x) as a permutation of a square 2D grid with an even
/// number of points per axis, plus one representative per orbit (the x > 0, y > 0 quadrant).
struct C4Structure {
    std::vector<Eigen::Index> rotate;
    std::vector<Eigen::Index> representatives;
};

inline std::optional<C4Structure> c4_structure(const GridSpec& grid) {
    if (grid.dim() != 2 || grid.points_per_axis() % 2 != 0) return std::nullopt;
    const int n = grid.points_per_axis();
    C4Structure s;
    s.rotate.resize(grid.total_points());
    for (int i1 = 0; i1 < n; ++i1)
        for (int i0 = 0; i0 < n; ++i0) s.rotate[i0 + n * i1] = (n - 1 - i1) + n * i0;
    for (int i1 = n / 2; i1 < n; ++i1)
        for (int i0 = n / 2; i0 < n; ++i0) s.representatives.push_back(i0 + n * i1);
    return s;
}

/// True when K(R x, R y) = K(x, y) to within tol * max|K| for the grid rotation R.
inline bool is_c4_invariant(const KernelProjection& p, const C4Structure& s, double tol = 1e-12) {
    const auto& k = p.kernel();
    const double scale = k.size() ? k.cwiseAbs().maxCoeff() : 0.0;
    if (scale == 0.0) return true;
    for (Eigen::Index j = 0; j < k.cols(); ++j)
        for (Eigen::Index i = 0; i < k.rows(); ++i)
            if (std::abs(k(s.rotate[i], s.rotate[j]) - k(i, j)) > tol * scale) return false;
    return true;
}

/// Eigenpairs of w^2 K F K computed sector by sector in the rotation eigenbasis
/// u_{o,s} = (1/2) sum_m i^{s m} e_{R^m o}; f must be rotation invariant.
inline Eigenpairs eigendecompose_wf_c4(const KernelProjection& p, const Eigen::VectorXd& f_values,
                                       const C4Structure& s) {
    const auto& k = p.kernel();
    const double w = p.grid().weight();
    const auto nr = static_cast<Eigen::Index>(s.representatives.size());
    const auto n = static_cast<Eigen::Index>(p.size());
    std::vector<std::array<Eigen::Index, 4>> orbit(nr);
    for (Eigen::Index o = 0; o < nr; ++o) {
        Eigen::Index idx = s.representatives[o];
        for (int m = 0; m < 4; ++m) {
            orbit[o][m] = idx;
            idx = s.rotate[idx];
        }
    }
    Eigen::VectorXd f_rep(nr);
    for (Eigen::Index o = 0; o < nr; ++o) f_rep(o) = f_values(orbit[o][0]);

    const std::array<cplx, 4> omega{cplx(1, 0), cplx(0, 1), cplx(-1, 0), cplx(0, -1)};
    std::vector<double> values;
    std::vector<Eigen::VectorXcd> vectors;
    values.reserve(n);
    for (int sector = 0; sector < 4; ++sector) {
        Eigen::MatrixXcd ks(nr, nr);
        for (Eigen::Index b = 0; b < nr; ++b) {
            for (Eigen::Index a = 0; a < nr; ++a) {
                cplx acc{0.0, 0.0};
                for (int j = 0; j < 4; ++j) acc += omega[(sector * j) % 4] * k(orbit[a][0], orbit[b][j]);
                ks(a, b) = w * acc;
            }
        }
        Eigen::MatrixXcd right = f_rep.asDiagonal() * ks;
        Eigen::MatrixXcd ws(nr, nr);
        ws.noalias() = ks * right;
        const Eigenpairs block = eigendecompose(ws);
        for (Eigen::Index c = 0; c < nr; ++c) {
            Eigen::VectorXcd full = Eigen::VectorXcd::Zero(n);
            for (Eigen::Index o = 0; o < nr; ++o)
                for (int m = 0; m < 4; ++m) full(orbit[o][m]) = 0.5 * omega[(sector * m) % 4] * block.vectors(o, c);
            values.push_back(block.values(c));
            vectors.push_back(std::move(full));
        }
    }
    std::vector<std::size_t> order(values.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return values[a] > values[b]; });
    Eigenpairs out;
    out.values.resize(n);
    out.vectors.resize(n, n);
    for (Eigen::Index c = 0; c < n; ++c) {
        out.values(c) = values[order[c]];
        out.vectors.col(c) = vectors[order[c]];
    }
    return out;
}

/// Eigenpairs of W_f restricted to Ran P = span(U): U (U* F U) U*. Exact for the nonzero
/// part of the spectrum.
inline Eigenpairs eigendecompose_wf_on_range(const Eigen::MatrixXcd& basis, const Eigen::VectorXd& f_values) {
    if (basis.cols() == 0) return {};
    Eigen::MatrixXcd compressed = basis.adjoint() * (f_values.asDiagonal() * basis);
    const Eigenpairs small = eigendecompose(compressed);
    Eigenpairs out;
    out.values = small.values;
    out.vectors = basis * small.vectors;
    return out;
}

struct UgwbLevel {
    double lambda = 0.0;
    double radius = 0.0;
    bool radius_clamped = false;
    /// Columns psi_{i,j} as grid samples, normalized so sum |psi|^2 w = 1.
    Eigen::MatrixXcd vectors;

    std::size_t multiplicity() const { return static_cast<std::size_t>(vectors.cols()); }
};

enum class UgwbRoute { range_basis, dense, dense_c4 };

inline const char* to_string(UgwbRoute r) {
    switch (r) {
        case UgwbRoute::range_basis: return "range_basis";
        case UgwbRoute::dense: return "dense";
        case UgwbRoute::dense_c4: return "dense_c4";
    }
    return "?";
}

/// Eigen-apparatus of W_f = P e^{-q<X>} P: levels with multiplicities, radii and the
/// common bound M on their radial localization integrals.
struct Ugwb {
    std::vector<UgwbLevel> levels;
    double m_bound = 1.0;
    double hs_norm_sq = 0.0;
    bool hs_overflow = false;
    double q = 1.0;
    std::string f_kind = "exp(-q<x>)";
    GridSpec grid;
    double floor = 0.0;
    UgwbRoute route = UgwbRoute::dense;
    std::optional<double> fitted_beta;
    bool decay_margin_ok = true;  ///< fitted beta >= 1.5 q, or no decay metadata

    std::vector<double> radii() const {
        std::vector<double> r;
        for (const auto& l : levels) r.push_back(l.radius);
        return r;
    }
    std::size_t max_multiplicity() const {
        std::size_t m = 0;
        for (const auto& l : levels) m = std::max(m, l.multiplicity());
        return m;
    }
    std::size_t total_vectors() const {
        std::size_t m = 0;
        for (const auto& l : levels) m += l.multiplicity();
        return m;
    }
};

struct UgwbOptions {
    double rel_tol = 1e-6;
    std::optional<double> floor;  ///< absolute; defaults to floor_rel * lambda_max
    double floor_rel = 1e-12;
    bool use_range_basis = true;
    bool use_symmetry = true;
};

/// f = e^{-q<x>}, W_f = P f(X) P, eigendecomposition, grouping, radii and M.
///
/// The eigenproblem is solved on Ran P when the projection carries a range basis,
/// otherwise densely, split into rotation sectors when the kernel is C4 invariant.
inline Ugwb build_ugwb(const KernelProjection& p, double q, const UgwbOptions& opts = {}) {
    if (!(q > 0.0)) throw std::invalid_argument("build_ugwb: q must be positive");
    const auto& grid = p.grid();
    const Eigen::VectorXd f = radial_decay_weight(grid, q);

    Ugwb u;
    u.q = q;
    u.grid = grid;
    if (const auto& d = p.decay()) {
        u.fitted_beta = d->beta;
        u.decay_margin_ok = d->beta >= 1.5 * q;
    }

    Eigenpairs pairs;
    if (opts.use_range_basis && p.range_basis()) {
        u.route = UgwbRoute::range_basis;
        pairs = eigendecompose_wf_on_range(*p.range_basis(), f);
    } else {
        std::optional<C4Structure> c4;
        if (opts.use_symmetry) {
            c4 = c4_structure(grid);
            if (c4 && !is_c4_invariant(p, *c4)) c4.reset();
        }
        if (c4) {
            u.route = UgwbRoute::dense_c4;
            pairs = eigendecompose_wf_c4(p, f, *c4);
        } else {
            u.route = UgwbRoute::dense;
            pairs = eigendecompose(assemble_wf(p, f));
        }
    }

    const double lambda_max = pairs.values.size() ? pairs.values(0) : 0.0;
    u.floor = opts.floor.value_or(opts.floor_rel * lambda_max);
    if (lambda_max > 0.0) {
        const double inv_sqrt_w = 1.0 / std::sqrt(grid.weight());
        for (const auto& g : group_degeneracies(pairs.values, opts.rel_tol, u.floor)) {
            UgwbLevel level;
            level.lambda = g.lambda;
            if (g.lambda < 1.0) {
                const auto r = radius_from_lambda(g.lambda, q);
                level.radius = r.radius;
                level.radius_clamped = r.clamped;
            } else {
                level.radius_clamped = true;
            }
            level.vectors.resize(pairs.vectors.rows(), static_cast<Eigen::Index>(g.columns.size()));
            for (std::size_t c = 0; c < g.columns.size(); ++c)
                level.vectors.col(static_cast<Eigen::Index>(c)) = pairs.vectors.col(g.columns[c]) * inv_sqrt_w;
            u.levels.push_back(std::move(level));
        }
    }

    const auto hs = hs_bound(p, f, LocalizationFunction::exponential(q));
    u.hs_norm_sq = hs.hs_norm_sq;
    u.m_bound = hs.m_bound;
    u.hs_overflow = hs.overflow;
    return u;
}

struct UgwbReport {
    bool decreasing = true;
    bool positive = true;
    double orthonormality_residual = 0.0;  ///< within levels, grid inner product
    double max_localization_integral = 0.0;
    bool bounded_by_m = true;              ///< every localization integral <= M
    double max_g_localization_ratio = 0.0; ///< max ||G psi|| / (lambda^{-1} ||G P f||_HS)
    double max_normalization_defect = 0.0; ///< max |int e^{q(<r>-<x>)} |psi|^2 - 1|
    std::vector<double> localization_integrals;  ///< one per vector, level order

    bool ok(double ortho_tol = 1e-8) const {
        return decreasing && positive && orthonormality_residual <= ortho_tol && bounded_by_m &&
               max_g_localization_ratio <= 1.0 + 1e-9;
    }
};

/// Checks every structural invariant of a UGWB on its own grid.
inline UgwbReport check_ugwb(const Ugwb& u) {
    UgwbReport r;
    const auto& grid = u.grid;
    const double w = grid.weight();
    const double hs = std::sqrt(u.hs_norm_sq);
    Eigen::VectorXd gvals(static_cast<Eigen::Index>(grid.total_points()));
    for (std::size_t i = 0; i < grid.total_points(); ++i)
        gvals(static_cast<Eigen::Index>(i)) = std::exp(u.q * grid.jbracket_at(i));
    for (std::size_t l = 0; l < u.levels.size(); ++l) {
        const auto& level = u.levels[l];
        if (!(level.lambda > 0.0)) r.positive = false;
        if (l > 0 && !(level.lambda < u.levels[l - 1].lambda)) r.decreasing = false;
        const Eigen::MatrixXcd gram = w * (level.vectors.adjoint() * level.vectors);
        const double resid = (gram - Eigen::MatrixXcd::Identity(gram.rows(), gram.cols())).cwiseAbs().maxCoeff();
        r.orthonormality_residual = std::max(r.orthonormality_residual, resid);
        for (Eigen::Index c = 0; c < level.vectors.cols(); ++c) {
            const auto psi = level.vectors.col(c);
            const double li = localization_integral(psi, level.radius, u.q, grid);
            r.localization_integrals.push_back(li);
            r.max_localization_integral = std::max(r.max_localization_integral, li);
            if (!(li <= u.m_bound)) r.bounded_by_m = false;
            const double gnorm = std::sqrt(w * (gvals.array() * psi.array().abs2().sqrt()).abs2().sum());
            if (hs > 0.0) r.max_g_localization_ratio = std::max(r.max_g_localization_ratio, gnorm * level.lambda / hs);
            r.max_normalization_defect =
                std::max(r.max_normalization_defect, std::fabs(normalization_identity(psi, level.radius, u.q, grid) - 1.0));
        }
    }
    return r;
}

}  // namespace ugwb
