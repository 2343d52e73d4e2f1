#pragma once

// Magnetic lattice test projections: the Hofstadter Hamiltonian, its gapped spectral
// projections, the empirical exponential decay of their kernels, and a local Chern
// marker.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdlib>
#include <limits>
#include <map>
#include <numbers>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "ugwb/errors.hpp"
#include "ugwb/grid.hpp"
#include "ugwb/kernel_projection.hpp"
#include "ugwb/operator_core.hpp"

namespace ugwb {

/// Flux per plaquette p/q in units of the flux quantum, kept in lowest terms.
struct Flux {
    long p = 0;
    long q = 1;

    Flux() = default;
    Flux(long num, long den) {
        if (den <= 0) throw std::invalid_argument("Flux: denominator must be positive");
        if (num < 0 || num >= den) {
            if (!(num == 0 && den == 1)) throw std::invalid_argument("Flux: need 0 <= p/q < 1");
        }
        const long g = std::gcd(num, den);
        p = g ? num / g : 0;
        q = g ? den / g : 1;
    }

    static Flux parse(const std::string& text) {
        const auto slash = text.find('/');
        try {
            if (slash == std::string::npos) {
                const double v = std::stod(text);
                if (v == 0.0) return Flux(0, 1);
                throw std::invalid_argument("non-rational");
            }
            std::size_t used = 0;
            const long num = std::stol(text.substr(0, slash), &used);
            if (used != slash) throw std::invalid_argument("numerator");
            const std::string den_text = text.substr(slash + 1);
            const long den = std::stol(den_text, &used);
            if (used != den_text.size()) throw std::invalid_argument("denominator");
            return Flux(num, den);
        } catch (const std::invalid_argument&) {
            throw std::invalid_argument("Flux: cannot parse '" + text + "' as p/q");
        } catch (const std::out_of_range&) {
            throw std::invalid_argument("Flux: cannot parse '" + text + "' as p/q");
        }
    }

    double value() const { return static_cast<double>(p) / static_cast<double>(q); }
    std::string str() const { return std::to_string(p) + "/" + std::to_string(q); }
};

enum class Boundary { open, periodic };

inline const char* to_string(Boundary b) { return b == Boundary::open ? "open" : "periodic"; }

struct LatticeModel {
    int size = 0;  ///< N, for N x N sites
    Flux flux;
    Boundary boundary = Boundary::open;

    std::size_t sites() const { return static_cast<std::size_t>(size) * static_cast<std::size_t>(size); }
    GridSpec grid() const { return GridSpec::lattice(size); }
    std::size_t index(int x, int y) const { return static_cast<std::size_t>(x + size * y); }
};

/// Nearest-neighbour hopping -1 on an N x N square lattice in the Landau gauge: vertical
/// bonds (x,y) -> (x,y+1) carry the Peierls phase e^{2 pi i (p/q) x}, so every plaquette
/// encloses flux p/q. Site (x, y) has index x + N y.
inline Eigen::MatrixXcd hofstadter_hamiltonian(const LatticeModel& m) {
    const int n = m.size;
    if (n < 3 * m.flux.q) throw std::invalid_argument("hofstadter_hamiltonian: need N >= 3q");
    if (m.boundary == Boundary::periodic && n % m.flux.q != 0)
        throw std::invalid_argument("hofstadter_hamiltonian: periodic boundary needs N divisible by q");
    const auto dim = static_cast<Eigen::Index>(m.sites());
    Eigen::MatrixXcd h = Eigen::MatrixXcd::Zero(dim, dim);
    const double alpha = m.flux.value();
    const bool wrap = m.boundary == Boundary::periodic;
    auto hop = [&](std::size_t to, std::size_t from, cplx amp) {
        h(static_cast<Eigen::Index>(to), static_cast<Eigen::Index>(from)) += amp;
        h(static_cast<Eigen::Index>(from), static_cast<Eigen::Index>(to)) += std::conj(amp);
    };
    for (int y = 0; y < n; ++y) {
        for (int x = 0; x < n; ++x) {
            if (x + 1 < n || wrap) hop(m.index((x + 1) % n, y), m.index(x, y), cplx(-1.0, 0.0));
            if (y + 1 < n || wrap)
                hop(m.index(x, (y + 1) % n), m.index(x, y), -std::polar(1.0, 2.0 * std::numbers::pi * alpha * x));
        }
    }
    return h;
}

struct SpectralWindow {
    double lo = 0.0;
    double hi = 0.0;
};

/// Spectral projection sum_{lo < E < hi} v v* for a lattice (or grid) Hamiltonian.
/// Throws WindowTouchesSpectrum if an eigenvalue lies within `margin` of either edge.
inline KernelProjection spectral_projection(const Eigen::MatrixXcd& h, const GridSpec& grid, SpectralWindow window,
                                            double margin = 1e-8) {
    if (h.rows() != static_cast<Eigen::Index>(grid.total_points()))
        throw DimensionMismatch("spectral_projection: Hamiltonian size differs from the grid");
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(h);
    if (es.info() != Eigen::Success) throw NonConvergence("spectral_projection: eigensolver failed");
    std::vector<Eigen::Index> inside;
    for (Eigen::Index j = 0; j < es.eigenvalues().size(); ++j) {
        const double e = es.eigenvalues()(j);
        if (std::fabs(e - window.lo) < margin || std::fabs(e - window.hi) < margin) {
            throw WindowTouchesSpectrum("spectral_projection: eigenvalue " + std::to_string(e) +
                                        " is within the margin of the window edge");
        }
        if (e > window.lo && e < window.hi) inside.push_back(j);
    }
    Eigen::MatrixXcd basis(h.rows(), static_cast<Eigen::Index>(inside.size()));
    for (std::size_t c = 0; c < inside.size(); ++c) basis.col(static_cast<Eigen::Index>(c)) = es.eigenvectors().col(inside[c]);
    return KernelProjection::from_range_basis(std::move(basis), grid);
}

/// Window (E_min - 1, midpoint of the widest spacing) around the lowest band: the cut is
/// searched among state counts within a factor 1/2 .. 3/2 of N^2/q (N^2/2 at zero flux).
inline SpectralWindow auto_lowest_window(const Eigen::VectorXd& sorted_eigenvalues, const Flux& flux) {
    const auto n = sorted_eigenvalues.size();
    if (n < 2) throw std::invalid_argument("auto_lowest_window: need at least two eigenvalues");
    const double expected = flux.p == 0 ? 0.5 * n : static_cast<double>(n) / flux.q;
    const auto lo_c = std::max<Eigen::Index>(1, static_cast<Eigen::Index>(std::floor(0.5 * expected)));
    const auto hi_c = std::min<Eigen::Index>(n - 1, static_cast<Eigen::Index>(std::ceil(1.5 * expected)));
    Eigen::Index best = lo_c;
    double best_gap = -1.0;
    for (Eigen::Index c = lo_c; c <= hi_c; ++c) {
        const double g = sorted_eigenvalues(c) - sorted_eigenvalues(c - 1);
        if (g > best_gap) {
            best_gap = g;
            best = c;
        }
    }
    return {sorted_eigenvalues(0) - 1.0, 0.5 * (sorted_eigenvalues(best) + sorted_eigenvalues(best - 1))};
}

/// Distance between the nearest eigenvalues below and above `energy`.
inline double gap_at(const Eigen::VectorXd& sorted_eigenvalues, double energy) {
    double below = -std::numeric_limits<double>::infinity();
    double above = std::numeric_limits<double>::infinity();
    for (Eigen::Index i = 0; i < sorted_eigenvalues.size(); ++i) {
        const double e = sorted_eigenvalues(i);
        if (e <= energy) below = std::max(below, e);
        else above = std::min(above, e);
    }
    return above - below;
}

enum class DistanceMode { euclidean, periodic };

struct DecayFitOptions {
    DistanceMode metric = DistanceMode::euclidean;
    /// Open boundary: only pairs with both points at least this far from the box edge.
    /// Negative selects N/6 lattice spacings (in grid units).
    double bulk_margin = -1.0;
    double d_min = 2.0;
    double d_max = -1.0;  ///< negative selects a quarter of the box side
    double bin_width = -1.0;  ///< negative selects one grid spacing
    double r2_threshold = 0.95;
};

struct DecayFit {
    double c = 0.0;           ///< fitted prefactor e^{intercept}
    double c_envelope = 0.0;  ///< smallest C making C e^{-beta d} an envelope over the fit range
    double beta = 0.0;
    double r2 = 0.0;
    bool infinite = false;    ///< no off-diagonal weight at all; beta = +inf
    bool localized = false;   ///< beta > 0 and r2 above the threshold
    std::vector<std::pair<double, double>> bins;  ///< (distance, max log|P|)
};

/// Least-squares line through max_{|x-y| = d} log|P(x,y)| against d over [d_min, d_max].
inline DecayFit kernel_decay_fit(const KernelProjection& p, const DecayFitOptions& opts = {}) {
    const auto& grid = p.grid();
    const auto& k = p.kernel();
    const double side = 2.0 * grid.half_width();
    const double h = grid.spacing();
    const double d_max = opts.d_max > 0.0 ? opts.d_max : side / 4.0;
    const double bw = opts.bin_width > 0.0 ? opts.bin_width : h;
    const double margin = opts.metric == DistanceMode::periodic ? 0.0
                          : (opts.bulk_margin >= 0.0 ? opts.bulk_margin : side / 6.0);

    auto in_bulk = [&](std::size_t i) {
        const auto x = grid.point(i);
        for (int a = 0; a < grid.dim(); ++a)
            if (grid.half_width() - std::fabs(x[a]) < margin - 1e-12 * h) return false;
        return true;
    };
    auto dist = [&](std::size_t i, std::size_t j) {
        if (opts.metric == DistanceMode::euclidean) return grid.distance(i, j);
        const auto x = grid.point(i);
        const auto y = grid.point(j);
        double acc = 0.0;
        for (int a = 0; a < grid.dim(); ++a) {
            double d = std::fabs(x[a] - y[a]);
            d = std::min(d, side - d);
            acc += d * d;
        }
        return std::sqrt(acc);
    };

    DecayFit out;
    std::vector<std::size_t> bulk;
    for (std::size_t i = 0; i < p.size(); ++i)
        if (in_bulk(i)) bulk.push_back(i);

    bool any_offdiag = false;
    std::map<long, double> best;  // bin -> max |P|
    for (std::size_t a = 0; a < bulk.size(); ++a) {
        for (std::size_t b = 0; b < bulk.size(); ++b) {
            const std::size_t i = bulk[a], j = bulk[b];
            if (i == j) continue;
            const double v = std::abs(k(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)));
            if (v > 0.0) any_offdiag = true;
            const double d = dist(i, j);
            if (d < opts.d_min - 1e-9 || d > d_max + 1e-9) continue;
            const long bin = std::lround(d / bw);
            auto it = best.find(bin);
            if (it == best.end()) best.emplace(bin, v);
            else it->second = std::max(it->second, v);
        }
    }
    if (!any_offdiag) {
        out.infinite = true;
        out.beta = std::numeric_limits<double>::infinity();
        out.localized = true;
        return out;
    }
    std::vector<double> xs, ys;
    for (const auto& [bin, v] : best) {
        if (!(v > 1e-300)) continue;
        xs.push_back(bin * bw);
        ys.push_back(std::log(v));
        out.bins.emplace_back(xs.back(), ys.back());
    }
    if (xs.size() < 4) throw DegenerateFit("kernel_decay_fit: fewer than 4 distance bins in the fit range");
    const double mx = std::accumulate(xs.begin(), xs.end(), 0.0) / xs.size();
    const double my = std::accumulate(ys.begin(), ys.end(), 0.0) / ys.size();
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        sxy += (xs[i] - mx) * (ys[i] - my);
        sxx += (xs[i] - mx) * (xs[i] - mx);
        syy += (ys[i] - my) * (ys[i] - my);
    }
    const double slope = sxy / sxx;
    out.beta = -slope;
    out.c = std::exp(my - slope * mx);
    out.r2 = syy > 0.0 ? (sxy * sxy) / (sxx * syy) : 1.0;
    double env = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) env = std::max(env, ys[i] + out.beta * xs[i]);
    out.c_envelope = std::exp(env);
    out.localized = out.beta > 0.0 && out.r2 > opts.r2_threshold;
    return out;
}

/// Site-resolved marker c(x) = -4 pi Im <x| P X P Y P |x> on an open lattice, positions
/// measured from the lattice center.
inline std::vector<double> chern_marker(const KernelProjection& p, const LatticeModel& model) {
    if (model.boundary != Boundary::open) throw std::invalid_argument("chern_marker: needs an open boundary");
    if (model.size < 18) throw std::invalid_argument("chern_marker: needs N >= 18");
    if (p.size() != model.sites()) throw DimensionMismatch("chern_marker: projection size differs from the lattice");
    const auto& grid = p.grid();
    const auto n = static_cast<Eigen::Index>(p.size());
    const Eigen::MatrixXcd pm = p.orthonormal_matrix();
    Eigen::VectorXd xs(n), ys(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto pt = grid.point(static_cast<std::size_t>(i));
        xs(i) = pt[0];
        ys(i) = pt[1];
    }
    Eigen::MatrixXcd xp = xs.asDiagonal() * pm;
    Eigen::MatrixXcd pxp(n, n);
    pxp.noalias() = pm * xp;
    // diag(P X P Y P)_i = sum_j (PXP)_ij y_j P_ji
    std::vector<double> field(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i) {
        cplx acc{0.0, 0.0};
        for (Eigen::Index j = 0; j < n; ++j) acc += pxp(i, j) * ys(j) * pm(j, i);
        field[static_cast<std::size_t>(i)] = -4.0 * std::numbers::pi * acc.imag();
    }
    return field;
}

/// Mean of a site field over the central N/3 x N/3 block.
inline double bulk_average(const std::vector<double>& field, int n) {
    const int lo = n / 3;
    const int hi = lo + n / 3;
    double acc = 0.0;
    int count = 0;
    for (int y = lo; y < hi; ++y)
        for (int x = lo; x < hi; ++x) {
            acc += field[static_cast<std::size_t>(x + n * y)];
            ++count;
        }
    return acc / count;
}

}  // namespace ugwb
