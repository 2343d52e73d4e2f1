#pragma once

// Trace per unit volume, radius-gap statistics and the consistency check between a
// UGWB's structure (multiplicities, radius gaps) and a nonvanishing density of states.

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "ugwb/errors.hpp"
#include "ugwb/kernel_projection.hpp"
#include "ugwb/operator_core.hpp"

namespace ugwb {

struct TraceDensityPoint {
    double half_width = 0.0;  ///< L
    double trace = 0.0;       ///< Tr(chi_L P)
    double value = 0.0;       ///< Tr(chi_L P) / (2L)^d
};

/// Tr(chi_{[-L,L]^d} P) / (2L)^d for each L. Cells straddling the cube contribute by
/// their overlap fraction, so the box volume is exact for any L.
inline std::vector<TraceDensityPoint> trace_per_unit_volume(const KernelProjection& p,
                                                            const std::vector<double>& box_halves) {
    const auto& grid = p.grid();
    const double h = grid.spacing();
    const double w = grid.weight();
    std::vector<TraceDensityPoint> out;
    for (double l : box_halves) {
        if (!(l > 0.0)) throw std::invalid_argument("trace_per_unit_volume: L must be positive");
        if (l > grid.half_width() * (1.0 + 1e-12))
            throw BoxExceedsGrid("trace_per_unit_volume: L = " + std::to_string(l) + " exceeds the grid half-width " +
                                 std::to_string(grid.half_width()));
        double tr = 0.0;
        for (std::size_t i = 0; i < grid.total_points(); ++i) {
            const auto x = grid.point(i);
            double frac = 1.0;
            for (int a = 0; a < grid.dim() && frac > 0.0; ++a) {
                const double lo = std::max(x[a] - 0.5 * h, -l);
                const double hi = std::min(x[a] + 0.5 * h, l);
                frac *= std::max(0.0, hi - lo) / h;
            }
            if (frac > 0.0) tr += frac * p.kernel()(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i)).real();
        }
        tr *= w;
        out.push_back({l, tr, tr / std::pow(2.0 * l, grid.dim())});
    }
    return out;
}

struct TraceDensityLimit {
    double intercept = 0.0;  ///< a in value(L) = a + c/L over the largest three L
    double slope = 0.0;      ///< c
    double limit = 0.0;      ///< intercept clipped at 0
    double power = 0.0;      ///< log-log slope of value against L over all points
};

inline double fit_slope(const std::vector<double>& xs, const std::vector<double>& ys, double* intercept = nullptr) {
    const double mx = std::accumulate(xs.begin(), xs.end(), 0.0) / xs.size();
    const double my = std::accumulate(ys.begin(), ys.end(), 0.0) / ys.size();
    double sxy = 0.0, sxx = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        sxy += (xs[i] - mx) * (ys[i] - my);
        sxx += (xs[i] - mx) * (xs[i] - mx);
    }
    const double s = sxx > 0.0 ? sxy / sxx : 0.0;
    if (intercept) *intercept = my - s * mx;
    return s;
}

/// Infinite-volume estimate from value(L) = a + c/L fitted over the three largest L.
inline TraceDensityLimit extrapolate_trace_density(std::vector<TraceDensityPoint> seq) {
    if (seq.size() < 2) throw std::invalid_argument("extrapolate_trace_density: need at least two box sizes");
    std::sort(seq.begin(), seq.end(), [](const auto& a, const auto& b) { return a.half_width < b.half_width; });
    TraceDensityLimit out;
    const std::size_t start = seq.size() > 3 ? seq.size() - 3 : 0;
    std::vector<double> xs, ys;
    for (std::size_t i = start; i < seq.size(); ++i) {
        xs.push_back(1.0 / seq[i].half_width);
        ys.push_back(seq[i].value);
    }
    out.slope = fit_slope(xs, ys, &out.intercept);
    out.limit = std::max(0.0, out.intercept);

    std::vector<double> lx, ly;
    for (const auto& pt : seq) {
        if (pt.value > 0.0) {
            lx.push_back(std::log(pt.half_width));
            ly.push_back(std::log(pt.value));
        }
    }
    out.power = lx.size() >= 2 ? fit_slope(lx, ly) : 0.0;
    return out;
}

struct RadiusGapStats {
    double min_gap = 0.0;
    std::vector<double> gaps;
    double trend = 0.0;  ///< log-log slope of gap_k against k = 1, 2, ...
};

/// Consecutive differences of increasing radii, their minimum, and the log-log trend.
inline RadiusGapStats radius_gap_stats(const std::vector<double>& radii) {
    if (radii.size() < 3) throw TooFewRadii("radius_gap_stats: need at least three radii");
    RadiusGapStats out;
    out.min_gap = std::numeric_limits<double>::infinity();
    std::vector<double> lx, ly;
    for (std::size_t i = 1; i < radii.size(); ++i) {
        const double g = radii[i] - radii[i - 1];
        if (g < 0.0) throw std::invalid_argument("radius_gap_stats: radii must be sorted increasingly");
        out.gaps.push_back(g);
        out.min_gap = std::min(out.min_gap, g);
        if (g > 0.0) {
            lx.push_back(std::log(static_cast<double>(i)));
            ly.push_back(std::log(g));
        }
    }
    out.trend = lx.size() >= 2 ? fit_slope(lx, ly) : 0.0;
    return out;
}

enum class Verdict { consistent, inconsistent };

inline const char* to_string(Verdict v) { return v == Verdict::consistent ? "CONSISTENT" : "INCONSISTENT"; }

struct Prop24Diagnostic {
    std::size_t m_star = 0;         ///< largest observed multiplicity
    double min_gap = 0.0;           ///< smallest gap between distinct sorted radii
    double resolution = 0.0;        ///< grid spacing; gaps at or below it count as collapsed
    bool gaps_bounded_away = false; ///< min_gap > resolution
    double limit = 0.0;             ///< extrapolated trace per unit volume
    bool limit_positive = false;    ///< limit > 5% of the largest observed value
    Verdict verdict = Verdict::consistent;
};

/// Finite multiplicities together with radius gaps bounded away from zero force a zero
/// trace per unit volume; the data are INCONSISTENT exactly when all three premises of
/// that implication hold and the density is still positive.
inline Prop24Diagnostic prop24_diagnostic(const std::vector<std::size_t>& multiplicities, std::vector<double> radii,
                                          double resolution, const std::vector<TraceDensityPoint>& tpuv) {
    Prop24Diagnostic d;
    d.resolution = resolution;
    for (auto m : multiplicities) d.m_star = std::max(d.m_star, m);
    std::sort(radii.begin(), radii.end());
    d.min_gap = std::numeric_limits<double>::infinity();
    for (std::size_t i = 1; i < radii.size(); ++i) d.min_gap = std::min(d.min_gap, radii[i] - radii[i - 1]);
    d.gaps_bounded_away = d.min_gap > resolution;
    const auto lim = extrapolate_trace_density(tpuv);
    d.limit = lim.limit;
    double vmax = 0.0;
    for (const auto& pt : tpuv) vmax = std::max(vmax, pt.value);
    d.limit_positive = d.limit > 0.05 * vmax && d.limit > 0.0;
    const bool finite_multiplicity = d.m_star > 0;
    d.verdict = (finite_multiplicity && d.gaps_bounded_away && d.limit_positive) ? Verdict::inconsistent
                                                                                : Verdict::consistent;
    return d;
}

inline Prop24Diagnostic prop24_diagnostic(const Ugwb& u, const std::vector<TraceDensityPoint>& tpuv) {
    std::vector<std::size_t> mult;
    for (const auto& l : u.levels) mult.push_back(l.multiplicity());
    return prop24_diagnostic(mult, u.radii(), u.grid.spacing(), tpuv);
}

}  // namespace ugwb
