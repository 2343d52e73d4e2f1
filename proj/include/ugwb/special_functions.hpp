#pragma once

// Generalized Laguerre polynomials, the Japanese bracket and the 1D quadrature
// engines used by the Landau analytics.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <queue>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "ugwb/errors.hpp"

namespace ugwb {

namespace detail {

/// (L_n, L_{n-1}) by the upward three-term recurrence. L_{-1} is reported as 0.
inline std::pair<double, double> laguerre_pair(int n, double alpha, double xi) {
    double prev = 0.0;
    double cur = 1.0;
    for (int j = 0; j < n; ++j) {
        // (j+1) L_{j+1} = (2j+1+alpha-xi) L_j - (j+alpha) L_{j-1}
        const double next = ((2.0 * j + 1.0 + alpha - xi) * cur - (j + alpha) * prev) / (j + 1.0);
        prev = cur;
        cur = next;
    }
    return {cur, prev};
}

}  // namespace detail

/// Generalized Laguerre polynomial L_n^{(alpha)}(xi).
inline double laguerre(int n, double alpha, double xi) {
    if (n < 0) throw std::invalid_argument("laguerre: n must be nonnegative");
    return detail::laguerre_pair(n, alpha, xi).first;
}

/// <r> = sqrt(1 + r^2) for a scalar norm r.
inline double jbracket(double r) {
    const double a = std::fabs(r);
    if (a <= 1.0) return std::sqrt(1.0 + a * a);
    const double inv = 1.0 / a;
    return a * std::sqrt(1.0 + inv * inv);
}

/// <x> = sqrt(1 + |x|^2), evaluated with scaling so large coordinates do not overflow.
inline double jbracket(std::span<const double> x) {
    double scale = 1.0;
    for (double v : x) scale = std::max(scale, std::fabs(v));
    double acc = 1.0 / (scale * scale);
    for (double v : x) {
        const double s = v / scale;
        acc += s * s;
    }
    return scale * std::sqrt(acc);
}

template <std::size_t D>
double jbracket(const std::array<double, D>& x) {
    return jbracket(std::span<const double>(x.data(), D));
}

enum class QuadratureKind { gauss_laguerre, adaptive_composite };

/// Nodes strictly increasing, weights positive.
struct QuadratureRule {
    std::vector<double> nodes;
    std::vector<double> weights;
    QuadratureKind kind = QuadratureKind::gauss_laguerre;

    template <class F>
    double apply(F&& f) const {
        double acc = 0.0;
        for (std::size_t i = 0; i < nodes.size(); ++i) acc += weights[i] * f(nodes[i]);
        return acc;
    }
};

/// m-point Gauss-Laguerre rule for the weight xi^alpha e^{-xi} on [0, inf).
/// Golub-Welsch supplies starting nodes, Newton on L_m polishes them, and the
/// weights come from the derivative formula so tiny weights keep relative accuracy.
inline QuadratureRule gauss_laguerre(int m, double alpha = 0.0) {
    if (m < 1) throw std::invalid_argument("gauss_laguerre: need at least one node");
    if (alpha <= -1.0) throw std::invalid_argument("gauss_laguerre: alpha must exceed -1");

    Eigen::VectorXd diag(m);
    Eigen::VectorXd sub(std::max(m - 1, 1));
    for (int i = 0; i < m; ++i) diag(i) = 2.0 * i + 1.0 + alpha;
    for (int i = 1; i < m; ++i) sub(i - 1) = std::sqrt(i * (i + alpha));
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es;
    es.computeFromTridiagonal(diag, sub.head(m - 1), Eigen::EigenvaluesOnly);
    if (es.info() != Eigen::Success) throw NonConvergence("gauss_laguerre: tridiagonal eigensolver failed");

    QuadratureRule rule;
    rule.kind = QuadratureKind::gauss_laguerre;
    rule.nodes.resize(m);
    rule.weights.resize(m);
    const double log_norm = std::lgamma(m + alpha + 1.0) - std::lgamma(m + 1.0);
    for (int i = 0; i < m; ++i) {
        double x = es.eigenvalues()(i);
        double deriv = 0.0;
        for (int it = 0; it < 8; ++it) {
            const auto [lm, lm1] = detail::laguerre_pair(m, alpha, x);
            deriv = (m * lm - (m + alpha) * lm1) / x;
            const double step = lm / deriv;
            x -= step;
            if (std::fabs(step) <= 1e-16 * x) break;
        }
        const auto [lm, lm1] = detail::laguerre_pair(m, alpha, x);
        deriv = (m * lm - (m + alpha) * lm1) / x;
        rule.nodes[i] = x;
        // w_i = Gamma(m+alpha+1) / (m! x_i L_m'(x_i)^2)
        rule.weights[i] = std::exp(log_norm - std::log(x) - 2.0 * std::log(std::fabs(deriv)));
    }
    return rule;
}

/// Upper incomplete gamma Gamma(p+1, x) for integer p >= 0, i.e. the integral of
/// t^p e^{-t} over [x, inf).
inline double gamma_upper(int p, double x) {
    if (p < 0) throw std::invalid_argument("gamma_upper: p must be nonnegative");
    if (x <= 0.0) return std::exp(std::lgamma(p + 1.0));
    const double lx = std::log(x);
    const double base = std::lgamma(p + 1.0) - x;
    double acc = 0.0;
    for (int i = 0; i <= p; ++i) acc += std::exp(base + i * lx - std::lgamma(i + 1.0));
    return acc;
}

struct AdaptiveOptions {
    std::size_t max_evaluations = 4'000'000;
    int initial_panels = 64;
    double max_cutoff = 1e7;
    bool keep_rule = false;
};

struct IntegralResult {
    double value = 0.0;
    double err_estimate = 0.0;
    double cutoff = 0.0;      ///< integration stopped at [0, cutoff]
    double tail_bound = 0.0;  ///< declared bound on the discarded mass
    std::size_t evaluations = 0;
    QuadratureRule rule;      ///< composite rule actually used, if requested
};

/// Integral of f over [0, inf).
///
/// `tail_bound(X)` is the caller-declared bound on the mass of |f| beyond X; the
/// cutoff is the first X (growing geometrically) where it drops below tol/10.
/// [0, cutoff] is covered by Simpson panels refined by bisection of the panel with
/// the largest Richardson error estimate |S2 - S1|/15 until the summed estimate
/// plus the tail bound is at most tol. Each accepted panel contributes the
/// extrapolated (Boole) value.
template <class F, class TailBound>
IntegralResult integrate_adaptive(F&& f, double tol, TailBound&& tail_bound, const AdaptiveOptions& opts = {}) {
    if (!(tol > 0.0)) throw std::invalid_argument("integrate_adaptive: tol must be positive");

    IntegralResult out;
    double cutoff = 1.0;
    while (tail_bound(cutoff) > tol / 10.0) {
        cutoff *= 1.25;
        if (cutoff > opts.max_cutoff) throw NonConvergence("integrate_adaptive: tail envelope never drops below tol/10");
    }
    out.cutoff = cutoff;
    out.tail_bound = tail_bound(cutoff);

    struct Panel {
        double a, b;
        std::array<double, 5> fv;
        double err, value;
    };
    auto finish = [](Panel& p) {
        const double w = p.b - p.a;
        const double s1 = w / 6.0 * (p.fv[0] + 4.0 * p.fv[2] + p.fv[4]);
        const double s2 = w / 12.0 * (p.fv[0] + 4.0 * p.fv[1] + 2.0 * p.fv[2] + 4.0 * p.fv[3] + p.fv[4]);
        p.err = std::fabs(s2 - s1) / 15.0;
        p.value = s2 + (s2 - s1) / 15.0;
    };
    auto cmp = [](const Panel& x, const Panel& y) { return x.err < y.err; };
    std::priority_queue<Panel, std::vector<Panel>, decltype(cmp)> heap(cmp);

    std::size_t evals = 0;
    const int n0 = std::max(1, opts.initial_panels);
    const double width0 = cutoff / n0;
    double prev_right = f(0.0);
    ++evals;
    double total_err = 0.0;
    for (int i = 0; i < n0; ++i) {
        Panel p;
        p.a = i * width0;
        p.b = (i + 1 == n0) ? cutoff : (i + 1) * width0;
        const double h = (p.b - p.a) / 4.0;
        p.fv[0] = prev_right;
        for (int j = 1; j < 5; ++j) p.fv[j] = f(p.a + j * h);
        evals += 4;
        prev_right = p.fv[4];
        finish(p);
        total_err += p.err;
        heap.push(p);
    }

    const double budget = tol - out.tail_bound;
    while (total_err > budget) {
        if (evals + 4 > opts.max_evaluations) {
            throw NonConvergence("integrate_adaptive: evaluation budget exhausted (err " + std::to_string(total_err) +
                                 " > " + std::to_string(budget) + ")");
        }
        Panel p = heap.top();
        heap.pop();
        const double mid = 0.5 * (p.a + p.b);
        if (!(mid > p.a && mid < p.b)) throw NonConvergence("integrate_adaptive: panel width underflow");
        Panel left{p.a, mid, {p.fv[0], 0.0, p.fv[1], 0.0, p.fv[2]}, 0.0, 0.0};
        Panel right{mid, p.b, {p.fv[2], 0.0, p.fv[3], 0.0, p.fv[4]}, 0.0, 0.0};
        const double hq = (mid - p.a) / 4.0;
        left.fv[1] = f(p.a + hq);
        left.fv[3] = f(p.a + 3.0 * hq);
        right.fv[1] = f(mid + hq);
        right.fv[3] = f(mid + 3.0 * hq);
        evals += 4;
        finish(left);
        finish(right);
        total_err += left.err + right.err - p.err;
        heap.push(left);
        heap.push(right);
        // Running sums drift; resynchronize occasionally so the loop cannot stall on roundoff.
        if (evals % 4096 == 0) {
            auto copy = heap;
            total_err = 0.0;
            while (!copy.empty()) {
                total_err += copy.top().err;
                copy.pop();
            }
        }
    }

    std::vector<Panel> panels;
    panels.reserve(heap.size());
    while (!heap.empty()) {
        panels.push_back(heap.top());
        heap.pop();
    }
    std::sort(panels.begin(), panels.end(), [](const Panel& x, const Panel& y) { return x.a < y.a; });
    double value = 0.0;
    double err = 0.0;
    for (const auto& p : panels) {
        value += p.value;
        err += p.err;
    }
    out.value = value;
    out.err_estimate = err + out.tail_bound;
    out.evaluations = evals;

    if (opts.keep_rule) {
        auto& r = out.rule;
        r.kind = QuadratureKind::adaptive_composite;
        for (const auto& p : panels) {
            const double h = (p.b - p.a) / 4.0;
            constexpr std::array<double, 5> boole{7.0, 32.0, 12.0, 32.0, 7.0};
            for (int j = 0; j < 5; ++j) {
                const double w = 2.0 * h / 45.0 * boole[j];
                const double x = p.a + j * h;
                if (j == 0 && !r.nodes.empty()) {
                    r.weights.back() += w;  // shared endpoint with the previous panel
                } else {
                    r.nodes.push_back(j == 4 ? p.b : x);
                    r.weights.push_back(w);
                }
            }
        }
    }
    return out;
}

/// Convenience overload for integrands bounded by C e^{-xi}.
template <class F>
IntegralResult integrate_adaptive_exp(F&& f, double tol, double envelope_scale = 1.0, const AdaptiveOptions& opts = {}) {
    return integrate_adaptive(std::forward<F>(f), tol,
                              [envelope_scale](double x) { return envelope_scale * std::exp(-x); }, opts);
}

}  // namespace ugwb
