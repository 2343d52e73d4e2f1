#pragma once

#include <cmath>
#include <string>

#include "ugwb/errors.hpp"

namespace ugwb {

struct Bracket {
    double lower = 0.0;
    double upper = 0.0;

    bool contains(double v) const { return lower <= v && v <= upper; }
    bool strictly_contains(double v) const { return lower < v && v < upper; }
};

struct RadiusResult {
    double radius = 0.0;
    /// lambda exceeded e^{-q}, so the radicand was negative and the radius was set to 0.
    bool clamped = false;
};

/// Localization radius r = sqrt((ln(lambda)/q)^2 - 1) of an eigenvalue of P e^{-q<X>} P.
/// Equivalently <r> = -ln(lambda)/q.
inline RadiusResult radius_from_lambda(double lambda, double q) {
    if (!(lambda > 0.0 && lambda < 1.0)) {
        throw InvalidLambda("radius_from_lambda: lambda = " + std::to_string(lambda) + " is outside (0, 1)");
    }
    if (!(q > 0.0)) throw std::invalid_argument("radius_from_lambda: q must be positive");
    const double t = std::log(lambda) / q;
    const double radicand = t * t - 1.0;
    if (radicand < 0.0) return {0.0, true};
    return {std::sqrt(radicand), false};
}

}  // namespace ugwb
