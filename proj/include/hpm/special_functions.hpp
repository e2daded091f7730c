#pragma once

#include <cmath>
#include <cstddef>

#include "hpm/errors.hpp"
#include "hpm/matrix.hpp"

namespace hpm {

/// Natural log of the gamma function for positive arguments, Lanczos
/// approximation (g = 7, 9 coefficients), good to roughly 1e-13 here.
inline double log_gamma(double z) {
    if (!(z > 0.0) || !std::isfinite(z))
        throw invalid_argument("log_gamma: argument must be positive and finite");

    static constexpr double g = 7.0;
    static constexpr double coef[9] = {
        0.99999999999980993,
        676.5203681218851,
        -1259.1392167224028,
        771.32342877765313,
        -176.61502916214059,
        12.507343278686905,
        -0.13857109526572012,
        9.9843695780195716e-6,
        1.5056327351493116e-7,
    };
    static constexpr double half_log_two_pi = 0.91893853320467274178;

    if (z < 0.5) {
        // Reflection keeps the series argument comfortably above 0.5.
        const double pi = 3.14159265358979323846;
        return std::log(pi / std::sin(pi * z)) - log_gamma(1.0 - z);
    }

    const double zm1 = z - 1.0;
    double sum = coef[0];
    for (std::size_t i = 1; i < 9; ++i) sum += coef[i] / (zm1 + static_cast<double>(i));
    const double base = zm1 + g + 0.5;
    return half_log_two_pi + (zm1 + 0.5) * std::log(base) - base + std::log(sum);
}

/// ln B(alpha, beta) through log-gamma.
inline double log_beta(double alpha, double beta) {
    if (!(alpha > 0.0) || !(beta > 0.0))
        throw invalid_argument("log_beta: parameters must be positive");
    return log_gamma(alpha) + log_gamma(beta) - log_gamma(alpha + beta);
}

/// Beta distribution density at each x, evaluated in log space so large
/// shape parameters cannot overflow the unnormalized terms.
inline Vector beta_pdf(double alpha, double beta, const Vector& x) {
    if (!(alpha > 0.0) || !(beta > 0.0))
        throw invalid_argument("beta_pdf: shape parameters must be positive");
    const double lb = log_beta(alpha, beta);
    Vector out(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double xi = x[i];
        if (!(xi > 0.0) || !(xi < 1.0))
            throw invalid_argument("beta_pdf: inputs must lie strictly inside (0, 1)");
        out[i] = std::exp((alpha - 1.0) * std::log(xi) + (beta - 1.0) * std::log1p(-xi) - lb);
    }
    return out;
}

}  // namespace hpm
