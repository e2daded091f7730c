#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <utility>

#include "hpm/errors.hpp"
#include "hpm/gauss_newton.hpp"
#include "hpm/linalg.hpp"
#include "hpm/matrix.hpp"

namespace hpm {

enum class FamilyKind { polynomial, exponential, gaussian };

inline std::string family_tag(FamilyKind kind) {
    switch (kind) {
        case FamilyKind::polynomial: return "polynomial";
        case FamilyKind::exponential: return "exponential";
        case FamilyKind::gaussian: return "gaussian";
    }
    throw invalid_argument("family_tag: unknown family kind");
}

/// A fittable curve family. Polynomial carries its degree; the two
/// nonlinear families are fixed three-parameter forms.
struct RegressorFamily {
    FamilyKind kind = FamilyKind::polynomial;
    std::size_t degree = 0;  // meaningful for polynomial only

    static RegressorFamily polynomial(std::size_t degree) {
        return RegressorFamily{FamilyKind::polynomial, degree};
    }
    static RegressorFamily exponential() { return RegressorFamily{FamilyKind::exponential, 0}; }
    static RegressorFamily gaussian() { return RegressorFamily{FamilyKind::gaussian, 0}; }

    /// Number of fitted coefficients: d+1 for Polynomial(d) (bias included),
    /// 3 for the exponential a·exp(b·x)+c and the Gaussian a·exp(−(x−m)²/(2s²)).
    [[nodiscard]] std::size_t coefficient_count() const {
        return kind == FamilyKind::polynomial ? degree + 1 : 3;
    }

    friend bool operator==(const RegressorFamily& a, const RegressorFamily& b) {
        if (a.kind != b.kind) return false;
        return a.kind != FamilyKind::polynomial || a.degree == b.degree;
    }
};

/// A fitted curve: family plus coefficient vector plus training fit quality.
/// converged is false when a nonlinear fit ran out of iterations; the
/// coefficients are then still the best ones found.
struct Regressor {
    RegressorFamily family;
    Vector coefficients;
    double train_mse = 0.0;
    bool converged = true;
};

/// Vandermonde expansion [1, x, x², …, x^degree] row per sample.
inline Matrix vandermonde(const Vector& x, std::size_t degree) {
    Matrix v(x.size(), degree + 1);
    for (std::size_t i = 0; i < x.size(); ++i) {
        double p = 1.0;
        for (std::size_t j = 0; j <= degree; ++j) {
            v(i, j) = p;
            p *= x[i];
        }
    }
    return v;
}

namespace detail {

inline double eval_one(const RegressorFamily& family, const Vector& c, double x) {
    switch (family.kind) {
        case FamilyKind::polynomial: {
            double acc = 0.0;
            for (std::size_t j = c.size(); j-- > 0;) acc = acc * x + c[j];
            return acc;
        }
        case FamilyKind::exponential:
            return c[0] * std::exp(c[1] * x) + c[2];
        case FamilyKind::gaussian: {
            const double d = x - c[1];
            return c[0] * std::exp(-(d * d) / (2.0 * c[2] * c[2]));
        }
    }
    throw invalid_argument("eval_one: unknown family kind");
}

}  // namespace detail

/// Elementwise evaluation of a fitted regressor.
inline Vector predict(const Regressor& r, const Vector& x) {
    if (r.coefficients.size() != r.family.coefficient_count())
        throw invalid_argument("predict: coefficient count does not match family");
    require_finite(x, "predict");
    Vector y(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) y[i] = detail::eval_one(r.family, r.coefficients, x[i]);
    return y;
}

/// Fit a family to paired samples.
///
/// Polynomials go through lstsq on the Vandermonde expansion. The two
/// nonlinear families run damped Gauss-Newton from fixed data-driven
/// starts. The Gaussian starts from a = max(y), m = the grid point under
/// the maximum, s = a quarter of the input range. The exponential is
/// restarted from a trend-matched guess (a = y_last − y_first, b = ±1,
/// c = min(y)) plus conditionally optimal (a, c) at rates b = ±1, ±4,
/// ±16, keeping the lowest final residual; the trend start alone stalls
/// in the b → 0 line limit on sharply peaked data. A fit that fails to
/// converge keeps its best parameters and reports converged=false.
inline Regressor fit(const RegressorFamily& family, const Vector& x, const Vector& y) {
    if (x.size() != y.size()) throw invalid_argument("fit: x and y lengths differ");
    if (x.size() < family.coefficient_count())
        throw invalid_argument("fit: fewer samples than coefficients");
    require_finite(x, "fit");
    require_finite(y, "fit");
    {
        Vector sorted = x;
        std::sort(sorted.begin(), sorted.end());
        if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
            throw invalid_argument("fit: x values must be distinct");
    }

    Regressor r;
    r.family = family;

    if (family.kind == FamilyKind::polynomial) {
        r.coefficients = lstsq(vandermonde(x, family.degree), y);
    } else {
        std::vector<Vector> starts;
        if (family.kind == FamilyKind::exponential) {
            starts.push_back({y.back() - y.front(),
                              y.back() >= y.front() ? 1.0 : -1.0,
                              *std::min_element(y.begin(), y.end())});
            for (const double rate : {1.0, 4.0, 16.0})
                for (const double sign : {-1.0, 1.0}) {
                    const double b0 = sign * rate;
                    Matrix basis(x.size(), 2);
                    for (std::size_t i = 0; i < x.size(); ++i) {
                        basis(i, 0) = std::exp(b0 * x[i]);
                        basis(i, 1) = 1.0;
                    }
                    if (!all_finite(basis)) continue;
                    const Vector ac = lstsq(basis, y);
                    starts.push_back({ac[0], b0, ac[1]});
                }
        } else {
            const std::size_t imax = static_cast<std::size_t>(
                std::max_element(y.begin(), y.end()) - y.begin());
            const auto [xmin, xmax] = std::minmax_element(x.begin(), x.end());
            starts.push_back({y[imax], x[imax], 0.25 * (*xmax - *xmin)});
        }

        auto residual = [&](const Vector& p) {
            Vector res(x.size());
            for (std::size_t i = 0; i < x.size(); ++i)
                res[i] = detail::eval_one(family, p, x[i]) - y[i];
            return res;
        };
        auto jacobian = [&](const Vector& p) {
            Matrix j(x.size(), 3);
            for (std::size_t i = 0; i < x.size(); ++i) {
                const double xi = x[i];
                if (family.kind == FamilyKind::exponential) {
                    const double e = std::exp(p[1] * xi);
                    j(i, 0) = e;
                    j(i, 1) = p[0] * xi * e;
                    j(i, 2) = 1.0;
                } else {
                    const double d = xi - p[1];
                    const double s2 = p[2] * p[2];
                    const double e = std::exp(-(d * d) / (2.0 * s2));
                    j(i, 0) = e;
                    j(i, 1) = p[0] * e * d / s2;
                    j(i, 2) = p[0] * e * d * d / (s2 * p[2]);
                }
            }
            return j;
        };

        bool found = false;
        GaussNewtonResult best;
        for (const Vector& start : starts) {
            if (!all_finite(residual(start))) continue;
            GaussNewtonResult gn = gauss_newton(residual, jacobian, start, 500, 1e-10);
            if (!found || gn.residual_norm < best.residual_norm) {
                best = std::move(gn);
                found = true;
            }
        }
        if (!found) throw invalid_argument("fit: model is not evaluable at any initial guess");
        r.coefficients = std::move(best.params);
        r.converged = best.converged;
    }

    const Vector yhat = predict(r, x);
    double sse = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) {
        const double d = yhat[i] - y[i];
        sse += d * d;
    }
    r.train_mse = sse / static_cast<double>(y.size());
    return r;
}

}  // namespace hpm
