#pragma once

#include <cmath>
#include <cstddef>
#include <utility>

#include "hpm/errors.hpp"
#include "hpm/linalg.hpp"
#include "hpm/matrix.hpp"

namespace hpm {

struct GaussNewtonResult {
    Vector params;
    bool converged = false;
    std::size_t iterations = 0;
    double residual_norm = 0.0;
};

/// Damped Gauss-Newton minimization of ‖residual(params)‖₂.
///
/// residual_fn(params) returns the residual vector; jacobian_fn(params)
/// returns its Jacobian, entry (i, j) = ∂residual_i/∂param_j. Steps solve
/// the damped system [J; √μ·I]·δ = [−r; 0] through lstsq. A step is
/// accepted only when it does not increase the residual norm; damping μ
/// starts at 1e-3, shrinks by 10 on acceptance and grows by 10 on
/// rejection. Converged means an accepted step whose norm or whose
/// residual-norm decrease fell below tol. Running out of iterations is
/// reported through converged=false, not an error.
template <typename ResidualFn, typename JacobianFn>
GaussNewtonResult gauss_newton(ResidualFn&& residual_fn, JacobianFn&& jacobian_fn,
                               Vector init, std::size_t max_iter, double tol) {
    require_finite(init, "gauss_newton");

    GaussNewtonResult out;
    out.params = std::move(init);

    Vector r = residual_fn(out.params);
    if (!all_finite(r))
        throw invalid_argument("gauss_newton: non-finite residual at init");
    out.residual_norm = norm2(r);

    const std::size_t n = out.params.size();
    double mu = 1e-3;

    for (std::size_t iter = 0; iter < max_iter; ++iter) {
        out.iterations = iter + 1;
        if (!(mu < 1e100)) break;  // damping blew up, nothing more to try

        Matrix j = jacobian_fn(out.params);
        if (j.rows() != r.size() || j.cols() != n)
            throw invalid_argument("gauss_newton: jacobian dimensions inconsistent with residual");
        if (!all_finite(j)) break;

        const std::size_t m = r.size();
        Matrix aug(m + n, n);
        Vector rhs(m + n, 0.0);
        for (std::size_t i = 0; i < m; ++i) {
            for (std::size_t k = 0; k < n; ++k) aug(i, k) = j(i, k);
            rhs[i] = -r[i];
        }
        const double root_mu = std::sqrt(mu);
        for (std::size_t k = 0; k < n; ++k) aug(m + k, k) = root_mu;

        const Vector step = lstsq(aug, rhs);
        Vector cand(n);
        for (std::size_t k = 0; k < n; ++k) cand[k] = out.params[k] + step[k];

        bool accept = false;
        double cand_norm = 0.0;
        if (all_finite(cand)) {
            const Vector rc = residual_fn(cand);
            if (all_finite(rc)) {
                cand_norm = norm2(rc);
                if (cand_norm <= out.residual_norm) {
                    accept = true;
                    r = rc;
                }
            }
        }

        if (accept) {
            const double decrease = out.residual_norm - cand_norm;
            out.params = std::move(cand);
            out.residual_norm = cand_norm;
            mu /= 10.0;
            if (norm2(step) < tol || decrease < tol) {
                out.converged = true;
                break;
            }
        } else {
            mu *= 10.0;
        }
    }
    return out;
}

}  // namespace hpm
