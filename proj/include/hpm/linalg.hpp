#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <string>
#include <utility>
#include <vector>

#include "hpm/errors.hpp"
#include "hpm/matrix.hpp"

namespace hpm {

/// n equally spaced values from lo to hi inclusive, strictly increasing.
inline Vector linspace(double lo, double hi, std::size_t n) {
    if (n < 2) throw invalid_argument("linspace: need at least 2 points");
    if (!(lo < hi)) throw invalid_argument("linspace: lo must be strictly below hi");
    Vector v(n);
    const double step = (hi - lo) / static_cast<double>(n - 1);
    for (std::size_t i = 0; i < n; ++i) v[i] = lo + step * static_cast<double>(i);
    v.front() = lo;
    v.back() = hi;
    return v;
}

namespace detail {

// Applies the Householder reflector stored in col[k..m) to a column vector
// in place: v -= tau * (w.v) w, where w has an implicit unit pivot entry.
struct Householder {
    std::size_t offset = 0;
    Vector w;      // reflector direction, w[0] corresponds to row `offset`
    double tau = 0.0;
};

inline void apply_householder(const Householder& h, Vector& v) {
    if (h.tau == 0.0) return;
    double s = 0.0;
    for (std::size_t i = 0; i < h.w.size(); ++i) s += h.w[i] * v[h.offset + i];
    s *= h.tau;
    for (std::size_t i = 0; i < h.w.size(); ++i) v[h.offset + i] -= s * h.w[i];
}

}  // namespace detail

/// Least squares solve of A c = y in the 2-norm.
///
/// Column-pivoted Householder QR; when the numerical rank falls short of
/// the column count the solution is completed to the minimum-norm one via
/// a second orthogonal factorization of the leading rank rows. Normal
/// equations are never formed. Deterministic: pivot ties break on the
/// lowest column index.
inline Vector lstsq(const Matrix& a, const Vector& y) {
    const std::size_t m = a.rows();
    const std::size_t n = a.cols();
    if (m == 0 || n == 0) throw invalid_argument("lstsq: empty system");
    if (y.size() != m) throw invalid_argument("lstsq: row count of A must match length of y");
    require_finite(a, "lstsq");
    require_finite(y, "lstsq");

    Matrix r = a;
    Vector qty = y;
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), 0);

    const std::size_t steps = std::min(m, n);
    for (std::size_t k = 0; k < steps; ++k) {
        // Pivot: bring the column with the largest remaining norm to front.
        std::size_t best = k;
        double best_norm = -1.0;
        for (std::size_t j = k; j < n; ++j) {
            double s = 0.0;
            for (std::size_t i = k; i < m; ++i) s += r(i, j) * r(i, j);
            if (s > best_norm) {
                best_norm = s;
                best = j;
            }
        }
        if (best != k) {
            for (std::size_t i = 0; i < m; ++i) std::swap(r(i, k), r(i, best));
            std::swap(perm[k], perm[best]);
        }

        double alpha = 0.0;
        for (std::size_t i = k; i < m; ++i) alpha += r(i, k) * r(i, k);
        alpha = std::sqrt(alpha);
        if (alpha == 0.0) continue;
        if (r(k, k) > 0.0) alpha = -alpha;

        detail::Householder h;
        h.offset = k;
        h.w.resize(m - k);
        h.w[0] = r(k, k) - alpha;
        for (std::size_t i = k + 1; i < m; ++i) h.w[i - k] = r(i, k);
        const double wnorm2 = alpha * alpha - r(k, k) * alpha;  // == |w|^2 / 2
        if (wnorm2 <= 0.0) continue;
        h.tau = 1.0 / wnorm2;

        r(k, k) = alpha;
        for (std::size_t i = k + 1; i < m; ++i) r(i, k) = 0.0;
        for (std::size_t j = k + 1; j < n; ++j) {
            double s = 0.0;
            for (std::size_t i = k; i < m; ++i) s += h.w[i - k] * r(i, j);
            s *= h.tau;
            for (std::size_t i = k; i < m; ++i) r(i, j) -= s * h.w[i - k];
        }
        detail::apply_householder(h, qty);
    }

    // Numerical rank from the pivoted diagonal of R.
    const double eps = std::numeric_limits<double>::epsilon();
    const double tol = static_cast<double>(std::max(m, n)) * eps * std::abs(r(0, 0));
    std::size_t rank = 0;
    while (rank < steps && std::abs(r(rank, rank)) > tol) ++rank;

    Vector z(n, 0.0);
    if (rank == n) {
        // Full column rank: plain back substitution.
        for (std::size_t ii = n; ii-- > 0;) {
            double s = qty[ii];
            for (std::size_t j = ii + 1; j < n; ++j) s -= r(ii, j) * z[j];
            z[ii] = s / r(ii, ii);
        }
    } else if (rank > 0) {
        // Rank deficient: factor the leading rank rows from the right so the
        // minimum-norm solution drops out (complete orthogonal decomposition).
        Matrix rt(n, rank);  // transpose of R[0:rank, 0:n]
        for (std::size_t i = 0; i < rank; ++i)
            for (std::size_t j = 0; j < n; ++j) rt(j, i) = r(i, j);

        std::vector<detail::Householder> refl(rank);
        for (std::size_t k = 0; k < rank; ++k) {
            double alpha = 0.0;
            for (std::size_t i = k; i < n; ++i) alpha += rt(i, k) * rt(i, k);
            alpha = std::sqrt(alpha);
            if (alpha == 0.0) continue;
            if (rt(k, k) > 0.0) alpha = -alpha;

            detail::Householder h;
            h.offset = k;
            h.w.resize(n - k);
            h.w[0] = rt(k, k) - alpha;
            for (std::size_t i = k + 1; i < n; ++i) h.w[i - k] = rt(i, k);
            const double wnorm2 = alpha * alpha - rt(k, k) * alpha;
            if (wnorm2 <= 0.0) continue;
            h.tau = 1.0 / wnorm2;

            rt(k, k) = alpha;
            for (std::size_t i = k + 1; i < n; ++i) rt(i, k) = 0.0;
            for (std::size_t j = k + 1; j < rank; ++j) {
                double s = 0.0;
                for (std::size_t i = k; i < n; ++i) s += h.w[i - k] * rt(i, j);
                s *= h.tau;
                for (std::size_t i = k; i < n; ++i) rt(i, j) -= s * h.w[i - k];
            }
            refl[k] = std::move(h);
        }

        // R1^T = Q2 T with T upper triangular, so R1 z = w1 becomes
        // T^T u = w1 and z = Q2 u.
        Vector u(rank, 0.0);
        for (std::size_t i = 0; i < rank; ++i) {
            double s = qty[i];
            for (std::size_t j = 0; j < i; ++j) s -= rt(j, i) * u[j];
            u[i] = s / rt(i, i);
        }
        for (std::size_t i = 0; i < rank; ++i) z[i] = u[i];
        for (std::size_t k = rank; k-- > 0;) detail::apply_householder(refl[k], z);
    }

    Vector c(n, 0.0);
    for (std::size_t j = 0; j < n; ++j) c[perm[j]] = z[j];
    return c;
}

struct SymEigResult {
    Vector eigenvalues;   // descending
    Matrix eigenvectors;  // orthonormal columns, column k pairs with eigenvalues[k]
};

/// Full eigendecomposition of a symmetric matrix by cyclic Jacobi sweeps.
///
/// Deterministic by construction: fixed sweep order, descending sort with
/// index tie-break, and every eigenvector flipped so its largest-magnitude
/// entry (lowest index on ties) is positive.
inline SymEigResult sym_eig(const Matrix& c) {
    const std::size_t n = c.rows();
    if (n == 0 || c.cols() != n) throw invalid_argument("sym_eig: matrix must be square and non-empty");
    require_finite(c, "sym_eig");

    double scale = 0.0;
    for (double x : c.data()) scale = std::max(scale, std::abs(x));
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j)
            if (std::abs(c(i, j) - c(j, i)) > 1e-10 * std::max(scale, 1e-300))
                throw invalid_argument("sym_eig: matrix is not symmetric");

    Matrix a = c;
    // Work on the exact symmetric part so the sweeps see a_pq == a_qp.
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) {
            const double v = 0.5 * (a(i, j) + a(j, i));
            a(i, j) = v;
            a(j, i) = v;
        }

    Matrix v = Matrix::identity(n);
    const double stop = 1e-14 * std::max(frobenius_norm(a), 1e-300);

    const std::size_t max_sweeps = 64;
    std::size_t sweep = 0;
    for (; sweep < max_sweeps; ++sweep) {
        double off = 0.0;
        for (std::size_t p = 0; p < n; ++p)
            for (std::size_t q = p + 1; q < n; ++q) off += a(p, q) * a(p, q);
        if (std::sqrt(2.0 * off) <= stop) break;

        for (std::size_t p = 0; p + 1 < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                const double apq = a(p, q);
                if (apq == 0.0) continue;
                const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
                const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                                 (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double cs = 1.0 / std::sqrt(t * t + 1.0);
                const double sn = t * cs;

                for (std::size_t i = 0; i < n; ++i) {
                    const double aip = a(i, p);
                    const double aiq = a(i, q);
                    a(i, p) = cs * aip - sn * aiq;
                    a(i, q) = sn * aip + cs * aiq;
                }
                for (std::size_t i = 0; i < n; ++i) {
                    const double api = a(p, i);
                    const double aqi = a(q, i);
                    a(p, i) = cs * api - sn * aqi;
                    a(q, i) = sn * api + cs * aqi;
                }
                for (std::size_t i = 0; i < n; ++i) {
                    const double vip = v(i, p);
                    const double viq = v(i, q);
                    v(i, p) = cs * vip - sn * viq;
                    v(i, q) = sn * vip + cs * viq;
                }
            }
        }
    }
    if (sweep == max_sweeps) throw numeric_error("sym_eig: Jacobi sweeps did not converge");

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) {
        if (a(i, i) != a(j, j)) return a(i, i) > a(j, j);
        return i < j;
    });

    SymEigResult out;
    out.eigenvalues.resize(n);
    out.eigenvectors = Matrix(n, n);
    for (std::size_t k = 0; k < n; ++k) {
        const std::size_t src = order[k];
        out.eigenvalues[k] = a(src, src);
        std::size_t imax = 0;
        double vmax = std::abs(v(0, src));
        for (std::size_t i = 1; i < n; ++i) {
            const double av = std::abs(v(i, src));
            if (av > vmax) {
                vmax = av;
                imax = i;
            }
        }
        const double sign = v(imax, src) < 0.0 ? -1.0 : 1.0;
        for (std::size_t i = 0; i < n; ++i) out.eigenvectors(i, k) = sign * v(i, src);
    }
    return out;
}

}  // namespace hpm
