#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "hpm/errors.hpp"
#include "hpm/linalg.hpp"
#include "hpm/matrix.hpp"

namespace hpm {

/// A shape is one task's sampled curve: all landmark values flattened into
/// a single vector on a grid shared by every shape in the training set.
using Shape = Vector;

/// How many deformation modes to keep: either an explicit count or the
/// smallest count whose cumulative eigenvalue share reaches a fraction.
struct ComponentSelection {
    bool by_count = true;
    std::size_t count_value = 0;
    double fraction_value = 0.0;

    static ComponentSelection count(std::size_t p) {
        ComponentSelection s;
        s.by_count = true;
        s.count_value = p;
        return s;
    }
    static ComponentSelection variance_fraction(double f) {
        if (!(f > 0.0) || f > 1.0)
            throw invalid_argument("ComponentSelection: fraction must lie in (0, 1]");
        ComponentSelection s;
        s.by_count = false;
        s.fraction_value = f;
        return s;
    }
};

/// Which eigenproblem to solve when building: the kn×kn covariance
/// directly, the N×N Gram matrix with eigenvectors mapped back, or
/// whichever is smaller (automatic).
enum class CovarianceRoute { automatic, gram, direct };

struct DeformableModel {
    Vector mean;         // x̄, length kn
    Matrix modes;        // φ, kn × p, orthonormal columns
    Vector eigenvalues;  // λ, length p, descending, non-negative
    double total_variance = 0.0;

    [[nodiscard]] std::size_t landmark_dim() const { return mean.size(); }
    [[nodiscard]] std::size_t component_count() const { return eigenvalues.size(); }
};

/// Build a deformable model from training shapes.
///
/// Mean, covariance with 1/N normalization, eigendecomposition, then keep
/// the requested modes in descending eigenvalue order. Shapes are used raw
/// (no alignment, no variance normalization): landmarks already correspond
/// because every shape is sampled on the same grid. With N shapes of
/// dimension kn the automatic route solves the N×N Gram eigenproblem
/// whenever N < kn and maps eigenvectors back through the deviation
/// matrix, which is exact because nonzero-eigenvalue eigenvectors of
/// (1/N)·DᵀD give eigenvectors D·q of the covariance.
///
/// Retention is capped at the numerical rank of the deviation matrix:
/// zero-variance directions have no well-defined mode, so asking for more
/// components than the data carries quietly yields fewer. An explicit
/// count above N−1 is still rejected.
inline DeformableModel build_deformable_model(const std::vector<Shape>& shapes,
                                              const ComponentSelection& retained,
                                              CovarianceRoute route = CovarianceRoute::automatic) {
    const std::size_t n_shapes = shapes.size();
    if (n_shapes < 2) throw invalid_argument("build_deformable_model: need at least 2 shapes");
    const std::size_t dim = shapes.front().size();
    if (dim == 0) throw invalid_argument("build_deformable_model: empty shapes");
    for (const Shape& s : shapes) {
        if (s.size() != dim)
            throw invalid_argument("build_deformable_model: mismatched shape lengths");
        require_finite(s, "build_deformable_model");
    }
    if (retained.by_count && retained.count_value > n_shapes - 1)
        throw invalid_argument("build_deformable_model: requested components exceed shape count minus one");

    DeformableModel m;
    m.mean.assign(dim, 0.0);
    for (const Shape& s : shapes)
        for (std::size_t i = 0; i < dim; ++i) m.mean[i] += s[i];
    for (double& v : m.mean) v /= static_cast<double>(n_shapes);

    // Deviations as columns: D is kn × N.
    Matrix dev(dim, n_shapes);
    double total = 0.0;
    for (std::size_t j = 0; j < n_shapes; ++j)
        for (std::size_t i = 0; i < dim; ++i) {
            const double d = shapes[j][i] - m.mean[i];
            dev(i, j) = d;
            total += d * d;
        }
    m.total_variance = total / static_cast<double>(n_shapes);

    const bool use_gram = route == CovarianceRoute::gram ||
                          (route == CovarianceRoute::automatic && n_shapes < dim);

    const std::size_t max_modes = std::min(dim, n_shapes - 1);
    Vector lambda;          // candidate eigenvalues, descending
    std::vector<Vector> phi;  // candidate unit modes

    if (use_gram) {
        Matrix gram(n_shapes, n_shapes);
        for (std::size_t i = 0; i < n_shapes; ++i)
            for (std::size_t j = i; j < n_shapes; ++j) {
                double s = 0.0;
                for (std::size_t k = 0; k < dim; ++k) s += dev(k, i) * dev(k, j);
                s /= static_cast<double>(n_shapes);
                gram(i, j) = s;
                gram(j, i) = s;
            }
        const SymEigResult eig = sym_eig(gram);
        for (std::size_t k = 0; k < max_modes; ++k) {
            lambda.push_back(eig.eigenvalues[k]);
            Vector mode(dim, 0.0);
            for (std::size_t j = 0; j < n_shapes; ++j) {
                const double q = eig.eigenvectors(j, k);
                if (q == 0.0) continue;
                for (std::size_t i = 0; i < dim; ++i) mode[i] += dev(i, j) * q;
            }
            const double len = norm2(mode);
            if (len > 0.0)
                for (double& v : mode) v /= len;
            phi.push_back(std::move(mode));
        }
    } else {
        Matrix cov(dim, dim);
        for (std::size_t i = 0; i < dim; ++i)
            for (std::size_t j = i; j < dim; ++j) {
                double s = 0.0;
                for (std::size_t k = 0; k < n_shapes; ++k) s += dev(i, k) * dev(j, k);
                s /= static_cast<double>(n_shapes);
                cov(i, j) = s;
                cov(j, i) = s;
            }
        const SymEigResult eig = sym_eig(cov);
        for (std::size_t k = 0; k < max_modes; ++k) {
            lambda.push_back(eig.eigenvalues[k]);
            phi.push_back(eig.eigenvectors.col(k));
        }
    }

    // Clamp roundoff negatives; anything genuinely negative is a breakdown.
    double lambda_max = 0.0;
    for (double v : lambda) lambda_max = std::max(lambda_max, v);
    for (double& v : lambda) {
        if (v < 0.0) {
            if (v < -1e-10 * std::max(lambda_max, 1.0))
                throw numeric_error("build_deformable_model: covariance produced a negative eigenvalue");
            v = 0.0;
        }
    }

    // Shape variation spans at most the numerical rank of D.
    std::size_t rank = 0;
    while (rank < lambda.size() && lambda[rank] > 1e-12 * std::max(lambda_max, 1e-300)) ++rank;

    std::size_t keep;
    if (retained.by_count) {
        keep = std::min(retained.count_value, rank);
    } else {
        double spectrum_sum = 0.0;
        for (double v : lambda) spectrum_sum += v;
        keep = 0;
        if (spectrum_sum > 0.0) {
            double acc = 0.0;
            while (keep < rank) {
                acc += lambda[keep];
                ++keep;
                if (acc / spectrum_sum >= retained.fraction_value) break;
            }
        }
    }

    m.eigenvalues.assign(lambda.begin(), lambda.begin() + static_cast<std::ptrdiff_t>(keep));
    m.modes = Matrix(dim, keep);
    for (std::size_t k = 0; k < keep; ++k) {
        Vector& mode = phi[k];
        // Same sign convention as sym_eig so both routes emit the same basis.
        std::size_t imax = 0;
        double vmax = std::abs(mode[0]);
        for (std::size_t i = 1; i < dim; ++i) {
            const double av = std::abs(mode[i]);
            if (av > vmax) {
                vmax = av;
                imax = i;
            }
        }
        if (mode[imax] < 0.0)
            for (double& v : mode) v = -v;
        m.modes.set_col(k, mode);
    }
    return m;
}

/// Deformable parameters of a shape: b = φᵀ(x − x̄).
inline Vector project(const DeformableModel& m, const Shape& s) {
    if (s.size() != m.mean.size())
        throw invalid_argument("project: shape length does not match model");
    require_finite(s, "project");
    const std::size_t p = m.component_count();
    Vector b(p, 0.0);
    for (std::size_t k = 0; k < p; ++k) {
        double acc = 0.0;
        for (std::size_t i = 0; i < s.size(); ++i) acc += m.modes(i, k) * (s[i] - m.mean[i]);
        b[k] = acc;
    }
    return b;
}

/// Shape from deformable parameters: x' = x̄ + φ·b.
inline Shape reconstruct(const DeformableModel& m, const Vector& b) {
    if (b.size() != m.component_count())
        throw invalid_argument("reconstruct: parameter length does not match model");
    require_finite(b, "reconstruct");
    Shape s = m.mean;
    for (std::size_t k = 0; k < b.size(); ++k) {
        const double bk = b[k];
        if (bk == 0.0) continue;
        for (std::size_t i = 0; i < s.size(); ++i) s[i] += m.modes(i, k) * bk;
    }
    return s;
}

/// Indices of components outside the classical ±3√λ similarity band.
/// Informational only; nothing in generation clips to this band.
inline std::vector<std::size_t> plausibility_check(const DeformableModel& m, const Vector& b) {
    if (b.size() != m.component_count())
        throw invalid_argument("plausibility_check: parameter length does not match model");
    std::vector<std::size_t> flagged;
    for (std::size_t k = 0; k < b.size(); ++k)
        if (std::abs(b[k]) > 3.0 * std::sqrt(m.eigenvalues[k])) flagged.push_back(k);
    return flagged;
}

}  // namespace hpm
