#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <limits>

#include "hpm/gauss_newton.hpp"
#include "hpm/linalg.hpp"

using hpm::Matrix;
using hpm::Vector;

namespace {

// y = a·x over a fixed grid; globally convex in a, so any start must reach it.
struct LinearScale {
    Vector xs = hpm::linspace(0.0, 1.0, 10);
    Vector ys;
    explicit LinearScale(double a) {
        ys.resize(xs.size());
        for (std::size_t i = 0; i < xs.size(); ++i) ys[i] = a * xs[i];
    }
    Vector residual(const Vector& p) const {
        Vector r(xs.size());
        for (std::size_t i = 0; i < xs.size(); ++i) r[i] = p[0] * xs[i] - ys[i];
        return r;
    }
    Matrix jacobian(const Vector&) const {
        Matrix j(xs.size(), 1);
        for (std::size_t i = 0; i < xs.size(); ++i) j(i, 0) = xs[i];
        return j;
    }
};

struct GaussianCurve {
    Vector xs = hpm::linspace(0.0, 1.0, 30);
    Vector ys;
    explicit GaussianCurve(const Vector& p) { ys = eval(p); }
    Vector eval(const Vector& p) const {
        Vector out(xs.size());
        for (std::size_t i = 0; i < xs.size(); ++i) {
            const double d = xs[i] - p[1];
            out[i] = p[0] * std::exp(-(d * d) / (2.0 * p[2] * p[2]));
        }
        return out;
    }
    Vector residual(const Vector& p) const {
        Vector r = eval(p);
        for (std::size_t i = 0; i < r.size(); ++i) r[i] -= ys[i];
        return r;
    }
    Matrix jacobian(const Vector& p) const {
        Matrix j(xs.size(), 3);
        for (std::size_t i = 0; i < xs.size(); ++i) {
            const double d = xs[i] - p[1];
            const double s2 = p[2] * p[2];
            const double e = std::exp(-(d * d) / (2.0 * s2));
            j(i, 0) = e;
            j(i, 1) = p[0] * e * d / s2;
            j(i, 2) = p[0] * e * d * d / (s2 * p[2]);
        }
        return j;
    }
};

}  // namespace

TEST_CASE("gauss_newton solves a one-parameter linear problem") {
    const LinearScale prob(3.0);
    const auto res = hpm::gauss_newton(
        [&](const Vector& p) { return prob.residual(p); },
        [&](const Vector& p) { return prob.jacobian(p); }, Vector{0.0}, 100, 1e-12);
    REQUIRE(res.params.size() == 1);
    CHECK(res.converged);
    CHECK_THAT(res.params[0], Catch::Matchers::WithinAbs(3.0, 1e-8));
    CHECK(res.residual_norm <= 1e-8);
}

TEST_CASE("gauss_newton recovers gaussian parameters from a nearby start") {
    const Vector truth = {2.0, 0.5, 0.1};
    const GaussianCurve prob(truth);
    const auto res = hpm::gauss_newton(
        [&](const Vector& p) { return prob.residual(p); },
        [&](const Vector& p) { return prob.jacobian(p); }, Vector{1.0, 0.4, 0.2}, 500, 1e-12);
    CHECK(res.converged);
    for (std::size_t i = 0; i < 3; ++i)
        CHECK_THAT(res.params[i], Catch::Matchers::WithinAbs(truth[i], 1e-6));
}

TEST_CASE("gauss_newton with a zero iteration budget returns the start") {
    const LinearScale prob(3.0);
    const Vector init = {1.25};
    const auto res = hpm::gauss_newton(
        [&](const Vector& p) { return prob.residual(p); },
        [&](const Vector& p) { return prob.jacobian(p); }, init, 0, 1e-12);
    CHECK_FALSE(res.converged);
    CHECK(res.iterations == 0);
    CHECK(res.params == init);
    CHECK_THAT(res.residual_norm, Catch::Matchers::WithinAbs(hpm::norm2(prob.residual(init)), 0.0));
}

TEST_CASE("gauss_newton never increases the residual with a larger budget") {
    const GaussianCurve prob({1.5, 0.3, 0.15});
    double previous = std::numeric_limits<double>::infinity();
    for (std::size_t budget : {1, 2, 3, 5, 8, 13, 21, 50}) {
        const auto res = hpm::gauss_newton(
            [&](const Vector& p) { return prob.residual(p); },
            [&](const Vector& p) { return prob.jacobian(p); }, Vector{1.0, 0.5, 0.3}, budget, 1e-15);
        CHECK(res.residual_norm <= previous + 1e-15);
        previous = res.residual_norm;
    }
}

TEST_CASE("gauss_newton rejects a non-finite starting residual") {
    const auto bad_residual = [](const Vector&) {
        return Vector{std::numeric_limits<double>::quiet_NaN()};
    };
    const auto jac = [](const Vector&) { return Matrix(1, 1); };
    CHECK_THROWS_AS(hpm::gauss_newton(bad_residual, jac, Vector{1.0}, 10, 1e-10),
                    hpm::invalid_argument);
}

TEST_CASE("gauss_newton rejects inconsistent jacobian dimensions") {
    const LinearScale prob(2.0);
    const auto bad_jac = [](const Vector&) { return Matrix(3, 2); };
    CHECK_THROWS_AS(hpm::gauss_newton([&](const Vector& p) { return prob.residual(p); }, bad_jac,
                                      Vector{0.0}, 10, 1e-10),
                    hpm::invalid_argument);
}
