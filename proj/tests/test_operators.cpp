#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "qads/operators.hpp"
#include "qads/special.hpp"

#include <cmath>

using namespace qads;

TEST_CASE("radial sublaplacian annihilates constants") {
    auto one = [](double, double) { return 1.0; };
    CHECK(std::fabs(apply_radial_sublaplacian(1, one, {1.0, 1.0})) <= 1e-10);
    CHECK(std::fabs(apply_dalembertian(1, one, {1.0, 1.0})) <= 1e-10);
    CHECK(std::fabs(apply_twistor_sublaplacian(1, one, 1.0, 0.7)) <= 1e-10);
}

TEST_CASE("U_m(cos eta) is an eigenfunction with eigenvalue -m(m+2) tanh^2 r") {
    for (int m : {1, 2, 5}) {
        auto f = [m](double, double eta) { return chebyshev_u(m, std::cos(eta)); };
        for (double r : {0.7, 1.0}) {
            for (double eta : {0.8, 1.0, 2.0}) {
                double got = apply_radial_sublaplacian(1, f, {r, eta});
                double th = std::tanh(r);
                double want = -m * (m + 2.0) * th * th * f(r, eta);
                CHECK(std::fabs(got - want) <= 1e-6 * std::max(1.0, std::fabs(want)));
            }
        }
    }
}

TEST_CASE("P_m(cos 2 phi) eigenvalue -4m(m+1) tanh^2 r on the twistor operator") {
    auto f = [](double, double phi) { return legendre_p(2, std::cos(2 * phi)); };
    double got = apply_twistor_sublaplacian(1, f, 1.0, 0.6);
    double th = std::tanh(1.0);
    double want = -24.0 * th * th * f(1.0, 0.6);
    CHECK(std::fabs(got - want) <= 1e-6 * std::fabs(want));
}

TEST_CASE("generator identity: box f + Delta_SU2 f = L f") {
    // f = U_2(cos eta) e^{-r^2}
    auto f = [](double r, double eta) {
        return chebyshev_u(2, std::cos(eta)) * std::exp(-r * r);
    };
    for (double r : {0.8, 1.4}) {
        for (double eta : {0.9, 1.7}) {
            KernelPoint at{r, eta};
            double box = apply_dalembertian(2, f, at);
            double L = apply_radial_sublaplacian(2, f, at);
            // Delta_SU2 f by the eigenvalue: -8 f
            double dsu2 = -8.0 * f(r, eta);
            CHECK(std::fabs(box + dsu2 - L) <= 1e-6 * std::max(1.0, std::fabs(L)));
        }
    }
}

TEST_CASE("change of variables to the hyperbolic radial operator") {
    auto one = [](double) { return 1.0; };
    CHECK(change_of_variable_residual(1, one, 0.8, 0.6) <= 1e-12);
    auto ch = [](double x) { return std::cosh(x); };
    CHECK(change_of_variable_residual(1, ch, 0.8, 0.6) <= 1e-6);
    CHECK(change_of_variable_residual(2, ch, 1.2, 0.9) <= 1e-6);
    // g = q_{t,7}(cosh .) at t = 0.5 through the evaluator
    auto g = [](double delta) {
        return q_eval_scaled<double>(7, 0.5, delta).to_double();
    };
    CHECK(change_of_variable_residual(1, g, 0.8, 0.6) <= 1e-5);
    CHECK(change_of_variable_residual(1, g, 1.5, 1.0) <= 1e-5);
}

TEST_CASE("stencil convergence order on a smooth eigen-residual") {
    // residual of the m=3 eigenfunction identity decays ~ h^{2 levels}
    auto f = [](double, double eta) { return chebyshev_u(3, std::cos(eta)); };
    auto resid = [&](double h) {
        StencilSpec st{h, 2};
        double got = apply_radial_sublaplacian(1, f, {1.0, 1.3}, st);
        double th = std::tanh(1.0);
        return std::fabs(got + 15.0 * th * th * f(1.0, 1.3));
    };
    double r1 = resid(0.02), r2 = resid(0.01);
    CHECK(r2 > 0);
    double ratio = r1 / r2;
    CHECK(ratio > 6.0);    // nominal 16 for order 4
    CHECK(ratio < 70.0);
}

TEST_CASE("boundary proximity is rejected") {
    auto one = [](double, double) { return 1.0; };
    CHECK_THROWS_AS(apply_radial_sublaplacian(1, one, {1e-5, 1.0}), std::domain_error);
    CHECK_THROWS_AS(apply_radial_sublaplacian(1, one, {1.0, 3.14159}),
                    std::domain_error);
}

TEST_CASE("heat-equation residual of p_t under the radial sublaplacian") {
    EvalContext ctx(1, 0.5);
    ctx.quad.rel_tol = 1e-10;
    auto logk = [&](double t, double r, double eta) {
        EvalContext c = ctx;
        c.t = t;
        return ads_kernel_theta(c, {r, eta}).value.log_abs();
    };
    std::vector<std::pair<double, double>> grid;
    for (double r : {0.6, 1.0, 1.5})
        for (double eta : {0.8, 1.5, 2.2}) grid.push_back({r, eta});
    ResidualStats s = pde_residual_suite(ctx, logk, RadialOperator::ads, grid);
    CHECK(s.points == 9);
    CHECK(s.max_rel <= 1e-3);
}
