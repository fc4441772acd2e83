#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "qads/quadrature.hpp"

#include <cmath>

using namespace qads;

TEST_CASE("panel rule integrates polynomials exactly") {
    const auto& r = PanelRule<double>::get();
    constexpr int N = PanelRule<double>::kN;
    for (int deg : {0, 1, 2, 5, 10, 16, 30}) {
        double s_hi = 0, s_lo = 0;
        for (int j = 0; j <= N; ++j) s_hi += r.w_hi[j] * std::pow(r.x[j], deg);
        for (int j = 0; j <= N / 2; ++j) s_lo += r.w_lo[j] * std::pow(r.x[2 * j], deg);
        double exact = (deg % 2 == 1) ? 0.0 : 2.0 / (deg + 1);
        CHECK(s_hi == doctest::Approx(exact).epsilon(1e-13));
        CHECK(s_lo == doctest::Approx(exact).epsilon(1e-13));
    }
}

TEST_CASE("finite integral: sin^2 over [0,pi]") {
    QuadratureSpec spec;
    spec.rel_tol = 1e-13;
    auto r = integrate_finite([](double u) { return std::sin(u) * std::sin(u); }, 0.0,
                              M_PI, spec);
    CHECK(r.converged);
    CHECK(r.value.value() == doctest::Approx(M_PI / 2).epsilon(1e-13));
}

TEST_CASE("finite integral vs Taylor oracle for erf-type") {
    // oracle: Int_0^1 e^{-x^2} dx = sum (-1)^k / (k! (2k+1))
    double oracle = 0, fact = 1;
    for (int k = 0; k <= 30; ++k) {
        if (k) fact *= k;
        oracle += ((k % 2) ? -1.0 : 1.0) / (fact * (2 * k + 1));
    }
    QuadratureSpec spec;
    spec.rel_tol = 1e-14;
    auto r = integrate_finite([](double x) { return std::exp(-x * x); }, 0.0, 1.0, spec);
    CHECK(r.value.value() == doctest::Approx(oracle).epsilon(1e-13));
    CHECK(r.error_estimate <= 1e-12);
}

TEST_CASE("deep-underflow integrand keeps a correct exponent") {
    // Int_0^inf e^{-500} e^{-x^2} dx = e^{-500} sqrt(pi)/2
    QuadratureSpec spec;
    spec.rel_tol = 1e-12;
    auto f = [](const double& x) { return Scaled<double>::exp_of_log(-500.0 - x * x); };
    auto tail = [](double U) { return -500.0 - U * U + std::log(2.0); };
    auto r = integrate_semi_infinite_scaled<double>(f, spec, tail, 0.5);
    CHECK(r.converged);
    double want = -500.0 + std::log(std::sqrt(M_PI) / 2);
    CHECK(to_d(r.value.log_abs()) == doctest::Approx(want).epsilon(1e-10));
}

TEST_CASE("semi-infinite gaussians") {
    QuadratureSpec spec;
    spec.rel_tol = 1e-12;
    double t = 0.5;
    auto r1 = integrate_semi_infinite(
        [t](double y) { return std::exp(-y * y / (4 * t)); }, spec,
        [t](double U) { return -U * U / (4 * t) + std::log(2 * t / U); }, 1.0);
    CHECK(r1.value.value() == doctest::Approx(std::sqrt(M_PI * t)).epsilon(1e-12));

    auto r2 = integrate_semi_infinite(
        [](double y) { return y * y * std::exp(-y * y); }, spec,
        [](double U) { return -U * U + 2 * std::log(U) - std::log(2.0) + std::log(1.5); },
        1.0);
    CHECK(r2.value.value() == doctest::Approx(std::sqrt(M_PI) / 4).epsilon(1e-12));
}

TEST_CASE("non-convergence is reported, not silently returned") {
    QuadratureSpec spec;
    spec.rel_tol = 1e-15;
    spec.max_subdivisions = 2;
    auto r = integrate_finite([](double x) { return std::sqrt(std::fabs(x - 0.3141)); },
                              0.0, 1.0, spec);
    CHECK(!r.converged);
}

TEST_CASE("A_n and B_n against closed-form zeta oracles") {
    // A_1 = 2 pi^5/15 and B_1 = -16 pi^5/15 + 2 pi^3 via the expansion
    // 1/sinh^2 y = 4 sum_j j e^{-2jy} integrated termwise (the integrals
    // Int y^4/sinh^2 = pi^4/30, Int y^2/sinh^2 = pi^2/6,
    // Int y^3 cosh/sinh^3 = pi^2/4).
    auto [A1, B1] = a_b_constants(1);
    double pi5 = std::pow(M_PI, 5), pi3 = std::pow(M_PI, 3);
    CHECK(A1 == doctest::Approx(2 * pi5 / 15).epsilon(1e-10));
    CHECK(B1 == doctest::Approx(-16 * pi5 / 15 + 2 * pi3).epsilon(1e-10));
    // frozen 30-digit quadrature oracle values for n = 2
    auto [A2, B2] = a_b_constants(2);
    CHECK(A2 == doctest::Approx(12.2484738075341709044176039608909).epsilon(1e-10));
    CHECK(B2 == doctest::Approx(-223.263608972279724208509865744).epsilon(1e-10));
}

TEST_CASE("determinism: identical inputs give bit-identical results") {
    QuadratureSpec spec;
    spec.rel_tol = 1e-11;
    auto f = [](double y) { return std::exp(-y * y) * std::cos(5 * y); };
    auto tail = [](double U) { return -U * U; };
    auto r1 = integrate_semi_infinite(f, spec, tail, 1.0);
    auto r2 = integrate_semi_infinite(f, spec, tail, 1.0);
    CHECK(r1.value.mantissa == r2.value.mantissa);
    CHECK(r1.value.exponent == r2.value.exponent);
    CHECK(r1.nodes_used == r2.nodes_used);
}

TEST_CASE("error estimate bounds the true error on a small regression set") {
    QuadratureSpec spec;
    spec.rel_tol = 1e-10;
    struct Case {
        std::function<double(double)> f;
        double a, b, exact;
    };
    std::vector<Case> cases = {
        {[](double x) { return std::sin(x); }, 0.0, M_PI, 2.0},
        {[](double x) { return 1.0 / (1 + x * x); }, 0.0, 1.0, M_PI / 4},
        {[](double x) { return std::exp(x); }, 0.0, 2.0, std::exp(2.0) - 1},
        {[](double x) { return x * std::exp(-x * x); }, 0.0, 3.0,
         0.5 * (1 - std::exp(-9.0))},
        {[](double x) { return std::cos(10 * x); }, 0.0, 1.0, std::sin(10.0) / 10},
    };
    for (auto& c : cases) {
        auto r = integrate_finite(c.f, c.a, c.b, spec);
        double true_rel = std::fabs(r.value.value() - c.exact) / std::fabs(c.exact);
        CHECK(r.converged);
        CHECK(true_rel <= std::max(r.error_estimate, 1e-14) * 10);
        CHECK(true_rel <= 1e-9);
    }
}

TEST_CASE("mp panel weights are consistent at 50 digits") {
    const auto& r = PanelRule<mp50>::get();
    mp50 s(0);
    for (int j = 0; j <= PanelRule<mp50>::kN; ++j) s += r.w_hi[j];
    CHECK(std::fabs(to_d(s - 2)) <= 1e-45);
}
