#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "qads/fiber.hpp"
#include "qads/quadrature.hpp"

#include <cmath>

using namespace qads;

TEST_CASE("large-t limit of s_t is the constant 2/pi") {
    for (double eta : {0.3, 1.0, 2.5}) {
        for (double u : {0.2, 1.3}) {
            CHECK(su2_kernel_spectral<double>(50.0, eta, u) ==
                  doctest::Approx(2 / M_PI).epsilon(1e-12));
        }
    }
}

TEST_CASE("spectral value at the double limit eta = u = 0") {
    // direct summation oracle, 60 terms of (2/pi)(m+1)^2 e^{-m(m+2)/2}
    double oracle = 0;
    for (int m = 0; m < 60; ++m)
        oracle += 2 / M_PI * (m + 1.0) * (m + 1.0) * std::exp(-m * (m + 2.0) * 0.5);
    CHECK(su2_kernel_spectral<double>(0.5, 0.0, 0.0) ==
          doctest::Approx(oracle).epsilon(1e-13));
    CHECK(su2_kernel_theta<double>(0.5, 0.0, 0.0) ==
          doctest::Approx(oracle).epsilon(1e-12));
}

TEST_CASE("spectral vs theta representation over the grid") {
    for (double t : {0.05, 0.5, 2.0}) {
        for (double eta : {0.1, 1.0, 2.0, 3.0}) {
            for (double u : {0.1, 1.0, 2.0, 3.0}) {
                double a = su2_kernel_spectral<double>(t, eta, u);
                double b = su2_kernel_theta<double>(t, eta, u);
                CHECK(std::fabs(a - b) <= 1e-11 * std::max(1.0, std::fabs(b)));
            }
        }
    }
}

TEST_CASE("theta representation limits at eta = 0 or u = 0") {
    for (double t : {0.1, 0.7}) {
        for (double v : {0.4, 1.7}) {
            double sp = su2_kernel_spectral<double>(t, 0.0, v);
            CHECK(su2_kernel_theta<double>(t, 0.0, v) == doctest::Approx(sp).epsilon(1e-11));
            CHECK(su2_kernel_theta<double>(t, v, 0.0) == doctest::Approx(sp).epsilon(1e-11));
        }
    }
    // small-t positivity near the diagonal
    CHECK(su2_kernel_theta<double>(0.01, 0.3, 0.3) > 0.0);
    CHECK(su2_kernel_theta<double>(0.01, 0.3, 0.3) ==
          doctest::Approx(su2_kernel_spectral<double>(0.01, 0.3, 0.3)).epsilon(1e-10));
}

TEST_CASE("k-truncation tail bound at t <= 1") {
    // |k| <= 3 suffices: compare k_max=3 against k_max=8
    for (double t : {0.05, 1.0}) {
        double a = su2_kernel_theta<double>(t, 1.0, 2.0, 3);
        double b = su2_kernel_theta<double>(t, 1.0, 2.0, 8);
        CHECK(std::fabs(a - b) <= 1e-16 * std::max(1.0, std::fabs(b)));
    }
}

TEST_CASE("fiber stochastic completeness") {
    QuadratureSpec spec;
    spec.rel_tol = 1e-12;
    for (double t : {0.1, 1.0}) {
        for (double eta : {0.0, 0.7, 1.4}) {
            auto m = integrate_finite(
                [&](double u) {
                    return su2_kernel_theta<double>(t, eta, u) * std::sin(u) * std::sin(u);
                },
                0.0, M_PI, spec);
            CHECK(m.value.value() == doctest::Approx(1.0).epsilon(1e-9));
        }
        for (double phi : {0.0, 0.7, 1.4}) {
            auto m = integrate_finite(
                [&](double psi) {
                    return cp1_kernel<double>(t, phi, psi) * std::sin(2 * psi);
                },
                0.0, M_PI / 2, spec);
            CHECK(m.value.value() == doctest::Approx(1.0).epsilon(1e-9));
        }
    }
}

TEST_CASE("continued kernel: spectral and theta forms agree") {
    for (double t : {0.2, 0.5, 1.0}) {
        for (double eta : {0.0, 0.4, 1.2, 2.8}) {
            for (double y : {0.0, 0.3, 0.8, 2.0}) {
                auto a = su2_kernel_continued<double>(t, eta, y, ContinuedForm::spectral);
                auto b = su2_kernel_continued<double>(t, eta, y, ContinuedForm::theta);
                REQUIRE(!a.is_zero());
                REQUIRE(!b.is_zero());
                CHECK(a.sign() == b.sign());
                CHECK(to_d(a.log_abs() - b.log_abs()) ==
                      doctest::Approx(0.0).epsilon(1e-10).scale(1.0));
            }
        }
    }
}

TEST_CASE("continued kernel y -> 0 limit matches the (m+1) spectral sum") {
    double t = 0.5, eta = 1.1;
    double direct = 0;
    for (int m = 0; m < 80; ++m)
        direct += 2 / M_PI * std::exp(-m * (m + 2.0) * t) * (m + 1.0) *
                  std::sin((m + 1) * eta) / std::sin(eta);
    auto v = su2_kernel_continued<double>(t, eta, 0.0, ContinuedForm::spectral);
    CHECK(v.to_double() == doctest::Approx(direct).epsilon(1e-12));
    auto w = su2_kernel_continued<double>(t, eta, 0.0, ContinuedForm::theta);
    CHECK(w.to_double() == doctest::Approx(direct).epsilon(1e-10));
}

TEST_CASE("continued kernel grows like e^{y^2/4t} with the Gaussian in the exponent") {
    double t = 0.25, eta = 1.0, y = 20.0;
    auto v = su2_kernel_continued<double>(t, eta, y, ContinuedForm::theta);
    double lg = to_d(v.log_abs());
    CHECK(lg > y * y / (4 * t) - 2 * y);  // dominated by the Gaussian growth
    CHECK(std::isfinite(lg));
}

TEST_CASE("cp1 kernel basics") {
    CHECK(cp1_kernel<double>(50.0, 0.3, 0.8) == doctest::Approx(1.0).epsilon(1e-12));
    // eigenvalue spacing: t-derivative of the m=2 term
    // (checked through the series: u_t with only m<=2 terms)
    double t = 0.3;
    // orthogonality: Int_0^{pi/2} u_t(0,psi) sin 2psi dpsi = 1
    QuadratureSpec spec;
    spec.rel_tol = 1e-12;
    auto m = integrate_finite(
        [&](double psi) { return cp1_kernel<double>(t, 0.0, psi) * std::sin(2 * psi); },
        0.0, M_PI / 2, spec);
    CHECK(m.value.value() == doctest::Approx(1.0).epsilon(1e-10));
}

TEST_CASE("cp1 continued at u=0 equals the kernel, and against a direct sum") {
    double t = 0.5, phi = 0.4;
    auto a = cp1_kernel_continued<double>(t, phi, 0.0);
    CHECK(a.to_double() == doctest::Approx(cp1_kernel<double>(t, phi, 0.0)).epsilon(1e-13));
    // independent 100-term direct sum at u = 1
    double direct = 0;
    for (int m = 0; m < 100; ++m)
        direct += (2 * m + 1.0) * std::exp(-4.0 * m * (m + 1) * t) *
                  legendre_p(m, std::cos(2 * phi)) * legendre_p(m, std::cosh(2.0));
    auto b = cp1_kernel_continued<double>(t, phi, 1.0);
    CHECK(b.to_double() == doctest::Approx(direct).epsilon(1e-12));
}

TEST_CASE("certified truncations really bound the tail") {
    SeriesTruncation tr = su2_truncation(0.5, 1.0, 1e-14);
    // doubling m_max changes nothing beyond the bound
    SeriesTruncation big{2 * tr.m_max, 0, 0};
    auto a = su2_kernel_continued<double>(0.5, 1.2, 1.0, ContinuedForm::spectral, &tr);
    auto b = su2_kernel_continued<double>(0.5, 1.2, 1.0, ContinuedForm::spectral, &big);
    CHECK(std::fabs(a.to_double() - b.to_double()) <= 2 * tr.tail_bound);
    SeriesTruncation tc = cp1_truncation(0.5, 1.0, 1e-14);
    SeriesTruncation bigc{2 * tc.m_max, 0, 0};
    auto c = cp1_kernel_continued<double>(0.5, 0.7, 1.0, &tc);
    auto d = cp1_kernel_continued<double>(0.5, 0.7, 1.0, &bigc);
    CHECK(std::fabs(c.to_double() - d.to_double()) <= 2 * tc.tail_bound);
}

namespace {
// Richardson-extrapolated second-order FD of g on a symmetric stencil
double fd2(const std::function<double(double)>& g, double x, double h) {
    auto d2 = [&](double hh) { return (g(x + hh) - 2 * g(x) + g(x - hh)) / (hh * hh); };
    double a = d2(h), b = d2(h / 2);
    return (4 * b - a) / 3;
}
double fd1(const std::function<double(double)>& g, double x, double h) {
    auto d1 = [&](double hh) { return (g(x + hh) - g(x - hh)) / (2 * hh); };
    double a = d1(h), b = d1(h / 2);
    return (4 * b - a) / 3;
}
}  // namespace

TEST_CASE("eigenfunction residuals for the fiber operators") {
    // (d^2_eta + 2 cot eta d_eta) U_m(cos eta) = -m(m+2) U_m(cos eta)
    for (int m = 1; m <= 10; ++m) {
        for (double eta : {0.6, 1.3, 2.2}) {
            auto g = [m](double e) { return chebyshev_u(m, std::cos(e)); };
            double lhs = fd2(g, eta, 1e-4) + 2 / std::tan(eta) * fd1(g, eta, 1e-4);
            double rhs = -m * (m + 2.0) * g(eta);
            CHECK(std::fabs(lhs - rhs) <=
                  1e-6 * std::max(1.0, std::fabs(rhs)));
        }
    }
    // (d^2_phi + 2 cot 2phi d_phi) P_m(cos 2phi) = -4m(m+1) P_m(cos 2phi)
    for (int m = 1; m <= 10; ++m) {
        for (double phi : {0.3, 0.7, 1.2}) {
            auto g = [m](double p) { return legendre_p(m, std::cos(2 * p)); };
            double lhs = fd2(g, phi, 1e-4) + 2 / std::tan(2 * phi) * fd1(g, phi, 1e-4);
            double rhs = -4.0 * m * (m + 1) * g(phi);
            CHECK(std::fabs(lhs - rhs) <=
                  1e-6 * std::max(1.0, std::fabs(rhs)));
        }
    }
}
