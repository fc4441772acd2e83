#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "qads/special.hpp"

#include <cmath>
#include <cstdint>
#include <vector>

using namespace qads;

TEST_CASE("chebyshev_u basics") {
    CHECK(chebyshev_u(0, 0.3) == 1.0);
    CHECK(chebyshev_u(5, 1.0) == 6.0);
    CHECK(chebyshev_u(4, -1.0) == 5.0);
    CHECK(chebyshev_u(5, -1.0) == -6.0);
    CHECK(chebyshev_u(3, std::cos(0.7)) ==
          doctest::Approx(std::sin(2.8) / std::sin(0.7)).epsilon(1e-14));
    CHECK_THROWS_AS(chebyshev_u(2, 1.5), std::domain_error);
    CHECK_THROWS_AS(chebyshev_u(-1, 0.5), std::domain_error);
}

TEST_CASE("chebyshev_u matches trigonometric form on a grid") {
    for (int m = 0; m <= 30; ++m) {
        for (double eta = 0.05; eta < 3.1415; eta += 0.05) {
            double ref = std::sin((m + 1) * eta) / std::sin(eta);
            CHECK(std::fabs(chebyshev_u(m, std::cos(eta)) - ref) <= 1e-12 * (m + 1));
        }
    }
}

namespace {
// Rodrigues formula oracle: P_m = (-1)^m/(2^m m!) d^m/dx^m (1-x^2)^m,
// expanded symbolically with integer coefficients.
double legendre_rodrigues(int m, double x) {
    // (x^2-1)^m coefficients of x^{2k}, then differentiate m times
    std::vector<double> coef(2 * m + 1, 0.0);  // coef[j] of x^j
    double binom = 1.0;
    for (int k = 0; k <= m; ++k) {
        coef[2 * k] = binom * ((m - k) % 2 == 0 ? 1.0 : -1.0);
        binom = binom * (m - k) / (k + 1);
    }
    for (int d = 0; d < m; ++d) {
        for (int j = 0; j + 1 < static_cast<int>(coef.size()); ++j)
            coef[j] = (j + 1) * coef[j + 1];
        coef.back() = 0.0;
    }
    double fact = 1.0;
    for (int k = 2; k <= m; ++k) fact *= k;
    double scale = 1.0 / (std::ldexp(fact, m));
    double v = 0.0;
    for (int j = static_cast<int>(coef.size()) - 1; j >= 0; --j) v = v * x + coef[j];
    return v * scale;
}
}  // namespace

TEST_CASE("legendre_p against Rodrigues oracle") {
    const double xs[] = {-1.0, 0.0, 1.0, std::cosh(0.5), std::cosh(2.0)};
    for (int m = 0; m <= 10; ++m) {
        for (double x : xs) {
            double ref = legendre_rodrigues(m, x);
            double got = legendre_p(m, x);
            CHECK(std::fabs(got - ref) <= 1e-12 * std::max(1.0, std::fabs(ref)));
        }
    }
    CHECK(legendre_p(7, 1.0) == 1.0);
    CHECK(legendre_p(2, 0.0) == doctest::Approx(-0.5).epsilon(1e-15));
}

TEST_CASE("terminating 2F1 identity") {
    CHECK(hyp2f1_terminating(0, 123.4) == 1.0);
    CHECK(hyp2f1_terminating(7, 0.0) == 1.0);
    // (m+1) 2F1(m+2,-m,3/2; (1-cosh u)/2) = sinh((m+1)u)/sinh(u)
    for (int m = 0; m <= 20; ++m) {
        for (double u = 0.1; u <= 3.0; u += 0.1) {
            double lhs = (m + 1) * hyp2f1_terminating(m, (1.0 - std::cosh(u)) / 2.0);
            double rhs = std::sinh((m + 1) * u) / std::sinh(u);
            CHECK(std::fabs(lhs - rhs) <= 1e-10 * std::fabs(rhs));
        }
    }
    // paper's displayed instance, m=2
    double lhs = 3.0 * hyp2f1_terminating(2, (1.0 - std::cosh(0.9)) / 2.0);
    CHECK(lhs == doctest::Approx(std::sinh(2.7) / std::sinh(0.9)).epsilon(1e-12));
}
