#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "qads/heat_terms.hpp"
#include "qads/hyperbolic.hpp"

#include <cmath>

using namespace qads;

namespace {

// Independent oracle: nested central finite differences of the descent
// operator applied to the Gaussian, in 100-digit arithmetic.  No term
// algebra involved.
mp100 descent_fd(int order, const mp100& t, const mp100& delta, const mp100& h) {
    if (order == 0) return exp(-delta * delta / (4 * t));
    mp100 up = descent_fd(order - 1, t, delta + h, h);
    mp100 dn = descent_fd(order - 1, t, delta - h, h);
    return -(up - dn) / (2 * h * sinh(delta));
}

double q_oracle_log(int d, double t, double delta) {
    int k = (d - 1) / 2;
    mp100 h("1e-9");
    mp100 v = descent_fd(k, mp100(t), mp100(delta), h);
    // Gaussian is already inside v; only the prefactor is added.
    mp100 lg = log(fabs(v)) + q_prefactor_log(d, mp100(t));
    return to_d(lg);
}

}  // namespace

TEST_CASE("term sums for d=3 and d=5 match hand expansion") {
    const HeatTermSum& s3 = q_termsum(3);
    REQUIRE(s3.terms.size() == 1);
    CHECK(s3.terms[0].coeff == Rational(1, 2));
    CHECK(s3.terms[0].t_power == 1);
    CHECK(s3.terms[0].delta_power == 1);
    CHECK(s3.terms[0].inv_sinh_power == 1);
    CHECK(s3.terms[0].cosh_power == 0);

    // one more descent applied by hand:
    //   -(1/sinh) d/dd [ (d/(2t sinh)) e^{-d^2/4t} ]
    // = [ -1/(2t) sinh^{-2} + d/(2t) sinh^{-3} cosh + d^2/(4t^2) sinh^{-2} ] e^{-d^2/4t}
    const HeatTermSum& s5 = q_termsum(5);
    REQUIRE(s5.terms.size() == 3);
    for (const auto& tm : s5.terms) {
        if (tm.delta_power == 0) {
            CHECK(tm.coeff == Rational(-1, 2));
            CHECK(tm.t_power == 1);
            CHECK(tm.inv_sinh_power == 2);
            CHECK(tm.cosh_power == 0);
        } else if (tm.delta_power == 1) {
            CHECK(tm.coeff == Rational(1, 2));
            CHECK(tm.t_power == 1);
            CHECK(tm.inv_sinh_power == 3);
            CHECK(tm.cosh_power == 1);
        } else {
            CHECK(tm.delta_power == 2);
            CHECK(tm.coeff == Rational(1, 4));
            CHECK(tm.t_power == 2);
            CHECK(tm.inv_sinh_power == 2);
            CHECK(tm.cosh_power == 0);
        }
    }
}

TEST_CASE("build rejects invalid dimensions") {
    CHECK_THROWS_AS(q_termsum(4), std::domain_error);
    CHECK_THROWS_AS(q_termsum(1), std::domain_error);
    CHECK_THROWS_AS(q_termsum(-3), std::domain_error);
}

TEST_CASE("q solves its radial heat equation exactly in the term algebra") {
    for (int d : {3, 5, 7, 9, 11}) CHECK(heat_defect_is_zero(d));
}

TEST_CASE("q_eval against multiprecision finite-difference oracle") {
    // covers both the small-delta series path (0.3) and the direct path
    for (int d : {3, 5, 7}) {
        for (double t : {0.3, 1.0}) {
            for (double delta : {0.3, 0.7, 1.2, 3.0}) {
                double lg = to_d(q_eval_scaled<double>(d, t, delta).log_abs());
                double ref = q_oracle_log(d, t, delta);
                CHECK(std::fabs(lg - ref) <= 1e-10);
                CHECK(q_eval_scaled<double>(d, t, delta).sign() == 1);
            }
        }
    }
}

TEST_CASE("d=3 closed form") {
    // q_{t,3}(cosh d) = e^{-t} (4 pi t)^{-3/2} (d/sinh d) e^{-d^2/4t}
    double t = 0.5;
    for (double delta : {0.0, 0.4, 2.0, 10.0}) {
        double ref_log = -t - 1.5 * std::log(4 * M_PI * t) - delta * delta / (4 * t);
        if (delta > 0) ref_log += std::log(delta / std::sinh(delta));
        MantExp v = q_eval(3, t, delta);
        CHECK(v.log_abs() == doctest::Approx(ref_log).epsilon(1e-14));
        CHECK(v.sign() == 1);
    }
    // delta = 0 limit: e^{-0.5} (2 pi)^{-3/2}
    MantExp v0 = q_eval(3, 0.5, 0.0);
    CHECK(v0.value() ==
          doctest::Approx(std::exp(-0.5) * std::pow(2 * M_PI, -1.5)).epsilon(1e-14));
}

TEST_CASE("series and direct paths agree across the switch point") {
    for (int d : {5, 7, 11}) {
        for (double t : {0.05, 0.7}) {
            for (double delta : {0.499, 0.501}) {
                double got = to_d(q_eval_scaled<double>(d, t, delta).log_abs());
                CHECK(std::fabs(got - q_oracle_log(d, t, delta)) <= 1e-10);
            }
        }
    }
}

TEST_CASE("no overflow at large delta; exponent dominated by the Gaussian") {
    double t = 0.3, delta = 60.0;
    Scaled<double> v = q_eval_scaled<double>(7, t, delta);
    CHECK(v.sign() == 1);
    double lg = to_d(v.log_abs());
    CHECK(std::isfinite(lg));
    // -delta^2/4t = -3000; remaining terms are O(delta)
    CHECK(lg < -2800.0);
    CHECK(lg > -3300.0);
    // exponent matches the mp oracle computed fully in logs
    mp100 t_m(t), d_m(delta);
    Scaled<mp100> vm = q_eval_scaled<mp100>(7, t_m, d_m);
    CHECK(std::fabs(lg - to_d(vm.log_abs())) <= 1e-10);
}

TEST_CASE("q positivity across the test grid") {
    for (int d : {3, 5, 7, 11}) {
        for (double t : {1e-3, 0.1, 1.0, 10.0}) {
            for (double delta = 0.0; delta <= 50.0; delta += 2.5) {
                CHECK(q_eval_scaled<double>(d, t, delta).sign() == 1);
            }
        }
    }
}

TEST_CASE("heat-equation residual via exact term algebra") {
    // dt-sum and laplacian-sum are distinct symbolic objects; their numeric
    // values agree to rounding.
    for (int d : {7, 11}) {
        for (double t : {0.2, 1.0}) {
            for (double delta : {0.3, 1.0, 4.0}) {
                auto u = q_dt_evaluator<double>(d).eval(t, delta);
                auto v = q_lap_evaluator<double>(d).eval(t, delta);
                auto diff = u - v;
                if (!diff.is_zero()) {
                    double rel = std::exp(to_d(diff.log_abs() - u.log_abs()));
                    CHECK(rel <= 1e-8);
                }
            }
        }
    }
}

TEST_CASE("millson dimension-shift residual") {
    CHECK(millson_check(3, 0.5, 1.0) <= 1e-13);
    CHECK(millson_check(5, 0.2, 2.0) <= 1e-13);
    CHECK(millson_check(3, 1.0, 1e-5) <= 1e-12);  // delta -> 0+ stays finite
    for (int d : {3, 5, 7}) {
        for (double t : {0.1, 0.5, 2.0}) {
            for (double delta : {0.05, 0.3, 1.0, 3.0, 8.0}) {
                CHECK(millson_check(d, t, delta) <= 1e-12);
            }
        }
    }
}

TEST_CASE("complex evaluation restricted to the real axis matches q_eval") {
    for (int d : {3, 7}) {
        for (double t : {0.3, 1.0}) {
            for (double delta : {0.2, 0.9, 4.0}) {
                auto c = q_eval_complex(d, t, delta, 0.0);
                MantExp r = q_eval(d, t, delta);
                CHECK(c.first.log_abs() == doctest::Approx(r.log_abs()).epsilon(1e-14));
                CHECK(c.first.sign() == r.sign());
                if (!c.second.is_zero())
                    CHECK(c.second.log_abs() - c.first.log_abs() < std::log(1e-14));
            }
        }
    }
}

TEST_CASE("complex evaluation at i pi/4 matches the d=3 closed form") {
    double t = 0.5;
    auto v = q_eval_complex(3, t, 0.0, M_PI / 4);
    // (i pi/4) / sin(pi/4) * i^{-1} is real: value = pref * (pi/4/sin(pi/4)) / (2t) * e^{pi^2/(64 t)}
    double ref_log = q_prefactor_log(3, t) - std::log(2 * t) +
                     std::log((M_PI / 4) / std::sin(M_PI / 4)) +
                     M_PI * M_PI / (16 * 4 * t);
    CHECK(v.first.log_abs() == doctest::Approx(ref_log).epsilon(1e-13));
    CHECK(v.first.sign() == 1);
    if (!v.second.is_zero())
        CHECK(v.second.log_abs() - v.first.log_abs() < std::log(1e-13));
}

TEST_CASE("complex oracle check at d=7") {
    // independent: 100-digit complex arithmetic on the same finite-difference
    // oracle, evaluated on the real axis then continued by Taylor in a small
    // imaginary offset is impractical; instead compare mp50 vs double paths.
    Cplx<double> z{1.0, 0.5};
    auto vd = q_eval_complex_scaled<double>(7, 0.4, z);
    Cplx<mp50> zm{mp50(1), mp50("0.5")};
    auto vm = q_eval_complex_scaled<mp50>(7, mp50("0.4"), zm);
    CHECK(to_d(vd.log_abs()) == doctest::Approx(to_d(vm.log_abs())).epsilon(1e-12));
    // and the phase
    double ph_d = std::atan2(to_d(vd.m.im), to_d(vd.m.re));
    double ph_m = std::atan2(to_d(vm.m.im), to_d(vm.m.re));
    CHECK(ph_d == doctest::Approx(ph_m).epsilon(1e-11));
}

TEST_CASE("pole proximity raises") {
    CHECK_THROWS_AS(q_eval_complex(7, 0.5, 1e-16, M_PI), pole_error);
}

TEST_CASE("public MantissaExponent invariants") {
    MantExp m = q_eval(7, 0.3, 1.2);
    CHECK(std::fabs(m.mantissa) >= 1.0);
    CHECK(std::fabs(m.mantissa) < 2.0);
    MantExp z{};
    CHECK(z.sign() == 0);
}
