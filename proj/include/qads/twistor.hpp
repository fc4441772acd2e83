#pragma once

#include "qads/ads.hpp"
#include "qads/operators.hpp"

#include <cmath>

namespace qads {

struct TwistorPoint {
    double r = 0.0;
    double phi = 0.0;  // CP^1 radial coordinate
    void validate() const {
        if (r < 0) throw std::domain_error("TwistorPoint: r must be >= 0");
        if (phi < 0 || phi > pi_v<double>() / 2)
            throw std::domain_error("TwistorPoint: phi must lie in [0, pi/2]");
    }
};

// invariant measure with the base-space constant adopted from the ads case;
// the fiber factor sin(2 phi) integrates to 1 over [0, pi/2]
inline RadialMeasure twistor_measure(int n) {
    RadialMeasure m = ads_measure(n);
    m.density = [n](double r, double phi) {
        return std::pow(std::sinh(r), 4 * n - 1) * std::pow(std::cosh(r), 3) *
               std::sin(2 * phi);
    };
    return m;
}

namespace ads_detail {

// Twistor fiber series sum_m e^{-4m(m+1)t} P_m(cos 2phi) sinh((2m+1)u).
// The twistor modes sit in the same radial family as the AdS ones at 2m, so
// the continued factor is sinh((2m+1)u) = sinh(u) U_{2m}(cosh u); the paper's
// printed P_m(cosh 2u) variant fails the component heat equation (see the
// twistor tests, which check the corrected component both ways).
// sinh((2m+1)u) e^{-2mu} obeys a stable two-step recurrence and the growth
// e^{-4m(m+1)t + 2mu} rides in an explicit base-2 exponent.
template <class Real>
struct TwistorSeries {
    Real x;      // cos(2 phi)
    Real t8exp;  // e^{-8t}
    int m_max;

    TwistorSeries(const Real& t, const Real& phi, int m_max_)
        : x(cos(2 * phi)), t8exp(exp(-8 * t)), m_max(m_max_) {}

    Scaled<Real> eval(const Real& t, const Real& u, double& env_log) const {
        using std::exp; using std::frexp; using std::ldexp; using std::sinh;
        const Real q = exp(-4 * u);           // e^{-4u}
        const Real cf = 1 + q;                // 2 cosh(2u) e^{-2u}
        Real p0 = Real(1), p1 = x;            // P_m(cos 2phi)
        Real s0 = sinh(u);                    // sinh((2m+1)u) e^{-2mu}
        Real s1 = exp(-2 * u) * sinh(3 * u);
        Real cm = Real(1);                    // e^{-4m(m+1)t+2mu}
        long long ce2 = 0;
        Real rm = exp(2 * u - 8 * t);         // c_{m+1}/c_m
        Real acc = Real(0);
        long long acc_e2 = 0;
        long long env_e2 = -(1LL << 40);
        double env_mant = 0;
        const long long drop_bits = std::numeric_limits<Real>::digits + 100;
        for (int m = 0; m <= m_max; ++m) {
            Real P = (m == 0) ? p0 : p1;
            Real S = (m == 0) ? s0 : s1;
            Real term = cm * P * S;
            if (term != Real(0)) {
                long long d2 = ce2 - acc_e2;
                if (d2 > 0) {
                    acc = ldexp(acc, static_cast<int>(-d2));
                    acc_e2 = ce2;
                    acc += term;
                } else {
                    acc += d2 > -drop_bits ? ldexp(term, static_cast<int>(d2)) : Real(0);
                }
                if (ce2 > env_e2) {
                    env_e2 = ce2;
                    env_mant = std::fabs(to_d(term));
                }
            }
            if (m >= 1) {
                Real pn = ((2 * m + 1) * x * p1 - m * p0) / Real(m + 1);
                p0 = p1; p1 = pn;
                Real sn = cf * s1 - q * s0;
                s0 = s1; s1 = sn;
            }
            cm = cm * rm;
            rm = rm * t8exp;
            int k = 0;
            (void)frexp(cm, &k);
            if (k > 8 || k < -8) { cm = ldexp(cm, -k); ce2 += k; }
            if (rm < Real(1) && ce2 - acc_e2 < -drop_bits) break;
        }
        env_log = 0.6931471805599453 * static_cast<double>(env_e2) +
                  std::log(std::max(env_mant, 1e-300));
        Scaled<Real> out{acc, acc_e2};
        out.normalize();
        return out;
    }
};

inline SeriesTruncation twistor_truncation(double t, double U, double tol) {
    auto lb = [&](int m) {
        return 0.5 * std::exp(-4.0 * m * (m + 1) * t + (2 * m + 1) * U);
    };
    auto rho = [&](int m) { return std::exp(-8.0 * (m + 1) * t + 2 * U); };
    int m_lo = static_cast<int>(U / (4 * t)) + 1;
    return detail::truncate_geometric(lb, rho, std::max(1, m_lo), tol);
}

template <class Real>
EvalMeta twistor_impl(int n, double td, double rd, double phid, QuadratureSpec quad,
                      int forced_m_max = 0, double cancel_budget = 1e300) {
    using std::cos; using std::exp; using std::log; using std::sqrt;
    const int d = 4 * n + 3;
    const Real t(td), r(rd), phi(phid);
    const auto& TE = q_evaluator<Real>(d);
    const Real coshr = cosh(r);
    const double lncoshr = std::log(std::cosh(rd));
    const Real pref_log = q_prefactor_log(d, t);
    TermsumBound tb = termsum_bound(d, td);

    auto tail_log = [=](double U) {
        double dU = U + lncoshr;
        double lam = (tb.decay - 1) + lncoshr / (2 * td) - tb.amax / std::max(dU, 1.0);
        if (lam < 0.25) return 1e30;
        // series bound: sum <= (m_max+1)/2 e^{u^2/4t + t}
        double series = std::log(U / (4 * td) + 2.0) + td - std::log(2.0);
        return to_d(pref_log) + series + (U - std::log(2.0)) + tb.log_c +
               tb.amax * std::log(std::max(dU, 1.0)) -
               (2 * U * lncoshr + lncoshr * lncoshr) / (4 * td) - tb.decay * dU -
               std::log(lam);
    };

    double peak = 1.0 + std::sqrt(td);
    double peak_log = 0.0;
    {
        double best = -std::numeric_limits<double>::infinity();
        double span = std::min(400.0, 10.0 + 10.0 * std::sqrt(td) + 4.0 * td * (2 * n + 2));
        const auto& TEd = q_evaluator<double>(d);
        for (int j = 1; j <= 64; ++j) {
            double u = span * j / 64.0;
            auto dp = delta_prime<double>(std::cosh(rd), u);
            double lg = to_d(TEd.eval(td, dp.delta).log_abs()) + to_d(pref_log) +
                        2 * log_sinh(u) - dp.d2 / (4 * td) + td;
            if (lg > best) { best = lg; peak = u; }
        }
        peak_log = best;
    }
    double Uest = std::max(4.0, 2 * peak);
    while (Uest < 2000 && tail_log(Uest) > peak_log + std::log(quad.rel_tol) - 45.0)
        Uest = Uest * 1.3 + 1;
    quad.cutoff = Uest;

    SeriesTruncation tr;
    if (forced_m_max > 0) {
        tr.m_max = forced_m_max;
    } else {
        tr = twistor_truncation(td, Uest, quad.rel_tol * 1e-5);
    }

    TwistorSeries<Real> series(t, phi, tr.m_max);
    double max_env = -std::numeric_limits<double>::infinity();
    auto integrand = [&](const Real& u) -> Scaled<Real> {
        if (u <= Real(0)) return Scaled<Real>::zero();
        DeltaPrime<Real> dp = delta_prime(coshr, u);
        Scaled<Real> Tv = TE.eval(t, dp.delta);
        double series_env = 0.0;
        Scaled<Real> msum = series.eval(t, u, series_env);
        Real lsh = log_sinh(u);
        double expo_common = to_d(pref_log + lsh - dp.d2 / (4 * t) - u * u / (4 * t));
        Scaled<Real> val = msum * Tv *
                           Scaled<Real>::exp_of_log(pref_log + lsh -
                                                    dp.d2 / (4 * t) - u * u / (4 * t));
        double envlog = to_d(Tv.log_abs()) + expo_common + series_env;
        if (envlog > max_env) max_env = envlog;
        return val;
    };

    if (cancel_budget < 1e299) {
        QuadratureSpec probe = quad;
        probe.rel_tol = 3e-2;
        probe.max_subdivisions = 100;
        auto pr = integrate_semi_infinite_scaled<Real>(integrand, probe, tail_log, peak);
        double vlog = pr.value.is_zero() ? -1e300 : to_d(pr.value.log_abs());
        double cancel_est = std::max(0.0, max_env - vlog);
        if (cancel_est > cancel_budget + 3.0) {
            EvalMeta bail;
            bail.value = pr.value.to_mantexp();
            bail.err_rel = 1.0;
            bail.cancel_nats = cancel_est;
            bail.nodes = pr.nodes;
            bail.terms = tr.m_max;
            bail.converged = true;
            return bail;
        }
        max_env = -std::numeric_limits<double>::infinity();
    }

    auto res = integrate_semi_infinite_scaled<Real>(integrand, quad, tail_log, peak);

    double mass0_log;
    {
        QuadratureSpec loose = quad;
        loose.rel_tol = 1e-3;
        auto fb = [&](const Real& u) -> Scaled<Real> {
            if (u <= Real(0)) return Scaled<Real>::zero();
            DeltaPrime<Real> dp = delta_prime(coshr, u);
            Scaled<Real> Tv = TE.eval(t, dp.delta);
            if (Tv.sign() < 0) Tv = -Tv;
            return Tv * Scaled<Real>::exp_of_log(pref_log + log_sinh(u) -
                                                 dp.d2 / (4 * t) - u * u / (4 * t));
        };
        auto vb = integrate_semi_infinite_scaled<Real>(fb, loose, tail_log, peak);
        mass0_log = to_d(vb.value.log_abs());
    }

    EvalMeta meta;
    meta.value = res.value.to_mantexp();
    double vlog = meta.value.is_zero() ? -1e30 : meta.value.log_abs();
    double mtail = tr.tail_bound > 0
                       ? std::exp(std::log(tr.tail_bound) + mass0_log - vlog)
                       : 0.0;
    meta.err_rel = res.rel_err() + std::exp(res.tail_log - vlog) + mtail;
    meta.cancel_nats = std::max(0.0, max_env - vlog);
    meta.nodes = res.nodes;
    meta.terms = tr.m_max;
    meta.converged = res.converged;
    return meta;
}

}  // namespace ads_detail

inline KernelValue twistor_kernel(const EvalContext& ctx, const TwistorPoint& p) {
    ctx.validate();
    p.validate();
    int forced = ctx.trunc.m_max;
    return ads_detail::run_with_precision(ctx, [&](int lvl, double budget) {
        if (lvl == 0)
            return ads_detail::twistor_impl<double>(ctx.n, ctx.t, p.r, p.phi, ctx.quad,
                                                    forced, budget);
        if (lvl == 1)
            return ads_detail::twistor_impl<mp50>(ctx.n, ctx.t, p.r, p.phi, ctx.quad,
                                                  forced, budget);
        return ads_detail::twistor_impl<mp100>(ctx.n, ctx.t, p.r, p.phi, ctx.quad,
                                               forced, budget);
    });
}

// Int h_t dnu over [0,inf) x [0,pi/2]; expected 1
inline double twistor_mass(const EvalContext& ctx) {
    ctx.validate();
    const int n = ctx.n;
    const double t = ctx.t;
    RadialMeasure nu = twistor_measure(n);
    EvalContext hctx = ctx;
    hctx.quad.rel_tol = 1e-9;

    ads_detail::TermsumBound tb = ads_detail::termsum_bound(4 * n + 3, t);
    double R = 4.0 + 6.0 * std::sqrt(t) * (2 * n + 2);
    auto tail_mass_log = [&](double R_) {
        double rate = R_ / (2 * t) - (4 * n + 2);
        if (rate < 0.5) return 1e30;
        return std::log(nu.constant) + t + tb.log_c + tb.amax * std::log(R_ + 20.0) +
               std::log(40.0) + (4 * n + 2) * R_ - R_ * R_ / (4 * t) - std::log(rate);
    };
    while (tail_mass_log(R) > std::log(1e-7) && R < 400) R += 2.0;

    QuadratureSpec inner;
    inner.rel_tol = 1e-8;
    QuadratureSpec outer;
    outer.rel_tol = 1e-7;
    auto outer_f = [&](double r) {
        if (r <= 0) return 0.0;
        auto res = integrate_finite(
            [&](double phi) {
                if (phi <= 0 || phi >= pi_v<double>() / 2) return 0.0;
                KernelValue kv = twistor_kernel(hctx, {r, phi});
                return kv.value.value() * nu.density(r, phi);
            },
            0.0, pi_v<double>() / 2, inner);
        return res.value.value();
    };
    auto res = integrate_finite(outer_f, 0.0, R, outer);
    if (!res.converged)
        throw quadrature_error("twistor_mass: radial quadrature did not converge");
    return nu.constant * res.value.value();
}

// residual of d_t h = L h on interior grid points
inline ResidualStats twistor_pde_residual(
    const EvalContext& ctx, const std::vector<std::pair<double, double>>& grid,
    StencilSpec st = {}) {
    EvalContext hctx = ctx;
    hctx.quad.rel_tol = 1e-10;
    auto logk = [&](double t, double r, double phi) {
        EvalContext c = hctx;
        c.t = t;
        return twistor_kernel(c, {r, phi}).value.log_abs();
    };
    return pde_residual_suite(ctx, logk, RadialOperator::twistor, grid, st);
}

}  // namespace qads
