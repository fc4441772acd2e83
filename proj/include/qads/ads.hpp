#pragma once

#include "qads/fiber.hpp"
#include "qads/hyperbolic.hpp"
#include "qads/quadrature.hpp"

#include <cmath>
#include <functional>
#include <stdexcept>
#include <vector>

namespace qads {

struct EvalContext {
    int n = 1;           // quaternionic dimension, total space dimension 4n+3
    double t = 0.5;
    SeriesTruncation trunc{};       // m_max = 0: certified automatic choice
    QuadratureSpec quad{};          // per-integral tolerances
    int max_precision_level = 2;    // 0: double, 1: 50-digit, 2: 100-digit

    EvalContext() { quad.rel_tol = 1e-10; }
    EvalContext(int n_, double t_) : EvalContext() { n = n_; t = t_; }
    void validate() const {
        if (n < 1) throw std::domain_error("EvalContext: n must be >= 1");
        if (!(t > 0)) throw std::domain_error("EvalContext: t must be > 0");
    }
};

struct KernelPoint {
    double r = 0.0;
    double eta = 0.0;
    void validate() const {
        if (r < 0) throw std::domain_error("KernelPoint: r must be >= 0");
        if (eta < 0 || eta >= pi_v<double>())
            throw std::domain_error("KernelPoint: eta must lie in [0, pi)");
    }
};

struct KernelValue {
    MantExp value;
    double error_estimate = 0.0;  // relative
    long quadrature_nodes = 0;
    long terms_summed = 0;
    int precision_level = 0;
    bool certified = true;
};

struct RadialMeasure {
    double constant = 1.0;
    std::function<double(double, double)> density;
};

// nu(dr,deta) = 8 pi^{2n+1}/Gamma(2n) sinh^{4n-1} r cosh^3 r sin^2 eta dr deta
inline RadialMeasure ads_measure(int n) {
    double gamma2n = 1.0;
    for (int k = 2; k < 2 * n; ++k) gamma2n *= k;
    RadialMeasure m;
    m.constant = 8.0 * std::pow(pi_v<double>(), 2 * n + 1) / gamma2n;
    m.density = [n](double r, double eta) {
        return std::pow(std::sinh(r), 4 * n - 1) * std::pow(std::cosh(r), 3) *
               std::sin(eta) * std::sin(eta);
    };
    return m;
}

namespace ads_detail {

// type-erased result of one templated evaluation
struct EvalMeta {
    MantExp value;
    double err_rel = 0.0;
    double cancel_nats = 0.0;  // log(intermediate scale) - log(result)
    long nodes = 0;
    long terms = 0;
    bool converged = true;
};

// delta' = arccosh(cosh r cosh y) computed through delta' - y, which stays
// accurate for small r where the direct difference would cancel.
template <class Real>
struct DeltaPrime {
    Real delta;  // delta'
    Real d2;     // delta'^2 - y^2
};

template <class Real>
DeltaPrime<Real> delta_prime(const Real& coshr, const Real& y) {
    using std::exp; using std::log; using std::sqrt;
    Real e2 = exp(-2 * y);
    Real c1 = coshr * (1 + e2) / 2;               // e^{-y} cosh r cosh y
    Real s1 = sqrt(c1 * c1 - e2);                 // e^{-y} sinh delta'
    Real dm = log(c1 + s1);                       // delta' - y
    return {y + dm, dm * (dm + 2 * y)};
}

// coarse bound used in tail majorants: |T_d(delta)| <= e^{C(t)} delta^{amax} e^{-kd delta}
// valid for delta >= 1 (sinh d >= 0.432 e^d, cosh d <= 0.568 e^d there)
struct TermsumBound {
    double log_c;
    int amax;
    int decay;  // kd = min(b - c) over terms = 2n+1
};

inline TermsumBound termsum_bound(int d, double t) {
    const HeatTermSum& s = q_termsum(d);
    double acc = 0.0;
    int amax = 0, decay = 1 << 20;
    for (const auto& tm : s.terms) {
        double c = std::fabs(static_cast<double>(tm.coeff)) *
                   std::pow(t, -tm.t_power) * std::pow(2.315, tm.inv_sinh_power) *
                   std::pow(0.568, tm.cosh_power);
        acc += c;
        amax = std::max(amax, tm.delta_power);
        decay = std::min(decay, tm.inv_sinh_power - tm.cosh_power);
    }
    return {std::log(acc), amax, decay};
}

inline double log_gaussian_sum_tail(double eta, double t, int K) {
    // sum_{|k| > K} e^{-(eta+2k pi)^2/4t}, eta in [0,pi): bounded by twice the
    // geometric envelope starting at the (K+1)-st shift
    double pi = pi_v<double>();
    double x1 = std::fabs(eta - 2 * (K + 1) * pi);
    double x1b = eta + 2 * (K + 1) * pi;
    double lead = std::max(-x1 * x1 / (4 * t), -x1b * x1b / (4 * t));
    double step = (4 * (K + 1) * pi * pi) / (4 * t);  // exponent gap to the next shift
    double geo = -std::log1p(-std::exp(-std::min(step, 700.0)));
    return std::log(4.0) + lead + geo;
}

constexpr double kPrecisionCapacity[3] = {33.0, 112.0, 227.0};

// ---------------------------------------------------------------------------
// theta representation: p = (e^t/sqrt(pi t)) sum_k Int_0^inf
//   sinh y sin(eta_k y/2t)/sin eta e^{(y^2-eta_k^2)/4t} q(cosh r cosh y) dy
// with (y^2 - delta'^2)/4t combined analytically in the exponent.
// ---------------------------------------------------------------------------
template <class Real>
EvalMeta theta_impl(int n, double td, double rd, double etad, QuadratureSpec quad,
                    double cancel_budget = 1e300) {
    using std::cos; using std::exp; using std::log; using std::sin; using std::sqrt;
    const int d = 4 * n + 3;
    const Real t(td), r(rd), eta(etad);
    const Real pi = pi_v<Real>();
    const double pid = pi_v<double>();
    const auto& TE = q_evaluator<Real>(d);
    const Real coshr = cosh(r);
    const double lncoshr = std::log(std::cosh(rd));
    const Real base_log = t - log(pi * t) / 2 + q_prefactor_log(d, t);
    const bool eta_zero = etad < 1e-10;

    // k-range from the Gaussian weights
    double w0 = -etad * etad / (4 * td);
    double cutoff = std::log(quad.rel_tol) + w0 - 9.0;
    int kmin = 0, kmax = 0;
    {
        auto wlog = [&](int k) {
            double ek = etad + 2 * k * pid;
            return -ek * ek / (4 * td);
        };
        while (kmin > -64 && wlog(kmin - 1) > cutoff) --kmin;
        while (kmax < 64 && wlog(kmax + 1) > cutoff) ++kmax;
        if (eta_zero) { kmin = 0; }  // paired form, k >= 0
    }
    std::vector<Scaled<Real>> W;
    std::vector<Real> etak;
    for (int k = kmin; k <= kmax; ++k) {
        Real ek = eta + 2 * k * pi;
        W.push_back(Scaled<Real>::exp_of_log(-ek * ek / (4 * t)));
        etak.push_back(ek);
    }

    double max_env = -std::numeric_limits<double>::infinity();
    const double sin_eta_log = eta_zero ? 0.0 : std::log(std::sin(etad));

    auto integrand = [&](const Real& y) -> Scaled<Real> {
        if (y <= Real(0)) return Scaled<Real>::zero();
        DeltaPrime<Real> dp = delta_prime(coshr, y);
        Scaled<Real> Tv = TE.eval(t, dp.delta);
        Real lsh = log_sinh(y);
        Scaled<Real> common =
            Tv * Scaled<Real>::exp_of_log(base_log + lsh - dp.d2 / (4 * t));
        double envlog = to_d(common.log_abs()) + w0 - sin_eta_log;
        if (envlog > max_env) max_env = envlog;
        Scaled<Real> ksum = Scaled<Real>::zero();
        if (eta_zero) {
            ksum = Scaled<Real>::from(y / (2 * t));
            Real b = pi * y / t;
            Real sb = sin(b), cb = cos(b);
            Real sk = Real(0), ck = Real(1);  // sin(k b), cos(k b)
            for (int k = 1; k <= kmax; ++k) {
                Real s2 = sk * cb + ck * sb;
                Real c2 = ck * cb - sk * sb;
                sk = s2; ck = c2;
                Real c = 2 * k * pi;
                ksum += W[static_cast<size_t>(k)] *
                        (2 * (y / (2 * t)) * ck - (c / t) * sk);
            }
        } else {
            Real a = eta * y / (2 * t), b = pi * y / t;
            Real sa = sin(a + kmin * b), ca = cos(a + kmin * b);
            Real sb = sin(b), cb = cos(b);
            for (size_t i = 0; i < W.size(); ++i) {
                ksum += W[i] * sa;
                Real s2 = sa * cb + ca * sb;
                Real c2 = ca * cb - sa * sb;
                sa = s2; ca = c2;
            }
            ksum = ksum * Scaled<Real>::exp_of_log(Real(-sin_eta_log));
        }
        return common * ksum;
    };

    // certified tail majorant for the y-integral
    TermsumBound tb = termsum_bound(d, td);
    double logWsum = 0.0;
    {
        double acc = -std::numeric_limits<double>::infinity();
        for (size_t i = 0; i < W.size(); ++i)
            acc = detail::log_add(acc, to_d(W[i].log_abs()));
        logWsum = acc;
    }
    double cmax = std::fabs(etad + 2.0 * kmax * pid) / td + 1.0;
    auto tail_log = [=](double U) {
        double dU = U + lncoshr;
        double lam = (tb.decay - 1) + lncoshr / (2 * td) - tb.amax / std::max(dU, 1.0);
        if (lam < 0.25) return 1e30;  // forces a larger U
        double poly = std::log1p(cmax + U / td) + tb.amax * std::log(std::max(dU, 1.0));
        return to_d(base_log) + logWsum - sin_eta_log + U - std::log(2.0) + tb.log_c +
               poly - (2 * U * lncoshr + lncoshr * lncoshr) / (4 * td) -
               tb.decay * dU - std::log(lam);
    };

    // peak seed: coarse double-precision scan of the k=0 envelope
    double peak = 1.0;
    {
        double best = -std::numeric_limits<double>::infinity();
        double span = 10.0 + 10.0 * std::sqrt(td) +
                      4.0 * td * (2 * n + 2) / std::max(lncoshr, 0.05);
        span = std::min(span, 400.0);
        const auto& TEd = q_evaluator<double>(d);
        for (int j = 1; j <= 64; ++j) {
            double y = span * j / 64.0;
            auto dp = delta_prime<double>(std::cosh(rd), y);
            double lg = to_d(TEd.eval(td, dp.delta).log_abs()) + log_sinh(y) -
                        dp.d2 / (4 * td);
            if (lg > best) { best = lg; peak = y; }
        }
    }

    // cheap pilot: skip the expensive pass when the cancellation exceeds what
    // this precision level can resolve
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
            bail.terms = static_cast<long>(W.size());
            bail.converged = true;
            return bail;
        }
        max_env = -std::numeric_limits<double>::infinity();
    }

    auto res = integrate_semi_infinite_scaled<Real>(integrand, quad, tail_log, peak);

    // tail of the discarded k's, bounded by the positive base integral
    double vbase_log;
    {
        QuadratureSpec loose = quad;
        loose.rel_tol = 1e-3;
        loose.cutoff = 0.0;
        auto fb = [&](const Real& y) -> Scaled<Real> {
            if (y <= Real(0)) return Scaled<Real>::zero();
            DeltaPrime<Real> dp = delta_prime(coshr, y);
            Scaled<Real> Tv = TE.eval(t, dp.delta);
            if (Tv.sign() < 0) Tv = -Tv;
            return Tv * Scaled<Real>::exp_of_log(base_log + log_sinh(y) -
                                                 dp.d2 / (4 * t));
        };
        auto tail2 = [=](double U) { return tail_log(U) - logWsum + sin_eta_log; };
        auto vb = integrate_semi_infinite_scaled<Real>(fb, loose, tail2, peak);
        vbase_log = to_d(vb.value.log_abs());
    }
    double ktail_log = vbase_log - sin_eta_log +
                       log_gaussian_sum_tail(etad, td, std::max(kmax, -kmin)) +
                       (eta_zero ? std::log1p(cmax) : 0.0);

    EvalMeta meta;
    meta.value = res.value.to_mantexp();
    double vlog = meta.value.is_zero() ? -1e30 : meta.value.log_abs();
    meta.err_rel = res.rel_err() + std::exp(res.tail_log - vlog) +
                   std::exp(ktail_log - vlog);
    meta.cancel_nats = std::max(0.0, max_env - vlog);
    meta.nodes = res.nodes;
    meta.terms = static_cast<long>(W.size());
    meta.converged = res.converged;
    return meta;
}

// ---------------------------------------------------------------------------
// spectral representation: the m-series is summed inside the integrand with a
// certified cutoff, then integrated against q over [0, inf).  The series is
// accumulated in plain arithmetic against a moving base-2 anchor; the
// e^{-m(m+2)t+mu} envelope is carried as an explicit exponent, and the sum
// stops per node once terms fall below the anchor by the working precision.
// ---------------------------------------------------------------------------
template <class Real>
struct SpectralSeries {
    Real xe2;     // 2 cos(eta)
    Real t2exp;   // e^{-2t}
    int m_max;

    SpectralSeries(const Real& t, const Real& eta, int m_max_)
        : xe2(2 * cos(eta)), t2exp(exp(-2 * t)), m_max(m_max_) {}

    // returns the sum and its largest-term log in env_log
    Scaled<Real> eval(const Real& t, const Real& u, double& env_log) const {
        using std::exp; using std::frexp; using std::ldexp; using std::log;
        using std::fabs;
        const Real q = exp(-2 * u);
        const Real cf = 1 + q;
        Real u0 = Real(1), u1 = xe2;          // U_m(cos eta) recurrence
        Real rt0 = Real(1), rt1 = cf;         // sinh-ratio * e^{-mu}
        Real cm = Real(1);                    // c_m = e^{-m(m+2)t+mu} as cm * 2^{ce2}
        long long ce2 = 0;
        Real rm = exp(u - 3 * t);             // c_{m+1}/c_m at m
        Real acc = Real(0);
        long long acc_e2 = 0;
        long long env_e2 = -(1LL << 40);
        double env_mant = 0;
        const long long drop_bits = std::numeric_limits<Real>::digits + 100;
        for (int m = 0; m <= m_max; ++m) {
            Real Ue = (m == 0) ? u0 : u1;
            Real Rt = (m == 0) ? rt0 : rt1;
            Real term = cm * Ue * Rt;
            if (term != Real(0)) {
                long long d2 = ce2 - acc_e2;
                if (d2 > 0) {
                    acc = ldexp(acc, static_cast<int>(-d2));
                    acc_e2 = ce2;
                    acc += term;
                } else {
                    acc += d2 > -drop_bits ? ldexp(term, static_cast<int>(d2)) : Real(0);
                }
                if (ce2 > env_e2) { env_e2 = ce2; env_mant = std::fabs(to_d(Ue * Rt) * to_d(cm)); }
            }
            if (m >= 1) {
                Real un = xe2 * u1 - u0;
                u0 = u1; u1 = un;
                Real rn = cf * rt1 - q * rt0;
                rt0 = rt1; rt1 = rn;
            }
            cm = cm * rm;
            rm = rm * t2exp;
            int k = 0;
            (void)frexp(cm, &k);
            if (k > 8 || k < -8) { cm = ldexp(cm, -k); ce2 += k; }
            if (rm < Real(1) && ce2 - acc_e2 < -drop_bits) break;  // past the peak
        }
        env_log = 0.6931471805599453 * static_cast<double>(env_e2) +
                  std::log(std::max(env_mant, 1e-300));
        Scaled<Real> out{acc, acc_e2};
        out.normalize();
        return out;
    }
};

template <class Real>
EvalMeta spectral_impl(int n, double td, double rd, double etad, QuadratureSpec quad,
                       int forced_m_max = 0, double cancel_budget = 1e300) {
    using std::cos; using std::exp; using std::log; using std::sin; using std::sqrt;
    const int d = 4 * n + 3;
    const Real t(td), r(rd), eta(etad);
    const double pid = pi_v<double>();
    const auto& TE = q_evaluator<Real>(d);
    const Real coshr = cosh(r);
    const double lncoshr = std::log(std::cosh(rd));
    const Real pref_log = q_prefactor_log(d, t);
    TermsumBound tb = termsum_bound(d, td);

    // upper truncation estimate for the u-integral (then refined by the
    // quadrature's own tail handling); the m-series bound carries the
    // e^{u^2/4t} growth which cancels against q's Gaussian
    auto tail_log_for = [&](double mtol_log) {
        return [=](double U) {
            double dU = U + lncoshr;
            double lam = (tb.decay - 2) + lncoshr / (2 * td) -
                         tb.amax / std::max(dU, 1.0);
            if (lam < 0.25) return 1e30;
            // series bound: sum <= (m_max+1)^2 e^{u^2/4t - u + t}
            double series = 2.0 * std::log(U / (2 * td) + 2.0) - U + td;
            return to_d(pref_log) + series + 2 * (U - std::log(2.0)) + tb.log_c +
                   tb.amax * std::log(std::max(dU, 1.0)) -
                   (2 * U * lncoshr + lncoshr * lncoshr) / (4 * td) - tb.decay * dU -
                   std::log(lam) - std::log(2.0);
        };
    };

    // peak of the u-envelope and its height, double precision scan
    double peak = 1.0 + std::sqrt(td) * (1 + etad);
    double peak_log = 0.0;
    {
        double best = -std::numeric_limits<double>::infinity();
        double span = std::min(400.0, 10.0 + 10.0 * std::sqrt(td) + 4.0 * td * (2 * n + 2));
        const auto& TEd = q_evaluator<double>(d);
        for (int j = 1; j <= 64; ++j) {
            double u = span * j / 64.0;
            auto dp = delta_prime<double>(std::cosh(rd), u);
            double lg = to_d(TEd.eval(td, dp.delta).log_abs()) + to_d(pref_log) +
                        2 * log_sinh(u) - dp.d2 / (4 * td) - u + td;
            if (lg > best) { best = lg; peak = u; }
        }
        peak_log = best;
    }

    // fixed truncation point: the m-series certificate must hold at the
    // largest argument actually integrated
    double Uest = std::max(4.0, 2 * peak);
    {
        auto tl = tail_log_for(0.0);
        while (Uest < 2000 && tl(Uest) > peak_log + std::log(quad.rel_tol) - 45.0)
            Uest = Uest * 1.3 + 1;
    }
    quad.cutoff = Uest;

    SeriesTruncation tr;
    if (forced_m_max > 0) {
        tr.m_max = forced_m_max;
        tr.tail_bound = 0.0;
    } else {
        tr = su2_truncation(td, Uest, quad.rel_tol * 1e-5);
    }

    SpectralSeries<Real> series(t, eta, tr.m_max);
    double max_env = -std::numeric_limits<double>::infinity();
    auto integrand = [&](const Real& u) -> Scaled<Real> {
        if (u <= Real(0)) return Scaled<Real>::zero();
        DeltaPrime<Real> dp = delta_prime(coshr, u);
        Scaled<Real> Tv = TE.eval(t, dp.delta);
        double series_env = 0.0;
        Scaled<Real> msum = series.eval(t, u, series_env);
        Real lsh = log_sinh(u);
        double expo_common = to_d(pref_log + 2 * lsh - dp.d2 / (4 * t) - u * u / (4 * t));
        Scaled<Real> val =
            msum * Tv *
            Scaled<Real>::exp_of_log(pref_log + 2 * lsh - dp.d2 / (4 * t) -
                                     u * u / (4 * t)) *
            (2 / pi_v<Real>());
        double envlog = to_d(Tv.log_abs()) + expo_common + series_env;
        if (envlog > max_env) max_env = envlog;
        return val;
    };

    // cheap pilot: if this precision level cannot resolve the cancellation,
    // skip the expensive pass and let the caller escalate
    if (cancel_budget < 1e299) {
        QuadratureSpec probe = quad;
        probe.rel_tol = 3e-2;
        probe.max_subdivisions = 100;
        auto pr = integrate_semi_infinite_scaled<Real>(integrand, probe,
                                                       tail_log_for(0.0), peak);
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

    auto res = integrate_semi_infinite_scaled<Real>(integrand, quad,
                                                    tail_log_for(0.0), peak);

    // certified m-tail: |discarded| <= tail_bound * Int sinh^2 u q du
    double mass0_log;
    {
        QuadratureSpec loose = quad;
        loose.rel_tol = 1e-3;
        auto fb = [&](const Real& u) -> Scaled<Real> {
            if (u <= Real(0)) return Scaled<Real>::zero();
            DeltaPrime<Real> dp = delta_prime(coshr, u);
            Scaled<Real> Tv = TE.eval(t, dp.delta);
            if (Tv.sign() < 0) Tv = -Tv;
            return Tv * Scaled<Real>::exp_of_log(pref_log + 2 * log_sinh(u) -
                                                 dp.d2 / (4 * t) - u * u / (4 * t));
        };
        auto vb = integrate_semi_infinite_scaled<Real>(fb, loose, tail_log_for(0.0),
                                                       peak);
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

// ---------------------------------------------------------------------------
// vertical axis r = 0: the k-th Fourier integral of the odd meromorphic
// f = sinh y T_d(y) is an exact residue series over the poles i j pi, giving
//   J(w) = pi sum_j e^{-j pi w} R_j(w)
// with polynomial R_j.  No oscillatory quadrature and no cancellation, so the
// cut-locus exponent -(eta^2 + 2 pi eta)/4t is produced to full precision at
// any t.
// ---------------------------------------------------------------------------
template <class Real>
EvalMeta origin_impl(int n, double td, double etad, double rel_tol) {
    using std::exp; using std::log; using std::sin; using std::sqrt; using std::fabs;
    const int d = 4 * n + 3;
    const Real t(td), eta(etad);
    const Real pi = pi_v<Real>();
    const double pid = pi_v<double>();
    const auto& rterms = origin_residue_terms(d);
    const Real base_log = t - log(pi * t) / 2 + q_prefactor_log(d, t) - log(sin(eta));

    int amax = 0, bmax = 0, pmax = 0;
    for (const auto& rt : rterms) {
        amax = std::max(amax, rt.a);
        bmax = std::max(bmax, rt.b);
        pmax = std::max(pmax, rt.t_power);
    }
    std::vector<Real> tp(static_cast<size_t>(pmax) + 1);
    tp[0] = Real(1);
    for (int p = 1; p <= pmax; ++p) tp[p] = tp[p - 1] / t;
    std::vector<std::vector<Real>> binom(static_cast<size_t>(amax) + 1);
    for (int a = 0; a <= amax; ++a) {
        binom[a].assign(static_cast<size_t>(a) + 1, Real(0));
        binom[a][0] = Real(1);
        for (int l = 1; l <= a; ++l)
            binom[a][l] = binom[a][l - 1] * Real(a - l + 1) / Real(l);
    }
    std::vector<Real> inv_fact(static_cast<size_t>(bmax) + 1);
    inv_fact[0] = Real(1);
    for (int m = 1; m <= bmax; ++m) inv_fact[m] = inv_fact[m - 1] / Real(m);

    // R_j(w), real arithmetic only: Re(i^{a-l+m}) selects even a-l+m
    auto residue_poly = [&](int j, const Real& w, Real& abs_acc) -> Real {
        Real jp = Real(j) * pi;
        std::vector<Real> jpw(static_cast<size_t>(amax) + 1),
            wpw(static_cast<size_t>(bmax) + 1);
        jpw[0] = Real(1);
        for (int i = 1; i <= amax; ++i) jpw[i] = jpw[i - 1] * jp;
        wpw[0] = Real(1);
        for (int i = 1; i <= bmax; ++i) wpw[i] = wpw[i - 1] * w;
        Real sum(0);
        for (const auto& rt : rterms) {
            int sgn_pow = rt.b + rt.c + 1;
            Real sigma = (sgn_pow % 2 == 0 || j % 2 == 0) ? Real(1) : Real(-1);
            Real term(0);
            for (size_t q = 0; q < rt.Q.size(); ++q) {
                for (int l = 0; l <= rt.a; ++l) {
                    int m = rt.b - 2 - 2 * static_cast<int>(q) - l;
                    if (m < 0) continue;
                    int nu = rt.a - l + m;
                    if (nu % 2 != 0) continue;
                    Real piece = static_cast<Real>(rt.Q[q]) * binom[rt.a][l] *
                                 jpw[rt.a - l] * wpw[m] * inv_fact[m];
                    if ((nu / 2) % 2 != 0) piece = -piece;
                    term += piece;
                }
            }
            Real contrib = static_cast<Real>(rt.coeff) * tp[rt.t_power] * sigma * term;
            sum += contrib;
            abs_acc += fabs(contrib);
        }
        return sum;
    };

    Scaled<Real> acc = Scaled<Real>::zero();
    double max_env = -1e300;
    long terms = 0;
    for (int kk = 0;; ++kk) {  // k = 0, -1, 1, -2, 2, ...
        int k = (kk % 2 == 0) ? kk / 2 : -(kk / 2 + 1);
        double ekd = etad + 2 * k * pid;
        double wd = std::fabs(ekd) / (2 * td);
        double sgn = ekd >= 0 ? 1.0 : -1.0;
        double klog = -ekd * ekd / (4 * td) - pid * wd;  // leading j=1 scale
        if (kk > 1) {
            double ref = acc.is_zero() ? -1e300 : to_d(acc.log_abs());
            if (klog + 40.0 < std::log(rel_tol) + ref && kk > 2) break;
            if (kk > 40) break;
        }
        Real w(wd);
        Scaled<Real> ksum = Scaled<Real>::zero();
        for (int j = 1; j <= 4000; ++j) {
            Real abs_acc(0);
            Real Rj = residue_poly(j, w, abs_acc);
            Scaled<Real> contrib =
                Scaled<Real>::exp_of_log(Real(-ekd * ekd / (4 * td)) -
                                         Real(j) * pi * w + base_log) *
                Rj * pi * Real(sgn);
            ksum += contrib;
            ++terms;
            if (abs_acc > Real(0)) {
                double envl = to_d(log(abs_acc)) - ekd * ekd / (4 * td) -
                              j * pid * wd + to_d(base_log);
                if (envl > max_env) max_env = envl;
            }
            // stop when the next residue cannot matter; for large j the ratio
            // is e^{-pi w} (1+1/j)^{amax}
            if (j >= 2 && !ksum.is_zero() && !contrib.is_zero()) {
                double ratio = -pid * wd + amax * std::log1p(1.0 / j);
                double next_log = to_d(contrib.log_abs()) + ratio;
                if (next_log < to_d(ksum.log_abs()) + std::log(rel_tol) - 16.0 &&
                    ratio < -0.05)
                    break;
            }
        }
        acc += ksum;
        if (kk > 80) break;
    }

    EvalMeta meta;
    meta.value = acc.to_mantexp();
    double vlog = meta.value.is_zero() ? -1e30 : meta.value.log_abs();
    meta.err_rel = rel_tol * 0.1;  // series terminated against rel_tol with margin
    meta.cancel_nats = std::max(0.0, max_env - vlog);
    meta.terms = terms;
    meta.converged = true;
    return meta;
}

template <class F>
KernelValue run_with_precision(const EvalContext& ctx, F&& impl) {
    const double need = -std::log(ctx.quad.rel_tol) + 2.3;
    EvalMeta meta;
    int lvl = 0;
    for (lvl = 0; lvl <= ctx.max_precision_level; ++lvl) {
        double budget = lvl < ctx.max_precision_level
                            ? kPrecisionCapacity[lvl] - need
                            : 1e300;
        meta = impl(lvl, budget);
        if (meta.cancel_nats + need <= kPrecisionCapacity[lvl] && meta.converged) break;
        if (lvl == ctx.max_precision_level) break;
    }
    KernelValue kv;
    kv.value = meta.value;
    kv.error_estimate = meta.err_rel;
    kv.quadrature_nodes = meta.nodes;
    kv.terms_summed = meta.terms;
    kv.precision_level = std::min(lvl, ctx.max_precision_level);
    kv.certified =
        meta.converged &&
        meta.cancel_nats + need <= kPrecisionCapacity[kv.precision_level];
    if (!kv.certified) {
        double lost = meta.cancel_nats - kPrecisionCapacity[kv.precision_level];
        kv.error_estimate = std::max(kv.error_estimate, std::exp(std::min(lost, 0.0)));
        if (lost > 0) kv.error_estimate = 1.0;
    }
    return kv;
}

}  // namespace ads_detail

inline KernelValue ads_kernel_theta(const EvalContext& ctx, const KernelPoint& p) {
    ctx.validate();
    p.validate();
    return ads_detail::run_with_precision(ctx, [&](int lvl, double budget) {
        if (lvl == 0)
            return ads_detail::theta_impl<double>(ctx.n, ctx.t, p.r, p.eta, ctx.quad,
                                                  budget);
        if (lvl == 1)
            return ads_detail::theta_impl<mp50>(ctx.n, ctx.t, p.r, p.eta, ctx.quad,
                                                budget);
        return ads_detail::theta_impl<mp100>(ctx.n, ctx.t, p.r, p.eta, ctx.quad, budget);
    });
}

inline KernelValue ads_kernel_spectral(const EvalContext& ctx, const KernelPoint& p) {
    ctx.validate();
    p.validate();
    int forced = ctx.trunc.m_max;
    return ads_detail::run_with_precision(ctx, [&](int lvl, double budget) {
        if (lvl == 0)
            return ads_detail::spectral_impl<double>(ctx.n, ctx.t, p.r, p.eta, ctx.quad,
                                                     forced, budget);
        if (lvl == 1)
            return ads_detail::spectral_impl<mp50>(ctx.n, ctx.t, p.r, p.eta, ctx.quad,
                                                   forced, budget);
        return ads_detail::spectral_impl<mp100>(ctx.n, ctx.t, p.r, p.eta, ctx.quad,
                                                forced, budget);
    });
}

// log-space evaluation on the vertical axis (r = 0, eta in (0, pi)); exact
// residue series, stable down to arbitrarily small t.  For eta/2t < 2 the
// residue series converges too slowly and the r = 0 quadrature path is
// cancellation-free there, so evaluation falls through to it.
inline KernelValue ads_kernel_origin_fiber(const EvalContext& ctx, double eta) {
    ctx.validate();
    if (!(eta > 0) || eta >= pi_v<double>())
        throw std::domain_error("ads_kernel_origin_fiber: eta must lie in (0, pi)");
    if (eta / (2 * ctx.t) < 2.0) return ads_kernel_theta(ctx, {0.0, eta});
    return ads_detail::run_with_precision(ctx, [&](int lvl, double) {
        if (lvl == 0)
            return ads_detail::origin_impl<double>(ctx.n, ctx.t, eta, ctx.quad.rel_tol);
        if (lvl == 1)
            return ads_detail::origin_impl<mp50>(ctx.n, ctx.t, eta, ctx.quad.rel_tol);
        return ads_detail::origin_impl<mp100>(ctx.n, ctx.t, eta, ctx.quad.rel_tol);
    });
}

// Int p_t dnu over [0,inf) x [0,pi] with a certified radial tail; expected 1.
inline double ads_mass(const EvalContext& ctx) {
    ctx.validate();
    const int n = ctx.n;
    const double t = ctx.t;
    RadialMeasure nu = ads_measure(n);
    EvalContext pctx = ctx;
    pctx.quad.rel_tol = 1e-9;

    auto p_at = [&](double r, double eta) {
        KernelValue kv = ads_kernel_theta(pctx, {r, eta});
        return kv.value.value();
    };

    // radial cutoff: beyond R the integrand is bounded by
    // C e^{(2n+1... ) r - r^2/4t}; grow R until negligible
    ads_detail::TermsumBound tb = ads_detail::termsum_bound(4 * n + 3, t);
    double R = 4.0 + 6.0 * std::sqrt(t) * (2 * n + 2);
    auto tail_mass_log = [&](double R_) {
        double rate = R_ / (2 * t) - (4 * n + 2);
        if (rate < 0.5) return 1e30;
        return std::log(nu.constant) + std::log(pi_v<double>()) + t + tb.log_c +
               tb.amax * std::log(R_ + 20.0) + std::log(40.0) +
               (4 * n + 2) * R_ - R_ * R_ / (4 * t) - std::log(rate);
    };
    while (tail_mass_log(R) > std::log(1e-7) && R < 400) R += 2.0;

    QuadratureSpec inner;
    inner.rel_tol = 1e-8;
    QuadratureSpec outer;
    outer.rel_tol = 1e-7;
    auto outer_f = [&](double r) {
        if (r <= 0) return 0.0;
        auto res = integrate_finite(
            [&](double eta) {
                if (eta <= 0 || eta >= pi_v<double>()) return 0.0;
                return p_at(r, eta) * nu.density(r, eta);
            },
            0.0, pi_v<double>(), inner);
        return res.value.value();
    };
    auto res = integrate_finite(outer_f, 0.0, R, outer);
    if (!res.converged)
        throw quadrature_error("ads_mass: radial quadrature did not converge");
    return nu.constant * res.value.value();
}

}  // namespace qads
