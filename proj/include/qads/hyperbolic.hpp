#pragma once

#include "qads/heat_terms.hpp"
#include "qads/real.hpp"
#include "qads/scaled.hpp"

#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <stdexcept>
#include <utility>
#include <vector>

namespace qads {

struct pole_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// log of e^{-((d-1)/2)^2 t} / ((2 pi)^{(d-1)/2} sqrt(4 pi t))
template <class Real>
Real q_prefactor_log(int d, const Real& t) {
    using std::log;
    const Real pi = pi_v<Real>();
    int nu = (d - 1) / 2;
    return -Real(nu) * nu * t - Real(nu) * log(2 * pi) - log(4 * pi * t) / 2;
}

// Evaluates a HeatTermSum at real or complex delta.  Below |delta| = 1/2 the
// exact Laurent expansion around 0 is used (individual terms are singular
// there, the sum is not); above it terms are evaluated directly with scaled
// exponentials.
template <class Real>
class TermEvaluator {
public:
    explicit TermEvaluator(const HeatTermSum& s) {
        for (const auto& t : s.terms) {
            terms_.push_back({static_cast<Real>(t.coeff), t.t_power, t.delta_power,
                              t.inv_sinh_power, t.cosh_power});
            pmax_ = std::max(pmax_, t.t_power);
        }
        int max_pow = series_order();
        DeltaSeries ds = expand_small_delta(s, max_pow);
        int min_surviving = max_pow + 1;
        for (const auto& [pj, c] : ds.c) min_surviving = std::min(min_surviving, pj.second);
        if (min_surviving < 0)
            throw std::logic_error("TermEvaluator: Laurent part failed to cancel");
        std::map<int, std::vector<std::pair<int, Real>>> grouped;
        for (const auto& [pj, c] : ds.c) {
            grouped[pj.first].push_back({pj.second, static_cast<Real>(c)});
            jmax_ = std::max(jmax_, pj.second);
        }
        for (auto& [p, jc] : grouped) series_.push_back({p, std::move(jc)});
    }

    Scaled<Real> eval(const Real& t, const Real& delta) const {
        using std::fabs; using std::exp;
        std::vector<Real> tp = tpow_table(t);
        if (fabs(delta) < Real(0.5)) {
            std::vector<Real> dpow(static_cast<size_t>(jmax_) + 1);
            dpow[0] = Real(1);
            for (int j = 1; j <= jmax_; ++j) dpow[j] = dpow[j - 1] * delta;
            Real total(0);
            for (const auto& se : series_) {
                Real acc(0);
                for (const auto& [j, c] : se.jc) acc += c * dpow[j];
                total += acc * tp[se.p];
            }
            return Scaled<Real>::from(total);
        }
        Real e2 = exp(-2 * delta);
        Scaled<Real> X = Scaled<Real>::exp_of_log(delta);
        Scaled<Real> sh = X * ((1 - e2) / 2);
        Scaled<Real> ch = X * ((1 + e2) / 2);
        Scaled<Real> sum = Scaled<Real>::zero();
        for (const auto& tm : terms_) {
            Scaled<Real> v = Scaled<Real>::from(tm.coeff * tp[tm.p] * ipow(delta, tm.a));
            if (tm.b) v = v * sh.pow_int(-tm.b);
            if (tm.c) v = v * ch.pow_int(tm.c);
            sum += v;
        }
        return sum;
    }

    CScaled<Real> eval_complex(const Real& t, const Cplx<Real>& delta) const {
        std::vector<Real> tp = tpow_table(t);
        if (delta.abs() < Real(0.5)) {
            std::vector<Cplx<Real>> dpow(static_cast<size_t>(jmax_) + 1);
            dpow[0] = {Real(1), Real(0)};
            for (int j = 1; j <= jmax_; ++j) dpow[j] = dpow[j - 1] * delta;
            Cplx<Real> total{};
            for (const auto& se : series_) {
                Cplx<Real> acc{};
                for (const auto& [j, c] : se.jc) acc = acc + dpow[j] * c;
                total = total + acc * tp[se.p];
            }
            return CScaled<Real>::from(total);
        }
        Cplx<Real> e2 = cexp(Cplx<Real>{-2 * delta.re, -2 * delta.im});
        CScaled<Real> X = CScaled<Real>::exp_of_log(delta);
        CScaled<Real> sh = X * CScaled<Real>::from({(Real(1) - e2.re) / 2, -e2.im / 2});
        CScaled<Real> ch = X * CScaled<Real>::from({(Real(1) + e2.re) / 2, e2.im / 2});
        if (to_d(sh.log_abs()) < std::log(1e-12))
            throw pole_error("termsum evaluation too close to a pole of sinh");
        CScaled<Real> shinv = cscaled_inv(sh);
        CScaled<Real> sum = CScaled<Real>::zero();
        for (const auto& tm : terms_) {
            CScaled<Real> v =
                CScaled<Real>::from(cpow_int(delta, tm.a) * (tm.coeff * tp[tm.p]));
            if (tm.b) v = v * cscaled_pow(tm.b >= 0 ? shinv : sh, std::abs(tm.b));
            if (tm.c) v = v * cscaled_pow(ch, tm.c);
            sum += v;
        }
        return sum;
    }

private:
    struct Term {
        Real coeff;
        int p, a, b, c;
    };
    std::vector<Term> terms_;
    struct SeriesGroup {
        int p;
        std::vector<std::pair<int, Real>> jc;
    };
    std::vector<SeriesGroup> series_;
    int pmax_ = 0;
    int jmax_ = 0;

    static int series_order() {
        // truncation ratio per delta^2-order at |delta|=1/2 is (1/2pi)^2 ~ 0.025
        int digits = std::numeric_limits<Real>::digits10;
        return 2 * (static_cast<int>(0.63 * (digits + 5)) + 6);
    }
    std::vector<Real> tpow_table(const Real& t) const {
        std::vector<Real> tp(static_cast<size_t>(pmax_) + 1);
        tp[0] = Real(1);
        Real tinv = Real(1) / t;
        for (int p = 1; p <= pmax_; ++p) tp[p] = tp[p - 1] * tinv;
        return tp;
    }
    static Real ipow(const Real& x, int a) {
        Real r(1);
        for (int i = 0; i < a; ++i) r *= x;
        return r;
    }
    static CScaled<Real> cscaled_inv(const CScaled<Real>& z) {
        CScaled<Real> r{z.m.inv(), -z.e2};
        r.normalize();
        return r;
    }
    static CScaled<Real> cscaled_pow(const CScaled<Real>& z, int k) {
        CScaled<Real> r = CScaled<Real>::from({Real(1), Real(0)});
        CScaled<Real> base = z;
        while (k) {
            if (k & 1) r = r * base;
            base = base * base;
            k >>= 1;
        }
        return r;
    }
};

namespace detail {
template <class Real, int Which>
const TermEvaluator<Real>& cached_evaluator(int d) {
    static std::map<int, std::unique_ptr<TermEvaluator<Real>>> cache;
    static std::mutex mtx;
    const HeatTermSum* s = nullptr;
    if constexpr (Which == 0) s = &q_termsum(d);
    else if constexpr (Which == 1) s = &q_ddelta_termsum(d);
    else if constexpr (Which == 2) s = &q_dt_termsum(d);
    else s = &q_lap_termsum(d);
    std::lock_guard<std::mutex> lk(mtx);
    auto it = cache.find(d);
    if (it == cache.end())
        it = cache.emplace(d, std::make_unique<TermEvaluator<Real>>(*s)).first;
    return *it->second;
}
}  // namespace detail

template <class Real>
const TermEvaluator<Real>& q_evaluator(int d) {
    return detail::cached_evaluator<Real, 0>(d);
}
template <class Real>
const TermEvaluator<Real>& q_ddelta_evaluator(int d) {
    return detail::cached_evaluator<Real, 1>(d);
}
template <class Real>
const TermEvaluator<Real>& q_dt_evaluator(int d) {
    return detail::cached_evaluator<Real, 2>(d);
}
template <class Real>
const TermEvaluator<Real>& q_lap_evaluator(int d) {
    return detail::cached_evaluator<Real, 3>(d);
}

// q_{t,d}(cosh delta) as a scaled value; Gaussian and prefactor folded into
// the exponent so deep-underflow arguments stay finite.
template <class Real>
Scaled<Real> q_eval_scaled(int d, const Real& t, const Real& delta) {
    if (t <= Real(0)) throw std::domain_error("q_eval: t must be positive");
    if (delta < Real(0)) throw std::domain_error("q_eval: delta must be >= 0");
    Real expo = q_prefactor_log(d, t) - delta * delta / (4 * t);
    return q_evaluator<Real>(d).eval(t, delta) * Scaled<Real>::exp_of_log(expo);
}

inline MantExp q_eval(int d, double t, double delta) {
    return q_eval_scaled<double>(d, t, delta).to_mantexp();
}

template <class Real>
CScaled<Real> q_eval_complex_scaled(int d, const Real& t, const Cplx<Real>& delta) {
    if (t <= Real(0)) throw std::domain_error("q_eval_complex: t must be positive");
    if (delta.re < Real(0))
        throw std::domain_error("q_eval_complex: Re(delta) must be >= 0");
    Cplx<Real> d2 = delta * delta;
    Cplx<Real> expo{q_prefactor_log(d, t) - d2.re / (4 * t), -d2.im / (4 * t)};
    return q_evaluator<Real>(d).eval_complex(t, delta) * CScaled<Real>::exp_of_log(expo);
}

// complex kernel value as a (real part, imaginary part) MantissaExponent pair
inline std::pair<MantExp, MantExp> q_eval_complex(int d, double t,
                                                  double delta_re, double delta_im) {
    CScaled<double> v = q_eval_complex_scaled<double>(d, t, {delta_re, delta_im});
    return {v.real_part().to_mantexp(), v.imag_part().to_mantexp()};
}

// Relative residual of the dimension-shift identity
//   q_{t,d+2}(cosh d) = -(e^{-dt} / (2 pi sinh d)) d_delta q_{t,d}(cosh d),
// with the delta-derivative taken exactly in the term algebra.
inline double millson_check(int d, double t, double delta) {
    if (delta <= 0) throw std::domain_error("millson_check: delta must be > 0");
    using S = Scaled<double>;
    S lhs = q_eval_scaled<double>(d + 2, t, delta);
    S dq = q_ddelta_evaluator<double>(d).eval(t, delta) *
           S::exp_of_log(q_prefactor_log(d, t) - delta * delta / (4 * t));
    double log_sinh = delta + std::log1p(-std::exp(-2 * delta)) - std::log(2.0);
    S rhs = dq * S::exp_of_log(-d * t - std::log(2 * pi_v<double>()) - log_sinh);
    S diff = lhs + rhs;
    if (diff.is_zero()) return 0.0;
    return std::exp(to_d(diff.log_abs() - lhs.log_abs()));
}

}  // namespace qads
