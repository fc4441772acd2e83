#pragma once

#include "qads/real.hpp"

#include <cmath>
#include <cstdint>
#include <limits>

namespace qads {

// Public mantissa/exponent value: value = mantissa * e^exponent with
// |mantissa| in [1,2) (or exactly 0).  The exponent is on the natural-log
// scale so that downstream asymptotic fits can consume log-values directly.
struct MantExp {
    double mantissa = 0.0;
    double exponent = 0.0;

    static MantExp from_log_sign(double log_abs, int sign) {
        if (sign == 0) return {};
        // pick k with |m| = e^{log_abs - k} in [1,2)
        double k = std::floor(log_abs / 0.6931471805599453) * 0.6931471805599453;
        double m = std::exp(log_abs - k);
        while (m >= 2.0) { m *= 0.5; k += 0.6931471805599453; }
        while (m < 1.0) { m *= 2.0; k -= 0.6931471805599453; }
        return {sign > 0 ? m : -m, k};
    }
    static MantExp from_double(double v) {
        if (v == 0.0 || !std::isfinite(v)) return {v, 0.0};
        return from_log_sign(std::log(std::fabs(v)), v > 0 ? 1 : -1);
    }
    double log_abs() const {
        if (mantissa == 0.0) return -std::numeric_limits<double>::infinity();
        return exponent + std::log(std::fabs(mantissa));
    }
    int sign() const { return mantissa > 0 ? 1 : (mantissa < 0 ? -1 : 0); }
    double value() const { return mantissa * std::exp(exponent); }
    bool is_zero() const { return mantissa == 0.0; }
};

// Internal scaled scalar: value = m * 2^e2.  The base-2 exponent keeps
// renormalisation exact (ldexp), so no log/exp rounding enters accumulation.
template <class Real>
struct Scaled {
    Real m{0};
    long long e2 = 0;

    static Scaled zero() { return {}; }

    static Scaled from(const Real& v) {
        Scaled s{v, 0};
        s.normalize();
        return s;
    }

    // e^{L} as a Scaled value, L given on the natural-log scale.
    static Scaled exp_of_log(const Real& L) {
        using std::exp; using std::floor;
        if (L < Real(-1e300)) return zero();
        Real k = floor(L / ln2_v<Real>());
        double kd = to_d(k);
        if (kd > 4.0e15) kd = 4.0e15;       // saturate; caller deals in logs anyway
        if (kd < -4.0e15) kd = -4.0e15;
        long long ki = static_cast<long long>(kd);
        Real rem = L - Real(ki) * ln2_v<Real>();
        Scaled s{exp(rem), ki};
        s.normalize();
        return s;
    }

    bool is_zero() const { return m == Real(0); }

    void normalize() {
        using std::frexp; using std::ldexp;
        if (m == Real(0)) { e2 = 0; return; }
        int k = 0;
        (void)frexp(m, &k);
        // keep |m| in [2^-8, 2^8): small window, exact shifts
        if (k > 8 || k < -8) {
            m = ldexp(m, -k);
            e2 += k;
        }
    }

    Scaled operator*(const Scaled& o) const {
        Scaled r{m * o.m, e2 + o.e2};
        r.normalize();
        return r;
    }
    Scaled operator*(const Real& c) const {
        Scaled r{m * c, e2};
        r.normalize();
        return r;
    }
    Scaled operator-() const { return {-m, e2}; }

    Scaled operator+(const Scaled& o) const {
        using std::ldexp;
        if (is_zero()) return o;
        if (o.is_zero()) return *this;
        const Scaled *hi = this, *lo = &o;
        if (o.e2 > e2) { hi = &o; lo = this; }
        long long d = lo->e2 - hi->e2;
        if (d < -int64_t(8) * std::numeric_limits<Real>::digits) return *hi;
        Scaled r{hi->m + ldexp(lo->m, static_cast<int>(d)), hi->e2};
        r.normalize();
        return r;
    }
    Scaled operator-(const Scaled& o) const { return *this + (-o); }
    Scaled& operator+=(const Scaled& o) { *this = *this + o; return *this; }

    Scaled pow_int(int k) const {  // k may be negative
        Scaled base = *this, r = from(Real(1));
        int n = k >= 0 ? k : -k;
        while (n) {
            if (n & 1) r = r * base;
            base = base * base;
            n >>= 1;
        }
        if (k < 0) {
            Scaled inv{Real(1) / r.m, 0};
            inv.normalize();
            inv.e2 -= r.e2;
            return inv;
        }
        return r;
    }

    Real log_abs() const {
        using std::log; using std::fabs;
        if (is_zero()) return Real(-std::numeric_limits<double>::infinity());
        return log(fabs(m)) + Real(e2) * ln2_v<Real>();
    }
    int sign() const { return m > 0 ? 1 : (m < 0 ? -1 : 0); }

    // |this| compared on log scale; safe for any magnitudes
    bool abs_less(const Scaled& o) const {
        using std::fabs; using std::ldexp;
        if (is_zero()) return !o.is_zero();
        if (o.is_zero()) return false;
        if (e2 != o.e2) {
            long long d = e2 - o.e2;
            if (d > 3) return false;
            if (d < -3) return true;
            return fabs(ldexp(m, static_cast<int>(d))) < fabs(o.m);
        }
        return fabs(m) < fabs(o.m);
    }

    double to_double() const {
        using std::ldexp;
        if (is_zero()) return 0.0;
        if (e2 > 1023) return m > 0 ? std::numeric_limits<double>::infinity()
                                    : -std::numeric_limits<double>::infinity();
        if (e2 < -1074) return 0.0;
        return std::ldexp(to_d(m), static_cast<int>(e2));
    }

    MantExp to_mantexp() const {
        if (is_zero()) return {};
        return MantExp::from_log_sign(to_d(log_abs()), sign());
    }
};

// Minimal complex-over-Real value (std::complex is not usable with
// multiprecision types).
template <class Real>
struct Cplx {
    Real re{0}, im{0};

    Cplx operator+(const Cplx& o) const { return {re + o.re, im + o.im}; }
    Cplx operator-(const Cplx& o) const { return {re - o.re, im - o.im}; }
    Cplx operator-() const { return {-re, -im}; }
    Cplx operator*(const Cplx& o) const {
        return {re * o.re - im * o.im, re * o.im + im * o.re};
    }
    Cplx operator*(const Real& c) const { return {re * c, im * c}; }
    Cplx conj() const { return {re, -im}; }
    Real abs2() const { return re * re + im * im; }
    Real abs() const { using std::sqrt; return sqrt(abs2()); }
    Cplx inv() const {
        Real d = abs2();
        return {re / d, -im / d};
    }
    Cplx operator/(const Cplx& o) const { return *this * o.inv(); }
};

template <class Real>
inline Cplx<Real> cexp(const Cplx<Real>& z) {
    using std::exp; using std::sin; using std::cos;
    Real e = exp(z.re);
    return {e * cos(z.im), e * sin(z.im)};
}
template <class Real>
inline Cplx<Real> csinh(const Cplx<Real>& z) {
    using std::sinh; using std::cosh; using std::sin; using std::cos;
    return {sinh(z.re) * cos(z.im), cosh(z.re) * sin(z.im)};
}
template <class Real>
inline Cplx<Real> ccosh(const Cplx<Real>& z) {
    using std::sinh; using std::cosh; using std::sin; using std::cos;
    return {cosh(z.re) * cos(z.im), sinh(z.re) * sin(z.im)};
}
template <class Real>
inline Cplx<Real> clog(const Cplx<Real>& z) {  // principal
    using std::log; using std::atan2;
    return {log(z.abs()), atan2(z.im, z.re)};
}
template <class Real>
inline Cplx<Real> csqrt(const Cplx<Real>& z) {  // principal
    using std::sqrt; using std::fabs;
    Real r = z.abs();
    if (r == Real(0)) return {Real(0), Real(0)};
    Real a = sqrt((r + fabs(z.re)) / 2);
    if (z.re >= Real(0)) {
        return {a, z.im / (2 * a)};
    }
    Real b = z.im >= Real(0) ? a : -a;
    return {z.im / (2 * b), b};
}
// principal arccosh: maps C minus (-inf,1] into {Re >= 0}
template <class Real>
inline Cplx<Real> cacosh(const Cplx<Real>& z) {
    Cplx<Real> one{Real(1), Real(0)};
    return clog(z + csqrt(z - one) * csqrt(z + one));
}
template <class Real>
inline Cplx<Real> cpow_int(Cplx<Real> base, int k) {
    Cplx<Real> r{Real(1), Real(0)};
    int n = k >= 0 ? k : -k;
    while (n) {
        if (n & 1) r = r * base;
        base = base * base;
        n >>= 1;
    }
    return k >= 0 ? r : r.inv();
}

// Scaled complex: value = m * 2^e2
template <class Real>
struct CScaled {
    Cplx<Real> m{};
    long long e2 = 0;

    static CScaled zero() { return {}; }
    static CScaled from(const Cplx<Real>& v) {
        CScaled s{v, 0};
        s.normalize();
        return s;
    }
    static CScaled from_scaled(const Scaled<Real>& s) { return {{s.m, Real(0)}, s.e2}; }
    // e^{L} for complex L: magnitude from Re L, phase from Im L
    static CScaled exp_of_log(const Cplx<Real>& L) {
        using std::sin; using std::cos;
        if (L.re < Real(-1e300)) return zero();
        Scaled<Real> mag = Scaled<Real>::exp_of_log(L.re);
        CScaled r{{mag.m * cos(L.im), mag.m * sin(L.im)}, mag.e2};
        r.normalize();
        return r;
    }
    bool is_zero() const { return m.re == Real(0) && m.im == Real(0); }
    void normalize() {
        using std::frexp; using std::ldexp; using std::fabs;
        if (is_zero()) { e2 = 0; return; }
        Real a = fabs(m.re) > fabs(m.im) ? m.re : m.im;
        int k = 0;
        (void)frexp(a, &k);
        if (k > 8 || k < -8) {
            m.re = ldexp(m.re, -k);
            m.im = ldexp(m.im, -k);
            e2 += k;
        }
    }
    CScaled operator*(const CScaled& o) const {
        CScaled r{m * o.m, e2 + o.e2};
        r.normalize();
        return r;
    }
    CScaled operator*(const Real& c) const {
        CScaled r{m * c, e2};
        r.normalize();
        return r;
    }
    CScaled operator+(const CScaled& o) const {
        using std::ldexp;
        if (is_zero()) return o;
        if (o.is_zero()) return *this;
        const CScaled *hi = this, *lo = &o;
        if (o.e2 > e2) { hi = &o; lo = this; }
        long long d = lo->e2 - hi->e2;
        if (d < -int64_t(8) * std::numeric_limits<Real>::digits) return *hi;
        CScaled r{{hi->m.re + ldexp(lo->m.re, static_cast<int>(d)),
                   hi->m.im + ldexp(lo->m.im, static_cast<int>(d))},
                  hi->e2};
        r.normalize();
        return r;
    }
    CScaled& operator+=(const CScaled& o) { *this = *this + o; return *this; }

    Real log_abs() const {
        using std::log;
        if (is_zero()) return Real(-std::numeric_limits<double>::infinity());
        return log(m.abs()) + Real(e2) * ln2_v<Real>();
    }
    Scaled<Real> real_part() const {
        Scaled<Real> s{m.re, e2};
        s.normalize();
        return s;
    }
    Scaled<Real> imag_part() const {
        Scaled<Real> s{m.im, e2};
        s.normalize();
        return s;
    }
};

}  // namespace qads
