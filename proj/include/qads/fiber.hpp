#pragma once

#include "qads/quadrature.hpp"
#include "qads/real.hpp"
#include "qads/scaled.hpp"
#include "qads/special.hpp"

#include <cmath>
#include <stdexcept>

namespace qads {

struct SeriesTruncation {
    int m_max = 0;
    int k_max = 0;
    double tail_bound = 0.0;  // certified bound on the discarded mass
};

namespace detail {
// smallest M with bound(M+1)/(1-ratio) <= tol, bound decreasing geometrically
template <class G, class Rho>
SeriesTruncation truncate_geometric(G&& bound, Rho&& ratio, int m_lo, double tol) {
    for (int M = m_lo;; ++M) {
        if (M > 2000000) throw std::runtime_error("series truncation did not close");
        double rho = ratio(M + 1);
        if (rho >= 1.0) continue;
        double tail = bound(M + 1) / (1.0 - rho);
        if (tail <= tol) return {M, 0, tail};
    }
}
}  // namespace detail

// Certified m-cutoff for the SU(2) series with continued argument up to Y:
// |term_m| <= (2/pi)(m+1)^2 e^{-m(m+2)t + mY}.
inline SeriesTruncation su2_truncation(double t, double Y, double tol) {
    auto lb = [&](int m) {
        return 2 / pi_v<double>() * (m + 1.0) * (m + 1.0) *
               std::exp(-m * (m + 2.0) * t + m * Y);
    };
    auto rho = [&](int m) {
        return std::pow((m + 2.0) / (m + 1.0), 2) * std::exp(-(2 * m + 3.0) * t + Y);
    };
    int m_lo = static_cast<int>(Y / (2 * t)) + 1;
    return detail::truncate_geometric(lb, rho, std::max(1, m_lo), tol);
}

// Certified m-cutoff for the CP^1 series with continued argument up to U:
// |term_m| <= (2m+1) e^{-4m(m+1)t + 2mU}  (P_m(cosh 2u) <= e^{2mu}).
inline SeriesTruncation cp1_truncation(double t, double U, double tol) {
    auto lb = [&](int m) { return (2 * m + 1.0) * std::exp(-4.0 * m * (m + 1) * t + 2.0 * m * U); };
    auto rho = [&](int m) {
        return (2 * m + 3.0) / (2 * m + 1.0) * std::exp(-8.0 * (m + 1) * t + 2 * U);
    };
    int m_lo = static_cast<int>(U / (4 * t)) + 1;
    return detail::truncate_geometric(lb, rho, std::max(1, m_lo), tol);
}

// s_t(eta, u) = (2/pi) sum_m e^{-m(m+2)t} U_m(cos eta) U_m(cos u);
// U_m recurrences handle the eta = 0 / u = 0 limits exactly.
template <class Real>
Real su2_kernel_spectral(const Real& t, const Real& eta, const Real& u,
                         const SeriesTruncation* trunc = nullptr) {
    using std::cos; using std::exp;
    if (t <= Real(0)) throw std::domain_error("su2_kernel_spectral: t must be > 0");
    SeriesTruncation tr = trunc ? *trunc : su2_truncation(to_d(t), 0.0, 1e-18);
    Real xe = cos(eta), xu = cos(u);
    Real ue0 = Real(1), ue1 = 2 * xe;
    Real uu0 = Real(1), uu1 = 2 * xu;
    Real f = Real(1);                      // e^{-m(m+2)t}
    Real g = exp(-3 * t);                  // ratio f_{m+1}/f_m at m=0
    Real g_step = exp(-2 * t);
    Real sum = Real(0);
    for (int m = 0; m <= tr.m_max; ++m) {
        Real Ue = (m == 0) ? ue0 : ue1;
        Real Uu = (m == 0) ? uu0 : uu1;
        sum += f * Ue * Uu;
        if (m >= 1) {
            Real ue2 = 2 * xe * ue1 - ue0;
            ue0 = ue1; ue1 = ue2;
            Real uu2 = 2 * xu * uu1 - uu0;
            uu0 = uu1; uu1 = uu2;
        }
        f *= g;
        g *= g_step;
    }
    return 2 / pi_v<Real>() * sum;
}

// Theta (Poisson-summed) representation.  The sinh*exp products are combined
// into pure Gaussians e^{-(u -+ eta_k)^2/4t}, so nothing overflows; removable
// sin eta / sin u zeros are replaced by their analytic limits.
template <class Real>
Real su2_kernel_theta(const Real& t, const Real& eta, const Real& u, int k_max = 0) {
    using std::exp; using std::sin; using std::sqrt; using std::fabs;
    if (t <= Real(0)) throw std::domain_error("su2_kernel_theta: t must be > 0");
    const Real pi = pi_v<Real>();
    const Real tiny = Real(1e-8);
    const Real pref = exp(t) / sqrt(pi * t);
    auto E = [&](const Real& x) { return exp(-x * x / (4 * t)); };
    int K = k_max > 0 ? k_max : (3 + static_cast<int>(to_d(t)));
    bool eta0 = fabs(eta) < tiny, u0 = fabs(u) < tiny;
    if (eta0 && u0) {
        // s(0,0) = pref/(2t) [1 + 2 sum_{k>=1} e^{-(2kpi)^2/4t}(1-(2kpi)^2/2t)]
        Real s = Real(1);
        for (int k = 1; k <= K; ++k) {
            Real c = 2 * k * pi;
            s += 2 * E(c) * (1 - c * c / (2 * t));
        }
        return pref * s / (2 * t);
    }
    if (eta0 || u0) {
        // one angle at its limit: s(0,v) = pref/sin(v) sum_{k in Z} ((v+2kpi)/2t) E(v+2kpi)
        Real v = eta0 ? u : eta;
        Real s = (v / (2 * t)) * E(v);
        for (int k = 1; k <= K; ++k) {
            Real cp = v + 2 * k * pi, cm = v - 2 * k * pi;
            s += (cp / (2 * t)) * E(cp) + (cm / (2 * t)) * E(cm);
        }
        return pref * s / sin(v);
    }
    Real s = Real(0);
    for (int k = -K; k <= K; ++k) {
        Real ek = eta + 2 * k * pi;
        s += (E(u - ek) - E(u + ek)) / 2;
    }
    return pref * s / (sin(eta) * sin(u));
}

enum class ContinuedForm { spectral, theta };

template <class Real>
Real sinh_stable(const Real& y) {
    using std::sinh;
    return sinh(y);
}

template <class Real>
Real log_sinh(const Real& y) {  // log sinh y for y > 0, stable for large y
    using std::log; using std::exp;
    if (y > Real(20)) return y + log(Real(1) - exp(-2 * y)) - ln2_v<Real>();
    return log(sinh_stable(y));
}

// Analytic continuation s_t(eta, -iy): returned scaled since it grows like
// e^{y^2/4t}; callers cancel that growth against the hyperbolic Gaussian.
template <class Real>
Scaled<Real> su2_kernel_continued(const Real& t, const Real& eta, const Real& y,
                                  ContinuedForm form,
                                  const SeriesTruncation* trunc = nullptr) {
    using std::exp; using std::sin; using std::cos; using std::cosh;
    using std::sqrt; using std::fabs; using std::log;
    if (t <= Real(0)) throw std::domain_error("su2_kernel_continued: t must be > 0");
    const Real pi = pi_v<Real>();
    const Real tiny = Real(1e-8);
    bool eta0 = fabs(eta) < tiny, y0 = fabs(y) < tiny;
    if (form == ContinuedForm::spectral) {
        SeriesTruncation tr =
            trunc ? *trunc : su2_truncation(to_d(t), to_d(y), 1e-18);
        Real xe = cos(eta);
        Real ue0 = Real(1), ue1 = 2 * xe;
        // sinh((m+1)y)/sinh(y) satisfies the same recurrence with 2cosh(y)
        Scaled<Real> r0 = Scaled<Real>::from(Real(1));
        Scaled<Real> r1 = Scaled<Real>::from(2 * cosh(y));
        Real f = Real(1), g = exp(-3 * t), g_step = exp(-2 * t);
        Scaled<Real> sum = Scaled<Real>::zero();
        for (int m = 0; m <= tr.m_max; ++m) {
            Real Ue = (m == 0) ? ue0 : ue1;
            Scaled<Real> R = y0 ? Scaled<Real>::from(Real(m + 1))
                                : ((m == 0) ? r0 : r1);
            sum += R * (f * Ue);
            if (m >= 1) {
                Real ue2 = 2 * xe * ue1 - ue0;
                ue0 = ue1; ue1 = ue2;
                if (!y0) {
                    Scaled<Real> r2 = r1 * (2 * cosh(y)) - r0;
                    r0 = r1; r1 = r2;
                }
            }
            f *= g;
            g *= g_step;
        }
        return sum * (2 / pi);
    }
    // theta form: pref sum_k sin(eta_k y/2t) e^{(y^2-eta_k^2)/4t} / (sin eta sinh y)
    int K = 3 + static_cast<int>(to_d(t));
    Scaled<Real> pref = Scaled<Real>::exp_of_log(t - log(pi * t) / 2);
    Scaled<Real> sum = Scaled<Real>::zero();
    auto gauss = [&](const Real& ek) {
        return Scaled<Real>::exp_of_log((y * y - ek * ek) / (4 * t));
    };
    if (eta0 && y0) {
        // limits sin(eta_k y/2t)/(sin eta sinh y) -> eta_k/(2t) paired over +-k
        Real s = Real(1) / (2 * t);
        Scaled<Real> acc = Scaled<Real>::from(s);
        for (int k = 1; k <= K; ++k) {
            Real c = 2 * k * pi;
            acc += gauss(c) * (2 / (2 * t) * (1 - c * c / (2 * t)));
        }
        return acc * pref;
    }
    if (eta0) {
        // paired +-k limit: [2(y/2t)cos(c y/2t) - (c/t) sin(c y/2t)] e^{(y^2-c^2)/4t},
        // c = 2k pi; the second piece comes from the eta-derivative of the Gaussian
        Scaled<Real> acc = Scaled<Real>::exp_of_log(y * y / (4 * t)) * (y / (2 * t));
        for (int k = 1; k <= K; ++k) {
            Real c = 2 * k * pi;
            acc += gauss(c) *
                   (2 * (y / (2 * t)) * cos(c * y / (2 * t)) - (c / t) * sin(c * y / (2 * t)));
        }
        return acc * pref * Scaled<Real>::exp_of_log(-log_sinh(y));
    }
    if (y0) {
        Scaled<Real> acc = Scaled<Real>::zero();
        for (int k = -K; k <= K; ++k) {
            Real ek = eta + 2 * k * pi;
            acc += gauss(ek) * (ek / (2 * t));
        }
        return acc * (Real(1) / sin(eta)) * pref;
    }
    Scaled<Real> acc = Scaled<Real>::zero();
    for (int k = -K; k <= K; ++k) {
        Real ek = eta + 2 * k * pi;
        acc += gauss(ek) * sin(ek * y / (2 * t));
    }
    Scaled<Real> shinv = Scaled<Real>::exp_of_log(-log_sinh(y));
    return acc * (Real(1) / sin(eta)) * shinv * pref;
}

// u_t(phi, psi) = sum_m (2m+1) e^{-4m(m+1)t} P_m(cos 2phi) P_m(cos 2psi)
template <class Real>
Real cp1_kernel(const Real& t, const Real& phi, const Real& psi,
                const SeriesTruncation* trunc = nullptr) {
    using std::cos; using std::exp;
    if (t <= Real(0)) throw std::domain_error("cp1_kernel: t must be > 0");
    SeriesTruncation tr = trunc ? *trunc : cp1_truncation(to_d(t), 0.0, 1e-18);
    Real x = cos(2 * phi), z = cos(2 * psi);
    Real p0 = Real(1), p1 = x, q0 = Real(1), q1 = z;
    Real f = Real(1), g = exp(-8 * t), g_step = exp(-8 * t);
    Real sum = Real(0);
    for (int m = 0; m <= tr.m_max; ++m) {
        Real P = (m == 0) ? p0 : p1;
        Real Q = (m == 0) ? q0 : q1;
        sum += (2 * m + 1) * f * P * Q;
        if (m >= 1) {
            Real p2 = ((2 * m + 1) * x * p1 - m * p0) / Real(m + 1);
            p0 = p1; p1 = p2;
            Real q2 = ((2 * m + 1) * z * q1 - m * q0) / Real(m + 1);
            q0 = q1; q1 = q2;
        }
        f *= g;
        g *= g_step;
    }
    return sum;
}

// Continuation in the second slot: psi -> -iu, i.e. P_m(cosh 2u).
template <class Real>
Scaled<Real> cp1_kernel_continued(const Real& t, const Real& phi, const Real& u,
                                  const SeriesTruncation* trunc = nullptr) {
    using std::cos; using std::cosh; using std::exp;
    if (t <= Real(0)) throw std::domain_error("cp1_kernel_continued: t must be > 0");
    SeriesTruncation tr = trunc ? *trunc : cp1_truncation(to_d(t), to_d(u), 1e-18);
    Real x = cos(2 * phi), z = cosh(2 * u);
    Real p0 = Real(1), p1 = x;
    Scaled<Real> q0 = Scaled<Real>::from(Real(1)), q1 = Scaled<Real>::from(z);
    Real f = Real(1), g = exp(-8 * t), g_step = exp(-8 * t);
    Scaled<Real> sum = Scaled<Real>::zero();
    for (int m = 0; m <= tr.m_max; ++m) {
        Real P = (m == 0) ? p0 : p1;
        Scaled<Real> Q = (m == 0) ? q0 : q1;
        sum += Q * ((2 * m + 1) * f * P);
        if (m >= 1) {
            Real p2 = ((2 * m + 1) * x * p1 - m * p0) / Real(m + 1);
            p0 = p1; p1 = p2;
            Scaled<Real> q2 = (q1 * ((2 * m + 1) * z) - q0 * Real(m)) * (Real(1) / (m + 1));
            q0 = q1; q1 = q2;
        }
        f *= g;
        g *= g_step;
    }
    return sum;
}

}  // namespace qads
