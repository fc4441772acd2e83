#pragma once

#include "qads/ads.hpp"
#include "qads/quadrature.hpp"

#include <cmath>
#include <stdexcept>
#include <vector>

namespace qads {

// arccosh(u)/sqrt(u^2-1), continued analytically through u = 1 to
// arccos(u)/sqrt(1-u^2) for u < 1
inline double phase_g(double u) {
    double s = u - 1.0;
    if (std::fabs(s) < 1e-4) return 1.0 - s / 3.0 + 2.0 * s * s / 15.0;
    if (u > 1.0) return std::acosh(u) / std::sqrt(u * u - 1.0);
    return std::acos(u) / std::sqrt(1.0 - u * u);
}

struct PhaseSolution {
    double varphi = 0.0;
    double u_val = 0.0;       // cosh r cos varphi
    double bracket_lo = 0.0;  // -arccos(-1/cosh r): the stated interval
    double bracket_hi = 0.0;  //  extends through cosh r cos phi = 1
    double residual = 0.0;
};

// Root of  phi - eta = cosh r sin(phi) arccosh(cosh r cos phi)/sqrt(cosh^2 r cos^2 phi - 1)
// For eta > 0 the root is negative and, beyond eta = sinh r - arccos(1/cosh r),
// lies past cosh r cos phi = 1, where the right-hand side continues
// analytically; the bracket below reflects that continuation.
inline PhaseSolution solve_phase(double r, double eta) {
    if (!(r > 0)) throw std::domain_error("solve_phase: r must be > 0");
    if (eta < 0 || eta >= pi_v<double>())
        throw std::domain_error("solve_phase: eta must lie in [0, pi)");
    double coshr = std::cosh(r);
    double hi = std::acos(-1.0 / coshr);  // = pi - arccos(1/cosh r)
    PhaseSolution sol;
    sol.bracket_lo = -hi;
    sol.bracket_hi = hi;
    auto h = [&](double phi) {
        return phi - coshr * std::sin(phi) * phase_g(coshr * std::cos(phi)) - eta;
    };
    if (eta == 0.0) {
        sol.varphi = 0.0;
        sol.u_val = coshr;
        sol.residual = 0.0;
        return sol;
    }
    double lo = -hi * (1.0 - 1e-14), up = 0.0;
    double flo = h(lo), fup = h(up);
    if (!(flo > 0 && fup < 0))
        throw std::runtime_error("solve_phase: no sign change on the bracket");
    for (int i = 0; i < 200; ++i) {
        double mid = (lo + up) / 2;
        double fm = h(mid);
        if (fm > 0)
            lo = mid;
        else
            up = mid;
        if (up - lo < 1e-17 * (1 + std::fabs(lo))) break;
    }
    double phi = (lo + up) / 2;
    // safeguarded Newton polish with a numeric slope
    for (int i = 0; i < 4; ++i) {
        double f0 = h(phi);
        double hstep = 1e-7;
        double slope = (h(phi + hstep) - h(phi - hstep)) / (2 * hstep);
        double next = phi - f0 / slope;
        if (next > lo && next < up) phi = next;
    }
    sol.varphi = phi;
    sol.u_val = coshr * std::cos(phi);
    sol.residual = std::fabs(h(phi));
    return sol;
}

struct AsymptoticCheck {
    double predicted_log = 0.0;
    double actual_log = 0.0;
    double ratio = 0.0;  // actual / predicted
};

namespace asym_detail {

inline std::pair<double, double> ab_cached(int n) {
    static std::map<int, std::pair<double, double>> cache;
    static std::mutex mtx;
    std::lock_guard<std::mutex> lk(mtx);
    auto it = cache.find(n);
    if (it == cache.end()) it = cache.emplace(n, a_b_constants(n)).first;
    return it->second;
}

// log of the saddle prefactor arccosh(u)^{2n+1} / (sqrt(u G(u) - 1) (u^2-1)^n),
// real on both sides of u = 1 with the principal determinations combined
inline double saddle_prefactor_log(int n, double u) {
    double s = u - 1.0;
    if (std::fabs(s) < 1e-4) {
        // Delta^2 = 2s(1 - s/6), F2 = (2/3)s(1 + ...), (u^2-1) = 2s(1+s/2)
        double d2 = 2 * s * (1 - s / 6.0);
        double f2 = u * phase_g(u) - 1.0;
        if (s == 0.0) return 0.5 * std::log(3.0);
        return (n + 0.5) * std::log(std::fabs(d2)) -
               0.5 * std::log(std::fabs(f2)) - n * std::log(std::fabs(2 * s * (1 + s / 2)));
    }
    if (u > 1.0) {
        double D = std::acosh(u);
        double f2 = u * phase_g(u) - 1.0;
        return (2 * n + 1) * std::log(D) - 0.5 * std::log(f2) -
               n * std::log(u * u - 1.0);
    }
    double D = std::acos(u);
    double f2 = 1.0 - u * phase_g(u);
    return (2 * n + 1) * std::log(D) - 0.5 * std::log(f2) - n * std::log(1.0 - u * u);
}

}  // namespace asym_detail

// p_t(0,0) vs (4 pi t)^{-(2n+3)} (A_n + B_n t)
inline AsymptoticCheck origin_expansion(int n, double t) {
    auto [A, B] = asym_detail::ab_cached(n);
    AsymptoticCheck c;
    c.predicted_log = -(2 * n + 3) * std::log(4 * pi_v<double>() * t) + std::log(A + B * t);
    EvalContext ctx(n, t);
    ctx.quad.rel_tol = 1e-10;
    c.actual_log = ads_kernel_theta(ctx, {0.0, 0.0}).value.log_abs();
    c.ratio = std::exp(c.actual_log - c.predicted_log);
    return c;
}

struct CutlocusFit {
    std::vector<double> t_seq;
    std::vector<double> fitted;  // -4t [log p + corrections] per t
    double limit = 0.0;          // value at the smallest t
    double target = 0.0;         // 2 pi eta + eta^2
};

// fits -4t [ln p_t(0,eta) + (4n+1) ln t + ln(4 pi sin eta 2^{6n} (2n-1)!)
//            - ln((pi+eta) eta^{2n-1})]  ->  2 pi eta + eta^2
inline CutlocusFit cutlocus_rate(int n, double eta,
                                 std::vector<double> t_seq = {}) {
    if (!(eta > 0.29 && eta < pi_v<double>() - 0.29))
        throw std::domain_error("cutlocus_rate: eta must lie in (0.3, pi-0.3)");
    if (t_seq.empty()) t_seq = {1.6e-2, 8e-3, 4e-3, 2e-3, 1e-3};
    double fact = 1.0;
    for (int k = 2; k < 2 * n; ++k) fact *= k;  // (2n-1)!
    double const_log = std::log(4 * pi_v<double>() * std::sin(eta)) +
                       6 * n * std::log(2.0) + std::log(fact * (2 * n - 1 > 0 ? (2 * n - 1) : 1));
    double shape_log = std::log(pi_v<double>() + eta) + (2 * n - 1) * std::log(eta);
    CutlocusFit fit;
    fit.t_seq = t_seq;
    fit.target = 2 * pi_v<double>() * eta + eta * eta;
    for (double t : t_seq) {
        EvalContext ctx(n, t);
        ctx.quad.rel_tol = 1e-10;
        double lp = ads_kernel_origin_fiber(ctx, eta).value.log_abs();
        fit.fitted.push_back(-4 * t *
                             (lp + (4 * n + 1) * std::log(t) + const_log - shape_log));
    }
    fit.limit = fit.fitted.back();
    return fit;
}

// p_t(r,0) vs (4 pi t)^{-(2n+3/2)} (r/sinh r)^{2n+1} e^{-r^2/4t} (r coth r - 1)^{-3/2}
inline AsymptoticCheck axis_asymptotic(int n, double t, double r) {
    if (!(r > 0.1)) throw std::domain_error("axis_asymptotic: r bounded away from 0");
    AsymptoticCheck c;
    c.predicted_log = -(2 * n + 1.5) * std::log(4 * pi_v<double>() * t) +
                      (2 * n + 1) * (std::log(r) - log_sinh(r)) - r * r / (4 * t) -
                      1.5 * std::log(r / std::tanh(r) - 1.0);
    EvalContext ctx(n, t);
    ctx.quad.rel_tol = 1e-10;
    c.actual_log = ads_kernel_theta(ctx, {r, 0.0}).value.log_abs();
    c.ratio = std::exp(c.actual_log - c.predicted_log);
    return c;
}

// steepest-descent prediction at general (r, eta); the phase phi solves the
// stationarity equation, the Gaussian factor is e^{-(phi-eta)^2 tanh^2 r/(4t sin^2 phi)}
inline AsymptoticCheck general_asymptotic(int n, double t, double r, double eta) {
    if (!(r > 0.3)) throw std::domain_error("general_asymptotic: r must exceed 0.3");
    if (eta >= pi_v<double>() - 0.29)
        throw std::domain_error("general_asymptotic: eta too close to pi");
    if (eta < 1e-12) return axis_asymptotic(n, t, r);
    PhaseSolution ps = solve_phase(r, eta);
    double phi = ps.varphi;
    double X = std::pow((phi - eta) * std::tanh(r) / std::sin(phi), 2) / (4 * t);
    AsymptoticCheck c;
    c.predicted_log = -(2 * n + 1.5) * std::log(4 * pi_v<double>() * t) +
                      std::log(std::fabs(std::sin(phi))) - std::log(std::sin(eta)) -
                      log_sinh(r) + asym_detail::saddle_prefactor_log(n, ps.u_val) - X;
    EvalContext ctx(n, t);
    ctx.quad.rel_tol = 1e-10;
    c.actual_log = ads_kernel_theta(ctx, {r, eta}).value.log_abs();
    c.ratio = std::exp(c.actual_log - c.predicted_log);
    return c;
}

}  // namespace qads
