#pragma once

#include "qads/ads.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <stdexcept>
#include <vector>

namespace qads {

struct StencilSpec {
    double h = 0.0;            // 0: max(1e-3, 1e-2 * distance to domain boundary)
    int richardson_levels = 2;  // resulting order is 2 * levels
};

namespace op_detail {

// central differences extrapolated in h^2 (Neville)
template <class F>
double richardson(F&& diff, double h, int levels) {
    std::vector<double> tab(static_cast<size_t>(levels));
    for (int i = 0; i < levels; ++i) tab[i] = diff(h / (1 << i));
    for (int j = 1; j < levels; ++j)
        for (int i = levels - 1; i >= j; --i)
            tab[i] = tab[i] + (tab[i] - tab[i - 1]) / ((1 << (2 * j)) - 1);
    return tab[levels - 1];
}

template <class F>
double d1(F&& f, double x, double h, int levels) {
    return richardson(
        [&](double hh) { return (f(x + hh) - f(x - hh)) / (2 * hh); }, h, levels);
}

template <class F>
double d2(F&& f, double x, double h, int levels) {
    return richardson(
        [&](double hh) { return (f(x + hh) - 2 * f(x) + f(x - hh)) / (hh * hh); }, h,
        levels);
}

inline double default_h(double r, double ang, double ang_max) {
    double room = std::min({r, ang, ang_max - ang});
    return std::max(1e-3, 1e-2 * room);
}

}  // namespace op_detail

// [d_r^2 + ((4n-1) coth r + 3 tanh r) d_r + tanh^2 r (d_eta^2 + 2 cot eta d_eta)] f
inline double apply_radial_sublaplacian(int n,
                                        const std::function<double(double, double)>& f,
                                        const KernelPoint& at, StencilSpec st = {}) {
    double h = st.h > 0 ? st.h : op_detail::default_h(at.r, at.eta, pi_v<double>());
    if (at.r <= 2 * h || at.eta <= 2 * h || at.eta >= pi_v<double>() - 2 * h)
        throw std::domain_error("apply_radial_sublaplacian: stencil leaves the domain");
    int L = st.richardson_levels;
    auto fr = [&](double r) { return f(r, at.eta); };
    auto fe = [&](double e) { return f(at.r, e); };
    double drr = op_detail::d2(fr, at.r, h, L);
    double dr = op_detail::d1(fr, at.r, h, L);
    double dee = op_detail::d2(fe, at.eta, h, L);
    double de = op_detail::d1(fe, at.eta, h, L);
    double cr = 1.0 / std::tanh(at.r), tr = std::tanh(at.r);
    return drr + ((4 * n - 1) * cr + 3 * tr) * dr +
           tr * tr * (dee + 2 / std::tan(at.eta) * de);
}

// twistor variant: fiber operator d_phi^2 + 2 cot(2 phi) d_phi
inline double apply_twistor_sublaplacian(int n,
                                         const std::function<double(double, double)>& f,
                                         double r, double phi, StencilSpec st = {}) {
    double h = st.h > 0 ? st.h : op_detail::default_h(r, phi, pi_v<double>() / 2);
    if (r <= 2 * h || phi <= 2 * h || phi >= pi_v<double>() / 2 - 2 * h)
        throw std::domain_error("apply_twistor_sublaplacian: stencil leaves the domain");
    int L = st.richardson_levels;
    auto fr = [&](double rr) { return f(rr, phi); };
    auto fp = [&](double p) { return f(r, p); };
    double drr = op_detail::d2(fr, r, h, L);
    double dr = op_detail::d1(fr, r, h, L);
    double dpp = op_detail::d2(fp, phi, h, L);
    double dp = op_detail::d1(fp, phi, h, L);
    double cr = 1.0 / std::tanh(r), tr = std::tanh(r);
    return drr + ((4 * n - 1) * cr + 3 * tr) * dr +
           tr * tr * (dpp + 2 / std::tan(2 * phi) * dp);
}

// d'Alembertian: Delta_base - (1/cosh^2 r) Delta_fiber
inline double apply_dalembertian(int n, const std::function<double(double, double)>& f,
                                 const KernelPoint& at, StencilSpec st = {}) {
    double h = st.h > 0 ? st.h : op_detail::default_h(at.r, at.eta, pi_v<double>());
    if (at.r <= 2 * h || at.eta <= 2 * h || at.eta >= pi_v<double>() - 2 * h)
        throw std::domain_error("apply_dalembertian: stencil leaves the domain");
    int L = st.richardson_levels;
    auto fr = [&](double r) { return f(r, at.eta); };
    auto fe = [&](double e) { return f(at.r, e); };
    double drr = op_detail::d2(fr, at.r, h, L);
    double dr = op_detail::d1(fr, at.r, h, L);
    double dee = op_detail::d2(fe, at.eta, h, L);
    double de = op_detail::d1(fe, at.eta, h, L);
    double cr = 1.0 / std::tanh(at.r), ch = std::cosh(at.r);
    double base = drr + ((4 * n - 1) * cr + 3 * std::tanh(at.r)) * dr;
    double fiber = dee + 2 / std::tan(at.eta) * de;
    return base - fiber / (ch * ch);
}

// residual of the hyperbolic change of variables cosh d = cosh r cosh z:
//   [Delta_base + (1/cosh^2 r) Delta_P](g o d) = (g'' + (4n+2) coth d g') o d
// with Delta_P = d_z^2 + 2 coth z d_z; returned relative to the field scale
inline double change_of_variable_residual(int n, const std::function<double(double)>& g,
                                          double r, double zeta, StencilSpec st = {}) {
    double h = st.h > 0 ? st.h : std::max(1e-3, 1e-2 * std::min(r, zeta));
    if (r <= 2 * h || zeta <= 2 * h)
        throw std::domain_error("change_of_variable_residual: stencil leaves the domain");
    int L = st.richardson_levels;
    auto F = [&](double rr, double zz) {
        return g(std::acosh(std::cosh(rr) * std::cosh(zz)));
    };
    auto fr = [&](double rr) { return F(rr, zeta); };
    auto fz = [&](double zz) { return F(r, zz); };
    double drr = op_detail::d2(fr, r, h, L);
    double dr = op_detail::d1(fr, r, h, L);
    double dzz = op_detail::d2(fz, zeta, h, L);
    double dz = op_detail::d1(fz, zeta, h, L);
    double cr = 1.0 / std::tanh(r), ch = std::cosh(r);
    double lhs = drr + ((4 * n - 1) * cr + 3 * std::tanh(r)) * dr +
                 (dzz + 2 / std::tanh(zeta) * dz) / (ch * ch);
    double delta = std::acosh(std::cosh(r) * std::cosh(zeta));
    double gp = op_detail::d1(g, delta, h, L);
    double gpp = op_detail::d2(g, delta, h, L);
    double rhs = gpp + (4 * n + 2) / std::tanh(delta) * gp;
    double scale = std::max({std::fabs(lhs), std::fabs(rhs), 1e-300});
    return std::fabs(lhs - rhs) / scale;
}

struct ResidualStats {
    double max_rel = 0.0;
    double median_rel = 0.0;
    int points = 0;
};

enum class RadialOperator { ads, twistor };

// heat-equation residual |d_t k - L k| / max(|d_t k|, floor) over a grid;
// the kernel enters through its log so deep-underflow values stay usable
inline ResidualStats pde_residual_suite(
    const EvalContext& ctx,
    const std::function<double(double, double, double)>& log_kernel,
    RadialOperator op, const std::vector<std::pair<double, double>>& grid,
    StencilSpec st = {}) {
    std::vector<double> residuals;
    for (auto [r, x2] : grid) {
        double t = ctx.t;
        double logk_c = log_kernel(t, r, x2);
        auto w = [&](double rr, double xx) {
            return std::exp(log_kernel(t, rr, xx) - logk_c);
        };
        double Lw;
        if (op == RadialOperator::ads)
            Lw = apply_radial_sublaplacian(ctx.n, w, {r, x2}, st);
        else
            Lw = apply_twistor_sublaplacian(ctx.n, w, r, x2, st);
        double ht = 1e-3 * t;
        double dt_logk = op_detail::d1(
            [&](double tt) { return log_kernel(tt, r, x2); }, t, ht,
            st.richardson_levels);
        double denom = std::max(std::fabs(dt_logk), 1e-8);
        residuals.push_back(std::fabs(dt_logk - Lw) / denom);
    }
    ResidualStats s;
    s.points = static_cast<int>(residuals.size());
    if (residuals.empty()) return s;
    s.max_rel = *std::max_element(residuals.begin(), residuals.end());
    std::sort(residuals.begin(), residuals.end());
    s.median_rel = residuals[residuals.size() / 2];
    return s;
}

}  // namespace qads
