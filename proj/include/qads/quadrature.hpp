#pragma once

#include "qads/real.hpp"
#include "qads/scaled.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <limits>
#include <stdexcept>
#include <vector>

namespace qads {

struct QuadratureSpec {
    double rel_tol = 1e-10;
    double abs_tol = 0.0;        // 0 disables the absolute criterion
    int max_subdivisions = 4000;
    double cutoff = 0.0;         // semi-infinite truncation U; 0 = choose from the majorant
    double cutoff_bound = 0.0;   // filled in: log of the certified discarded tail
};

// Public result; error_estimate is relative to |value| (absolute when the
// value is exactly zero).
struct IntegralResult {
    MantExp value;
    double error_estimate = 0.0;
    long nodes_used = 0;
    bool converged = true;
};

struct quadrature_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

template <class Real>
struct IntegralResultT {
    Scaled<Real> value;
    Scaled<Real> abs_integral;   // integral of |f|, for cancellation diagnostics
    double err_log = -std::numeric_limits<double>::infinity();  // log absolute error
    double max_log_integrand = -std::numeric_limits<double>::infinity();
    double tail_log = -std::numeric_limits<double>::infinity();
    long nodes = 0;
    bool converged = true;

    double rel_err() const {
        if (value.is_zero()) return std::exp(err_log);
        return std::exp(err_log - to_d(value.log_abs()));
    }
    IntegralResult to_public() const {
        IntegralResult r;
        r.value = value.to_mantexp();
        double e = rel_err();
        double tail = value.is_zero() ? 0.0 : std::exp(tail_log - to_d(value.log_abs()));
        r.error_estimate = e + tail;
        r.nodes_used = nodes;
        r.converged = converged;
        return r;
    }
};

// Nested Clenshaw-Curtis 33/65 panel rule on [-1,1]; nodes cos(j pi/64),
// weights from the classical cosine-sum formula, computed once per Real.
// The high order keeps panel counts modest for the oscillatory kernel
// integrands, where accuracy far below the integrand scale is required.
template <class Real>
struct PanelRule {
    static constexpr int kN = 64;  // 65 points, embedded 33-point rule
    std::array<Real, kN + 1> x;
    std::array<Real, kN + 1> w_hi;
    std::array<Real, kN / 2 + 1> w_lo;

    static const PanelRule& get() {
        static const PanelRule r = make();
        return r;
    }

private:
    static void fill_weights(int N, Real* w) {
        using std::cos;
        const Real pi = pi_v<Real>();
        for (int j = 0; j <= N; ++j) {
            Real theta = pi * j / N;
            Real s = Real(1);
            for (int k = 1; k <= N / 2 - 1; ++k)
                s -= Real(2) * cos(2 * k * theta) / Real(4 * k * k - 1);
            s -= cos(N * theta) / Real(N * N - 1);
            Real cj = (j == 0 || j == N) ? Real(1) / 2 : Real(1);
            w[j] = 2 * cj * s / N;
        }
    }
    static PanelRule make() {
        using std::cos;
        PanelRule r;
        const Real pi = pi_v<Real>();
        for (int j = 0; j <= kN; ++j) r.x[j] = cos(pi * j / kN);
        fill_weights(kN, r.w_hi.data());
        fill_weights(kN / 2, r.w_lo.data());
        return r;
    }
};

namespace detail {

template <class Real>
struct Segment {
    Real a, b;
    Scaled<Real> integral;
    Scaled<Real> abs_integral;
    double err_log;
    double max_log;
};

template <class Real, class F>
Segment<Real> eval_panel(F&& f, const Real& a, const Real& b) {
    const auto& rule = PanelRule<Real>::get();
    constexpr int N = PanelRule<Real>::kN;
    Real mid = (a + b) / 2, half = (b - a) / 2;
    Scaled<Real> s_hi = Scaled<Real>::zero(), s_lo = Scaled<Real>::zero(),
                 sabs = Scaled<Real>::zero();
    double maxlog = -std::numeric_limits<double>::infinity();
    std::array<Scaled<Real>, N + 1> fv;
    for (int j = 0; j <= N; ++j) fv[j] = f(mid + half * rule.x[j]);
    for (int j = 0; j <= N; ++j) {
        s_hi += fv[j] * rule.w_hi[j];
        Scaled<Real> av = fv[j];
        if (av.sign() < 0) av = -av;
        sabs += av * rule.w_hi[j];
        if (!fv[j].is_zero()) maxlog = std::max(maxlog, to_d(fv[j].log_abs()));
    }
    for (int j = 0; j <= N / 2; ++j) s_lo += fv[2 * j] * rule.w_lo[j];
    Segment<Real> seg;
    seg.a = a;
    seg.b = b;
    seg.integral = s_hi * half;
    seg.abs_integral = sabs * half;
    Scaled<Real> diff = (s_hi - s_lo) * half;
    seg.err_log = diff.is_zero() ? -std::numeric_limits<double>::infinity()
                                 : to_d(diff.log_abs());
    seg.max_log = maxlog;
    return seg;
}

inline double log_add(double a, double b) {
    if (a == -std::numeric_limits<double>::infinity()) return b;
    if (b == -std::numeric_limits<double>::infinity()) return a;
    double hi = std::max(a, b), lo = std::min(a, b);
    return hi + std::log1p(std::exp(lo - hi));
}

}  // namespace detail

// Adaptive bisection with the nested CC rule.  Deterministic: the worst
// segment (ties broken by left endpoint) is split until the summed error
// estimate meets max(abs_tol, rel_tol*|I|) in log space, or the subdivision
// budget runs out (reported, never silent).
template <class Real, class F>
IntegralResultT<Real> integrate_finite_scaled(F&& f, const Real& a, const Real& b,
                                              const QuadratureSpec& spec,
                                              const std::vector<Real>& seed_points = {}) {
    if (!(a < b)) throw std::invalid_argument("integrate_finite: requires a < b");
    std::vector<detail::Segment<Real>> segs;
    std::vector<Real> pts{a};
    for (const Real& p : seed_points)
        if (p > a && p < b) pts.push_back(p);
    pts.push_back(b);
    std::sort(pts.begin(), pts.end());
    for (size_t i = 0; i + 1 < pts.size(); ++i)
        if (pts[i] < pts[i + 1]) segs.push_back(detail::eval_panel(f, pts[i], pts[i + 1]));
    long nodes = (PanelRule<Real>::kN + 1L) * static_cast<long>(segs.size());

    const double log_abs_tol = spec.abs_tol > 0 ? std::log(spec.abs_tol)
                                                : -std::numeric_limits<double>::infinity();
    const double log_rel_tol = spec.rel_tol > 0 ? std::log(spec.rel_tol)
                                                : -std::numeric_limits<double>::infinity();

    auto total_state = [&] {
        Scaled<Real> tot = Scaled<Real>::zero();
        double errlog = -std::numeric_limits<double>::infinity();
        for (const auto& s : segs) {
            tot += s.integral;
            errlog = detail::log_add(errlog, s.err_log);
        }
        return std::pair<Scaled<Real>, double>{tot, errlog};
    };

    int splits = 0;
    bool converged = true;
    double best_errlog = std::numeric_limits<double>::infinity();
    int stall = 0;
    while (true) {
        auto [tot, errlog] = total_state();
        double goal = log_abs_tol;
        if (!tot.is_zero()) goal = std::max(goal, log_rel_tol + to_d(tot.log_abs()));
        if (errlog <= goal) break;
        if (splits >= spec.max_subdivisions) {
            converged = false;
            break;
        }
        // error estimates pinned at the precision floor: refinement cannot help
        if (errlog < best_errlog - 0.25) {
            best_errlog = errlog;
            stall = 0;
        } else if (++stall > 60) {
            converged = false;
            break;
        }
        size_t worst = 0;
        for (size_t i = 1; i < segs.size(); ++i) {
            if (segs[i].err_log > segs[worst].err_log ||
                (segs[i].err_log == segs[worst].err_log && segs[i].a < segs[worst].a))
                worst = i;
        }
        detail::Segment<Real> s = segs[worst];
        Real m = (s.a + s.b) / 2;
        if (!(s.a < m && m < s.b)) {  // interval at machine width
            converged = false;
            break;
        }
        segs.erase(segs.begin() + static_cast<long>(worst));
        segs.push_back(detail::eval_panel(f, s.a, m));
        segs.push_back(detail::eval_panel(f, m, s.b));
        nodes += 2 * (PanelRule<Real>::kN + 1L);
        ++splits;
    }

    std::sort(segs.begin(), segs.end(),
              [](const auto& x, const auto& y) { return x.a < y.a; });
    IntegralResultT<Real> out;
    out.value = Scaled<Real>::zero();
    out.abs_integral = Scaled<Real>::zero();
    for (const auto& s : segs) {
        out.value += s.integral;
        out.abs_integral += s.abs_integral;
        out.err_log = detail::log_add(out.err_log, s.err_log);
        out.max_log_integrand = std::max(out.max_log_integrand, s.max_log);
    }
    out.nodes = nodes;
    out.converged = converged;
    return out;
}

// Semi-infinite integral over [0, inf).  tail_log(U) must return a certified
// upper bound for log of the integral of |f| over [U, inf); it must tend to
// -inf.  The truncation point is fixed first against a cheap pilot estimate,
// so the final full-tolerance pass converges its panel errors against the
// complete (fully cancelled) value rather than a partial one.
template <class Real, class F, class TailLog>
IntegralResultT<Real> integrate_semi_infinite_scaled(F&& f, const QuadratureSpec& spec,
                                                     TailLog&& tail_log,
                                                     double peak_hint = 1.0) {
    const double log_abs_tol = spec.abs_tol > 0 ? std::log(spec.abs_tol / 2)
                                                : -std::numeric_limits<double>::infinity();
    auto seeds_for = [&](double U) {
        std::vector<Real> seeds;
        if (peak_hint > 0 && peak_hint < U) {
            seeds.push_back(Real(peak_hint / 2));
            seeds.push_back(Real(peak_hint));
            seeds.push_back(Real(std::min(2 * peak_hint, 0.75 * U)));
        }
        return seeds;
    };
    double U = spec.cutoff > 0 ? spec.cutoff : std::max(2.0 * peak_hint, 4.0);
    long pilot_nodes = 0;
    if (spec.cutoff <= 0) {
        QuadratureSpec pilot = spec;
        pilot.rel_tol = std::max(spec.rel_tol, 1e-3);
        pilot.max_subdivisions = 200;
        for (int round = 0; round < 80; ++round) {
            auto probe = integrate_finite_scaled(f, Real(0), Real(U), pilot, seeds_for(U));
            pilot_nodes += probe.nodes;
            double vlog = probe.value.is_zero() ? -1e300 : to_d(probe.value.log_abs());
            double goal =
                std::max(log_abs_tol, std::log(spec.rel_tol / 2) + vlog) - 3.0;
            if (tail_log(U) <= goal) break;
            U = U * 1.5 + 2.0;
        }
    }

    IntegralResultT<Real> acc = integrate_finite_scaled(f, Real(0), Real(U), spec,
                                                        seeds_for(U));
    acc.nodes += pilot_nodes;
    acc.tail_log = tail_log(U);

    // safety net: if the fully cancelled value is smaller than the pilot
    // suggested, extend the domain with full-tolerance pieces
    for (int round = 0; round < 40 && spec.cutoff <= 0; ++round) {
        double vlog = acc.value.is_zero() ? -1e300 : to_d(acc.value.log_abs());
        double goal = std::max(log_abs_tol, std::log(spec.rel_tol / 2) + vlog);
        if (acc.tail_log <= goal) break;
        double U2 = U * 1.5 + 2.0;
        auto part = integrate_finite_scaled(f, Real(U), Real(U2), spec, {});
        acc.value += part.value;
        acc.abs_integral += part.abs_integral;
        acc.err_log = detail::log_add(acc.err_log, part.err_log);
        acc.max_log_integrand = std::max(acc.max_log_integrand, part.max_log_integrand);
        acc.nodes += part.nodes;
        acc.converged = acc.converged && part.converged;
        U = U2;
        acc.tail_log = tail_log(U);
        if (round == 39) acc.converged = false;
    }
    return acc;
}

// Double-precision convenience fronts.
template <class F>
IntegralResult integrate_finite(F&& f, double a, double b, const QuadratureSpec& spec) {
    auto wrap = [&](const double& x) { return Scaled<double>::from(f(x)); };
    return integrate_finite_scaled<double>(wrap, a, b, spec).to_public();
}

template <class F, class TailLog>
IntegralResult integrate_semi_infinite(F&& f, const QuadratureSpec& spec,
                                       TailLog&& tail_log, double peak_hint = 1.0) {
    auto wrap = [&](const double& x) { return Scaled<double>::from(f(x)); };
    return integrate_semi_infinite_scaled<double>(wrap, spec, tail_log, peak_hint)
        .to_public();
}

// A_n and B_n: the origin small-time constants
//   A_n = 4 pi Int_0^inf y^{2n+2} / sinh^{2n} y dy
//   B_n = 4 pi Int_0^inf y^{2n+2} / sinh^{2n} y
//           (-4n(n+1) - 2n(2n+1)(sinh y - y cosh y)/(y^2 sinh y)) dy
// The bracket combines e^t with the t-linear term of the hyperbolic kernel
// expansion; its constant part is 1 - (2n+1)^2 (the prefactor e^{-(2n+1)^2 t}
// fixes the sign, cf. the exact e^{-t} factor of the three-dimensional
// kernel).
inline std::pair<double, double> a_b_constants(int n) {
    if (n < 1) throw std::domain_error("a_b_constants: n must be >= 1");
    const double fourpi = 4 * pi_v<double>();
    auto base = [n](double y) {
        if (y == 0.0) return 0.0;
        return std::pow(y, 2 * n + 2) / std::pow(std::sinh(y), 2 * n);
    };
    // (sinh y - y cosh y)/(y^2 sinh y), series below the cancellation zone
    auto wfun = [](double y) {
        if (y < 0.02) {
            double y2 = y * y;
            return -1.0 / 3.0 + y2 / 45.0 - 2.0 * y2 * y2 / 945.0;
        }
        return (std::sinh(y) - y * std::cosh(y)) / (y * y * std::sinh(y));
    };
    QuadratureSpec spec;
    spec.rel_tol = 1e-12;
    // for U >= max(4, (2n+2)/n): integrand_A <= 4pi 2.33^{2n} U^{2n+2} e^{-2nU},
    // and the remaining tail is dominated by a rate-n exponential
    auto tail_A = [n, fourpi](double U) {
        return std::log(fourpi) + 2 * n * std::log(2.33) +
               (2 * n + 2) * std::log(U) - 2 * n * U - std::log(static_cast<double>(n));
    };
    double CB = 4.0 * n * (n + 1) + 2.0 * n * (2 * n + 1);
    auto tail_B = [&](double U) { return tail_A(U) + std::log(CB); };
    auto fa = [&](double y) { return fourpi * base(y); };
    auto fb = [&](double y) {
        return fourpi * base(y) *
               (-4.0 * n * (n + 1) - 2.0 * n * (2 * n + 1) * wfun(y));
    };
    IntegralResult A = integrate_semi_infinite(fa, spec, tail_A, 1.0 + 0.5 * n);
    IntegralResult B = integrate_semi_infinite(fb, spec, tail_B, 1.0 + 0.5 * n);
    if (!A.converged || !B.converged)
        throw quadrature_error("a_b_constants: quadrature failed to converge");
    return {A.value.value(), B.value.value()};
}

}  // namespace qads
