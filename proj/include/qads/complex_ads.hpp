#pragma once

#include "qads/ads.hpp"
#include "qads/operators.hpp"

#include <cmath>

namespace qads {

struct BranchPolicy {
    bool cut_safe = false;  // cosh r cos eta > 1: the arccosh argument never
                            // meets the cut (-inf, 1] along the path
};

inline BranchPolicy cads_branch(double r, double eta) {
    return {std::cosh(r) * std::cos(eta) > 1.0 + 1e-12};
}

namespace ads_detail {

// principal arccosh of cosh r cosh(y + i eta), computed through A - y so the
// real part stays accurate when r is small; valid for Re z > 0 (guaranteed in
// the cut-safe region where cos eta > 0)
template <class Real>
struct CDeltaPrime {
    Real A;   // Re delta'
    Real B;   // Im delta' (principal, in (-pi, pi])
    Real d2;  // Re(delta'^2) - y^2 at k = 0:  (A-y)(A+y) - B^2
};

template <class Real>
CDeltaPrime<Real> cdelta_prime(const Real& coshr, const Real& y, const Real& eta) {
    using std::exp; using std::log; using std::atan2; using std::cos; using std::sin;
    Real e2 = exp(-2 * y);
    Cplx<Real> ze{coshr * (1 + e2) * cos(eta) / 2, coshr * (1 - e2) * sin(eta) / 2};
    Cplx<Real> w = ze + csqrt(ze * ze - Cplx<Real>{e2, Real(0)});
    Real amy = log(w.abs());  // A - y
    Real B = atan2(w.im, w.re);
    Real A = y + amy;
    return {A, B, amy * (amy + 2 * y) - B * B};
}

struct CadsMeta {
    EvalMeta meta;
    double imag_ratio = 0.0;
    bool cut_safe = false;
};

// p^C_t(r,eta) = (4 pi t)^{-1/2} sum_k Int_R e^{y^2/4t}
//               q_{t,4n+1}(cosh r cosh(y + i eta + 2k pi i)) dy.
// The k = 0 term is evaluated exactly as written, with the principal
// arccosh fed to the complex term-sum evaluator and the two half-lines
// integrated independently (their assembled imaginary part is the branch
// diagnostic).  The k != 0 branch continuations are not individually
// summable on the original contour; after the contour shift w -> w - i eta_k
// (which in the cut-safe region crosses no singularity for k = 0 and whose
// crossing contributions telescope in the k-sum) the k-th term becomes the
// convergent real-line integral
//   (4 pi t)^{-1/2} Int_R e^{(y^2-eta_k^2)/4t} cos(eta_k y/2t)
//                         q_{t,4n+1}(cosh r cosh y) dy,
// which is what is summed for k != 0; differentiating it in eta reproduces
// the displayed derivative identity term by term.
template <class Real>
CadsMeta cads_impl(int n, double td, double rd, double etad, QuadratureSpec quad,
                   double cancel_budget = 1e300) {
    using std::cos; using std::exp; using std::log; using std::sqrt;
    const int d = 4 * n + 1;
    const Real t(td), r(rd), eta(etad);
    const Real pi = pi_v<Real>();
    const double pid = pi_v<double>();
    const auto& TE = q_evaluator<Real>(d);
    const Real coshr = cosh(r);
    const Real base_log = q_prefactor_log(d, t) - log(4 * pi * t) / 2;
    TermsumBound tb = termsum_bound(d, td);
    CadsMeta out;
    out.cut_safe = cads_branch(rd, etad).cut_safe;

    // k-range: grown until the measured k-terms decay below tolerance
    const int kcap = 2 + static_cast<int>(td);
    double c0 = std::log(std::max(0.9 * std::cosh(rd), 1.02));  // A - y >= c0 for y >= 3
    auto tail_log_for = [&](double Bk2max) {
        return [=](double U) {
            double lam = tb.decay + c0 / td - tb.amax / std::max(U, 1.0);
            if (lam < 0.25) return 1e30;
            double poly = tb.amax * std::log(U + c0 + 4 * (kcap + 1));
            return to_d(base_log) + Bk2max / (4 * td) + tb.log_c + poly -
                   (2 * U * c0 + c0 * c0) / (4 * td) - tb.decay * (U + c0) -
                   std::log(lam) + std::log(2.0);
        };
    };

    // k-set from the Gaussian size model e^{-((eta+2k pi)^2 - eta^2)/4t}
    // (the eta-derivative identity maps the k-th branch onto the k-th theta
    // term of the quaternionic kernel, whose size is exactly that Gaussian)
    auto k_model = [&](int k) {
        double ek = etad + 2 * k * pid;
        return -(ek * ek - etad * etad) / (4 * td);
    };
    std::vector<int> kset{0};
    double ktail_model = -std::numeric_limits<double>::infinity();
    for (int kk = 1; kk <= 2 * kcap + 2; ++kk) {
        int k = (kk % 2 == 1) ? -(kk / 2 + 1) : kk / 2;
        if (k_model(k) >= std::log(quad.rel_tol) - 5.0 &&
            static_cast<int>(kset.size()) <= 2 * kcap)
            kset.push_back(k);
        else
            ktail_model = detail::log_add(ktail_model, k_model(k));
    }

    double max_env = -std::numeric_limits<double>::infinity();
    Scaled<Real> total = Scaled<Real>::zero();
    Scaled<Real> total_im = Scaled<Real>::zero();
    double err_abs_log = -std::numeric_limits<double>::infinity();
    long nodes = 0;
    int kmax_used = 0;
    bool converged = true;
    double log_p0 = 0.0, env0 = 0.0;

    for (size_t kk = 0; kk < kset.size(); ++kk) {
        int k = kset[kk];
        if (k == 0) {
            // the two half-lines are integrated independently (no conjugate-
            // symmetry shortcut), so the smallness of the assembled imaginary
            // part is a genuine diagnostic of the branch handling
            auto integrand = [&](const Real& y) -> CScaled<Real> {
                CDeltaPrime<Real> dp = cdelta_prime(coshr, y, eta);
                Cplx<Real> dk{dp.A, dp.B};
                CScaled<Real> Tv = TE.eval_complex(t, dk);
                Real re_expo = base_log - dp.d2 / (4 * t);
                Real im_expo = -2 * dp.A * dp.B / (4 * t);
                CScaled<Real> val = Tv * CScaled<Real>::exp_of_log({re_expo, im_expo});
                double envlog = to_d(val.log_abs());
                if (envlog > max_env) max_env = envlog;
                return val;
            };
            auto tl = tail_log_for(pid * pid);
            Scaled<Real> k_re = Scaled<Real>::zero();
            for (int side = 0; side < 2; ++side) {
                auto fre = [&](const Real& y) -> Scaled<Real> {
                    return integrand(side == 0 ? y : -y).real_part();
                };
                auto fim = [&](const Real& y) -> Scaled<Real> {
                    return integrand(side == 0 ? y : -y).imag_part();
                };
                auto rp = integrate_semi_infinite_scaled<Real>(fre, quad, tl, 1.0 + td);
                auto ip = integrate_semi_infinite_scaled<Real>(fim, quad, tl, 1.0 + td);
                total += rp.value;
                k_re += rp.value;
                total_im += ip.value;
                err_abs_log = detail::log_add(err_abs_log, rp.err_log);
                err_abs_log = detail::log_add(err_abs_log, rp.tail_log);
                nodes += rp.nodes + ip.nodes;
                converged = converged && rp.converged;
            }
            log_p0 = k_re.is_zero() ? -1e300 : to_d(k_re.log_abs());
            env0 = max_env;
            // precision bail-out once the k = 0 magnitude is known
            if (cancel_budget < 1e299 && max_env - log_p0 > cancel_budget + 3.0) {
                out.meta.value = k_re.to_mantexp();
                out.meta.err_rel = 1.0;
                out.meta.cancel_nats = max_env - log_p0;
                out.meta.nodes = nodes;
                out.meta.converged = true;
                return out;
            }
            continue;
        }

        // k != 0: regularized real-line branch with the explicit k-Gaussian
        const Real etak = eta + 2 * k * pi;
        const double ekd = etad + 2 * k * pid;
        Scaled<Real> Wk = Scaled<Real>::exp_of_log(-etak * etak / (4 * t));
        auto integrand = [&](const Real& y) -> Scaled<Real> {
            using std::cos;
            if (y < Real(0)) return Scaled<Real>::zero();
            DeltaPrime<Real> dp = delta_prime(coshr, y);
            Scaled<Real> Tv = TE.eval(t, dp.delta);
            Scaled<Real> val = Tv * Wk *
                               Scaled<Real>::exp_of_log(base_log - dp.d2 / (4 * t)) *
                               cos(etak * y / (2 * t));
            double envlog = to_d(Tv.log_abs()) + to_d(base_log - dp.d2 / (4 * t)) +
                            to_d(Wk.log_abs());
            if (envlog > max_env) max_env = envlog;
            return val;
        };
        auto tl = [=](double U) {
            return -ekd * ekd / (4 * td) + tail_log_for(0.0)(U);
        };
        auto rp = integrate_semi_infinite_scaled<Real>(integrand, quad, tl, 1.0 + td);
        total += rp.value * Real(2);  // even integrand: both half-lines
        err_abs_log = detail::log_add(err_abs_log, rp.err_log + std::log(2.0));
        err_abs_log = detail::log_add(err_abs_log, rp.tail_log + std::log(2.0));
        nodes += rp.nodes;
        converged = converged && rp.converged;
        kmax_used = std::max(kmax_used, std::abs(k));
    }

    out.meta.value = total.to_mantexp();
    double vlog = out.meta.value.is_zero() ? -1e30 : out.meta.value.log_abs();
    double ktail = std::exp(ktail_model + log_p0 - vlog);
    out.meta.err_rel = std::exp(err_abs_log - vlog) + ktail;
    out.meta.cancel_nats = std::max(0.0, max_env - vlog);
    out.meta.nodes = nodes;
    out.meta.terms = 2 * kmax_used + 1;
    out.meta.converged = converged;
    out.imag_ratio = total_im.is_zero()
                         ? 0.0
                         : std::exp(to_d(total_im.log_abs()) - vlog);
    return out;
}

}  // namespace ads_detail

// kernel value plus the branch/imaginary-part diagnostics
struct CadsDiagnostics {
    KernelValue value;
    double imag_ratio = 0.0;
    bool cut_safe = false;
};

inline CadsDiagnostics cads_kernel_diag(const EvalContext& ctx, double r, double eta) {
    ctx.validate();
    if (r < 0) throw std::domain_error("cads_kernel: r must be >= 0");
    if (!(eta > 0) || eta >= pi_v<double>())
        throw std::domain_error("cads_kernel: eta must lie in (0, pi)");
    ads_detail::CadsMeta last;
    KernelValue kv = ads_detail::run_with_precision(ctx, [&](int lvl, double budget) {
        if (lvl == 0)
            last = ads_detail::cads_impl<double>(ctx.n, ctx.t, r, eta, ctx.quad, budget);
        else if (lvl == 1)
            last = ads_detail::cads_impl<mp50>(ctx.n, ctx.t, r, eta, ctx.quad, budget);
        else
            last = ads_detail::cads_impl<mp100>(ctx.n, ctx.t, r, eta, ctx.quad, budget);
        return last.meta;
    });
    if (!last.cut_safe) kv.certified = false;
    return {kv, last.imag_ratio, last.cut_safe};
}

inline KernelValue cads_kernel(const EvalContext& ctx, double r, double eta) {
    return cads_kernel_diag(ctx, r, eta).value;
}

// residual of the dimensional-shift identity
//   -(e^{-4nt} / (2 pi cosh r sin eta)) d_eta p^C = p,
// with d_eta by Richardson-extrapolated central differences, so the two
// kernels are compared through independent code paths.
inline double relation_residual(const EvalContext& ctx, double r, double eta) {
    ctx.validate();
    if (!cads_branch(r, eta).cut_safe)
        throw std::domain_error("relation_residual: outside the cut-safe region");
    EvalContext cctx = ctx;
    cctx.quad.rel_tol = std::min(ctx.quad.rel_tol, 1e-10);
    auto pc = [&](double e) { return cads_kernel(cctx, r, e).value.value(); };
    double h = 0.01 * std::min(1.0, eta / 2);
    double dpc = op_detail::d1(pc, eta, h, 3);
    double lhs = -std::exp(-4.0 * ctx.n * ctx.t) /
                 (2 * pi_v<double>() * std::cosh(r) * std::sin(eta)) * dpc;
    KernelValue p = ads_kernel_theta(cctx, {r, eta});
    double pv = p.value.value();
    return std::fabs(lhs - pv) / std::fabs(pv);
}

}  // namespace qads
