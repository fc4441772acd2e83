#pragma once

#include <boost/multiprecision/cpp_int.hpp>

#include <map>
#include <utility>
#include <vector>

namespace qads {

using Rational = boost::multiprecision::cpp_rational;

// One monomial of the expansion of (-(1/sinh d) d/dd)^k e^{-d^2/4t}:
//   coeff * t^{-t_power} * delta^{delta_power} * sinh(delta)^{-inv_sinh_power}
//         * cosh(delta)^{cosh_power}
// inv_sinh_power may be negative in derived sums (positive sinh powers).
struct HeatTerm {
    Rational coeff;
    int t_power = 0;
    int delta_power = 0;
    int inv_sinh_power = 0;
    int cosh_power = 0;
};

// Finite sum of HeatTerms.  The kernel q_{t,d}(cosh delta) equals
//   prefactor(d,t) * sum(delta,t) * e^{-delta^2/4t},
// prefactor(d,t) = e^{-((d-1)/2)^2 t} / ((2 pi)^{(d-1)/2} sqrt(4 pi t)).
struct HeatTermSum {
    int dimension = 0;  // odd d for kernel sums, 0 for derived sums
    std::vector<HeatTerm> terms;
};

// Exact symbolic expansion for odd d >= 3; cached, race-free initialization.
const HeatTermSum& q_termsum(int d);

// F such that d/ddelta (s * e^{-d^2/4t}) = F * e^{-d^2/4t}
HeatTermSum derivative_with_gaussian(const HeatTermSum& s);
// F such that -(1/sinh d) d/dd (s * G) = F * G
HeatTermSum apply_descent(const HeatTermSum& s);
HeatTermSum multiply_coth(const HeatTermSum& s);
HeatTermSum scale(const HeatTermSum& s, const Rational& c, int extra_tpow);
HeatTermSum add(const HeatTermSum& x, const HeatTermSum& y);
HeatTermSum merge(HeatTermSum s);

// (d_t q)/(prefactor*G) and (Lap_rad q)/(prefactor*G), Lap_rad = d^2 + (d-1) coth d.
const HeatTermSum& q_dt_termsum(int d);
const HeatTermSum& q_lap_termsum(int d);
// (d_delta q)/(prefactor*G), used by the Millson cross-check.
const HeatTermSum& q_ddelta_termsum(int d);
// Exact statement that q solves its radial heat equation: the merged
// difference of the two sums above is identically empty.
bool heat_defect_is_zero(int d);

// Laurent expansion around delta = 0: coefficient of t^{-p} delta^{j},
// sparse over (p, j).  Negative j must cancel for kernel sums; kept so the
// cancellation can be asserted exactly.
struct DeltaSeries {
    std::map<std::pair<int, int>, Rational> c;
    int min_delta_pow = 0;
    int max_delta_pow = 0;
};
DeltaSeries expand_small_delta(const HeatTermSum& s, int max_delta_pow);

// Data for the vertical-axis residue evaluation: terms of f = sinh(delta)*T_d
// with a pole at delta = i k pi.  Q holds the even Taylor series
// (sinh z / z)^{1-b} (cosh z)^c = sum_q Q[q] z^{2q}.
struct OriginResidueTerm {
    Rational coeff;
    int t_power = 0, a = 0, b = 0, c = 0;
    std::vector<Rational> Q;
};
const std::vector<OriginResidueTerm>& origin_residue_terms(int d);

}  // namespace qads
