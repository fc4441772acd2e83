#pragma once

#include "qads/real.hpp"

#include <cmath>
#include <stdexcept>

namespace qads {

// Chebyshev polynomial of the second kind, U_m(x) = sin((m+1) acos x)/sin(acos x),
// by the three-term recurrence.  Domain restricted to [-1,1]; the removable
// singularities at x = +-1 are returned as their analytic limits.
template <class Real>
Real chebyshev_u(int m, const Real& x) {
    using std::fabs;
    if (m < 0) throw std::domain_error("chebyshev_u: m must be >= 0");
    if (fabs(x) > Real(1)) throw std::domain_error("chebyshev_u: |x| > 1");
    if (x == Real(1)) return Real(m + 1);
    if (x == Real(-1)) return (m % 2 == 0) ? Real(m + 1) : Real(-(m + 1));
    Real u0 = Real(1);
    if (m == 0) return u0;
    Real u1 = 2 * x;
    for (int k = 1; k < m; ++k) {
        Real u2 = 2 * x * u1 - u0;
        u0 = u1;
        u1 = u2;
    }
    return u1;
}

// Legendre polynomial P_m(x) by the Bonnet recurrence.  Arguments cosh(2u) > 1
// are accepted; the recurrence is exact for polynomial arguments.
template <class Real>
Real legendre_p(int m, const Real& x) {
    if (m < 0) throw std::domain_error("legendre_p: m must be >= 0");
    Real p0 = Real(1);
    if (m == 0) return p0;
    Real p1 = x;
    for (int k = 1; k < m; ++k) {
        Real p2 = ((2 * k + 1) * x * p1 - k * p0) / Real(k + 1);
        p0 = p1;
        p1 = p2;
    }
    return p1;
}

// Terminating hypergeometric sum 2F1(m+2, -m, 3/2; x).  The -m parameter
// terminates the series after m+1 terms; compensated summation controls the
// alternating-sign cancellation.
template <class Real>
Real hyp2f1_terminating(int m, const Real& x) {
    if (m < 0) throw std::domain_error("hyp2f1_terminating: m must be >= 0");
    Real sum = Real(1), comp = Real(0);
    Real term = Real(1);
    for (int j = 0; j < m; ++j) {
        // term_{j+1}/term_j = (m+2+j)(-m+j) / ((3/2+j)(j+1)) * x
        term = term * Real(m + 2 + j) * Real(j - m) * x /
               (Real(2 * j + 3) / 2 * Real(j + 1));
        Real y = term - comp;
        Real t = sum + y;
        comp = (t - sum) - y;
        sum = t;
    }
    return sum;
}

}  // namespace qads
