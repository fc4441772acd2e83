#pragma once

#include <boost/multiprecision/cpp_bin_float.hpp>

#include <cmath>
#include <limits>

namespace qads {

// Working precisions. Kernel evaluations self-select the narrowest type whose
// cancellation capacity covers the requested accuracy (see ads.hpp).
using mp50 = boost::multiprecision::cpp_bin_float_50;
using mp100 =
    boost::multiprecision::number<boost::multiprecision::cpp_bin_float<100>,
                                  boost::multiprecision::et_off>;

template <class Real>
inline const Real& pi_v() {
    static const Real v = atan(Real(1)) * 4;
    return v;
}

template <class Real>
inline const Real& ln2_v() {
    static const Real v = log(Real(2));
    return v;
}

template <class Real>
inline double to_d(const Real& x) {
    return static_cast<double>(x);
}

// Usable cancellation headroom in nats: how far below the working scale a sum
// may land before rounding noise dominates.  Two guard digits reserved.
template <class Real>
inline double cancellation_capacity_nats() {
    return (std::numeric_limits<Real>::digits10 - 2) * 2.302585092994046;
}

}  // namespace qads
