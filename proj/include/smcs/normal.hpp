#pragma once

#include <cmath>
#include <numbers>

namespace smcs {

// Phi(z) = erfc(-z/sqrt(2))/2. The libm erfc is accurate to a few ulp on the
// whole line, so Phi is good to ~1e-16 absolute and keeps relative accuracy in
// the lower tail where 1 + erf(z) would cancel.
template <typename Scalar>
Scalar norm_cdf(Scalar z) {
  return Scalar(0.5) * std::erfc(-z / std::numbers::sqrt2_v<Scalar>);
}

template <typename Scalar>
Scalar norm_pdf(Scalar z) {
  return std::numbers::inv_sqrtpi_v<Scalar> / std::numbers::sqrt2_v<Scalar> *
         std::exp(Scalar(-0.5) * z * z);
}

// Bisection on Phi; only used for a handful of fixed levels.
template <typename Scalar>
Scalar norm_quantile(Scalar p) {
  Scalar lo = -40, hi = 40;
  for (int it = 0; it < 200 && hi - lo > Scalar(0); ++it) {
    const Scalar mid = (lo + hi) / 2;
    if (mid == lo || mid == hi) break;
    if (norm_cdf(mid) < p)
      lo = mid;
    else
      hi = mid;
  }
  return (lo + hi) / 2;
}

}  // namespace smcs
