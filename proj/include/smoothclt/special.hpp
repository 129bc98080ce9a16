#pragma once

#include "smoothclt/common.hpp"

#include <cmath>
#include <limits>

namespace smoothclt {

template <Real Scalar>
Scalar normal_pdf(Scalar x) {
  return std::exp(-x * x / 2 - kLog2Pi<Scalar> / 2);
}

template <Real Scalar>
Scalar normal_pdf(Scalar x, Scalar mean, Scalar sigma) {
  const Scalar z = (x - mean) / sigma;
  return normal_pdf(z) / sigma;
}

template <Real Scalar>
Scalar normal_cdf(Scalar x) {
  return std::erfc(-x / std::numbers::sqrt2_v<Scalar>) / 2;
}

// Upper tail P(Z > x), accurate far into the right tail.
template <Real Scalar>
Scalar normal_sf(Scalar x) {
  return std::erfc(x / std::numbers::sqrt2_v<Scalar>) / 2;
}

/// Inverse of the standard normal CDF.
///
/// Rational starting point (Acklam) followed by Halley steps against erfc,
/// which brings the result to working precision for any floating type.
template <Real Scalar>
Scalar normal_quantile(Scalar u) {
  if (!(u > 0)) return -std::numeric_limits<Scalar>::infinity();
  if (!(u < 1)) return std::numeric_limits<Scalar>::infinity();

  constexpr double a[] = {-3.969683028665376e+01, 2.209460984245205e+02, -2.759285104469687e+02,
                          1.383577518672690e+02,  -3.066479806614716e+01, 2.506628277459239e+00};
  constexpr double b[] = {-5.447609879822406e+01, 1.615858368580409e+02, -1.556989798598866e+02,
                          6.680131188771972e+01,  -1.328068155288572e+01};
  constexpr double c[] = {-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e+00,
                          -2.549732539343734e+00, 4.374664141464968e+00,  2.938163982698783e+00};
  constexpr double d[] = {7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e+00,
                          3.754408661907416e+00};
  constexpr double low = 0.02425;

  const double ud = static_cast<double>(u);
  double x;
  if (ud < low) {
    const double q = std::sqrt(-2 * std::log(ud));
    x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1);
  } else if (ud <= 1 - low) {
    const double q = ud - 0.5;
    const double r = q * q;
    x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
        (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1);
  } else {
    const double q = std::sqrt(-2 * std::log1p(-ud));
    x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1);
  }

  Scalar z = static_cast<Scalar>(x);
  for (int iter = 0; iter < 2; ++iter) {
    // Work on the smaller tail so the residual keeps relative accuracy.
    const Scalar e = z < 0 ? normal_cdf(z) - u : (1 - u) - normal_sf(z);
    const Scalar pdf = normal_pdf(z);
    if (pdf == 0) break;
    const Scalar step = e / pdf;
    z -= step / (1 + z * step / 2);
  }
  return z;
}

/// Digamma function for positive arguments.
template <Real Scalar>
Scalar digamma(Scalar x) {
  Scalar result = 0;
  while (x < 10) {
    result -= 1 / x;
    x += 1;
  }
  const Scalar inv = 1 / x;
  const Scalar inv2 = inv * inv;
  result += std::log(x) - inv / 2 -
            inv2 * (Scalar(1) / 12 -
                    inv2 * (Scalar(1) / 120 -
                            inv2 * (Scalar(1) / 252 - inv2 * (Scalar(1) / 240 - inv2 / 132))));
  return result;
}

template <Real Scalar>
Scalar log_binomial(long n, long k) {
  return std::lgamma(static_cast<Scalar>(n + 1)) - std::lgamma(static_cast<Scalar>(k + 1)) -
         std::lgamma(static_cast<Scalar>(n - k + 1));
}

/// sin(u)/u with the removable singularity filled in by its Taylor series.
template <Real Scalar>
Scalar sinc(Scalar u) {
  if (std::abs(u) < Scalar(1e-4)) {
    const Scalar u2 = u * u;
    return 1 - u2 / 6 + u2 * u2 / 120;
  }
  return std::sin(u) / u;
}

/// d/du of sin(u)/u.
template <Real Scalar>
Scalar sinc_derivative(Scalar u) {
  if (std::abs(u) < Scalar(1e-4)) {
    const Scalar u2 = u * u;
    return -u / 3 + u * u2 / 30;
  }
  return (u * std::cos(u) - std::sin(u)) / (u * u);
}

}  // namespace smoothclt
