#pragma once

#include <cmath>
#include <limits>

namespace discbench {

inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// log(exp(a) + exp(b)); tolerates -inf on either side.
inline double log_sum_exp(double a, double b) {
  if (a == kNegInf) return b;
  if (b == kNegInf) return a;
  const double hi = a > b ? a : b;
  const double lo = a > b ? b : a;
  return hi + std::log1p(std::exp(lo - hi));
}

// log(1 - exp(d)) for d <= 0; the two branches keep full precision on both ends.
inline double log1mexp(double d) {
  if (d >= 0.0) return kNegInf;  // degenerate, callers guard
  return d > -0.6931471805599453 ? std::log(-std::expm1(d))
                                 : std::log1p(-std::exp(d));
}

// log(erfc(x)) for any x, finite far past where erfc underflows (x ~ 27).
// Asymptotic branch: erfc(x) = exp(-x^2)/(x sqrt(pi)) * S(x),
// S = 1 + sum_k (-1)^k (2k-1)!!/(2x^2)^k, truncated where terms < 1e-17 at x >= 15.
double log_erfc(double x);

inline double std_normal_pdf(double z) {
  return 0.3989422804014326779 * std::exp(-0.5 * z * z);
}

inline double log_std_normal_pdf(double z) {
  return -0.91893853320467274178 - 0.5 * z * z;
}

inline double std_normal_cdf(double z) {
  return 0.5 * std::erfc(-z * 0.7071067811865475244);
}

// Pr[lo <= Z <= hi] for standard normal Z, arranged so the far-tail cases never
// cancel: same-sign intervals go through erfc differences on the small side.
double std_normal_interval(double lo, double hi);

// log of the above; finite whenever hi > lo (underflow-free via log_erfc).
double log_std_normal_interval(double lo, double hi);

}  // namespace discbench
