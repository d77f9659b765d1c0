#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <stdexcept>
#include <vector>

namespace lshade {

inline double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

// Wichura's AS241 (PPND16) inverse normal CDF, good to ~1e-15.
inline double norminv(double p) {
  if (p <= 0.0) return -std::numeric_limits<double>::infinity();
  if (p >= 1.0) return std::numeric_limits<double>::infinity();
  const double q = p - 0.5;
  double r;
  if (std::fabs(q) <= 0.425) {
    r = 0.180625 - q * q;
    return q *
           (((((((2.5090809287301226727e3 * r + 3.3430575583588128105e4) * r +
                 6.7265770927008700853e4) * r + 4.5921953931549871457e4) * r +
               1.3731693765509461125e4) * r + 1.9715909503065514427e3) * r +
             1.3314166789178437745e2) * r + 3.3871328727963666080e0) /
           (((((((5.2264952788528545610e3 * r + 2.8729085735721942674e4) * r +
                 3.9307895800092710610e4) * r + 2.1213794301586595867e4) * r +
               5.3941960214247511077e3) * r + 6.8718700749205790830e2) * r +
             4.2313330701600911252e1) * r + 1.0);
  }
  r = q < 0.0 ? p : 1.0 - p;
  r = std::sqrt(-std::log(r));
  double val;
  if (r <= 5.0) {
    r -= 1.6;
    val = (((((((7.74545014278341407640e-4 * r + 2.27238449892691845833e-2) * r +
                2.41780725177450611770e-1) * r + 1.27045825245236838258e0) * r +
              3.64784832476320460504e0) * r + 5.76949722146069140550e0) * r +
            4.63033784615654529590e0) * r + 1.42343711074968357734e0) /
          (((((((1.05075007164441684324e-9 * r + 5.47593808499534494600e-4) * r +
                1.51986665636164571966e-2) * r + 1.48103976427480074590e-1) * r +
              6.89767334985100004550e-1) * r + 1.67638483018380384940e0) * r +
            2.05319162663775882187e0) * r + 1.0);
  } else {
    r -= 5.0;
    val = (((((((2.01033439929228813265e-7 * r + 2.71155556874348757815e-5) * r +
                1.24266094738807843860e-3) * r + 2.65321895265761230930e-2) * r +
              2.96560571828504891230e-1) * r + 1.78482653991729133580e0) * r +
            5.46378491116411436990e0) * r + 6.65790464350110377720e0) /
          (((((((2.04426310338993978564e-15 * r + 1.42151175831644588870e-7) * r +
                1.84631831751005468180e-5) * r + 7.86869131145613259100e-4) * r +
              1.48753612908506148525e-2) * r + 1.36929880922735805310e-1) * r +
            5.99832206555887937690e-1) * r + 1.0);
  }
  return q < 0.0 ? -val : val;
}

// P(Bin(n, p) >= k). Exact for p = 1/2 up to n ~ 50 (all intermediates are
// dyadic rationals below 2^53).
inline double binom_tail_geq(int n, double p, int k) {
  if (n < 0) throw std::invalid_argument("binom_tail_geq: n < 0");
  if (p < 0.0 || p > 1.0) throw std::invalid_argument("binom_tail_geq: p outside [0,1]");
  if (k <= 0) return 1.0;
  if (k > n) return 0.0;
  if (p == 0.0) return 0.0;
  if (p == 1.0) return 1.0;
  // C(n, k) by the multiplicative recurrence, then walk terms upward. For
  // p = 1/2 every intermediate is a dyadic rational below 2^53, so the tail
  // is exact up to n ~ 50.
  double coef = 1.0;
  for (int i = 0; i < k; ++i) coef = coef * double(n - i) / double(i + 1);
  const double q = 1.0 - p;
  double term = p == 0.5 ? std::ldexp(coef, -n) : coef * std::pow(p, k) * std::pow(q, n - k);
  double sum = term;
  for (int j = k; j < n; ++j) {
    term = term * (double(n - j) / double(j + 1)) * (p / q);
    sum += term;
  }
  return sum < 0.0 ? 0.0 : (sum > 1.0 ? 1.0 : sum);
}

// Upper chi-square quantile via the Wilson–Hilferty cube approximation.
inline double chisq_crit(double df, double alpha) {
  if (df <= 0.0) throw std::invalid_argument("chisq_crit: df <= 0");
  const double z = norminv(1.0 - alpha);
  const double a = 2.0 / (9.0 * df);
  const double c = 1.0 - a + z * std::sqrt(a);
  return df * c * c * c;
}

struct WilsonCI {
  double lo, hi;
};

inline WilsonCI wilson_interval(double successes, double n, double z = 1.96) {
  if (n <= 0.0) return {0.0, 1.0};
  const double phat = successes / n;
  const double z2 = z * z;
  const double denom = 1.0 + z2 / n;
  const double center = phat + z2 / (2.0 * n);
  const double rad = z * std::sqrt(phat * (1.0 - phat) / n + z2 / (4.0 * n * n));
  double lo = (center - rad) / denom;
  double hi = (center + rad) / denom;
  if (lo < 0.0) lo = 0.0;
  if (hi > 1.0) hi = 1.0;
  return {lo, hi};
}

inline double sample_mean(const std::vector<double>& v) {
  if (v.empty()) throw std::invalid_argument("sample_mean: empty");
  double s = 0.0;
  for (double x : v) s += x;
  return s / double(v.size());
}

inline double sample_variance(const std::vector<double>& v) {
  if (v.size() < 2) throw std::invalid_argument("sample_variance: needs >= 2 values");
  const double m = sample_mean(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return s / double(v.size() - 1);
}

}  // namespace lshade
