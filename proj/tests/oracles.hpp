// Independent numeric oracles used to freeze expected values. These must stay
// implementation-independent from the library paths they check.
#pragma once

#include <cmath>
#include <functional>
#include <numbers>
#include <vector>

#include "lshade/rng.hpp"

namespace oracles {

// Composite Simpson on [a, b] with n (even) panels.
inline double simpson(const std::function<double(double)>& f, double a, double b, int n = 4096) {
  if (n % 2) ++n;
  const double h = (b - a) / n;
  double s = f(a) + f(b);
  for (int i = 1; i < n; ++i) s += f(a + i * h) * (i % 2 ? 4.0 : 2.0);
  return s * h / 3.0;
}

inline double cauchy_pdf(double x, double loc, double scale) {
  const double t = (x - loc) / scale;
  return 1.0 / (std::numbers::pi * scale * (1.0 + t * t));
}

// Mass of the raw Cauchy on (0, +inf) by quadrature: integral over (0,1] plus
// the transformed tail integral over (0,1] via u = 1/x.
inline double cauchy_positive_mass(double loc, double scale) {
  auto pdf = [&](double x) { return cauchy_pdf(x, loc, scale); };
  const double head = simpson(pdf, 1e-12, 1.0);
  auto tail = [&](double u) {
    if (u < 1e-12) return 0.0;
    const double x = 1.0 / u;
    return cauchy_pdf(x, loc, scale) * x * x;
  };
  return head + simpson(tail, 1e-12, 1.0);
}

// P(F in [lo, hi]) for the positive-part-conditioned Cauchy draw.
inline double truncated_cauchy_mass(double loc, double scale, double lo, double hi) {
  auto pdf = [&](double x) { return cauchy_pdf(x, loc, scale); };
  return simpson(pdf, lo, hi) / cauchy_positive_mass(loc, scale);
}

// Normal upper tail by quadrature (integrates the pdf over [z, z+12 sigma]).
inline double normal_upper_tail(double z) {
  auto pdf = [](double t) {
    return std::exp(-0.5 * t * t) / std::sqrt(2.0 * std::numbers::pi);
  };
  return simpson(pdf, z, z + 12.0, 8192);
}

// log C(n, k) via lgamma; pmf route independent of the library's recurrence.
inline double binom_pmf_lgamma(int n, double p, int k) {
  if (k < 0 || k > n) return 0.0;
  if (p == 0.0) return k == 0 ? 1.0 : 0.0;
  if (p == 1.0) return k == n ? 1.0 : 0.0;
  const double lc = std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0);
  return std::exp(lc + k * std::log(p) + (n - k) * std::log1p(-p));
}

inline double binom_tail_lgamma(int n, double p, int k) {
  double s = 0.0;
  for (int j = std::max(0, k); j <= n; ++j) s += binom_pmf_lgamma(n, p, j);
  return std::min(1.0, s);
}

// Uniform point in the d-ball of radius r around c.
inline std::vector<double> ball_point(lshade::RngStream& rng, const std::vector<double>& c,
                                      double r) {
  const std::size_t d = c.size();
  std::vector<double> y(d);
  double n2 = 0.0;
  for (std::size_t j = 0; j < d; ++j) {
    y[j] = rng.normal(0.0, 1.0);
    n2 += y[j] * y[j];
  }
  const double nrm = std::sqrt(n2);
  const double rad = r * std::pow(rng.next_unit_pos(), 1.0 / double(d));
  for (std::size_t j = 0; j < d; ++j) y[j] = c[j] + rad * y[j] / nrm;
  return y;
}

// Uniform point on the sphere of radius r around c.
inline std::vector<double> sphere_point(lshade::RngStream& rng, const std::vector<double>& c,
                                        double r) {
  const std::size_t d = c.size();
  std::vector<double> y(d);
  double n2 = 0.0;
  for (std::size_t j = 0; j < d; ++j) {
    y[j] = rng.normal(0.0, 1.0);
    n2 += y[j] * y[j];
  }
  const double nrm = std::sqrt(n2);
  for (std::size_t j = 0; j < d; ++j) y[j] = c[j] + r * y[j] / nrm;
  return y;
}

// Fixed-quantile generator for driving samplers through exact branches.
struct FakeRng {
  std::vector<double> quantiles;
  std::size_t next = 0;
  double next_unit() { return next_unit_pos(); }
  double next_unit_pos() {
    if (next >= quantiles.size()) throw std::runtime_error("FakeRng exhausted");
    return quantiles[next++];
  }
};

}  // namespace oracles
