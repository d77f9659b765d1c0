#include "lshade/objectives.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include "lshade/rng.hpp"
#include "lshade/vecmath.hpp"

namespace lshade {

namespace {

constexpr double kPi = std::numbers::pi;

std::vector<double> apply_shift_rot(std::span<const double> x, const std::vector<double>& shift,
                                    const std::vector<double>& rot) {
  const std::size_t d = x.size();
  std::vector<double> z(d);
  for (std::size_t j = 0; j < d; ++j) z[j] = x[j] - shift[j];
  if (!rot.empty()) {
    std::vector<double> rz(d, 0.0);
    for (std::size_t i = 0; i < d; ++i) {
      double s = 0.0;
      for (std::size_t j = 0; j < d; ++j) s += rot[i * d + j] * z[j];
      rz[i] = s;
    }
    return rz;
  }
  return z;
}

// Fixed deterministic interior shift so the default suite is reproducible.
std::vector<double> default_shift(const std::string& id, int dim, double lo, double hi) {
  std::uint64_t tag = 0;
  for (char c : id) tag = tag * 131 + std::uint64_t(static_cast<unsigned char>(c));
  RngStream rng = RngStream::derive(0x501a7eULL, tag, std::uint64_t(dim), 0, Draw::Shift);
  std::vector<double> s(dim);
  const double span = hi - lo;
  for (int j = 0; j < dim; ++j) s[j] = lo + span * (0.2 + 0.6 * rng.next_unit());
  return s;
}

double sphere_fn(std::span<const double> z) {
  double s = 0.0;
  for (double v : z) s += v * v;
  return s;
}

double ellipsoid_fn(std::span<const double> z) {
  const int d = int(z.size());
  double s = 0.0;
  for (int j = 0; j < d; ++j) {
    const double a = d > 1 ? std::pow(10.0, double(j) / double(d - 1)) : 1.0;
    s += a * z[j] * z[j];
  }
  return s;
}

double rosenbrock_fn(std::span<const double> z) {
  double s = 0.0;
  for (std::size_t j = 0; j + 1 < z.size(); ++j) {
    const double a = z[j + 1] - z[j] * z[j];
    const double b = 1.0 - z[j];
    s += 100.0 * a * a + b * b;
  }
  return s;
}

double rastrigin_fn(std::span<const double> z) {
  double s = 10.0 * double(z.size());
  for (double v : z) s += v * v - 10.0 * std::cos(2.0 * kPi * v);
  return s;
}

double ackley_fn(std::span<const double> z) {
  const double d = double(z.size());
  double s2 = 0.0, sc = 0.0;
  for (double v : z) {
    s2 += v * v;
    sc += std::cos(2.0 * kPi * v);
  }
  return -20.0 * std::exp(-0.2 * std::sqrt(s2 / d)) - std::exp(sc / d) + 20.0 + std::numbers::e;
}

}  // namespace

void MorseData::validate() const {
  if (!(mu > 0.0) || !(lip >= mu)) throw std::invalid_argument("MorseData: requires 0 < mu <= lip");
  if (!(r0 > 0.0)) throw std::invalid_argument("MorseData: requires r0 > 0");
}

ObjectiveSpec::ObjectiveSpec(std::string id, int dim, std::vector<double> lower,
                             std::vector<double> upper, double f_star,
                             std::optional<std::vector<double>> x_star,
                             std::optional<MorseData> morse, EvalFn fn)
    : id_(std::move(id)),
      dim_(dim),
      lower_(std::move(lower)),
      upper_(std::move(upper)),
      f_star_(f_star),
      x_star_(std::move(x_star)),
      morse_(std::move(morse)),
      fn_(std::move(fn)) {
  if (dim_ < 1) throw std::invalid_argument("ObjectiveSpec: dim must be positive");
  if (int(lower_.size()) != dim_ || int(upper_.size()) != dim_)
    throw std::invalid_argument("ObjectiveSpec: bound size mismatch");
  for (int j = 0; j < dim_; ++j)
    if (!(lower_[j] < upper_[j])) throw std::invalid_argument("ObjectiveSpec: requires lower < upper");
  if (morse_) morse_->validate();
  if (x_star_) {
    if (int(x_star_->size()) != dim_) throw std::invalid_argument("ObjectiveSpec: x_star size mismatch");
    for (int j = 0; j < dim_; ++j)
      if ((*x_star_)[j] < lower_[j] || (*x_star_)[j] > upper_[j])
        throw std::invalid_argument("ObjectiveSpec: x_star outside the box");
    const double fx = fn_(*x_star_);
    const double scale = std::max(1.0, std::fabs(f_star_));
    if (std::fabs(fx - f_star_) > 1e-12 * scale)
      throw std::invalid_argument("ObjectiveSpec: evaluate(x_star) != f_star");
  }
}

double ObjectiveSpec::evaluate(std::span<const double> x) const {
  if (int(x.size()) != dim_) throw std::invalid_argument("evaluate: dimension mismatch");
  return fn_(x);
}

std::pair<double, double> sublevel_radii(double eps, const MorseData& morse) {
  morse.validate();
  if (!(eps > 0.0)) throw std::invalid_argument("sublevel_radii: eps must be positive");
  if (2.0 * eps > morse.mu * morse.r0 * morse.r0)
    throw std::invalid_argument("sublevel_radii: eps too large for basin (needs 2 eps <= mu r0^2)");
  return {std::sqrt(2.0 * eps / morse.lip), std::sqrt(2.0 * eps / morse.mu)};
}

ShiftRot load_shift_rotation(const std::string& path, int expected_dim) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open shift/rotation file: " + path);
  int d = 0;
  if (!(in >> d)) throw std::runtime_error("malformed shift/rotation file (missing dimension): " + path);
  if (d != expected_dim)
    throw std::runtime_error("shift/rotation file dimension " + std::to_string(d) +
                             " does not match requested dimension " + std::to_string(expected_dim));
  ShiftRot sr;
  sr.shift.resize(d);
  for (int j = 0; j < d; ++j)
    if (!(in >> sr.shift[j])) throw std::runtime_error("malformed shift vector in " + path);
  std::vector<double> rot(std::size_t(d) * d);
  std::size_t got = 0;
  while (got < rot.size() && (in >> rot[got])) ++got;
  if (got == 0) return sr;
  if (got != rot.size()) throw std::runtime_error("malformed rotation matrix in " + path);
  // Orthogonality check: R R^T = I within loose tolerance.
  for (int i = 0; i < d; ++i) {
    for (int j = 0; j < d; ++j) {
      double s = 0.0;
      for (int k = 0; k < d; ++k) s += rot[std::size_t(i) * d + k] * rot[std::size_t(j) * d + k];
      const double want = i == j ? 1.0 : 0.0;
      if (std::fabs(s - want) > 1e-6)
        throw std::runtime_error("rotation matrix in " + path + " is not orthogonal");
    }
  }
  sr.rotation = std::move(rot);
  return sr;
}

namespace {

ObjectiveSpec make_shifted(const std::string& id, int dim, double lo, double hi,
                           const std::optional<ShiftRot>& data, std::optional<MorseData> morse,
                           double (*base)(std::span<const double>),
                           std::vector<double> z_at_min /* minimizer in z coordinates */) {
  std::vector<double> shift = data ? data->shift : default_shift(id, dim, lo, hi);
  if (int(shift.size()) != dim) throw std::invalid_argument(id + ": shift size mismatch");
  std::vector<double> rot = data ? data->rotation : std::vector<double>{};
  std::vector<double> xs(dim);
  if (!rot.empty()) {
    // x_star = shift + R^T z_min (z = R (x - shift)).
    for (int j = 0; j < dim; ++j) {
      double s = 0.0;
      for (int i = 0; i < dim; ++i) s += rot[std::size_t(i) * dim + j] * z_at_min[i];
      xs[j] = shift[j] + s;
    }
  } else {
    for (int j = 0; j < dim; ++j) xs[j] = shift[j] + z_at_min[j];
  }
  auto fn = [shift, rot, base](std::span<const double> x) {
    const std::vector<double> z = apply_shift_rot(x, shift, rot);
    return base(z);
  };
  return ObjectiveSpec(id, dim, std::vector<double>(dim, lo), std::vector<double>(dim, hi), 0.0, xs,
                       std::move(morse), std::move(fn));
}

ObjectiveSpec make_composition(int dim, const std::optional<ShiftRot>& data) {
  const double lo = -100.0, hi = 100.0;
  std::vector<double> o1 = data ? data->shift : default_shift("composition", dim, lo, hi);
  if (int(o1.size()) != dim) throw std::invalid_argument("composition: shift size mismatch");
  // Secondary basins at fixed offsets from the global one, kept inside the box.
  std::vector<double> o2(dim), o3(dim);
  for (int j = 0; j < dim; ++j) {
    o2[j] = std::clamp(o1[j] + ((j % 2 == 0) ? 35.0 : -25.0), lo + 5.0, hi - 5.0);
    o3[j] = std::clamp(o1[j] + ((j % 2 == 0) ? -40.0 : 30.0), lo + 5.0, hi - 5.0);
  }
  const std::vector<std::vector<double>> centers = {o1, o2, o3};
  const double sigma[3] = {10.0, 20.0, 30.0};
  const double lambda[3] = {1.0, 1.0e-1, 1.0e-2};
  const double bias[3] = {0.0, 100.0, 200.0};
  auto fn = [centers, sigma, lambda, bias, dim](std::span<const double> x) {
    double w[3], g[3];
    double wsum = 0.0;
    for (int i = 0; i < 3; ++i) {
      std::vector<double> z(dim);
      for (int j = 0; j < dim; ++j) z[j] = x[j] - centers[i][j];
      const double d2 = sphere_fn(z);
      if (d2 == 0.0) {
        double gi = 0.0;
        switch (i) {
          case 0: gi = sphere_fn(z); break;
          case 1: gi = rastrigin_fn(z); break;
          default: gi = ackley_fn(z); break;
        }
        return lambda[i] * gi + bias[i];
      }
      w[i] = std::exp(-d2 / (2.0 * dim * sigma[i] * sigma[i])) / std::sqrt(d2);
      switch (i) {
        case 0: g[i] = sphere_fn(z); break;
        case 1: g[i] = rastrigin_fn(z); break;
        default: g[i] = ackley_fn(z); break;
      }
      wsum += w[i];
    }
    if (wsum <= 0.0) {
      // All weights underflowed; fall back to the nearest center.
      int best = 0;
      double bd = std::numeric_limits<double>::max();
      for (int i = 0; i < 3; ++i) {
        std::vector<double> z(dim);
        for (int j = 0; j < dim; ++j) z[j] = x[j] - centers[i][j];
        const double d2 = sphere_fn(z);
        if (d2 < bd) {
          bd = d2;
          best = i;
        }
      }
      std::vector<double> z(dim);
      for (int j = 0; j < dim; ++j) z[j] = x[j] - centers[best][j];
      double gi = best == 0 ? sphere_fn(z) : (best == 1 ? rastrigin_fn(z) : ackley_fn(z));
      return lambda[best] * gi + bias[best];
    }
    double f = 0.0;
    for (int i = 0; i < 3; ++i) f += (w[i] / wsum) * (lambda[i] * g[i] + bias[i]);
    return f;
  };
  return ObjectiveSpec("composition", dim, std::vector<double>(dim, lo), std::vector<double>(dim, hi),
                       0.0, o1, std::nullopt, std::move(fn));
}

}  // namespace

ObjectiveSpec make_objective(const std::string& id, int dim, const std::optional<ShiftRot>& data) {
  if (dim < 1) throw std::invalid_argument("make_objective: dim must be positive");
  const std::vector<double> zeros(dim, 0.0);
  if (id == "sphere") {
    // Hessian = 2 I everywhere (orthogonal rotation preserves it).
    MorseData m{2.0, 2.0, 400.0 * std::sqrt(double(dim)), false};
    return make_shifted(id, dim, -100.0, 100.0, data, m, sphere_fn, zeros);
  }
  if (id == "ellipsoid") {
    const double amax = dim > 1 ? 10.0 : 1.0;
    MorseData m{2.0, 2.0 * amax, 400.0 * std::sqrt(double(dim)), false};
    return make_shifted(id, dim, -100.0, 100.0, data, m, ellipsoid_fn, zeros);
  }
  if (id == "rosenbrock") {
    std::vector<double> ones(dim, 1.0);
    auto spec = make_shifted(id, dim, -100.0, 100.0, data, std::nullopt, rosenbrock_fn, ones);
    return spec;
  }
  if (id == "rastrigin") {
    // Per coordinate the Hessian entry is 2 + 40 pi^2 cos(2 pi z); on |z| <= 0.16
    // it stays within [1 + 20 pi^2, 2 + 40 pi^2].
    MorseData m{1.0 + 20.0 * kPi * kPi, 2.0 + 40.0 * kPi * kPi, 0.16, false};
    return make_shifted(id, dim, -5.12, 5.12, data, m, rastrigin_fn, zeros);
  }
  if (id == "ackley") {
    // No MorseData: the exp(-0.2 sqrt(.)) term gives conical growth at the
    // minimizer, so no upper quadratic bound exists on any ball.
    return make_shifted(id, dim, -32.768, 32.768, data, std::nullopt, ackley_fn, zeros);
  }
  if (id == "composition") return make_composition(dim, data);
  throw std::invalid_argument("unknown objective id: " + id);
}

std::vector<std::string> builtin_ids() {
  return {"sphere", "ellipsoid", "rosenbrock", "rastrigin", "ackley", "composition"};
}

std::vector<ObjectiveSpec> builtin_suite(int dim) {
  std::vector<ObjectiveSpec> out;
  for (const auto& id : builtin_ids()) out.push_back(make_objective(id, dim));
  return out;
}

namespace {

bool growth_check(const ObjectiveSpec& spec, const MorseData& m, double r, int samples,
                  RngStream& rng) {
  const auto& xs = *spec.x_star();
  const int d = spec.dim();
  std::vector<double> y(d);
  for (int s = 0; s < samples; ++s) {
    // Uniform direction, radius with correct ball density.
    double n2 = 0.0;
    for (int j = 0; j < d; ++j) {
      y[j] = rng.normal(0.0, 1.0);
      n2 += y[j] * y[j];
    }
    const double nrm = std::sqrt(n2);
    const double rad = r * std::pow(rng.next_unit_pos(), 1.0 / double(d));
    bool inside = true;
    for (int j = 0; j < d; ++j) {
      y[j] = xs[j] + rad * y[j] / nrm;
      if (y[j] < spec.lower()[j] || y[j] > spec.upper()[j]) inside = false;
    }
    if (!inside) continue;
    const double fx = spec.evaluate(y);
    const double q = dist2(y, xs);
    const double lo = spec.f_star() + 0.5 * m.mu * q;
    const double hi = spec.f_star() + 0.5 * m.lip * q;
    const double slack = 1e-9 * std::max(1.0, std::fabs(fx));
    if (fx < lo - slack || fx > hi + slack) return false;
  }
  return true;
}

}  // namespace

std::optional<MorseData> estimate_morse(const ObjectiveSpec& spec, int growth_samples,
                                        std::uint64_t seed) {
  if (!spec.x_star()) return std::nullopt;
  const int d = spec.dim();
  const auto& xs = *spec.x_star();
  const double h = 1e-4;

  // Central-difference Hessian at the minimizer.
  std::vector<double> H(std::size_t(d) * d, 0.0);
  std::vector<double> p(xs.begin(), xs.end());
  const double f0 = spec.evaluate(p);
  for (int i = 0; i < d; ++i) {
    p[i] = xs[i] + h;
    const double fp = spec.evaluate(p);
    p[i] = xs[i] - h;
    const double fm = spec.evaluate(p);
    p[i] = xs[i];
    H[std::size_t(i) * d + i] = (fp - 2.0 * f0 + fm) / (h * h);
  }
  for (int i = 0; i < d; ++i) {
    for (int j = i + 1; j < d; ++j) {
      p[i] = xs[i] + h;
      p[j] = xs[j] + h;
      const double fpp = spec.evaluate(p);
      p[j] = xs[j] - h;
      const double fpm = spec.evaluate(p);
      p[i] = xs[i] - h;
      p[j] = xs[j] + h;
      const double fmp = spec.evaluate(p);
      p[j] = xs[j] - h;
      const double fmm = spec.evaluate(p);
      p[i] = xs[i];
      p[j] = xs[j];
      const double v = (fpp - fpm - fmp + fmm) / (4.0 * h * h);
      H[std::size_t(i) * d + j] = v;
      H[std::size_t(j) * d + i] = v;
    }
  }

  RngStream rng = RngStream::derive(seed, 0, 0, 0, Draw::Estimator);
  // Rayleigh quotient after power iteration on (sign*H + shift*I).
  auto rayleigh_dominant = [&](double sign, double shift) {
    std::vector<double> v(d), w(d);
    for (int j = 0; j < d; ++j) v[j] = rng.normal(0.0, 1.0);
    auto mv = [&](const std::vector<double>& in, std::vector<double>& out) {
      for (int i = 0; i < d; ++i) {
        double s = shift * in[i];
        for (int j = 0; j < d; ++j) s += sign * H[std::size_t(i) * d + j] * in[j];
        out[i] = s;
      }
    };
    for (int it = 0; it < 400; ++it) {
      mv(v, w);
      const double n = norm2(w);
      if (n == 0.0) return 0.0;
      for (int j = 0; j < d; ++j) v[j] = w[j] / n;
    }
    mv(v, w);
    double rq = 0.0;
    for (int j = 0; j < d; ++j) rq += v[j] * w[j];
    return rq;
  };

  // Gershgorin bound keeps both shifted matrices positive semidefinite.
  double gersh = 0.0;
  for (int i = 0; i < d; ++i) {
    double row = 0.0;
    for (int j = 0; j < d; ++j) row += std::fabs(H[std::size_t(i) * d + j]);
    gersh = std::max(gersh, row);
  }
  if (!(gersh > 0.0) || !std::isfinite(gersh)) return std::nullopt;
  const double lam_max = rayleigh_dominant(+1.0, gersh) - gersh;  // dominant of H + gI
  const double lam_min = gersh - rayleigh_dominant(-1.0, gersh);  // dominant of gI - H

  if (!(lam_min > 0.0) || !(lam_max >= lam_min) || !std::isfinite(lam_min) || !std::isfinite(lam_max))
    return std::nullopt;

  // Safety factors, then the largest radius passing the sampling check.
  MorseData m;
  m.mu = 0.5 * lam_min;
  m.lip = 2.0 * lam_max;
  m.estimated = true;

  double r_hi = 0.0;
  for (int j = 0; j < d; ++j) r_hi += (spec.upper()[j] - spec.lower()[j]) * (spec.upper()[j] - spec.lower()[j]);
  r_hi = 0.5 * std::sqrt(r_hi);
  double r_lo = 0.0;
  double r_ok = 0.0;
  // Find some passing radius first by geometric shrink.
  double r = r_hi;
  for (int it = 0; it < 60 && r > 1e-9 * r_hi; ++it) {
    m.r0 = r;
    RngStream check = RngStream::derive(seed, 7, it, 0, Draw::Estimator);
    if (growth_check(spec, m, r, growth_samples, check)) {
      r_ok = r;
      break;
    }
    r *= 0.5;
  }
  if (r_ok == 0.0) return std::nullopt;
  // Bisect between the passing radius and the next failing one above it.
  r_lo = r_ok;
  r_hi = std::min(r_hi, 2.0 * r_ok);
  for (int it = 0; it < 30; ++it) {
    const double mid = 0.5 * (r_lo + r_hi);
    m.r0 = mid;
    RngStream check = RngStream::derive(seed, 9, it, 0, Draw::Estimator);
    if (growth_check(spec, m, mid, growth_samples, check))
      r_lo = mid;
    else
      r_hi = mid;
  }
  m.r0 = r_lo;
  m.validate();
  return m;
}

}  // namespace lshade
