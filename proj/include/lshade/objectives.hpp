#pragma once

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace lshade {

// Local strong-convexity/smoothness constants around the global minimizer:
// mu*I <= Hessian <= lip*I on B(x_star, r0).
struct MorseData {
  double mu = 0.0;
  double lip = 0.0;
  double r0 = 0.0;
  bool estimated = false;

  double kappa() const { return lip / mu; }
  void validate() const;
};

class ObjectiveSpec {
 public:
  using EvalFn = std::function<double(std::span<const double>)>;

  ObjectiveSpec(std::string id, int dim, std::vector<double> lower, std::vector<double> upper,
                double f_star, std::optional<std::vector<double>> x_star,
                std::optional<MorseData> morse, EvalFn fn);

  const std::string& id() const { return id_; }
  int dim() const { return dim_; }
  const std::vector<double>& lower() const { return lower_; }
  const std::vector<double>& upper() const { return upper_; }
  double f_star() const { return f_star_; }
  const std::optional<std::vector<double>>& x_star() const { return x_star_; }
  const std::optional<MorseData>& morse() const { return morse_; }

  double evaluate(std::span<const double> x) const;

  // Sublevel-set membership from a cached objective value.
  bool hit(double f, double eps) const { return f <= f_star_ + eps; }

 private:
  std::string id_;
  int dim_;
  std::vector<double> lower_, upper_;
  double f_star_;
  std::optional<std::vector<double>> x_star_;
  std::optional<MorseData> morse_;
  EvalFn fn_;
};

// Inner/outer ball radii of the eps-sublevel set: (sqrt(2 eps / L), sqrt(2 eps / mu)).
// Requires eps > 0 and 2 eps <= mu r0^2.
std::pair<double, double> sublevel_radii(double eps, const MorseData& morse);

// Optional shift/rotation loaded from a plain-text data file:
//   line 1: d
//   line 2: d reals (shift)
//   lines 3..d+2 (optional): d x d rotation matrix, row-major
struct ShiftRot {
  std::vector<double> shift;
  std::vector<double> rotation;  // row-major d*d; empty = identity
};

ShiftRot load_shift_rotation(const std::string& path, int expected_dim);

// Factory by id: sphere, ellipsoid, rosenbrock, rastrigin, ackley, composition.
// Default shift is a fixed deterministic interior point per (id, dim).
ObjectiveSpec make_objective(const std::string& id, int dim,
                             const std::optional<ShiftRot>& data = std::nullopt);

std::vector<std::string> builtin_ids();

// The local benchmark suite at the requested dimension.
std::vector<ObjectiveSpec> builtin_suite(int dim);

// Numeric Morse-constant estimator: finite-difference Hessian at x_star,
// extreme eigenvalues by power iteration, r0 by bisection on the two-sided
// quadratic-growth sampling check. Returns nullopt when no radius passes
// (e.g. the objective is not locally quadratic at its minimizer).
std::optional<MorseData> estimate_morse(const ObjectiveSpec& spec, int growth_samples = 200,
                                        std::uint64_t seed = 0x5eed0);

}  // namespace lshade
