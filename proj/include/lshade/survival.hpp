#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "lshade/engine.hpp"

namespace lshade {

struct HitRecord {
  int run_id = 0;
  std::uint64_t seed = 0;
  bool hit = false;
  long long tau_gen = -1;
  long long tau_eval = -1;
  long long censor_gen = 0;  // last completed generation
  long long censor_nfe = 0;  // evaluation budget
};

enum class TimeIndex { Gen, Eval };

// Recomputes the first-hit record from a trace (the engine tracks the same
// quantities online; the two must agree).
HitRecord first_hit(const RunTrace& trace, double eps, const ObjectiveSpec& spec);

struct KMCurve {
  std::vector<long long> event_times;  // sorted distinct uncensored times
  std::vector<long long> at_risk;
  std::vector<long long> events;
  std::vector<double> survival;  // product-limit value at each event time
  std::vector<double> se;        // Greenwood standard error
  long long censored_count = 0;
  long long horizon = 0;  // largest observed time (event or censor)

  // Step-function evaluation S(n), SE(n).
  double value_at(long long n) const;
  double se_at(long long n) const;
};

KMCurve km_estimate(const std::vector<HitRecord>& records, TimeIndex index);

// Synthetic hazard process for identity/bound verification. `mark` draws an
// auxiliary observable per step (near-miss flags and the like); `hazard` maps
// (t, marks so far) to the conditional first-hit probability at t.
struct SyntheticHazard {
  std::function<double(int t, const std::vector<int>& marks)> hazard;
  std::function<int(int t, RngStream&)> mark;  // optional; null = no marks
  int horizon = 0;
};

struct SyntheticResult {
  std::vector<double> survival;      // empirical P(tau > n), n = 0..horizon
  std::vector<double> se;            // binomial standard errors
  std::vector<double> mean_product;  // MC estimate of E[prod_{t<=n} (1 - p_t)]
  std::vector<long long> at_risk;    // survivors entering step n
  std::vector<long long> events;     // first hits at step n
  long long reps = 0;

  // Cross-estimated survival-only hazard h_n = events/at_risk.
  double hazard_at(int n) const;
};

SyntheticResult simulate_synthetic(const SyntheticHazard& process, long long reps,
                                   std::uint64_t seed, bool parallel = false);

// Corollary-form tail bounds.
double tail_bound_constant(double a, long long n, double p0c);
double expected_tau_bound(double a, double p0c);
double tail_bound_power(double c, double alpha, long long n, double p0c);

struct EnvelopePair {
  std::vector<double> product;      // p0c * prod_{t<=n} (1 - a_t g_t), n = 0..T
  std::vector<double> exponential;  // p0c * exp(-sum_{t<=n} a_t g_t)
};

EnvelopePair envelope_from_witness(const std::vector<double>& a_series,
                                   const std::vector<double>& gamma_series, double p0c);

// Two-phase plug-in bound: frac{T_wit > n} + p0c * mean over stabilized
// samples of exp(-a_min gamma0 (n - T_wit)). Samples use kTwitInfinity for
// runs that never stabilize.
double two_phase_envelope(double a_min, double gamma0, const std::vector<long long>& twit_samples,
                          long long n, double p0c);

struct GeometricFit {
  double p_hat = 0.0;
  double clustering = 0.0;  // sample variance / fitted geometric variance
  bool clustering_defined = false;
  std::string regime;  // clustered | near-geometric | heavy/other | intractable | insufficient
};

GeometricFit geometric_fit_and_cluster(const std::vector<HitRecord>& records);

struct EnvelopeViolation {
  long long n;
  double km_value;
  double km_se;
  double envelope;
};

// Checks S_hat(n) <= envelope(n) + SE(n) on n = 0..envelope.size()-1.
std::vector<EnvelopeViolation> envelope_validity_check(const KMCurve& km,
                                                       const std::vector<double>& envelope);

}  // namespace lshade
