#pragma once

#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "lshade/engine.hpp"
#include "lshade/objectives.hpp"

namespace lshade {

struct WitnessConfig {
  double f_minus = 0.1;   // working F-range lower end
  double f_plus = 0.9;    // working F-range upper end
  double delta_f = 0.05;  // minimal success-window measure
  double c_cr = 0.5;      // crossover threshold
  double g_minus = 0.5;   // F-density floor
  double q_minus = 0.5;   // CR-tail floor
  int r_mask = -1;        // replaced-coordinate budget; -1 resolves to median_r(d, c_cr)
  double eps = 0.0;       // target tolerance
  int grid_points = 256;

  int resolved_r(int dim) const;
  // Throws on hard violations; returns advisory warnings (e.g. f_plus == 1).
  std::vector<std::string> validate() const;
};

struct RegimeParams {
  double eps_in = 0.0;   // target tolerance
  double eps_out = 0.0;  // witness-regime tolerance, > eps_in
  double r_conc = 0.0;   // donor-concentration radius; <= 0 resolves from Morse data
  int m_cluster = 4;

  double resolved_r_conc(const std::optional<MorseData>& morse, const WitnessConfig& wc,
                         double box_diag) const;
  void validate() const;
};

struct RegimeFlags {
  // 1 = holds, 0 = fails, -1 = unknown (missing Morse data).
  int g1 = -1, g2 = 0, g3 = 0, g4 = -1, g5 = 0;
  int cluster_size = 0;
  double cluster_diam = 0.0;
  bool all() const { return g1 == 1 && g2 == 1 && g3 == 1 && g4 == 1 && g5 == 1; }
};

struct WitnessTuple {
  int i = -1, b = -1, r1 = -1, r2 = -1;  // r2 >= N refers to archive
  int k = 0;                             // memory slot, 1-based
};

struct WitnessReport {
  int gen = 0;
  bool l1 = false, l2 = false, l3 = false;
  std::optional<WitnessTuple> tuple;  // present when the joint witness holds
  double interval_measure = 0.0;      // measured lambda(I) for the best candidate
  double density_inf = 0.0;           // at the chosen slot
  double cr_tail = 0.0;               // at the chosen slot
  double a_t = std::numeric_limits<double>::quiet_NaN();

  // Morse-tightened quantities (quiet when preconditions are unmet).
  bool conditioned = false;  // (C1)-(C3)
  int cond_b = -1;           // monitored p-best index
  double beta1 = 0.0, beta2 = 0.0;
  double c_pair = std::numeric_limits<double>::quiet_NaN();
  double a_tilde = std::numeric_limits<double>::quiet_NaN();

  std::optional<RegimeFlags> regime;
};

// --- certified constants -------------------------------------------------

// eta_r(d, c) = P(Bin(d-1, c) >= d - r - 1); exact binomial tail.
double eta_r(int d, double c_cr, int r);

// r = d - 1 - floor((d-1) c); guarantees eta_r >= 1/2.
int median_r(int d, double c_cr);

// Grid estimate of the success-F window measure for the repaired mutant ray.
double success_f_interval(const ObjectiveSpec& spec, std::span<const double> x_i,
                          std::span<const double> x_b, std::span<const double> x_r1,
                          std::span<const double> x_r2, const WitnessConfig& cfg);

// Infimum over [f_minus, f_plus] of the positive-part-conditioned Cauchy
// density (continuous part; the atom at 1 is excluded).
double cauchy_density_inf(double location, double scale, double f_minus, double f_plus);

// P(CR >= c_cr) for the clipped normal.
double cr_tail(double location, double sigma, double c_cr);

// Lemma-form hazard floor on the witness event; throws unless L1-L3 hold.
double hazard_floor_a(const WitnessConfig& cfg, int memory_size, int m_pbest, int s1, int s2,
                      double interval_measure, double density_inf, double cr_tail_val, int d);

// --- Morse geometry -------------------------------------------------------

double r_safe(double eps, double lip);

// Crossover-stability radius; r = 0 means nothing is replaced (+inf).
double delta_max(double eps, double lip, int r);

// Exhaustive hybrid check of (eps, r, delta)-crossover-stability for one
// (v, x) pair. Enumerates all index sets replacing at most r coordinates.
bool crossover_stable_check(const ObjectiveSpec& spec, double eps, int r, double delta,
                            std::span<const double> v, std::span<const double> x);

bool donor_pair_good(std::span<const double> x_r1, std::span<const double> x_r2,
                     const ObjectiveSpec& spec, const WitnessConfig& cfg);

// Success-F interval length certified by strong convexity along the segment;
// f0 in (0,1], c = mu |v_b(F0)-x_b|^2 / (8 eps).
double strong_convex_interval(double f0, double c);

double c_pair_bound(double beta1, double beta2, int s2);

double morse_hazard_floor(double c_pair, int memory_size, const WitnessConfig& cfg, int d);

double gamma0(int memory_size, double g_minus, double f_range, double q_minus, double p, int n,
              int archive, int m_cluster);

RegimeFlags detect_regime(const AlgoState& state, const ObjectiveSpec& spec,
                          const RegimeParams& params, const WitnessConfig& wc,
                          double sigma_f = 0.1, double sigma_cr = 0.1);

// First index t such that flags hold for all s >= t; kTwitInfinity if none.
inline constexpr long long kTwitInfinity = std::numeric_limits<long long>::max();
long long twit_from_flags(const std::vector<bool>& g_holds);

struct NoisyDescentCheck {
  double lhs;  // f(v)
  double rhs;  // descent bound
  bool holds;
};

NoisyDescentCheck verify_noisy_descent(const ObjectiveSpec& spec, double mu, double lip, double r0,
                                       std::span<const double> x, std::span<const double> z,
                                       std::span<const double> x_r1, std::span<const double> x_r2,
                                       double f);

// Per-generation witness/regime evaluation on a post-generation state.
// p_best and the sampling scales come from the engine configuration.
WitnessReport evaluate_witness(const AlgoState& state, const ObjectiveSpec& spec,
                               const WitnessConfig& cfg, double p_best = 0.11,
                               double sigma_f = 0.1, double sigma_cr = 0.1,
                               const RegimeParams* regime = nullptr);

}  // namespace lshade
