#pragma once

#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "lshade/objectives.hpp"
#include "lshade/rng.hpp"

namespace lshade {

struct EngineConfig {
  int n_init = 0;        // 0 resolves to 18*d
  int n_min = 4;
  int memory_size = 6;   // H
  double p_best = 0.11;
  double arc_rate = 2.6;
  double sigma_f = 0.1;
  double sigma_cr = 0.1;
  long long max_nfe = 0; // 0 resolves to 10000*d
  std::uint64_t seed = 1;
  bool terminal_cr_memory = false;  // classic terminal-memory rule, off by default

  EngineConfig resolved(int dim) const;
  void validate() const;  // call on a resolved config
};

struct Individual {
  std::vector<double> x;
  double f = 0.0;
};

struct AlgoState {
  std::vector<Individual> population;
  std::vector<std::vector<double>> archive;
  std::vector<double> mem_f, mem_cr;
  std::vector<bool> mem_cr_terminal;
  int slot_ptr = 0;
  long long nfe = 0;
  int gen = 0;
  int archive_capacity = 0;

  // First-hit bookkeeping (-1 = not hit yet).
  long long tau_gen = -1;
  long long tau_eval = -1;

  int best_index() const;
  double best_f() const;
  // Indices of the m = max(1, ceil(p*N)) best individuals, ties by index.
  std::vector<int> pbest_set(double p) const;
};

struct IndividualDraw {
  int slot = 0;          // K_i, 1-based
  double f_scale = 0.0;  // F_i
  double cr = 0.0;       // CR_i (meaningful even when undefined-for-memory)
  bool cr_defined = true;
  int b = -1;
  int r1 = -1;
  int r2 = -1;           // >= N refers to archive entry r2 - N
  bool evaluated = false;
  bool accepted = false;
  bool improved = false;
  double trial_f = std::numeric_limits<double>::quiet_NaN();
};

struct GenerationRecord {
  int gen = 0;
  long long nfe_at_start = 0;
  int pop_size = 0;       // at start of the generation
  int archive_size = 0;   // at start
  double best_f = 0.0;    // at start
  int best_index = 0;     // at start
  std::vector<IndividualDraw> draws;
  bool hit_this_gen = false;  // some evaluated trial landed in A_eps
  bool truncated = false;     // budget ran out mid-generation
  int pop_size_end = 0;
  int archive_size_end = 0;
  double best_f_end = 0.0;
};

struct RunTrace {
  std::string objective_id;
  int dim = 0;
  double eps = 0.0;
  EngineConfig config;  // resolved
  std::vector<double> init_f;  // fitness values in initial evaluation order
  std::vector<GenerationRecord> records;
  long long tau_gen = -1;   // -1 = censored
  long long tau_eval = -1;
  long long censor_gen = 0; // last completed generation
  long long censor_nfe = 0; // budget
  double final_best_f = 0.0;
};

// Parameter sampling. `rng` needs next_unit()/next_unit_pos(); templated so
// tests can drive exact quantiles.
template <class Rng>
double sample_f(double mem_f_slot, double scale, Rng& rng, long long retry_cap = 1000000) {
  for (long long attempt = 0; attempt < retry_cap; ++attempt) {
    const double u = rng.next_unit_pos();
    const double x = mem_f_slot + scale * std::tan(std::numbers::pi * (u - 0.5));
    if (x <= 0.0) continue;
    return x > 1.0 ? 1.0 : x;
  }
  throw std::runtime_error("sample_f: retry cap exhausted");
}

template <class Rng>
double sample_cr(double mem_cr_slot, double sigma, Rng& rng) {
  const double y = mem_cr_slot + sigma * norminv(rng.next_unit_pos());
  if (y < 0.0) return 0.0;
  if (y > 1.0) return 1.0;
  return y;
}

struct SelectedIndices {
  int slot;  // 0-based memory slot; K_i = slot + 1
  int b;
  int r1;
  int r2;  // >= N means archive entry r2 - N
};

// Draw order is fixed: slot, b, r1, r2.
SelectedIndices select_indices(const AlgoState& state, int i, double p_best, RngStream& rng);

std::vector<double> mutate(std::span<const double> x_i, std::span<const double> x_b,
                           std::span<const double> x_r1, std::span<const double> x_r2, double f);

std::vector<double> boundary_repair(std::span<const double> v_tilde, std::span<const double> x_parent,
                                    std::span<const double> lower, std::span<const double> upper);

struct CrossoverResult {
  std::vector<double> u;
  bool cr_defined;  // false when no non-forced coordinate choice was exercised
  int mutant_coords;
};

CrossoverResult crossover(std::span<const double> v, std::span<const double> x, double cr,
                          RngStream& rng);

// Linear population size reduction schedule value at the given NFE count.
int lpsr_population(const EngineConfig& cfg, long long nfe);

struct SchedulePoint {
  int gen;              // 1-based generation index
  long long nfe_start;  // evaluations consumed before the generation
  int pop_size;         // population size during the generation
};

// Deterministic generation/NFE/population schedule implied by the config.
std::vector<SchedulePoint> lpsr_schedule(const EngineConfig& cfg);

AlgoState init_state(const ObjectiveSpec& spec, const EngineConfig& cfg, double eps,
                     GenerationRecord* init_record = nullptr);

GenerationRecord step_generation(AlgoState& state, const ObjectiveSpec& spec,
                                 const EngineConfig& cfg, double eps);

RunTrace run(const ObjectiveSpec& spec, const EngineConfig& cfg, double eps);

}  // namespace lshade
