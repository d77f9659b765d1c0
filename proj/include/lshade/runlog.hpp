#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "lshade/engine.hpp"
#include "lshade/survival.hpp"

namespace lshade {

// One generation line. Row t describes the post-generation state S_t: the
// witness columns certify generation t+1, `hit` marks the first-hit event
// E_t, and `pbest_hit` records whether the monitored p-best trial of
// generation t landed in A_eps (paired with row t-1's conditioned flag).
struct LogRow {
  int gen = 0;
  long long nfe = 0;
  int pop = 0;
  int arch = 0;
  double best_f = 0.0;
  int l1 = 0, l2 = 0, l3 = 0;
  double interval_measure = 0.0;
  double density_inf = 0.0;
  double cr_tail = 0.0;
  double a_t = std::numeric_limits<double>::quiet_NaN();
  double a_tilde = std::numeric_limits<double>::quiet_NaN();
  int g1 = -1, g2 = -1, g3 = -1, g4 = -1, g5 = -1;
  int hit = 0;
  int cond = 0;
  double c_pair = std::numeric_limits<double>::quiet_NaN();
  int pbest_hit = -1;  // -1 = no monitored trial this generation
};

inline constexpr const char* kLogSchema =
    "gen nfe N A best_f L1 L2 L3 interval_measure density_inf cr_tail a_t a_tilde "
    "G1 G2 G3 G4 G5 hit cond c_pair pbest_hit";

struct RunLog {
  int run_id = 0;
  std::uint64_t seed = 0;
  std::string objective;
  int dim = 0;
  double eps = 0.0;
  long long budget = 0;
  double f_star = 0.0;
  EngineConfig engine;  // resolved

  std::vector<LogRow> rows;

  long long tau_gen = -1;
  long long tau_eval = -1;
  long long censor_gen = 0;
  long long censor_nfe = 0;

  HitRecord hit_record() const;
  std::string serialize() const;
  static RunLog parse(std::istream& in);
  static RunLog parse_file(const std::string& path);
};

std::string format_double(double v);  // %.17g round-trip formatting

}  // namespace lshade
