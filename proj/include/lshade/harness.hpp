#pragma once

#include <optional>
#include <string>
#include <vector>

#include "lshade/objectives.hpp"
#include "lshade/runlog.hpp"
#include "lshade/survival.hpp"
#include "lshade/witness.hpp"

namespace lshade {

struct ExperimentConfig {
  std::vector<std::string> objectives;
  int dim = 10;
  std::vector<double> eps_list;
  std::vector<long long> budgets;  // empty = engine.max_nfe only
  int runs = 51;
  std::uint64_t master_seed = 1;
  std::string out_dir = "out";
  int threads = 0;  // 0 = library default

  EngineConfig engine;
  WitnessConfig witness;  // eps filled per experiment entry
  double regime_eps_out_factor = 100.0;
  double regime_r_conc = 0.0;  // 0 = auto
  int regime_m_cluster = 4;
  std::optional<std::string> data_dir;  // shift/rotation files <id>.txt

  static ExperimentConfig from_json_file(const std::string& path);
  static ExperimentConfig from_json_text(const std::string& text);
  std::string to_json() const;
  void validate() const;
};

// One fully instrumented seeded run: engine loop + per-generation witness and
// regime evaluation, streamed into a RunLog.
RunLog run_instrumented(const ObjectiveSpec& spec, const EngineConfig& engine_cfg,
                        const WitnessConfig& witness_cfg, const RegimeParams& regime, double eps,
                        int run_id, std::uint64_t master_seed);

enum class ExecMode { Serial, OpenMP };

// Batch of seeded runs; OpenMP and serial execution produce identical logs.
std::vector<RunLog> run_batch(const ObjectiveSpec& spec, const EngineConfig& engine_cfg,
                              const WitnessConfig& witness_cfg, const RegimeParams& regime,
                              double eps, int runs, std::uint64_t master_seed, ExecMode mode);

// Deterministic per-generation hazard-floor series a_t (t = 1..horizon) from
// the LPSR schedule with the archive at capacity.
std::vector<double> deterministic_a_series(const EngineConfig& cfg, const WitnessConfig& wc,
                                           int dim);

struct EnvelopeTable {
  std::vector<double> a_t;        // t = 1..T
  std::vector<double> gamma_hat;  // survivor witness frequency at t-1
  std::vector<double> gamma_lo, gamma_hi;
  std::vector<double> env_product;  // n = 0..T
  std::vector<double> env_exp;
  std::vector<double> km_value, km_se;
  double p0c_hat = 1.0;
  long long horizon = 0;
};

EnvelopeTable build_envelope_table(const std::vector<RunLog>& logs, const WitnessConfig& wc);

struct ReportRow {
  std::string objective;
  double eps = 0.0;
  long long budget = 0;
  int runs = 0;
  int hits = 0;
  double s_at_budget = 1.0;
  double tau_gen_mean = 0.0, tau_gen_sd = 0.0;
  double tau_eval_mean = 0.0, tau_eval_sd = 0.0;
  double clustering = 0.0;
  bool clustering_defined = false;
  std::string regime;
  double gamma_mean = 0.0;
  double l1_rate = 0.0, l2_rate = 0.0, l3_rate = 0.0;
  long long cond_samples = 0;
  double p_hat_cond = 0.0;  // conditioned one-step success frequency
  double a_bar = 0.0;       // mean Morse floor over conditioned samples
  double ratio = 0.0;
  std::string failure_mode;
};

ReportRow summarize_experiment(const std::vector<RunLog>& logs, const WitnessConfig& wc);

struct ExperimentPaths {
  std::string dir;
  std::string name;
};

// Executes the experiment grid; writes one log per run, experiment.json and
// summary.txt per experiment. Returns the experiment directories.
std::vector<ExperimentPaths> run_experiment(const ExperimentConfig& cfg);

// Rebuilds morse_table.txt, km_table.txt, failure_table.txt and per-experiment
// curve tables from the logs under `log_root`. Pure function of the logs.
void build_reports(const std::string& log_root, const std::string& out_dir);

}  // namespace lshade
