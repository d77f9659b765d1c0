#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <iostream>
#include <string>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

#include <CLI11.hpp>

#include "lshade/harness.hpp"
#include "lshade/runlog.hpp"
#include "lshade/stats.hpp"
#include "lshade/survival.hpp"
#include "lshade/witness.hpp"

namespace {

using namespace lshade;

int cmd_run(const std::string& config_path, const std::string& out_dir, long long seed_override,
            int threads) {
  ExperimentConfig cfg = ExperimentConfig::from_json_file(config_path);
  if (!out_dir.empty()) cfg.out_dir = out_dir;
  if (seed_override >= 0) cfg.master_seed = std::uint64_t(seed_override);
  if (threads > 0) cfg.threads = threads;
  for (const auto& w : cfg.witness.validate()) std::cerr << "warning: " << w << "\n";
  const auto dirs = run_experiment(cfg);
  for (const auto& d : dirs) std::cout << "wrote " << d.dir << "\n";
  return 0;
}

int cmd_report(const std::string& logs, const std::string& out) {
  build_reports(logs, out.empty() ? logs : out);
  std::cout << "reports written to " << (out.empty() ? logs : out) << "\n";
  return 0;
}

int cmd_km(const std::string& logs, const std::string& index) {
  namespace fs = std::filesystem;
  std::vector<HitRecord> recs;
  std::vector<fs::path> dirs{fs::path(logs)};
  // Accept either one experiment directory or a root of experiment directories.
  if (!fs::exists(fs::path(logs) / "experiment.json")) {
    dirs.clear();
    for (const auto& e : fs::directory_iterator(logs))
      if (e.is_directory() && fs::exists(e.path() / "experiment.json")) dirs.push_back(e.path());
    std::sort(dirs.begin(), dirs.end());
  }
  for (const auto& dir : dirs) {
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(dir))
      if (e.path().extension() == ".log") files.push_back(e.path());
    std::sort(files.begin(), files.end());
    for (const auto& f : files) recs.push_back(RunLog::parse_file(f.string()).hit_record());
  }
  if (recs.empty()) throw std::runtime_error("no logs found under " + logs);
  const TimeIndex idx = index == "eval" ? TimeIndex::Eval : TimeIndex::Gen;
  const KMCurve km = km_estimate(recs, idx);
  std::printf("# t\tat_risk\tevents\tS_hat\tSE\n");
  for (std::size_t i = 0; i < km.event_times.size(); ++i)
    std::printf("%lld\t%lld\t%lld\t%.10g\t%.10g\n", km.event_times[i], km.at_risk[i], km.events[i],
                km.survival[i], km.se[i]);
  std::printf("# censored %lld of %zu\n", km.censored_count, recs.size());
  return 0;
}

int cmd_synthetic(long long reps, int horizon, std::uint64_t seed, int threads) {
#ifdef _OPENMP
  if (threads > 0) omp_set_num_threads(threads);
#else
  (void)threads;
#endif
  struct Proc {
    const char* name;
    SyntheticHazard hz;
    std::function<double(int)> certified;  // survival-only hazard when deterministic
  };
  std::vector<Proc> procs;
  procs.push_back({"constant h=0.02",
                   {[](int, const std::vector<int>&) { return 0.02; }, nullptr, horizon},
                   [](int) { return 0.02; }});
  procs.push_back({"decaying h=0.5/t",
                   {[](int t, const std::vector<int>&) { return t == 0 ? 0.0 : std::min(1.0, 0.5 / double(t)); },
                    nullptr, horizon},
                   [](int t) { return t == 0 ? 0.0 : std::min(1.0, 0.5 / double(t)); }});
  procs.push_back({"history-dependent (x4 after near miss)",
                   {[](int t, const std::vector<int>& marks) {
                      if (t == 0) return 0.0;
                      const bool near_miss = marks.size() >= 2 && marks[marks.size() - 2] == 1;
                      return near_miss ? 0.04 : 0.01;
                    },
                    [](int, RngStream& r) { return r.next_unit() < 0.3 ? 1 : 0; }, horizon},
                   nullptr});

  bool all_ok = true;
  for (const auto& pr : procs) {
    const SyntheticResult res = simulate_synthetic(pr.hz, reps, seed, true);
    int worst_n = -1;
    double worst_dev = 0.0;
    double cert = 1.0;
    for (int n = 0; n <= horizon; ++n) {
      const double h = pr.certified ? pr.certified(n) : res.hazard_at(n);
      cert *= 1.0 - h;
      const double dev = std::fabs(res.survival[std::size_t(n)] - cert);
      const double lim = 3.0 * std::max(res.se[std::size_t(n)], 1e-12);
      if (dev / lim > worst_dev) {
        worst_dev = dev / lim;
        worst_n = n;
      }
    }
    const bool ok = worst_dev <= 1.0;
    all_ok = all_ok && ok;
    std::printf("%-40s reps=%lld worst |emp-cert|/3SE = %.3f at n=%d  %s\n", pr.name, reps,
                worst_dev, worst_n, ok ? "OK" : "VIOLATION");
  }
  return all_ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"L-SHADE first-hitting-time hazard instrumentation and survival analysis"};
  app.require_subcommand(1);

  std::string config_path, out_dir, logs_dir, index = "gen";
  long long seed_override = -1;
  int threads = 0;

  auto* run = app.add_subcommand("run", "execute an experiment grid from a JSON config");
  run->add_option("-c,--config", config_path, "config file")->required();
  run->add_option("-o,--out", out_dir, "output directory (overrides config)");
  run->add_option("-s,--seed", seed_override, "master seed override");
  run->add_option("-t,--threads", threads, "parallelism degree");

  auto* report = app.add_subcommand("report", "build tables from experiment logs");
  report->add_option("-l,--logs", logs_dir, "log root directory")->required();
  report->add_option("-o,--out", out_dir, "output directory (default: log root)");

  auto* km = app.add_subcommand("km", "print a Kaplan-Meier curve from logs");
  km->add_option("-l,--logs", logs_dir, "experiment directory or log root")->required();
  km->add_option("-i,--index", index, "time index: gen|eval")
      ->check(CLI::IsMember({"gen", "eval"}));

  long long reps = 100000;
  int horizon = 50;
  std::uint64_t syn_seed = 7;
  auto* syn = app.add_subcommand("synthetic", "hazard-identity Monte-Carlo suite");
  syn->add_option("-r,--reps", reps, "replications");
  syn->add_option("-n,--horizon", horizon, "horizon");
  syn->add_option("-s,--seed", syn_seed, "seed");
  syn->add_option("-t,--threads", threads, "parallelism degree");

  auto* bounds = app.add_subcommand("bounds", "evaluate tail-bound formulas");
  double b_a = 0.0, b_c = 0.0, b_alpha = 1.0, b_p0c = 1.0, b_ccr = 0.5;
  long long b_n = 0;
  int b_d = 10, b_r = -1, b_h = 6, b_npop = 180, b_arch = 468;
  double b_p = 0.11;
  auto* bc = bounds->add_subcommand("constant", "constant-hazard tail p0c (1-a)^n");
  bc->add_option("--a", b_a, "hazard floor a")->required();
  bc->add_option("--n", b_n, "horizon n")->required();
  bc->add_option("--p0c", b_p0c, "P(E0 complement)");
  auto* bp = bounds->add_subcommand("power", "polynomial-hazard tail");
  bp->add_option("--C", b_c, "constant C")->required();
  bp->add_option("--alpha", b_alpha, "exponent alpha in (0,1]");
  bp->add_option("--n", b_n, "horizon n")->required();
  bp->add_option("--p0c", b_p0c, "P(E0 complement)");
  auto* be = bounds->add_subcommand("eta", "crossover retention probability eta_r");
  be->add_option("--d", b_d, "dimension")->required();
  be->add_option("--c-cr", b_ccr, "crossover threshold");
  be->add_option("--r", b_r, "replacement budget (-1 = median rule)");
  auto* bf = bounds->add_subcommand("prefactor", "combinatorial hazard prefactor");
  bf->add_option("--H", b_h, "memory size");
  bf->add_option("--N", b_npop, "population size");
  bf->add_option("--archive", b_arch, "archive size");
  bf->add_option("--p", b_p, "p-best fraction");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) return cmd_run(config_path, out_dir, seed_override, threads);
    if (*report) return cmd_report(logs_dir, out_dir);
    if (*km) return cmd_km(logs_dir, index);
    if (*syn) return cmd_synthetic(reps, horizon, syn_seed, threads);
    if (*bounds) {
      using namespace lshade;
      if (*bc) {
        if (b_a == 0.0) std::cerr << "warning: a = 0 gives the vacuous bound p0c\n";
        std::printf("%.10g\n", tail_bound_constant(b_a, b_n, b_p0c));
        std::printf("expected-hit bound: %.10g\n", expected_tau_bound(b_a, b_p0c));
        return 0;
      }
      if (*bp) {
        std::printf("%.10g\n", tail_bound_power(b_c, b_alpha, b_n, b_p0c));
        return 0;
      }
      if (*be) {
        const int r = b_r < 0 ? median_r(b_d, b_ccr) : b_r;
        std::printf("r = %d, eta_r = %.10g\n", r, eta_r(b_d, b_ccr, r));
        return 0;
      }
      if (*bf) {
        const int m = std::max(1, int(std::ceil(b_p * b_npop - 1e-9)));
        const double s1 = b_npop - 2, s2 = b_npop + b_arch - 2;
        const double pre = (1.0 / b_h) * (1.0 / m) * (1.0 / (s1 * (s2 - 1)));
        std::printf("m = %d, s1 = %g, s2 = %g, prefactor = %.10g\n", m, s1, s2, pre);
        return 0;
      }
      std::cerr << "bounds: choose a subcommand (constant|power|eta|prefactor)\n";
      return 2;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}
