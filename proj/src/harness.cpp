#include "lshade/harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>

#ifdef _OPENMP
#include <omp.h>
#endif

#include <nlohmann/json.hpp>

#include "lshade/stats.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace lshade {

namespace {

void merge_engine(EngineConfig& e, const json& j) {
  if (j.contains("n_init")) e.n_init = j.at("n_init").get<int>();
  if (j.contains("n_min")) e.n_min = j.at("n_min").get<int>();
  if (j.contains("memory_size")) e.memory_size = j.at("memory_size").get<int>();
  if (j.contains("p_best")) e.p_best = j.at("p_best").get<double>();
  if (j.contains("arc_rate")) e.arc_rate = j.at("arc_rate").get<double>();
  if (j.contains("sigma_f")) e.sigma_f = j.at("sigma_f").get<double>();
  if (j.contains("sigma_cr")) e.sigma_cr = j.at("sigma_cr").get<double>();
  if (j.contains("max_nfe")) e.max_nfe = j.at("max_nfe").get<long long>();
  if (j.contains("terminal_cr_memory")) e.terminal_cr_memory = j.at("terminal_cr_memory").get<bool>();
}

void merge_witness(WitnessConfig& w, const json& j) {
  if (j.contains("f_minus")) w.f_minus = j.at("f_minus").get<double>();
  if (j.contains("f_plus")) w.f_plus = j.at("f_plus").get<double>();
  if (j.contains("delta_f")) w.delta_f = j.at("delta_f").get<double>();
  if (j.contains("c_cr")) w.c_cr = j.at("c_cr").get<double>();
  if (j.contains("g_minus")) w.g_minus = j.at("g_minus").get<double>();
  if (j.contains("q_minus")) w.q_minus = j.at("q_minus").get<double>();
  if (j.contains("r_mask")) w.r_mask = j.at("r_mask").get<int>();
  if (j.contains("grid_points")) w.grid_points = j.at("grid_points").get<int>();
}

std::string eps_tag(double eps) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", eps);
  std::string s(buf);
  for (char& c : s) {
    if (c == '.') c = 'p';
    if (c == '+') c = 'P';
    if (c == '-') c = 'm';
  }
  return s;
}

}  // namespace

ExperimentConfig ExperimentConfig::from_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return from_json_text(ss.str());
}

ExperimentConfig ExperimentConfig::from_json_text(const std::string& text) {
  ExperimentConfig cfg;
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw std::runtime_error(std::string("config parse error: ") + e.what());
  }
  if (j.contains("objectives")) cfg.objectives = j.at("objectives").get<std::vector<std::string>>();
  if (j.contains("dim")) cfg.dim = j.at("dim").get<int>();
  if (j.contains("eps")) cfg.eps_list = j.at("eps").get<std::vector<double>>();
  if (j.contains("budgets")) cfg.budgets = j.at("budgets").get<std::vector<long long>>();
  if (j.contains("runs")) cfg.runs = j.at("runs").get<int>();
  if (j.contains("master_seed")) cfg.master_seed = j.at("master_seed").get<std::uint64_t>();
  if (j.contains("out_dir")) cfg.out_dir = j.at("out_dir").get<std::string>();
  if (j.contains("threads")) cfg.threads = j.at("threads").get<int>();
  if (j.contains("engine")) merge_engine(cfg.engine, j.at("engine"));
  if (j.contains("witness")) merge_witness(cfg.witness, j.at("witness"));
  if (j.contains("regime")) {
    const json& r = j.at("regime");
    if (r.contains("eps_out_factor")) cfg.regime_eps_out_factor = r.at("eps_out_factor").get<double>();
    if (r.contains("r_conc")) cfg.regime_r_conc = r.at("r_conc").get<double>();
    if (r.contains("m_cluster")) cfg.regime_m_cluster = r.at("m_cluster").get<int>();
  }
  if (j.contains("data_dir")) cfg.data_dir = j.at("data_dir").get<std::string>();
  cfg.validate();
  return cfg;
}

std::string ExperimentConfig::to_json() const {
  json j;
  j["objectives"] = objectives;
  j["dim"] = dim;
  j["eps"] = eps_list;
  if (!budgets.empty()) j["budgets"] = budgets;
  j["runs"] = runs;
  j["master_seed"] = master_seed;
  j["out_dir"] = out_dir;
  j["threads"] = threads;
  j["engine"] = {{"n_init", engine.n_init},       {"n_min", engine.n_min},
                 {"memory_size", engine.memory_size}, {"p_best", engine.p_best},
                 {"arc_rate", engine.arc_rate},   {"sigma_f", engine.sigma_f},
                 {"sigma_cr", engine.sigma_cr},   {"max_nfe", engine.max_nfe},
                 {"terminal_cr_memory", engine.terminal_cr_memory}};
  j["witness"] = {{"f_minus", witness.f_minus}, {"f_plus", witness.f_plus},
                  {"delta_f", witness.delta_f}, {"c_cr", witness.c_cr},
                  {"g_minus", witness.g_minus}, {"q_minus", witness.q_minus},
                  {"r_mask", witness.r_mask},   {"grid_points", witness.grid_points}};
  j["regime"] = {{"eps_out_factor", regime_eps_out_factor},
                 {"r_conc", regime_r_conc},
                 {"m_cluster", regime_m_cluster}};
  if (data_dir) j["data_dir"] = *data_dir;
  return j.dump(2) + "\n";
}

void ExperimentConfig::validate() const {
  if (objectives.empty()) throw std::invalid_argument("config: objectives list is empty");
  const auto ids = builtin_ids();
  for (const auto& id : objectives)
    if (std::find(ids.begin(), ids.end(), id) == ids.end())
      throw std::invalid_argument("config: unknown objective id '" + id + "'");
  if (dim < 1) throw std::invalid_argument("config: dim must be positive");
  if (eps_list.empty()) throw std::invalid_argument("config: eps list is empty");
  for (double e : eps_list)
    if (!(e > 0.0)) throw std::invalid_argument("config: eps entries must be positive");
  for (long long b : budgets)
    if (b < 1) throw std::invalid_argument("config: budgets must be positive");
  if (runs < 1) throw std::invalid_argument("config: runs >= 1 required");
  if (regime_m_cluster < 4) throw std::invalid_argument("config: regime m_cluster >= 4 required");
  if (!(regime_eps_out_factor > 1.0))
    throw std::invalid_argument("config: regime eps_out_factor > 1 required");
  // Engine invariants are checked on the resolved config at run time; the
  // witness config needs an eps, validated per experiment entry.
}

RunLog run_instrumented(const ObjectiveSpec& spec, const EngineConfig& engine_raw,
                        const WitnessConfig& witness_raw, const RegimeParams& regime, double eps,
                        int run_id, std::uint64_t master_seed) {
  EngineConfig cfg = engine_raw.resolved(spec.dim());
  RngStream seed_rng = RngStream::derive(master_seed, std::uint64_t(run_id), 0, 0, Draw::RunSeed);
  cfg.seed = seed_rng.next_u64();

  WitnessConfig wc = witness_raw;
  wc.eps = eps;
  wc.validate();

  RunLog log;
  log.run_id = run_id;
  log.seed = cfg.seed;
  log.objective = spec.id();
  log.dim = spec.dim();
  log.eps = eps;
  log.budget = cfg.max_nfe;
  log.f_star = spec.f_star();
  log.engine = cfg;

  GenerationRecord init_rec;
  AlgoState st = init_state(spec, cfg, eps, &init_rec);

  auto make_row = [&](const AlgoState& s, const WitnessReport& w, int gen, int hit, int pbest_hit) {
    LogRow r;
    r.gen = gen;
    r.nfe = s.nfe;
    r.pop = int(s.population.size());
    r.arch = int(s.archive.size());
    r.best_f = s.best_f();
    r.l1 = w.l1 ? 1 : 0;
    r.l2 = w.l2 ? 1 : 0;
    r.l3 = w.l3 ? 1 : 0;
    r.interval_measure = w.interval_measure;
    r.density_inf = w.density_inf;
    r.cr_tail = w.cr_tail;
    r.a_t = w.a_t;
    r.a_tilde = w.a_tilde;
    if (w.regime) {
      r.g1 = w.regime->g1;
      r.g2 = w.regime->g2;
      r.g3 = w.regime->g3;
      r.g4 = w.regime->g4;
      r.g5 = w.regime->g5;
    }
    r.hit = hit;
    r.cond = w.conditioned ? 1 : 0;
    r.c_pair = w.c_pair;
    r.pbest_hit = pbest_hit;
    return r;
  };

  WitnessReport prev = evaluate_witness(st, spec, wc, cfg.p_best, cfg.sigma_f, cfg.sigma_cr, &regime);
  log.rows.push_back(make_row(st, prev, 0, st.tau_gen == 0 ? 1 : 0, -1));

  while (st.nfe < cfg.max_nfe) {
    const int monitored_b = prev.cond_b;
    const GenerationRecord rec = step_generation(st, spec, cfg, eps);
    int pbest_hit = -1;
    if (monitored_b >= 0 && monitored_b < int(rec.draws.size()) &&
        rec.draws[monitored_b].evaluated)
      pbest_hit = spec.hit(rec.draws[monitored_b].trial_f, eps) ? 1 : 0;
    const int first_hit_here = st.tau_gen == rec.gen ? 1 : 0;
    prev = evaluate_witness(st, spec, wc, cfg.p_best, cfg.sigma_f, cfg.sigma_cr, &regime);
    log.rows.push_back(make_row(st, prev, rec.gen, first_hit_here, pbest_hit));
  }

  log.tau_gen = st.tau_gen;
  log.tau_eval = st.tau_eval;
  log.censor_gen = st.gen;
  log.censor_nfe = cfg.max_nfe;
  return log;
}

std::vector<RunLog> run_batch(const ObjectiveSpec& spec, const EngineConfig& engine_cfg,
                              const WitnessConfig& witness_cfg, const RegimeParams& regime,
                              double eps, int runs, std::uint64_t master_seed, ExecMode mode) {
  std::vector<RunLog> logs(std::size_t(runs));
  if (mode == ExecMode::OpenMP) {
#pragma omp parallel for schedule(dynamic)
    for (int r = 0; r < runs; ++r)
      logs[std::size_t(r)] = run_instrumented(spec, engine_cfg, witness_cfg, regime, eps, r, master_seed);
  } else {
    for (int r = 0; r < runs; ++r)
      logs[std::size_t(r)] = run_instrumented(spec, engine_cfg, witness_cfg, regime, eps, r, master_seed);
  }
  return logs;
}

std::vector<double> deterministic_a_series(const EngineConfig& raw, const WitnessConfig& wc,
                                           int dim) {
  const EngineConfig cfg = raw.resolved(dim);
  const auto sched = lpsr_schedule(cfg);
  const int cap = int(std::floor(cfg.arc_rate * double(cfg.n_init)));
  const double eta = eta_r(dim, wc.c_cr, wc.resolved_r(dim));
  std::vector<double> a;
  a.reserve(sched.size());
  for (const auto& pt : sched) {
    const int n = pt.pop_size;
    const int m = std::max(1, int(std::ceil(cfg.p_best * double(n) - 1e-9)));
    const int s1 = n - 2;
    const int s2 = n + cap - 2;
    a.push_back((1.0 / double(cfg.memory_size)) * (1.0 / double(m)) *
                (1.0 / (double(s1) * double(s2 - 1))) * (wc.g_minus * wc.delta_f) *
                (wc.q_minus * eta));
  }
  return a;
}

EnvelopeTable build_envelope_table(const std::vector<RunLog>& logs, const WitnessConfig& wc) {
  if (logs.empty()) throw std::invalid_argument("build_envelope_table: no logs");
  const long long horizon = logs[0].censor_gen;
  for (const auto& l : logs)
    if (l.censor_gen != horizon)
      throw std::invalid_argument("build_envelope_table: runs have different horizons");

  EnvelopeTable tab;
  tab.horizon = horizon;
  WitnessConfig w = wc;
  w.eps = logs[0].eps;
  tab.a_t = deterministic_a_series(logs[0].engine, w, logs[0].dim);
  if ((long long)tab.a_t.size() < horizon) tab.a_t.resize(std::size_t(horizon), tab.a_t.empty() ? 0.0 : tab.a_t.back());
  tab.a_t.resize(std::size_t(horizon));

  int no_init_hit = 0;
  for (const auto& l : logs)
    if (!(l.tau_gen == 0)) ++no_init_hit;
  tab.p0c_hat = double(no_init_hit) / double(logs.size());

  tab.gamma_hat.resize(std::size_t(horizon), 0.0);
  tab.gamma_lo.resize(std::size_t(horizon), 0.0);
  tab.gamma_hi.resize(std::size_t(horizon), 0.0);
  for (long long t = 1; t <= horizon; ++t) {
    long long survivors = 0, witnesses = 0;
    for (const auto& l : logs) {
      const bool surviving = l.tau_gen < 0 || l.tau_gen > t - 1;
      if (!surviving) continue;
      ++survivors;
      const LogRow& row = l.rows[std::size_t(t - 1)];
      if (row.l1 && row.l2 && row.l3) ++witnesses;
    }
    const std::size_t idx = std::size_t(t - 1);
    if (survivors > 0) {
      tab.gamma_hat[idx] = double(witnesses) / double(survivors);
      const WilsonCI ci = wilson_interval(double(witnesses), double(survivors));
      tab.gamma_lo[idx] = ci.lo;
      tab.gamma_hi[idx] = ci.hi;
    }
  }

  const EnvelopePair env = envelope_from_witness(tab.a_t, tab.gamma_hat, tab.p0c_hat);
  tab.env_product = env.product;
  tab.env_exp = env.exponential;

  std::vector<HitRecord> recs;
  recs.reserve(logs.size());
  for (const auto& l : logs) recs.push_back(l.hit_record());
  const KMCurve km = km_estimate(recs, TimeIndex::Gen);
  tab.km_value.resize(std::size_t(horizon) + 1);
  tab.km_se.resize(std::size_t(horizon) + 1);
  for (long long n = 0; n <= horizon; ++n) {
    tab.km_value[std::size_t(n)] = km.value_at(n);
    tab.km_se[std::size_t(n)] = km.se_at(n);
  }
  return tab;
}

ReportRow summarize_experiment(const std::vector<RunLog>& logs, const WitnessConfig& wc) {
  if (logs.empty()) throw std::invalid_argument("summarize_experiment: no logs");
  ReportRow row;
  row.objective = logs[0].objective;
  row.eps = logs[0].eps;
  row.budget = logs[0].budget;
  row.runs = int(logs.size());

  std::vector<HitRecord> recs;
  std::vector<double> tg, te;
  for (const auto& l : logs) {
    recs.push_back(l.hit_record());
    if (l.tau_gen >= 0) {
      ++row.hits;
      tg.push_back(double(l.tau_gen));
      te.push_back(double(l.tau_eval));
    }
  }
  const KMCurve km = km_estimate(recs, TimeIndex::Gen);
  row.s_at_budget = km.value_at(km.horizon);
  if (tg.size() >= 1) {
    row.tau_gen_mean = sample_mean(tg);
    row.tau_eval_mean = sample_mean(te);
  }
  if (tg.size() >= 2) {
    row.tau_gen_sd = std::sqrt(sample_variance(tg));
    row.tau_eval_sd = std::sqrt(sample_variance(te));
  }
  const GeometricFit fit = geometric_fit_and_cluster(recs);
  row.clustering = fit.clustering;
  row.clustering_defined = fit.clustering_defined;
  row.regime = fit.regime;

  // Pooled survivor rates for the witness flags.
  long long surv_lines = 0, n_l1 = 0, n_l2 = 0, n_l3 = 0, n_wit = 0;
  long long cond_lines = 0, cond_hits = 0;
  double a_tilde_sum = 0.0;
  for (const auto& l : logs) {
    for (std::size_t t = 0; t + 1 < l.rows.size(); ++t) {
      const LogRow& r = l.rows[t];
      const bool surviving = l.tau_gen < 0 || l.tau_gen > r.gen;
      if (surviving) {
        ++surv_lines;
        n_l1 += r.l1;
        n_l2 += r.l2;
        n_l3 += r.l3;
        n_wit += (r.l1 && r.l2 && r.l3) ? 1 : 0;
      }
      // Morse validation pairs row t's conditioned state with row t+1's
      // monitored trial.
      const LogRow& nxt = l.rows[t + 1];
      if (r.cond && nxt.pbest_hit >= 0) {
        ++cond_lines;
        cond_hits += nxt.pbest_hit;
        a_tilde_sum += r.a_tilde;
      }
    }
  }
  if (surv_lines > 0) {
    row.gamma_mean = double(n_wit) / double(surv_lines);
    row.l1_rate = double(n_l1) / double(surv_lines);
    row.l2_rate = double(n_l2) / double(surv_lines);
    row.l3_rate = double(n_l3) / double(surv_lines);
  }
  row.cond_samples = cond_lines;
  if (cond_lines > 0) {
    row.p_hat_cond = double(cond_hits) / double(cond_lines);
    row.a_bar = a_tilde_sum / double(cond_lines);
    row.ratio = row.a_bar > 0.0 ? row.p_hat_cond / row.a_bar : 0.0;
  }

  const double hit_rate = double(row.hits) / double(row.runs);
  if (row.gamma_mean < 0.3 && row.l3_rate < 0.5 && surv_lines > 0)
    row.failure_mode = "exploitation";
  else if (row.gamma_mean > 0.9 && hit_rate < 0.10)
    row.failure_mode = "exploration";
  else
    row.failure_mode = "-";
  (void)wc;
  return row;
}

namespace {

std::string experiment_name(const std::string& id, int dim, double eps, long long budget,
                            bool tag_budget) {
  std::string name = id + "_d" + std::to_string(dim) + "_eps" + eps_tag(eps);
  if (tag_budget) name += "_B" + std::to_string(budget);
  return name;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
}

struct LoadedExperiment {
  std::string name;
  ExperimentConfig cfg;  // parsed experiment.json (per-experiment resolved values)
  double eps;
  std::vector<RunLog> logs;
};

LoadedExperiment load_experiment_dir(const fs::path& dir) {
  LoadedExperiment exp;
  exp.name = dir.filename().string();
  const fs::path meta = dir / "experiment.json";
  if (!fs::exists(meta)) throw std::runtime_error("missing experiment.json in " + dir.string());
  exp.cfg = ExperimentConfig::from_json_file(meta.string());
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(dir)) {
    const std::string fn = e.path().filename().string();
    if (fn.rfind("run_", 0) == 0 && e.path().extension() == ".log") files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  for (const auto& f : files) exp.logs.push_back(RunLog::parse_file(f.string()));
  if (exp.logs.empty()) throw std::runtime_error("no run logs in " + dir.string());
  exp.eps = exp.logs[0].eps;
  return exp;
}

std::string fmt(double v, int prec = 6) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%.*g", prec, v);
  return buf;
}

}  // namespace

std::vector<ExperimentPaths> run_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
#ifdef _OPENMP
  if (cfg.threads > 0) omp_set_num_threads(cfg.threads);
#endif
  std::vector<long long> budgets = cfg.budgets;
  const bool tag_budget = !budgets.empty();
  if (budgets.empty()) budgets.push_back(0);  // 0 = engine default

  fs::create_directories(cfg.out_dir);
  std::vector<ExperimentPaths> out;

  for (const auto& id : cfg.objectives) {
    std::optional<ShiftRot> data;
    if (cfg.data_dir) {
      const fs::path p = fs::path(*cfg.data_dir) / (id + ".txt");
      if (fs::exists(p)) data = load_shift_rotation(p.string(), cfg.dim);
    }
    const ObjectiveSpec spec = make_objective(id, cfg.dim, data);
    for (double eps : cfg.eps_list) {
      for (long long budget : budgets) {
        EngineConfig ec = cfg.engine;
        if (budget > 0) ec.max_nfe = budget;
        ec = ec.resolved(cfg.dim);

        WitnessConfig wc = cfg.witness;
        wc.eps = eps;
        wc.validate();

        RegimeParams rp;
        rp.eps_in = eps;
        rp.eps_out = eps * cfg.regime_eps_out_factor;
        rp.r_conc = cfg.regime_r_conc;
        rp.m_cluster = cfg.regime_m_cluster;

        const std::string name = experiment_name(id, cfg.dim, eps, ec.max_nfe, tag_budget);
        const fs::path dir = fs::path(cfg.out_dir) / name;
        fs::create_directories(dir);

        ExperimentConfig resolved = cfg;
        resolved.objectives = {id};
        resolved.eps_list = {eps};
        resolved.budgets.clear();
        resolved.engine = ec;
        resolved.witness = wc;
        write_text(dir / "experiment.json", resolved.to_json());

        const std::vector<RunLog> logs =
            run_batch(spec, ec, wc, rp, eps, cfg.runs, cfg.master_seed, ExecMode::OpenMP);
        for (const auto& log : logs) {
          char fn[48];
          std::snprintf(fn, sizeof fn, "run_%04d.log", log.run_id);
          write_text(dir / fn, log.serialize());
        }

        const ReportRow row = summarize_experiment(logs, wc);
        std::ostringstream sum;
        sum << "experiment " << name << "\n"
            << "runs " << row.runs << "  hits " << row.hits << "\n"
            << "S_at_budget " << fmt(row.s_at_budget) << "\n"
            << "tau_gen_mean " << fmt(row.tau_gen_mean) << "  tau_gen_sd " << fmt(row.tau_gen_sd)
            << "\n"
            << "tau_eval_mean " << fmt(row.tau_eval_mean) << "  tau_eval_sd "
            << fmt(row.tau_eval_sd) << "\n"
            << "clustering " << (row.clustering_defined ? fmt(row.clustering) : "n/a") << "  regime "
            << row.regime << "\n"
            << "gamma_mean " << fmt(row.gamma_mean) << "  L1 " << fmt(row.l1_rate) << "  L2 "
            << fmt(row.l2_rate) << "  L3 " << fmt(row.l3_rate) << "\n"
            << "cond_samples " << row.cond_samples << "  p_hat " << fmt(row.p_hat_cond) << "  a_bar "
            << fmt(row.a_bar) << "  ratio " << fmt(row.ratio) << "\n"
            << "failure_mode " << row.failure_mode << "\n";
        write_text(dir / "summary.txt", sum.str());
        out.push_back({dir.string(), name});
      }
    }
  }
  return out;
}

void build_reports(const std::string& log_root, const std::string& out_dir) {
  std::vector<fs::path> dirs;
  for (const auto& e : fs::directory_iterator(log_root))
    if (e.is_directory() && fs::exists(e.path() / "experiment.json")) dirs.push_back(e.path());
  std::sort(dirs.begin(), dirs.end());
  if (dirs.empty()) throw std::runtime_error("no experiment directories under " + log_root);

  fs::create_directories(out_dir);
  std::ostringstream morse, kmt, fail;
  morse << "# objective\teps\tcond_samples\tp_hat\ta_bar\tratio\tbound_holds\n";
  kmt << "# objective\teps\thits\truns\tS_at_budget\ttau_gen_mean\ttau_gen_sd\ttau_eval_mean\t"
         "tau_eval_sd\tclustering\tregime\n";
  fail << "# objective\teps\thit_rate\tgamma_mean\tL1_rate\tL2_rate\tL3_rate\tfailure_mode\n";

  for (const auto& dir : dirs) {
    const LoadedExperiment exp = load_experiment_dir(dir);
    const ReportRow row = summarize_experiment(exp.logs, exp.cfg.witness);

    morse << row.objective << '\t' << fmt(row.eps) << '\t' << row.cond_samples << '\t';
    if (row.cond_samples > 0)
      morse << fmt(row.p_hat_cond) << '\t' << fmt(row.a_bar) << '\t' << fmt(row.ratio) << '\t'
            << (row.ratio >= 1.0 ? "yes" : "no") << '\n';
    else
      morse << "n/a\tn/a\tn/a\tn/a\n";

    kmt << row.objective << '\t' << fmt(row.eps) << '\t' << row.hits << '\t' << row.runs << '\t'
        << fmt(row.s_at_budget) << '\t' << fmt(row.tau_gen_mean) << '\t' << fmt(row.tau_gen_sd)
        << '\t' << fmt(row.tau_eval_mean) << '\t' << fmt(row.tau_eval_sd) << '\t'
        << (row.clustering_defined ? fmt(row.clustering) : "n/a") << '\t' << row.regime << '\n';

    const double hit_rate = double(row.hits) / double(row.runs);
    fail << row.objective << '\t' << fmt(row.eps) << '\t' << fmt(hit_rate) << '\t'
         << fmt(row.gamma_mean) << '\t' << fmt(row.l1_rate) << '\t' << fmt(row.l2_rate) << '\t'
         << fmt(row.l3_rate) << '\t' << row.failure_mode << '\n';

    // Per-experiment curve table: n, KM, SE, envelopes, gamma_hat + Wilson CI, a_t.
    const EnvelopeTable tab = build_envelope_table(exp.logs, exp.cfg.witness);
    std::ostringstream curve;
    curve << "# n\tS_hat\tSE\tenv_product\tenv_exp\tgamma_hat\tgamma_lo\tgamma_hi\ta_t\n";
    for (long long n = 0; n <= tab.horizon; ++n) {
      const std::size_t i = std::size_t(n);
      curve << n << '\t' << fmt(tab.km_value[i], 10) << '\t' << fmt(tab.km_se[i], 10) << '\t'
            << fmt(tab.env_product[i], 10) << '\t' << fmt(tab.env_exp[i], 10) << '\t';
      if (n >= 1) {
        const std::size_t t = std::size_t(n - 1);
        curve << fmt(tab.gamma_hat[t], 10) << '\t' << fmt(tab.gamma_lo[t], 10) << '\t'
              << fmt(tab.gamma_hi[t], 10) << '\t' << fmt(tab.a_t[t], 10) << '\n';
      } else {
        curve << "-\t-\t-\t-\n";
      }
    }
    write_text(fs::path(out_dir) / ("curves_" + exp.name + ".txt"), curve.str());
  }

  write_text(fs::path(out_dir) / "morse_table.txt", morse.str());
  write_text(fs::path(out_dir) / "km_table.txt", kmt.str());
  write_text(fs::path(out_dir) / "failure_table.txt", fail.str());
}

}  // namespace lshade
