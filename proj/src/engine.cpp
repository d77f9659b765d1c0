#include "lshade/engine.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace lshade {

namespace {

// ceil(p*N) guarded against float droop on exact integers.
int ceil_pbest(double p, int n) {
  const int m = int(std::ceil(p * double(n) - 1e-9));
  return std::max(1, m);
}

}  // namespace

EngineConfig EngineConfig::resolved(int dim) const {
  EngineConfig c = *this;
  if (c.n_init == 0) c.n_init = 18 * dim;
  if (c.max_nfe == 0) c.max_nfe = 10000LL * dim;
  c.validate();
  return c;
}

void EngineConfig::validate() const {
  if (n_min < 4) throw std::invalid_argument("EngineConfig: n_min >= 4 required");
  if (n_init < n_min) throw std::invalid_argument("EngineConfig: n_init >= n_min required");
  if (memory_size < 1) throw std::invalid_argument("EngineConfig: memory_size >= 1 required");
  if (!(p_best > 0.0 && p_best <= 1.0)) throw std::invalid_argument("EngineConfig: p_best in (0,1] required");
  if (arc_rate < 0.0) throw std::invalid_argument("EngineConfig: arc_rate >= 0 required");
  if (!(sigma_f > 0.0) || !(sigma_cr > 0.0))
    throw std::invalid_argument("EngineConfig: sigma_f, sigma_cr must be positive");
  if (max_nfe < n_init) throw std::invalid_argument("EngineConfig: max_nfe must cover initialization");
}

int AlgoState::best_index() const {
  int best = 0;
  for (int i = 1; i < int(population.size()); ++i)
    if (population[i].f < population[best].f) best = i;
  return best;
}

double AlgoState::best_f() const { return population[best_index()].f; }

std::vector<int> AlgoState::pbest_set(double p) const {
  const int n = int(population.size());
  const int m = ceil_pbest(p, n);
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    if (population[a].f != population[b].f) return population[a].f < population[b].f;
    return a < b;
  });
  order.resize(m);
  return order;
}

SelectedIndices select_indices(const AlgoState& state, int i, double p_best, RngStream& rng) {
  const int n = int(state.population.size());
  if (n < 4) throw std::invalid_argument("select_indices: population size must be >= 4");
  const int h = int(state.mem_f.size());

  SelectedIndices out{};
  out.slot = int(rng.below(std::uint64_t(h)));

  const std::vector<int> pbest = state.pbest_set(p_best);
  out.b = pbest[rng.below(pbest.size())];

  // r1 uniform over population minus {i, b}.
  {
    int excl1 = std::min(i, out.b), excl2 = std::max(i, out.b);
    const int pool = n - (excl1 == excl2 ? 1 : 2);
    int idx = int(rng.below(std::uint64_t(pool)));
    if (idx >= excl1) ++idx;
    if (excl1 != excl2 && idx >= excl2) ++idx;
    out.r1 = idx;
  }

  // r2 uniform over (population + archive) minus {i, b, r1}.
  {
    const int total = n + int(state.archive.size());
    int excl[3] = {i, out.b, out.r1};
    std::sort(excl, excl + 3);
    int uniq = int(std::unique(excl, excl + 3) - excl);
    int idx = int(rng.below(std::uint64_t(total - uniq)));
    for (int k = 0; k < uniq; ++k)
      if (idx >= excl[k]) ++idx;
    out.r2 = idx;
  }
  return out;
}

std::vector<double> mutate(std::span<const double> x_i, std::span<const double> x_b,
                           std::span<const double> x_r1, std::span<const double> x_r2, double f) {
  const std::size_t d = x_i.size();
  if (x_b.size() != d || x_r1.size() != d || x_r2.size() != d)
    throw std::invalid_argument("mutate: dimension mismatch");
  std::vector<double> v(d);
  for (std::size_t j = 0; j < d; ++j)
    v[j] = x_i[j] + f * ((x_b[j] - x_i[j]) + (x_r1[j] - x_r2[j]));
  return v;
}

std::vector<double> boundary_repair(std::span<const double> v_tilde, std::span<const double> x_parent,
                                    std::span<const double> lower, std::span<const double> upper) {
  const std::size_t d = v_tilde.size();
  std::vector<double> out(d);
  for (std::size_t j = 0; j < d; ++j) {
    if (v_tilde[j] < lower[j])
      out[j] = 0.5 * (lower[j] + x_parent[j]);
    else if (v_tilde[j] > upper[j])
      out[j] = 0.5 * (upper[j] + x_parent[j]);
    else
      out[j] = v_tilde[j];
  }
  return out;
}

CrossoverResult crossover(std::span<const double> v, std::span<const double> x, double cr,
                          RngStream& rng) {
  const std::size_t d = v.size();
  if (x.size() != d || d == 0) throw std::invalid_argument("crossover: dimension mismatch");
  const std::size_t forced = rng.below(d);
  CrossoverResult res;
  res.u.resize(d);
  res.mutant_coords = 0;
  bool exercised = false;
  for (std::size_t j = 0; j < d; ++j) {
    const double uj = rng.next_unit();
    const bool from_mutant = (j == forced) || (uj <= cr);
    res.u[j] = from_mutant ? v[j] : x[j];
    if (from_mutant) ++res.mutant_coords;
    // The CR draw at j only matters when the two sources actually differ.
    if (j != forced && v[j] != x[j]) exercised = true;
  }
  res.cr_defined = exercised;
  return res;
}

int lpsr_population(const EngineConfig& cfg, long long nfe) {
  const double frac = double(nfe) / double(cfg.max_nfe);
  const long long n = std::llround(double(cfg.n_init) + (double(cfg.n_min) - double(cfg.n_init)) * frac);
  return int(std::clamp<long long>(n, cfg.n_min, cfg.n_init));
}

std::vector<SchedulePoint> lpsr_schedule(const EngineConfig& cfg) {
  std::vector<SchedulePoint> out;
  long long nfe = cfg.n_init;
  int pop = lpsr_population(cfg, nfe);
  int gen = 1;
  while (nfe < cfg.max_nfe) {
    out.push_back({gen, nfe, pop});
    nfe += std::min<long long>(pop, cfg.max_nfe - nfe);
    pop = lpsr_population(cfg, nfe);
    ++gen;
  }
  return out;
}

AlgoState init_state(const ObjectiveSpec& spec, const EngineConfig& raw, double eps,
                     GenerationRecord* init_record) {
  const EngineConfig cfg = raw.resolved(spec.dim());
  const int d = spec.dim();

  AlgoState st;
  st.population.resize(cfg.n_init);
  st.mem_f.assign(cfg.memory_size, 0.5);
  st.mem_cr.assign(cfg.memory_size, 0.5);
  st.mem_cr_terminal.assign(cfg.memory_size, false);
  st.archive_capacity = int(std::floor(cfg.arc_rate * double(cfg.n_init)));
  st.nfe = 0;
  st.gen = 0;

  bool hit = false;
  for (int i = 0; i < cfg.n_init; ++i) {
    RngStream rng = RngStream::derive(cfg.seed, 0, std::uint64_t(i), 0, Draw::Init);
    auto& ind = st.population[i];
    ind.x.resize(d);
    for (int j = 0; j < d; ++j) ind.x[j] = spec.lower()[j] + (spec.upper()[j] - spec.lower()[j]) * rng.next_unit();
    ind.f = spec.evaluate(ind.x);
    ++st.nfe;
    if (!hit && spec.hit(ind.f, eps)) {
      hit = true;
      st.tau_gen = 0;
      st.tau_eval = st.nfe;
    }
  }
  if (init_record) {
    init_record->gen = 0;
    init_record->nfe_at_start = 0;
    init_record->pop_size = cfg.n_init;
    init_record->archive_size = 0;
    init_record->best_index = st.best_index();
    init_record->best_f = st.best_f();
    init_record->hit_this_gen = hit;
    init_record->pop_size_end = cfg.n_init;
    init_record->archive_size_end = 0;
    init_record->best_f_end = init_record->best_f;
  }
  return st;
}

GenerationRecord step_generation(AlgoState& state, const ObjectiveSpec& spec,
                                 const EngineConfig& raw, double eps) {
  const EngineConfig cfg = raw.resolved(spec.dim());
  if (state.nfe >= cfg.max_nfe) throw std::logic_error("step_generation: budget exhausted");
  const int n = int(state.population.size());
  const int gen = state.gen + 1;

  GenerationRecord rec;
  rec.gen = gen;
  rec.nfe_at_start = state.nfe;
  rec.pop_size = n;
  rec.archive_size = int(state.archive.size());
  rec.best_index = state.best_index();
  rec.best_f = state.population[rec.best_index].f;
  rec.draws.resize(n);

  // Donor pools are frozen at the start of the generation; archive inserts
  // during the loop only touch the live archive.
  AlgoState view;
  view.population = state.population;
  view.archive = state.archive;
  view.mem_f = state.mem_f;
  const std::vector<Individual>& parents = view.population;
  const std::vector<std::vector<double>>& archive_start = view.archive;

  std::vector<double> succ_f, succ_cr, succ_df, succ_cr_df;
  std::vector<Individual> next_pop = parents;

  for (int i = 0; i < n; ++i) {
    auto& dr = rec.draws[i];
    if (state.nfe >= cfg.max_nfe) {
      rec.truncated = true;
      break;
    }
    RngStream sel_rng = RngStream::derive(cfg.seed, std::uint64_t(gen), std::uint64_t(i), 0, Draw::Select);
    const SelectedIndices sel = select_indices(view, i, cfg.p_best, sel_rng);

    RngStream f_rng = RngStream::derive(cfg.seed, std::uint64_t(gen), std::uint64_t(i), 0, Draw::SampleF);
    RngStream cr_rng = RngStream::derive(cfg.seed, std::uint64_t(gen), std::uint64_t(i), 0, Draw::SampleCr);
    const double F = sample_f(state.mem_f[sel.slot], cfg.sigma_f, f_rng);
    double CR;
    if (cfg.terminal_cr_memory && state.mem_cr_terminal[sel.slot])
      CR = 0.0;
    else
      CR = sample_cr(state.mem_cr[sel.slot], cfg.sigma_cr, cr_rng);

    const auto& x_i = parents[i].x;
    const auto& x_b = parents[sel.b].x;
    const auto& x_r1 = parents[sel.r1].x;
    const std::vector<double>& x_r2 =
        sel.r2 < n ? parents[sel.r2].x : archive_start[std::size_t(sel.r2 - n)];

    const std::vector<double> v_tilde = mutate(x_i, x_b, x_r1, x_r2, F);
    const std::vector<double> v = boundary_repair(v_tilde, x_i, spec.lower(), spec.upper());

    RngStream x_rng = RngStream::derive(cfg.seed, std::uint64_t(gen), std::uint64_t(i), 0, Draw::Cross);
    CrossoverResult cx = crossover(v, x_i, CR, x_rng);

    const double f_u = spec.evaluate(cx.u);
    ++state.nfe;

    dr.slot = sel.slot + 1;
    dr.f_scale = F;
    dr.cr = CR;
    dr.cr_defined = cx.cr_defined;
    dr.b = sel.b;
    dr.r1 = sel.r1;
    dr.r2 = sel.r2;
    dr.evaluated = true;
    dr.trial_f = f_u;

    if (spec.hit(f_u, eps)) {
      rec.hit_this_gen = true;
      if (state.tau_gen < 0) {
        state.tau_gen = gen;
        state.tau_eval = state.nfe;
      }
    }

    const double f_x = parents[i].f;
    if (f_u <= f_x) {
      dr.accepted = true;
      next_pop[i] = Individual{cx.u, f_u};
      if (f_u < f_x) {
        dr.improved = true;
        // Replaced parent goes to the archive, random eviction when full.
        if (state.archive_capacity > 0) {
          if (int(state.archive.size()) < state.archive_capacity) {
            state.archive.push_back(parents[i].x);
          } else {
            RngStream ev = RngStream::derive(cfg.seed, std::uint64_t(gen), std::uint64_t(i), 0,
                                             Draw::ArchiveEvict);
            state.archive[ev.below(state.archive.size())] = parents[i].x;
          }
        }
        succ_f.push_back(F);
        succ_df.push_back(f_x - f_u);
        if (cx.cr_defined) {
          succ_cr.push_back(CR);
          succ_cr_df.push_back(f_x - f_u);
        }
      }
    }
  }

  state.population = std::move(next_pop);

  // Success-history update: weighted Lehmer means, one slot per successful
  // generation, cyclic pointer.
  if (!succ_f.empty()) {
    const int k = state.slot_ptr;
    double wsum = 0.0;
    for (double w : succ_df) wsum += w;
    double num = 0.0, den = 0.0;
    for (std::size_t s = 0; s < succ_f.size(); ++s) {
      const double w = succ_df[s] / wsum;
      num += w * succ_f[s] * succ_f[s];
      den += w * succ_f[s];
    }
    state.mem_f[k] = num / den;
    if (!succ_cr.empty()) {
      double wc = 0.0;
      for (double w : succ_cr_df) wc += w;
      double numc = 0.0, denc = 0.0;
      for (std::size_t s = 0; s < succ_cr.size(); ++s) {
        const double w = succ_cr_df[s] / wc;
        numc += w * succ_cr[s] * succ_cr[s];
        denc += w * succ_cr[s];
      }
      if (denc > 0.0) {
        state.mem_cr[k] = numc / denc;
      } else {
        state.mem_cr[k] = 0.0;
        if (cfg.terminal_cr_memory) state.mem_cr_terminal[k] = true;
      }
    }
    state.slot_ptr = (state.slot_ptr + 1) % cfg.memory_size;
  }

  // LPSR: shrink to the schedule value for the current NFE, dropping worst.
  const int n_new = lpsr_population(cfg, state.nfe);
  if (n_new < int(state.population.size())) {
    std::vector<int> order(state.population.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
      if (state.population[a].f != state.population[b].f)
        return state.population[a].f < state.population[b].f;
      return a < b;
    });
    std::vector<Individual> kept;
    kept.reserve(n_new);
    std::vector<int> keep_idx(order.begin(), order.begin() + n_new);
    std::sort(keep_idx.begin(), keep_idx.end());
    for (int idx : keep_idx) kept.push_back(std::move(state.population[idx]));
    state.population = std::move(kept);
  }

  state.gen = gen;
  rec.pop_size_end = int(state.population.size());
  rec.archive_size_end = int(state.archive.size());
  rec.best_f_end = state.best_f();
  return rec;
}

RunTrace run(const ObjectiveSpec& spec, const EngineConfig& raw, double eps) {
  const EngineConfig cfg = raw.resolved(spec.dim());
  RunTrace tr;
  tr.objective_id = spec.id();
  tr.dim = spec.dim();
  tr.eps = eps;
  tr.config = cfg;
  tr.censor_nfe = cfg.max_nfe;

  GenerationRecord init_rec;
  AlgoState st = init_state(spec, cfg, eps, &init_rec);
  tr.init_f.reserve(cfg.n_init);
  for (const auto& ind : st.population) tr.init_f.push_back(ind.f);
  // init_f must reflect evaluation order, which equals index order here.

  while (st.nfe < cfg.max_nfe) {
    tr.records.push_back(step_generation(st, spec, cfg, eps));
  }
  tr.tau_gen = st.tau_gen;
  tr.tau_eval = st.tau_eval;
  tr.censor_gen = st.gen;
  tr.final_best_f = st.best_f();
  return tr;
}

}  // namespace lshade
