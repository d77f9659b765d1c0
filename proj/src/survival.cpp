#include "lshade/survival.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "lshade/stats.hpp"
#include "lshade/witness.hpp"

namespace lshade {

HitRecord first_hit(const RunTrace& trace, double eps, const ObjectiveSpec& spec) {
  HitRecord rec;
  rec.seed = trace.config.seed;
  rec.censor_gen = trace.censor_gen;
  rec.censor_nfe = trace.censor_nfe;
  long long nfe = 0;
  for (double f : trace.init_f) {
    ++nfe;
    if (spec.hit(f, eps)) {
      rec.hit = true;
      rec.tau_gen = 0;
      rec.tau_eval = nfe;
      return rec;
    }
  }
  for (const auto& g : trace.records) {
    nfe = g.nfe_at_start;
    for (const auto& dr : g.draws) {
      if (!dr.evaluated) break;
      ++nfe;
      if (spec.hit(dr.trial_f, eps)) {
        rec.hit = true;
        rec.tau_gen = g.gen;
        rec.tau_eval = nfe;
        return rec;
      }
    }
  }
  return rec;
}

KMCurve km_estimate(const std::vector<HitRecord>& records, TimeIndex index) {
  if (records.empty()) throw std::invalid_argument("km_estimate: no records");
  struct Obs {
    long long t;
    bool event;
  };
  std::vector<Obs> obs;
  obs.reserve(records.size());
  long long horizon = 0;
  for (const auto& r : records) {
    Obs o;
    if (r.hit) {
      o.t = index == TimeIndex::Gen ? r.tau_gen : r.tau_eval;
      o.event = true;
    } else {
      o.t = index == TimeIndex::Gen ? r.censor_gen : r.censor_nfe;
      o.event = false;
    }
    horizon = std::max(horizon, o.t);
    obs.push_back(o);
  }
  std::sort(obs.begin(), obs.end(), [](const Obs& a, const Obs& b) {
    if (a.t != b.t) return a.t < b.t;
    return a.event > b.event;  // events before censorings at ties
  });

  KMCurve km;
  km.horizon = horizon;
  long long at_risk = (long long)obs.size();
  double s = 1.0;
  double greenwood = 0.0;
  std::size_t i = 0;
  while (i < obs.size()) {
    const long long t = obs[i].t;
    long long d = 0, c = 0;
    while (i < obs.size() && obs[i].t == t) {
      if (obs[i].event)
        ++d;
      else
        ++c;
      ++i;
    }
    if (d > 0) {
      km.event_times.push_back(t);
      km.at_risk.push_back(at_risk);
      km.events.push_back(d);
      s *= 1.0 - double(d) / double(at_risk);
      if (at_risk > d) greenwood += double(d) / (double(at_risk) * double(at_risk - d));
      km.survival.push_back(s);
      km.se.push_back(s * std::sqrt(greenwood));
    }
    km.censored_count += c;
    at_risk -= d + c;
  }
  return km;
}

double KMCurve::value_at(long long n) const {
  double s = 1.0;
  for (std::size_t i = 0; i < event_times.size(); ++i) {
    if (event_times[i] > n) break;
    s = survival[i];
  }
  return s;
}

double KMCurve::se_at(long long n) const {
  double v = 0.0;
  for (std::size_t i = 0; i < event_times.size(); ++i) {
    if (event_times[i] > n) break;
    v = se[i];
  }
  return v;
}

SyntheticResult simulate_synthetic(const SyntheticHazard& process, long long reps,
                                   std::uint64_t seed, bool parallel) {
  if (reps < 1) throw std::invalid_argument("simulate_synthetic: reps >= 1 required");
  const int horizon = process.horizon;
  if (horizon < 0) throw std::invalid_argument("simulate_synthetic: horizon >= 0 required");

  // Per-rep results land in fixed blocks so that parallel and serial
  // execution accumulate in exactly the same order.
  constexpr long long kBlock = 1024;
  const long long nblocks = (reps + kBlock - 1) / kBlock;
  std::vector<std::vector<double>> block_prod(std::size_t(nblocks));
  std::vector<std::vector<long long>> block_tau(std::size_t(nblocks));

  auto run_block = [&](long long blk) {
    const long long lo = blk * kBlock;
    const long long hi = std::min(reps, lo + kBlock);
    auto& prod_sum = block_prod[std::size_t(blk)];
    prod_sum.assign(std::size_t(horizon) + 1, 0.0);
    auto& taus = block_tau[std::size_t(blk)];
    taus.reserve(std::size_t(hi - lo));
    std::vector<int> marks;
    for (long long rep = lo; rep < hi; ++rep) {
      RngStream rng = RngStream::derive(seed, std::uint64_t(rep), 0, 0, Draw::Synthetic);
      marks.clear();
      long long tau = -1;  // -1 = survived the horizon
      double prod = 1.0;
      for (int t = 0; t <= horizon; ++t) {
        if (process.mark) marks.push_back(process.mark(t, rng));
        double p = 0.0;
        if (tau < 0) {
          p = process.hazard(t, marks);
          if (p < 0.0 || p > 1.0) throw std::runtime_error("simulate_synthetic: hazard outside [0,1]");
        }
        // p_t = 0 off the survival event, so the product freezes after a hit.
        prod *= 1.0 - p;
        prod_sum[std::size_t(t)] += prod;
        if (tau < 0 && rng.next_unit() < p) tau = t;
      }
      taus.push_back(tau);
    }
  };

  if (parallel) {
#pragma omp parallel for schedule(dynamic)
    for (long long blk = 0; blk < nblocks; ++blk) run_block(blk);
  } else {
    for (long long blk = 0; blk < nblocks; ++blk) run_block(blk);
  }

  SyntheticResult out;
  out.reps = reps;
  out.survival.assign(std::size_t(horizon) + 1, 0.0);
  out.se.assign(std::size_t(horizon) + 1, 0.0);
  out.mean_product.assign(std::size_t(horizon) + 1, 0.0);
  out.at_risk.assign(std::size_t(horizon) + 1, 0);
  out.events.assign(std::size_t(horizon) + 1, 0);

  std::vector<long long> survive_count(std::size_t(horizon) + 1, 0);
  for (long long blk = 0; blk < nblocks; ++blk) {
    for (int t = 0; t <= horizon; ++t) out.mean_product[std::size_t(t)] += block_prod[std::size_t(blk)][std::size_t(t)];
    for (long long tau : block_tau[std::size_t(blk)]) {
      for (int t = 0; t <= horizon; ++t) {
        const bool survived = tau < 0 || tau > t;
        if (survived) ++survive_count[std::size_t(t)];
      }
      for (int t = 0; t <= horizon; ++t) {
        const bool alive_entering = tau < 0 || tau >= t;
        if (alive_entering) ++out.at_risk[std::size_t(t)];
        if (tau == t) ++out.events[std::size_t(t)];
      }
    }
  }
  for (int t = 0; t <= horizon; ++t) {
    const double s = double(survive_count[std::size_t(t)]) / double(reps);
    out.survival[std::size_t(t)] = s;
    out.se[std::size_t(t)] = std::sqrt(s * (1.0 - s) / double(reps));
    out.mean_product[std::size_t(t)] /= double(reps);
  }
  return out;
}

double SyntheticResult::hazard_at(int n) const {
  if (n < 0 || n >= int(at_risk.size())) throw std::out_of_range("hazard_at");
  if (at_risk[std::size_t(n)] == 0) return 0.0;
  return double(events[std::size_t(n)]) / double(at_risk[std::size_t(n)]);
}

double tail_bound_constant(double a, long long n, double p0c) {
  if (a < 0.0 || a > 1.0) throw std::invalid_argument("tail_bound_constant: a in [0,1] required");
  if (p0c < 0.0 || p0c > 1.0) throw std::invalid_argument("tail_bound_constant: p0c in [0,1]");
  if (a == 0.0) return p0c;  // vacuous bound
  return p0c * std::pow(1.0 - a, double(n));
}

double expected_tau_bound(double a, double p0c) {
  if (a <= 0.0) return std::numeric_limits<double>::infinity();
  return p0c / a;
}

double tail_bound_power(double c, double alpha, long long n, double p0c) {
  if (!(c > 0.0)) throw std::invalid_argument("tail_bound_power: C > 0 required");
  if (!(alpha > 0.0 && alpha <= 1.0)) throw std::invalid_argument("tail_bound_power: alpha in (0,1]");
  if (p0c < 0.0 || p0c > 1.0) throw std::invalid_argument("tail_bound_power: p0c in [0,1]");
  if (n < 0) throw std::invalid_argument("tail_bound_power: n >= 0 required");
  if (alpha == 1.0) return p0c * std::pow(double(n) + 1.0, -c);
  if (c > 1.0)
    throw std::invalid_argument("tail_bound_power: alpha < 1 requires C t^-alpha <= 1, i.e. C <= 1");
  const double k = c / (1.0 - alpha);
  return p0c * std::exp(k) * std::exp(-k * std::pow(double(n) + 1.0, 1.0 - alpha));
}

EnvelopePair envelope_from_witness(const std::vector<double>& a_series,
                                   const std::vector<double>& gamma_series, double p0c) {
  if (a_series.size() != gamma_series.size())
    throw std::invalid_argument("envelope_from_witness: series length mismatch");
  EnvelopePair out;
  out.product.reserve(a_series.size() + 1);
  out.exponential.reserve(a_series.size() + 1);
  double prod = p0c;
  double cum = 0.0;
  out.product.push_back(prod);
  out.exponential.push_back(p0c);
  for (std::size_t t = 0; t < a_series.size(); ++t) {
    const double ag = a_series[t] * gamma_series[t];
    if (ag < 0.0 || ag > 1.0) throw std::invalid_argument("envelope_from_witness: a*gamma outside [0,1]");
    prod *= 1.0 - ag;
    cum += ag;
    out.product.push_back(prod);
    out.exponential.push_back(p0c * std::exp(-cum));
  }
  return out;
}

double two_phase_envelope(double a_min, double gamma0, const std::vector<long long>& twit_samples,
                          long long n, double p0c) {
  if (!(a_min > 0.0 && a_min <= 1.0) || !(gamma0 > 0.0 && gamma0 <= 1.0))
    throw std::invalid_argument("two_phase_envelope: a_min, gamma0 in (0,1] required");
  if (twit_samples.empty()) throw std::invalid_argument("two_phase_envelope: no samples");
  double frac_late = 0.0, mean_exp = 0.0;
  for (long long tw : twit_samples) {
    if (tw == kTwitInfinity || tw > n) {
      frac_late += 1.0;
    } else {
      mean_exp += std::exp(-a_min * gamma0 * double(n - tw));
    }
  }
  const double s = double(twit_samples.size());
  return frac_late / s + p0c * (mean_exp / s);
}

GeometricFit geometric_fit_and_cluster(const std::vector<HitRecord>& records) {
  GeometricFit out;
  if (records.empty()) {
    out.regime = "insufficient";
    return out;
  }
  std::vector<double> taus;
  for (const auto& r : records)
    if (r.hit) taus.push_back(double(r.tau_gen));
  const double hit_frac = double(taus.size()) / double(records.size());

  if (taus.size() >= 2) {
    const double mean = sample_mean(taus);
    out.p_hat = mean > 0.0 ? std::min(1.0, 1.0 / mean) : 1.0;
  }
  if (taus.size() >= 5) {
    const double var = sample_variance(taus);
    const double fitted = (1.0 - out.p_hat) / (out.p_hat * out.p_hat);
    if (fitted > 0.0) {
      out.clustering = var / fitted;
      out.clustering_defined = true;
    } else {
      out.clustering = var == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
      out.clustering_defined = true;
    }
  }

  if (hit_frac < 0.10) {
    out.regime = "intractable";
  } else if (!out.clustering_defined) {
    out.regime = "insufficient";
  } else if (out.clustering < 0.2) {
    out.regime = "clustered";
  } else if (out.clustering <= 2.0) {
    out.regime = "near-geometric";
  } else {
    out.regime = "heavy/other";
  }
  return out;
}

std::vector<EnvelopeViolation> envelope_validity_check(const KMCurve& km,
                                                       const std::vector<double>& envelope) {
  std::vector<EnvelopeViolation> out;
  for (std::size_t n = 0; n < envelope.size(); ++n) {
    const long long nn = (long long)n;
    const double s = km.value_at(nn);
    const double se = km.se_at(nn);
    if (s > envelope[n] + se + 1e-12) out.push_back({nn, s, se, envelope[n]});
  }
  return out;
}

}  // namespace lshade
