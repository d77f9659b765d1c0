// Compares serial and OpenMP execution of the two batch kernels (seeded runs,
// synthetic-hazard Monte Carlo) and verifies the outputs are identical.

#include <cstdio>
#include <omp.h>

#include "lshade/harness.hpp"
#include "lshade/survival.hpp"

using namespace lshade;

int main() {
  std::printf("threads available: %d\n", omp_get_max_threads());

  // Batch of instrumented runs.
  {
    const ObjectiveSpec spec = make_objective("sphere", 5);
    EngineConfig ec;
    ec.max_nfe = 20000;
    WitnessConfig wc;
    wc.g_minus = 0.1;
    wc.eps = 1e-2;
    RegimeParams rp{1e-2, 1.0, 0.0, 4};
    const int runs = 8;

    const double t0 = omp_get_wtime();
    const auto serial = run_batch(spec, ec, wc, rp, 1e-2, runs, 42, ExecMode::Serial);
    const double t1 = omp_get_wtime();
    const auto parallel = run_batch(spec, ec, wc, rp, 1e-2, runs, 42, ExecMode::OpenMP);
    const double t2 = omp_get_wtime();

    bool same = serial.size() == parallel.size();
    for (std::size_t i = 0; same && i < serial.size(); ++i)
      same = serial[i].serialize() == parallel[i].serialize();
    std::printf("run batch (%d runs):   serial %.3fs  openmp %.3fs  speedup %.2fx  identical: %s\n",
                runs, t1 - t0, t2 - t1, (t1 - t0) / (t2 - t1), same ? "yes" : "NO");
  }

  // Synthetic-hazard Monte Carlo.
  {
    SyntheticHazard hz;
    hz.horizon = 50;
    hz.hazard = [](int, const std::vector<int>&) { return 0.02; };
    const long long reps = 400000;

    const double t0 = omp_get_wtime();
    const auto serial = simulate_synthetic(hz, reps, 7, false);
    const double t1 = omp_get_wtime();
    const auto parallel = simulate_synthetic(hz, reps, 7, true);
    const double t2 = omp_get_wtime();

    bool same = serial.survival == parallel.survival && serial.mean_product == parallel.mean_product;
    std::printf("synthetic MC (%lld reps): serial %.3fs  openmp %.3fs  speedup %.2fx  identical: %s\n",
                reps, t1 - t0, t2 - t1, (t1 - t0) / (t2 - t1), same ? "yes" : "NO");
  }
  return 0;
}
