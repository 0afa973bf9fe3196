// Serial vs OpenMP timings for the three parallel kernels.
//   bench_kernels [n] [threads]

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <random>

#include "kmdr/kernels.hpp"
#include "kmdr/mc_harness.hpp"
#include "kmdr/parallel.hpp"

using namespace kmdr;
using kernels::Exec;

namespace {

template <class F>
double seconds(F&& f, int repeat = 3) {
  double best = 1e300;
  for (int r = 0; r < repeat; ++r) {
    const auto t0 = std::chrono::steady_clock::now();
    f();
    best = std::min(best, std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
  }
  return best;
}

void report(const char* name, double serial, double omp) {
  std::printf("%-22s serial %8.4f s   omp %8.4f s   speedup %5.2fx\n", name, serial, omp, serial / omp);
}

}  // namespace

int main(int argc, char** argv) {
  const Index n = argc > 1 ? std::atol(argv[1]) : 4000;
  const int threads = argc > 2 ? std::atoi(argv[2]) : parallel::max_threads();
  parallel::set_threads(threads);
  std::printf("n = %ld, threads = %d\n", static_cast<long>(n), threads);

  const auto sample = mc::generate({1, n, 30, 1}, 0);
  const auto km = km_weights(order_sample(sample));
  const auto design = make_design(km);
  const auto grid = build_grid(km, QuantileGridSpec{0.05, 0.95, 200});

  report("fit_thresholds (200)",
         seconds([&] { kernels::fit_thresholds(design, LinkKind::cloglog, grid.thresholds(), {}, Exec::serial); }),
         seconds([&] { kernels::fit_thresholds(design, LinkKind::cloglog, grid.thresholds(), {}, Exec::omp); }));

  std::mt19937_64 rng(3);
  std::normal_distribution<double> norm;
  RowMatrix zeta(n, 100);
  for (Index i = 0; i < n; ++i)
    for (Index c = 0; c < 100; ++c) zeta(i, c) = norm(rng);
  std::vector<std::uint8_t> include(100, 1);
  report("multiplier_draws (1000)",
         seconds([&] { kernels::multiplier_draws(zeta, include, 1000, 42, Exec::serial); }),
         seconds([&] { kernels::multiplier_draws(zeta, include, 1000, 42, Exec::omp); }));

  const mc::Estimator est[] = {mc::Estimator::dr_cll};
  const mc::DgpSpec spec{1, 400, 10, 5};
  mc::run_experiment(spec, 2, est, Exec::serial);  // warm the calibration and grid caches
  report("replications (20)",
         seconds([&] { mc::run_experiment(spec, 20, est, Exec::serial); }, 1),
         seconds([&] { mc::run_experiment(spec, 20, est, Exec::omp); }, 1));
  return 0;
}
