// Times the OpenMP kernels against their serial references.
#include <chrono>
#include <cstdio>
#include <vector>

#include "condep/benchmark.hpp"
#include "condep/rng.hpp"

using namespace condep;

namespace {

double now_ms() {
  return std::chrono::duration<double, std::milli>(
             std::chrono::steady_clock::now().time_since_epoch())
      .count();
}

void time_tau_kernel(std::size_t n) {
  Rng rng(42);
  std::vector<double> y1, y2, w(n, 1.0 / static_cast<double>(n));
  for (std::size_t i = 0; i < n; ++i) {
    y1.push_back(normal(rng));
    y2.push_back(0.5 * y1.back() + normal(rng));
  }
  double t0 = now_ms();
  double serial = dep::tau_hat_weighted_serial(w, y1, y2);
  double t1 = now_ms();
  double parallel = dep::tau_hat_weighted(w, y1, y2);
  double t2 = now_ms();
  std::printf("tau kernel n=%zu: serial %.1f ms, parallel %.1f ms, "
              "speedup %.2fx, |diff| %.2e\n",
              n, t1 - t0, t2 - t1, (t1 - t0) / (t2 - t1),
              std::abs(serial - parallel));
}

void time_benchmark_reps(int threads) {
  bench::Scenario s;
  s.truth = bench::Truth::Linear08;
  s.functional = copula::Functional::SpearmanRho;
  s.family = copula::Family::Gaussian;
  s.k = 10;
  s.n_per_level = 50;
  s.reps = 8;
  bench::MethodConfig cfg;
  cfg.gp.mh.iterations = 2000;
  cfg.gp.mh.burn_in = 400;
  cfg.gp.mh.retained = 400;
  double t0 = now_ms();
  auto report = bench::run_benchmark(s, {bench::Method::GP}, cfg, 7, threads);
  double t1 = now_ms();
  std::printf("benchmark reps (GP, %d thread%s): %.1f ms, imse/pt %.4f\n",
              threads, threads == 1 ? "" : "s", t1 - t0,
              report.cells[0].imse_per_point);
}

}  // namespace

int main() {
  for (std::size_t n : {2000u, 8000u, 20000u}) time_tau_kernel(n);
  time_benchmark_reps(1);
  time_benchmark_reps(0);
  return 0;
}
