// Compares the OpenMP kernel against the single-threaded reference on large
// limiter instances and reports per-solve timings plus agreement.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <random>
#include <vector>

#include "drlim/limiter.hpp"

using namespace drlim;
using clock_type = std::chrono::steady_clock;

namespace {

LimiterProblem make_instance(int n, double bad_fraction, unsigned seed) {
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> interior(-0.85, 0.85);
  std::uniform_real_distribution<double> coin(0.0, 1.0);
  std::uniform_real_distribution<double> vio(1e-3, 1e-2);
  std::vector<double> u(n);
  for (auto& v : u) {
    v = interior(rng);
    if (coin(rng) < bad_fraction) v = coin(rng) < 0.5 ? 1.0 + vio(rng) : -1.0 - vio(rng);
  }
  return LimiterProblem(std::move(u), Bounds{-1.0, 1.0});
}

template <typename Fn>
double time_best_of(int reps, Fn&& fn) {
  double best = 1e100;
  for (int i = 0; i < reps; ++i) {
    auto t0 = clock_type::now();
    fn();
    auto t1 = clock_type::now();
    best = std::min(best, std::chrono::duration<double>(t1 - t0).count());
  }
  return best;
}

}  // namespace

int main() {
  std::printf("%12s %10s %12s %12s %8s %10s\n", "N", "iters", "serial[ms]",
              "openmp[ms]", "speedup", "linf gap");
  for (int n : {100000, 1000000, 4000000}) {
    auto prob = make_instance(n, 0.02, 7);
    DRConfig serial_cfg;
    serial_cfg.exec = Exec::Serial;
    DRConfig par_cfg;
    par_cfg.exec = Exec::Parallel;

    DRResult rs, rp;
    double ts = time_best_of(3, [&] { rs = serial::dr_solve(prob, serial_cfg); });
    double tp = time_best_of(3, [&] { rp = dr_solve(prob, par_cfg); });

    double gap = 0.0;
    for (int i = 0; i < n; ++i)
      gap = std::max(gap, std::abs(rs.x_star[i] - rp.x_star[i]));
    std::printf("%12d %10d %12.3f %12.3f %8.2f %10.2e\n", n, rp.iterations,
                ts * 1e3, tp * 1e3, ts / tp, gap);
    if (rs.iterations != rp.iterations || gap > 1e-12) {
      std::printf("MISMATCH between serial reference and OpenMP kernel\n");
      return 1;
    }
  }
  return 0;
}
