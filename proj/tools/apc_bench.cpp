// Benchmark of the OpenMP kernels against their serial reference
// implementations: raw kernel matrix assembly, Gram centering, and a power
// sweep workload.

#include "kapc/apc_power.hpp"
#include "kapc/gram.hpp"
#include "kapc/kernels.hpp"

#include <omp.h>

#include <chrono>
#include <cstdio>
#include <random>

using namespace kapc;

namespace {

using clock_type = std::chrono::steady_clock;

template <typename F>
double time_ms(F&& f, int reps) {
  // one warmup, then best of reps
  f();
  double best = 1e300;
  for (int r = 0; r < reps; ++r) {
    const auto t0 = clock_type::now();
    f();
    const auto t1 = clock_type::now();
    best = std::min(best,
                    std::chrono::duration<double, std::milli>(t1 - t0).count());
  }
  return best;
}

VectorXd random_vector(Index n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  VectorXd x(n);
  for (Index i = 0; i < n; ++i) x[i] = normal(rng);
  return x;
}

}  // namespace

int main() {
  std::printf("threads: %d\n", omp_get_max_threads());
  std::printf("%-28s %8s %12s %12s %8s\n", "kernel", "n", "serial[ms]",
              "openmp[ms]", "speedup");

  const KernelSpec spec = KernelSpec::gaussian(1.0);
  for (Index n : {400, 800, 1600}) {
    const VectorXd xs = random_vector(n, 7);
    const double ts =
        time_ms([&] { (void)reference::kernel_matrix(spec, xs); }, 3);
    const double tp = time_ms([&] { (void)kernel_matrix(spec, xs); }, 3);
    std::printf("%-28s %8lld %12.2f %12.2f %7.2fx\n", "kernel_matrix",
                static_cast<long long>(n), ts, tp, ts / tp);
  }

  for (Index n : {400, 800, 1600}) {
    const MatrixXd K = kernel_matrix(spec, random_vector(n, 11));
    const double ts = time_ms([&] { (void)reference::center_gram(K); }, 3);
    const double tp = time_ms([&] { (void)center_gram(K); }, 3);
    std::printf("%-28s %8lld %12.2f %12.2f %7.2fx\n", "center_gram",
                static_cast<long long>(n), ts, tp, ts / tp);
  }

  // one power sweep (p parallel smoother fits) via power_step
  for (Index n : {200, 400}) {
    const int p = 4;
    std::vector<VariableBlock> blocks;
    for (int j = 0; j < p; ++j)
      blocks.push_back(
          prepare_block(spec, random_vector(n, 100 + j), 1e-3));
    SolverConfig config;
    config.max_iter = 1;
    ApcProblem prob = make_problem(blocks, config);
    ApcComponent comp = solve_power(prob);
    const double tp = time_ms([&] { (void)power_step(prob, comp); }, 5);
    std::printf("%-28s %8lld %12s %12.2f %8s\n", "power_step (p=4)",
                static_cast<long long>(n), "-", tp, "-");
  }
  return 0;
}
