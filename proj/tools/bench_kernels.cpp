// Compares the OpenMP kernels against their serial reference
// implementations: correctness drift and wall-clock speedup per shape.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <random>
#include <vector>

#include "ibrl/kernels.hpp"

using namespace ibrl::nn::kernels;
using Clock = std::chrono::steady_clock;

namespace {

std::vector<double> random_vec(size_t n, std::mt19937_64& rng) {
  std::normal_distribution<double> N(0.0, 1.0);
  std::vector<double> v(n);
  for (auto& x : v) x = N(rng);
  return v;
}

template <typename Fn>
double time_ms(Fn fn, int reps) {
  const auto t0 = Clock::now();
  for (int i = 0; i < reps; ++i) fn();
  const auto t1 = Clock::now();
  return std::chrono::duration<double, std::milli>(t1 - t0).count() / reps;
}

double max_abs_diff(const std::vector<double>& a,
                    const std::vector<double>& b) {
  double worst = 0.0;
  for (size_t i = 0; i < a.size(); ++i)
    worst = std::max(worst, std::abs(a[i] - b[i]));
  return worst;
}

void bench_gemm(int n, int k, int m, int reps, std::mt19937_64& rng) {
  const auto A = random_vec(static_cast<size_t>(n) * k, rng);
  const auto B = random_vec(static_cast<size_t>(k) * m, rng);
  std::vector<double> Cp(static_cast<size_t>(n) * m);
  std::vector<double> Cs(static_cast<size_t>(n) * m);

  const double tp = time_ms(
      [&] {
        std::fill(Cp.begin(), Cp.end(), 0.0);
        gemm_nn(A.data(), B.data(), Cp.data(), n, k, m);
      },
      reps);
  const double ts = time_ms(
      [&] {
        std::fill(Cs.begin(), Cs.end(), 0.0);
        gemm_nn_serial(A.data(), B.data(), Cs.data(), n, k, m);
      },
      reps);
  std::printf("gemm_nn %5dx%-5dx%-5d  parallel %8.3f ms  serial %8.3f ms  "
              "speedup %5.2fx  max diff %.3e\n",
              n, k, m, tp, ts, ts / tp, max_abs_diff(Cp, Cs));
}

void bench_conv(int batch, int hw, int cin, int cout, int reps,
                std::mt19937_64& rng) {
  const auto x =
      random_vec(static_cast<size_t>(batch) * hw * hw * cin, rng);
  const auto w = random_vec(static_cast<size_t>(4) * cin * cout, rng);
  const auto b = random_vec(cout, rng);
  const size_t out_n =
      static_cast<size_t>(batch) * (hw - 1) * (hw - 1) * cout;
  std::vector<double> yp(out_n), ys(out_n);

  const double tp = time_ms(
      [&] {
        conv2x2_forward(x.data(), w.data(), b.data(), yp.data(), batch, hw,
                        hw, cin, cout);
      },
      reps);
  const double ts = time_ms(
      [&] {
        conv2x2_forward_serial(x.data(), w.data(), b.data(), ys.data(), batch,
                               hw, hw, cin, cout);
      },
      reps);
  std::printf("conv2x2 b=%-4d %2dx%-2d c%3d->%-3d   parallel %8.3f ms  serial "
              "%8.3f ms  speedup %5.2fx  max diff %.3e\n",
              batch, hw, hw, cin, cout, tp, ts, ts / tp,
              max_abs_diff(yp, ys));
}

}  // namespace

int main() {
  std::mt19937_64 rng(2024);
  std::printf("kernel benchmark: OpenMP parallel vs serial reference\n\n");
  bench_gemm(64, 64, 64, 50, rng);
  bench_gemm(256, 256, 256, 10, rng);
  bench_gemm(512, 512, 512, 3, rng);
  bench_gemm(80, 5184, 64, 10, rng);  // grid policy head shape
  std::printf("\n");
  bench_conv(16, 12, 3, 16, 50, rng);
  bench_conv(64, 12, 16, 32, 20, rng);
  bench_conv(64, 11, 32, 64, 10, rng);
  return 0;
}
