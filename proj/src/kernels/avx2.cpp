// Compiled with -mavx2 only; dispatch guarantees this code runs on AVX2 CPUs.
#include <immintrin.h>

#include <algorithm>
#include <cmath>

#include "tcmpc/kernels.hpp"

namespace tcmpc::kernels {

namespace {

inline __m256d clamp4(__m256d v, __m256d lo, __m256d hi) {
  return _mm256_max_pd(_mm256_min_pd(v, hi), lo);
}

inline double clamp_one(double v, double lo, double hi) { return std::max(lo, std::min(hi, v)); }

void projected_step(std::span<const double> u, std::span<const double> g,
                    std::span<const double> metric, double alpha, BoxView box,
                    std::span<double> out) {
  const std::size_t n = u.size();
  const std::size_t blocked = n - n % 4;
  const __m256d a = _mm256_set1_pd(alpha);
  for (std::size_t i = 0; i < blocked; i += 4) {
    const __m256d scaled = _mm256_mul_pd(_mm256_mul_pd(a, _mm256_loadu_pd(&metric[i])),
                                         _mm256_loadu_pd(&g[i]));
    const __m256d moved = _mm256_sub_pd(_mm256_loadu_pd(&u[i]), scaled);
    _mm256_storeu_pd(&out[i], clamp4(moved, _mm256_loadu_pd(&box.lower[i]),
                                     _mm256_loadu_pd(&box.upper[i])));
  }
  for (std::size_t i = blocked; i < n; ++i) {
    out[i] = clamp_one(u[i] - (alpha * metric[i]) * g[i], box.lower[i], box.upper[i]);
  }
}

double projected_gradient_norm(std::span<const double> u, std::span<const double> g,
                               std::span<const double> metric, BoxView box,
                               std::span<const double> inv_width) {
  const std::size_t n = u.size();
  const std::size_t blocked = n - n % 4;
  const __m256d sign = _mm256_set1_pd(-0.0);
  __m256d worst = _mm256_setzero_pd();
  for (std::size_t i = 0; i < blocked; i += 4) {
    const __m256d ui = _mm256_loadu_pd(&u[i]);
    const __m256d moved = clamp4(
        _mm256_sub_pd(ui, _mm256_mul_pd(_mm256_loadu_pd(&metric[i]), _mm256_loadu_pd(&g[i]))),
        _mm256_loadu_pd(&box.lower[i]), _mm256_loadu_pd(&box.upper[i]));
    const __m256d dist = _mm256_andnot_pd(sign, _mm256_sub_pd(moved, ui));
    worst = _mm256_max_pd(worst, _mm256_mul_pd(dist, _mm256_loadu_pd(&inv_width[i])));
  }
  alignas(32) double lanes[4];
  _mm256_store_pd(lanes, worst);
  double result = std::max(std::max(lanes[0], lanes[1]), std::max(lanes[2], lanes[3]));
  for (std::size_t i = blocked; i < n; ++i) {
    const double moved = clamp_one(u[i] - metric[i] * g[i], box.lower[i], box.upper[i]);
    result = std::max(result, std::abs(moved - u[i]) * inv_width[i]);
  }
  return result;
}

double directional_change(std::span<const double> g, std::span<const double> a,
                          std::span<const double> b) {
  const std::size_t n = g.size();
  const std::size_t blocked = n - n % 4;
  __m256d acc = _mm256_setzero_pd();
  for (std::size_t i = 0; i < blocked; i += 4) {
    const __m256d diff = _mm256_sub_pd(_mm256_loadu_pd(&a[i]), _mm256_loadu_pd(&b[i]));
    acc = _mm256_add_pd(acc, _mm256_mul_pd(_mm256_loadu_pd(&g[i]), diff));
  }
  alignas(32) double lanes[4];
  _mm256_store_pd(lanes, acc);
  double sum = (lanes[0] + lanes[1]) + (lanes[2] + lanes[3]);
  for (std::size_t i = blocked; i < n; ++i) sum += g[i] * (a[i] - b[i]);
  return sum;
}

void clamp(std::span<const double> u, BoxView box, std::span<double> out) {
  const std::size_t n = u.size();
  const std::size_t blocked = n - n % 4;
  for (std::size_t i = 0; i < blocked; i += 4) {
    _mm256_storeu_pd(&out[i], clamp4(_mm256_loadu_pd(&u[i]), _mm256_loadu_pd(&box.lower[i]),
                                     _mm256_loadu_pd(&box.upper[i])));
  }
  for (std::size_t i = blocked; i < n; ++i) out[i] = clamp_one(u[i], box.lower[i], box.upper[i]);
}

}  // namespace

const KernelTable* avx2_table() {
  static const KernelTable table{"avx2", projected_step, projected_gradient_norm,
                                 directional_change, clamp};
  return &table;
}

}  // namespace tcmpc::kernels
