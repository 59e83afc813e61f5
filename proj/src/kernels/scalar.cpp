#include <algorithm>
#include <cmath>

#include "tcmpc/kernels.hpp"

namespace tcmpc::kernels {

namespace {

inline double clamp_one(double v, double lo, double hi) {
  // min then max, same order as the SIMD variants
  return std::max(lo, std::min(hi, v));
}

void projected_step(std::span<const double> u, std::span<const double> g,
                    std::span<const double> metric, double alpha, BoxView box,
                    std::span<double> out) {
  const std::size_t n = u.size();
  for (std::size_t i = 0; i < n; ++i) {
    const double scaled = (alpha * metric[i]) * g[i];
    out[i] = clamp_one(u[i] - scaled, box.lower[i], box.upper[i]);
  }
}

double projected_gradient_norm(std::span<const double> u, std::span<const double> g,
                               std::span<const double> metric, BoxView box,
                               std::span<const double> inv_width) {
  double worst = 0.0;
  const std::size_t n = u.size();
  for (std::size_t i = 0; i < n; ++i) {
    const double moved = clamp_one(u[i] - metric[i] * g[i], box.lower[i], box.upper[i]);
    worst = std::max(worst, std::abs(moved - u[i]) * inv_width[i]);
  }
  return worst;
}

double directional_change(std::span<const double> g, std::span<const double> a,
                          std::span<const double> b) {
  double lane[4] = {0.0, 0.0, 0.0, 0.0};
  const std::size_t n = g.size();
  const std::size_t blocked = n - n % 4;
  for (std::size_t i = 0; i < blocked; i += 4) {
    for (std::size_t l = 0; l < 4; ++l) lane[l] += g[i + l] * (a[i + l] - b[i + l]);
  }
  double sum = (lane[0] + lane[1]) + (lane[2] + lane[3]);
  for (std::size_t i = blocked; i < n; ++i) sum += g[i] * (a[i] - b[i]);
  return sum;
}

void clamp(std::span<const double> u, BoxView box, std::span<double> out) {
  for (std::size_t i = 0; i < u.size(); ++i) out[i] = clamp_one(u[i], box.lower[i], box.upper[i]);
}

}  // namespace

const KernelTable& scalar_table() {
  static const KernelTable table{"scalar", projected_step, projected_gradient_norm,
                                 directional_change, clamp};
  return table;
}

}  // namespace tcmpc::kernels
