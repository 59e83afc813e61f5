#pragma once

#include <cstddef>
#include <span>
#include <string_view>

// Vector kernels used by the projected-gradient solver. Every variant must
// return results bit-identical to the scalar reference: elementwise kernels
// use the same mul/sub/min/max sequence, and reductions follow the fixed
// four-lane order defined by the scalar code.

namespace tcmpc::kernels {

struct BoxView {
  std::span<const double> lower;
  std::span<const double> upper;
};

struct KernelTable {
  std::string_view name;

  /// out[i] = clamp(u[i] - alpha * metric[i] * g[i], lower[i], upper[i])
  void (*projected_step)(std::span<const double> u, std::span<const double> g,
                         std::span<const double> metric, double alpha, BoxView box,
                         std::span<double> out);

  /// max_i |clamp(u[i] - metric[i] * g[i]) - u[i]| * inv_width[i]
  double (*projected_gradient_norm)(std::span<const double> u, std::span<const double> g,
                                    std::span<const double> metric, BoxView box,
                                    std::span<const double> inv_width);

  /// sum_i g[i] * (a[i] - b[i]), accumulated in four interleaved lanes.
  double (*directional_change)(std::span<const double> g, std::span<const double> a,
                               std::span<const double> b);

  /// out[i] = clamp(u[i], lower[i], upper[i])
  void (*clamp)(std::span<const double> u, BoxView box, std::span<double> out);
};

const KernelTable& scalar_table();

/// Null when the binary was built without AVX2 support.
const KernelTable* avx2_table();

/// Best table for this CPU. Honours TCMPC_SIMD=scalar to force the reference.
const KernelTable& active();

bool cpu_has_avx2();

}  // namespace tcmpc::kernels
