#pragma once

#include <cstdint>
#include <optional>

#include "mixprec/layer.hpp"

namespace mixprec {
namespace cost {

/// Instruction budget of one 4x2 MatMul inner-loop iteration at a given
/// weight precision. The 2-bit loop's component breakdown is not public;
/// only its total and SIMD MAC count are modeled, the rest stay empty.
struct InnerLoopBudget {
  int w_bits = 8;
  std::optional<int> loads;
  std::optional<int> extracts;
  std::optional<int> packs;
  int simd_macs = 0;
  int total_cycles = 0;

  bool components_known() const {
    return loads.has_value() && extracts.has_value() && packs.has_value();
  }
};

/// Fixed per-iteration budgets: 8-bit {6 loads, 8 MACs, 14 cycles},
/// 4-bit {8 loads, 32 extracts, 16 packs, 16 MACs, 72 cycles},
/// 2-bit {32 MACs, 140 cycles}. Throws on other widths.
InnerLoopBudget inner_loop_budget(int w_bits);

/// Single-core MatMul-phase scalar MACs per cycle: 4 * simd_macs / total.
double matmul_throughput(int w_bits);

/// QntPack calibration: mean cycles per output element by output
/// precision (2.01 / 16.64 / 8.02 for 8/4/2 bits) and the measured
/// uncertainty band around it (0.57 / 4.47 / 1.15).
double qntpack_cycles_per_output(int out_bits);
double qntpack_cycle_variance(int out_bits);

/// Threshold comparisons per requantized output element: the binary-search
/// depth (= out_bits) for sub-byte outputs, 0 for the 8-bit shift path.
int threshold_comparisons(int out_bits);

struct CostReport {
  LayerConfig layer;
  int cores = 1;
  std::int64_t matmul_cycles = 0;
  std::int64_t qntpack_cycles = 0;
  std::int64_t total_cycles = 0;
  double macs_per_cycle = 0.0;
  double cycles_per_output_pixel = 0.0;  // per output element (pixel, channel)
};

inline constexpr double kParallelEfficiency = 7.5 / 8.0;

/// Layer-level cycle prediction. MatMul: one budget iteration consumes
/// 4*simd_macs scalar MACs of a 4x2 tile, so a tile of K-deep dot products
/// takes ceil(2K / simd_macs) iterations; QntPack adds the calibrated
/// per-element overhead. Multi-core runtime follows the largest
/// partition_rows share, divided by the parallel efficiency (applied only
/// when cores > 1; 7.5/8 by default). Requires out_c % 4 == 0 and even
/// out_w; anything else throws an "unmodeled geometry" error.
CostReport layer_cycles(const LayerConfig& cfg, int cores,
                        double efficiency = kParallelEfficiency);

/// Modeled MatMul-phase throughput ratio between two weight precisions on
/// the same geometry (qntpack excluded: the 2.57x / 2.5x figures describe
/// the MatMul loops alone).
double speedup(const LayerConfig& cfg, int w_bits_a, int w_bits_b);

}  // namespace cost
}  // namespace mixprec
