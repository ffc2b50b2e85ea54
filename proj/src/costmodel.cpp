#include "mixprec/costmodel.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

#include "mixprec/kernels.hpp"

namespace mixprec {
namespace cost {

namespace {

void check_out_bits(int out_bits) {
  if (out_bits != 2 && out_bits != 4 && out_bits != 8)
    throw std::invalid_argument("output precision must be 2, 4 or 8");
}

// MatMul-phase cycles of a full-tile layer at one core.
std::int64_t matmul_phase_cycles(const LayerConfig& cfg, const InnerLoopBudget& b) {
  const std::int64_t pairs = static_cast<std::int64_t>(cfg.out_h()) * cfg.out_w() / 2;
  const std::int64_t bands = cfg.out_c / 4;
  const int k = cfg.im2col_len();
  const std::int64_t iterations = (2LL * k + b.simd_macs - 1) / b.simd_macs;
  return pairs * bands * iterations * b.total_cycles;
}

}  // namespace

InnerLoopBudget inner_loop_budget(int w_bits) {
  InnerLoopBudget b;
  b.w_bits = w_bits;
  switch (w_bits) {
    case 8:
      b.loads = 6;
      b.extracts = 0;
      b.packs = 0;
      b.simd_macs = 8;
      b.total_cycles = 14;
      break;
    case 4:
      b.loads = 8;
      b.extracts = 32;
      b.packs = 16;
      b.simd_macs = 16;
      b.total_cycles = 72;
      break;
    case 2:
      b.simd_macs = 32;
      b.total_cycles = 140;
      break;
    default:
      throw std::invalid_argument("inner loop budget: weight precision must be 2, 4 or 8");
  }
  return b;
}

double matmul_throughput(int w_bits) {
  const InnerLoopBudget b = inner_loop_budget(w_bits);
  return 4.0 * b.simd_macs / b.total_cycles;
}

double qntpack_cycles_per_output(int out_bits) {
  check_out_bits(out_bits);
  if (out_bits == 8) return 2.01;
  return out_bits == 4 ? 16.64 : 8.02;
}

double qntpack_cycle_variance(int out_bits) {
  check_out_bits(out_bits);
  if (out_bits == 8) return 0.57;
  return out_bits == 4 ? 4.47 : 1.15;
}

int threshold_comparisons(int out_bits) {
  check_out_bits(out_bits);
  return out_bits == 8 ? 0 : out_bits;
}

CostReport layer_cycles(const LayerConfig& cfg, int cores, double efficiency) {
  cfg.validate();
  if (cores < 1)
    throw std::invalid_argument("core count must be positive");
  if (!(efficiency > 0.0) || efficiency > 1.0)
    throw std::invalid_argument("parallel efficiency must lie in (0, 1]");
  if (cfg.out_c % 4 != 0 || cfg.out_w() % 2 != 0) {
    std::ostringstream os;
    os << "unmodeled geometry: the cost model needs out_c % 4 == 0 and even out_w, got out_c="
       << cfg.out_c << ", out_w=" << cfg.out_w();
    throw std::invalid_argument(os.str());
  }

  const InnerLoopBudget budget = inner_loop_budget(cfg.prec_w);
  const double matmul1 = static_cast<double>(matmul_phase_cycles(cfg, budget));
  const double qnt1 = static_cast<double>(cfg.out_h()) * cfg.out_w() * cfg.out_c *
                      qntpack_cycles_per_output(cfg.prec_out);

  double share = 1.0;
  if (cores > 1) {
    int max_rows = 0;
    for (const RowRange& r : partition_rows(cfg.out_h(), cores))
      max_rows = r.size() > max_rows ? r.size() : max_rows;
    share = static_cast<double>(max_rows) / cfg.out_h() / efficiency;
  }

  CostReport rep;
  rep.layer = cfg;
  rep.cores = cores;
  rep.matmul_cycles = std::llround(matmul1 * share);
  rep.qntpack_cycles = std::llround(qnt1 * share);
  rep.total_cycles = rep.matmul_cycles + rep.qntpack_cycles;
  rep.macs_per_cycle = static_cast<double>(cfg.total_macs()) / static_cast<double>(rep.total_cycles);
  rep.cycles_per_output_pixel = static_cast<double>(rep.total_cycles) /
                                (static_cast<double>(cfg.out_h()) * cfg.out_w() * cfg.out_c);
  return rep;
}

double speedup(const LayerConfig& cfg, int w_bits_a, int w_bits_b) {
  cfg.validate();
  // Tile counts cancel in the ratio; only the per-tile iteration cost is
  // precision-dependent.
  const auto tile_cycles = [&cfg](int w_bits) {
    const InnerLoopBudget b = inner_loop_budget(w_bits);
    const std::int64_t iterations = (2LL * cfg.im2col_len() + b.simd_macs - 1) / b.simd_macs;
    return static_cast<double>(iterations * b.total_cycles);
  };
  return tile_cycles(w_bits_b) / tile_cycles(w_bits_a);
}

}  // namespace cost
}  // namespace mixprec
