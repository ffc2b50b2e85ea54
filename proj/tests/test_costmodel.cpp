#include <doctest.h>

#include <stdexcept>
#include <string>

#include "mixprec/costmodel.hpp"

using namespace mixprec;
using namespace mixprec::cost;

TEST_CASE("inner loop budgets match the stated instruction counts") {
  const InnerLoopBudget b8 = inner_loop_budget(8);
  CHECK(b8.loads == 6);
  CHECK(b8.extracts == 0);
  CHECK(b8.packs == 0);
  CHECK(b8.simd_macs == 8);
  CHECK(b8.total_cycles == 14);
  CHECK(b8.components_known());
  CHECK(*b8.loads + b8.simd_macs == b8.total_cycles);

  const InnerLoopBudget b4 = inner_loop_budget(4);
  CHECK(b4.loads == 8);
  CHECK(b4.extracts == 32);
  CHECK(b4.packs == 16);
  CHECK(b4.simd_macs == 16);
  CHECK(b4.total_cycles == 72);
  CHECK(*b4.loads + *b4.extracts + *b4.packs + b4.simd_macs == b4.total_cycles);

  const InnerLoopBudget b2 = inner_loop_budget(2);
  CHECK(b2.total_cycles == 140);
  CHECK(b2.simd_macs == 32);
  CHECK(!b2.components_known());
  CHECK(!b2.loads.has_value());

  CHECK_THROWS_AS(inner_loop_budget(16), std::invalid_argument);
}

TEST_CASE("matmul throughput and the expected precision ratios") {
  CHECK(matmul_throughput(8) == doctest::Approx(32.0 / 14.0));
  CHECK(matmul_throughput(4) == doctest::Approx(64.0 / 72.0));
  CHECK(matmul_throughput(2) == doctest::Approx(128.0 / 140.0));
  CHECK(matmul_throughput(8) / matmul_throughput(4) == doctest::Approx(2.571).epsilon(0.004));
  CHECK(matmul_throughput(8) / matmul_throughput(2) == doctest::Approx(2.5).epsilon(0.004));
  // 8-bit is the fastest; sub-byte never beats it.
  CHECK(matmul_throughput(8) >= matmul_throughput(4));
  CHECK(matmul_throughput(8) >= matmul_throughput(2));
}

TEST_CASE("qntpack calibration constants and trend") {
  CHECK(qntpack_cycles_per_output(8) == 2.01);
  CHECK(qntpack_cycles_per_output(4) == 16.64);
  CHECK(qntpack_cycles_per_output(2) == 8.02);
  CHECK(qntpack_cycle_variance(8) == 0.57);
  CHECK(qntpack_cycle_variance(4) == 4.47);
  CHECK(qntpack_cycle_variance(2) == 1.15);
  CHECK(qntpack_cycles_per_output(8) < qntpack_cycles_per_output(2));
  CHECK(qntpack_cycles_per_output(2) < qntpack_cycles_per_output(4));

  CHECK(threshold_comparisons(2) == 2);
  CHECK(threshold_comparisons(4) == 4);
  CHECK(threshold_comparisons(8) == 0);
  CHECK(threshold_comparisons(4) == 2 * threshold_comparisons(2));
  // Measured 4-bit/2-bit cost ratio vs the search-depth prediction of 2.
  const double measured = qntpack_cycles_per_output(4) / qntpack_cycles_per_output(2);
  const double predicted = static_cast<double>(threshold_comparisons(4)) / threshold_comparisons(2);
  CHECK(measured / predicted == doctest::Approx(1.0).epsilon(0.10));
}

TEST_CASE("layer cycles on the reference layer, single core") {
  const CostReport rep = layer_cycles(reference_layer(), 1);
  // 128 pixel pairs x 16 filter bands x ceil(2*288/8)=72 iterations x 14.
  CHECK(rep.matmul_cycles == 128LL * 16 * 72 * 14);
  CHECK(rep.qntpack_cycles == 32932);  // 256 pixels * 64 ch * 2.01, rounded
  CHECK(rep.total_cycles == rep.matmul_cycles + rep.qntpack_cycles);
  CHECK(rep.macs_per_cycle ==
        doctest::Approx(4718592.0 / static_cast<double>(rep.total_cycles)));
  CHECK(rep.cycles_per_output_pixel ==
        doctest::Approx(static_cast<double>(rep.total_cycles) / (16.0 * 16.0 * 64.0)));
}

TEST_CASE("iteration counts follow the per-precision budgets") {
  // 4-bit: ceil(2*288/16) = 36 iterations; 2-bit: ceil(2*288/32) = 18.
  const CostReport r4 = layer_cycles(reference_layer(8, 4, 8), 1);
  CHECK(r4.matmul_cycles == 128LL * 16 * 36 * 72);
  const CostReport r2 = layer_cycles(reference_layer(8, 2, 8), 1);
  CHECK(r2.matmul_cycles == 128LL * 16 * 18 * 140);
}

TEST_CASE("multi-core scaling follows partition_rows and the efficiency factor") {
  const CostReport one = layer_cycles(reference_layer(), 1);
  const CostReport eight = layer_cycles(reference_layer(), 8);
  // 16 rows over 8 cores: each core owns 1/8 of the work; the efficiency
  // factor stretches it, so the speedup is exactly eff * 8 = 7.5.
  CHECK(static_cast<double>(one.total_cycles) / static_cast<double>(eight.total_cycles) ==
        doctest::Approx(7.5).epsilon(1e-4));

  // An uneven split is bounded by the largest share: 16 rows on 3 cores.
  const CostReport three = layer_cycles(reference_layer(), 3);
  CHECK(static_cast<double>(three.total_cycles) ==
        doctest::Approx(static_cast<double>(one.total_cycles) * (6.0 / 16.0) /
                        kParallelEfficiency)
            .epsilon(1e-5));

  // Unit efficiency on an even split is ideal scaling.
  const CostReport ideal = layer_cycles(reference_layer(), 8, 1.0);
  CHECK(static_cast<double>(one.total_cycles) / static_cast<double>(ideal.total_cycles) ==
        doctest::Approx(8.0).epsilon(1e-4));
}

TEST_CASE("peak modeled throughput on the reference layer") {
  const CostReport rep = layer_cycles(reference_layer(), 8);
  CHECK(rep.macs_per_cycle >= 16.0);
  CHECK(rep.macs_per_cycle <= 18.3);
}

TEST_CASE("speedup ratios between weight precisions") {
  const LayerConfig ref = reference_layer();
  CHECK(speedup(ref, 8, 8) == doctest::Approx(1.0));
  CHECK(speedup(ref, 8, 4) == doctest::Approx(18.0 / 7.0));   // 2.571...
  CHECK(speedup(ref, 8, 2) == doctest::Approx(2.5));
  CHECK(speedup(ref, 4, 8) == doctest::Approx(7.0 / 18.0));
}

TEST_CASE("unmodeled geometries are rejected, not fabricated") {
  LayerConfig odd_c = reference_layer();
  odd_c.out_c = 6;
  try {
    layer_cycles(odd_c, 1);
    FAIL_CHECK("expected an unmodeled-geometry error");
  } catch (const std::invalid_argument& e) {
    CHECK(std::string(e.what()).find("unmodeled geometry") != std::string::npos);
  }

  LayerConfig odd_w = reference_layer();
  odd_w.in_w = 15;  // out_w = 15
  CHECK_THROWS_AS(layer_cycles(odd_w, 1), std::invalid_argument);

  CHECK_THROWS_AS(layer_cycles(reference_layer(), 0), std::invalid_argument);
  CHECK_THROWS_AS(layer_cycles(reference_layer(), 8, 1.5), std::invalid_argument);
}
