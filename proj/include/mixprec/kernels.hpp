#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "mixprec/layer.hpp"
#include "mixprec/tensor.hpp"

namespace mixprec {

/// Half-open output-row range owned by one worker.
struct RowRange {
  int begin = 0;
  int end = 0;
  int size() const { return end - begin; }
  bool operator==(const RowRange&) const = default;
};

/// Balanced split of [0, out_h) into `workers` disjoint ranges whose sizes
/// differ by at most one. Deterministic.
std::vector<RowRange> partition_rows(int out_h, int workers);

/// Scratch for two adjacent output pixels' unpacked receptive fields.
struct Im2colBuffer {
  explicit Im2colBuffer(int len) : a(len, 0), b(len, 0) {}
  std::vector<std::uint8_t> a, b;
  int length() const { return static_cast<int>(a.size()); }
};

/// Fill one pixel's im2col buffer: the kh*kw*in_c receptive-field codes of
/// output pixel (oy, ox) in HWC order, zero-extended to 8 bits, with
/// out-of-image taps set to 0.
void im2col(const PackedTensor& input, const LayerConfig& cfg, int oy, int ox,
            std::span<std::uint8_t> buf);

/// Accumulators of a 4x2 tile: phi[filter][pixel].
struct TileAcc {
  std::int32_t phi[4][2] = {};
};

/// Dot products of 4 consecutive filters (unpacked on the fly at the weight
/// precision) against the two im2col buffers.
TileAcc matmul_tile(const WeightTensor& weights, const Im2colBuffer& bufs, const LayerConfig& cfg,
                    int oc_base);

/// Scalar-fallback dot product of one filter against one buffer.
std::int32_t matmul_single(const WeightTensor& weights, std::span<const std::uint8_t> buf, int oc);

/// Requantize a tile's accumulators and store the packed output codes for
/// pixels (oy, ox) and (oy, ox+1), channels oc_base..oc_base+3.
void qntpack(const TileAcc& acc, PackedTensor& out, const LayerQuant& q, int oy, int ox,
             int oc_base);

/// Requantize and store a single output element.
void qntpack_single(std::int32_t phi, PackedTensor& out, const LayerQuant& q, int oy, int ox,
                    int oc);

/// Full mixed-precision convolution: im2col -> 4x2-tiled matmul -> qntpack
/// over any of the 27 precision permutations. Output rows are split over
/// `workers` via partition_rows and run in parallel; the result is
/// byte-identical for any worker count.
PackedTensor conv_mixed(const PackedTensor& input, const WeightTensor& weights,
                        const LayerConfig& cfg, const LayerQuant& q, int workers = 1);

}  // namespace mixprec
