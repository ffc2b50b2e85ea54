#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "mixprec/layer.hpp"
#include "mixprec/tensor.hpp"

namespace mixprec {
namespace oracle {

/// Fully unpacked HWC tensor of integer codes.
struct IntTensor {
  int h = 0, w = 0, c = 0;
  std::vector<int> values;

  int at(int y, int x, int ch) const { return values[(static_cast<std::size_t>(y) * w + x) * c + ch]; }
  int& at(int y, int x, int ch) { return values[(static_cast<std::size_t>(y) * w + x) * c + ch]; }
};

/// Decode every element of a packed tensor (sign-extended per its
/// signedness).
IntTensor unpack_tensor(const PackedTensor& t);

/// Decode filters to shape (out_c, kh, kw, in_c) flattened in that order.
IntTensor unpack_weights(const WeightTensor& w);

/// Plain quadruple-loop accumulator for one output element; padding taps
/// contribute zero. Throws std::overflow_error if the exact sum leaves
/// int32.
std::int32_t conv_accumulate(const IntTensor& input, const IntTensor& weights,
                             const LayerConfig& cfg, int oy, int ox, int oc);

/// Brute-force convolution: direct accumulation and the affine quant
/// function per element, no im2col, no tiling, single thread.
PackedTensor conv_reference(const PackedTensor& input, const WeightTensor& weights,
                            const LayerConfig& cfg, const LayerQuant& q);

struct Mismatch {
  int y = 0, x = 0, ch = 0;
  int expected = 0;
  int actual = 0;
};

/// First differing element of two packed tensors, or nullopt when they are
/// identical in shape, precision and every code.
std::optional<Mismatch> compare_tensors(const PackedTensor& expected, const PackedTensor& actual);

}  // namespace oracle
}  // namespace mixprec
