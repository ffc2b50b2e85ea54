#pragma once

#include <cstdint>
#include <vector>

#include "mixprec/quant.hpp"

namespace mixprec {

/// Convolution geometry plus the (input, weight, output) precision triple.
struct LayerConfig {
  int in_h = 0, in_w = 0, in_c = 0;
  int out_c = 0;
  int kh = 1, kw = 1;
  int stride = 1;
  int pad = 0;
  int prec_in = 8, prec_w = 8, prec_out = 8;

  int out_h() const { return (in_h + 2 * pad - kh) / stride + 1; }
  int out_w() const { return (in_w + 2 * pad - kw) / stride + 1; }
  int im2col_len() const { return kh * kw * in_c; }
  std::int64_t total_macs() const {
    return static_cast<std::int64_t>(out_h()) * out_w() * out_c * im2col_len();
  }

  /// Throws std::invalid_argument naming the offending field.
  void validate() const;

  bool operator==(const LayerConfig&) const = default;
};

/// The benchmark geometry: 16x16 spatial, 32 input channels,
/// 64 output channels, 3x3 filters, same-padded (288-element im2col).
LayerConfig reference_layer(int prec_in = 8, int prec_w = 8, int prec_out = 8);

/// Per-layer quantization bundle: validated tensor parameters plus the
/// integer requantization machinery the kernels use (thresholds for 2/4-bit
/// outputs, multiplier/shift for 8-bit). Immutable after prepare().
class LayerQuant {
 public:
  LayerQuant() = default;

  /// Validates tensor roles (feature maps unsigned with alpha = 0, weights
  /// signed), checks the 32-bit accumulator bound for the geometry, and
  /// builds the output path. Throws on any violation.
  static LayerQuant prepare(const LayerConfig& cfg, QuantParams input, QuantParams weights,
                            QuantParams output);

  const QuantParams& input() const { return input_; }
  const QuantParams& weights() const { return weights_; }
  const QuantParams& output() const { return output_; }

  double eps_phi() const { return input_.eps * weights_.eps; }
  /// Largest |phi| any dot product of this layer can produce.
  std::int32_t phi_bound() const { return phi_bound_; }

  /// Reference output code for an accumulator (the affine quant function).
  int out_code(std::int32_t phi, int channel) const {
    return quantize_affine(Accumulator{phi, eps_phi()}, output_, channel);
  }

  bool uses_thresholds() const { return output_.n_bits != 8; }
  const ThresholdSet& thresholds() const { return thresholds_; }
  const RequantShift& requant(int channel) const {
    return requant_[requant_.size() > 1 ? static_cast<std::size_t>(channel) : 0];
  }

 private:
  QuantParams input_, weights_, output_;
  std::int32_t phi_bound_ = 0;
  ThresholdSet thresholds_;
  std::vector<RequantShift> requant_;
};

}  // namespace mixprec
