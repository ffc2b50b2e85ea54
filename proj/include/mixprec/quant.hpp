#pragma once

#include <cstdint>
#include <limits>
#include <span>
#include <vector>

namespace mixprec {

/// Per-tensor linear quantization metadata. A tensor value is
/// alpha + eps * code, with codes unsigned for feature maps and
/// two's-complement for weights. kappa/lambda are the requantization
/// gain and offset folded into the output path; they are scalar
/// (layer-wise) or per-output-channel.
struct QuantParams {
  int n_bits = 8;  // 2, 4 or 8 (32 for raw accumulators)
  double eps = 1.0;
  double alpha = 0.0;
  bool is_signed = false;
  std::vector<double> kappa{1.0};
  std::vector<double> lambda{0.0};

  static QuantParams feature_map(int n_bits, double eps);
  static QuantParams weight(int n_bits, double eps, double alpha = 0.0);

  double beta() const { return alpha + eps * static_cast<double>(1 << n_bits); }
  int code_min() const { return is_signed ? -(1 << (n_bits - 1)) : 0; }
  int code_max() const { return is_signed ? (1 << (n_bits - 1)) - 1 : (1 << n_bits) - 1; }
  bool per_channel() const { return kappa.size() > 1 || lambda.size() > 1; }
  double kappa_at(int channel) const { return kappa[kappa.size() > 1 ? channel : 0]; }
  double lambda_at(int channel) const { return lambda[lambda.size() > 1 ? channel : 0]; }

  void validate() const;

  bool operator==(const QuantParams&) const = default;
};

/// A 32-bit matmul accumulator together with its quantization step
/// eps_phi = eps_x * eps_w.
struct Accumulator {
  std::int32_t value = 0;
  double eps_phi = 1.0;
};

/// alpha + eps * q. Throws std::out_of_range when q is not representable
/// in p.n_bits under p's signedness.
double dequantize(int q, const QuantParams& p);

/// Affine requantization: clip to [0, 2^N - 1] of
/// floor((kappa * phi + lambda) * eps_phi / eps_y). Monotone
/// non-decreasing in phi whenever kappa > 0.
int quantize_affine(const Accumulator& phi, const QuantParams& out_p, int channel = 0);

/// Precomputed accumulator thresholds realizing the affine quant function
/// for 2- and 4-bit outputs. Row ch holds the 2^N - 1 boundaries
/// T_1..T_{2^N-1}, T_k being the smallest int32 phi whose affine code
/// reaches k. Codes unreachable within int32 saturate their boundary to
/// INT32_MAX.
class ThresholdSet {
 public:
  ThresholdSet() = default;

  int n_bits() const { return n_bits_; }
  int channels() const { return channels_; }
  bool per_channel() const { return channels_ > 1; }
  int row_size() const { return (1 << n_bits_) - 1; }
  std::span<const std::int32_t> row(int channel) const;

  /// Code for phi: the number of row thresholds <= phi, found by a
  /// binary search of depth exactly n_bits.
  std::uint8_t quantize(std::int32_t phi, int channel = 0) const;
  /// Same search, reporting the number of threshold comparisons made.
  std::uint8_t quantize_counted(std::int32_t phi, int channel, int& comparisons) const;

 private:
  friend ThresholdSet build_thresholds(const QuantParams&, double, int);
  int n_bits_ = 0;
  int channels_ = 0;
  std::vector<std::int32_t> thresholds_;
};

/// Build threshold rows for channels 0..channels-1 from the affine quant
/// parameters. Requires out_p.n_bits in {2,4} and kappa > 0 per channel.
ThresholdSet build_thresholds(const QuantParams& out_p, double eps_phi, int channels = 1);

/// Integer fixed-point form of the 8-bit requantization path:
/// code = clamp((multiplier * phi + bias) >> shift, 0, 255).
struct RequantShift {
  std::int32_t multiplier = 1;  // positive, fits 16 bits
  int shift = 0;
  std::int64_t bias = 0;
};

/// Derive (multiplier, shift, bias) for an 8-bit output such that the
/// integer path equals quantize_affine for every phi in
/// [-phi_bound, phi_bound]. Throws std::runtime_error when no 16-bit
/// multiplier reproduces the affine path exactly over that range.
RequantShift requant_shift_params(const QuantParams& out_p, double eps_phi, int channel = 0,
                                  std::int32_t phi_bound = std::numeric_limits<std::int32_t>::max());

/// Apply the 8-bit path.
inline std::uint8_t requant_apply(std::int32_t phi, const RequantShift& r) {
  const std::int64_t v = (static_cast<std::int64_t>(r.multiplier) * phi + r.bias) >> r.shift;
  if (v < 0) return 0;
  if (v > 255) return 255;
  return static_cast<std::uint8_t>(v);
}

}  // namespace mixprec
