#include "mixprec/layer.hpp"

#include <algorithm>
#include <sstream>
#include <stdexcept>

namespace mixprec {

namespace {

void field_check(bool ok, const char* field, const char* what) {
  if (!ok) {
    std::ostringstream os;
    os << "layer config: " << field << " " << what;
    throw std::invalid_argument(os.str());
  }
}

bool valid_prec(int p) { return p == 2 || p == 4 || p == 8; }

}  // namespace

void LayerConfig::validate() const {
  field_check(in_h > 0, "in_h", "must be positive");
  field_check(in_w > 0, "in_w", "must be positive");
  field_check(in_c > 0, "in_c", "must be positive");
  field_check(out_c > 0, "out_c", "must be positive");
  field_check(kh > 0, "kh", "must be positive");
  field_check(kw > 0, "kw", "must be positive");
  field_check(stride > 0, "stride", "must be positive");
  field_check(pad >= 0, "pad", "must be non-negative");
  field_check(valid_prec(prec_in), "prec_in", "must be 2, 4 or 8");
  field_check(valid_prec(prec_w), "prec_w", "must be 2, 4 or 8");
  field_check(valid_prec(prec_out), "prec_out", "must be 2, 4 or 8");
  field_check(in_h + 2 * pad >= kh, "kh", "exceeds padded input height");
  field_check(in_w + 2 * pad >= kw, "kw", "exceeds padded input width");
  field_check((in_h + 2 * pad - kh) % stride == 0, "stride", "does not divide the height extent");
  field_check((in_w + 2 * pad - kw) % stride == 0, "stride", "does not divide the width extent");
}

LayerConfig reference_layer(int prec_in, int prec_w, int prec_out) {
  LayerConfig cfg;
  cfg.in_h = 16;
  cfg.in_w = 16;
  cfg.in_c = 32;
  cfg.out_c = 64;
  cfg.kh = 3;
  cfg.kw = 3;
  cfg.stride = 1;
  cfg.pad = 1;
  cfg.prec_in = prec_in;
  cfg.prec_w = prec_w;
  cfg.prec_out = prec_out;
  cfg.validate();
  return cfg;
}

LayerQuant LayerQuant::prepare(const LayerConfig& cfg, QuantParams input, QuantParams weights,
                               QuantParams output) {
  cfg.validate();
  input.validate();
  weights.validate();
  output.validate();

  if (input.n_bits != cfg.prec_in)
    throw std::invalid_argument("input quant n_bits does not match prec_in");
  if (weights.n_bits != cfg.prec_w)
    throw std::invalid_argument("weight quant n_bits does not match prec_w");
  if (output.n_bits != cfg.prec_out)
    throw std::invalid_argument("output quant n_bits does not match prec_out");
  if (input.is_signed || input.alpha != 0.0)
    throw std::invalid_argument("ifmap quantization must be unsigned with alpha = 0");
  if (output.is_signed || output.alpha != 0.0)
    throw std::invalid_argument("ofmap quantization must be unsigned with alpha = 0");
  if (!weights.is_signed) throw std::invalid_argument("weight quantization must be signed");
  if (output.per_channel() &&
      static_cast<int>(std::max(output.kappa.size(), output.lambda.size())) != cfg.out_c)
    throw std::invalid_argument("per-channel kappa/lambda size does not match out_c");

  // 32-bit accumulator bound: worst case |phi| over the im2col length.
  const std::int64_t max_w = std::int64_t{1} << (weights.n_bits - 1);
  const std::int64_t max_x = (std::int64_t{1} << input.n_bits) - 1;
  const std::int64_t bound = static_cast<std::int64_t>(cfg.im2col_len()) * max_w * max_x;
  if (bound >= (std::int64_t{1} << 31)) {
    std::ostringstream os;
    os << "layer config: accumulator bound " << bound << " does not fit 32 bits";
    throw std::invalid_argument(os.str());
  }

  LayerQuant q;
  q.input_ = std::move(input);
  q.weights_ = std::move(weights);
  q.output_ = std::move(output);
  q.phi_bound_ = static_cast<std::int32_t>(bound);

  const int channels = q.output_.per_channel() ? cfg.out_c : 1;
  if (q.output_.n_bits == 8) {
    q.requant_.reserve(channels);
    for (int ch = 0; ch < channels; ++ch)
      q.requant_.push_back(requant_shift_params(q.output_, q.eps_phi(), ch, q.phi_bound_));
  } else {
    q.thresholds_ = build_thresholds(q.output_, q.eps_phi(), channels);
  }
  return q;
}

}  // namespace mixprec
