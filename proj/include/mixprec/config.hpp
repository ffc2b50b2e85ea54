#pragma once

#include <string>

#include "mixprec/layer.hpp"
#include "mixprec/quant.hpp"

namespace mixprec {
namespace cfg {

/// Layer config files are `key = value` lines with `#` comments. Required
/// keys: in_h, in_w, in_c, out_c, kh, kw, prec_in, prec_w, prec_out.
/// Optional: stride (1), pad (0). Unknown or malformed keys are errors
/// naming the key and line.
LayerConfig load_layer_config(const std::string& path);
void save_layer_config(const std::string& path, const LayerConfig& cfg);

/// The three per-tensor quantization parameter sets of one layer.
struct QuantTriple {
  QuantParams in;
  QuantParams w;
  QuantParams out;
};

/// Quant parameter files use the same key = value syntax with dotted keys
/// (in.n_bits, in.eps, w.eps, w.alpha, out.eps, out.kappa, ...);
/// out.kappa / out.lambda take comma-separated lists for per-channel
/// values. Doubles round-trip exactly.
QuantTriple load_quant_params(const std::string& path);
void save_quant_params(const std::string& path, const QuantTriple& q);

}  // namespace cfg
}  // namespace mixprec
