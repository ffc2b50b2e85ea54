#include "mixprec/gen.hpp"

#include <cmath>
#include <stdexcept>
#include <vector>

#include "mixprec/oracle.hpp"

namespace mixprec {
namespace gen {

namespace {

PackedTensor draw_feature_map(int h, int w, int c, int n_bits, SplitMix64& rng) {
  PackedTensor t(h, w, c, n_bits, false);
  const std::uint32_t span = 1u << n_bits;
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      for (int ch = 0; ch < c; ++ch)
        t.set(y, x, ch, static_cast<int>(rng.below(span)));
  return t;
}

WeightTensor draw_weights(const LayerConfig& cfg, SplitMix64& rng) {
  WeightTensor w(cfg.out_c, cfg.kh, cfg.kw, cfg.in_c, cfg.prec_w);
  const int lo = -(1 << (cfg.prec_w - 1));
  const int hi = (1 << (cfg.prec_w - 1)) - 1;
  for (int oc = 0; oc < cfg.out_c; ++oc)
    for (int ky = 0; ky < cfg.kh; ++ky)
      for (int kx = 0; kx < cfg.kw; ++kx)
        for (int ic = 0; ic < cfg.in_c; ++ic)
          w.set(oc, ky, kx, ic, rng.range(lo, hi));
  return w;
}

}  // namespace

GeneratedLayer generate_layer(const LayerConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  SplitMix64 rng(seed);

  for (int attempt = 0; attempt < 64; ++attempt) {
    PackedTensor input = draw_feature_map(cfg.in_h, cfg.in_w, cfg.in_c, cfg.prec_in, rng);
    WeightTensor weights = draw_weights(cfg, rng);

    // Realized accumulator range, one pass of the plain oracle loop.
    const oracle::IntTensor in_codes = oracle::unpack_tensor(input);
    const oracle::IntTensor w_codes = oracle::unpack_weights(weights);
    std::vector<std::int32_t> phis;
    phis.reserve(static_cast<std::size_t>(cfg.out_h()) * cfg.out_w() * cfg.out_c);
    std::int32_t phi_min = 0, phi_max = 0;
    for (int oy = 0; oy < cfg.out_h(); ++oy)
      for (int ox = 0; ox < cfg.out_w(); ++ox)
        for (int oc = 0; oc < cfg.out_c; ++oc) {
          const std::int32_t phi = oracle::conv_accumulate(in_codes, w_codes, cfg, oy, ox, oc);
          if (phis.empty()) {
            phi_min = phi_max = phi;
          } else {
            phi_min = phi < phi_min ? phi : phi_min;
            phi_max = phi > phi_max ? phi : phi_max;
          }
          phis.push_back(phi);
        }
    if (phi_min == phi_max) continue;

    // Dyadic scales; everything downstream is exact in double.
    const double eps_in = std::ldexp(1.0, -rng.range(4, 8));
    const double eps_w = std::ldexp(1.0, -rng.range(4, 8));
    const double eps_out = std::ldexp(1.0, -rng.range(2, 6));
    const double alpha_w = -eps_w * std::ldexp(1.0, cfg.prec_w - 1);
    const double scale = eps_in * eps_w / eps_out;

    // kappa = m * 2^p, sized so the codes sweep the output range; lambda
    // anchors code 0 just above phi_min.
    const int levels = 1 << cfg.prec_out;
    const bool per_channel = rng.below(4) == 0;
    const int nominal_m = rng.range(8, 15);
    const double ideal =
        static_cast<double>(levels) /
        (scale * nominal_m * (static_cast<double>(phi_max) - phi_min + 1.0));
    const int p = std::ilogb(ideal);

    QuantParams out_p = QuantParams::feature_map(cfg.prec_out, eps_out);
    const int channels = per_channel ? cfg.out_c : 1;
    out_p.kappa.clear();
    out_p.lambda.clear();
    for (int ch = 0; ch < channels; ++ch) {
      const int m = ch == 0 && !per_channel ? nominal_m : rng.range(8, 15);
      const double kappa = std::ldexp(static_cast<double>(m), p);
      const double jitter = static_cast<double>(rng.range(1, 15)) / 16.0;
      out_p.kappa.push_back(kappa);
      out_p.lambda.push_back(-kappa * static_cast<double>(phi_min) + jitter);
    }

    LayerQuant quant;
    try {
      quant = LayerQuant::prepare(cfg, QuantParams::feature_map(cfg.prec_in, eps_in),
                                  QuantParams::weight(cfg.prec_w, eps_w, alpha_w), out_p);
    } catch (const std::runtime_error&) {
      continue;  // no exact integer requant for this draw
    }

    int first_code = -1;
    bool distinct = false;
    std::size_t i = 0;
    for (int oy = 0; oy < cfg.out_h() && !distinct; ++oy)
      for (int ox = 0; ox < cfg.out_w() && !distinct; ++ox)
        for (int oc = 0; oc < cfg.out_c && !distinct; ++oc, ++i) {
          const int code = quant.out_code(phis[i], oc);
          if (first_code < 0)
            first_code = code;
          else if (code != first_code)
            distinct = true;
        }
    if (!distinct) continue;

    return GeneratedLayer{std::move(input), std::move(weights), std::move(quant)};
  }
  throw std::runtime_error("layer generation failed: no non-degenerate draw in 64 attempts");
}

}  // namespace gen
}  // namespace mixprec
