#include "mixprec/oracle.hpp"

#include <limits>
#include <sstream>
#include <stdexcept>

namespace mixprec {
namespace oracle {

IntTensor unpack_tensor(const PackedTensor& t) {
  IntTensor out;
  out.h = t.h();
  out.w = t.w();
  out.c = t.c();
  out.values.resize(static_cast<std::size_t>(t.h()) * t.w() * t.c());
  for (int y = 0; y < t.h(); ++y)
    for (int x = 0; x < t.w(); ++x)
      for (int ch = 0; ch < t.c(); ++ch)
        out.at(y, x, ch) = t.get(y, x, ch);
  return out;
}

IntTensor unpack_weights(const WeightTensor& w) {
  IntTensor out;
  out.h = w.out_c();
  out.w = w.kh() * w.kw();
  out.c = w.in_c();
  out.values.resize(static_cast<std::size_t>(out.h) * out.w * out.c);
  std::size_t i = 0;
  for (int oc = 0; oc < w.out_c(); ++oc)
    for (int ky = 0; ky < w.kh(); ++ky)
      for (int kx = 0; kx < w.kw(); ++kx)
        for (int ic = 0; ic < w.in_c(); ++ic)
          out.values[i++] = w.get(oc, ky, kx, ic);
  return out;
}

std::int32_t conv_accumulate(const IntTensor& input, const IntTensor& weights,
                             const LayerConfig& cfg, int oy, int ox, int oc) {
  std::int64_t acc = 0;
  for (int ky = 0; ky < cfg.kh; ++ky) {
    const int iy = oy * cfg.stride - cfg.pad + ky;
    if (iy < 0 || iy >= cfg.in_h) continue;
    for (int kx = 0; kx < cfg.kw; ++kx) {
      const int ix = ox * cfg.stride - cfg.pad + kx;
      if (ix < 0 || ix >= cfg.in_w) continue;
      for (int ic = 0; ic < cfg.in_c; ++ic) {
        const int wv = weights.values[((static_cast<std::size_t>(oc) * cfg.kh + ky) * cfg.kw + kx) *
                                          cfg.in_c +
                                      ic];
        acc += static_cast<std::int64_t>(input.at(iy, ix, ic)) * wv;
      }
    }
  }
  if (acc < std::numeric_limits<std::int32_t>::min() ||
      acc > std::numeric_limits<std::int32_t>::max()) {
    std::ostringstream os;
    os << "accumulator overflow at (" << oy << ", " << ox << ", " << oc << "): " << acc;
    throw std::overflow_error(os.str());
  }
  return static_cast<std::int32_t>(acc);
}

PackedTensor conv_reference(const PackedTensor& input, const WeightTensor& weights,
                            const LayerConfig& cfg, const LayerQuant& q) {
  cfg.validate();
  const IntTensor in = unpack_tensor(input);
  const IntTensor wt = unpack_weights(weights);
  PackedTensor out(cfg.out_h(), cfg.out_w(), cfg.out_c, cfg.prec_out, false, q.output());
  for (int oy = 0; oy < cfg.out_h(); ++oy)
    for (int ox = 0; ox < cfg.out_w(); ++ox)
      for (int oc = 0; oc < cfg.out_c; ++oc) {
        const std::int32_t phi = conv_accumulate(in, wt, cfg, oy, ox, oc);
        out.set(oy, ox, oc, q.out_code(phi, oc));
      }
  return out;
}

std::optional<Mismatch> compare_tensors(const PackedTensor& expected, const PackedTensor& actual) {
  if (expected.h() != actual.h() || expected.w() != actual.w() || expected.c() != actual.c() ||
      expected.n_bits() != actual.n_bits() || expected.is_signed() != actual.is_signed())
    return Mismatch{-1, -1, -1, 0, 0};
  for (int y = 0; y < expected.h(); ++y)
    for (int x = 0; x < expected.w(); ++x)
      for (int ch = 0; ch < expected.c(); ++ch) {
        const int e = expected.get(y, x, ch);
        const int a = actual.get(y, x, ch);
        if (e != a) return Mismatch{y, x, ch, e, a};
      }
  return std::nullopt;
}

}  // namespace oracle
}  // namespace mixprec
