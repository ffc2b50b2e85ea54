#include "mixprec/quant.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace mixprec {

namespace {

bool valid_bits(int n) { return n == 2 || n == 4 || n == 8; }

// Core of the affine quant function, with the scale eps_phi / eps_y
// already formed. Evaluated in double precision; all runtime paths
// (thresholds, multiplier/shift) are derived from this one definition.
int affine_code(std::int32_t phi, double kappa, double lambda, double scale, int n_bits) {
  const double v = std::floor((kappa * static_cast<double>(phi) + lambda) * scale);
  const int hi = (1 << n_bits) - 1;
  if (v <= 0.0) return 0;
  if (v >= static_cast<double>(hi)) return hi;
  return static_cast<int>(v);
}

// Smallest phi in [lo, hi] whose affine code reaches k, or hi + 1 when the
// code never reaches k on that range. Relies on monotonicity (kappa > 0).
std::int64_t affine_rise_point(int k, double kappa, double lambda, double scale, int n_bits,
                               std::int64_t lo, std::int64_t hi) {
  if (affine_code(static_cast<std::int32_t>(hi), kappa, lambda, scale, n_bits) < k)
    return hi + 1;
  if (affine_code(static_cast<std::int32_t>(lo), kappa, lambda, scale, n_bits) >= k)
    return lo;
  std::int64_t below = lo;  // code < k
  std::int64_t at = hi;     // code >= k
  while (at - below > 1) {
    const std::int64_t mid = below + (at - below) / 2;
    if (affine_code(static_cast<std::int32_t>(mid), kappa, lambda, scale, n_bits) >= k)
      at = mid;
    else
      below = mid;
  }
  return at;
}

// Rise point of the integer multiplier/shift path (clamped to [0,255]).
std::int64_t shift_rise_point(int k, const RequantShift& r, std::int64_t lo, std::int64_t hi) {
  const auto code = [&r](std::int64_t phi) {
    return static_cast<int>(requant_apply(static_cast<std::int32_t>(phi), r));
  };
  if (code(hi) < k) return hi + 1;
  if (code(lo) >= k) return lo;
  std::int64_t below = lo;
  std::int64_t at = hi;
  while (at - below > 1) {
    const std::int64_t mid = below + (at - below) / 2;
    if (code(mid) >= k)
      at = mid;
    else
      below = mid;
  }
  return at;
}

}  // namespace

QuantParams QuantParams::feature_map(int n_bits, double eps) {
  QuantParams p;
  p.n_bits = n_bits;
  p.eps = eps;
  p.alpha = 0.0;
  p.is_signed = false;
  p.validate();
  return p;
}

QuantParams QuantParams::weight(int n_bits, double eps, double alpha) {
  QuantParams p;
  p.n_bits = n_bits;
  p.eps = eps;
  p.alpha = alpha;
  p.is_signed = true;
  p.validate();
  return p;
}

void QuantParams::validate() const {
  if (!valid_bits(n_bits))
    throw std::invalid_argument("quant n_bits must be 2, 4 or 8");
  if (!(eps > 0.0))
    throw std::invalid_argument("quant eps must be positive");
  if (kappa.empty() || lambda.empty())
    throw std::invalid_argument("quant kappa/lambda must not be empty");
  if (kappa.size() > 1 && lambda.size() > 1 && kappa.size() != lambda.size())
    throw std::invalid_argument("quant kappa/lambda channel counts differ");
}

double dequantize(int q, const QuantParams& p) {
  if (q < p.code_min() || q > p.code_max()) {
    std::ostringstream os;
    os << "code " << q << " not representable in " << p.n_bits << "-bit "
       << (p.is_signed ? "signed" : "unsigned") << " quantization";
    throw std::out_of_range(os.str());
  }
  return p.alpha + p.eps * static_cast<double>(q);
}

int quantize_affine(const Accumulator& phi, const QuantParams& out_p, int channel) {
  return affine_code(phi.value, out_p.kappa_at(channel), out_p.lambda_at(channel),
                     phi.eps_phi / out_p.eps, out_p.n_bits);
}

std::span<const std::int32_t> ThresholdSet::row(int channel) const {
  if (channel < 0 || channel >= channels_)
    throw std::out_of_range("threshold channel out of range");
  return std::span<const std::int32_t>(thresholds_.data() +
                                           static_cast<std::size_t>(channel) * row_size(),
                                       static_cast<std::size_t>(row_size()));
}

std::uint8_t ThresholdSet::quantize(std::int32_t phi, int channel) const {
  int dummy = 0;
  return quantize_counted(phi, channel, dummy);
}

std::uint8_t ThresholdSet::quantize_counted(std::int32_t phi, int channel, int& comparisons) const {
  const std::int32_t* t =
      thresholds_.data() + static_cast<std::size_t>(per_channel() ? channel : 0) * row_size();
  unsigned code = 0;
  comparisons = 0;
  for (unsigned step = 1u << (n_bits_ - 1); step != 0; step >>= 1) {
    ++comparisons;
    if (phi >= t[code + step - 1]) code += step;
  }
  return static_cast<std::uint8_t>(code);
}

ThresholdSet build_thresholds(const QuantParams& out_p, double eps_phi, int channels) {
  if (out_p.n_bits != 2 && out_p.n_bits != 4)
    throw std::invalid_argument("thresholds need a 2- or 4-bit output");
  if (channels < 1)
    throw std::invalid_argument("threshold channel count must be positive");
  const double scale = eps_phi / out_p.eps;
  if (!(scale > 0.0))
    throw std::invalid_argument("threshold scale must be positive");

  constexpr std::int64_t lo = std::numeric_limits<std::int32_t>::min();
  constexpr std::int64_t hi = std::numeric_limits<std::int32_t>::max();

  ThresholdSet set;
  set.n_bits_ = out_p.n_bits;
  set.channels_ = channels;
  set.thresholds_.reserve(static_cast<std::size_t>(channels) * set.row_size());
  for (int ch = 0; ch < channels; ++ch) {
    const double kappa = out_p.kappa_at(ch);
    const double lambda = out_p.lambda_at(ch);
    if (!(kappa > 0.0)) {
      std::ostringstream os;
      os << "threshold construction needs kappa > 0 (channel " << ch << ")";
      throw std::runtime_error(os.str());
    }
    for (int k = 1; k <= set.row_size(); ++k) {
      const std::int64_t t = affine_rise_point(k, kappa, lambda, scale, out_p.n_bits, lo, hi);
      set.thresholds_.push_back(
          t > hi ? std::numeric_limits<std::int32_t>::max() : static_cast<std::int32_t>(t));
    }
  }
  return set;
}

RequantShift requant_shift_params(const QuantParams& out_p, double eps_phi, int channel,
                                  std::int32_t phi_bound) {
  if (out_p.n_bits != 8)
    throw std::invalid_argument("multiplier/shift requantization is the 8-bit path");
  const double kappa = out_p.kappa_at(channel);
  const double lambda = out_p.lambda_at(channel);
  const double scale = eps_phi / out_p.eps;
  if (!(kappa > 0.0) || !(scale > 0.0))
    throw std::runtime_error("requant needs kappa > 0 and a positive scale");

  const std::int64_t lo = -static_cast<std::int64_t>(phi_bound);
  const std::int64_t hi = phi_bound;

  // Both paths are monotone step functions of phi, so they agree on the
  // whole range iff every code's rise point matches.
  const auto matches = [&](const RequantShift& r) {
    for (int k = 1; k <= 255; ++k) {
      if (shift_rise_point(k, r, lo, hi) !=
          affine_rise_point(k, kappa, lambda, scale, 8, lo, hi))
        return false;
    }
    return true;
  };

  constexpr int kMaxShift = 40;
  constexpr std::int32_t kMaxMultiplier = 32767;
  for (int shift = 0; shift <= kMaxShift; ++shift) {
    const double m_real = kappa * scale * std::ldexp(1.0, shift);
    if (m_real > static_cast<double>(kMaxMultiplier) + 0.5) break;
    const std::int64_t m_round = std::llround(m_real);
    for (const std::int64_t m : {m_round, m_round - 1, m_round + 1}) {
      if (m < 1 || m > kMaxMultiplier) continue;
      RequantShift r;
      r.multiplier = static_cast<std::int32_t>(m);
      r.shift = shift;
      r.bias = std::llround(lambda * scale * std::ldexp(1.0, shift));
      if (matches(r)) return r;
    }
  }
  std::ostringstream os;
  os << "no exact 16-bit multiplier/shift for requant scale kappa*eps_phi/eps_y = "
     << kappa * scale << " (channel " << channel << ")";
  throw std::runtime_error(os.str());
}

}  // namespace mixprec
