#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

namespace mixprec {

// Bit-field primitives for 2- and 4-bit codes packed into bytes and 32-bit
// words. Fields are little-endian: element i of a word occupies bits
// [i*width, (i+1)*width).

inline void check_field(int width, int offset, int container_bits) {
  if (width != 2 && width != 4)
    throw std::invalid_argument("bit field width must be 2 or 4");
  if (offset < 0 || offset % width != 0 || offset + width > container_bits)
    throw std::invalid_argument("bit field offset out of range");
}

/// Number of operands a 32-bit load yields at the given width.
inline int operands_per_word(int width) {
  if (width != 2 && width != 4 && width != 8)
    throw std::invalid_argument("operand width must be 2, 4 or 8");
  return 32 / width;
}

/// Load cost amortization: 32-bit loads per operand (0.25 / 0.125 / 0.0625).
inline double loads_per_operand(int width) {
  return 1.0 / operands_per_word(width);
}

/// Extract a width-bit field at the given offset, sign-extended to 8 bits.
inline std::int8_t bit_extract(std::uint32_t word, int width, int offset) {
  check_field(width, offset, 32);
  const std::uint32_t field = (word >> offset) & ((1u << width) - 1u);
  const std::uint32_t sign = 1u << (width - 1);
  return static_cast<std::int8_t>((field ^ sign) - sign);
}

/// Extract a width-bit field at the given offset, zero-extended to 8 bits.
inline std::uint8_t bit_extract_unsigned(std::uint32_t word, int width, int offset) {
  check_field(width, offset, 32);
  return static_cast<std::uint8_t>((word >> offset) & ((1u << width) - 1u));
}

/// Replace the width-bit field at the given offset of dest with the low
/// width bits of src; all other bits are preserved.
inline std::uint8_t bit_insert(std::uint8_t dest, std::uint8_t src, int width, int offset) {
  check_field(width, offset, 8);
  const std::uint8_t mask = static_cast<std::uint8_t>(((1u << width) - 1u) << offset);
  return static_cast<std::uint8_t>((dest & ~mask) | ((src << offset) & mask));
}

/// Unpack all 32/width codes of a word, lowest offset first. Codes are
/// written as raw 8-bit patterns: sign-extended when sign_extend is set,
/// zero-extended otherwise. Width 8 reinterprets the four bytes directly.
/// Returns the number of codes written.
inline int unpack_word(std::uint32_t word, int width, bool sign_extend, std::uint8_t* out) {
  const int n = operands_per_word(width);
  if (width == 8) {
    for (int i = 0; i < 4; ++i)
      out[i] = static_cast<std::uint8_t>(word >> (8 * i));
    return n;
  }
  for (int i = 0; i < n; ++i) {
    out[i] = sign_extend
                 ? static_cast<std::uint8_t>(bit_extract(word, width, i * width))
                 : bit_extract_unsigned(word, width, i * width);
  }
  return n;
}

/// Pack codes into bytes, element i at bit offset (i*width) mod 8 of byte
/// i*width/8. Accepts codes valid under either the unsigned or the
/// two's-complement reading of the width. Width 8 is the identity.
inline std::vector<std::uint8_t> pack_values(std::span<const std::int8_t> values, int width) {
  if (width != 2 && width != 4 && width != 8)
    throw std::invalid_argument("pack width must be 2, 4 or 8");
  if (width == 8) {
    std::vector<std::uint8_t> out(values.size());
    for (std::size_t i = 0; i < values.size(); ++i)
      out[i] = static_cast<std::uint8_t>(values[i]);
    return out;
  }
  const int lo = -(1 << (width - 1));
  const int hi = (1 << width) - 1;
  std::vector<std::uint8_t> out((values.size() * width + 7) / 8, 0);
  for (std::size_t i = 0; i < values.size(); ++i) {
    const int v = values[i];
    if (v < lo || v > hi)
      throw std::out_of_range("code does not fit the pack width");
    out[i * width / 8] = bit_insert(out[i * width / 8],
                                    static_cast<std::uint8_t>(v), width,
                                    static_cast<int>(i * width % 8));
  }
  return out;
}

/// Unpack n sub-byte codes from a packed byte run, 32-bit words first and
/// a per-byte tail after. Width 8 copies bytes through unchanged.
inline void unpack_run(const std::uint8_t* src, int n, int width, bool sign_extend,
                       std::uint8_t* dst) {
  if (width == 8) {
    for (int i = 0; i < n; ++i)
      dst[i] = src[i];
    return;
  }
  const int per_word = operands_per_word(width);
  const int per_byte = 8 / width;
  const int n_bytes = (n * width + 7) / 8;
  int k = 0;
  int byte = 0;
  while (n - k >= per_word && n_bytes - byte >= 4) {
    const std::uint32_t word = static_cast<std::uint32_t>(src[byte]) |
                               static_cast<std::uint32_t>(src[byte + 1]) << 8 |
                               static_cast<std::uint32_t>(src[byte + 2]) << 16 |
                               static_cast<std::uint32_t>(src[byte + 3]) << 24;
    unpack_word(word, width, sign_extend, dst + k);
    k += per_word;
    byte += 4;
  }
  for (; byte < n_bytes; ++byte) {
    for (int j = 0; j < per_byte && k < n; ++j, ++k) {
      dst[k] = sign_extend
                   ? static_cast<std::uint8_t>(bit_extract(src[byte], width, j * width))
                   : bit_extract_unsigned(src[byte], width, j * width);
    }
  }
}

}  // namespace mixprec
