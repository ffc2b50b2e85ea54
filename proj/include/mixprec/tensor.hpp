#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "mixprec/quant.hpp"

namespace mixprec {

/// HWC tensor of 2/4/8-bit codes packed into bytes. The channel run of
/// every pixel is padded to a whole byte, so each pixel owns
/// ceil(c * n_bits / 8) bytes and pixels never share storage.
class PackedTensor {
 public:
  PackedTensor() = default;
  PackedTensor(int h, int w, int c, int n_bits, bool is_signed, QuantParams quant = {});

  int h() const { return h_; }
  int w() const { return w_; }
  int c() const { return c_; }
  int n_bits() const { return n_bits_; }
  bool is_signed() const { return signed_; }
  int pixel_stride() const { return stride_; }
  std::size_t size_bytes() const { return data_.size(); }

  const QuantParams& quant() const { return quant_; }
  QuantParams& quant() { return quant_; }

  std::span<const std::uint8_t> data() const { return data_; }
  std::span<std::uint8_t> data() { return data_; }
  const std::uint8_t* pixel_ptr(int y, int x) const;

  /// (byte index, bit offset) of a logical element.
  std::pair<std::size_t, int> element_index(int y, int x, int ch) const;

  /// Code at (y, x, ch), sign-extended when the tensor is signed.
  int get(int y, int x, int ch) const;
  /// Store a code; it must be representable in n_bits under the tensor's
  /// signedness.
  void set(int y, int x, int ch, int code);

  bool operator==(const PackedTensor& other) const = default;

  /// PQT1 binary format: magic "PQT1"; little-endian u32 n_bits, signed,
  /// h, w, c; little-endian f64 eps, alpha; then the packed payload.
  void write_file(const std::string& path) const;
  static PackedTensor read_file(const std::string& path);

 private:
  void check_index(int y, int x, int ch) const;

  int h_ = 0, w_ = 0, c_ = 0;
  int n_bits_ = 8;
  bool signed_ = false;
  int stride_ = 0;
  QuantParams quant_;
  std::vector<std::uint8_t> data_;
};

/// Convolution filters as a packed tensor: logical shape
/// (out_c, kh, kw, in_c), each filter flattened to kh*kw*in_c codes
/// stored contiguously, matching the im2col buffer order.
class WeightTensor {
 public:
  WeightTensor() = default;
  WeightTensor(int out_c, int kh, int kw, int in_c, int n_bits, QuantParams quant = {});
  /// Re-attach filter geometry to a stored tensor (shape out_c x 1 x kh*kw*in_c).
  static WeightTensor from_storage(PackedTensor storage, int kh, int kw, int in_c);

  int out_c() const { return storage_.h(); }
  int kh() const { return kh_; }
  int kw() const { return kw_; }
  int in_c() const { return in_c_; }
  int n_bits() const { return storage_.n_bits(); }
  int filter_len() const { return kh_ * kw_ * in_c_; }

  int get(int oc, int ky, int kx, int ic) const;
  void set(int oc, int ky, int kx, int ic, int code);

  /// Packed bytes of one filter.
  std::span<const std::uint8_t> filter_bytes(int oc) const;

  const PackedTensor& storage() const { return storage_; }
  PackedTensor& storage() { return storage_; }

 private:
  PackedTensor storage_;
  int kh_ = 0, kw_ = 0, in_c_ = 0;
};

}  // namespace mixprec
