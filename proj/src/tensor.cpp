#include "mixprec/tensor.hpp"

#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "mixprec/bitpack.hpp"

namespace mixprec {

namespace {

void require(bool ok, const std::string& what) {
  if (!ok) throw std::invalid_argument(what);
}

std::runtime_error format_error(const std::string& path, const std::string& what,
                                std::size_t offset) {
  std::ostringstream os;
  os << "tensor file " << path << ": " << what << " at byte " << offset;
  return std::runtime_error(os.str());
}

void put_u32(std::ostream& os, std::uint32_t v) {
  std::uint8_t b[4] = {static_cast<std::uint8_t>(v), static_cast<std::uint8_t>(v >> 8),
                       static_cast<std::uint8_t>(v >> 16), static_cast<std::uint8_t>(v >> 24)};
  os.write(reinterpret_cast<const char*>(b), 4);
}

void put_f64(std::ostream& os, double v) {
  std::uint64_t u;
  std::memcpy(&u, &v, 8);
  std::uint8_t b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<std::uint8_t>(u >> (8 * i));
  os.write(reinterpret_cast<const char*>(b), 8);
}

std::uint32_t get_u32(std::istream& is, const std::string& path, std::size_t offset) {
  std::uint8_t b[4];
  if (!is.read(reinterpret_cast<char*>(b), 4)) throw format_error(path, "truncated header", offset);
  return static_cast<std::uint32_t>(b[0]) | static_cast<std::uint32_t>(b[1]) << 8 |
         static_cast<std::uint32_t>(b[2]) << 16 | static_cast<std::uint32_t>(b[3]) << 24;
}

double get_f64(std::istream& is, const std::string& path, std::size_t offset) {
  std::uint8_t b[8];
  if (!is.read(reinterpret_cast<char*>(b), 8)) throw format_error(path, "truncated header", offset);
  std::uint64_t u = 0;
  for (int i = 0; i < 8; ++i) u |= static_cast<std::uint64_t>(b[i]) << (8 * i);
  double v;
  std::memcpy(&v, &u, 8);
  return v;
}

constexpr char kMagic[4] = {'P', 'Q', 'T', '1'};
constexpr std::size_t kHeaderBytes = 4 + 5 * 4 + 2 * 8;

}  // namespace

PackedTensor::PackedTensor(int h, int w, int c, int n_bits, bool is_signed, QuantParams quant)
    : h_(h), w_(w), c_(c), n_bits_(n_bits), signed_(is_signed), quant_(std::move(quant)) {
  require(h > 0 && w > 0 && c > 0, "tensor dimensions must be positive");
  require(n_bits == 2 || n_bits == 4 || n_bits == 8, "tensor n_bits must be 2, 4 or 8");
  stride_ = (c_ * n_bits_ + 7) / 8;
  data_.assign(static_cast<std::size_t>(h_) * w_ * stride_, 0);
}

const std::uint8_t* PackedTensor::pixel_ptr(int y, int x) const {
  return data_.data() + (static_cast<std::size_t>(y) * w_ + x) * stride_;
}

void PackedTensor::check_index(int y, int x, int ch) const {
  if (y < 0 || y >= h_ || x < 0 || x >= w_ || ch < 0 || ch >= c_) {
    std::ostringstream os;
    os << "tensor index (" << y << "," << x << "," << ch << ") outside " << h_ << "x" << w_ << "x"
       << c_;
    throw std::out_of_range(os.str());
  }
}

std::pair<std::size_t, int> PackedTensor::element_index(int y, int x, int ch) const {
  check_index(y, x, ch);
  const std::size_t byte =
      (static_cast<std::size_t>(y) * w_ + x) * stride_ + static_cast<std::size_t>(ch) * n_bits_ / 8;
  return {byte, ch * n_bits_ % 8};
}

int PackedTensor::get(int y, int x, int ch) const {
  const auto [byte, bit] = element_index(y, x, ch);
  if (n_bits_ == 8)
    return signed_ ? static_cast<int>(static_cast<std::int8_t>(data_[byte]))
                   : static_cast<int>(data_[byte]);
  return signed_ ? static_cast<int>(bit_extract(data_[byte], n_bits_, bit))
                 : static_cast<int>(bit_extract_unsigned(data_[byte], n_bits_, bit));
}

void PackedTensor::set(int y, int x, int ch, int code) {
  const auto [byte, bit] = element_index(y, x, ch);
  const int lo = signed_ ? -(1 << (n_bits_ - 1)) : 0;
  const int hi = signed_ ? (1 << (n_bits_ - 1)) - 1 : (1 << n_bits_) - 1;
  if (code < lo || code > hi) {
    std::ostringstream os;
    os << "code " << code << " not representable in " << n_bits_ << "-bit "
       << (signed_ ? "signed" : "unsigned") << " tensor";
    throw std::out_of_range(os.str());
  }
  if (n_bits_ == 8)
    data_[byte] = static_cast<std::uint8_t>(code);
  else
    data_[byte] = bit_insert(data_[byte], static_cast<std::uint8_t>(code), n_bits_, bit);
}

void PackedTensor::write_file(const std::string& path) const {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot open " + path + " for writing");
  os.write(kMagic, 4);
  put_u32(os, static_cast<std::uint32_t>(n_bits_));
  put_u32(os, signed_ ? 1u : 0u);
  put_u32(os, static_cast<std::uint32_t>(h_));
  put_u32(os, static_cast<std::uint32_t>(w_));
  put_u32(os, static_cast<std::uint32_t>(c_));
  put_f64(os, quant_.eps);
  put_f64(os, quant_.alpha);
  os.write(reinterpret_cast<const char*>(data_.data()),
           static_cast<std::streamsize>(data_.size()));
  if (!os) throw std::runtime_error("write to " + path + " failed");
}

PackedTensor PackedTensor::read_file(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open " + path);

  char magic[4];
  if (!is.read(magic, 4)) throw format_error(path, "truncated header", 0);
  if (std::memcmp(magic, kMagic, 4) != 0) throw format_error(path, "bad magic", 0);

  const std::uint32_t n_bits = get_u32(is, path, 4);
  const std::uint32_t signed_flag = get_u32(is, path, 8);
  const std::uint32_t h = get_u32(is, path, 12);
  const std::uint32_t w = get_u32(is, path, 16);
  const std::uint32_t c = get_u32(is, path, 20);
  const double eps = get_f64(is, path, 24);
  const double alpha = get_f64(is, path, 32);

  if (n_bits != 2 && n_bits != 4 && n_bits != 8) throw format_error(path, "bad n_bits field", 4);
  if (signed_flag > 1) throw format_error(path, "bad signed field", 8);
  if (h == 0 || w == 0 || c == 0) throw format_error(path, "zero dimension", 12);
  if (h > (1u << 20) || w > (1u << 20) || c > (1u << 20))
    throw format_error(path, "implausible dimension", 12);

  QuantParams q;
  q.n_bits = static_cast<int>(n_bits);
  q.eps = eps;
  q.alpha = alpha;
  q.is_signed = signed_flag == 1;

  PackedTensor t(static_cast<int>(h), static_cast<int>(w), static_cast<int>(c),
                 static_cast<int>(n_bits), signed_flag == 1, q);
  if (!is.read(reinterpret_cast<char*>(t.data_.data()),
               static_cast<std::streamsize>(t.data_.size()))) {
    const std::size_t got = static_cast<std::size_t>(is.gcount());
    throw format_error(path, "truncated payload", kHeaderBytes + got);
  }
  char extra;
  if (is.read(&extra, 1))
    throw format_error(path, "trailing bytes after payload", kHeaderBytes + t.data_.size());
  return t;
}

WeightTensor::WeightTensor(int out_c, int kh, int kw, int in_c, int n_bits, QuantParams quant)
    : storage_(out_c, 1, kh * kw * in_c, n_bits, true, std::move(quant)),
      kh_(kh),
      kw_(kw),
      in_c_(in_c) {
  require(kh > 0 && kw > 0, "kernel dims must be positive");
}

WeightTensor WeightTensor::from_storage(PackedTensor storage, int kh, int kw, int in_c) {
  require(kh > 0 && kw > 0 && in_c > 0, "kernel dims must be positive");
  require(storage.w() == 1 && storage.c() == kh * kw * in_c,
          "stored weight shape does not match kh*kw*in_c");
  require(storage.is_signed(), "weights must be signed");
  WeightTensor w;
  w.storage_ = std::move(storage);
  w.kh_ = kh;
  w.kw_ = kw;
  w.in_c_ = in_c;
  return w;
}

int WeightTensor::get(int oc, int ky, int kx, int ic) const {
  return storage_.get(oc, 0, (ky * kw_ + kx) * in_c_ + ic);
}

void WeightTensor::set(int oc, int ky, int kx, int ic, int code) {
  storage_.set(oc, 0, (ky * kw_ + kx) * in_c_ + ic, code);
}

std::span<const std::uint8_t> WeightTensor::filter_bytes(int oc) const {
  return {storage_.pixel_ptr(oc, 0), static_cast<std::size_t>(storage_.pixel_stride())};
}

}  // namespace mixprec
