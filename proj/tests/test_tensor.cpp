#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "mixprec/gen.hpp"
#include "mixprec/tensor.hpp"

using namespace mixprec;

namespace {

std::filesystem::path temp_file(const std::string& name) {
  return std::filesystem::temp_directory_path() / name;
}

std::vector<std::uint8_t> slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  REQUIRE(in);
  return std::vector<std::uint8_t>(std::istreambuf_iterator<char>(in),
                                   std::istreambuf_iterator<char>());
}

void spit(const std::filesystem::path& p, const std::vector<std::uint8_t>& bytes) {
  std::ofstream out(p, std::ios::binary);
  REQUIRE(out);
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
}

}  // namespace

TEST_CASE("element addressing and pixel stride") {
  const PackedTensor t(1, 2, 3, 4, false);
  CHECK(t.pixel_stride() == 2);  // ceil(3 * 4 / 8)
  const auto [byte, bit] = t.element_index(0, 1, 2);
  CHECK(byte == 3);
  CHECK(bit == 0);
  CHECK(t.size_bytes() == 4);

  const PackedTensor two_bit(2, 2, 5, 2, false);
  CHECK(two_bit.pixel_stride() == 2);  // ceil(5 * 2 / 8)
  const auto [b2, o2] = two_bit.element_index(1, 1, 4);
  CHECK(b2 == 3 * 2 + 1);
  CHECK(o2 == 0);

  const PackedTensor bytes(2, 2, 3, 8, false);
  CHECK(bytes.pixel_stride() == 3);
  const auto [b3, o3] = bytes.element_index(1, 0, 2);
  CHECK(b3 == 2 * 3 + 2);
  CHECK(o3 == 0);
}

TEST_CASE("get/set roundtrip at all widths") {
  for (int n_bits : {2, 4, 8}) {
    for (bool is_signed : {false, true}) {
      PackedTensor t(3, 4, 5, n_bits, is_signed);
      const int lo = is_signed ? -(1 << (n_bits - 1)) : 0;
      const int hi = is_signed ? (1 << (n_bits - 1)) - 1 : (1 << n_bits) - 1;
      int v = lo;
      for (int y = 0; y < 3; ++y)
        for (int x = 0; x < 4; ++x)
          for (int c = 0; c < 5; ++c) {
            t.set(y, x, c, v);
            if (++v > hi) v = lo;
          }
      v = lo;
      for (int y = 0; y < 3; ++y)
        for (int x = 0; x < 4; ++x)
          for (int c = 0; c < 5; ++c) {
            CHECK(t.get(y, x, c) == v);
            if (++v > hi) v = lo;
          }
      CHECK_THROWS_AS(t.set(0, 0, 0, hi + 1), std::out_of_range);
      CHECK_THROWS_AS(t.set(0, 0, 0, lo - 1), std::out_of_range);
      CHECK_THROWS_AS(t.get(3, 0, 0), std::out_of_range);
      CHECK_THROWS_AS(t.get(0, 4, 0), std::out_of_range);
      CHECK_THROWS_AS(t.get(0, 0, 5), std::out_of_range);
    }
  }
}

TEST_CASE("pixels never share bytes") {
  PackedTensor t(1, 3, 3, 2, false);  // 3 channels x 2 bits = 6 bits, padded to 1 byte
  CHECK(t.pixel_stride() == 1);
  t.set(0, 1, 0, 3);
  CHECK(t.get(0, 0, 0) == 0);
  CHECK(t.get(0, 2, 0) == 0);
  CHECK(t.data()[1] == 0x03);
}

TEST_CASE("PQT1 write/read roundtrip") {
  gen::SplitMix64 rng(0xD15C);
  for (int n_bits : {2, 4, 8}) {
    QuantParams q = n_bits == 8 ? QuantParams::weight(8, 0.125, -2.0)
                                : QuantParams::feature_map(n_bits, 0.25);
    PackedTensor t(4, 3, 6, n_bits, q.is_signed, q);
    for (int y = 0; y < 4; ++y)
      for (int x = 0; x < 3; ++x)
        for (int c = 0; c < 6; ++c)
          t.set(y, x, c, q.code_min() + static_cast<int>(rng.below(
                             static_cast<std::uint32_t>(q.code_max() - q.code_min() + 1))));

    const auto path = temp_file("mixprec_roundtrip.pqt");
    t.write_file(path.string());
    CHECK(std::filesystem::file_size(path) == 40 + t.size_bytes());
    const PackedTensor back = PackedTensor::read_file(path.string());
    CHECK(back.h() == t.h());
    CHECK(back.w() == t.w());
    CHECK(back.c() == t.c());
    CHECK(back.n_bits() == t.n_bits());
    CHECK(back.is_signed() == t.is_signed());
    CHECK(back.quant().eps == t.quant().eps);
    CHECK(back.quant().alpha == t.quant().alpha);
    CHECK(std::equal(back.data().begin(), back.data().end(), t.data().begin(), t.data().end()));
    std::filesystem::remove(path);
  }
}

TEST_CASE("PQT1 rejects malformed files with byte offsets") {
  PackedTensor t(2, 2, 2, 8, false);
  const auto path = temp_file("mixprec_malformed.pqt");
  t.write_file(path.string());
  const std::vector<std::uint8_t> good = slurp(path);

  auto expect_error = [&](std::vector<std::uint8_t> bytes, const char* needle) {
    spit(path, bytes);
    try {
      PackedTensor::read_file(path.string());
      FAIL_CHECK("expected a format error mentioning '" << needle << "'");
    } catch (const std::runtime_error& e) {
      CHECK(std::string(e.what()).find(needle) != std::string::npos);
    }
  };

  // Bad magic at byte 0.
  auto bad_magic = good;
  bad_magic[0] = 'X';
  expect_error(bad_magic, "byte 0");

  // Header cut short.
  expect_error(std::vector<std::uint8_t>(good.begin(), good.begin() + 17), "header");

  // Payload cut short: error names the offset where data ran out (the
  // 8-byte payload of a 2x2x2 8-bit tensor ends early at byte 45).
  expect_error(std::vector<std::uint8_t>(good.begin(), good.end() - 3), "45");

  // Trailing garbage.
  auto trailing = good;
  trailing.push_back(0);
  expect_error(trailing, "trailing");

  // Unsupported element width.
  auto bad_bits = good;
  bad_bits[4] = 3;
  expect_error(bad_bits, "n_bits");

  std::filesystem::remove(path);
}

TEST_CASE("weight tensor indexing matches its flat storage") {
  WeightTensor w(3, 2, 2, 4, 4);
  CHECK(w.filter_len() == 16);
  CHECK(w.storage().h() == 3);
  CHECK(w.storage().w() == 1);
  CHECK(w.storage().c() == 16);
  int code = -8;
  for (int oc = 0; oc < 3; ++oc)
    for (int ky = 0; ky < 2; ++ky)
      for (int kx = 0; kx < 2; ++kx)
        for (int ic = 0; ic < 4; ++ic) {
          w.set(oc, ky, kx, ic, code);
          if (++code > 7) code = -8;
        }
  code = -8;
  for (int oc = 0; oc < 3; ++oc)
    for (int ky = 0; ky < 2; ++ky)
      for (int kx = 0; kx < 2; ++kx)
        for (int ic = 0; ic < 4; ++ic) {
          CHECK(w.get(oc, ky, kx, ic) == code);
          CHECK(w.storage().get(oc, 0, (ky * 2 + kx) * 4 + ic) == code);
          if (++code > 7) code = -8;
        }
  CHECK(w.filter_bytes(1).size() == w.storage().pixel_stride());
}

TEST_CASE("weight tensor storage re-attachment validates shape") {
  const PackedTensor good(4, 1, 18, 4, true);
  const WeightTensor w = WeightTensor::from_storage(good, 3, 3, 2);
  CHECK(w.out_c() == 4);
  CHECK(w.filter_len() == 18);

  const PackedTensor wide(4, 2, 9, 4, true);
  CHECK_THROWS_AS(WeightTensor::from_storage(wide, 3, 3, 1), std::invalid_argument);
  const PackedTensor short_c(4, 1, 17, 4, true);
  CHECK_THROWS_AS(WeightTensor::from_storage(short_c, 3, 3, 2), std::invalid_argument);
  const PackedTensor unsigned_codes(4, 1, 18, 4, false);
  CHECK_THROWS_AS(WeightTensor::from_storage(unsigned_codes, 3, 3, 2), std::invalid_argument);
}
