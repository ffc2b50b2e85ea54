#include <doctest.h>

#include <numeric>
#include <stdexcept>
#include <vector>

#include "mixprec/gen.hpp"
#include "mixprec/kernels.hpp"
#include "mixprec/oracle.hpp"

using namespace mixprec;

TEST_CASE("partition_rows balances known splits") {
  const auto even = partition_rows(16, 8);
  REQUIRE(even.size() == 8);
  for (int i = 0; i < 8; ++i) {
    CHECK(even[static_cast<std::size_t>(i)].size() == 2);
    CHECK(even[static_cast<std::size_t>(i)].begin == 2 * i);
  }

  const auto uneven = partition_rows(7, 3);
  REQUIRE(uneven.size() == 3);
  CHECK(uneven[0].size() == 3);
  CHECK(uneven[1].size() == 2);
  CHECK(uneven[2].size() == 2);

  const auto more_workers = partition_rows(3, 8);
  CHECK(more_workers.size() == 3);
}

TEST_CASE("partition_rows covers [0, out_h) disjointly with near-equal sizes") {
  for (int out_h = 1; out_h <= 40; ++out_h) {
    for (int workers = 1; workers <= 12; ++workers) {
      const auto ranges = partition_rows(out_h, workers);
      int expected_begin = 0;
      int min_size = out_h, max_size = 0;
      for (const RowRange& r : ranges) {
        CHECK(r.begin == expected_begin);
        CHECK(r.size() >= 1);
        expected_begin = r.end;
        min_size = r.size() < min_size ? r.size() : min_size;
        max_size = r.size() > max_size ? r.size() : max_size;
      }
      CHECK(expected_begin == out_h);
      CHECK(max_size - min_size <= 1);
    }
  }
  CHECK_THROWS_AS(partition_rows(0, 1), std::invalid_argument);
  CHECK_THROWS_AS(partition_rows(4, 0), std::invalid_argument);
}

TEST_CASE("im2col zero-pads out-of-image taps") {
  LayerConfig cfg;
  cfg.in_h = 4;
  cfg.in_w = 4;
  cfg.in_c = 3;
  cfg.out_c = 4;
  cfg.kh = 3;
  cfg.kw = 3;
  cfg.pad = 1;
  PackedTensor input(4, 4, 3, 4, false);
  for (int y = 0; y < 4; ++y)
    for (int x = 0; x < 4; ++x)
      for (int c = 0; c < 3; ++c)
        input.set(y, x, c, 1 + ((y + x + c) % 15));  // never zero

  std::vector<std::uint8_t> buf(static_cast<std::size_t>(cfg.im2col_len()));
  im2col(input, cfg, 0, 0, buf);
  // Corner receptive field: top row and left column of the window fall
  // outside, leaving 5 of the 9 taps (x in_c channels each) at zero.
  int zeros = 0;
  for (const auto v : buf) zeros += v == 0;
  CHECK(zeros == 5 * cfg.in_c);

  // Interior pixel: no padding anywhere.
  im2col(input, cfg, 1, 2, buf);
  for (const auto v : buf) CHECK(v != 0);
}

TEST_CASE("im2col lays out the receptive field in kernel-row, kernel-col, channel order") {
  LayerConfig cfg;
  cfg.in_h = 3;
  cfg.in_w = 4;
  cfg.in_c = 2;
  cfg.out_c = 4;
  cfg.kh = 2;
  cfg.kw = 2;
  PackedTensor input(3, 4, 2, 8, false);
  for (int y = 0; y < 3; ++y)
    for (int x = 0; x < 4; ++x)
      for (int c = 0; c < 2; ++c)
        input.set(y, x, c, 32 * y + 8 * x + c);

  std::vector<std::uint8_t> buf(static_cast<std::size_t>(cfg.im2col_len()));
  im2col(input, cfg, 1, 2, buf);
  std::size_t i = 0;
  for (int ky = 0; ky < 2; ++ky)
    for (int kx = 0; kx < 2; ++kx)
      for (int c = 0; c < 2; ++c)
        CHECK(buf[i++] == 32 * (1 + ky) + 8 * (2 + kx) + c);
}

TEST_CASE("im2col rejects a wrong-sized buffer") {
  LayerConfig cfg;
  cfg.in_h = 2;
  cfg.in_w = 2;
  cfg.in_c = 2;
  cfg.out_c = 4;
  cfg.kh = 1;
  cfg.kw = 1;
  const PackedTensor input(2, 2, 2, 8, false);
  std::vector<std::uint8_t> buf(3);
  CHECK_THROWS_AS(im2col(input, cfg, 0, 0, buf), std::invalid_argument);
}

TEST_CASE("matmul_tile equals the oracle accumulators") {
  for (int prec_in : {2, 4, 8}) {
    for (int prec_w : {2, 4, 8}) {
      LayerConfig cfg;
      cfg.in_h = 5;
      cfg.in_w = 6;
      cfg.in_c = 7;  // odd channel count exercises padded filter tails
      cfg.out_c = 8;
      cfg.kh = 3;
      cfg.kw = 3;
      cfg.pad = 1;
      cfg.prec_in = prec_in;
      cfg.prec_w = prec_w;
      cfg.prec_out = 8;
      const gen::GeneratedLayer layer = gen::generate_layer(cfg, 0xACCu + prec_in * 8 + prec_w);
      const auto in = oracle::unpack_tensor(layer.input);
      const auto wt = oracle::unpack_weights(layer.weights);

      Im2colBuffer bufs(cfg.im2col_len());
      for (int oy = 0; oy < cfg.out_h(); ++oy) {
        for (int ox = 0; ox + 1 < cfg.out_w(); ox += 2) {
          im2col(layer.input, cfg, oy, ox, bufs.a);
          im2col(layer.input, cfg, oy, ox + 1, bufs.b);
          for (int oc = 0; oc + 3 < cfg.out_c; oc += 4) {
            const TileAcc acc = matmul_tile(layer.weights, bufs, cfg, oc);
            for (int f = 0; f < 4; ++f) {
              CHECK(acc.phi[f][0] == oracle::conv_accumulate(in, wt, cfg, oy, ox, oc + f));
              CHECK(acc.phi[f][1] == oracle::conv_accumulate(in, wt, cfg, oy, ox + 1, oc + f));
            }
          }
          CHECK(matmul_single(layer.weights, bufs.a, 5) ==
                oracle::conv_accumulate(in, wt, cfg, oy, ox, 5));
        }
      }
    }
  }
}

TEST_CASE("conv_mixed equals conv_reference on assorted geometries") {
  LayerConfig base;
  base.in_h = 6;
  base.in_w = 5;
  base.in_c = 3;
  base.out_c = 6;  // not a multiple of 4: exercises the leftover path
  base.kh = 3;
  base.kw = 3;
  base.pad = 1;
  std::uint64_t seed = 0xC0DE;
  for (int prec_out : {2, 4, 8}) {
    LayerConfig cfg = base;
    cfg.prec_in = 4;
    cfg.prec_w = prec_out;  // sweep a diagonal of the permutation cube
    cfg.prec_out = prec_out;
    const gen::GeneratedLayer layer = gen::generate_layer(cfg, ++seed);
    const PackedTensor want = oracle::conv_reference(layer.input, layer.weights, cfg, layer.quant);
    const PackedTensor got = conv_mixed(layer.input, layer.weights, cfg, layer.quant, 3);
    CHECK(!oracle::compare_tensors(want, got).has_value());
  }
}

TEST_CASE("conv_mixed output is identical for any worker count") {
  LayerConfig cfg;
  cfg.in_h = 9;
  cfg.in_w = 7;
  cfg.in_c = 5;
  cfg.out_c = 12;
  cfg.kh = 3;
  cfg.kw = 3;
  cfg.stride = 2;
  cfg.pad = 1;
  cfg.prec_in = 4;
  cfg.prec_w = 2;
  cfg.prec_out = 4;
  const gen::GeneratedLayer layer = gen::generate_layer(cfg, 99);
  const PackedTensor one = conv_mixed(layer.input, layer.weights, cfg, layer.quant, 1);
  for (int workers : {2, 3, 4, 8, 16}) {
    const PackedTensor many = conv_mixed(layer.input, layer.weights, cfg, layer.quant, workers);
    CHECK(one == many);
  }
}

TEST_CASE("conv_mixed validates tensor/config agreement") {
  LayerConfig cfg;
  cfg.in_h = 4;
  cfg.in_w = 4;
  cfg.in_c = 2;
  cfg.out_c = 4;
  cfg.kh = 1;
  cfg.kw = 1;
  const gen::GeneratedLayer layer = gen::generate_layer(cfg, 5);

  LayerConfig wrong = cfg;
  wrong.in_c = 3;
  CHECK_THROWS_AS(conv_mixed(layer.input, layer.weights, wrong, layer.quant, 1),
                  std::invalid_argument);
  const PackedTensor short_input(4, 3, 2, 8, false);
  CHECK_THROWS_AS(conv_mixed(short_input, layer.weights, cfg, layer.quant, 1),
                  std::invalid_argument);
}
