#include "mixprec/kernels.hpp"

#include <cstring>
#include <sstream>
#include <stdexcept>

#include "mixprec/bitpack.hpp"

namespace mixprec {

namespace {

std::uint32_t load_le32(const std::uint8_t* p) {
  return static_cast<std::uint32_t>(p[0]) | static_cast<std::uint32_t>(p[1]) << 8 |
         static_cast<std::uint32_t>(p[2]) << 16 | static_cast<std::uint32_t>(p[3]) << 24;
}

// MAC one filter's packed byte run against two unpacked activation buffers:
// word loads, on-the-fly sign extraction, per-byte tail.
void dot2(std::span<const std::uint8_t> filter, int width, const std::uint8_t* a,
          const std::uint8_t* b, int len, std::int32_t& acc_a, std::int32_t& acc_b) {
  if (width == 8) {
    for (int k = 0; k < len; ++k) {
      const std::int32_t wv = static_cast<std::int8_t>(filter[k]);
      acc_a += wv * a[k];
      acc_b += wv * b[k];
    }
    return;
  }
  const int per_word = operands_per_word(width);
  const int n_bytes = (len * width + 7) / 8;
  std::uint8_t lane[16];
  int k = 0;
  int byte = 0;
  while (len - k >= per_word && n_bytes - byte >= 4) {
    unpack_word(load_le32(filter.data() + byte), width, true, lane);
    for (int j = 0; j < per_word; ++j, ++k) {
      const std::int32_t wv = static_cast<std::int8_t>(lane[j]);
      acc_a += wv * a[k];
      acc_b += wv * b[k];
    }
    byte += 4;
  }
  const int per_byte = 8 / width;
  for (; byte < n_bytes; ++byte) {
    for (int j = 0; j < per_byte && k < len; ++j, ++k) {
      const std::int32_t wv = bit_extract(filter[byte], width, j * width);
      acc_a += wv * a[k];
      acc_b += wv * b[k];
    }
  }
}

std::int32_t dot1(std::span<const std::uint8_t> filter, int width, const std::uint8_t* a,
                  int len) {
  std::int32_t acc = 0;
  if (width == 8) {
    for (int k = 0; k < len; ++k)
      acc += static_cast<std::int32_t>(static_cast<std::int8_t>(filter[k])) * a[k];
    return acc;
  }
  const int per_byte = 8 / width;
  int k = 0;
  for (int byte = 0; k < len; ++byte) {
    for (int j = 0; j < per_byte && k < len; ++j, ++k)
      acc += static_cast<std::int32_t>(bit_extract(filter[byte], width, j * width)) * a[k];
  }
  return acc;
}

std::uint8_t out_code(const LayerQuant& q, std::int32_t phi, int oc) {
  return q.uses_thresholds() ? q.thresholds().quantize(phi, oc)
                             : requant_apply(phi, q.requant(oc));
}

// Whole-row worker: every (oy, ox) pair of columns shares one im2col fill,
// every 4-filter band shares both buffers.
void conv_rows(const PackedTensor& input, const WeightTensor& weights, const LayerConfig& cfg,
               const LayerQuant& q, PackedTensor& out, RowRange rows) {
  const int out_w = cfg.out_w();
  const int out_c = cfg.out_c;
  Im2colBuffer bufs(cfg.im2col_len());
  for (int oy = rows.begin; oy < rows.end; ++oy) {
    int ox = 0;
    for (; ox + 1 < out_w; ox += 2) {
      im2col(input, cfg, oy, ox, bufs.a);
      im2col(input, cfg, oy, ox + 1, bufs.b);
      int oc = 0;
      for (; oc + 3 < out_c; oc += 4) {
        const TileAcc acc = matmul_tile(weights, bufs, cfg, oc);
        qntpack(acc, out, q, oy, ox, oc);
      }
      for (; oc < out_c; ++oc) {
        qntpack_single(matmul_single(weights, bufs.a, oc), out, q, oy, ox, oc);
        qntpack_single(matmul_single(weights, bufs.b, oc), out, q, oy, ox + 1, oc);
      }
    }
    if (ox < out_w) {
      im2col(input, cfg, oy, ox, bufs.a);
      for (int oc = 0; oc < out_c; ++oc)
        qntpack_single(matmul_single(weights, bufs.a, oc), out, q, oy, ox, oc);
    }
  }
}

}  // namespace

std::vector<RowRange> partition_rows(int out_h, int workers) {
  if (out_h < 1)
    throw std::invalid_argument("partition needs a positive row count");
  if (workers < 1)
    throw std::invalid_argument("partition needs a positive worker count");
  const int n = workers < out_h ? workers : out_h;
  std::vector<RowRange> ranges(static_cast<std::size_t>(n));
  const int base = out_h / n;
  const int extra = out_h % n;
  int row = 0;
  for (int i = 0; i < n; ++i) {
    const int size = base + (i < extra ? 1 : 0);
    ranges[static_cast<std::size_t>(i)] = RowRange{row, row + size};
    row += size;
  }
  return ranges;
}

void im2col(const PackedTensor& input, const LayerConfig& cfg, int oy, int ox,
            std::span<std::uint8_t> buf) {
  if (static_cast<int>(buf.size()) != cfg.im2col_len())
    throw std::invalid_argument("im2col buffer length does not match the layer");
  const int iy0 = oy * cfg.stride - cfg.pad;
  const int ix0 = ox * cfg.stride - cfg.pad;
  std::uint8_t* dst = buf.data();
  for (int ky = 0; ky < cfg.kh; ++ky) {
    const int iy = iy0 + ky;
    for (int kx = 0; kx < cfg.kw; ++kx, dst += cfg.in_c) {
      const int ix = ix0 + kx;
      if (iy < 0 || iy >= cfg.in_h || ix < 0 || ix >= cfg.in_w) {
        std::memset(dst, 0, static_cast<std::size_t>(cfg.in_c));
        continue;
      }
      unpack_run(input.pixel_ptr(iy, ix), cfg.in_c, input.n_bits(), false, dst);
    }
  }
}

TileAcc matmul_tile(const WeightTensor& weights, const Im2colBuffer& bufs, const LayerConfig& cfg,
                    int oc_base) {
  TileAcc acc;
  const int len = cfg.im2col_len();
  for (int f = 0; f < 4; ++f) {
    dot2(weights.filter_bytes(oc_base + f), weights.n_bits(), bufs.a.data(), bufs.b.data(), len,
         acc.phi[f][0], acc.phi[f][1]);
  }
  return acc;
}

std::int32_t matmul_single(const WeightTensor& weights, std::span<const std::uint8_t> buf,
                           int oc) {
  return dot1(weights.filter_bytes(oc), weights.n_bits(), buf.data(),
              static_cast<int>(buf.size()));
}

void qntpack(const TileAcc& acc, PackedTensor& out, const LayerQuant& q, int oy, int ox,
             int oc_base) {
  for (int f = 0; f < 4; ++f) {
    out.set(oy, ox, oc_base + f, out_code(q, acc.phi[f][0], oc_base + f));
    out.set(oy, ox + 1, oc_base + f, out_code(q, acc.phi[f][1], oc_base + f));
  }
}

void qntpack_single(std::int32_t phi, PackedTensor& out, const LayerQuant& q, int oy, int ox,
                    int oc) {
  out.set(oy, ox, oc, out_code(q, phi, oc));
}

PackedTensor conv_mixed(const PackedTensor& input, const WeightTensor& weights,
                        const LayerConfig& cfg, const LayerQuant& q, int workers) {
  cfg.validate();
  if (input.h() != cfg.in_h || input.w() != cfg.in_w || input.c() != cfg.in_c ||
      input.n_bits() != cfg.prec_in)
    throw std::invalid_argument("input tensor does not match the layer config");
  if (weights.out_c() != cfg.out_c || weights.kh() != cfg.kh || weights.kw() != cfg.kw ||
      weights.in_c() != cfg.in_c || weights.n_bits() != cfg.prec_w)
    throw std::invalid_argument("weight tensor does not match the layer config");
  if (q.output().n_bits != cfg.prec_out)
    throw std::invalid_argument("output quantization does not match the layer config");

  PackedTensor out(cfg.out_h(), cfg.out_w(), cfg.out_c, cfg.prec_out, false, q.output());
  const std::vector<RowRange> ranges = partition_rows(cfg.out_h(), workers);
  const int n = static_cast<int>(ranges.size());
#ifdef _OPENMP
#pragma omp parallel for num_threads(n) schedule(static, 1)
#endif
  for (int r = 0; r < n; ++r)
    conv_rows(input, weights, cfg, q, out, ranges[static_cast<std::size_t>(r)]);
  return out;
}

}  // namespace mixprec
