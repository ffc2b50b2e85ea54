// Wall-clock comparison of the serial reference convolution against the
// tiled kernel at several worker counts.

#include <chrono>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "mixprec/config.hpp"
#include "mixprec/gen.hpp"
#include "mixprec/kernels.hpp"
#include "mixprec/oracle.hpp"

namespace {

using namespace mixprec;

template <class F>
double time_ms(F&& fn, int repeat) {
  double best = 0.0;
  for (int i = 0; i < repeat; ++i) {
    const auto t0 = std::chrono::steady_clock::now();
    fn();
    const auto t1 = std::chrono::steady_clock::now();
    const double ms = std::chrono::duration<double, std::milli>(t1 - t0).count();
    if (i == 0 || ms < best) best = ms;
  }
  return best;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"reference-vs-kernel timing"};
  std::string layer_path;
  std::uint64_t seed = 1;
  int repeat = 3;
  std::vector<int> worker_counts{1, 2, 4, 8};
  app.add_option("--layer", layer_path, "layer config file")->required();
  app.add_option("--seed", seed, "random seed");
  app.add_option("--repeat", repeat, "timed repetitions, best-of");
  app.add_option("--workers", worker_counts, "worker counts to time");
  CLI11_PARSE(app, argc, argv);

  try {
    const LayerConfig cfg = cfg::load_layer_config(layer_path);
    const gen::GeneratedLayer layer = gen::generate_layer(cfg, seed);

    PackedTensor ref_out;
    const double ref_ms = time_ms(
        [&] { ref_out = oracle::conv_reference(layer.input, layer.weights, cfg, layer.quant); },
        repeat);

    std::cout << "layer " << cfg.in_h << "x" << cfg.in_w << "x" << cfg.in_c << " -> " << cfg.out_c
              << " @ " << cfg.prec_in << "," << cfg.prec_w << "," << cfg.prec_out << "-bit, "
              << cfg.total_macs() << " MACs\n\n";
    std::cout << std::left << std::setw(26) << "implementation" << std::setw(12) << "best ms"
              << std::setw(12) << "vs ref" << "bit-exact\n";
    std::cout << std::left << std::setw(26) << "reference (serial)" << std::setw(12) << std::fixed
              << std::setprecision(3) << ref_ms << std::setw(12) << "1.00x" << "-\n";

    bool all_exact = true;
    for (int workers : worker_counts) {
      PackedTensor out;
      const double ms = time_ms(
          [&] { out = conv_mixed(layer.input, layer.weights, cfg, layer.quant, workers); },
          repeat);
      const bool exact = !oracle::compare_tensors(ref_out, out).has_value();
      all_exact = all_exact && exact;
      std::ostringstream name, ratio;
      name << "kernel (" << workers << " worker" << (workers == 1 ? "" : "s") << ")";
      ratio << std::setprecision(2) << std::fixed << ref_ms / ms << "x";
      std::cout << std::left << std::setw(26) << name.str() << std::setw(12) << std::setprecision(3)
                << ms << std::setw(12) << ratio.str() << (exact ? "yes" : "NO") << "\n";
    }
    return all_exact ? 0 : 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}
