// mixprec-cli: verification, cost-model reports, tensor generation and
// one-off layer runs for the mixed-precision convolution kernels.

#include <algorithm>
#include <array>
#include <chrono>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "mixprec/config.hpp"
#include "mixprec/costmodel.hpp"
#include "mixprec/gen.hpp"
#include "mixprec/kernels.hpp"
#include "mixprec/oracle.hpp"
#include "mixprec/tensor.hpp"

namespace {

using namespace mixprec;

constexpr std::array<int, 3> kPrecisions{2, 4, 8};

struct PrecTriple {
  int in = 8, w = 8, out = 8;
};

// "in,w,out" with each element in {2,4,8}.
PrecTriple parse_prec(const std::string& text) {
  PrecTriple t;
  int* fields[3] = {&t.in, &t.w, &t.out};
  std::istringstream is(text);
  std::string item;
  int n = 0;
  while (std::getline(is, item, ',')) {
    if (n >= 3) break;
    try {
      *fields[n] = std::stoi(item);
    } catch (const std::exception&) {
      throw CLI::ValidationError("--prec", "'" + item + "' is not an integer");
    }
    if (*fields[n] != 2 && *fields[n] != 4 && *fields[n] != 8)
      throw CLI::ValidationError("--prec", "precisions must be 2, 4 or 8");
    ++n;
  }
  if (n != 3)
    throw CLI::ValidationError("--prec", "expected three comma-separated values: in,w,out");
  return t;
}

std::vector<PrecTriple> all_triples() {
  std::vector<PrecTriple> out;
  for (int i : kPrecisions)
    for (int w : kPrecisions)
      for (int o : kPrecisions)
        out.push_back(PrecTriple{i, w, o});
  return out;
}

LayerConfig with_prec(LayerConfig cfg, const PrecTriple& p) {
  cfg.prec_in = p.in;
  cfg.prec_w = p.w;
  cfg.prec_out = p.out;
  return cfg;
}

std::string prec_str(const LayerConfig& cfg) {
  std::ostringstream os;
  os << cfg.prec_in << "," << cfg.prec_w << "," << cfg.prec_out;
  return os.str();
}

std::ostream& open_sink(const std::string& path, std::ofstream& file) {
  if (path.empty()) return std::cout;
  file.open(path);
  if (!file) throw std::runtime_error(path + ": cannot open file for writing");
  return file;
}

int cmd_verify(const std::string& layer_path, const std::string& prec, bool all, int cores,
               std::uint64_t seed) {
  const LayerConfig base = cfg::load_layer_config(layer_path);
  std::vector<PrecTriple> triples;
  if (all)
    triples = all_triples();
  else if (!prec.empty())
    triples.push_back(parse_prec(prec));
  else
    triples.push_back(PrecTriple{base.prec_in, base.prec_w, base.prec_out});

  int failures = 0;
  for (const PrecTriple& t : triples) {
    const LayerConfig cfg = with_prec(base, t);
    const gen::GeneratedLayer layer = gen::generate_layer(cfg, seed);
    const PackedTensor expected = oracle::conv_reference(layer.input, layer.weights, cfg,
                                                         layer.quant);
    const PackedTensor actual = conv_mixed(layer.input, layer.weights, cfg, layer.quant, cores);
    const auto mismatch = oracle::compare_tensors(expected, actual);
    std::cout << "verify " << prec_str(cfg) << ": ";
    if (!mismatch) {
      std::cout << "pass\n";
    } else {
      ++failures;
      std::cout << "FAIL at (" << mismatch->y << ", " << mismatch->x << ", " << mismatch->ch
                << "): expected " << mismatch->expected << ", got " << mismatch->actual << "\n";
    }
  }
  std::cout << (static_cast<int>(triples.size()) - failures) << "/" << triples.size()
            << " permutations pass\n";
  return failures == 0 ? 0 : 1;
}

int cmd_bench_model(const std::string& layer_path, const std::string& prec, bool all, int cores,
                    bool csv, const std::string& out_path) {
  const LayerConfig base = cfg::load_layer_config(layer_path);
  std::vector<PrecTriple> triples;
  if (all)
    triples = all_triples();
  else if (!prec.empty())
    triples.push_back(parse_prec(prec));
  else
    triples.push_back(PrecTriple{base.prec_in, base.prec_w, base.prec_out});

  std::ofstream file;
  std::ostream& os = open_sink(out_path, file);

  // Schema is stable; keep README.md in sync when changing it.
  const char* header =
      "prec_in,prec_w,prec_out,cores,matmul_cycles,qntpack_cycles,total_cycles,"
      "macs_per_cycle,cycles_per_output_pixel,speedup_vs_8bit,inner_loop_cycles,status";
  if (csv) os << header << "\n";

  if (!csv) {
    os << std::left << std::setw(10) << "prec" << std::setw(7) << "cores" << std::setw(14)
       << "total_cycles" << std::setw(12) << "MACs/cyc" << std::setw(12) << "cyc/out"
       << std::setw(14) << "vs 8-bit w" << "inner-loop\n";
  }

  for (const PrecTriple& t : triples) {
    const LayerConfig cfg = with_prec(base, t);
    std::string status = "ok";
    cost::CostReport rep;
    double vs8 = 1.0;
    try {
      rep = cost::layer_cycles(cfg, cores);
      // How much faster the same geometry runs with 8-bit weights.
      vs8 = cost::speedup(cfg, 8, cfg.prec_w);
    } catch (const std::invalid_argument& e) {
      status = e.what();
    }
    const int inner = cost::inner_loop_budget(cfg.prec_w).total_cycles;
    if (csv) {
      if (status == "ok") {
        os << cfg.prec_in << "," << cfg.prec_w << "," << cfg.prec_out << "," << cores << ","
           << rep.matmul_cycles << "," << rep.qntpack_cycles << "," << rep.total_cycles << ","
           << std::setprecision(6) << std::fixed << rep.macs_per_cycle << ","
           << rep.cycles_per_output_pixel << "," << vs8 << std::defaultfloat << ","
           << inner << ",ok\n";
      } else {
        os << cfg.prec_in << "," << cfg.prec_w << "," << cfg.prec_out << "," << cores
           << ",,,,,,," << inner << ",\"" << status << "\"\n";
      }
    } else if (status == "ok") {
      std::ostringstream ratio;
      ratio << std::setprecision(4) << vs8 << "x";
      os << std::left << std::setw(10) << prec_str(cfg) << std::setw(7) << cores << std::setw(14)
         << rep.total_cycles << std::setw(12) << std::setprecision(4) << rep.macs_per_cycle
         << std::setw(12) << rep.cycles_per_output_pixel << std::setw(14) << ratio.str()
         << inner << " cyc/iter\n";
    } else {
      os << std::left << std::setw(10) << prec_str(cfg) << "skipped: " << status << "\n";
    }
  }
  return 0;
}

int cmd_gen(const std::string& layer_path, const std::string& prec, std::uint64_t seed,
            const std::string& out_dir) {
  LayerConfig cfg = cfg::load_layer_config(layer_path);
  if (!prec.empty()) cfg = with_prec(cfg, parse_prec(prec));
  const gen::GeneratedLayer layer = gen::generate_layer(cfg, seed);

  const std::string base = out_dir.empty() ? "." : out_dir;
  const std::string input_path = base + "/input.pqt";
  const std::string weights_path = base + "/weights.pqt";
  const std::string qparams_path = base + "/qparams.cfg";
  const std::string layer_path_out = base + "/layer.cfg";

  PackedTensor input = layer.input;
  input.quant() = layer.quant.input();
  PackedTensor wstore = layer.weights.storage();
  wstore.quant() = layer.quant.weights();

  input.write_file(input_path);
  wstore.write_file(weights_path);
  cfg::save_quant_params(qparams_path,
                         cfg::QuantTriple{layer.quant.input(), layer.quant.weights(),
                                          layer.quant.output()});
  cfg::save_layer_config(layer_path_out, cfg);

  std::cout << "wrote " << input_path << " (" << input.size_bytes() << " bytes, "
            << input.h() * input.w() * input.c() << " codes)\n"
            << "wrote " << weights_path << " (" << wstore.size_bytes() << " bytes)\n"
            << "wrote " << qparams_path << "\n"
            << "wrote " << layer_path_out << "\n";
  return 0;
}

int cmd_run(const std::string& layer_path, const std::string& tensor_dir, int cores,
            const std::string& out_path) {
  const LayerConfig cfg = cfg::load_layer_config(layer_path);
  const std::string base = tensor_dir.empty() ? "." : tensor_dir;
  const PackedTensor input = PackedTensor::read_file(base + "/input.pqt");
  const PackedTensor wstore = PackedTensor::read_file(base + "/weights.pqt");
  const cfg::QuantTriple q = cfg::load_quant_params(base + "/qparams.cfg");
  const WeightTensor weights = WeightTensor::from_storage(wstore, cfg.kh, cfg.kw, cfg.in_c);
  const LayerQuant quant = LayerQuant::prepare(cfg, q.in, q.w, q.out);

  const auto t0 = std::chrono::steady_clock::now();
  const PackedTensor out = conv_mixed(input, weights, cfg, quant, cores);
  const auto t1 = std::chrono::steady_clock::now();
  const double ms = std::chrono::duration<double, std::milli>(t1 - t0).count();

  const std::string path = out_path.empty() ? base + "/output.pqt" : out_path;
  out.write_file(path);
  std::cout << "wrote " << path << " (" << out.h() << "x" << out.w() << "x" << out.c() << " @ "
            << out.n_bits() << "-bit, " << out.size_bytes() << " bytes) in " << std::fixed
            << std::setprecision(2) << ms << " ms on " << cores << " worker"
            << (cores == 1 ? "" : "s") << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"mixed-precision quantized convolution kernels"};
  app.require_subcommand(1);

  std::string layer_path;
  std::string prec;
  std::string out_path;
  std::string dir;
  bool all = false;
  bool csv = false;
  int cores = 1;
  std::uint64_t seed = 1;

  auto add_common = [&](CLI::App* sub, bool needs_layer) {
    sub->add_option("--layer", layer_path, "layer config file")->required(needs_layer);
    return sub;
  };

  CLI::App* verify = add_common(app.add_subcommand("verify", "check kernels against the oracle"),
                                true);
  verify->add_option("--prec", prec, "precision triple in,w,out");
  verify->add_flag("--all", all, "all 27 precision permutations");
  verify->add_option("--cores", cores, "worker count for the kernel under test");
  verify->add_option("--seed", seed, "random seed");

  CLI::App* bench = add_common(
      app.add_subcommand("bench-model", "analytic cycle model report"), true);
  bench->add_option("--prec", prec, "precision triple in,w,out");
  bench->add_flag("--all", all, "all 27 precision permutations");
  bench->add_option("--cores", cores, "modeled core count");
  bench->add_flag("--csv", csv, "emit CSV instead of a table");
  bench->add_option("--out", out_path, "write the report to a file");

  CLI::App* generate = add_common(
      app.add_subcommand("gen", "write seeded random tensors and quant params"), true);
  generate->add_option("--prec", prec, "precision triple in,w,out");
  generate->add_option("--seed", seed, "random seed");
  generate->add_option("--out", dir, "output directory (default .)");

  CLI::App* run = add_common(app.add_subcommand("run", "run the kernel on generated tensors"),
                             true);
  run->add_option("--dir", dir, "directory holding input.pqt/weights.pqt/qparams.cfg");
  run->add_option("--cores", cores, "worker count");
  run->add_option("--out", out_path, "output tensor path (default <dir>/output.pqt)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (app.got_subcommand(verify)) return cmd_verify(layer_path, prec, all, cores, seed);
    if (app.got_subcommand(bench)) return cmd_bench_model(layer_path, prec, all, cores, csv, out_path);
    if (app.got_subcommand(generate)) return cmd_gen(layer_path, prec, seed, dir);
    if (app.got_subcommand(run)) return cmd_run(layer_path, dir, cores, out_path);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
