#include "mixprec/config.hpp"

#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <map>
#include <sstream>
#include <stdexcept>
#include <vector>

namespace mixprec {
namespace cfg {

namespace {

[[noreturn]] void fail(const std::string& path, const std::string& what) {
  throw std::runtime_error(path + ": " + what);
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

struct KvFile {
  std::string path;
  std::map<std::string, std::pair<std::string, int>> entries;  // key -> (value, line)

  const std::string* find(const std::string& key) const {
    const auto it = entries.find(key);
    return it == entries.end() ? nullptr : &it->second.first;
  }

  [[noreturn]] void fail_key(const std::string& key, const std::string& what) const {
    const auto it = entries.find(key);
    std::ostringstream os;
    os << path;
    if (it != entries.end()) os << ":" << it->second.second;
    os << ": key '" << key << "' " << what;
    throw std::runtime_error(os.str());
  }

  std::string require(const std::string& key) const {
    const std::string* v = find(key);
    if (!v) fail(path, "missing required key '" + key + "'");
    return *v;
  }

  long to_long(const std::string& key, const std::string& text) const {
    char* end = nullptr;
    const long v = std::strtol(text.c_str(), &end, 10);
    if (end == text.c_str() || *end != '\0') fail_key(key, "is not an integer: '" + text + "'");
    return v;
  }

  double to_double(const std::string& key, const std::string& text) const {
    char* end = nullptr;
    const double v = std::strtod(text.c_str(), &end);
    if (end == text.c_str() || *end != '\0') fail_key(key, "is not a number: '" + text + "'");
    return v;
  }

  int get_int(const std::string& key) const {
    return static_cast<int>(to_long(key, require(key)));
  }

  int get_int_or(const std::string& key, int fallback) const {
    const std::string* v = find(key);
    return v ? static_cast<int>(to_long(key, *v)) : fallback;
  }

  double get_double(const std::string& key) const { return to_double(key, require(key)); }

  double get_double_or(const std::string& key, double fallback) const {
    const std::string* v = find(key);
    return v ? to_double(key, *v) : fallback;
  }

  std::vector<double> get_double_list(const std::string& key) const {
    const std::string text = require(key);
    std::vector<double> out;
    std::string item;
    std::istringstream is(text);
    while (std::getline(is, item, ',')) {
      item = trim(item);
      if (item.empty()) fail_key(key, "has an empty list element");
      out.push_back(to_double(key, item));
    }
    if (out.empty()) fail_key(key, "has no values");
    return out;
  }

  bool has(const std::string& key) const { return entries.count(key) != 0; }
};

KvFile read_kv_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(path, "cannot open file");
  KvFile kv;
  kv.path = path;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      std::ostringstream os;
      os << path << ":" << lineno << ": expected 'key = value', got '" << line << "'";
      throw std::runtime_error(os.str());
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) fail(path, "empty key on line " + std::to_string(lineno));
    if (!kv.entries.emplace(key, std::make_pair(value, lineno)).second)
      kv.fail_key(key, "appears more than once");
  }
  return kv;
}

void check_known_keys(const KvFile& kv, const std::vector<std::string>& known) {
  for (const auto& [key, value] : kv.entries) {
    bool ok = false;
    for (const auto& k : known)
      if (k == key) ok = true;
    if (!ok) kv.fail_key(key, "is not a recognized key");
  }
}

std::string fmt(double v) {
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}

std::string fmt_list(const std::vector<double>& vs) {
  std::ostringstream os;
  for (std::size_t i = 0; i < vs.size(); ++i) {
    if (i) os << ",";
    os << std::setprecision(17) << vs[i];
  }
  return os.str();
}

}  // namespace

LayerConfig load_layer_config(const std::string& path) {
  const KvFile kv = read_kv_file(path);
  check_known_keys(kv, {"in_h", "in_w", "in_c", "out_c", "kh", "kw", "stride", "pad", "prec_in",
                        "prec_w", "prec_out"});
  LayerConfig cfg;
  cfg.in_h = kv.get_int("in_h");
  cfg.in_w = kv.get_int("in_w");
  cfg.in_c = kv.get_int("in_c");
  cfg.out_c = kv.get_int("out_c");
  cfg.kh = kv.get_int("kh");
  cfg.kw = kv.get_int("kw");
  cfg.stride = kv.get_int_or("stride", 1);
  cfg.pad = kv.get_int_or("pad", 0);
  cfg.prec_in = kv.get_int("prec_in");
  cfg.prec_w = kv.get_int("prec_w");
  cfg.prec_out = kv.get_int("prec_out");
  cfg.validate();
  return cfg;
}

void save_layer_config(const std::string& path, const LayerConfig& cfg) {
  std::ofstream out(path);
  if (!out) fail(path, "cannot open file for writing");
  out << "in_h = " << cfg.in_h << "\n"
      << "in_w = " << cfg.in_w << "\n"
      << "in_c = " << cfg.in_c << "\n"
      << "out_c = " << cfg.out_c << "\n"
      << "kh = " << cfg.kh << "\n"
      << "kw = " << cfg.kw << "\n"
      << "stride = " << cfg.stride << "\n"
      << "pad = " << cfg.pad << "\n"
      << "prec_in = " << cfg.prec_in << "\n"
      << "prec_w = " << cfg.prec_w << "\n"
      << "prec_out = " << cfg.prec_out << "\n";
  if (!out) fail(path, "write failed");
}

QuantTriple load_quant_params(const std::string& path) {
  const KvFile kv = read_kv_file(path);
  check_known_keys(kv, {"in.n_bits", "in.eps", "w.n_bits", "w.eps", "w.alpha", "out.n_bits",
                        "out.eps", "out.kappa", "out.lambda"});
  QuantTriple q;
  q.in = QuantParams::feature_map(kv.get_int("in.n_bits"), kv.get_double("in.eps"));
  q.w = QuantParams::weight(kv.get_int("w.n_bits"), kv.get_double("w.eps"),
                            kv.get_double_or("w.alpha", 0.0));
  q.out = QuantParams::feature_map(kv.get_int("out.n_bits"), kv.get_double("out.eps"));
  q.out.kappa = kv.get_double_list("out.kappa");
  q.out.lambda = kv.get_double_list("out.lambda");
  q.out.validate();
  return q;
}

void save_quant_params(const std::string& path, const QuantTriple& q) {
  std::ofstream out(path);
  if (!out) fail(path, "cannot open file for writing");
  out << "in.n_bits = " << q.in.n_bits << "\n"
      << "in.eps = " << fmt(q.in.eps) << "\n"
      << "w.n_bits = " << q.w.n_bits << "\n"
      << "w.eps = " << fmt(q.w.eps) << "\n"
      << "w.alpha = " << fmt(q.w.alpha) << "\n"
      << "out.n_bits = " << q.out.n_bits << "\n"
      << "out.eps = " << fmt(q.out.eps) << "\n"
      << "out.kappa = " << fmt_list(q.out.kappa) << "\n"
      << "out.lambda = " << fmt_list(q.out.lambda) << "\n";
  if (!out) fail(path, "write failed");
}

}  // namespace cfg
}  // namespace mixprec
