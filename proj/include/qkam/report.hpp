#pragma once

#include "qkam/codes.hpp"
#include "qkam/kam.hpp"
#include "qkam/spectral.hpp"

#include <json.hpp>

#include <cerrno>
#include <charconv>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace qkam {

inline constexpr const char* kVersion = "0.1.0";

using Json = nlohmann::ordered_json;

class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct ExperimentConfig {
  std::string command = "flow";
  std::string code = "ising:8";  // builder spec, or file:<path>
  double h = 0.02;               // X field on every qubit
  double hz = 0.0;               // Z field on every qubit
  FlowConfig flow;
  std::vector<std::size_t> sweep_n;
  std::vector<double> sweep_h;
  std::uint64_t seed = 1;
  std::string output = "-";
  std::string format = "json";
};

inline std::string format_double(double v) {
  char buf[40];
  auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

inline double parse_double(const std::string& key, const std::string& s) {
  std::size_t pos = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &pos);
  } catch (const std::exception&) {
    throw ConfigError("config: " + key + " expects a number, got '" + s + "'");
  }
  if (pos != s.size()) throw ConfigError("config: " + key + " expects a number, got '" + s + "'");
  return v;
}

inline std::uint64_t parse_uint(const std::string& key, const std::string& s) {
  if (s.empty() || s.find_first_not_of("0123456789") != std::string::npos)
    throw ConfigError("config: " + key + " expects a nonnegative integer, got '" + s + "'");
  return std::stoull(s);
}

inline std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream is(s);
  while (std::getline(is, cur, sep))
    if (!cur.empty()) out.push_back(cur);
  return out;
}

inline std::string trim(const std::string& s) {
  auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

// Documented keys; unknown keys are rejected.
inline void apply_setting(ExperimentConfig& c, const std::string& key, const std::string& value) {
  if (key == "command") c.command = value;
  else if (key == "code") c.code = value;
  else if (key == "h") c.h = parse_double(key, value);
  else if (key == "hz") c.hz = parse_double(key, value);
  else if (key == "seed") c.seed = parse_uint(key, value);
  else if (key == "mu0") c.flow.mu0 = parse_double(key, value);
  else if (key == "d_star") c.flow.d_star = parse_uint(key, value);
  else if (key == "k_max") c.flow.k_max = static_cast<int>(parse_uint(key, value));
  else if (key == "tol_residual") c.flow.tol_residual = parse_double(key, value);
  else if (key == "tol_bch") c.flow.tol_bch = parse_double(key, value);
  else if (key == "bch_skip") c.flow.bch_skip = parse_double(key, value);
  else if (key == "mode") {
    try {
      c.flow.mode = parse_mode(value);
    } catch (const std::invalid_argument& e) {
      throw ConfigError(std::string("config: ") + e.what());
    }
  } else if (key == "max_scales") c.flow.max_scales = static_cast<int>(parse_uint(key, value));
  else if (key == "c_prime") c.flow.c_prime = parse_double(key, value);
  else if (key == "tqo_cap") c.flow.tqo_cap = parse_uint(key, value);
  else if (key == "sweep_n") {
    c.sweep_n.clear();
    for (const auto& t : split(value, ',')) c.sweep_n.push_back(parse_uint(key, t));
  } else if (key == "sweep_h") {
    c.sweep_h.clear();
    for (const auto& t : split(value, ',')) c.sweep_h.push_back(parse_double(key, t));
  } else if (key == "output") c.output = value;
  else if (key == "format") {
    if (value != "json" && value != "csv") throw ConfigError("config: format must be json or csv");
    c.format = value;
  } else throw ConfigError("config: unknown key '" + key + "'");
}

// key=value lines; '#' starts a comment.
inline void apply_config_text(ExperimentConfig& c, const std::string& text) {
  std::istringstream is(text);
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError("config: line " + std::to_string(lineno) + " has no '='");
    apply_setting(c, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
}

inline ExperimentConfig load_config(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("load_config: cannot open " + path);
  std::stringstream ss;
  ss << is.rdbuf();
  ExperimentConfig c;
  apply_config_text(c, ss.str());
  return c;
}

// Canonical key=value text with keys in a fixed order; parses back to the same config.
inline std::string config_text(const ExperimentConfig& c) {
  std::ostringstream os;
  auto join_n = [&] {
    std::string s;
    for (std::size_t i = 0; i < c.sweep_n.size(); ++i) s += (i ? "," : "") + std::to_string(c.sweep_n[i]);
    return s;
  };
  auto join_h = [&] {
    std::string s;
    for (std::size_t i = 0; i < c.sweep_h.size(); ++i) s += (i ? "," : "") + format_double(c.sweep_h[i]);
    return s;
  };
  os << "command=" << c.command << "\n"
     << "code=" << c.code << "\n"
     << "h=" << format_double(c.h) << "\n"
     << "hz=" << format_double(c.hz) << "\n"
     << "mu0=" << format_double(c.flow.mu0) << "\n"
     << "d_star=" << c.flow.d_star << "\n"
     << "k_max=" << c.flow.k_max << "\n"
     << "tol_residual=" << format_double(c.flow.tol_residual) << "\n"
     << "tol_bch=" << format_double(c.flow.tol_bch) << "\n"
     << "bch_skip=" << format_double(c.flow.bch_skip) << "\n"
     << "mode=" << mode_name(c.flow.mode) << "\n"
     << "max_scales=" << c.flow.max_scales << "\n"
     << "c_prime=" << format_double(c.flow.c_prime) << "\n"
     << "tqo_cap=" << c.flow.tqo_cap << "\n"
     << "sweep_n=" << join_n() << "\n"
     << "sweep_h=" << join_h() << "\n"
     << "seed=" << c.seed << "\n"
     << "output=" << c.output << "\n"
     << "format=" << c.format << "\n";
  return os.str();
}

// FNV-1a, 64 bit.
inline std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char ch : s) {
    h ^= ch;
    h *= 0x100000001b3ull;
  }
  return h;
}

inline std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

inline std::string config_hash(const ExperimentConfig& c) { return hex64(fnv1a(config_text(c))); }

// ---- code specs ----

inline std::size_t spec_size(const std::string& spec, const std::string& s) {
  if (s.empty() || s.find_first_not_of("0123456789") != std::string::npos)
    throw ConfigError("code spec '" + spec + "': expected a size, got '" + s + "'");
  return std::stoul(s);
}

// ising:N, ising-open:N, toric:L or toric:LXxLY, hgp-rep:N, ldpc:n,m,w,seed, file:path.
inline StabilizerCode make_code(const std::string& spec) {
  auto colon = spec.find(':');
  if (colon == std::string::npos) throw ConfigError("code spec '" + spec + "': missing ':'");
  std::string kind = spec.substr(0, colon), arg = spec.substr(colon + 1);
  if (kind == "file") return load_code(arg);
  if (kind == "ising") return make_repetition(spec_size(spec, arg), true);
  if (kind == "ising-open") return make_repetition(spec_size(spec, arg), false);
  if (kind == "toric") {
    auto x = arg.find('x');
    if (x == std::string::npos) return make_toric(spec_size(spec, arg), spec_size(spec, arg));
    return make_toric(spec_size(spec, arg.substr(0, x)), spec_size(spec, arg.substr(x + 1)));
  }
  if (kind == "hgp-rep") {
    auto m = repetition_matrix(spec_size(spec, arg));
    return make_hypergraph_product(m, m);
  }
  if (kind == "ldpc") {
    auto p = split(arg, ',');
    if (p.size() != 4) throw ConfigError("code spec '" + spec + "': expected ldpc:n,m,w,seed");
    auto h = make_random_classical_ldpc(spec_size(spec, p[0]), spec_size(spec, p[1]), spec_size(spec, p[2]),
                                        spec_size(spec, p[3]));
    return classical_code_from_matrix(h, "ldpc-" + arg);
  }
  throw ConfigError("code spec '" + spec + "': unknown builder '" + kind + "'");
}

// h sum_q X_q + hz sum_q Z_q.
inline PauliOperator field_perturbation(std::size_t n, double h, double hz) {
  PauliOperator z(n);
  for (std::size_t q = 0; q < n; ++q) {
    if (h != 0.0) z.add(PauliString::single(n, q, 'X'), h);
    if (hz != 0.0) z.add(PauliString::single(n, q, 'Z'), hz);
  }
  return z;
}

// ---- reports ----

inline Json json_number(double v) {
  if (std::isfinite(v)) return v;
  return v > 0 ? "inf" : (v < 0 ? "-inf" : "nan");
}

inline Json report_header(const ExperimentConfig& c) {
  Json j;
  j["tool"] = "qkam";
  j["version"] = kVersion;
  j["config_hash"] = config_hash(c);
  j["seed"] = c.seed;
  Json cfg;
  std::istringstream is(config_text(c));
  std::string line;
  while (std::getline(is, line)) {
    auto eq = line.find('=');
    cfg[line.substr(0, eq)] = line.substr(eq + 1);
  }
  j["config"] = cfg;
  return j;
}

inline Json json_setup(const FlowSetup& s) {
  Json j;
  j["distance"] = s.distance;
  j["distance_exact"] = s.distance_exact;
  j["d_tilde"] = s.d_tilde;
  j["d_tilde_exact"] = s.d_tilde_exact;
  j["ell"] = json_number(s.ell);
  j["kappa"] = json_number(s.kappa);
  j["w_c"] = s.w_c;
  j["w_q"] = s.w_q;
  j["d_star"] = s.d_star;
  j["d_star_override"] = s.d_star_override;
  j["mu_star"] = json_number(s.mu_star);
  j["mu_inf"] = json_number(s.mu_inf);
  j["mu_star_fallback"] = s.mu_star_fallback;
  return j;
}

inline const std::vector<std::string>& scale_columns() {
  static const std::vector<std::string> cols = {"n", "mu", "eps", "eps_rhs", "eta", "eta_rhs", "a_norm", "a_bound",
                                                "error_bound", "overflow", "tail", "words", "max_word", "m_expectation"};
  return cols;
}

inline std::vector<Json> scale_row(const ScaleRecord& r) {
  return {r.n,         json_number(r.mu),       json_number(r.eps),         json_number(r.eps_rhs), json_number(r.eta),
          json_number(r.eta_rhs), json_number(r.a_norm), json_number(r.a_bound), json_number(r.error_bound),
          json_number(r.overflow), json_number(r.tail), r.words, r.max_word, json_number(r.m_expectation.real())};
}

inline Json json_flow(const FlowResult& f) {
  Json j;
  j["setup"] = json_setup(f.setup);
  j["mode"] = mode_name(f.config.mode);
  j["eps0"] = json_number(f.eps0);
  j["stop_level"] = json_number(f.stop_level);
  j["n_star"] = f.n_star;
  j["converged"] = f.converged;
  j["diverged"] = f.diverged;
  j["error_bound"] = json_number(f.error_bound);
  j["energy_shift"] = json_number(f.energy_shift.real());
  Json scales = Json::array();
  for (const auto& r : f.scales) {
    Json row;
    auto vals = scale_row(r);
    for (std::size_t i = 0; i < vals.size(); ++i) row[scale_columns()[i]] = vals[i];
    scales.push_back(row);
  }
  j["scales"] = scales;
  j["warnings"] = f.warnings;
  return j;
}

inline Json json_band(const BandReport& b) {
  Json j;
  j["b"] = json_number(b.b);
  if (b.b_paper) j["b_flow"] = json_number(*b.b_paper);
  j["low_count"] = b.low_count;
  j["splitting"] = json_number(b.splitting);
  j["delta"] = json_number(b.delta);
  j["gap"] = json_number(b.gap);
  j["eps0"] = json_number(b.eps0);
  j["c_prime"] = json_number(b.c_prime);
  j["c_prime_measured"] = json_number(b.c_prime_measured);
  Json rows = Json::array();
  for (const auto& r : b.rows)
    rows.push_back(Json{{"value", json_number(r.value)}, {"k", r.k}, {"half_width", json_number(r.half_width)},
                        {"inside", r.inside}});
  j["rows"] = rows;
  j["violations"] = b.violations;
  return j;
}

// CSV with a fixed header; values are written as JSON scalars without quotes for numbers.
class CsvTable {
 public:
  explicit CsvTable(std::vector<std::string> header) : header_(std::move(header)) {}
  void add(const std::vector<Json>& row) {
    if (row.size() != header_.size()) throw std::invalid_argument("CsvTable: row width mismatch");
    rows_.push_back(row);
  }
  std::size_t size() const { return rows_.size(); }
  std::string str() const {
    std::ostringstream os;
    for (std::size_t i = 0; i < header_.size(); ++i) os << (i ? "," : "") << header_[i];
    os << "\n";
    for (const auto& r : rows_) {
      for (std::size_t i = 0; i < r.size(); ++i) {
        if (i) os << ",";
        if (r[i].is_string()) {
          std::string s = r[i].get<std::string>();
          if (s.find_first_of(",\"\n") != std::string::npos) {
            std::string q = "\"";
            for (char ch : s) q += ch == '"' ? std::string("\"\"") : std::string(1, ch);
            os << q << "\"";
          } else {
            os << s;
          }
        } else {
          os << r[i].dump();
        }
      }
      os << "\n";
    }
    return os.str();
  }

 private:
  std::vector<std::string> header_;
  std::vector<std::vector<Json>> rows_;
};

inline CsvTable flow_csv(const FlowResult& f) {
  CsvTable t(scale_columns());
  for (const auto& r : f.scales) t.add(scale_row(r));
  return t;
}

inline CsvTable band_csv(const BandReport& b) {
  CsvTable t({"index", "value", "k", "half_width", "inside"});
  for (std::size_t i = 0; i < b.rows.size(); ++i)
    t.add({i, json_number(b.rows[i].value), b.rows[i].k, json_number(b.rows[i].half_width), b.rows[i].inside});
  return t;
}

// Writes to `path`, or stdout for "-". I/O errors are thrown with the system message.
inline void write_output(const std::string& path, const std::string& text) {
  if (path == "-" || path.empty()) {
    std::cout << text;
    if (!text.empty() && text.back() != '\n') std::cout << "\n";
    return;
  }
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot open " + path + ": " + std::strerror(errno));
  os << text;
  if (!text.empty() && text.back() != '\n') os << "\n";
  if (!os) throw std::runtime_error("write failed for " + path + ": " + std::strerror(errno));
}

inline std::string dump_json(const Json& j) { return j.dump(2); }

}  // namespace qkam
