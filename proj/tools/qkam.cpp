// qkam command-line driver.
// Exit status: 0 success, 2 invariant violated, 3 budget exceeded, 64 usage or configuration error.

#include "qkam/report.hpp"
#include "qkam/spectral.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <sstream>
#include <thread>

using namespace qkam;

namespace {

constexpr int kExitInvariant = 2;
constexpr int kExitBudget = 3;
constexpr int kExitUsage = 64;

// Flags mirror config keys; only flags given on the command line override the file.
struct Overrides {
  std::string config_path;
  std::map<std::string, std::string> values;
  std::vector<std::pair<std::string, CLI::Option*>> options;

  void add(CLI::App& app, const std::string& flag, const std::string& key, const std::string& help) {
    options.emplace_back(key, app.add_option(flag, values[key], help));
  }

  ExperimentConfig resolve(const std::string& command) const {
    ExperimentConfig c = config_path.empty() ? ExperimentConfig{} : load_config(config_path);
    c.command = command;
    for (const auto& [key, opt] : options)
      if (opt->count() > 0) apply_setting(c, key, values.at(key));
    return c;
  }
};

void emit(const ExperimentConfig& c, const Json& j, const CsvTable* csv) {
  if (c.format == "csv" && csv) {
    write_output(c.output, csv->str());
  } else {
    write_output(c.output, dump_json(j) + "\n");
  }
}

Json report(const ExperimentConfig& c) {
  Json j = report_header(c);
  j["command"] = c.command;
  return j;
}

// ---- code ----

std::string builder_spec(const std::string& builder, std::size_t n, std::size_t lx, std::size_t ly, std::size_t m,
                         std::size_t w, std::uint64_t seed) {
  if (builder == "ising" || builder == "ising-open" || builder == "hgp-rep") return builder + ":" + std::to_string(n);
  if (builder == "toric") return "toric:" + std::to_string(lx) + "x" + std::to_string(ly ? ly : lx);
  if (builder == "ldpc")
    return "ldpc:" + std::to_string(n) + "," + std::to_string(m) + "," + std::to_string(w) + "," + std::to_string(seed);
  throw ConfigError("unknown builder '" + builder + "'");
}

int run_code(const StabilizerCode& code, const std::string& action, const std::string& path) {
  if (action == "write") {
    if (path.empty()) throw ConfigError("code write: missing output path");
    save_code(path, code);
    return 0;
  }
  if (action != "info") throw ConfigError("code: unknown action '" + action + "' (info or write)");
  auto g = build_graphs(code);
  auto mode = code.is_classical() ? DistanceMode::Symmetric : DistanceMode::Quantum;
  auto d = code_distance(code, DistanceMode::Quantum, std::min<std::size_t>(code.n(), 8));
  std::cout << "name " << code.name() << "\n";
  std::cout << "kind " << kind_name(code.kind()) << "\n";
  std::cout << "N=" << code.n() << "\n";
  std::cout << "K=" << code.k_logical() << "\n";
  std::cout << "d=" << d.value << (d.exact ? "" : " (lower bound)") << "\n";
  if (mode == DistanceMode::Symmetric) std::cout << "d_sym=" << symmetric_distance_by_kernel(code) << "\n";
  std::cout << "checks=" << code.num_checks() << "\n";
  std::cout << "w_c=" << g.w_c << "\n";
  std::cout << "w_q=" << g.w_q << "\n";
  return 0;
}

// ---- metrics and tqo ----

Json metrics_json(const ExperimentConfig& c) {
  auto code = make_code(c.code);
  auto g = build_graphs(code);
  auto s = prepare_flow(code, g, c.flow);
  auto growth = ball_and_kappa(g, 4);
  Json j = report(c);
  j["code"] = Json{{"name", code.name()}, {"n", code.n()}, {"k", code.k_logical()}, {"checks", code.num_checks()}};
  j["setup"] = json_setup(s);
  j["check_ball_sizes"] = growth.check_ball;
  j["qubit_ball_sizes"] = growth.qubit_ball;
  j["warnings"] = s.warnings;
  return j;
}

Json tqo_json(const ExperimentConfig& c) {
  auto code = make_code(c.code);
  auto g = build_graphs(code);
  std::size_t cap = c.flow.tqo_cap ? c.flow.tqo_cap : 4;
  auto t = check_tqo2(code, g, cap);
  Json j = report(c);
  j["size_cap"] = t.size_cap;
  j["ell"] = json_number(t.ell);
  j["ell_all"] = json_number(t.ell_all);
  j["d_tilde"] = t.d_tilde;
  j["d_tilde_exact"] = t.d_tilde_exact;
  j["sets"] = t.sets;
  j["truncated"] = t.truncated;
  j["sets_per_size"] = t.sets_per_size;
  j["max_radius_per_size"] = t.max_radius_per_size;
  Json v = Json::array();
  for (const auto& x : t.violations) v.push_back(Json{{"region", x.region.indices()}, {"radius", x.radius}});
  j["violations"] = v;
  return j;
}

// ---- flow, spectrum, sweep ----

struct Pipeline {
  StabilizerCode code;
  InteractionGraphs g;
  PauliOperator pert;
};

Pipeline make_pipeline(const std::string& spec, double h, double hz) {
  Pipeline p{make_code(spec), {}, {}};
  p.g = build_graphs(p.code);
  p.pert = field_perturbation(p.code.n(), h, hz);
  return p;
}

int run_flow_command(const ExperimentConfig& c) {
  auto p = make_pipeline(c.code, c.h, c.hz);
  auto f = run_flow(p.code, p.g, p.pert, c.flow);
  Json j = report(c);
  j["flow"] = json_flow(f);
  auto csv = flow_csv(f);
  emit(c, j, &csv);
  return 0;
}

int run_spectrum_command(const ExperimentConfig& c, std::size_t extra) {
  auto p = make_pipeline(c.code, c.h, c.hz);
  auto f = run_flow(p.code, p.g, p.pert, c.flow);
  auto row = band_and_splitting(p.code, p.pert, f.eps0, extra, c.code);
  row.band.b_paper = f.energy_shift.real();
  Json j = report(c);
  j["eps0"] = json_number(f.eps0);
  j["band"] = json_band(row.band);
  if (p.code.n() <= 10) {
    auto fb = form_bound_check(k_operator(p.code, f, static_cast<std::size_t>(f.n_star)).dense(p.code.n()),
                               h0_collection(p.code).to_operator().dense(p.code.n()));
    j["form_bound"] = Json{{"c", json_number(fb.c)},
                           {"c_over_eps0", json_number(f.eps0 > 0 ? fb.c / f.eps0 : 0.0)},
                           {"kernel_leak", json_number(fb.kernel_leak)}};
  }
  auto csv = band_csv(row.band);
  emit(c, j, &csv);
  return 0;
}

struct SweepPoint {
  std::size_t n = 0;
  double h = 0.0;
  std::vector<Json> row;
  std::string error;
  int status = 0;
};

const std::vector<std::string>& sweep_columns() {
  static const std::vector<std::string> cols = {"code",      "n",    "h",     "eps0", "n_star", "converged",
                                                "diverged",  "error_bound", "splitting", "gap",  "c_prime_measured",
                                                "status"};
  return cols;
}

void run_point(const ExperimentConfig& c, const std::string& family, SweepPoint& pt) {
  std::string spec = family + ":" + std::to_string(pt.n);
  try {
    auto p = make_pipeline(spec, pt.h, c.hz);
    auto f = run_flow(p.code, p.g, p.pert, c.flow);
    auto row = band_and_splitting(p.code, p.pert, f.eps0, 2, spec);
    pt.row = {spec,
              pt.n,
              json_number(pt.h),
              json_number(f.eps0),
              f.n_star,
              f.converged,
              f.diverged,
              json_number(f.error_bound),
              json_number(row.band.splitting),
              json_number(row.band.gap),
              json_number(row.band.c_prime_measured),
              "ok"};
  } catch (const InvariantViolation& e) {
    pt.status = kExitInvariant;
    pt.error = e.what();
  } catch (const BudgetExceeded& e) {
    pt.status = kExitBudget;
    pt.error = e.what();
  }
  if (pt.status != 0) {
    pt.row = {spec, pt.n, json_number(pt.h), "", "", "", "", "", "", "", "", pt.error};
  }
}

int run_sweep_command(const ExperimentConfig& c, unsigned jobs) {
  std::string family = c.code.substr(0, c.code.find(':'));
  if (family == "file" || family == "ldpc") throw ConfigError("sweep: code family must take a single size");
  std::vector<SweepPoint> points;
  for (std::size_t n : c.sweep_n)
    for (double h : c.sweep_h) points.push_back(SweepPoint{n, h, {}, {}, 0});

  // Workers share nothing but the point index; results land in grid order.
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < points.size(); i = next++) run_point(c, family, points[i]);
  };
  unsigned n_workers = std::max(1u, std::min<unsigned>(jobs, static_cast<unsigned>(points.size())));
  std::vector<std::thread> pool;
  for (unsigned t = 1; t < n_workers; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();

  CsvTable csv(sweep_columns());
  Json j = report(c);
  Json rows = Json::array();
  int status = 0;
  for (const auto& pt : points) {
    csv.add(pt.row);
    Json r;
    for (std::size_t i = 0; i < pt.row.size(); ++i) r[sweep_columns()[i]] = pt.row[i];
    rows.push_back(r);
    status = std::max(status, pt.status);
  }
  j["points"] = rows;
  emit(c, j, &csv);
  return status;
}

// ---- selftest ----

struct SelfTest {
  int failed = 0;
  void check(const std::string& name, const std::function<bool()>& f) {
    bool ok = false;
    std::string why;
    try {
      ok = f();
    } catch (const std::exception& e) {
      why = std::string(" (") + e.what() + ")";
    }
    std::cout << (ok ? "PASS " : "FAIL ") << name << why << "\n";
    failed += !ok;
  }
};

int run_selftest() {
  SelfTest t;
  std::mt19937_64 rng(7);
  t.check("pauli product matches dense product", [&] {
    std::uniform_int_distribution<int> d4(0, 3);
    for (int i = 0; i < 50; ++i) {
      PauliString a(4), b(4);
      for (std::size_t q = 0; q < 4; ++q) {
        a.set(q, "IXYZ"[d4(rng)]);
        b.set(q, "IXYZ"[d4(rng)]);
      }
      MatC lhs = PauliOperator(pauli_multiply(a, b), 1.0).dense(4);
      MatC rhs = PauliOperator(a, 1.0).dense(4) * PauliOperator(b, 1.0).dense(4);
      if (max_abs_entry(lhs - rhs) > 1e-14) return false;
    }
    return true;
  });
  t.check("toric 2x2 has N=8 K=2 d=2", [] {
    auto c = make_toric(2, 2);
    return c.n() == 8 && c.k_logical() == 2 && code_distance(c, DistanceMode::Quantum).value == 2;
  });
  t.check("checks commute on every builder", [] {
    for (const char* s : {"ising:6", "ising-open:5", "toric:3", "hgp-rep:3", "ldpc:12,9,3,1"}) {
      auto c = make_code(s);
      for (std::size_t a = 0; a < c.num_checks(); ++a)
        for (std::size_t b = 0; b < a; ++b)
          if (!commutes(c.check(a), c.check(b))) return false;
    }
    return true;
  });
  t.check("ising chain has ell 0, toric 3x3 finite ell", [] {
    auto i = make_repetition(8, true);
    auto tc = make_toric(3, 3);
    auto ri = check_tqo2(i, build_graphs(i), 4);
    auto rt = check_tqo2(tc, build_graphs(tc), 4);
    return ri.ell == 0.0 && rt.violations.empty() && std::isfinite(rt.ell);
  });
  t.check("decomposition reproduces the operator", [] {
    auto c = make_toric(2, 2);
    Decomposer dec(c, build_graphs(c));
    PauliOperator op = field_perturbation(c.n(), 0.3, -0.2);
    auto d = dec.decompose(op);
    PauliOperator back = d.collection.to_operator();
    back.add(PauliString(c.n()), d.identity);
    return max_abs_entry(back.dense(c.n()) - op.dense(c.n())) < 1e-12;
  });
  t.check("generator solves the block equation", [] {
    auto c = make_repetition(6, true);
    auto g = build_graphs(c);
    Decomposer dec(c, g);
    auto sp = split_collection(dec.decompose(field_perturbation(6, 0.01, 0.0)).collection, 3);
    auto chk = check_generator(c, sp, build_generator(sp, c, 4));
    return chk.residual < 1e-8 && chk.block_error < 1e-6;
  });
  t.check("flow contracts and reproduces the Hamiltonian", [] {
    auto c = make_repetition(6, true);
    auto g = build_graphs(c);
    FlowConfig cfg;
    cfg.mode = FlowMode::Symmetric;
    cfg.mu0 = 3.0;
    PauliOperator pert = field_perturbation(6, 0.05, 0.0);
    auto f = run_flow(c, g, pert, cfg);
    PauliOperator h = h0_collection(c).to_operator();
    h += pert;
    for (std::size_t i = 1; i < f.scales.size(); ++i)
      if (f.scales[i].eps >= f.scales[i - 1].eps) return false;
    return f.converged && measured_error(c, h, f, f.n_star) <= f.error_bound + 1e-11 &&
           symmetry_violation(f.final_collection(), c) <= 1e-12;
  });
  t.check("weak field keeps the toric band separated", [] {
    auto c = make_toric(2, 2);
    auto row = band_and_splitting(c, field_perturbation(c.n(), 0.02, 0.01), 0.0);
    return row.band.low_count == 4 && row.band.gap > 10.0 * row.band.splitting;
  });
  t.check("config round trip and report determinism", [] {
    ExperimentConfig c;
    c.code = "ising:6";
    c.h = 0.05;
    c.flow.mu0 = 3.0;
    c.sweep_h = {0.01, 0.1};
    ExperimentConfig back;
    apply_config_text(back, config_text(c));
    return config_text(back) == config_text(c) && config_hash(back) == config_hash(c) &&
           dump_json(report_header(c)) == dump_json(report_header(back));
  });
  std::cout << (t.failed == 0 ? "selftest passed" : "selftest failed") << "\n";
  return t.failed == 0 ? 0 : kExitInvariant;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"qkam: stabilizer-code perturbation flows and spectral checks"};
  app.set_help_flag("--help", "print this help and exit");
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(kVersion));
  Overrides ov;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", ov.config_path, "key=value configuration file")->check(CLI::ExistingFile);
    ov.add(*sub, "--code", "code", "code spec: ising:N, ising-open:N, toric:L[xL], hgp-rep:N, ldpc:n,m,w,seed, file:PATH");
    ov.add(*sub, "--h", "h", "X field on every qubit");
    ov.add(*sub, "--hz", "hz", "Z field on every qubit");
    ov.add(*sub, "--seed", "seed", "random seed");
    ov.add(*sub, "--mu0", "mu0", "initial decay rate");
    ov.add(*sub, "--d-star", "d_star", "word-size cutoff (0 derives it)");
    ov.add(*sub, "--k-max", "k_max", "generator series order");
    ov.add(*sub, "--tol-residual", "tol_residual", "generator residual tolerance");
    ov.add(*sub, "--tol-bch", "tol_bch", "rotation series tolerance");
    ov.add(*sub, "--mode", "mode", "quantum or symmetric");
    ov.add(*sub, "--max-scales", "max_scales", "maximum number of flow steps");
    ov.add(*sub, "--c-prime", "c_prime", "stopping constant");
    ov.add(*sub, "--tqo-cap", "tqo_cap", "connected-set size cap for TQO-II");
    ov.add(*sub, "--sweep-n", "sweep_n", "comma-separated sizes");
    ov.add(*sub, "--sweep-h", "sweep_h", "comma-separated field strengths");
    ov.add(*sub, "-o,--output", "output", "output path, - for stdout");
    ov.add(*sub, "--format", "format", "json or csv");
  };

  std::string builder, action = "info", path;
  std::size_t bn = 8, blx = 2, bly = 0, bm = 0, bw = 3;
  std::uint64_t bseed = 1;
  auto* code = app.add_subcommand("code", "build a code and print its parameters or write it to a file");
  add_common(code);
  code->add_option("--builder", builder, "ising, ising-open, toric, hgp-rep or ldpc");
  code->add_option("--n", bn, "size (chains, hgp-rep, ldpc bits)");
  code->add_option("--lx", blx, "toric width");
  code->add_option("--ly", bly, "toric height (default lx)");
  code->add_option("--m", bm, "ldpc checks");
  code->add_option("--w", bw, "ldpc column weight");
  code->add_option("--builder-seed", bseed, "ldpc seed");
  code->add_option("action", action, "info or write");
  code->add_option("path", path, "output file for write");

  auto* metrics = app.add_subcommand("metrics", "interaction graphs, growth, distances and d*");
  add_common(metrics);
  auto* tqo = app.add_subcommand("tqo", "TQO-II radii over connected check sets");
  add_common(tqo);
  auto* flow = app.add_subcommand("flow", "run the KAM flow and report every scale");
  add_common(flow);
  std::size_t extra = 8;
  auto* spectrum = app.add_subcommand("spectrum", "exact low spectrum, band containment and form bound");
  add_common(spectrum);
  spectrum->add_option("--extra", extra, "levels above the ground band");
  unsigned jobs = std::max(1u, std::thread::hardware_concurrency());
  auto* sweep = app.add_subcommand("sweep", "flow and spectrum over sweep_n x sweep_h");
  add_common(sweep);
  sweep->add_option("--jobs", jobs, "worker threads");
  auto* selftest = app.add_subcommand("selftest", "quick invariant suite");

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (selftest->parsed()) return run_selftest();
    if (code->parsed()) {
      ExperimentConfig c = ov.resolve("code");
      std::string spec = builder.empty() ? c.code : builder_spec(builder, bn, blx, bly, bm, bw, bseed);
      return run_code(make_code(spec), action, path);
    }
    if (metrics->parsed()) {
      ExperimentConfig c = ov.resolve("metrics");
      emit(c, metrics_json(c), nullptr);
      return 0;
    }
    if (tqo->parsed()) {
      ExperimentConfig c = ov.resolve("tqo");
      emit(c, tqo_json(c), nullptr);
      return 0;
    }
    if (flow->parsed()) return run_flow_command(ov.resolve("flow"));
    if (spectrum->parsed()) return run_spectrum_command(ov.resolve("spectrum"), extra);
    if (sweep->parsed()) return run_sweep_command(ov.resolve("sweep"), jobs);
  } catch (const ConfigError& e) {
    std::cerr << "qkam: " << e.what() << "\n";
    return kExitUsage;
  } catch (const InvariantViolation& e) {
    std::cerr << "qkam: invariant violated: " << e.what() << "\n";
    return kExitInvariant;
  } catch (const BudgetExceeded& e) {
    std::cerr << "qkam: budget exceeded: " << e.what() << "\n";
    return kExitBudget;
  } catch (const std::invalid_argument& e) {
    std::cerr << "qkam: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "qkam: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
