#pragma once

#include "qkam/codes.hpp"
#include "qkam/graphs.hpp"
#include "qkam/linalg.hpp"
#include "qkam/pauli.hpp"
#include "qkam/tqo.hpp"
#include "qkam/words.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

namespace qkam {

// Stabilizer-group membership with the check basis built once.
class GroupSolver {
 public:
  explicit GroupSolver(const StabilizerCode& code) : code_(code), basis_(2 * code.n(), code.num_checks()) {
    for (std::size_t a = 0; a < code.num_checks(); ++a) basis_.insert_generator(code.symplectic_row(a), a);
  }

  std::optional<Membership> membership(const PauliString& p) const {
    for (const auto& c : code_.checks())
      if (!commutes(p, c)) return std::nullopt;
    auto sol = basis_.solve(code_.symplectic(p.x(), p.z()));
    if (!sol) return std::nullopt;
    PauliString q = check_product(code_, *sol);
    int diff = ((q.phase() - p.phase()) % 4 + 4) % 4;
    if (diff == 1 || diff == 3) return std::nullopt;
    return Membership{*sol, diff == 0 ? 1 : -1};
  }

 private:
  const StabilizerCode& code_;
  Gf2Basis basis_;
};

// ---- ghosts ----

struct GhostTerm {
  cplx weight;  // c_p * eta_p with p = eta_p prod_{hat} C
  Mask hat;     // checks of the group product
};

struct GhostEntry {
  Word word;
  std::vector<GhostTerm> terms;
};

// q(S', S) with [M_S, X_S'] P = q X_S' P for a target word with only + and g.
inline cplx ghost_q(const Word& target, const GhostEntry& ghost) {
  cplx q = 0.0;
  for (const auto& t : ghost.terms)
    if ((t.hat & target.plus).count() % 2 == 1) q -= 2.0 * t.weight;
  return q;
}

class GhostTable {
 public:
  GhostTable() = default;
  GhostTable(const OperatorCollection& m, const StabilizerCode& code) : by_check_(code.num_checks()) {
    GroupSolver solver(code);
    for (const auto& w : m.sorted_words()) {
      const WordOperator* e = m.find(w);
      if (!w.is_ghost()) throw std::invalid_argument("GhostTable: non-ghost word " + w.str());
      GhostEntry g{w, {}};
      for (const auto& [k, c] : e->op.sorted_terms()) {
        PauliString p(code.n(), k.x, k.z, 0);
        auto mem = solver.membership(p);
        if (!mem)
          throw InvariantViolation("ghost term " + p.str() + " of word " + w.str() +
                                   " is not in the stabilizer group (TQO-I fails below d_*)");
        Mask hat;
        for (int a : mem->exponents.indices()) hat.set(static_cast<std::size_t>(a));
        cplx weight = c * static_cast<double>(mem->sign);
        expectation_ += weight;
        g.terms.push_back({weight, hat});
      }
      entries_.push_back(std::move(g));
      w.set().for_each([&](int a) { by_check_[static_cast<std::size_t>(a)].push_back(entries_.size() - 1); });
    }
  }

  // <M> with P M P = <M> P.
  cplx expectation() const { return expectation_; }
  const std::vector<GhostEntry>& entries() const { return entries_; }

  // sum over ghosts overlapping S' of q(S', S).
  cplx q_sum(const Word& target) const {
    std::vector<std::size_t> idx;
    target.set().for_each([&](int a) {
      if (static_cast<std::size_t>(a) < by_check_.size())
        for (auto i : by_check_[static_cast<std::size_t>(a)]) idx.push_back(i);
    });
    std::sort(idx.begin(), idx.end());
    idx.erase(std::unique(idx.begin(), idx.end()), idx.end());
    cplx s = 0.0;
    for (auto i : idx) s += ghost_q(target, entries_[i]);
    return s;
  }

  // Delta(S') = q_sum / |S'_+|.
  cplx delta(const Word& target) const { return q_sum(target) / static_cast<double>(target.plus.count()); }

  // |S'_+| (1 + Delta(S')).
  cplx denominator(const Word& target) const { return static_cast<double>(target.plus.count()) + q_sum(target); }

 private:
  std::vector<GhostEntry> entries_;
  std::vector<std::vector<std::size_t>> by_check_;
  cplx expectation_ = 0.0;
};

// ---- generator ----

struct GeneratorResult {
  OperatorCollection a_plus;
  OperatorCollection a;  // a_plus + a_plus^dagger
  std::vector<double> order_norms;  // sum_S ||B_k,S|| per order k
  cplx m_expectation = 0.0;
  double min_denominator = std::numeric_limits<double>::infinity();
  std::size_t discarded_words = 0;  // product words that vanish on P
  std::size_t truncated_words = 0;  // product words at or above max_size
};

// A+ = sum_k B_k with B_0[S] = i V+_S / c(S), B_k[S'] = -(D B_{k-1})_{S'} / c(S') restricted to
// words with only + and g; c(S') = |S'_+| (1 + Delta(S')).
// Words with |S| >= max_size are skipped when max_size > 0.
inline GeneratorResult build_generator(const SplitCollections& s, const StabilizerCode& code, int k_max,
                                       std::size_t max_size = 0) {
  std::size_t nq = code.n(), nc = code.num_checks();
  GeneratorResult res;
  res.a_plus = OperatorCollection(nq, nc);
  GhostTable ghosts(s.m_part, code);
  res.m_expectation = ghosts.expectation();
  std::unordered_map<Word, cplx, WordHash> denom_cache;
  auto denom = [&](const Word& w) {
    auto it = denom_cache.find(w);
    if (it != denom_cache.end()) return it->second;
    cplx c = ghosts.denominator(w);
    if (std::abs(c) < 1e-12) throw InvariantViolation("build_generator: vanishing denominator for word " + w.str());
    res.min_denominator = std::min(res.min_denominator, std::abs(c));
    denom_cache.emplace(w, c);
    return c;
  };

  OperatorCollection b(nq, nc);
  for (const auto& w : s.v_plus.sorted_words()) b.add(w, s.v_plus.find(w)->op, cplx(0.0, 1.0) / denom(w));
  b.prune();

  std::vector<const WordOperator*> dl;
  std::vector<std::vector<std::size_t>> d_by_check(nc);
  for (const auto& w : s.d_part.sorted_words()) {
    dl.push_back(s.d_part.find(w));
    w.set().for_each([&](int a) { d_by_check[static_cast<std::size_t>(a)].push_back(dl.size() - 1); });
  }

  for (int k = 0;; ++k) {
    res.order_norms.push_back(b.sum_of_norm_bounds());
    res.a_plus.add_collection(b);
    if (k >= k_max || b.empty() || dl.empty()) break;
    OperatorCollection next(nq, nc);
    std::vector<std::size_t> stamp(dl.size(), 0);
    std::size_t tick = 0;
    for (const auto& wb : b.sorted_words()) {
      const WordOperator* x = b.find(wb);
      ++tick;
      std::vector<std::size_t> cand;
      wb.set().for_each([&](int a) {
        for (auto j : d_by_check[static_cast<std::size_t>(a)])
          if (stamp[j] != tick) {
            stamp[j] = tick;
            cand.push_back(j);
          }
      });
      std::sort(cand.begin(), cand.end());
      for (auto j : cand) {
        auto w = word_multiply(dl[j]->word, wb);
        if (!w) continue;
        if (w->e.any() || w->minus.any() || w->plus.none()) {
          ++res.discarded_words;
          continue;
        }
        if (max_size > 0 && w->size() >= max_size) {
          ++res.truncated_words;
          continue;
        }
        PauliOperator p(nq);
        PauliOperator::multiply_into(dl[j]->op, x->op, -1.0, p);
        next.add(*w, p);
      }
    }
    OperatorCollection scaled(nq, nc);
    for (const auto& w : next.sorted_words()) scaled.add(w, next.find(w)->op, 1.0 / denom(w));
    scaled.prune();
    b = std::move(scaled);
  }
  res.a_plus.prune();
  res.a = merge({&res.a_plus});
  res.a.add_collection(res.a_plus.adjoint());
  res.a.prune();
  return res;
}

// ---- rotation ----

// [X, H0] word-wise: -(|S+| - |S-|) X_S.
inline OperatorCollection commutator_with_h0(const OperatorCollection& x) {
  OperatorCollection r(x.n_qubits(), x.n_checks());
  for (const auto& w : x.sorted_words()) {
    double charge = static_cast<double>(w.plus.count()) - static_cast<double>(w.minus.count());
    if (charge != 0.0) r.add(w, x.find(w)->op, -charge);
  }
  return r;
}

struct BchResult {
  OperatorCollection z_next;
  double overflow_norm = 0.0;    // sum of ||X_S|| moved out at |S| >= d_*
  double overflow_charge = 0.0;  // overflow_norm * e^{2 ||A||}, covering later commutators
  double tail_bound = 0.0;       // bound on the truncated orders
  double a_op_bound = 0.0;       // sum_S ||A_S||
  double dropped = 0.0;          // cancellation noise removed
  std::vector<double> order_norms;
};

// Z~ = Z + sum_{k=1}^{k_max} (1/k!) (-i ad_A)^k (H0 + Z); words with |S| >= d_* and products with
// ||x|| ||y|| <= skip_below go to the error.
inline BchResult bch_rotate(const OperatorCollection& z, const OperatorCollection& a, std::size_t d_star, int k_max,
                            double skip_below = 0.0) {
  BchResult res;
  res.a_op_bound = a.sum_of_norm_bounds();
  double grow = std::exp(2.0 * res.a_op_bound);
  res.z_next = merge({&z});
  auto keep_small = [&](OperatorCollection& t) {
    for (const auto& w : t.sorted_words())
      if (w.size() >= d_star) {
        res.overflow_norm += t.find(w)->norm_bound();
        t.erase(w);
      }
  };
  OperatorCollection t = commutator_with_h0(a);
  auto cz = collection_commutator(a, z, 1e-13, d_star, skip_below);
  res.dropped += cz.dropped;
  res.overflow_norm += cz.skipped_bound;
  t.add_collection(cz.collection);
  t = t.scaled(cplx(0.0, -1.0));
  t.prune();
  keep_small(t);
  for (int k = 1;; ++k) {
    res.order_norms.push_back(t.sum_of_norm_bounds());
    res.z_next.add_collection(t);
    if (k >= k_max || t.empty()) break;
    auto c = collection_commutator(a, t, 1e-13, d_star, skip_below);
    res.dropped += c.dropped;
    res.overflow_norm += c.skipped_bound / static_cast<double>(k + 1);
    t = c.collection.scaled(cplx(0.0, -1.0 / static_cast<double>(k + 1)));
    t.prune();
    keep_small(t);
  }
  res.overflow_charge = res.overflow_norm * grow;
  // T_{k+j} <= T_k (2||A||)^j / j!, so the remainder is at most ||T_k|| (e^{2||A||} - 1).
  double last = res.order_norms.empty() ? 0.0 : res.order_norms.back();
  res.tail_bound = last * (grow - 1.0);
  res.z_next.prune();
  return res;
}

// ---- running couplings ----

struct FlowRhs {
  double eps = 0.0;
  double eta = 0.0;
  double r = 0.0;
};

// Right-hand sides of the flow inequalities for eps_{n+1}, eta_{n+1}; infinite when the
// geometric sums diverge.
inline FlowRhs flow_rhs(double eps, double eta, double mu_n, double mu_next, double mu0) {
  FlowRhs out;
  double dmu = mu_n - mu_next;
  double inf = std::numeric_limits<double>::infinity();
  if (dmu <= 0.0 || std::exp(1.0) * eta >= 1.0) {
    out.eps = out.eta = out.r = inf;
    return out;
  }
  out.r = 4.0 * std::exp(1.0) * eps / ((1.0 - std::exp(1.0) * eta) * dmu);
  if (out.r >= 1.0) {
    out.eps = out.eta = inf;
    return out;
  }
  double s1 = 1.0 / ((1.0 - out.r) * (1.0 - out.r)) - 1.0;  // sum_{k>=1} (k+1) r^k
  double s2 = s1 - 2.0 * out.r;                              // sum_{k>=2} (k+1) r^k
  double h0 = std::exp(mu0);
  out.eps = (s1 * eps + s2 * (h0 + eta)) / dmu;
  out.eta = eta + eps + s1 * (h0 + eta + eps) / dmu;
  return out;
}

// mu_n - mu_{n+1} = (3/pi^2) (mu0 - mu*) / (n+1)^2.
inline double schedule_step(double mu0, double mu_star, int n) {
  return 3.0 / (std::numbers::pi * std::numbers::pi) * (mu0 - mu_star) / ((n + 1.0) * (n + 1.0));
}

enum class FlowMode { Quantum, Symmetric };

inline const char* mode_name(FlowMode m) { return m == FlowMode::Quantum ? "quantum" : "symmetric"; }

inline FlowMode parse_mode(const std::string& s) {
  if (s == "quantum") return FlowMode::Quantum;
  if (s == "symmetric" || s == "classical" || s == "classical-symmetric") return FlowMode::Symmetric;
  throw std::invalid_argument("unknown flow mode: " + s);
}

struct FlowConfig {
  double mu0 = 3.0;
  std::size_t d_star = 0;  // 0: derive from distance and TQO-II
  int k_max = 6;
  double tol_residual = 1e-8;
  double tol_bch = 1e-10;
  double bch_skip = 1e-18;  // rotation products with ||x|| ||y|| at or below this are bounded, not formed
  FlowMode mode = FlowMode::Quantum;
  int max_scales = 12;
  double c_prime = 1.0;
  std::size_t tqo_cap = 0;  // 0: ceil(d / w_c) + 1, at most 8
  int divergence_window = 3;
  // Generator words with |S| >= d_* only feed words that leave as error, so they are skipped.
  bool truncate_generator = true;
};

struct FlowSetup {
  std::size_t distance = 0;
  bool distance_exact = true;
  std::size_t d_tilde = 0;
  bool d_tilde_exact = true;
  double ell = 0.0;
  double kappa = 0.0;
  std::size_t w_c = 0, w_q = 0;
  std::size_t d_star = 1;
  bool d_star_override = false;
  double mu_star = 0.0;
  double mu_inf = 0.0;
  bool mu_star_fallback = false;
  std::vector<std::string> warnings;
};

// Distances, TQO-II and growth constants feeding d_* and mu_*.
inline FlowSetup prepare_flow(const StabilizerCode& code, const InteractionGraphs& g, const FlowConfig& cfg) {
  FlowSetup s;
  s.w_c = g.w_c;
  s.w_q = g.w_q;
  if (cfg.mode == FlowMode::Symmetric && code.is_classical()) {
    s.distance = symmetric_distance_by_kernel(code);
  } else {
    DistanceResult d = code_distance(code, cfg.mode == FlowMode::Quantum ? DistanceMode::Quantum : DistanceMode::Symmetric,
                                      std::min<std::size_t>(code.n(), 8));
    s.distance = d.value;
    s.distance_exact = d.exact;
  }
  std::size_t wc = std::max<std::size_t>(1, g.w_c);
  std::size_t cap = cfg.tqo_cap;
  if (cap == 0) cap = std::min<std::size_t>(8, (s.distance + wc - 1) / wc + 1);
  cap = std::max<std::size_t>(cap, 2);
  Tqo2Result t = check_tqo2(code, g, cap);
  s.d_tilde = t.d_tilde;
  s.d_tilde_exact = t.d_tilde_exact;
  s.ell = std::isfinite(t.ell) ? t.ell : 0.0;
  if (!std::isfinite(t.ell)) s.warnings.push_back("TQO-II radius unbounded below d_tilde");
  auto growth = ball_and_kappa(g, 4);
  s.kappa = growth.kappa;
  DStar ds = d_star(s.distance, s.distance_exact, wc, s.d_tilde, s.d_tilde_exact);
  s.d_star = ds.value;
  if (cfg.d_star > 0) {
    if (cfg.d_star > s.d_star) s.warnings.push_back("d_star raised above the derived value; theorem constants do not apply");
    s.d_star_override = cfg.d_star != s.d_star;
    s.d_star = cfg.d_star;
  }
  double log_n = std::log(static_cast<double>(std::max<std::size_t>(code.n(), 2)));
  s.mu_star = std::max(s.kappa * s.ell + std::log(4.0) * static_cast<double>(wc + 1),
                       log_n / static_cast<double>(s.d_star));
  if (cfg.mu0 <= s.mu_star) {
    s.warnings.push_back("mu0 <= mu_star; schedule uses mu_star = mu0 / 2 (demo mode, no bound tracking)");
    s.mu_star = cfg.mu0 / 2.0;
    s.mu_star_fallback = true;
  }
  s.mu_inf = s.mu_star + (cfg.mu0 - s.mu_star) / 2.0;
  return s;
}

struct ScaleRecord {
  int n = 0;
  double mu = 0.0;
  double eps = 0.0;
  double eta = 0.0;
  double eps_rhs = std::numeric_limits<double>::infinity();  // bound from the previous scale
  double eta_rhs = std::numeric_limits<double>::infinity();
  double a_norm = 0.0;   // ||A||_mu of the generator built at this scale
  double a_bound = 0.0;  // 2 eps / (1 - e eta)
  double error_bound = 0.0;
  double overflow = 0.0;
  double tail = 0.0;
  std::size_t words = 0;
  std::size_t max_word = 0;
  cplx m_expectation = 0.0;
};

struct FlowResult {
  FlowSetup setup;
  FlowConfig config;
  double eps0 = 0.0;
  double stop_level = 0.0;
  cplx scalar = 0.0;  // identity component of the perturbation
  std::vector<ScaleRecord> scales;
  std::vector<OperatorCollection> factors;  // A^(0), ..., A^(n*-1)
  std::vector<OperatorCollection> collections;  // Z^(0), ..., Z^(n*)
  int n_star = 0;
  bool converged = false;
  bool diverged = false;
  double error_bound = 0.0;
  cplx energy_shift = 0.0;  // scalar + <M^(n*)>
  std::vector<std::string> warnings;

  const OperatorCollection& final_collection() const { return collections.back(); }
};

inline double collection_word_norm(std::initializer_list<const OperatorCollection*> parts, double mu) {
  return merge(parts).word_norm(mu);
}

// Perturbation must commute with the global symmetry group in symmetric mode.
inline void require_symmetric(const PauliOperator& z, const StabilizerCode& code) {
  for (const auto& gsym : classical_symmetry_group(code))
    for (const auto& [k, c] : z.terms())
      if (std::abs(c) > 0.0 && symplectic_odd(k.x, k.z, gsym.x(), gsym.z()))
        throw InvariantViolation("symmetric mode: perturbation term " + PauliString(code.n(), k.x, k.z).str() +
                                 " breaks the symmetry " + gsym.str());
}

// Max |c| over terms anticommuting with a symmetry generator.
inline double symmetry_violation(const OperatorCollection& c, const StabilizerCode& code) {
  double worst = 0.0;
  auto gens = classical_symmetry_group(code);
  for (const auto& [w, e] : c.entries())
    for (const auto& gsym : gens)
      for (const auto& [k, v] : e.op.terms())
        if (symplectic_odd(k.x, k.z, gsym.x(), gsym.z())) worst = std::max(worst, std::abs(v));
  return worst;
}

inline FlowResult run_flow(const StabilizerCode& code, const InteractionGraphs& g, const PauliOperator& z0,
                           const FlowConfig& cfg, std::optional<FlowSetup> setup = std::nullopt) {
  FlowResult res;
  res.config = cfg;
  res.setup = setup ? *setup : prepare_flow(code, g, cfg);
  if (cfg.mode == FlowMode::Symmetric) require_symmetric(z0, code);
  const FlowSetup& s = res.setup;
  res.warnings = s.warnings;
  Decomposer dec(code, g);
  auto d = dec.decompose(z0);
  res.scalar = d.identity;
  if (!d.covers_exact) res.warnings.push_back("connected covers used the approximation");
  res.eps0 = d.collection.word_norm(cfg.mu0);
  res.stop_level = cfg.c_prime * res.eps0 * std::exp(-s.mu_inf * static_cast<double>(s.d_star));

  auto z0split = split_collection(d.collection, s.d_star);
  for (const auto& [w, e] : z0split.overflow.entries()) res.error_bound += e.norm_bound();
  OperatorCollection z = merge({&z0split.d_part, &z0split.v_plus, &z0split.v_minus, &z0split.m_part});

  double mu = cfg.mu0;
  FlowRhs pending;
  bool have_pending = false;
  int rising = 0;
  double prev_eps = std::numeric_limits<double>::infinity();
  for (int n = 0;; ++n) {
    auto sp = split_collection(z, s.d_star);
    ScaleRecord rec;
    rec.n = n;
    rec.mu = mu;
    rec.eps = collection_word_norm({&sp.v_plus, &sp.v_minus}, mu);
    rec.eta = collection_word_norm({&sp.d_part, &sp.m_part}, mu);
    if (have_pending) {
      rec.eps_rhs = pending.eps;
      rec.eta_rhs = pending.eta;
    }
    rec.words = z.size();
    rec.max_word = z.max_word_size();
    rec.error_bound = res.error_bound;
    rec.m_expectation = GhostTable(sp.m_part, code).expectation();
    res.collections.push_back(z);
    if (rec.eps > prev_eps)
      ++rising;
    else
      rising = 0;
    prev_eps = rec.eps;
    bool stop = rec.eps <= res.stop_level;
    if (stop) {
      res.scales.push_back(rec);
      res.converged = true;
      res.n_star = n;
      break;
    }
    if (rising >= cfg.divergence_window) {
      res.scales.push_back(rec);
      res.diverged = true;
      res.n_star = n;
      break;
    }
    if (n >= cfg.max_scales) {
      res.scales.push_back(rec);
      res.n_star = n;
      res.warnings.push_back("max_scales reached before the stopping level");
      break;
    }
    auto gen = build_generator(sp, code, cfg.k_max, cfg.truncate_generator ? s.d_star : 0);
    rec.a_norm = gen.a.word_norm(mu);
    rec.a_bound = std::exp(1.0) * rec.eta < 1.0 ? 2.0 * rec.eps / (1.0 - std::exp(1.0) * rec.eta)
                                                 : std::numeric_limits<double>::infinity();
    auto bch = bch_rotate(z, gen.a, s.d_star, cfg.k_max, cfg.bch_skip);
    rec.overflow = bch.overflow_charge;
    rec.tail = bch.tail_bound;
    if (bch.tail_bound > cfg.tol_bch)
      res.warnings.push_back("scale " + std::to_string(n) + ": BCH tail bound " + std::to_string(bch.tail_bound) +
                             " above tol_bch");
    res.error_bound += bch.overflow_charge + bch.tail_bound + bch.dropped;
    double mu_next = mu - schedule_step(cfg.mu0, s.mu_star, n);
    pending = flow_rhs(rec.eps, rec.eta, mu, mu_next, cfg.mu0);
    have_pending = true;
    res.scales.push_back(rec);
    res.factors.push_back(std::move(gen.a));
    z = std::move(bch.z_next);
    mu = mu_next;
  }
  res.energy_shift = res.scalar + res.scales.back().m_expectation;
  return res;
}

// ---- matrix-level companions ----

// Ground projector of H0 as a Pauli operator: prod_alpha (1 + C_alpha) / 2.
inline PauliOperator ground_projector(const StabilizerCode& code) {
  PauliOperator p = PauliOperator::identity(code.n());
  for (const auto& c : code.checks()) p = times_projector(p, c, true, false);
  p.prune_absolute(1e-15);
  return p;
}

// U = e^{iA0} e^{iA1} ... so that H = U H^(n*) U^dagger.
inline MatC build_unitary(const std::vector<OperatorCollection>& factors, std::size_t n_qubits,
                          const Caps& caps = {}) {
  if (n_qubits > caps.dense_qubits) throw BudgetExceeded("build_unitary: beyond the dense cap");
  auto dim = static_cast<Eigen::Index>(std::size_t{1} << n_qubits);
  MatC u = MatC::Identity(dim, dim);
  for (const auto& a : factors) u = u * expm_hermitian(a.to_operator().dense(n_qubits), 1.0);
  return u;
}

// U X with U = e^{iA0} ... e^{iA_{n-1}} for a vector or block, by sparse Taylor steps.
template <class Dense>
Dense apply_unitary(const std::vector<OperatorCollection>& factors, std::size_t n_qubits, Dense x, bool adjoint = false) {
  auto step = [&](const OperatorCollection& a) {
    SpMatC m = a.to_operator().sparse(n_qubits);
    x = expm_apply(m, cplx(0.0, adjoint ? -1.0 : 1.0), std::move(x));
  };
  if (adjoint) {
    for (const auto& a : factors) step(a);
  } else {
    for (auto it = factors.rbegin(); it != factors.rend(); ++it) step(*it);
  }
  return x;
}

// e^{-isA} O e^{isA} = sum_k (-is)^k ad_A^k O / k!, at Pauli level.
inline PauliOperator conjugate_pauli(const PauliOperator& o, const PauliOperator& a, double s, double tol = 1e-15,
                                     int max_terms = 80) {
  PauliOperator acc = o;
  PauliOperator t = o;
  double base = std::max(o.one_norm(), 1e-300);
  for (int k = 1; k <= max_terms; ++k) {
    t = commutator(a, t);
    t *= cplx(0.0, -s / static_cast<double>(k));
    t.prune(1e-16);
    acc += t;
    if (t.one_norm() <= tol * base) {
      acc.prune(1e-16);
      return acc;
    }
  }
  throw BudgetExceeded("conjugate_pauli: series did not converge");
}

// U^dagger O U (heisenberg = true) or U O U^dagger.
inline PauliOperator conjugate_by_factors(const PauliOperator& o, const std::vector<OperatorCollection>& factors,
                                          bool heisenberg) {
  PauliOperator r = o;
  if (heisenberg) {
    for (const auto& a : factors) r = conjugate_pauli(r, a.to_operator(), 1.0);
  } else {
    for (auto it = factors.rbegin(); it != factors.rend(); ++it) r = conjugate_pauli(r, it->to_operator(), -1.0);
  }
  return r;
}

struct GeneratorCheck {
  double residual = 0.0;          // ||Pbar (i[K,A] + V) P|| / ||V||
  double residual_adjoint = 0.0;  // ||P (i[K,A] + V) Pbar|| / ||V||
  double block_error = 0.0;       // ||Pbar A P - X|| / ||X|| against the block solve
  double v_norm = 0.0;
  double kp_norm = 0.0;           // ||(K - <M>) P||
};

// Dense oracle for the generator equations with K = H0 + D + M.
inline GeneratorCheck check_generator(const StabilizerCode& code, const SplitCollections& s, const GeneratorResult& gen) {
  std::size_t n = code.n();
  MatC h0 = h0_collection(code).to_operator().dense(n);
  MatC k = h0 + merge({&s.d_part, &s.m_part}).to_operator().dense(n);
  MatC v = merge({&s.v_plus, &s.v_minus}).to_operator().dense(n);
  MatC a = gen.a.to_operator().dense(n);
  MatC p = ground_projector(code).dense(n);
  MatC pbar = MatC::Identity(p.rows(), p.cols()) - p;
  cplx i(0.0, 1.0);
  MatC eq = i * (k * a - a * k) + v;
  GeneratorCheck out;
  out.v_norm = dense_operator_norm(v);
  double vn = std::max(out.v_norm, 1e-300);
  out.residual = dense_operator_norm(pbar * eq * p) / vn;
  out.residual_adjoint = dense_operator_norm(p * eq * pbar) / vn;
  cplx m = gen.m_expectation;
  out.kp_norm = dense_operator_norm((k - m * MatC::Identity(k.rows(), k.cols())) * p);
  // Orthonormal basis of range(Pbar).
  Eigen::SelfAdjointEigenSolver<MatC> es(pbar);
  std::vector<Eigen::Index> cols;
  for (Eigen::Index j = 0; j < es.eigenvalues().size(); ++j)
    if (es.eigenvalues()[j] > 0.5) cols.push_back(j);
  MatC q(pbar.rows(), static_cast<Eigen::Index>(cols.size()));
  for (std::size_t j = 0; j < cols.size(); ++j) q.col(static_cast<Eigen::Index>(j)) = es.eigenvectors().col(cols[j]);
  MatC kbar = q.adjoint() * k * q - m * MatC::Identity(q.cols(), q.cols());
  MatC rhs = q.adjoint() * v * p;
  MatC x = q * (i * kbar.partialPivLu().solve(rhs));
  double xn = std::max(dense_operator_norm(x), 1e-300);
  out.block_error = dense_operator_norm(pbar * a * p - x) / xn;
  return out;
}

// Exact error H^(n) - H0 - Z^(n) - scalar with H^(n) = U_n^dagger H U_n, U_n built from the first n factors.
inline double measured_error(const StabilizerCode& code, const PauliOperator& h, const FlowResult& flow, int n) {
  std::size_t nq = code.n();
  std::vector<OperatorCollection> fs(flow.factors.begin(), flow.factors.begin() + n);
  MatC u = build_unitary(fs, nq);
  MatC hn = u.adjoint() * h.dense(nq) * u;
  MatC model = h0_collection(code).to_operator().dense(nq) + flow.collections[static_cast<std::size_t>(n)].to_operator().dense(nq);
  model += flow.scalar * MatC::Identity(model.rows(), model.cols());
  return hermitian_operator_norm(hn - model);
}

}  // namespace qkam
