#pragma once

#include "qkam/bits.hpp"
#include "qkam/codes.hpp"
#include "qkam/graphs.hpp"
#include "qkam/pauli.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

namespace qkam {

// Quadruple (S+, S-, Se, Sg) of disjoint check sets. The class of a word is
// left(S) X right(S) with left = E on S+ and Se, G on S- and Sg; right = G on S+ and Sg,
// E on S- and Se.
struct Word {
  Mask plus, minus, e, g;

  Mask set() const { return plus | minus | e | g; }
  std::size_t size() const { return set().count(); }
  bool empty() const { return set().none(); }
  Mask left_g() const { return minus | g; }
  Mask left_e() const { return plus | e; }
  Mask right_g() const { return plus | g; }
  Mask right_e() const { return minus | e; }

  bool valid() const {
    return !plus.intersects(minus) && !plus.intersects(e) && !plus.intersects(g) && !minus.intersects(e) &&
           !minus.intersects(g) && !e.intersects(g);
  }

  static Word from_projectors(const Mask& lg, const Mask& le, const Mask& rg, const Mask& re) {
    Word w;
    w.plus = le & rg;
    w.minus = lg & re;
    w.e = le & re;
    w.g = lg & rg;
    return w;
  }

  Word adjoint() const { return Word{minus, plus, e, g}; }
  bool is_ghost() const { return plus.none() && minus.none() && e.none() && g.any(); }

  friend bool operator==(const Word& a, const Word& b) {
    return a.plus == b.plus && a.minus == b.minus && a.e == b.e && a.g == b.g;
  }
  friend bool operator<(const Word& a, const Word& b) {
    if (a.plus != b.plus) return a.plus < b.plus;
    if (a.minus != b.minus) return a.minus < b.minus;
    if (a.e != b.e) return a.e < b.e;
    return a.g < b.g;
  }

  std::string str() const {
    std::string s = "{";
    auto part = [&](char tag, const Mask& m) {
      m.for_each([&](int a) {
        if (s.size() > 1) s += ' ';
        s += std::to_string(a);
        s += tag;
      });
    };
    part('+', plus);
    part('-', minus);
    part('e', e);
    part('g', g);
    return s + "}";
  }
};

struct WordHash {
  std::size_t operator()(const Word& w) const {
    std::size_t h = w.plus.hash();
    h = h * 1000003u ^ w.minus.hash();
    h = h * 1000003u ^ w.e.hash();
    return h * 1000003u ^ w.g.hash();
  }
};

// Word of X' X for X' in class sp and X in class s; absent when the product vanishes.
inline std::optional<Word> word_multiply(const Word& sp, const Word& s) {
  if (sp.right_g().intersects(s.left_e()) || sp.right_e().intersects(s.left_g())) return std::nullopt;
  Mask a = sp.set(), b = s.set();
  Mask lg = sp.left_g() | s.left_g().minus(a);
  Mask le = sp.left_e() | s.left_e().minus(a);
  Mask rg = s.right_g() | sp.right_g().minus(b);
  Mask re = s.right_e() | sp.right_e().minus(b);
  return Word::from_projectors(lg, le, rg, re);
}

// ---- projector algebra ----

// op * (1 + s C)/2 (right) or (1 + s C)/2 * op (left), s = +1 for G and -1 for E.
inline PauliOperator times_projector(const PauliOperator& op, const PauliString& check, bool ground, bool on_left) {
  PauliOperator c(check, ground ? 0.5 : -0.5);
  c.add(PauliString(check.n()), 0.5);
  PauliOperator r = on_left ? c * op : op * c;
  r.prune_absolute(0.0);
  return r;
}

inline PauliOperator apply_projectors(PauliOperator op, const StabilizerCode& code, const Mask& g, const Mask& e,
                                      bool on_left) {
  g.for_each([&](int a) {
    if (!op.empty()) op = times_projector(op, code.check(static_cast<std::size_t>(a)), true, on_left);
  });
  e.for_each([&](int a) {
    if (!op.empty()) op = times_projector(op, code.check(static_cast<std::size_t>(a)), false, on_left);
  });
  return op;
}

// Checks whose support meets the qubit support of op.
inline Mask check_support_of(const PauliOperator& op, const StabilizerCode& code) {
  return code.checks_on(op.support());
}

// left(S) core right(S) in Pauli form; every core term must commute with the checks outside S.
inline PauliOperator sandwich_expand(const PauliOperator& core, const Word& word, const StabilizerCode& code) {
  if (!word.valid()) throw std::invalid_argument("sandwich_expand: word sets overlap");
  Mask outside = check_support_of(core, code).minus(word.set());
  for (const auto& [k, c] : core.terms())
    outside.for_each([&](int a) {
      const auto& ch = code.check(static_cast<std::size_t>(a));
      if (symplectic_odd(k.x, k.z, ch.x(), ch.z()))
        throw std::invalid_argument("sandwich_expand: core flips a check outside the word");
    });
  PauliOperator r = apply_projectors(core, code, word.left_g(), word.left_e(), true);
  r = apply_projectors(std::move(r), code, word.right_g(), word.right_e(), false);
  r.prune();
  return r;
}

// ---- operator collections ----

struct WordOperator {
  Word word;
  PauliOperator op;               // the class element
  std::optional<PauliOperator> core;
  mutable double cached_norm = -1.0;

  double norm() const {
    if (cached_norm < 0.0) cached_norm = op.op_norm();
    return cached_norm;
  }
  // Upper bound on ||op||: the cached exact norm when present, else the Pauli 1-norm.
  double norm_bound() const { return cached_norm >= 0.0 ? cached_norm : op.one_norm(); }
  void invalidate() { cached_norm = -1.0; }
};

class OperatorCollection {
 public:
  using Map = std::unordered_map<Word, WordOperator, WordHash>;

  OperatorCollection() = default;
  OperatorCollection(std::size_t n_qubits, std::size_t n_checks) : n_qubits_(n_qubits), n_checks_(n_checks) {}

  std::size_t n_qubits() const { return n_qubits_; }
  std::size_t n_checks() const { return n_checks_; }
  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }
  const Map& entries() const { return entries_; }

  void add(const Word& w, const PauliOperator& op, cplx scale = 1.0) {
    if (op.empty()) return;
    auto it = entries_.find(w);
    if (it == entries_.end()) {
      WordOperator wo{w, PauliOperator(n_qubits_), std::nullopt, -1.0};
      wo.op.add_scaled(op, scale);
      entries_.emplace(w, std::move(wo));
    } else {
      it->second.op.add_scaled(op, scale);
      it->second.core.reset();
      it->second.invalidate();
    }
  }
  void add_entry(WordOperator wo) {
    auto it = entries_.find(wo.word);
    if (it == entries_.end()) {
      entries_.emplace(wo.word, std::move(wo));
    } else {
      it->second.op += wo.op;
      it->second.core.reset();
      it->second.invalidate();
    }
  }
  // Mutable operator of word w, created empty if absent.
  PauliOperator& accumulate(const Word& w) {
    auto [it, fresh] = entries_.try_emplace(w, WordOperator{w, PauliOperator(n_qubits_), std::nullopt, -1.0});
    if (!fresh) {
      it->second.core.reset();
      it->second.invalidate();
    }
    return it->second.op;
  }
  void add_collection(const OperatorCollection& o, cplx scale = 1.0) {
    for (const auto& [w, e] : o.entries_) add(w, e.op, scale);
  }
  const WordOperator* find(const Word& w) const {
    auto it = entries_.find(w);
    return it == entries_.end() ? nullptr : &it->second;
  }
  void erase(const Word& w) { entries_.erase(w); }

  std::vector<Word> sorted_words() const {
    std::vector<Word> v;
    v.reserve(entries_.size());
    for (const auto& [w, e] : entries_) v.push_back(w);
    std::sort(v.begin(), v.end());
    return v;
  }

  // Drops empty entries and terms below rel * max|c| inside each entry; returns dropped 1-norm.
  double prune(double rel = 1e-14) {
    double dropped = 0.0;
    for (auto it = entries_.begin(); it != entries_.end();) {
      dropped += it->second.op.prune(rel);
      it->second.invalidate();
      if (it->second.op.empty())
        it = entries_.erase(it);
      else
        ++it;
    }
    return dropped;
  }

  OperatorCollection adjoint() const {
    OperatorCollection r(n_qubits_, n_checks_);
    for (const auto& [w, e] : entries_) {
      WordOperator wo{w.adjoint(), e.op.adjoint(), std::nullopt, e.cached_norm};
      if (e.core) wo.core = e.core->adjoint();
      r.entries_.emplace(wo.word, std::move(wo));
    }
    return r;
  }

  OperatorCollection scaled(cplx s) const {
    OperatorCollection r(n_qubits_, n_checks_);
    for (const auto& [w, e] : entries_) {
      WordOperator wo{w, e.op * s, std::nullopt, e.cached_norm < 0 ? -1.0 : e.cached_norm * std::abs(s)};
      r.entries_.emplace(w, std::move(wo));
    }
    return r;
  }

  // Extensive operator sum_S O_S.
  PauliOperator to_operator() const {
    PauliOperator r(n_qubits_);
    for (const auto& w : sorted_words()) r += entries_.at(w).op;
    r.prune_absolute(0.0);
    return r;
  }

  // ||O||_mu = sup_alpha sum_{S contains alpha} ||O_S|| e^{mu |S|}.
  double word_norm(double mu) const {
    std::vector<double> acc(n_checks_, 0.0);
    for (const auto& [w, e] : entries_) {
      double v = e.norm() * std::exp(mu * static_cast<double>(w.size()));
      w.set().for_each([&](int a) { acc[static_cast<std::size_t>(a)] += v; });
    }
    double best = 0.0;
    for (double x : acc) best = std::max(best, x);
    return best;
  }

  // sum_S ||O_S||, an upper bound on the operator norm of the extensive sum.
  double sum_of_norms() const {
    double s = 0.0;
    for (const auto& [w, e] : entries_) s += e.norm();
    return s;
  }

  double sum_of_norm_bounds() const {
    double s = 0.0;
    for (const auto& [w, e] : entries_) s += e.norm_bound();
    return s;
  }

  std::size_t max_word_size() const {
    std::size_t m = 0;
    for (const auto& [w, e] : entries_) m = std::max(m, w.size());
    return m;
  }

 private:
  std::size_t n_qubits_ = 0;
  std::size_t n_checks_ = 0;
  Map entries_;
};

// H0 = sum_alpha E_alpha as the collection {e: alpha} -> E_alpha.
inline OperatorCollection h0_collection(const StabilizerCode& code) {
  OperatorCollection c(code.n(), code.num_checks());
  for (std::size_t a = 0; a < code.num_checks(); ++a) {
    PauliOperator ea = PauliOperator::identity(code.n(), 0.5);
    ea.add(code.check(a), -0.5);
    Word w;
    w.e.set(a);
    c.add(w, ea);
  }
  return c;
}

// ---- decomposition ----

struct Decomposition {
  OperatorCollection collection;
  cplx identity = 0.0;          // coefficient of the identity string, split off as a scalar
  bool covers_exact = true;     // false when some cover used the approximation
  double max_inflation = 1.0;   // max |M(p)| / |supp(p)|
};

class Decomposer {
 public:
  Decomposer(const StabilizerCode& code, const InteractionGraphs& g) : code_(code), g_(g), ap_(all_pairs(g.qubit_adj)) {}

  const AllPairs& all_pairs_table() const { return ap_; }

  Cover cover(const Mask& support) const { return connected_cover(g_.qubit_adj, ap_, support); }

  // S = ext(p) = checks on M(p).
  Mask ext(const Mask& support, bool* exact = nullptr) const {
    Cover c = cover(support);
    if (exact) *exact = c.exact;
    return code_.checks_on(c.set);
  }

  // Words of a single Pauli term: each check of ext(p) that anticommutes with p is + or -,
  // each commuting one e or g; the class element is c p prod_alpha right_alpha.
  void decompose_term(const PauliKey& k, cplx c, OperatorCollection& out, bool* exact = nullptr) const {
    Mask s = ext(k.support(), exact);
    if (s.none()) throw std::invalid_argument("decompose: Pauli term on qubits with no checks");
    std::vector<int> checks = s.indices();
    std::vector<bool> flips(checks.size());
    for (std::size_t i = 0; i < checks.size(); ++i) {
      const auto& ch = code_.check(static_cast<std::size_t>(checks[i]));
      flips[i] = symplectic_odd(k.x, k.z, ch.x(), ch.z());
    }
    PauliOperator start(code_.n());
    start.add_key(k, c);
    Word w;
    std::function<void(std::size_t, const PauliOperator&)> rec = [&](std::size_t i, const PauliOperator& op) {
      if (op.empty()) return;
      if (i == checks.size()) {
        out.add(w, op);
        return;
      }
      auto a = static_cast<std::size_t>(checks[i]);
      for (int ground = 1; ground >= 0; --ground) {
        PauliOperator next = times_projector(op, code_.check(a), ground == 1, false);
        // right G with a flip: +; right E with a flip: -; right G without: g; right E without: e.
        Mask* slot = flips[i] ? (ground ? &w.plus : &w.minus) : (ground ? &w.g : &w.e);
        slot->set(a);
        rec(i + 1, next);
        slot->reset(a);
      }
    };
    rec(0, start);
  }

  Decomposition decompose(const PauliOperator& op) const {
    Decomposition d;
    d.collection = OperatorCollection(code_.n(), code_.num_checks());
    for (const auto& [k, c] : op.sorted_terms()) {
      if (c == cplx(0.0)) continue;
      Mask supp = k.support();
      if (supp.none()) {
        d.identity += c;
        continue;
      }
      bool exact = true;
      Cover cv = cover(supp);
      d.max_inflation = std::max(d.max_inflation, static_cast<double>(cv.set.count()) / static_cast<double>(supp.count()));
      decompose_term(k, c, d.collection, &exact);
      d.covers_exact = d.covers_exact && exact;
    }
    d.collection.prune();
    return d;
  }

  // |||O|||_mu = sup_x sum_{p : x in supp p} |c_p| e^{mu |M(p)|}.
  double pauli_norm(const PauliOperator& op, double mu) const {
    std::vector<double> acc(code_.n(), 0.0);
    for (const auto& [k, c] : op.terms()) {
      Mask supp = k.support();
      if (supp.none() || c == cplx(0.0)) continue;
      double v = std::abs(c) * std::exp(mu * static_cast<double>(cover(supp).set.count()));
      supp.for_each([&](int q) { acc[static_cast<std::size_t>(q)] += v; });
    }
    double best = 0.0;
    for (double x : acc) best = std::max(best, x);
    return best;
  }

 private:
  const StabilizerCode& code_;
  const InteractionGraphs& g_;
  AllPairs ap_;
};

// ---- commutator of collections ----

struct CommutatorResult {
  OperatorCollection collection;
  double dropped = 0.0;        // 1-norm of entries removed as cancellation noise
  double skipped_bound = 0.0;  // sum of ||x|| ||y|| over products not formed
};

// ([a,b])_S = sum over S = S1 S2 with S1, S2 overlapping of a_{S1} b_{S2} - b_{S1} a_{S2}.
// Products with |S| >= max_size (when max_size > 0) or with ||x||_1 ||y||_1 <= skip_below are not formed;
// only their norm bound is kept.
inline CommutatorResult collection_commutator(const OperatorCollection& a, const OperatorCollection& b,
                                              double cancel_rel = 1e-13, std::size_t max_size = 0,
                                              double skip_below = 0.0) {
  CommutatorResult res;
  res.collection = OperatorCollection(std::max(a.n_qubits(), b.n_qubits()), std::max(a.n_checks(), b.n_checks()));
  std::size_t nc = res.collection.n_checks();
  std::vector<const WordOperator*> bl;
  std::vector<std::vector<std::size_t>> by_check(nc);
  for (const auto& w : b.sorted_words()) {
    bl.push_back(b.find(w));
    bl.back()->word.set().for_each([&](int c) { by_check[static_cast<std::size_t>(c)].push_back(bl.size() - 1); });
  }
  std::vector<double> b_norm(bl.size());
  for (std::size_t j = 0; j < bl.size(); ++j) b_norm[j] = bl[j]->op.one_norm();
  // gross[w] bounds the 1-norm of all contributions to w before cancellation.
  std::unordered_map<Word, double, WordHash> gross;
  std::vector<std::size_t> stamp(bl.size(), 0);
  std::size_t tick = 0;
  for (const auto& wa : a.sorted_words()) {
    const WordOperator* x = a.find(wa);
    double x_norm = x->op.one_norm();
    ++tick;
    std::vector<std::size_t> cand;
    wa.set().for_each([&](int c) {
      for (auto j : by_check[static_cast<std::size_t>(c)])
        if (stamp[j] != tick) {
          stamp[j] = tick;
          cand.push_back(j);
        }
    });
    std::sort(cand.begin(), cand.end());
    for (auto j : cand) {
      const WordOperator* y = bl[j];
      double bound = x_norm * b_norm[j];
      auto product = [&](const std::optional<Word>& w, const PauliOperator& l, const PauliOperator& r, double s) {
        if (!w) return;
        if ((max_size > 0 && w->size() >= max_size) || bound <= skip_below) {
          res.skipped_bound += bound;
          return;
        }
        gross[*w] += bound;
        PauliOperator::multiply_into(l, r, s, res.collection.accumulate(*w));
      };
      product(word_multiply(x->word, y->word), x->op, y->op, 1.0);
      product(word_multiply(y->word, x->word), y->op, x->op, -1.0);
    }
  }
  OperatorCollection cleaned(res.collection.n_qubits(), nc);
  for (const auto& w : res.collection.sorted_words()) {
    PauliOperator op = res.collection.find(w)->op;
    res.dropped += op.prune(1e-14);
    double g = gross[w];
    double n1 = op.one_norm();
    if (op.empty() || n1 <= cancel_rel * g) {
      res.dropped += n1;
      continue;
    }
    cleaned.add(w, op);
  }
  res.collection = std::move(cleaned);
  return res;
}

// ---- splitting ----

enum class WordClass { VPlus, VMinus, Ghost, D };

inline WordClass classify(const Word& w) {
  if (w.e.any()) return WordClass::D;
  bool p = w.plus.any(), m = w.minus.any();
  if (p && m) return WordClass::D;
  if (p) return WordClass::VPlus;
  if (m) return WordClass::VMinus;
  return WordClass::Ghost;
}

struct SplitCollections {
  OperatorCollection d_part, v_plus, v_minus, m_part;
  OperatorCollection overflow;  // words with |S| >= d_*
};

inline SplitCollections split_collection(const OperatorCollection& z, std::size_t d_star) {
  std::size_t nq = z.n_qubits(), nc = z.n_checks();
  SplitCollections s{OperatorCollection(nq, nc), OperatorCollection(nq, nc), OperatorCollection(nq, nc),
                     OperatorCollection(nq, nc), OperatorCollection(nq, nc)};
  for (const auto& [w, e] : z.entries()) {
    OperatorCollection* dst = nullptr;
    if (w.size() >= d_star) {
      dst = &s.overflow;
    } else {
      switch (classify(w)) {
        case WordClass::D: dst = &s.d_part; break;
        case WordClass::VPlus: dst = &s.v_plus; break;
        case WordClass::VMinus: dst = &s.v_minus; break;
        case WordClass::Ghost: dst = &s.m_part; break;
      }
    }
    dst->add_entry(e);
  }
  return s;
}

inline OperatorCollection merge(std::initializer_list<const OperatorCollection*> parts) {
  OperatorCollection r;
  bool first = true;
  for (const auto* p : parts) {
    if (first) {
      r = OperatorCollection(p->n_qubits(), p->n_checks());
      first = false;
    }
    for (const auto& [w, e] : p->entries()) r.add_entry(e);
  }
  return r;
}

}  // namespace qkam
