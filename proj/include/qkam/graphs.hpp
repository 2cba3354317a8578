#pragma once

#include "qkam/bits.hpp"
#include "qkam/codes.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <limits>
#include <queue>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace qkam {

using Adjacency = std::vector<std::vector<int>>;

struct InteractionGraphs {
  std::size_t n_qubits = 0;
  std::size_t n_checks = 0;
  Adjacency qubit_adj;
  Adjacency check_adj;
  std::size_t w_q = 0;  // max number of checks on a qubit
  std::size_t w_c = 0;  // max number of qubits in a check
  std::vector<int> idle_qubits;
};

inline InteractionGraphs build_graphs(const StabilizerCode& code) {
  InteractionGraphs g;
  g.n_qubits = code.n();
  g.n_checks = code.num_checks();
  std::vector<Mask> qn(code.n()), cn(code.num_checks());
  for (std::size_t a = 0; a < code.num_checks(); ++a) {
    Mask s = code.check_support(a);
    g.w_c = std::max(g.w_c, s.count());
    s.for_each([&](int q) {
      qn[static_cast<std::size_t>(q)] |= s;
      cn[a] |= code.checks_on(static_cast<std::size_t>(q));
    });
  }
  g.qubit_adj.resize(code.n());
  for (std::size_t q = 0; q < code.n(); ++q) {
    Mask m = qn[q];
    m.reset(q);
    g.qubit_adj[q] = m.indices();
    std::size_t deg = code.checks_on(q).count();
    g.w_q = std::max(g.w_q, deg);
    if (deg == 0) g.idle_qubits.push_back(static_cast<int>(q));
  }
  g.check_adj.resize(code.num_checks());
  for (std::size_t a = 0; a < code.num_checks(); ++a) {
    Mask m = cn[a];
    m.reset(a);
    g.check_adj[a] = m.indices();
  }
  return g;
}

// BFS distances from a set of sources; unreachable vertices get -1.
inline std::vector<int> bfs_distances(const Adjacency& adj, const Mask& sources) {
  std::vector<int> d(adj.size(), -1);
  std::queue<int> q;
  sources.for_each([&](int s) {
    d[static_cast<std::size_t>(s)] = 0;
    q.push(s);
  });
  while (!q.empty()) {
    int u = q.front();
    q.pop();
    for (int v : adj[static_cast<std::size_t>(u)])
      if (d[static_cast<std::size_t>(v)] < 0) {
        d[static_cast<std::size_t>(v)] = d[static_cast<std::size_t>(u)] + 1;
        q.push(v);
      }
  }
  return d;
}

inline std::vector<int> bfs_distances(const Adjacency& adj, int source) {
  return bfs_distances(adj, Mask::single(static_cast<std::size_t>(source)));
}

// B_r(S): vertices within graph distance r of S.
inline Mask ball(const Adjacency& adj, const Mask& centers, int r) {
  auto d = bfs_distances(adj, centers);
  Mask m;
  for (std::size_t v = 0; v < d.size(); ++v)
    if (d[v] >= 0 && d[v] <= r) m.set(v);
  return m;
}

inline bool is_connected(const Adjacency& adj, const Mask& set) {
  int s = set.first();
  if (s < 0) return true;
  Mask seen = Mask::single(static_cast<std::size_t>(s));
  std::vector<int> stack{s};
  while (!stack.empty()) {
    int u = stack.back();
    stack.pop_back();
    for (int v : adj[static_cast<std::size_t>(u)])
      if (set.test(static_cast<std::size_t>(v)) && !seen.test(static_cast<std::size_t>(v))) {
        seen.set(static_cast<std::size_t>(v));
        stack.push_back(v);
      }
  }
  return seen == set;
}

struct GrowthProfile {
  int r_max = 0;
  std::vector<std::size_t> qubit_ball;  // index r: max |B_r| over centers
  std::vector<std::size_t> check_ball;
  std::vector<double> kappa_per_radius;  // max over both graphs of log|B_r|/r
  double kappa = 0.0;
  double fallback = 0.0;  // log(w_c * w_q + 1)
};

inline GrowthProfile ball_and_kappa(const InteractionGraphs& g, int r_max) {
  if (r_max < 1) throw std::invalid_argument("ball_and_kappa: r_max < 1");
  GrowthProfile p;
  p.r_max = r_max;
  auto sweep = [&](const Adjacency& adj, std::vector<std::size_t>& best) {
    best.assign(static_cast<std::size_t>(r_max) + 1, 0);
    for (std::size_t c = 0; c < adj.size(); ++c) {
      auto d = bfs_distances(adj, static_cast<int>(c));
      std::vector<std::size_t> cnt(static_cast<std::size_t>(r_max) + 1, 0);
      for (int x : d)
        if (x >= 0 && x <= r_max) ++cnt[static_cast<std::size_t>(x)];
      std::size_t acc = 0;
      for (int r = 0; r <= r_max; ++r) {
        acc += cnt[static_cast<std::size_t>(r)];
        best[static_cast<std::size_t>(r)] = std::max(best[static_cast<std::size_t>(r)], acc);
      }
    }
  };
  sweep(g.qubit_adj, p.qubit_ball);
  sweep(g.check_adj, p.check_ball);
  p.kappa_per_radius.assign(static_cast<std::size_t>(r_max) + 1, 0.0);
  for (int r = 1; r <= r_max; ++r) {
    auto ur = static_cast<std::size_t>(r);
    double k = std::max(std::log(static_cast<double>(std::max<std::size_t>(p.qubit_ball[ur], 1))),
                        std::log(static_cast<double>(std::max<std::size_t>(p.check_ball[ur], 1)))) /
               r;
    p.kappa_per_radius[ur] = k;
    p.kappa = std::max(p.kappa, k);
  }
  p.fallback = std::log(static_cast<double>(g.w_c * g.w_q + 1));
  return p;
}

// ---- minimal connected cover M(p) ----

struct Cover {
  Mask set;
  bool exact = true;
};

// All-pairs BFS distances and lowest-index BFS parents, for repeated cover queries.
struct AllPairs {
  std::vector<std::vector<int>> dist;
  std::vector<std::vector<int>> parent;  // parent[root][v]
};

inline AllPairs all_pairs(const Adjacency& adj) {
  AllPairs ap;
  std::size_t nv = adj.size();
  ap.dist.assign(nv, std::vector<int>(nv, -1));
  ap.parent.assign(nv, std::vector<int>(nv, -1));
  for (std::size_t r = 0; r < nv; ++r) {
    auto& d = ap.dist[r];
    auto& par = ap.parent[r];
    std::queue<int> q;
    d[r] = 0;
    q.push(static_cast<int>(r));
    while (!q.empty()) {
      int u = q.front();
      q.pop();
      for (int v : adj[static_cast<std::size_t>(u)])
        if (d[static_cast<std::size_t>(v)] < 0) {
          d[static_cast<std::size_t>(v)] = d[static_cast<std::size_t>(u)] + 1;
          par[static_cast<std::size_t>(v)] = u;
          q.push(v);
        }
    }
  }
  return ap;
}

namespace detail {

inline void add_path(const std::vector<int>& parent, int target, Mask& out) {
  for (int v = target; v >= 0; v = parent[static_cast<std::size_t>(v)]) out.set(static_cast<std::size_t>(v));
}

}  // namespace detail

// Minimal connected vertex set containing `terminals`. Exact for up to 4 terminals
// (Steiner topologies with at most two branch points); above that, a metric-closure
// MST 2-approximation flagged as inexact.
inline Cover connected_cover(const Adjacency& adj, const AllPairs& ap, const Mask& terminals) {
  std::vector<int> t = terminals.indices();
  Cover c;
  if (t.size() <= 1 || is_connected(adj, terminals)) {
    c.set = terminals;
    return c;
  }
  const int inf = std::numeric_limits<int>::max() / 4;
  std::size_t nv = adj.size();
  auto d = [&](int a, int b) {
    int x = ap.dist[static_cast<std::size_t>(a)][static_cast<std::size_t>(b)];
    return x < 0 ? inf : x;
  };
  for (std::size_t i = 1; i < t.size(); ++i)
    if (d(t[0], t[i]) >= inf) throw std::invalid_argument("connected_cover: terminals in different components");
  if (t.size() <= 4) {
    int best = inf;
    Mask best_set;
    auto consider = [&](int cost, std::initializer_list<std::pair<int, int>> paths) {
      if (cost >= best) return;
      best = cost;
      best_set = Mask{};
      for (auto [root, target] : paths) detail::add_path(ap.parent[static_cast<std::size_t>(root)], target, best_set);
    };
    if (t.size() == 2) {
      consider(d(t[0], t[1]), {{t[0], t[1]}});
    } else if (t.size() == 3) {
      for (int u = 0; u < static_cast<int>(nv); ++u)
        consider(d(u, t[0]) + d(u, t[1]) + d(u, t[2]), {{u, t[0]}, {u, t[1]}, {u, t[2]}});
    } else {
      const int pairings[3][4] = {{0, 1, 2, 3}, {0, 2, 1, 3}, {0, 3, 1, 2}};
      for (const auto& pr : pairings) {
        int a = t[static_cast<std::size_t>(pr[0])], b = t[static_cast<std::size_t>(pr[1])];
        int e = t[static_cast<std::size_t>(pr[2])], f = t[static_cast<std::size_t>(pr[3])];
        for (int u = 0; u < static_cast<int>(nv); ++u) {
          int du = d(u, a) + d(u, b);
          if (du >= best) continue;
          for (int v = 0; v < static_cast<int>(nv); ++v) {
            int cost = du + d(u, v) + d(v, e) + d(v, f);
            if (cost < best) consider(cost, {{u, a}, {u, b}, {u, v}, {v, e}, {v, f}});
          }
        }
      }
    }
    c.set = best_set;
    return c;
  }
  std::vector<bool> in(t.size(), false);
  std::vector<int> key(t.size(), inf), from(t.size(), -1);
  key[0] = 0;
  Mask set;
  for (std::size_t it = 0; it < t.size(); ++it) {
    std::size_t u = t.size();
    for (std::size_t i = 0; i < t.size(); ++i)
      if (!in[i] && (u == t.size() || key[i] < key[u])) u = i;
    in[u] = true;
    if (from[u] >= 0) detail::add_path(ap.parent[static_cast<std::size_t>(t[static_cast<std::size_t>(from[u])])], t[u], set);
    for (std::size_t i = 0; i < t.size(); ++i) {
      int dd = d(t[u], t[i]);
      if (!in[i] && dd < key[i]) {
        key[i] = dd;
        from[i] = static_cast<int>(u);
      }
    }
  }
  set |= terminals;
  c.set = set;
  c.exact = false;
  return c;
}

inline Cover connected_cover(const Adjacency& adj, const Mask& terminals) {
  return connected_cover(adj, all_pairs(adj), terminals);
}

// ---- distances ----

struct DistanceResult {
  std::size_t value = 0;  // exact distance, or cap + 1 as a lower bound
  bool exact = true;
  std::size_t cap = 0;
  std::uint64_t candidates = 0;
  Mask witness_x, witness_z;
};

enum class DistanceMode { Quantum, Symmetric };

namespace detail {

// Calls f(mask) for every subset of {0..n-1} of size w in lexicographic order; stops if f returns false.
template <class F>
bool for_each_subset(std::size_t n, std::size_t w, F&& f) {
  if (w > n) return true;
  std::vector<std::size_t> idx(w);
  for (std::size_t i = 0; i < w; ++i) idx[i] = i;
  while (true) {
    Mask m;
    for (auto i : idx) m.set(i);
    if (!f(m)) return false;
    std::size_t i = w;
    while (i > 0 && idx[i - 1] == n - w + i - 1) --i;
    if (i == 0) return true;
    ++idx[i - 1];
    for (std::size_t j = i; j < w; ++j) idx[j] = idx[j - 1] + 1;
  }
}

inline bool even_against_all(const Mask& v, const std::vector<Mask>& rows) {
  for (const auto& r : rows)
    if (v.odd_overlap(r)) return false;
  return true;
}

}  // namespace detail

// Minimum weight of a Pauli commuting with every check but outside the group (quantum),
// or of a nonzero kernel word of the parity matrix (symmetric). Search by increasing weight.
inline DistanceResult code_distance(const StabilizerCode& code, DistanceMode mode, std::size_t weight_cap = 8,
                                    std::uint64_t budget = 200'000'000) {
  DistanceResult res;
  res.cap = weight_cap;
  std::size_t n = code.n();
  if (mode == DistanceMode::Symmetric) {
    if (!code.is_classical()) throw std::invalid_argument("code_distance: symmetric mode needs a classical code");
    std::vector<Mask> rows;
    for (const auto& c : code.checks()) rows.push_back(c.z());
    for (std::size_t w = 1; w <= weight_cap; ++w) {
      bool found = !detail::for_each_subset(n, w, [&](const Mask& m) {
        if (++res.candidates > budget) return false;
        if (detail::even_against_all(m, rows)) {
          res.witness_x = m;
          return false;
        }
        return true;
      });
      if (res.candidates > budget) throw BudgetExceeded("code_distance: candidate budget exhausted");
      if (found) {
        res.value = w;
        return res;
      }
    }
    res.value = weight_cap + 1;
    res.exact = false;
    return res;
  }

  bool css = code.kind() != CodeKind::QuantumGeneral;
  for (const auto& c : code.checks())
    if (c.x().any() && c.z().any()) css = false;
  if (css) {
    // X-type logicals: commute with Z checks, not in the X-check span. Z-type symmetric.
    std::vector<Mask> xrows, zrows;
    MaskBasis xspan, zspan;
    for (const auto& c : code.checks()) {
      if (c.x().any()) {
        xrows.push_back(c.x());
        xspan.insert(c.x(), Mask{});
      } else {
        zrows.push_back(c.z());
        zspan.insert(c.z(), Mask{});
      }
    }
    for (std::size_t w = 1; w <= weight_cap; ++w) {
      bool found = !detail::for_each_subset(n, w, [&](const Mask& m) {
        if (++res.candidates > budget) return false;
        if (detail::even_against_all(m, zrows) && !xspan.contains(m)) {
          res.witness_x = m;
          return false;
        }
        if (detail::even_against_all(m, xrows) && !zspan.contains(m)) {
          res.witness_z = m;
          return false;
        }
        return true;
      });
      if (res.candidates > budget) throw BudgetExceeded("code_distance: candidate budget exhausted");
      if (found) {
        res.value = w;
        return res;
      }
    }
    res.value = weight_cap + 1;
    res.exact = false;
    return res;
  }

  // General stabilizer code: every support of weight w with every assignment of X/Y/Z.
  Gf2Basis span(2 * n, code.num_checks());
  for (std::size_t a = 0; a < code.num_checks(); ++a) span.insert_generator(code.symplectic_row(a), a);
  for (std::size_t w = 1; w <= weight_cap; ++w) {
    bool found = !detail::for_each_subset(n, w, [&](const Mask& supp) {
      std::vector<int> q = supp.indices();
      std::uint64_t total = 1;
      for (std::size_t i = 0; i < w; ++i) total *= 3;
      for (std::uint64_t code_word = 0; code_word < total; ++code_word) {
        if (++res.candidates > budget) return false;
        Mask x, z;
        std::uint64_t c = code_word;
        for (int qq : q) {
          auto uq = static_cast<std::size_t>(qq);
          switch (c % 3) {
            case 0: x.set(uq); break;
            case 1: z.set(uq); break;
            default:
              x.set(uq);
              z.set(uq);
          }
          c /= 3;
        }
        bool ok = true;
        for (const auto& chk : code.checks())
          if (symplectic_odd(x, z, chk.x(), chk.z())) {
            ok = false;
            break;
          }
        if (ok && !span.contains(code.symplectic(x, z))) {
          res.witness_x = x;
          res.witness_z = z;
          return false;
        }
      }
      return true;
    });
    if (res.candidates > budget) throw BudgetExceeded("code_distance: candidate budget exhausted");
    if (found) {
      res.value = w;
      return res;
    }
  }
  res.value = weight_cap + 1;
  res.exact = false;
  return res;
}

// d_sym by enumerating the span of a kernel basis (feasible for small K).
inline std::size_t symmetric_distance_by_kernel(const StabilizerCode& code) {
  auto ker = code.parity_matrix().kernel();
  if (ker.empty()) return 0;
  if (ker.size() > 24) throw BudgetExceeded("symmetric_distance_by_kernel: kernel dimension above 24");
  std::size_t best = std::numeric_limits<std::size_t>::max();
  std::uint64_t total = std::uint64_t{1} << ker.size();
  for (std::uint64_t s = 1; s < total; ++s) {
    BitVec v(code.n());
    for (std::size_t i = 0; i < ker.size(); ++i)
      if ((s >> i) & 1u) v ^= ker[i];
    best = std::min(best, v.count());
  }
  return best;
}

struct DStar {
  std::size_t value = 1;
  bool lower_bound = false;
  double raw = 0.0;  // min(d / w_c, d_tilde) before rounding
};

// d_* = max(1, floor(min(d / w_c, d_tilde))).
inline DStar d_star(std::size_t distance, bool distance_exact, std::size_t w_c, std::size_t d_tilde, bool d_tilde_exact) {
  if (w_c == 0) throw std::invalid_argument("d_star: w_c = 0");
  DStar r;
  r.raw = std::min(static_cast<double>(distance) / static_cast<double>(w_c), static_cast<double>(d_tilde));
  r.value = std::max<std::size_t>(1, static_cast<std::size_t>(std::floor(r.raw)));
  r.lower_bound = !distance_exact || !d_tilde_exact;
  return r;
}

}  // namespace qkam
