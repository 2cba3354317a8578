#pragma once

#include "qkam/bits.hpp"
#include "qkam/codes.hpp"
#include "qkam/graphs.hpp"

#include <algorithm>
#include <cstdint>
#include <limits>
#include <optional>
#include <stdexcept>
#include <vector>

namespace qkam {

struct LocalGroupResult {
  Mask region;                      // S (checks)
  Mask qubits;                      // supp(S)
  std::vector<BitVec> generators;   // exponent vectors spanning G(S)
  std::vector<BitVec> not_local;    // generators whose Pauli is outside the span of G_S
  int r_min = 0;                    // smallest r with G(S) inside G_{B_r(S)}
};

// Span of the symplectic rows of the checks in `checks`.
inline Gf2Basis check_span(const StabilizerCode& code, const Mask& checks) {
  Gf2Basis b(2 * code.n(), code.num_checks());
  checks.for_each([&](int a) { b.insert_generator(code.symplectic_row(static_cast<std::size_t>(a)), static_cast<std::size_t>(a)); });
  return b;
}

inline BitVec exponent_image(const StabilizerCode& code, const BitVec& e) {
  BitVec v(2 * code.n());
  for (int a : e.indices()) v ^= code.symplectic_row(static_cast<std::size_t>(a));
  return v;
}

// G(S) = {p in G : supp(p) in supp(S)} as the kernel of the check map restricted to
// coordinates outside supp(S); r_min found by growing the check-graph ball from S.
inline LocalGroupResult local_group(const StabilizerCode& code, const InteractionGraphs& g, const Mask& region,
                                    int r_limit = -1) {
  LocalGroupResult res;
  res.region = region;
  res.qubits = code.qubit_support(region);
  std::size_t n = code.n(), m = code.num_checks();
  Gf2Basis outside(2 * n, m);
  for (std::size_t a = 0; a < m; ++a) {
    BitVec v(2 * n);
    Mask x = code.check(a).x().minus(res.qubits), z = code.check(a).z().minus(res.qubits);
    x.for_each([&](int q) { v.set(static_cast<std::size_t>(q)); });
    z.for_each([&](int q) { v.set(n + static_cast<std::size_t>(q)); });
    if (auto dep = outside.insert_generator(v, a)) res.generators.push_back(*dep);
  }
  std::vector<BitVec> images;
  for (const auto& e : res.generators) images.push_back(exponent_image(code, e));
  {
    Gf2Basis span = check_span(code, region);
    for (std::size_t i = 0; i < images.size(); ++i)
      if (!span.contains(images[i])) res.not_local.push_back(res.generators[i]);
  }
  if (res.not_local.empty()) return res;
  auto dist = bfs_distances(g.check_adj, region);
  int dmax = 0;
  for (int d : dist) dmax = std::max(dmax, d);
  if (r_limit < 0) r_limit = dmax;
  for (int r = 1; r <= r_limit; ++r) {
    Mask ballr;
    for (std::size_t a = 0; a < m; ++a)
      if (dist[a] >= 0 && dist[a] <= r) ballr.set(a);
    Gf2Basis span = check_span(code, ballr);
    bool all = true;
    for (const auto& v : images)
      if (!span.contains(v)) {
        all = false;
        break;
      }
    if (all) {
      res.r_min = r;
      return res;
    }
  }
  // Unreachable within r_limit: generators need checks in another component or beyond the limit.
  res.r_min = std::numeric_limits<int>::max();
  return res;
}

// Connected vertex sets of size 1..max_size, each exactly once (ESU enumeration:
// extensions restricted to vertices above the root and outside the current
// neighbourhood, taken in ascending order). Stops after `count_cap` sets.
template <class F>
std::uint64_t enumerate_connected_sets(const Adjacency& adj, std::size_t max_size, std::uint64_t count_cap, F&& visit) {
  std::uint64_t count = 0;
  std::vector<Mask> nbr(adj.size());
  for (std::size_t v = 0; v < adj.size(); ++v)
    for (int u : adj[v]) nbr[v].set(static_cast<std::size_t>(u));
  bool stop = false;
  auto extend = [&](auto&& self, const Mask& sub, std::size_t size, Mask ext, const Mask& closed, int root) -> void {
    if (stop) return;
    if (count >= count_cap) {
      stop = true;
      return;
    }
    ++count;
    visit(sub, size);
    if (size >= max_size) return;
    while (ext.any() && !stop) {
      int w = ext.first();
      ext.reset(static_cast<std::size_t>(w));
      Mask fresh = nbr[static_cast<std::size_t>(w)].minus(closed);
      Mask ext2 = ext;
      fresh.for_each([&](int u) {
        if (u > root) ext2.set(static_cast<std::size_t>(u));
      });
      Mask sub2 = sub;
      sub2.set(static_cast<std::size_t>(w));
      self(self, sub2, size + 1, ext2, closed | fresh, root);
    }
  };
  for (std::size_t v = 0; v < adj.size() && !stop; ++v) {
    Mask sub = Mask::single(v);
    Mask ext;
    nbr[v].for_each([&](int u) {
      if (u > static_cast<int>(v)) ext.set(static_cast<std::size_t>(u));
    });
    extend(extend, sub, 1, ext, sub | nbr[v], static_cast<int>(v));
  }
  return count;
}

struct Tqo2Violation {
  Mask region;
  int radius = 0;
  std::vector<BitVec> witnesses;
};

struct Tqo2Result {
  std::size_t size_cap = 0;
  double ell_max = 1.0;
  std::size_t d_tilde = 0;
  bool d_tilde_exact = true;  // false when enumeration was truncated
  double ell = 0.0;           // max r(S)/|S| over S with |S| < d_tilde
  double ell_all = 0.0;       // same over every enumerated S
  std::uint64_t sets = 0;
  bool truncated = false;
  std::vector<std::size_t> sets_per_size;
  std::vector<int> max_radius_per_size;
  std::vector<Tqo2Violation> violations;
};

// For every connected check set S with |S| < size_cap: r(S), the smallest radius with
// G(S) inside G_{B_r(S)}. A violation is r(S) > ell_max * |S|; d_tilde is the smallest
// violating size, or size_cap when none occurs.
inline Tqo2Result check_tqo2(const StabilizerCode& code, const InteractionGraphs& g, std::size_t size_cap,
                             double ell_max = 1.0, std::uint64_t count_cap = 1'000'000) {
  if (size_cap < 2) throw std::invalid_argument("check_tqo2: size_cap < 2");
  Tqo2Result res;
  res.size_cap = size_cap;
  res.ell_max = ell_max;
  res.sets_per_size.assign(size_cap, 0);
  res.max_radius_per_size.assign(size_cap, 0);
  struct Rec {
    std::size_t size;
    int r;
  };
  std::vector<Rec> recs;
  res.sets = enumerate_connected_sets(g.check_adj, size_cap - 1, count_cap, [&](const Mask& s, std::size_t size) {
    auto lg = local_group(code, g, s);
    recs.push_back({size, lg.r_min});
    ++res.sets_per_size[size];
    res.max_radius_per_size[size] = std::max(res.max_radius_per_size[size], lg.r_min);
    if (static_cast<double>(lg.r_min) > ell_max * static_cast<double>(size))
      res.violations.push_back({s, lg.r_min, lg.not_local});
  });
  res.truncated = res.sets >= count_cap;
  res.d_tilde = size_cap;
  for (const auto& v : res.violations) res.d_tilde = std::min(res.d_tilde, v.region.count());
  res.d_tilde_exact = !res.truncated;
  for (const auto& r : recs) {
    double ratio = r.r == std::numeric_limits<int>::max() ? std::numeric_limits<double>::infinity()
                                                          : static_cast<double>(r.r) / static_cast<double>(r.size);
    res.ell_all = std::max(res.ell_all, ratio);
    if (r.size < res.d_tilde) res.ell = std::max(res.ell, ratio);
  }
  return res;
}

struct SoundnessResult {
  double gamma = std::numeric_limits<double>::infinity();
  Mask witness;  // rows combined
  std::size_t weight_cap = 0;
  bool cap_limited = true;
  std::uint64_t candidates = 0;
};

// gamma = min over 0 < |x| <= weight_cap of |H^T x| / |x|, x indexing rows of H.
inline SoundnessResult soundness_gamma(const Gf2Matrix& h, std::size_t weight_cap, std::uint64_t budget = 100'000'000) {
  SoundnessResult res;
  res.weight_cap = std::min(weight_cap, h.rows());
  res.cap_limited = res.weight_cap < h.rows();
  if (h.cols() > kMaxBits) throw BudgetExceeded("soundness_gamma: more than kMaxBits columns");
  std::vector<Mask> rows;
  for (std::size_t r = 0; r < h.rows(); ++r) rows.push_back(h.row(r).to_mask());
  for (std::size_t w = 1; w <= res.weight_cap; ++w) {
    detail::for_each_subset(h.rows(), w, [&](const Mask& x) {
      if (++res.candidates > budget) throw BudgetExceeded("soundness_gamma: candidate budget exhausted");
      Mask s;
      x.for_each([&](int r) { s ^= rows[static_cast<std::size_t>(r)]; });
      double ratio = static_cast<double>(s.count()) / static_cast<double>(w);
      if (ratio < res.gamma) {
        res.gamma = ratio;
        res.witness = x;
      }
      return true;
    });
  }
  return res;
}

}  // namespace qkam
