#pragma once

#include "qkam/codes.hpp"
#include "qkam/graphs.hpp"
#include "qkam/kam.hpp"
#include "qkam/linalg.hpp"
#include "qkam/pauli.hpp"
#include "qkam/words.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <tuple>
#include <vector>

namespace qkam {

// ---- exact spectra ----

struct Spectrum {
  std::vector<double> values;
  std::vector<VecC> vectors;  // filled when requested
  std::vector<double> residuals;
  double scale = 0.0;  // spectral scale used for residual checks
  bool dense = true;
};

// All eigenvalues (count == 0, dense) or the lowest `count` (dense up to 10 qubits, Lanczos beyond).
inline Spectrum exact_spectrum(const PauliOperator& h, std::size_t n_qubits, std::size_t count = 0,
                               bool want_vectors = false, const Caps& caps = {}) {
  if (!h.is_hermitian()) throw std::invalid_argument("exact_spectrum: operator is not Hermitian");
  Spectrum s;
  s.scale = std::max(h.one_norm(), 1.0);
  std::size_t dim = std::size_t{1} << n_qubits;
  bool dense = count == 0 || n_qubits <= 10;
  if (dense && n_qubits > caps.dense_qubits) throw BudgetExceeded("exact_spectrum: beyond the dense cap");
  if (!dense && n_qubits > caps.sparse_qubits) throw BudgetExceeded("exact_spectrum: beyond the sparse cap");
  if (count == 0 || count > dim) count = dim;
  s.dense = dense;
  if (dense) {
    MatC m = h.dense(n_qubits);
    Eigen::SelfAdjointEigenSolver<MatC> es(m, want_vectors ? Eigen::ComputeEigenvectors : Eigen::EigenvaluesOnly);
    for (std::size_t i = 0; i < count; ++i) {
      auto ii = static_cast<Eigen::Index>(i);
      s.values.push_back(es.eigenvalues()[ii]);
      if (want_vectors) {
        VecC v = es.eigenvectors().col(ii);
        s.residuals.push_back((m * v - es.eigenvalues()[ii] * v).norm());
        s.vectors.push_back(std::move(v));
      } else {
        s.residuals.push_back(0.0);
      }
    }
    return s;
  }
  SpMatC m = h.sparse(n_qubits);
  LanczosOptions opt;
  opt.tol = 1e-12;
  opt.max_krylov = std::min<std::size_t>(dim, 250);
  opt.max_restarts = 12;
  auto r = lanczos_lowest([&](const VecC& v, VecC& out) { out.noalias() = m * v; }, dim, count, opt);
  s.values = r.values;
  s.residuals = r.residuals;
  if (want_vectors) s.vectors = std::move(r.vectors);
  for (double res : s.residuals)
    if (res > 1e-8 * s.scale) throw std::runtime_error("exact_spectrum: Lanczos residual above 1e-8 ||H||");
  return s;
}

// Projector onto the span of the first `count` vectors.
inline MatC span_projector(const std::vector<VecC>& vecs, std::size_t count) {
  auto dim = vecs.empty() ? 0 : vecs.front().size();
  MatC p = MatC::Zero(dim, dim);
  for (std::size_t i = 0; i < count && i < vecs.size(); ++i) p += vecs[i] * vecs[i].adjoint();
  return p;
}

// ---- bands ----

struct BandRow {
  double value = 0.0;    // eigenvalue of H - b
  int k = 0;             // nearest H0 level
  double half_width = 0.0;
  bool inside = true;
};

struct BandReport {
  double b = 0.0;                 // mean of the lowest low_count eigenvalues
  std::optional<double> b_paper;  // energy shift from the flow, when available
  std::size_t low_count = 0;      // 2^K
  double splitting = 0.0;         // max - min over the lowest low_count
  double delta = 0.0;             // half-width of I_0 around b
  double gap = 0.0;               // E_{low_count} - E_{low_count - 1}
  double eps0 = 0.0;
  double c_prime = 0.0;           // constant used for the intervals
  double c_prime_measured = 0.0;  // smallest C' for which every computed level is inside
  std::vector<BandRow> rows;
  std::vector<std::size_t> violations;
};

// Interval containment I_k = [k - (k C' eps0 + delta), k + (k C' eps0 + delta)] for sorted eigenvalues.
// A NaN c_prime uses the measured value.
inline BandReport band_report(const std::vector<double>& values, std::size_t low_count, double eps0,
                              double c_prime = std::numeric_limits<double>::quiet_NaN()) {
  if (values.size() < low_count || low_count == 0) throw std::invalid_argument("band_report: too few eigenvalues");
  BandReport r;
  r.low_count = low_count;
  r.eps0 = eps0;
  for (std::size_t i = 0; i < low_count; ++i) r.b += values[i];
  r.b /= static_cast<double>(low_count);
  r.splitting = values[low_count - 1] - values[0];
  for (std::size_t i = 0; i < low_count; ++i) r.delta = std::max(r.delta, std::abs(values[i] - r.b));
  r.gap = values.size() > low_count ? values[low_count] - values[low_count - 1] : std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < values.size(); ++i) {
    BandRow row;
    row.value = values[i] - r.b;
    row.k = std::max(0, static_cast<int>(std::lround(row.value)));
    if (row.k > 0) {
      double excess = std::abs(row.value - row.k) - r.delta;
      if (excess > 0.0)
        r.c_prime_measured = std::max(r.c_prime_measured, eps0 > 0.0 ? excess / (row.k * eps0)
                                                                     : std::numeric_limits<double>::infinity());
    }
    r.rows.push_back(row);
  }
  r.c_prime = std::isnan(c_prime) ? r.c_prime_measured : c_prime;
  for (std::size_t i = 0; i < r.rows.size(); ++i) {
    auto& row = r.rows[i];
    row.half_width = row.k * r.c_prime * eps0 + r.delta;
    // Relative slack absorbs the rounding in the measured constant.
    row.inside = std::abs(row.value - row.k) <= row.half_width * (1.0 + 1e-12) + 1e-14;
    if (i < low_count && row.k != 0) row.inside = false;
    if (!row.inside) r.violations.push_back(i);
  }
  return r;
}

struct SplittingRow {
  std::string label;
  std::size_t n_qubits = 0;
  double eps0 = 0.0;
  BandReport band;
  std::vector<double> eigenvalues;
};

// Lowest 2^K + extra levels of H0 + perturbation with band containment.
inline SplittingRow band_and_splitting(const StabilizerCode& code, const PauliOperator& perturbation, double eps0,
                                       std::size_t extra = 8, const std::string& label = {}) {
  SplittingRow row;
  row.label = label;
  row.n_qubits = code.n();
  row.eps0 = eps0;
  std::size_t low = std::size_t{1} << code.k_logical();
  PauliOperator h = h0_collection(code).to_operator();
  h += perturbation;
  auto spec = exact_spectrum(h, code.n(), low + extra);
  row.eigenvalues = spec.values;
  row.band = band_report(spec.values, low, eps0);
  return row;
}

struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;
};

inline LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw std::invalid_argument("fit_line: need two or more points");
  double n = static_cast<double>(x.size()), sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sx += x[i];
    sy += y[i];
    sxx += x[i] * x[i];
    sxy += x[i] * y[i];
  }
  LineFit f;
  double den = n * sxx - sx * sx;
  if (den == 0.0) throw std::invalid_argument("fit_line: degenerate abscissae");
  f.slope = (n * sxy - sx * sy) / den;
  f.intercept = (sy - f.slope * sx) / n;
  double my = sy / n, ss_tot = 0, ss_res = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    double e = y[i] - (f.slope * x[i] + f.intercept);
    ss_res += e * e;
    ss_tot += (y[i] - my) * (y[i] - my);
  }
  f.r2 = ss_tot > 0 ? 1.0 - ss_res / ss_tot : 1.0;
  return f;
}

// ---- relative form bound ----

struct FormBound {
  double c = 0.0;        // smallest C with -C H0 <= K - H0 <= C H0 on range(H0)
  double c_upper = 0.0;  // largest generalized eigenvalue
  double c_lower = 0.0;  // smallest generalized eigenvalue
  double kernel_leak = 0.0;  // ||(K - H0) P_ker||
  std::size_t range_dim = 0;
};

inline FormBound form_bound_check(const MatC& k, const MatC& h0, double kernel_tol = 1e-9) {
  if (k.rows() != h0.rows() || k.cols() != h0.cols()) throw std::invalid_argument("form_bound_check: shape mismatch");
  Eigen::SelfAdjointEigenSolver<MatC> es(h0);
  if (es.info() != Eigen::Success) throw std::runtime_error("form_bound_check: eigensolver failed");
  std::vector<Eigen::Index> range, ker;
  for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i) {
    double v = es.eigenvalues()[i];
    if (v < -kernel_tol) throw std::invalid_argument("form_bound_check: H0 is not positive semidefinite");
    (v > kernel_tol ? range : ker).push_back(i);
  }
  FormBound out;
  out.range_dim = range.size();
  MatC diff = k - h0;
  if (!ker.empty()) {
    MatC qk(h0.rows(), static_cast<Eigen::Index>(ker.size()));
    for (std::size_t j = 0; j < ker.size(); ++j) qk.col(static_cast<Eigen::Index>(j)) = es.eigenvectors().col(ker[j]);
    out.kernel_leak = dense_operator_norm(diff * qk);
  }
  if (range.empty()) return out;
  MatC w(h0.rows(), static_cast<Eigen::Index>(range.size()));
  for (std::size_t j = 0; j < range.size(); ++j)
    w.col(static_cast<Eigen::Index>(j)) = es.eigenvectors().col(range[j]) / std::sqrt(es.eigenvalues()[range[j]]);
  MatC pencil = w.adjoint() * diff * w;
  pencil = (pencil + pencil.adjoint()) / 2.0;
  Eigen::SelfAdjointEigenSolver<MatC> ps(pencil, Eigen::EigenvaluesOnly);
  if (ps.info() != Eigen::Success) throw std::runtime_error("form_bound_check: pencil solve failed");
  out.c_lower = ps.eigenvalues()[0];
  out.c_upper = ps.eigenvalues()[ps.eigenvalues().size() - 1];
  out.c = std::max(std::abs(out.c_lower), std::abs(out.c_upper));
  return out;
}

// K = H0 + D + M - <M> from the collection at scale n of a flow.
inline PauliOperator k_operator(const StabilizerCode& code, const FlowResult& flow, std::size_t n) {
  auto sp = split_collection(flow.collections.at(n), flow.setup.d_star);
  PauliOperator k = h0_collection(code).to_operator();
  k += merge({&sp.d_part, &sp.m_part}).to_operator();
  k.add(PauliString(code.n()), -GhostTable(sp.m_part, code).expectation());
  k.prune_absolute(1e-15);
  return k;
}

// ---- quasi-locality ----

// Keeps the Pauli terms supported inside `region`: the conditional expectation onto it.
inline PauliOperator restrict_to(const PauliOperator& o, const Mask& region) {
  PauliOperator r(o.n());
  for (const auto& [k, c] : o.terms())
    if (k.support().subset_of(region)) r.add_key(k, c);
  return r;
}

inline double local_norm(const PauliOperator& o) {
  if (o.empty()) return 0.0;
  if (o.support().count() > 20) return o.one_norm();
  return o.op_norm();
}

struct LocalityProfile {
  std::vector<double> radius_norms;  // ||O_r||, r = 0 .. r_max
  std::vector<std::size_t> ball_sizes;
  double background_norm = 0.0;
  double decay_rate = 0.0;  // fitted c in ||O_r|| ~ e^{-c r}
  double reconstruction_error = 0.0;
  std::vector<PauliOperator> parts;  // O_0 .. O_rmax, then O_bg
};

// conjugated = U^dagger O U; O_0 = E_{B_0}(conjugated) - O, O_r = E_{B_r} - E_{B_{r-1}}, O_bg = rest.
// The decay rate is fitted over radii >= fit_from with norms above `floor`.
inline LocalityProfile quasi_locality_profile(const PauliOperator& conjugated, const PauliOperator& o,
                                              const Adjacency& qubit_adj, int r_max = -1, int fit_from = 1,
                                              double floor = 1e-13) {
  LocalityProfile p;
  Mask y = o.support();
  if (y.none()) throw std::invalid_argument("quasi_locality_profile: operator has empty support");
  auto dist = bfs_distances(qubit_adj, y);
  int diam = 0;
  for (int d : dist) diam = std::max(diam, d);
  if (r_max < 0) r_max = diam;
  PauliOperator prev = o;
  PauliOperator total = o;
  for (int r = 0; r <= r_max; ++r) {
    Mask ball;
    for (std::size_t q = 0; q < dist.size(); ++q)
      if (dist[q] >= 0 && dist[q] <= r) ball.set(q);
    PauliOperator cur = restrict_to(conjugated, ball);
    PauliOperator part = cur;
    part -= prev;
    part.prune_absolute(1e-16);
    p.radius_norms.push_back(local_norm(part));
    p.ball_sizes.push_back(ball.count());
    total += part;
    p.parts.push_back(part);
    prev = std::move(cur);
  }
  PauliOperator bg = conjugated;
  bg -= prev;
  bg.prune_absolute(1e-16);
  p.background_norm = local_norm(bg);
  total += bg;
  p.parts.push_back(bg);
  PauliOperator diff = conjugated;
  diff -= total;
  p.reconstruction_error = diff.one_norm();
  std::vector<double> xs, ys;
  for (int r = fit_from; r <= r_max; ++r)
    if (p.radius_norms[static_cast<std::size_t>(r)] > floor) {
      xs.push_back(r);
      ys.push_back(std::log(p.radius_norms[static_cast<std::size_t>(r)]));
    }
  if (xs.size() >= 2) p.decay_rate = -fit_line(xs, ys).slope;
  return p;
}

// Bits of `v` scattered to the listed bit positions.
inline std::uint64_t deposit_bits(std::uint64_t v, const std::vector<int>& pos) {
  std::uint64_t out = 0;
  for (std::size_t k = 0; k < pos.size(); ++k)
    if ((v >> k) & 1u) out |= std::uint64_t{1} << pos[k];
  return out;
}

// Normalized partial trace of an n_bits matrix onto the bits `keep` (local bit k <-> keep[k]).
inline MatC reduce_to(const MatC& m, std::size_t n_bits, const std::vector<int>& keep) {
  std::vector<int> rest;
  for (int b = 0; b < static_cast<int>(n_bits); ++b)
    if (std::find(keep.begin(), keep.end(), b) == keep.end()) rest.push_back(b);
  std::uint64_t dk = std::uint64_t{1} << keep.size(), dr = std::uint64_t{1} << rest.size();
  std::vector<std::uint64_t> ik(dk), ir(dr);
  for (std::uint64_t i = 0; i < dk; ++i) ik[i] = deposit_bits(i, keep);
  for (std::uint64_t x = 0; x < dr; ++x) ir[x] = deposit_bits(x, rest);
  MatC out = MatC::Zero(static_cast<Eigen::Index>(dk), static_cast<Eigen::Index>(dk));
  for (std::uint64_t j = 0; j < dk; ++j)
    for (std::uint64_t x = 0; x < dr; ++x) {
      auto col = static_cast<Eigen::Index>(ik[j] | ir[x]);
      for (std::uint64_t i = 0; i < dk; ++i)
        out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) += m(static_cast<Eigen::Index>(ik[i] | ir[x]), col);
    }
  return out / static_cast<double>(dr);
}

// m (on bits `pos` of an n_bits register) tensored with the identity elsewhere.
inline MatC embed_from(const MatC& m, std::size_t n_bits, const std::vector<int>& pos) {
  std::vector<int> rest;
  for (int b = 0; b < static_cast<int>(n_bits); ++b)
    if (std::find(pos.begin(), pos.end(), b) == pos.end()) rest.push_back(b);
  std::uint64_t dk = std::uint64_t{1} << pos.size(), dr = std::uint64_t{1} << rest.size();
  std::vector<std::uint64_t> ik(dk);
  for (std::uint64_t i = 0; i < dk; ++i) ik[i] = deposit_bits(i, pos);
  auto dim = static_cast<Eigen::Index>(std::uint64_t{1} << n_bits);
  MatC out = MatC::Zero(dim, dim);
  for (std::uint64_t x = 0; x < dr; ++x) {
    std::uint64_t base = deposit_bits(x, rest);
    for (std::uint64_t j = 0; j < dk; ++j)
      for (std::uint64_t i = 0; i < dk; ++i)
        out(static_cast<Eigen::Index>(ik[i] | base), static_cast<Eigen::Index>(ik[j] | base)) =
            m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
  }
  return out;
}

// Dense counterpart of quasi_locality_profile for a Hermitian conjugated operator on all n qubits:
// O_r are formed as normalized partial traces onto the balls; `parts` stays empty.
inline LocalityProfile quasi_locality_profile_dense(const MatC& conjugated, const PauliOperator& o, std::size_t n,
                                                    const Adjacency& qubit_adj, int r_max = -1, int fit_from = 1,
                                                    double floor = 1e-13) {
  LocalityProfile p;
  Mask y = o.support();
  if (y.none()) throw std::invalid_argument("quasi_locality_profile_dense: operator has empty support");
  auto dist = bfs_distances(qubit_adj, y);
  int diam = 0;
  for (int d : dist) diam = std::max(diam, d);
  if (r_max < 0) r_max = diam;
  auto ball = [&](int r) {
    std::vector<int> b;
    for (std::size_t q = 0; q < n; ++q)
      if (dist[q] >= 0 && dist[q] <= r) b.push_back(static_cast<int>(q));
    return b;
  };
  // Bits of `inner` inside the register of `outer`.
  auto positions = [](const std::vector<int>& inner, const std::vector<int>& outer) {
    std::vector<int> pos;
    for (int q : inner) pos.push_back(static_cast<int>(std::find(outer.begin(), outer.end(), q) - outer.begin()));
    return pos;
  };
  MatC od = o.dense(n);
  MatC total = od;
  std::vector<int> prev_ball = ball(0);
  MatC prev = reduce_to(od, n, prev_ball);
  for (int r = 0; r <= r_max; ++r) {
    auto b = ball(r);
    MatC cur = reduce_to(conjugated, n, b);
    MatC part = cur - embed_from(prev, b.size(), positions(prev_ball, b));
    p.radius_norms.push_back(hermitian_operator_norm(0.5 * (part + part.adjoint())));
    p.ball_sizes.push_back(b.size());
    total += embed_from(part, n, b);
    prev = std::move(cur);
    prev_ball = std::move(b);
  }
  MatC bg = conjugated - embed_from(prev, n, prev_ball);
  p.background_norm = hermitian_operator_norm(0.5 * (bg + bg.adjoint()));
  total += bg;
  p.reconstruction_error = max_abs_entry(conjugated - total);
  std::vector<double> xs, ys;
  for (int r = fit_from; r <= r_max; ++r)
    if (p.radius_norms[static_cast<std::size_t>(r)] > floor) {
      xs.push_back(r);
      ys.push_back(std::log(p.radius_norms[static_cast<std::size_t>(r)]));
    }
  if (xs.size() >= 2) p.decay_rate = -fit_line(xs, ys).slope;
  return p;
}

// U = e^{i A_0} e^{i A_1} ... as a dense matrix.
inline MatC dense_dressing(const std::vector<OperatorCollection>& factors, std::size_t n_qubits) {
  auto dim = static_cast<Eigen::Index>(std::size_t{1} << n_qubits);
  return apply_unitary(factors, n_qubits, MatC(MatC::Identity(dim, dim)));
}

// Smallest per-step decay factor ||O_r|| / ||O_{r+1}|| over r >= from, ignoring pairs below the floor.
inline double min_decay_factor(const LocalityProfile& p, std::size_t from, double floor = 1e-13) {
  double worst = std::numeric_limits<double>::infinity();
  for (std::size_t r = from; r + 1 < p.radius_norms.size(); ++r) {
    double a = p.radius_norms[r], b = p.radius_norms[r + 1];
    if (b <= floor) continue;
    worst = std::min(worst, a / b);
  }
  return worst;
}

// ---- ground states and dressing ----

// Computational-basis ground state of a classical code with Z-type checks: all zeros.
inline VecC product_ground_state(std::size_t n_qubits, std::uint64_t bits = 0) {
  VecC v = VecC::Zero(static_cast<Eigen::Index>(std::size_t{1} << n_qubits));
  v[static_cast<Eigen::Index>(bits)] = 1.0;
  return v;
}

inline cplx expectation(const PauliOperator& o, const VecC& v, std::size_t n_qubits) {
  VecC w;
  o.apply(v, w, n_qubits);
  return v.dot(w);
}

struct ProjectorComparison {
  double distance = 0.0;       // ||U P U^dagger - P'||
  double bound = 0.0;          // ||W|| / (g - ||W||) plus the eigensolver floor
  double w_norm = 0.0;         // bound on ||V^(n*) + E^(n*)||
  double k_gap = 0.0;          // gap of K^(n*) above its kernel
  double solver_floor = 0.0;   // sum of eigensolver residuals / spectral gap
  double spectral_gap = 0.0;
};

// Compares the dressed unperturbed ground space with the exact one. The bound is the sin-theta
// estimate for K^(n*) perturbed by W = V^(n*) + E^(n*), with the measured gap of K^(n*).
inline ProjectorComparison compare_ground_projectors(const StabilizerCode& code, const PauliOperator& h,
                                                     const FlowResult& flow) {
  std::size_t n = code.n();
  std::size_t low = std::size_t{1} << code.k_logical();
  ProjectorComparison out;
  auto spec = exact_spectrum(h, n, low + 1, true);
  out.spectral_gap = spec.values[low] - spec.values[low - 1];
  double resid = 0.0;
  for (std::size_t i = 0; i < low; ++i) resid += spec.residuals[i];
  out.solver_floor = resid / std::max(out.spectral_gap, 1e-300);

  // U applied to an orthonormal basis of the unperturbed ground space.
  auto g0 = exact_spectrum(h0_collection(code).to_operator(), n, low, true);
  MatC g(static_cast<Eigen::Index>(std::size_t{1} << n), static_cast<Eigen::Index>(low));
  for (std::size_t i = 0; i < low; ++i) g.col(static_cast<Eigen::Index>(i)) = g0.vectors[i];
  MatC ug = apply_unitary(flow.factors, n, g);
  MatC exact(ug.rows(), static_cast<Eigen::Index>(low));
  for (std::size_t i = 0; i < low; ++i) exact.col(static_cast<Eigen::Index>(i)) = spec.vectors[i];
  // ||P1 - P2|| = ||(1 - P2) P1|| for projectors of equal rank.
  MatC resid_block = ug - exact * (exact.adjoint() * ug);
  out.distance = dense_operator_norm(resid_block);

  auto sp = split_collection(flow.final_collection(), flow.setup.d_star);
  out.w_norm = merge({&sp.v_plus, &sp.v_minus}).sum_of_norm_bounds() + flow.error_bound;
  auto kspec = exact_spectrum(k_operator(code, flow, static_cast<std::size_t>(flow.n_star)), n, low + 1);
  out.k_gap = kspec.values[low] - kspec.values[low - 1];
  double denom = out.k_gap - out.w_norm;
  out.bound = (denom > 0.0 ? out.w_norm / denom : std::numeric_limits<double>::infinity()) + out.solver_floor;
  return out;
}

// ---- order parameters ----

struct OrderParameterReport {
  std::size_t site = 0;
  double bare = 0.0;           // <psi|Z_x|psi>
  double smeared = 0.0;        // <psi~|U Z_x U^dagger|psi~> with psi~ = U psi
  double smeared_error = 0.0;  // |smeared - bare|
  double tail = 0.0;           // ||(1 - P') psi~||, the part not captured by the flow
  double unsmeared = 0.0;      // max |<Z_x>| over the exact ground space
  double symmetry_violation = 0.0;
};

inline OrderParameterReport order_parameter_check(const StabilizerCode& code, const PauliOperator& h,
                                                  const FlowResult& flow, std::size_t site) {
  if (!code.is_classical()) throw std::invalid_argument("order_parameter_check: classical code required");
  if (flow.config.mode != FlowMode::Symmetric) throw std::invalid_argument("order_parameter_check: symmetric flow required");
  std::size_t n = code.n();
  OrderParameterReport r;
  r.site = site;
  for (const auto& c : flow.collections) r.symmetry_violation = std::max(r.symmetry_violation, symmetry_violation(c, code));
  for (const auto& a : flow.factors) r.symmetry_violation = std::max(r.symmetry_violation, symmetry_violation(a, code));
  PauliOperator z(n);
  z.add(PauliString::single(n, site, 'Z'), 1.0);
  VecC psi = product_ground_state(n);
  r.bare = expectation(z, psi, n).real();
  PauliOperator zt = conjugate_by_factors(z, flow.factors, false);
  VecC psit = apply_unitary(flow.factors, n, psi);
  r.smeared = expectation(zt, psit, n).real();
  r.smeared_error = std::abs(r.smeared - r.bare);

  std::size_t low = std::size_t{1} << code.k_logical();
  auto spec = exact_spectrum(h, n, low, true);
  MatC basis(psit.size(), static_cast<Eigen::Index>(low));
  for (std::size_t i = 0; i < low; ++i) basis.col(static_cast<Eigen::Index>(i)) = spec.vectors[i];
  r.tail = (psit - basis * (basis.adjoint() * psit)).norm();
  MatC zb(basis.rows(), basis.cols());
  for (Eigen::Index j = 0; j < basis.cols(); ++j) {
    VecC w;
    z.apply(basis.col(j), w, n);
    zb.col(j) = w;
  }
  MatC zproj = basis.adjoint() * zb;
  zproj = (zproj + zproj.adjoint()) / 2.0;
  Eigen::SelfAdjointEigenSolver<MatC> es(zproj, Eigen::EigenvaluesOnly);
  r.unsmeared = std::max(std::abs(es.eigenvalues()[0]), std::abs(es.eigenvalues()[es.eigenvalues().size() - 1]));
  return r;
}

// ---- excitations ----

// Pauli whose commutation pattern with the checks is exactly `syndrome`, if one exists.
inline std::optional<PauliString> flip_operator(const StabilizerCode& code, const Mask& syndrome) {
  std::size_t n = code.n();
  if (2 * n > kMaxBits) throw BudgetExceeded("flip_operator: too many qubits for the mask solver");
  MaskBasis basis;
  std::vector<PauliString> gens;
  for (std::size_t q = 0; q < n; ++q)
    for (char c : {'X', 'Z'}) {
      PauliString p = PauliString::single(n, q, c);
      Mask s;
      for (std::size_t a = 0; a < code.num_checks(); ++a)
        if (!commutes(p, code.check(a))) s.set(a);
      basis.insert_generator(s, gens.size());
      gens.push_back(p);
    }
  auto tag = basis.solve(syndrome);
  if (!tag) return std::nullopt;
  PauliString out(n);
  tag->for_each([&](int i) { out = out * gens[static_cast<std::size_t>(i)]; });
  return out.hermitian_part();
}

struct ExcitationRow {
  int radius = 0;
  std::size_t probe_check = 0;
  double h = 0.0;  // <D~ O D~> - <O> in the dressed state
};

struct ExcitationReport {
  std::vector<std::size_t> flipped;  // checks excited by the flip operator
  std::string flip;
  std::vector<ExcitationRow> rows;
};

// h(R) for probes O = C_beta at check distance R from alpha, in psi~ = U psi with D~ = U D U^dagger.
// Falls back to a pair flip {alpha, farthest check} when no single-check flip exists.
inline ExcitationReport excitation_locality(const StabilizerCode& code, const InteractionGraphs& g,
                                            const FlowResult& flow, std::size_t alpha, const VecC& psi) {
  std::size_t n = code.n();
  ExcitationReport rep;
  auto dist = bfs_distances(g.check_adj, static_cast<int>(alpha));
  auto d = flip_operator(code, Mask::single(alpha));
  rep.flipped = {alpha};
  if (!d) {
    std::size_t far = alpha;
    for (std::size_t b = 0; b < dist.size(); ++b)
      if (dist[b] > dist[far]) far = b;
    Mask pair = Mask::single(alpha);
    pair.set(far);
    d = flip_operator(code, pair);
    if (!d) throw InvariantViolation("excitation_locality: no flip operator for a check pair");
    rep.flipped.push_back(far);
  }
  rep.flip = d->str();
  PauliOperator dop(n);
  dop.add(*d, 1.0);
  VecC excited;
  dop.apply(psi, excited, n);
  VecC a = apply_unitary(flow.factors, n, psi);
  VecC b = apply_unitary(flow.factors, n, excited);
  for (std::size_t beta = 0; beta < code.num_checks(); ++beta) {
    if (std::find(rep.flipped.begin(), rep.flipped.end(), beta) != rep.flipped.end() && beta != alpha) continue;
    PauliOperator o(n);
    o.add(code.check(beta), 1.0);
    ExcitationRow row;
    row.radius = dist[beta];
    row.probe_check = beta;
    row.h = expectation(o, b, n).real() - expectation(o, a, n).real();
    rep.rows.push_back(row);
  }
  std::sort(rep.rows.begin(), rep.rows.end(),
            [](const ExcitationRow& x, const ExcitationRow& y) { return std::tie(x.radius, x.probe_check) < std::tie(y.radius, y.probe_check); });
  return rep;
}

}  // namespace qkam
