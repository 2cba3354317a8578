#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <functional>
#include <random>
#include <stdexcept>
#include <vector>

namespace qkam {

using cplx = std::complex<double>;
using MatC = Eigen::MatrixXcd;
using VecC = Eigen::VectorXcd;
using SpMatC = Eigen::SparseMatrix<cplx>;

struct EigenPairs {
  std::vector<double> values;
  std::vector<VecC> vectors;
  std::vector<double> residuals;
  int matvecs = 0;
};

struct LanczosOptions {
  std::size_t max_krylov = 200;
  int max_restarts = 6;
  double tol = 1e-11;  // residual tolerance relative to the spectral scale
};

inline VecC random_unit_vector(std::size_t dim, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd(0.0, 1.0);
  VecC v(static_cast<Eigen::Index>(dim));
  for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = cplx(nd(rng), nd(rng));
  v.normalize();
  return v;
}

// Lowest `count` eigenpairs of a Hermitian operator given by its action.
// Lanczos with full reorthogonalization; eigenpairs are found one at a time and
// deflated, which resolves exact degeneracies.
template <class Apply>
EigenPairs lanczos_lowest(Apply&& apply, std::size_t dim, std::size_t count, const LanczosOptions& opt = {},
                          std::uint64_t seed = 12345) {
  EigenPairs out;
  if (dim == 0 || count == 0) return out;
  count = std::min(count, dim);
  VecC w(static_cast<Eigen::Index>(dim));

  auto project_out = [&](VecC& v) {
    for (int pass = 0; pass < 2; ++pass)
      for (const auto& f : out.vectors) v -= f * f.dot(v);
  };

  double scale = 0.0;
  for (std::size_t j = 0; j < count; ++j) {
    VecC start = random_unit_vector(dim, seed + 7919 * j);
    project_out(start);
    if (start.norm() < 1e-300) throw std::runtime_error("lanczos: start vector vanished after deflation");
    start.normalize();

    double lambda = 0.0;
    VecC ritz;
    double resid = 0.0;
    for (int restart = 0; restart <= opt.max_restarts; ++restart) {
      std::size_t mmax = std::min(opt.max_krylov, dim - out.vectors.size());
      std::vector<VecC> basis;
      std::vector<double> alpha, beta;
      basis.push_back(start);
      Eigen::VectorXd s_last;
      for (std::size_t m = 0; m < mmax; ++m) {
        apply(basis[m], w);
        ++out.matvecs;
        double a = basis[m].dot(w).real();
        alpha.push_back(a);
        w -= a * basis[m];
        if (m > 0) w -= beta[m - 1] * basis[m - 1];
        project_out(w);
        for (int pass = 0; pass < 2; ++pass)
          for (const auto& b : basis) w -= b * b.dot(w);
        double b = w.norm();
        scale = std::max({scale, std::abs(a), b});
        bool exhausted = b < 1e-13 * std::max(scale, 1.0) || m + 1 == mmax;
        if ((m + 1) % 5 == 0 || exhausted) {
          Eigen::Index k = static_cast<Eigen::Index>(alpha.size());
          Eigen::MatrixXd t = Eigen::MatrixXd::Zero(k, k);
          for (Eigen::Index i = 0; i < k; ++i) {
            t(i, i) = alpha[static_cast<std::size_t>(i)];
            if (i + 1 < k) t(i, i + 1) = t(i + 1, i) = beta[static_cast<std::size_t>(i)];
          }
          Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(t);
          lambda = es.eigenvalues()[0];
          s_last = es.eigenvectors().col(0);
          double est = std::abs(b * s_last[k - 1]);
          if (exhausted || est < opt.tol * std::max(scale, 1.0)) break;
        }
        beta.push_back(b);
        basis.push_back(w / b);
      }
      ritz = VecC::Zero(static_cast<Eigen::Index>(dim));
      for (Eigen::Index i = 0; i < s_last.size(); ++i) ritz += s_last[i] * basis[static_cast<std::size_t>(i)];
      project_out(ritz);
      ritz.normalize();
      apply(ritz, w);
      ++out.matvecs;
      lambda = ritz.dot(w).real();
      resid = (w - lambda * ritz).norm();
      if (resid <= 10 * opt.tol * std::max(scale, 1.0)) break;
      start = ritz;
    }
    out.values.push_back(lambda);
    out.vectors.push_back(ritz);
    out.residuals.push_back(resid);
  }
  // Deflation can return pairs slightly out of order when levels are close.
  std::vector<std::size_t> order(out.values.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](auto a, auto b) { return out.values[a] < out.values[b]; });
  EigenPairs sorted;
  sorted.matvecs = out.matvecs;
  for (auto i : order) {
    sorted.values.push_back(out.values[i]);
    sorted.vectors.push_back(out.vectors[i]);
    sorted.residuals.push_back(out.residuals[i]);
  }
  return sorted;
}

// Largest singular value of an operator given by its action and adjoint action.
template <class Apply, class ApplyAdj>
double operator_norm_iterative(Apply&& apply, ApplyAdj&& apply_adj, std::size_t dim) {
  VecC tmp(static_cast<Eigen::Index>(dim));
  auto neg_gram = [&](const VecC& v, VecC& out) {
    apply(v, tmp);
    apply_adj(tmp, out);
    out = -out;
  };
  LanczosOptions opt;
  opt.tol = 1e-13;
  auto r = lanczos_lowest(neg_gram, dim, 1, opt, 777);
  return std::sqrt(std::max(0.0, -r.values[0]));
}

// Operator norm of a dense matrix.
inline double dense_operator_norm(const MatC& m) {
  if (m.size() == 0) return 0.0;
  if (m.rows() <= 48) {
    MatC g = m.adjoint() * m;
    Eigen::SelfAdjointEigenSolver<MatC> es(g, Eigen::EigenvaluesOnly);
    return std::sqrt(std::max(0.0, es.eigenvalues()[es.eigenvalues().size() - 1]));
  }
  std::size_t dim = static_cast<std::size_t>(m.cols());
  return operator_norm_iterative([&](const VecC& v, VecC& out) { out.noalias() = m * v; },
                                 [&](const VecC& v, VecC& out) { out.noalias() = m.adjoint() * v; }, dim);
}

// Operator norm of a Hermitian dense matrix via extreme eigenvalues.
inline double hermitian_operator_norm(const MatC& m) {
  if (m.size() == 0) return 0.0;
  if (m.rows() <= 64) {
    Eigen::SelfAdjointEigenSolver<MatC> es(m, Eigen::EigenvaluesOnly);
    return std::max(std::abs(es.eigenvalues()[0]), std::abs(es.eigenvalues()[es.eigenvalues().size() - 1]));
  }
  return dense_operator_norm(m);
}

// exp(i t A) for Hermitian A.
inline MatC expm_hermitian(const MatC& a, double t) {
  Eigen::SelfAdjointEigenSolver<MatC> es(a);
  VecC ph(es.eigenvalues().size());
  for (Eigen::Index i = 0; i < ph.size(); ++i) ph[i] = std::exp(cplx(0.0, t * es.eigenvalues()[i]));
  return es.eigenvectors() * ph.asDiagonal() * es.eigenvectors().adjoint();
}

inline double sparse_one_norm(const SpMatC& a) {
  double best = 0.0;
  for (Eigen::Index k = 0; k < a.outerSize(); ++k) {
    double s = 0.0;
    for (SpMatC::InnerIterator it(a, k); it; ++it) s += std::abs(it.value());
    best = std::max(best, s);
  }
  return best;
}

// exp(z A) X for sparse A by scaled Taylor series; X may be a vector or a dense block.
template <class Dense>
Dense expm_apply(const SpMatC& a, cplx z, Dense x, double tol = 1e-17) {
  double nrm = std::abs(z) * sparse_one_norm(a);
  if (nrm == 0.0) return x;
  int steps = std::max(1, static_cast<int>(std::ceil(nrm / 0.5)));
  cplx zs = z / static_cast<double>(steps);
  for (int s = 0; s < steps; ++s) {
    Dense term = x;
    Dense acc = x;
    double base = std::max(x.norm(), 1e-300);
    for (int k = 1; k < 60; ++k) {
      Dense next = (zs / static_cast<double>(k)) * (a * term);
      term = std::move(next);
      acc += term;
      if (term.norm() <= tol * base) break;
    }
    x = std::move(acc);
  }
  return x;
}

inline double max_abs_entry(const MatC& m) { return m.size() ? m.cwiseAbs().maxCoeff() : 0.0; }

}  // namespace qkam
