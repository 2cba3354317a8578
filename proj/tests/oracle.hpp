#pragma once

// Independent dense reference built from explicit 2x2 Kronecker products.
// Qubit 0 is the least significant bit of the basis index.

#include "qkam/linalg.hpp"
#include "qkam/pauli.hpp"

#include <unsupported/Eigen/KroneckerProduct>

#include <random>
#include <string>

namespace oracle {

using qkam::cplx;
using qkam::MatC;

inline MatC pauli2(char c) {
  MatC m(2, 2);
  switch (c) {
    case 'X': m << 0, 1, 1, 0; break;
    case 'Y': m << 0, cplx(0, -1), cplx(0, 1), 0; break;
    case 'Z': m << 1, 0, 0, -1; break;
    default: m << 1, 0, 0, 1;
  }
  return m;
}

inline MatC kron_string(const qkam::PauliString& p) {
  MatC m = MatC::Identity(1, 1);
  for (std::size_t q = 0; q < p.n(); ++q) {
    MatC k = Eigen::kroneckerProduct(pauli2(p.at(q)), m).eval();
    m = k;
  }
  return m * p.phase_value();
}

inline MatC kron_operator(const qkam::PauliOperator& op, std::size_t n) {
  std::size_t dim = std::size_t{1} << n;
  MatC m = MatC::Zero(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(dim));
  for (const auto& [k, c] : op.terms()) m += c * kron_string(qkam::PauliString(n, k.x, k.z, 0));
  return m;
}

inline qkam::PauliString random_string(std::size_t n, std::mt19937_64& rng, bool random_phase = true) {
  std::uniform_int_distribution<int> d4(0, 3);
  qkam::PauliString p(n);
  const char sym[] = "IXYZ";
  for (std::size_t q = 0; q < n; ++q) p.set(q, sym[d4(rng)]);
  return random_phase ? p.with_phase(d4(rng)) : p;
}

inline MatC projector_matrix(const qkam::PauliString& check, bool ground) {
  MatC c = kron_string(check);
  MatC id = MatC::Identity(c.rows(), c.cols());
  return ground ? MatC((id + c) / 2.0) : MatC((id - c) / 2.0);
}

}  // namespace oracle
