#pragma once

#include "qkam/bits.hpp"
#include "qkam/linalg.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <complex>
#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

namespace qkam {

struct Caps {
  std::size_t dense_qubits = 14;
  std::size_t sparse_qubits = 22;
};

class BudgetExceeded : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvariantViolation : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline cplx ipow(int k) {
  switch (((k % 4) + 4) % 4) {
    case 0: return {1.0, 0.0};
    case 1: return {0.0, 1.0};
    case 2: return {-1.0, 0.0};
    default: return {0.0, -1.0};
  }
}

// i^phase * prod_q P_q with P = X (x only), Z (z only), Y (both).
// Single-qubit P(x,z) = i^{xz} X^x Z^z, so X*Z = -iY.
class PauliString {
 public:
  PauliString() = default;
  explicit PauliString(std::size_t n) : n_(n) { check_n(n); }
  PauliString(std::size_t n, const Mask& x, const Mask& z, int phase = 0) : n_(n), x_(x), z_(z), phase_(norm_phase(phase)) {
    check_n(n);
    if (!(x | z).subset_of(Mask::range(n))) throw std::invalid_argument("PauliString: bits beyond n");
  }

  // Accepts an optional sign prefix (+, -, i, -i, +i) followed by one of IXYZ per qubit.
  static PauliString parse(std::string_view s) {
    int ph = 0;
    if (s.rfind("-i", 0) == 0) {
      ph = 3;
      s.remove_prefix(2);
    } else if (s.rfind("+i", 0) == 0) {
      ph = 1;
      s.remove_prefix(2);
    } else if (!s.empty() && s[0] == 'i') {
      ph = 1;
      s.remove_prefix(1);
    } else if (!s.empty() && s[0] == '-') {
      ph = 2;
      s.remove_prefix(1);
    } else if (!s.empty() && s[0] == '+') {
      s.remove_prefix(1);
    }
    PauliString p(s.size());
    for (std::size_t q = 0; q < s.size(); ++q) p.set(q, s[q]);
    p.phase_ = ph;
    return p;
  }

  static PauliString single(std::size_t n, std::size_t q, char c) {
    PauliString p(n);
    p.set(q, c);
    return p;
  }

  static PauliString z_string(std::size_t n, const Mask& z) { return PauliString(n, Mask{}, z, 0); }
  static PauliString x_string(std::size_t n, const Mask& x) { return PauliString(n, x, Mask{}, 0); }

  std::size_t n() const { return n_; }
  const Mask& x() const { return x_; }
  const Mask& z() const { return z_; }
  int phase() const { return phase_; }
  cplx phase_value() const { return ipow(phase_); }

  void set(std::size_t q, char c) {
    if (q >= n_) throw std::out_of_range("PauliString::set");
    x_.reset(q);
    z_.reset(q);
    switch (c) {
      case 'I': break;
      case 'X': x_.set(q); break;
      case 'Z': z_.set(q); break;
      case 'Y':
        x_.set(q);
        z_.set(q);
        break;
      default: throw std::invalid_argument(std::string("PauliString: bad symbol ") + c);
    }
  }
  char at(std::size_t q) const {
    bool a = x_.test(q), b = z_.test(q);
    return a ? (b ? 'Y' : 'X') : (b ? 'Z' : 'I');
  }

  Mask support() const { return x_ | z_; }
  std::size_t weight() const { return support().count(); }
  bool is_identity() const { return x_.none() && z_.none(); }

  PauliString with_phase(int ph) const {
    PauliString p = *this;
    p.phase_ = norm_phase(ph);
    return p;
  }
  PauliString hermitian_part() const { return with_phase(0); }

  std::string str() const {
    static const char* pre[] = {"+", "+i", "-", "-i"};
    std::string s = pre[phase_];
    for (std::size_t q = 0; q < n_; ++q) s.push_back(at(q));
    return s;
  }

  friend bool operator==(const PauliString& a, const PauliString& b) {
    return a.n_ == b.n_ && a.phase_ == b.phase_ && a.x_ == b.x_ && a.z_ == b.z_;
  }

 private:
  static int norm_phase(int p) { return ((p % 4) + 4) % 4; }
  static void check_n(std::size_t n) {
    if (n > kMaxBits) throw std::invalid_argument("PauliString: more qubits than kMaxBits");
  }

  std::size_t n_ = 0;
  Mask x_, z_;
  int phase_ = 0;
};

// Phase exponent (power of i) of P(x1,z1) P(x2,z2) relative to P(x1^x2, z1^z2).
inline int product_phase(const Mask& x1, const Mask& z1, const Mask& x2, const Mask& z2) {
  Mask x3 = x1 ^ x2, z3 = z1 ^ z2;
  long e = static_cast<long>((x1 & z1).count()) + static_cast<long>((x2 & z2).count()) +
           2 * static_cast<long>((z1 & x2).count()) - static_cast<long>((x3 & z3).count());
  return static_cast<int>(((e % 4) + 4) % 4);
}

inline PauliString pauli_multiply(const PauliString& a, const PauliString& b) {
  if (a.n() != b.n()) throw std::invalid_argument("pauli_multiply: length mismatch");
  int ph = a.phase() + b.phase() + product_phase(a.x(), a.z(), b.x(), b.z());
  return PauliString(a.n(), a.x() ^ b.x(), a.z() ^ b.z(), ph);
}

inline PauliString operator*(const PauliString& a, const PauliString& b) { return pauli_multiply(a, b); }

inline bool symplectic_odd(const Mask& x1, const Mask& z1, const Mask& x2, const Mask& z2) {
  return x1.odd_overlap(z2) != z1.odd_overlap(x2);
}

inline bool commutes(const PauliString& a, const PauliString& b) {
  if (a.n() != b.n()) throw std::invalid_argument("commutes: length mismatch");
  return !symplectic_odd(a.x(), a.z(), b.x(), b.z());
}

// Hermitian Pauli basis element (phase folded into coefficients).
struct PauliKey {
  Mask x, z;
  friend bool operator==(const PauliKey& a, const PauliKey& b) { return a.x == b.x && a.z == b.z; }
  friend bool operator<(const PauliKey& a, const PauliKey& b) {
    if (a.x != b.x) return a.x < b.x;
    return a.z < b.z;
  }
  Mask support() const { return x | z; }
};

struct PauliKeyHash {
  std::size_t operator()(const PauliKey& k) const { return k.x.hash() * 31u ^ (k.z.hash() + 0x632be59bd9b4e019ull); }
};

// Matrix element data of a Hermitian Pauli basis string on a basis state b:
// P|b> = i^{|x&z|} (-1)^{|z&b|} |b^x>.
inline cplx pauli_column_factor(std::uint64_t x, std::uint64_t z, std::uint64_t b) {
  int ph = std::popcount(x & z) + 2 * (std::popcount(z & b) & 1);
  return ipow(ph);
}

class PauliOperator {
 public:
  using Map = std::unordered_map<PauliKey, cplx, PauliKeyHash>;

  PauliOperator() = default;
  explicit PauliOperator(std::size_t n) : n_(n) {}
  PauliOperator(const PauliString& p, cplx c = 1.0) : n_(p.n()) { add(p, c); }

  static PauliOperator identity(std::size_t n, cplx c = 1.0) {
    PauliOperator o(n);
    o.add_key({}, c);
    return o;
  }

  std::size_t n() const { return n_; }
  std::size_t size() const { return terms_.size(); }
  bool empty() const { return terms_.empty(); }
  const Map& terms() const { return terms_; }

  void add(const PauliString& p, cplx c) {
    if (p.n() != n_) throw std::invalid_argument("PauliOperator::add: length mismatch");
    add_key({p.x(), p.z()}, c * p.phase_value());
  }
  void add_key(const PauliKey& k, cplx c) {
    auto [it, fresh] = terms_.try_emplace(k, c);
    if (!fresh) it->second += c;
  }
  cplx coefficient(const PauliKey& k) const {
    auto it = terms_.find(k);
    return it == terms_.end() ? cplx{} : it->second;
  }
  cplx coefficient(const PauliString& p) const {
    // p = i^ph P, so the coefficient of p is c_P / i^ph.
    return coefficient(PauliKey{p.x(), p.z()}) / p.phase_value();
  }

  PauliOperator& operator+=(const PauliOperator& o) {
    merge_n(o);
    for (const auto& [k, c] : o.terms_) add_key(k, c);
    return *this;
  }
  PauliOperator& operator-=(const PauliOperator& o) {
    merge_n(o);
    for (const auto& [k, c] : o.terms_) add_key(k, -c);
    return *this;
  }
  PauliOperator& operator*=(cplx s) {
    for (auto& [k, c] : terms_) c *= s;
    return *this;
  }
  void add_scaled(const PauliOperator& o, cplx s) {
    merge_n(o);
    for (const auto& [k, c] : o.terms_) add_key(k, c * s);
  }
  friend PauliOperator operator+(PauliOperator a, const PauliOperator& b) { return a += b; }
  friend PauliOperator operator-(PauliOperator a, const PauliOperator& b) { return a -= b; }
  friend PauliOperator operator*(PauliOperator a, cplx s) { return a *= s; }
  friend PauliOperator operator*(cplx s, PauliOperator a) { return a *= s; }

  // Operator product, accumulated into `out` with weight s.
  static void multiply_into(const PauliOperator& a, const PauliOperator& b, cplx s, PauliOperator& out) {
    if (out.n_ == 0) out.n_ = std::max(a.n_, b.n_);
    std::vector<std::pair<PauliKey, cplx>> bt(b.terms_.begin(), b.terms_.end());
    out.terms_.reserve(out.terms_.size() + a.terms_.size() * bt.size());
    for (const auto& [ka, ca] : a.terms_) {
      cplx sa = s * ca;
      for (const auto& [kb, cb] : bt) {
        int ph = product_phase(ka.x, ka.z, kb.x, kb.z);
        out.add_key({ka.x ^ kb.x, ka.z ^ kb.z}, sa * cb * ipow(ph));
      }
    }
  }
  friend PauliOperator operator*(const PauliOperator& a, const PauliOperator& b) {
    PauliOperator out(std::max(a.n_, b.n_));
    multiply_into(a, b, 1.0, out);
    return out;
  }

  PauliOperator adjoint() const {
    PauliOperator o(n_);
    for (const auto& [k, c] : terms_) o.terms_.emplace(k, std::conj(c));
    return o;
  }

  friend PauliOperator commutator(const PauliOperator& a, const PauliOperator& b) {
    PauliOperator out(std::max(a.n_, b.n_));
    for (const auto& [ka, ca] : a.terms_) {
      for (const auto& [kb, cb] : b.terms_) {
        if (!symplectic_odd(ka.x, ka.z, kb.x, kb.z)) continue;
        int ph = product_phase(ka.x, ka.z, kb.x, kb.z);
        out.add_key({ka.x ^ kb.x, ka.z ^ kb.z}, 2.0 * ca * cb * ipow(ph));
      }
    }
    return out;
  }

  double max_abs() const {
    double m = 0.0;
    for (const auto& [k, c] : terms_) m = std::max(m, std::abs(c));
    return m;
  }
  double one_norm() const {
    double s = 0.0;
    for (const auto& [k, c] : terms_) s += std::abs(c);
    return s;
  }

  // Drops terms with |c| <= rel * max|c| (and exact zeros); returns the dropped 1-norm.
  double prune(double rel = 1e-14) {
    double thr = rel * max_abs();
    double dropped = 0.0;
    for (auto it = terms_.begin(); it != terms_.end();) {
      double a = std::abs(it->second);
      if (a <= thr || a == 0.0) {
        dropped += a;
        it = terms_.erase(it);
      } else {
        ++it;
      }
    }
    return dropped;
  }
  double prune_absolute(double thr) {
    double dropped = 0.0;
    for (auto it = terms_.begin(); it != terms_.end();) {
      double a = std::abs(it->second);
      if (a <= thr) {
        dropped += a;
        it = terms_.erase(it);
      } else {
        ++it;
      }
    }
    return dropped;
  }

  bool is_hermitian(double tol = 1e-12) const {
    for (const auto& [k, c] : terms_)
      if (std::abs(c.imag()) > tol * std::max(1.0, std::abs(c))) return false;
    return true;
  }

  Mask support() const {
    Mask m;
    for (const auto& [k, c] : terms_) m |= k.support();
    return m;
  }

  std::vector<std::pair<PauliKey, cplx>> sorted_terms() const {
    std::vector<std::pair<PauliKey, cplx>> v(terms_.begin(), terms_.end());
    std::sort(v.begin(), v.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
    return v;
  }

  // Dense matrix on the listed qubits (local bit j <-> qubits[j]); every term must be supported there.
  MatC dense_on(const std::vector<int>& qubits) const {
    if (qubits.size() > 20) throw BudgetExceeded("dense realization beyond 20 qubits");
    std::size_t dim = std::size_t{1} << qubits.size();
    MatC m = MatC::Zero(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(dim));
    for (const auto& [lx, lz, c] : localize(qubits)) {
      for (std::uint64_t b = 0; b < dim; ++b)
        m(static_cast<Eigen::Index>(b ^ lx), static_cast<Eigen::Index>(b)) += c * pauli_column_factor(lx, lz, b);
    }
    return m;
  }
  MatC dense(std::size_t n_qubits) const {
    std::vector<int> q(n_qubits);
    for (std::size_t i = 0; i < n_qubits; ++i) q[i] = static_cast<int>(i);
    return dense_on(q);
  }

  SpMatC sparse_on(const std::vector<int>& qubits) const {
    if (qubits.size() > 30) throw BudgetExceeded("sparse realization beyond 30 qubits");
    auto loc = localize(qubits);
    std::size_t dim = std::size_t{1} << qubits.size();
    // Group by flip pattern so every pattern contributes one entry per column.
    std::map<std::uint64_t, std::vector<std::pair<std::uint64_t, cplx>>> by_x;
    for (const auto& [lx, lz, c] : loc) by_x[lx].push_back({lz, c});
    std::vector<Eigen::Triplet<cplx>> trip;
    trip.reserve(by_x.size() * dim);
    for (const auto& [lx, zs] : by_x) {
      for (std::uint64_t b = 0; b < dim; ++b) {
        cplx v = 0.0;
        for (const auto& [lz, c] : zs) v += c * pauli_column_factor(lx, lz, b);
        if (v != cplx(0.0)) trip.emplace_back(static_cast<int>(b ^ lx), static_cast<int>(b), v);
      }
    }
    SpMatC m(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(dim));
    m.setFromTriplets(trip.begin(), trip.end());
    m.makeCompressed();
    return m;
  }
  SpMatC sparse(std::size_t n_qubits) const {
    std::vector<int> q(n_qubits);
    for (std::size_t i = 0; i < n_qubits; ++i) q[i] = static_cast<int>(i);
    return sparse_on(q);
  }

  // out = O * in on the full n-qubit space, without storing a matrix.
  void apply(const VecC& in, VecC& out, std::size_t n_qubits) const {
    std::vector<int> q(n_qubits);
    for (std::size_t i = 0; i < n_qubits; ++i) q[i] = static_cast<int>(i);
    auto loc = localize(q);
    std::size_t dim = std::size_t{1} << n_qubits;
    out = VecC::Zero(static_cast<Eigen::Index>(dim));
    for (const auto& [lx, lz, c] : loc) {
      cplx base = c * ipow(std::popcount(lx & lz));
      for (std::uint64_t b = 0; b < dim; ++b) {
        double s = (std::popcount(lz & b) & 1) ? -1.0 : 1.0;
        out[static_cast<Eigen::Index>(b ^ lx)] += base * s * in[static_cast<Eigen::Index>(b)];
      }
    }
  }

  // Operator norm computed on the operator's own support.
  double op_norm() const {
    if (terms_.empty()) return 0.0;
    std::vector<int> q = support().indices();
    if (q.empty()) return std::abs(terms_.begin()->second);
    if (q.size() <= 10) return dense_operator_norm(dense_on(q));
    if (q.size() > 20) throw BudgetExceeded("op_norm: support beyond 20 qubits");
    SpMatC m = sparse_on(q);
    SpMatC adj = m.adjoint();
    return operator_norm_iterative([&](const VecC& v, VecC& out) { out = m * v; },
                                   [&](const VecC& v, VecC& out) { out = adj * v; }, static_cast<std::size_t>(m.cols()));
  }

 private:
  struct LocalTerm {
    std::uint64_t x, z;
    cplx c;
  };
  std::vector<LocalTerm> localize(const std::vector<int>& qubits) const {
    if (qubits.size() > 63) throw BudgetExceeded("localize: more than 63 qubits");
    Mask allowed = Mask::of(qubits);
    std::vector<LocalTerm> out;
    out.reserve(terms_.size());
    for (const auto& [k, c] : terms_) {
      if (!k.support().subset_of(allowed)) throw std::invalid_argument("PauliOperator: term outside realization support");
      std::uint64_t lx = 0, lz = 0;
      for (std::size_t j = 0; j < qubits.size(); ++j) {
        auto qq = static_cast<std::size_t>(qubits[j]);
        if (k.x.test(qq)) lx |= std::uint64_t{1} << j;
        if (k.z.test(qq)) lz |= std::uint64_t{1} << j;
      }
      out.push_back({lx, lz, c});
    }
    return out;
  }
  void merge_n(const PauliOperator& o) {
    if (n_ == 0) n_ = o.n_;
  }

  std::size_t n_ = 0;
  Map terms_;
};

struct Realized {
  bool is_dense = true;
  MatC dense;
  SpMatC sparse;
  double norm = 0.0;
};

// Matrix realization on n qubits plus operator norm (largest singular value).
inline Realized realize_and_norm(const PauliOperator& op, std::size_t n_qubits, const Caps& caps = {}) {
  Realized r;
  if (n_qubits <= caps.dense_qubits) {
    r.is_dense = true;
    r.dense = op.dense(n_qubits);
    r.norm = dense_operator_norm(r.dense);
  } else if (n_qubits <= caps.sparse_qubits) {
    r.is_dense = false;
    r.sparse = op.sparse(n_qubits);
    SpMatC adj = r.sparse.adjoint();
    std::size_t dim = std::size_t{1} << n_qubits;
    r.norm = operator_norm_iterative([&](const VecC& v, VecC& out) { out = r.sparse * v; },
                                     [&](const VecC& v, VecC& out) { out = adj * v; }, dim);
  } else {
    throw BudgetExceeded("realize_and_norm: " + std::to_string(n_qubits) + " qubits exceeds the sparse cap");
  }
  return r;
}

}  // namespace qkam
