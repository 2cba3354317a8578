#pragma once

#include "qkam/bits.hpp"
#include "qkam/pauli.hpp"

#include <cstdint>
#include <fstream>
#include <istream>
#include <limits>
#include <optional>
#include <ostream>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace qkam {

enum class CodeKind { QuantumCss, QuantumGeneral, ClassicalZ };

inline const char* kind_name(CodeKind k) {
  switch (k) {
    case CodeKind::QuantumCss: return "css";
    case CodeKind::QuantumGeneral: return "general";
    default: return "classical";
  }
}

inline CodeKind parse_kind(const std::string& s) {
  if (s == "css") return CodeKind::QuantumCss;
  if (s == "general") return CodeKind::QuantumGeneral;
  if (s == "classical") return CodeKind::ClassicalZ;
  throw std::invalid_argument("unknown code kind: " + s);
}

class StabilizerCode {
 public:
  StabilizerCode() = default;
  StabilizerCode(std::size_t n, std::vector<PauliString> checks, CodeKind kind, std::string name = {})
      : n_(n), checks_(std::move(checks)), kind_(kind), name_(std::move(name)) {
    if (checks_.empty()) throw std::invalid_argument("StabilizerCode: no checks");
    if (checks_.size() > kMaxBits) throw std::invalid_argument("StabilizerCode: more checks than kMaxBits");
    for (const auto& c : checks_) {
      if (c.n() != n_) throw std::invalid_argument("StabilizerCode: check length mismatch");
      if (c.is_identity()) throw std::invalid_argument("StabilizerCode: identity check");
      if (kind_ == CodeKind::ClassicalZ && c.x().any()) throw std::invalid_argument("StabilizerCode: classical code with X part");
    }
    for (std::size_t a = 0; a < checks_.size(); ++a)
      for (std::size_t b = a + 1; b < checks_.size(); ++b)
        if (!commutes(checks_[a], checks_[b]))
          throw InvariantViolation("StabilizerCode: checks " + std::to_string(a) + " and " + std::to_string(b) +
                                   " anticommute");
    qubit_checks_.assign(n_, Mask{});
    for (std::size_t a = 0; a < checks_.size(); ++a)
      checks_[a].support().for_each([&](int q) { qubit_checks_[static_cast<std::size_t>(q)].set(a); });
  }

  std::size_t n() const { return n_; }
  std::size_t num_checks() const { return checks_.size(); }
  const std::vector<PauliString>& checks() const { return checks_; }
  const PauliString& check(std::size_t a) const { return checks_[a]; }
  CodeKind kind() const { return kind_; }
  bool is_classical() const { return kind_ == CodeKind::ClassicalZ; }
  const std::string& name() const { return name_; }

  Mask check_support(std::size_t a) const { return checks_[a].support(); }
  // Qubit support of a set of checks.
  Mask qubit_support(const Mask& checks) const {
    Mask m;
    checks.for_each([&](int a) { m |= checks_[static_cast<std::size_t>(a)].support(); });
    return m;
  }
  // supp_c(x): checks acting on qubit x.
  const Mask& checks_on(std::size_t q) const { return qubit_checks_[q]; }
  Mask checks_on(const Mask& qubits) const {
    Mask m;
    qubits.for_each([&](int q) { m |= qubit_checks_[static_cast<std::size_t>(q)]; });
    return m;
  }

  // Symplectic row (x|z) of a check.
  BitVec symplectic_row(std::size_t a) const { return symplectic(checks_[a].x(), checks_[a].z()); }
  BitVec symplectic(const Mask& x, const Mask& z) const {
    BitVec v(2 * n_);
    x.for_each([&](int q) { v.set(static_cast<std::size_t>(q)); });
    z.for_each([&](int q) { v.set(n_ + static_cast<std::size_t>(q)); });
    return v;
  }

  std::size_t rank() const {
    Gf2Basis b(2 * n_, checks_.size());
    for (std::size_t a = 0; a < checks_.size(); ++a) b.insert_generator(symplectic_row(a), a);
    return b.rank();
  }
  std::size_t k_logical() const { return n_ - rank(); }

  // Bit-level parity-check matrix of a classical code (rows = checks).
  Gf2Matrix parity_matrix() const {
    Gf2Matrix h(checks_.size(), n_);
    for (std::size_t a = 0; a < checks_.size(); ++a) {
      const Mask& m = kind_ == CodeKind::ClassicalZ ? checks_[a].z() : checks_[a].support();
      m.for_each([&](int q) { h.set(a, static_cast<std::size_t>(q)); });
    }
    return h;
  }

  // Checks with X part and with Z part for CSS codes.
  std::vector<std::size_t> x_checks() const {
    std::vector<std::size_t> v;
    for (std::size_t a = 0; a < checks_.size(); ++a)
      if (checks_[a].x().any()) v.push_back(a);
    return v;
  }
  std::vector<std::size_t> z_checks() const {
    std::vector<std::size_t> v;
    for (std::size_t a = 0; a < checks_.size(); ++a)
      if (checks_[a].z().any() && checks_[a].x().none()) v.push_back(a);
    return v;
  }

  // H0 = sum_a E_a with E_a = (1 - C_a)/2.
  PauliOperator h0() const {
    PauliOperator h(n_);
    for (const auto& c : checks_) {
      h.add(PauliString(n_), 0.5);
      h.add(c, -0.5);
    }
    h.prune();
    return h;
  }

 private:
  std::size_t n_ = 0;
  std::vector<PauliString> checks_;
  CodeKind kind_ = CodeKind::QuantumGeneral;
  std::string name_;
  std::vector<Mask> qubit_checks_;
};

struct Membership {
  BitVec exponents;  // a with prod_a C_a^{e_a} = sign * p (ordered product, ascending a)
  int sign = 1;
};

inline PauliString check_product(const StabilizerCode& code, const BitVec& e) {
  PauliString p(code.n());
  for (int a : e.indices()) p = p * code.check(static_cast<std::size_t>(a));
  return p;
}

// Exponent vector and sign of p in the stabilizer group; absent if p is not in the group.
inline std::optional<Membership> group_membership(const PauliString& p, const StabilizerCode& code) {
  if (p.n() != code.n()) throw std::invalid_argument("group_membership: length mismatch");
  for (const auto& c : code.checks())
    if (!commutes(p, c)) return std::nullopt;
  Gf2Basis b(2 * code.n(), code.num_checks());
  for (std::size_t a = 0; a < code.num_checks(); ++a) b.insert_generator(code.symplectic_row(a), a);
  auto sol = b.solve(code.symplectic(p.x(), p.z()));
  if (!sol) return std::nullopt;
  PauliString q = check_product(code, *sol);
  int diff = ((q.phase() - p.phase()) % 4 + 4) % 4;
  if (diff == 1 || diff == 3) return std::nullopt;  // differs by +-i: not Hermitian-consistent
  return Membership{*sol, diff == 0 ? 1 : -1};
}

inline StabilizerCode make_repetition(std::size_t n, bool periodic) {
  if (n < 2) throw std::invalid_argument("make_repetition: n < 2");
  std::vector<PauliString> checks;
  std::size_t m = periodic && n > 2 ? n : n - 1;
  for (std::size_t i = 0; i < m; ++i) {
    Mask z = Mask::single(i);
    z.set((i + 1) % n);
    checks.push_back(PauliString::z_string(n, z));
  }
  return StabilizerCode(n, std::move(checks), CodeKind::ClassicalZ,
                        (periodic ? "ising-" : "ising-open-") + std::to_string(n));
}

// Edges: horizontal h(x,y) = y*lx + x, vertical v(x,y) = lx*ly + y*lx + x.
// Stars come first (index y*lx + x), then plaquettes.
inline StabilizerCode make_toric(std::size_t lx, std::size_t ly) {
  if (lx < 2 || ly < 2) throw std::invalid_argument("make_toric: dimensions < 2");
  std::size_t n = 2 * lx * ly;
  auto h = [&](std::size_t x, std::size_t y) { return (y % ly) * lx + (x % lx); };
  auto v = [&](std::size_t x, std::size_t y) { return lx * ly + (y % ly) * lx + (x % lx); };
  std::vector<PauliString> checks;
  for (std::size_t y = 0; y < ly; ++y)
    for (std::size_t x = 0; x < lx; ++x) {
      Mask m;
      m.flip(h(x, y));
      m.flip(h(x + lx - 1, y));
      m.flip(v(x, y));
      m.flip(v(x, y + ly - 1));
      checks.push_back(PauliString::x_string(n, m));
    }
  for (std::size_t y = 0; y < ly; ++y)
    for (std::size_t x = 0; x < lx; ++x) {
      Mask m;
      m.flip(h(x, y));
      m.flip(h(x, y + 1));
      m.flip(v(x, y));
      m.flip(v(x + 1, y));
      checks.push_back(PauliString::z_string(n, m));
    }
  return StabilizerCode(n, std::move(checks), CodeKind::QuantumCss,
                        "toric-" + std::to_string(lx) + "x" + std::to_string(ly));
}

inline Gf2Matrix repetition_matrix(std::size_t n, bool periodic = false) {
  std::size_t m = periodic ? n : n - 1;
  Gf2Matrix h(m, n);
  for (std::size_t i = 0; i < m; ++i) {
    h.set(i, i);
    h.set(i, (i + 1) % n, true);
  }
  return h;
}

// HX = [H1 (x) I | I (x) H2^T], HZ = [I (x) H2 | H1^T (x) I].
// Qubit (i,j) in the first block is i*n2 + j; (k,l) in the second is n1*n2 + k*m2 + l.
inline StabilizerCode make_hypergraph_product(const Gf2Matrix& h1, const Gf2Matrix& h2) {
  std::size_t m1 = h1.rows(), n1 = h1.cols(), m2 = h2.rows(), n2 = h2.cols();
  if (m1 == 0 || n1 == 0 || m2 == 0 || n2 == 0) throw std::invalid_argument("make_hypergraph_product: empty input");
  std::size_t n = n1 * n2 + m1 * m2;
  auto q1 = [&](std::size_t i, std::size_t j) { return i * n2 + j; };
  auto q2 = [&](std::size_t k, std::size_t l) { return n1 * n2 + k * m2 + l; };
  std::vector<PauliString> checks;
  for (std::size_t a = 0; a < m1; ++a)
    for (std::size_t j = 0; j < n2; ++j) {
      Mask m;
      for (std::size_t i = 0; i < n1; ++i)
        if (h1.get(a, i)) m.set(q1(i, j));
      for (std::size_t l = 0; l < m2; ++l)
        if (h2.get(l, j)) m.set(q2(a, l));
      if (m.any()) checks.push_back(PauliString::x_string(n, m));
    }
  for (std::size_t i = 0; i < n1; ++i)
    for (std::size_t b = 0; b < m2; ++b) {
      Mask m;
      for (std::size_t j = 0; j < n2; ++j)
        if (h2.get(b, j)) m.set(q1(i, j));
      for (std::size_t k = 0; k < m1; ++k)
        if (h1.get(k, i)) m.set(q2(k, b));
      if (m.any()) checks.push_back(PauliString::z_string(n, m));
    }
  return StabilizerCode(n, std::move(checks), CodeKind::QuantumCss, "hgp");
}

// Unbiased integer in [0, bound) from a 64-bit engine by rejection.
inline std::uint64_t uniform_below(std::mt19937_64& rng, std::uint64_t bound) {
  std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() - std::numeric_limits<std::uint64_t>::max() % bound;
  std::uint64_t r;
  do r = rng();
  while (r >= limit);
  return r % bound;
}

// Configuration model: every column gets w sockets, every row n*w/m; row sockets
// are Fisher-Yates shuffled with mt19937_64(seed) and paired in order. Draws with
// a repeated (row, column) edge are rejected and redrawn from the same stream.
inline Gf2Matrix make_random_classical_ldpc(std::size_t n, std::size_t m, std::size_t w, std::uint64_t seed,
                                            int max_attempts = 10000) {
  if (n == 0 || m == 0 || w == 0) throw std::invalid_argument("make_random_classical_ldpc: empty shape");
  if ((n * w) % m != 0 || w > m) throw std::invalid_argument("make_random_classical_ldpc: infeasible degree sequence");
  std::size_t rw = n * w / m;
  if (rw > n) throw std::invalid_argument("make_random_classical_ldpc: infeasible degree sequence");
  std::mt19937_64 rng(seed);
  std::vector<std::size_t> sockets;
  for (int attempt = 0; attempt < max_attempts; ++attempt) {
    sockets.clear();
    for (std::size_t r = 0; r < m; ++r)
      for (std::size_t k = 0; k < rw; ++k) sockets.push_back(r);
    for (std::size_t i = sockets.size(); i > 1; --i) std::swap(sockets[i - 1], sockets[uniform_below(rng, i)]);
    Gf2Matrix h(m, n);
    bool ok = true;
    for (std::size_t c = 0; c < n && ok; ++c)
      for (std::size_t k = 0; k < w; ++k) {
        std::size_t r = sockets[c * w + k];
        if (h.get(r, c)) {
          ok = false;
          break;
        }
        h.set(r, c);
      }
    if (ok) return h;
  }
  throw std::invalid_argument("make_random_classical_ldpc: no simple graph found within the attempt budget");
}

inline StabilizerCode classical_code_from_matrix(const Gf2Matrix& h, std::string name = "classical") {
  std::vector<PauliString> checks;
  for (std::size_t r = 0; r < h.rows(); ++r) {
    if (!h.row(r).any()) continue;
    checks.push_back(PauliString::z_string(h.cols(), h.row(r).to_mask()));
  }
  return StabilizerCode(h.cols(), std::move(checks), CodeKind::ClassicalZ, std::move(name));
}

// X-type generators spanning ker(H).
inline std::vector<PauliString> classical_symmetry_group(const StabilizerCode& code) {
  if (!code.is_classical()) throw std::invalid_argument("classical_symmetry_group: code is not classical");
  std::vector<PauliString> gens;
  for (const auto& k : code.parity_matrix().kernel()) gens.push_back(PauliString::x_string(code.n(), k.to_mask()));
  return gens;
}

// ---- file formats ----

inline void write_code(std::ostream& os, const StabilizerCode& code) {
  os << "# qkam code v1\n";
  os << "kind " << kind_name(code.kind()) << "\n";
  os << "n " << code.n() << "\n";
  os << "checks " << code.num_checks() << "\n";
  os << "name " << (code.name().empty() ? "unnamed" : code.name()) << "\n";
  for (const auto& c : code.checks()) {
    os << (c.phase() == 2 ? '-' : '+') << c.x().bitstring(code.n()) << '|' << c.z().bitstring(code.n()) << "\n";
  }
}

inline StabilizerCode read_code(std::istream& is) {
  std::string line;
  if (!std::getline(is, line) || line != "# qkam code v1") throw std::runtime_error("read_code: missing header");
  CodeKind kind = CodeKind::QuantumGeneral;
  std::size_t n = 0, m = 0;
  std::string name;
  for (int i = 0; i < 4; ++i) {
    if (!std::getline(is, line)) throw std::runtime_error("read_code: truncated header");
    std::istringstream ls(line);
    std::string key;
    ls >> key;
    if (key == "kind") {
      std::string k;
      ls >> k;
      kind = parse_kind(k);
    } else if (key == "n") {
      ls >> n;
    } else if (key == "checks") {
      ls >> m;
    } else if (key == "name") {
      ls >> name;
    } else {
      throw std::runtime_error("read_code: unknown key " + key);
    }
  }
  std::vector<PauliString> checks;
  for (std::size_t a = 0; a < m; ++a) {
    if (!std::getline(is, line)) throw std::runtime_error("read_code: truncated check list");
    if (line.size() != 2 * n + 2 || line[n + 1] != '|' || (line[0] != '+' && line[0] != '-'))
      throw std::runtime_error("read_code: malformed row " + std::to_string(a));
    Mask x, z;
    for (std::size_t q = 0; q < n; ++q) {
      if (line[1 + q] == '1') x.set(q);
      if (line[n + 2 + q] == '1') z.set(q);
    }
    checks.emplace_back(n, x, z, line[0] == '-' ? 2 : 0);
  }
  return StabilizerCode(n, std::move(checks), kind, name);
}

inline void save_code(const std::string& path, const StabilizerCode& code) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("save_code: cannot open " + path);
  write_code(os, code);
}

inline StabilizerCode load_code(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("load_code: cannot open " + path);
  return read_code(is);
}

// MacKay alist format.
inline void write_alist(std::ostream& os, const Gf2Matrix& h) {
  std::size_t n = h.cols(), m = h.rows();
  std::size_t maxc = 0, maxr = 0;
  for (std::size_t c = 0; c < n; ++c) maxc = std::max(maxc, h.col_weight(c));
  for (std::size_t r = 0; r < m; ++r) maxr = std::max(maxr, h.row_weight(r));
  os << n << ' ' << m << "\n" << maxc << ' ' << maxr << "\n";
  for (std::size_t c = 0; c < n; ++c) os << h.col_weight(c) << (c + 1 < n ? ' ' : '\n');
  for (std::size_t r = 0; r < m; ++r) os << h.row_weight(r) << (r + 1 < m ? ' ' : '\n');
  for (std::size_t c = 0; c < n; ++c) {
    auto idx = h.column(c).indices();
    for (std::size_t k = 0; k < maxc; ++k) os << (k < idx.size() ? idx[k] + 1 : 0) << (k + 1 < maxc ? ' ' : '\n');
  }
  for (std::size_t r = 0; r < m; ++r) {
    auto idx = h.row(r).indices();
    for (std::size_t k = 0; k < maxr; ++k) os << (k < idx.size() ? idx[k] + 1 : 0) << (k + 1 < maxr ? ' ' : '\n');
  }
}

inline Gf2Matrix read_alist(std::istream& is) {
  std::size_t n, m, maxc, maxr;
  if (!(is >> n >> m >> maxc >> maxr)) throw std::runtime_error("read_alist: bad header");
  std::vector<std::size_t> cw(n), rw(m);
  for (auto& v : cw) is >> v;
  for (auto& v : rw) is >> v;
  Gf2Matrix h(m, n);
  for (std::size_t c = 0; c < n; ++c)
    for (std::size_t k = 0; k < maxc; ++k) {
      std::size_t r;
      if (!(is >> r)) throw std::runtime_error("read_alist: truncated column list");
      if (r > m) throw std::runtime_error("read_alist: row index out of range");
      if (r) h.set(r - 1, c);
    }
  for (std::size_t r = 0; r < m; ++r)
    for (std::size_t k = 0; k < maxr; ++k) {
      std::size_t c;
      if (!(is >> c)) throw std::runtime_error("read_alist: truncated row list");
      if (c > n) throw std::runtime_error("read_alist: column index out of range");
      if (c && !h.get(r, c - 1)) throw std::runtime_error("read_alist: row and column lists disagree");
    }
  for (std::size_t c = 0; c < n; ++c)
    if (h.col_weight(c) != cw[c]) throw std::runtime_error("read_alist: column weight mismatch");
  return h;
}

}  // namespace qkam
