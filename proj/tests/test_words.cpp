#include "oracle.hpp"
#include "qkam/codes.hpp"
#include "qkam/graphs.hpp"
#include "qkam/words.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace qkam;

namespace {

MatC left_matrix(const StabilizerCode& c, const Word& w) {
  std::size_t dim = std::size_t{1} << c.n();
  MatC m = MatC::Identity(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(dim));
  w.left_g().for_each([&](int a) { m = m * oracle::projector_matrix(c.check(static_cast<std::size_t>(a)), true); });
  w.left_e().for_each([&](int a) { m = m * oracle::projector_matrix(c.check(static_cast<std::size_t>(a)), false); });
  return m;
}

MatC right_matrix(const StabilizerCode& c, const Word& w) {
  std::size_t dim = std::size_t{1} << c.n();
  MatC m = MatC::Identity(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(dim));
  w.right_g().for_each([&](int a) { m = m * oracle::projector_matrix(c.check(static_cast<std::size_t>(a)), true); });
  w.right_e().for_each([&](int a) { m = m * oracle::projector_matrix(c.check(static_cast<std::size_t>(a)), false); });
  return m;
}

Word random_word(std::size_t n_checks, std::mt19937_64& rng) {
  std::uniform_int_distribution<int> d(0, 7);
  Word w;
  for (std::size_t a = 0; a < n_checks; ++a) {
    switch (d(rng)) {
      case 0: w.plus.set(a); break;
      case 1: w.minus.set(a); break;
      case 2: w.e.set(a); break;
      case 3: w.g.set(a); break;
      default: break;
    }
  }
  return w;
}

// Random operator whose check support lies in S: identity plus strings on qubits touched only by S.
PauliOperator random_core(const StabilizerCode& c, const Mask& s, std::mt19937_64& rng) {
  std::normal_distribution<double> nd;
  PauliOperator op = PauliOperator::identity(c.n(), cplx(nd(rng), nd(rng)));
  Mask allowed;
  for (std::size_t q = 0; q < c.n(); ++q)
    if (c.checks_on(Mask::single(q)).subset_of(s)) allowed.set(q);
  if (allowed.none()) return op;
  std::uniform_int_distribution<int> d4(0, 3);
  for (int t = 0; t < 3; ++t) {
    PauliString p(c.n());
    allowed.for_each([&](int q) { p.set(static_cast<std::size_t>(q), "IXYZ"[d4(rng)]); });
    op.add(p, cplx(nd(rng), nd(rng)));
  }
  return op;
}

PauliOperator random_local_operator(std::size_t n, std::size_t terms, std::size_t max_weight, std::mt19937_64& rng,
                                    bool hermitian) {
  std::normal_distribution<double> nd;
  std::uniform_int_distribution<std::size_t> dq(0, n - 1);
  std::uniform_int_distribution<int> d3(0, 2);
  PauliOperator op(n);
  for (std::size_t t = 0; t < terms; ++t) {
    PauliString p(n);
    std::size_t w = 1 + dq(rng) % max_weight;
    for (std::size_t i = 0; i < w; ++i) p.set(dq(rng), "XYZ"[d3(rng)]);
    op.add(p, hermitian ? cplx(nd(rng), 0.0) : cplx(nd(rng), nd(rng)));
  }
  op.prune_absolute(0.0);
  return op;
}

double max_diff(const MatC& a, const MatC& b) { return (a - b).cwiseAbs().maxCoeff(); }

void table_soundness(const StabilizerCode& c, int pairs, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  int defined = 0, undefined = 0;
  for (int t = 0; t < pairs; ++t) {
    Word sp = random_word(c.num_checks(), rng), s = random_word(c.num_checks(), rng);
    MatC xp = left_matrix(c, sp) * oracle::kron_operator(random_core(c, sp.set(), rng), c.n()) * right_matrix(c, sp);
    MatC x = left_matrix(c, s) * oracle::kron_operator(random_core(c, s.set(), rng), c.n()) * right_matrix(c, s);
    MatC prod = xp * x;
    auto w = word_multiply(sp, s);
    if (!w) {
      ++undefined;
      EXPECT_LT(prod.cwiseAbs().maxCoeff(), 1e-12);
      continue;
    }
    ++defined;
    ASSERT_TRUE(w->valid());
    EXPECT_EQ(w->set(), sp.set() | s.set());
    EXPECT_EQ(w->size() + (sp.set() & s.set()).count(), sp.size() + s.size());
    EXPECT_LT(max_diff(left_matrix(c, *w) * prod * right_matrix(c, *w), prod), 1e-10);
  }
  EXPECT_GT(defined, 0);
  EXPECT_GT(undefined, 0);
}

}  // namespace

TEST(Word, TableEntries) {
  Word a, b;
  a.minus.set(0);
  b.plus.set(0);
  auto w = word_multiply(a, b);
  ASSERT_TRUE(w);
  EXPECT_TRUE(w->g.test(0));

  a = Word{};
  b = Word{};
  a.g.set(0);
  b.e.set(0);
  EXPECT_FALSE(word_multiply(a, b));

  a = Word{};
  a.plus.set(0);
  b = Word{};
  b.minus.set(0);
  w = word_multiply(a, b);
  ASSERT_TRUE(w);
  EXPECT_TRUE(w->e.test(0));
  EXPECT_FALSE(word_multiply(a, a));

  Word id;
  b = Word{};
  b.plus.set(1);
  b.e.set(3);
  EXPECT_EQ(*word_multiply(id, b), b);
  EXPECT_EQ(*word_multiply(b, id), b);
}

TEST(Word, AdjointReversesProducts) {
  std::mt19937_64 rng(3);
  for (int t = 0; t < 500; ++t) {
    Word a = random_word(8, rng), b = random_word(8, rng);
    auto ab = word_multiply(a, b);
    auto ba = word_multiply(b.adjoint(), a.adjoint());
    ASSERT_EQ(ab.has_value(), ba.has_value());
    if (ab) {
      EXPECT_EQ(ab->adjoint(), *ba);
    }
  }
}

TEST(Word, TableSoundnessIsing) { table_soundness(make_repetition(6, true), 150, 11); }

TEST(Word, TableSoundnessToric) { table_soundness(make_toric(2, 2), 30, 12); }

TEST(Sandwich, IdempotentAndMatchesMatrices) {
  auto c = make_toric(2, 2);
  std::mt19937_64 rng(5);
  for (int t = 0; t < 10; ++t) {
    Word w = random_word(c.num_checks(), rng);
    PauliOperator core = random_core(c, w.set(), rng);
    PauliOperator x = sandwich_expand(core, w, c);
    MatC expect = left_matrix(c, w) * oracle::kron_operator(core, c.n()) * right_matrix(c, w);
    EXPECT_LT(max_diff(oracle::kron_operator(x, c.n()), expect), 1e-12);
    PauliOperator again = sandwich_expand(x, w, c);
    EXPECT_LT(max_diff(oracle::kron_operator(again, c.n()), expect), 1e-12);
  }
  Word w;
  w.plus.set(0);
  EXPECT_THROW(sandwich_expand(PauliOperator(PauliString::single(c.n(), 0, 'X'), 1.0), w, c), std::invalid_argument);
}

TEST(Decompose, IsingXGivesFourWords) {
  auto c = make_repetition(8, true);
  auto g = build_graphs(c);
  Decomposer dec(c, g);
  auto d = dec.decompose(PauliOperator(PauliString::single(8, 3, 'X'), 1.0));
  ASSERT_EQ(d.collection.size(), 4u);
  for (const auto& [w, e] : d.collection.entries()) {
    EXPECT_EQ(w.plus.count() + w.minus.count(), 2u);
    EXPECT_TRUE(w.e.none() && w.g.none());
    EXPECT_TRUE(w.set().test(2) && w.set().test(3));
    EXPECT_NEAR(e.norm(), 1.0, 1e-12);
  }
}

TEST(Decompose, IsingZIsDiagonal) {
  auto c = make_repetition(8, true);
  auto g = build_graphs(c);
  Decomposer dec(c, g);
  auto d = dec.decompose(PauliOperator(PauliString::single(8, 3, 'Z'), 1.0));
  for (const auto& [w, e] : d.collection.entries()) {
    EXPECT_TRUE(w.plus.none() && w.minus.none());
  }
}

TEST(Decompose, ReproducesOperatorAndClasses) {
  for (int which = 0; which < 2; ++which) {
    auto c = which == 0 ? make_repetition(7, false) : make_toric(2, 2);
    auto g = build_graphs(c);
    Decomposer dec(c, g);
    std::mt19937_64 rng(21 + which);
    for (int t = 0; t < 4; ++t) {
      PauliOperator op = random_local_operator(c.n(), 6, 3, rng, t % 2 == 0);
      op.add(PauliString(c.n()), 0.7);
      auto d = dec.decompose(op);
      EXPECT_NEAR(std::abs(d.identity - cplx(0.7)), 0.0, 1e-12);
      PauliOperator back = d.collection.to_operator();
      back.add(PauliString(c.n()), d.identity);
      EXPECT_LT(max_diff(oracle::kron_operator(back, c.n()), oracle::kron_operator(op, c.n())), 1e-12);
      for (const auto& [w, e] : d.collection.entries()) {
        if (which == 0) {
          MatC x = oracle::kron_operator(e.op, c.n());
          EXPECT_LT(max_diff(left_matrix(c, w) * x * right_matrix(c, w), x), 1e-12);
        } else {
          PauliOperator again = sandwich_expand(e.op, w, c);
          again -= e.op;
          again.prune_absolute(1e-12);
          EXPECT_TRUE(again.empty()) << w.str();
        }
        EXPECT_LE(e.norm(), op.one_norm() + 1e-12);
      }
    }
  }
}

TEST(Commutator, MatchesDenseCommutator) {
  for (int which = 0; which < 2; ++which) {
    auto c = which == 0 ? make_repetition(6, true) : make_toric(2, 2);
    auto g = build_graphs(c);
    Decomposer dec(c, g);
    std::mt19937_64 rng(31 + which);
    for (int t = 0; t < 3; ++t) {
      PauliOperator a = random_local_operator(c.n(), 4, 2, rng, true);
      PauliOperator b = random_local_operator(c.n(), 4, 2, rng, false);
      auto da = dec.decompose(a), db = dec.decompose(b);
      auto r = collection_commutator(da.collection, db.collection);
      MatC ma = oracle::kron_operator(da.collection.to_operator(), c.n());
      MatC mb = oracle::kron_operator(db.collection.to_operator(), c.n());
      MatC expect = ma * mb - mb * ma;
      EXPECT_LT(max_diff(oracle::kron_operator(r.collection.to_operator(), c.n()), expect), 1e-10);
      EXPECT_LT(r.dropped, 1e-10);
    }
  }
}

TEST(Commutator, H0WithItselfVanishes) {
  auto c = make_toric(3, 3);
  auto h0 = h0_collection(c);
  auto r = collection_commutator(h0, h0);
  EXPECT_TRUE(r.collection.empty());
}

TEST(Commutator, H0ActsByChargeCount) {
  auto c = make_repetition(6, true);
  auto g = build_graphs(c);
  Decomposer dec(c, g);
  std::mt19937_64 rng(41);
  auto v = dec.decompose(random_local_operator(6, 5, 3, rng, true)).collection;
  auto h0 = h0_collection(c);
  auto r = collection_commutator(h0, v).collection;
  MatC mh = oracle::kron_operator(h0.to_operator(), 6), mv = oracle::kron_operator(v.to_operator(), 6);
  EXPECT_LT(max_diff(oracle::kron_operator(r.to_operator(), 6), mh * mv - mv * mh), 1e-10);
  for (const auto& [w, e] : r.entries()) {
    const WordOperator* src = v.find(w);
    ASSERT_NE(src, nullptr);
    double charge = static_cast<double>(w.plus.count()) - static_cast<double>(w.minus.count());
    PauliOperator diff = e.op;
    diff.add_scaled(src->op, -charge);
    diff.prune_absolute(1e-12);
    EXPECT_TRUE(diff.empty()) << w.str();
  }
}

TEST(Commutator, DisjointWordsGiveNothing) {
  auto c = make_repetition(10, true);
  auto g = build_graphs(c);
  Decomposer dec(c, g);
  auto a = dec.decompose(PauliOperator(PauliString::single(10, 1, 'X'), 1.0)).collection;
  auto b = dec.decompose(PauliOperator(PauliString::single(10, 6, 'X'), 1.0)).collection;
  EXPECT_TRUE(collection_commutator(a, b).collection.empty());
}

TEST(Norms, Examples) {
  auto c = make_repetition(8, true);
  auto g = build_graphs(c);
  Decomposer dec(c, g);
  EXPECT_NEAR(h0_collection(c).word_norm(0.7), std::exp(0.7), 1e-12);
  EXPECT_EQ(OperatorCollection(8, 8).word_norm(1.0), 0.0);

  PauliOperator field(8);
  for (std::size_t q = 0; q < 8; ++q) field.add(PauliString::single(8, q, 'X'), 0.1);
  EXPECT_NEAR(dec.pauli_norm(field, 0.5), 0.1 * std::exp(0.5), 1e-12);
  PauliString full(8);
  for (std::size_t q = 0; q < 8; ++q) full.set(q, 'Z');
  EXPECT_NEAR(dec.pauli_norm(PauliOperator(full, 1.0), 0.3), std::exp(0.3 * 8), 1e-9);
  EXPECT_EQ(dec.pauli_norm(PauliOperator(8), 1.0), 0.0);
}

TEST(Norms, MonotoneInMu) {
  auto c = make_toric(2, 2);
  auto g = build_graphs(c);
  Decomposer dec(c, g);
  std::mt19937_64 rng(51);
  PauliOperator op = random_local_operator(c.n(), 8, 3, rng, true);
  auto d = dec.decompose(op).collection;
  double prev_w = 0.0, prev_p = 0.0;
  for (double mu = 0.0; mu <= 3.0; mu += 0.25) {
    double w = d.word_norm(mu), p = dec.pauli_norm(op, mu);
    EXPECT_GE(w, prev_w);
    EXPECT_GE(p, prev_p);
    prev_w = w;
    prev_p = p;
  }
}

TEST(Norms, RelationInequalities) {
  for (int which = 0; which < 3; ++which) {
    auto c = which == 0 ? make_repetition(8, true) : which == 1 ? make_toric(2, 2) : make_repetition(9, false);
    auto g = build_graphs(c);
    auto kappa = ball_and_kappa(g, 4).kappa;
    Decomposer dec(c, g);
    double wq = static_cast<double>(g.w_q), wc = static_cast<double>(g.w_c);
    std::mt19937_64 rng(61 + which);
    for (int t = 0; t < 4; ++t) {
      PauliOperator op = random_local_operator(c.n(), 6, 2, rng, true);
      auto d = dec.decompose(op).collection;
      for (double mu : {0.1, 0.5, 1.0}) {
        double lhs1 = d.word_norm(mu);
        double rhs1 = dec.pauli_norm(op, wq * mu + wq * std::log(2.0) + kappa + std::log(2.0 * wc));
        EXPECT_LE(lhs1, rhs1 * (1 + 1e-12));
        PauliOperator back = d.to_operator();
        double lhs2 = dec.pauli_norm(back, mu);
        double rhs2 = d.word_norm(wc * mu + std::log(4.0 * wq));
        EXPECT_LE(lhs2, rhs2 * (1 + 1e-12));
      }
    }
  }
}

TEST(Norms, ExtensiveSumBound) {
  auto c = make_toric(2, 2);
  auto g = build_graphs(c);
  Decomposer dec(c, g);
  std::mt19937_64 rng(71);
  auto d = dec.decompose(random_local_operator(c.n(), 10, 3, rng, true)).collection;
  double total = oracle::kron_operator(d.to_operator(), c.n()).operatorNorm();
  EXPECT_LE(total, static_cast<double>(c.num_checks()) * d.word_norm(0.0) + 1e-10);
}

TEST(Split, IsPartition) {
  auto c = make_repetition(8, true);
  auto g = build_graphs(c);
  Decomposer dec(c, g);
  std::mt19937_64 rng(81);
  PauliOperator op = random_local_operator(8, 20, 4, rng, true);
  auto z = dec.decompose(op).collection;
  auto s = split_collection(z, 3);
  EXPECT_EQ(s.d_part.size() + s.v_plus.size() + s.v_minus.size() + s.m_part.size() + s.overflow.size(), z.size());
  for (const auto& [w, e] : s.v_plus.entries()) EXPECT_TRUE(w.e.none() && w.minus.none() && w.plus.any() && w.size() < 3);
  for (const auto& [w, e] : s.v_minus.entries()) EXPECT_TRUE(w.e.none() && w.plus.none() && w.minus.any());
  for (const auto& [w, e] : s.m_part.entries()) EXPECT_TRUE(w.e.none() && w.plus.none() && w.minus.none());
  for (const auto& [w, e] : s.d_part.entries())
    EXPECT_TRUE((w.e | w.minus).any() && (w.e | w.plus).any());
  for (const auto& [w, e] : s.overflow.entries()) EXPECT_GE(w.size(), 3u);
  auto all = merge({&s.d_part, &s.v_plus, &s.v_minus, &s.m_part, &s.overflow});
  EXPECT_LT(max_diff(oracle::kron_operator(all.to_operator(), 8), oracle::kron_operator(z.to_operator(), 8)), 1e-12);
}
