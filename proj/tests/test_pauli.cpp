#include "oracle.hpp"
#include "qkam/pauli.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace qkam;

TEST(PauliString, ParseAndPrint) {
  auto p = PauliString::parse("-iXIZY");
  EXPECT_EQ(p.n(), 4u);
  EXPECT_EQ(p.phase(), 3);
  EXPECT_EQ(p.str(), "-iXIZY");
  EXPECT_EQ(p.weight(), 3u);
}

TEST(PauliString, XTimesXIsIdentity) {
  auto x = PauliString::parse("X");
  auto r = x * x;
  EXPECT_TRUE(r.is_identity());
  EXPECT_EQ(r.phase(), 0);
}

TEST(PauliString, XTimesZIsMinusIY) {
  auto r = PauliString::parse("X") * PauliString::parse("Z");
  EXPECT_EQ(r.str(), "-iY");
}

TEST(PauliString, TwoQubitProductMatchesMatrices) {
  auto a = PauliString::parse("XZ"), b = PauliString::parse("ZZ");
  MatC lhs = oracle::kron_string(a) * oracle::kron_string(b);
  MatC rhs = oracle::kron_string(a * b);
  EXPECT_LT((lhs - rhs).norm(), 1e-15);
}

TEST(PauliString, LengthMismatchThrows) {
  EXPECT_THROW(PauliString::parse("X") * PauliString::parse("XX"), std::invalid_argument);
  EXPECT_THROW(commutes(PauliString::parse("X"), PauliString::parse("XX")), std::invalid_argument);
}

TEST(PauliString, RandomProductsMatchMatricesAndAssociate) {
  std::mt19937_64 rng(11);
  for (int t = 0; t < 300; ++t) {
    std::size_t n = 1 + t % 4;
    auto a = oracle::random_string(n, rng), b = oracle::random_string(n, rng), c = oracle::random_string(n, rng);
    MatC lhs = oracle::kron_string(a) * oracle::kron_string(b);
    EXPECT_LT((lhs - oracle::kron_string(a * b)).norm(), 1e-14);
    EXPECT_EQ((a * b) * c, a * (b * c));
    auto sq = a * a;
    EXPECT_TRUE(sq.is_identity());
    EXPECT_EQ(sq.phase(), (2 * a.phase()) % 4);
  }
}

TEST(PauliString, CommutesIffMatrixCommutatorVanishes) {
  std::mt19937_64 rng(5);
  for (int t = 0; t < 300; ++t) {
    std::size_t n = 1 + t % 4;
    auto a = oracle::random_string(n, rng), b = oracle::random_string(n, rng);
    MatC ma = oracle::kron_string(a), mb = oracle::kron_string(b);
    double c = (ma * mb - mb * ma).norm();
    EXPECT_EQ(commutes(a, b), c < 1e-12);
  }
  EXPECT_TRUE(commutes(PauliString::parse("X"), PauliString::parse("X")));
  EXPECT_FALSE(commutes(PauliString::parse("X"), PauliString::parse("Z")));
}

TEST(PauliOperator, DenseSparseApplyAgreeWithOracle) {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> nd;
  for (int t = 0; t < 20; ++t) {
    std::size_t n = 2 + t % 4;
    PauliOperator op(n);
    for (int k = 0; k < 6; ++k) op.add(oracle::random_string(n, rng), cplx(nd(rng), nd(rng)));
    MatC ref = oracle::kron_operator(op, n);
    EXPECT_LT((op.dense(n) - ref).norm(), 1e-12);
    EXPECT_LT((MatC(op.sparse(n)) - ref).norm(), 1e-12);
    VecC v = random_unit_vector(std::size_t{1} << n, 17 + static_cast<std::uint64_t>(t)), out;
    op.apply(v, out, n);
    EXPECT_LT((out - ref * v).norm(), 1e-12);
  }
}

TEST(PauliOperator, ProductAndCommutatorMatchMatrices) {
  std::mt19937_64 rng(8);
  std::normal_distribution<double> nd;
  std::size_t n = 3;
  PauliOperator a(n), b(n);
  for (int k = 0; k < 5; ++k) {
    a.add(oracle::random_string(n, rng), cplx(nd(rng), nd(rng)));
    b.add(oracle::random_string(n, rng), cplx(nd(rng), nd(rng)));
  }
  MatC ma = oracle::kron_operator(a, n), mb = oracle::kron_operator(b, n);
  EXPECT_LT((oracle::kron_operator(a * b, n) - ma * mb).norm(), 1e-12);
  EXPECT_LT((oracle::kron_operator(commutator(a, b), n) - (ma * mb - mb * ma)).norm(), 1e-12);
  EXPECT_LT((oracle::kron_operator(a.adjoint(), n) - ma.adjoint()).norm(), 1e-12);
}

TEST(PauliOperator, PruneDropsSmallTerms) {
  PauliOperator op(2);
  op.add(PauliString::parse("XI"), 1.0);
  op.add(PauliString::parse("IZ"), 1e-16);
  double dropped = op.prune();
  EXPECT_EQ(op.size(), 1u);
  EXPECT_DOUBLE_EQ(dropped, 1e-16);
}

TEST(PauliOperator, CoefficientOfPhasedString) {
  PauliOperator op(PauliString::parse("-iXY"), 2.0);
  EXPECT_NEAR(std::abs(op.coefficient(PauliString::parse("-iXY")) - 2.0), 0.0, 1e-15);
  EXPECT_NEAR(std::abs(op.coefficient(PauliKey{PauliString::parse("XY").x(), PauliString::parse("XY").z()}) - cplx(0, -2)),
              0.0, 1e-15);
}

TEST(RealizeAndNorm, Examples) {
  auto id = PauliOperator::identity(3);
  EXPECT_NEAR(realize_and_norm(id, 3).norm, 1.0, 1e-12);
  PauliOperator e = PauliOperator::identity(2, 0.5);
  e.add(PauliString::parse("ZZ"), -0.5);
  EXPECT_NEAR(realize_and_norm(e, 2).norm, 1.0, 1e-12);
  PauliOperator f(1);
  f.add(PauliString::parse("X"), 0.3);
  f.add(PauliString::parse("Z"), 0.4);
  EXPECT_NEAR(realize_and_norm(f, 1).norm, 0.5, 1e-12);
  EXPECT_NEAR(f.op_norm(), 0.5, 1e-12);
}

TEST(RealizeAndNorm, SparsePathMatchesDense) {
  std::mt19937_64 rng(21);
  std::size_t n = 9;
  PauliOperator op(n);
  for (int k = 0; k < 12; ++k) op.add(oracle::random_string(n, rng, false), 0.1 * (k + 1));
  Caps caps;
  caps.dense_qubits = 4;
  double sparse_norm = realize_and_norm(op, n, caps).norm;
  double dense_norm = realize_and_norm(op, n).norm;
  EXPECT_NEAR(sparse_norm, dense_norm, 1e-9 * dense_norm);
}

TEST(RealizeAndNorm, CapExceededThrows) {
  Caps caps;
  caps.dense_qubits = 2;
  caps.sparse_qubits = 3;
  EXPECT_THROW(realize_and_norm(PauliOperator::identity(4), 4, caps), BudgetExceeded);
}

TEST(PauliOperator, LocalNormIgnoresIdleQubits) {
  PauliOperator op(12);
  Mask x;
  x.set(3);
  x.set(10);
  op.add(PauliString(12, x, Mask{}), 0.7);
  EXPECT_NEAR(op.op_norm(), 0.7, 1e-12);
}
