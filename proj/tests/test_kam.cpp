#include "oracle.hpp"
#include "qkam/kam.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace qkam;

namespace {

PauliOperator transverse_field(std::size_t n, double h) {
  PauliOperator z(n);
  for (std::size_t q = 0; q < n; ++q) z.add(PauliString::single(n, q, 'X'), h);
  return z;
}

PauliOperator zz(std::size_t n, std::size_t a, std::size_t b) {
  PauliString p(n);
  p.set(a, 'Z');
  p.set(b, 'Z');
  PauliOperator o(n);
  o.add(p, 1.0);
  return o;
}

MatC dense_ground_projector(const StabilizerCode& code) {
  std::size_t dim = std::size_t{1} << code.n();
  MatC p = MatC::Identity(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(dim));
  for (const auto& c : code.checks()) p = p * oracle::projector_matrix(c, true);
  return p;
}

// Transverse field plus symmetric two-body terms, so D, M and V are all present.
PauliOperator mixed_perturbation(std::size_t n, double h) {
  PauliOperator z = transverse_field(n, h);
  for (std::size_t q = 0; q < n; ++q) {
    z.add_scaled(zz(n, q, (q + 1) % n), 0.7 * h);
    PauliString xx(n);
    xx.set(q, 'X');
    xx.set((q + 1) % n, 'X');
    z.add(xx, 0.4 * h);
  }
  return z;
}

struct IsingSetup {
  StabilizerCode code;
  InteractionGraphs g;
  FlowConfig cfg;
  FlowSetup setup;
};

IsingSetup ising(std::size_t n, double mu0 = 1.0) {
  IsingSetup s{make_repetition(n, true), {}, {}, {}};
  s.g = build_graphs(s.code);
  s.cfg.mode = FlowMode::Symmetric;
  s.cfg.mu0 = mu0;
  s.setup = prepare_flow(s.code, s.g, s.cfg);
  return s;
}

}  // namespace

TEST(Ghost, QMatchesDenseCommutator) {
  auto s = ising(6);
  std::size_t n = 6;
  Decomposer dec(s.code, s.g);
  PauliOperator m = zz(n, 1, 2);
  m.add_scaled(zz(n, 0, 2), 0.3);
  m.add_scaled(zz(n, 3, 4), -0.5);
  auto ms = split_collection(dec.decompose(m).collection, 100);
  ASSERT_FALSE(ms.m_part.empty());
  GhostTable table(ms.m_part, s.code);
  MatC md = ms.m_part.to_operator().dense(n);
  MatC p = dense_ground_projector(s.code);

  std::size_t checked = 0;
  for (std::size_t q = 0; q < n; ++q) {
    PauliOperator x(n);
    x.add(PauliString::single(n, q, 'X'), 1.0);
    x.add(PauliString::single(n, (q + 2) % n, 'X'), 0.5);
    auto xs = split_collection(dec.decompose(x).collection, 100);
    for (const auto& w : xs.v_plus.sorted_words()) {
      MatC xd = xs.v_plus.find(w)->op.dense(n);
      cplx q_val = table.q_sum(w);
      MatC lhs = (md * xd - xd * md) * p;
      EXPECT_LT(max_abs_entry(lhs - q_val * xd * p), 1e-12) << w.str();
      ++checked;
    }
  }
  EXPECT_GT(checked, 0u);
}

TEST(Ghost, ExpectationIsGroundValue) {
  auto s = ising(6);
  Decomposer dec(s.code, s.g);
  PauliOperator m = zz(6, 1, 2);
  m.add_scaled(zz(6, 0, 3), -0.25);
  auto ms = split_collection(dec.decompose(m).collection, 100);
  GhostTable table(ms.m_part, s.code);
  MatC p = dense_ground_projector(s.code);
  MatC md = ms.m_part.to_operator().dense(6);
  EXPECT_LT(max_abs_entry(p * md * p - table.expectation() * p), 1e-12);
  EXPECT_NEAR(table.expectation().real(), 0.75, 1e-12);
}

TEST(Ghost, NonGroupTermThrows) {
  auto s = ising(6);
  Decomposer dec(s.code, s.g);
  PauliOperator z0(6);
  z0.add(PauliString::single(6, 0, 'Z'), 1.0);
  auto ms = split_collection(dec.decompose(z0).collection, 100);
  ASSERT_FALSE(ms.m_part.empty());
  EXPECT_THROW(GhostTable(ms.m_part, s.code), InvariantViolation);
}

TEST(Generator, LeadingTermWithoutDiagonalPart) {
  auto s = ising(6);
  Decomposer dec(s.code, s.g);
  auto sp = split_collection(dec.decompose(transverse_field(6, 0.01)).collection, s.setup.d_star);
  SplitCollections only_v{OperatorCollection(6, 6), sp.v_plus, sp.v_minus, OperatorCollection(6, 6),
                          OperatorCollection(6, 6)};
  auto gen = build_generator(only_v, s.code, 5);
  ASSERT_EQ(gen.a_plus.size(), sp.v_plus.size());
  for (const auto& w : sp.v_plus.sorted_words()) {
    PauliOperator expect = sp.v_plus.find(w)->op;
    expect *= cplx(0.0, 1.0 / static_cast<double>(w.plus.count()));
    PauliOperator diff = gen.a_plus.find(w)->op;
    diff -= expect;
    EXPECT_LT(diff.one_norm(), 1e-14);
  }
  EXPECT_EQ(gen.order_norms.size(), 1u);
}

TEST(Generator, SolvesTheBlockEquation) {
  auto s = ising(6);
  Decomposer dec(s.code, s.g);
  auto sp = split_collection(dec.decompose(mixed_perturbation(6, 0.01)).collection, 100);
  ASSERT_FALSE(sp.d_part.empty());
  ASSERT_FALSE(sp.m_part.empty());
  auto gen = build_generator(sp, s.code, 8);
  auto chk = check_generator(s.code, sp, gen);
  EXPECT_LT(chk.residual, 1e-8);
  EXPECT_LT(chk.residual_adjoint, 1e-8);
  EXPECT_LT(chk.block_error, 1e-6);
  EXPECT_TRUE(gen.a.to_operator().is_hermitian());
}

TEST(Generator, ResidualShrinksWithOrder) {
  auto s = ising(6);
  Decomposer dec(s.code, s.g);
  auto sp = split_collection(dec.decompose(mixed_perturbation(6, 0.02)).collection, 100);
  double prev = std::numeric_limits<double>::infinity();
  for (int k : {0, 2, 4}) {
    auto chk = check_generator(s.code, sp, build_generator(sp, s.code, k));
    EXPECT_LT(chk.residual, prev) << "k_max " << k;
    prev = chk.residual;
  }
}

TEST(Rotation, H0CommutatorMatchesCollectionCommutator) {
  auto s = ising(6);
  Decomposer dec(s.code, s.g);
  auto x = dec.decompose(mixed_perturbation(6, 1.0)).collection;
  auto direct = commutator_with_h0(x).to_operator().dense(6);
  auto general = collection_commutator(x, h0_collection(s.code)).collection.to_operator().dense(6);
  EXPECT_LT(max_abs_entry(direct - general), 1e-12);
}

TEST(Rotation, BchMatchesDenseConjugation) {
  auto s = ising(4);
  Decomposer dec(s.code, s.g);
  auto z = dec.decompose(mixed_perturbation(4, 0.02)).collection;
  auto gen = build_generator(split_collection(z, 100), s.code, 6);
  auto bch = bch_rotate(z, gen.a, 100, 10);
  MatC h0 = h0_collection(s.code).to_operator().dense(4);
  MatC h = h0 + z.to_operator().dense(4);
  MatC a = gen.a.to_operator().dense(4);
  MatC rotated = expm_hermitian(a, -1.0) * h * expm_hermitian(a, 1.0);
  MatC model = h0 + bch.z_next.to_operator().dense(4);
  EXPECT_LT(hermitian_operator_norm(rotated - model), bch.tail_bound + bch.dropped + 1e-12);
  EXPECT_EQ(bch.overflow_norm, 0.0);
}

TEST(Rotation, OverflowIsCovered) {
  auto s = ising(8);
  Decomposer dec(s.code, s.g);
  auto z = dec.decompose(transverse_field(8, 0.03)).collection;
  auto gen = build_generator(split_collection(z, 100), s.code, 6);
  std::size_t cut = 4;
  auto bch = bch_rotate(z, gen.a, cut, 10);
  EXPECT_GT(bch.overflow_norm, 0.0);
  EXPECT_LT(bch.z_next.max_word_size(), cut);
  MatC h0 = h0_collection(s.code).to_operator().dense(8);
  MatC h = h0 + z.to_operator().dense(8);
  MatC a = gen.a.to_operator().dense(8);
  MatC rotated = expm_hermitian(a, -1.0) * h * expm_hermitian(a, 1.0);
  MatC model = h0 + bch.z_next.to_operator().dense(8);
  double err = hermitian_operator_norm(rotated - model);
  EXPECT_LT(err, bch.overflow_charge + bch.tail_bound + bch.dropped + 1e-12);
}

TEST(FlowRhs, InfiniteOutsideRegime) {
  EXPECT_TRUE(std::isinf(flow_rhs(0.1, 0.5, 2.0, 1.9, 2.0).eps));   // e eta >= 1
  EXPECT_TRUE(std::isinf(flow_rhs(0.1, 0.0, 2.0, 1.99, 2.0).eps));  // r >= 1
  EXPECT_TRUE(std::isinf(flow_rhs(0.1, 0.0, 2.0, 2.0, 2.0).eps));   // no step
  auto r = flow_rhs(1e-3, 1e-3, 3.0, 2.5, 3.0);
  EXPECT_TRUE(std::isfinite(r.eps));
  EXPECT_GT(r.eta, 1e-3);
}

TEST(FlowRhs, MonotoneInEps) {
  double prev = 0.0;
  for (double e : {1e-5, 1e-4, 1e-3, 1e-2}) {
    auto r = flow_rhs(e, 1e-3, 3.0, 2.5, 3.0);
    EXPECT_GT(r.eps, prev);
    prev = r.eps;
  }
  EXPECT_EQ(flow_rhs(0.0, 1e-3, 3.0, 2.5, 3.0).eps, 0.0);
}

TEST(FlowRhs, ScheduleSumsToHalfTheRange) {
  double mu0 = 4.0, mu_star = 1.0, mu = mu0;
  for (int n = 0; n < 200000; ++n) mu -= schedule_step(mu0, mu_star, n);
  EXPECT_GT(mu, mu_star + (mu0 - mu_star) / 2.0);
  EXPECT_NEAR(mu, mu_star + (mu0 - mu_star) / 2.0, 1e-5);
}

TEST(Flow, ZeroPerturbationStopsAtOnce) {
  auto s = ising(6);
  auto r = run_flow(s.code, s.g, PauliOperator(6), s.cfg, s.setup);
  EXPECT_TRUE(r.converged);
  EXPECT_EQ(r.n_star, 0);
  EXPECT_TRUE(r.factors.empty());
  EXPECT_EQ(r.eps0, 0.0);
}

TEST(Flow, FrustrationFreePerturbationIsFixedPoint) {
  auto s = ising(8);
  PauliOperator m(8);
  for (std::size_t q = 0; q < 8; ++q) m.add_scaled(zz(8, q, (q + 1) % 8), 0.01);
  auto r = run_flow(s.code, s.g, m, s.cfg, s.setup);
  EXPECT_TRUE(r.converged);
  EXPECT_EQ(r.n_star, 0);
  EXPECT_NEAR(r.energy_shift.real(), 0.08, 1e-12);
}

TEST(Flow, SymmetricModeRejectsBreakingTerm) {
  auto s = ising(6);
  PauliOperator z(6);
  z.add(PauliString::single(6, 0, 'Z'), 0.01);
  EXPECT_THROW(run_flow(s.code, s.g, z, s.cfg, s.setup), InvariantViolation);
}

TEST(Flow, ContractsAndReproducesHamiltonian) {
  auto s = ising(8, 2.0);
  PauliOperator pert = mixed_perturbation(8, 2e-4);
  auto r = run_flow(s.code, s.g, pert, s.cfg, s.setup);
  ASSERT_TRUE(r.converged);
  ASSERT_GE(r.n_star, 1);
  for (std::size_t i = 1; i < r.scales.size(); ++i) {
    EXPECT_LE(r.scales[i].eps, r.scales[i].eps_rhs);
    EXPECT_LE(r.scales[i].eta, r.scales[i].eta_rhs);
    EXPECT_LT(r.scales[i].eps, r.scales[i - 1].eps);
  }
  EXPECT_LT(symmetry_violation(r.final_collection(), s.code), 1e-12);
  PauliOperator h = h0_collection(s.code).to_operator();
  h += pert;
  // Dense roundoff on a 256-dimensional conjugation sits near 1e-13.
  EXPECT_LT(measured_error(s.code, h, r, r.n_star), r.error_bound + 1e-11);
  EXPECT_LT(measured_error(s.code, h, r, 0), 1e-12);
}

TEST(Unitary, FactorsComposeConsistently) {
  auto s = ising(6, 2.0);
  PauliOperator pert = mixed_perturbation(6, 1e-3);
  auto r = run_flow(s.code, s.g, pert, s.cfg, s.setup);
  ASSERT_GE(r.factors.size(), 1u);
  MatC u = build_unitary(r.factors, 6);
  MatC id = MatC::Identity(u.rows(), u.cols());
  EXPECT_LT(max_abs_entry(u.adjoint() * u - id), 1e-12);

  MatC block = MatC::Zero(u.rows(), 3);
  for (int j = 0; j < 3; ++j) block.col(j) = random_unit_vector(static_cast<std::size_t>(u.rows()), 40 + j);
  EXPECT_LT(max_abs_entry(apply_unitary(r.factors, 6, block) - u * block), 1e-12);
  EXPECT_LT(max_abs_entry(apply_unitary(r.factors, 6, block, true) - u.adjoint() * block), 1e-12);

  PauliOperator o(6);
  o.add(PauliString::single(6, 2, 'Z'), 1.0);
  MatC od = o.dense(6);
  EXPECT_LT(max_abs_entry(conjugate_by_factors(o, r.factors, true).dense(6) - u.adjoint() * od * u), 1e-12);
  EXPECT_LT(max_abs_entry(conjugate_by_factors(o, r.factors, false).dense(6) - u * od * u.adjoint()), 1e-12);
}

TEST(Unitary, GroundProjectorMatchesDense) {
  auto code = make_toric(2, 2);
  EXPECT_LT(max_abs_entry(ground_projector(code).dense(code.n()) - dense_ground_projector(code)), 1e-12);
  auto rep = make_repetition(5, false);
  EXPECT_LT(max_abs_entry(ground_projector(rep).dense(5) - dense_ground_projector(rep)), 1e-12);
}

TEST(Unitary, ConjugatePauliMatchesDense) {
  std::mt19937_64 rng(5);
  PauliOperator a(4), o(4);
  for (int t = 0; t < 4; ++t) a.add(oracle::random_string(4, rng, false), 0.3 * (t + 1));
  for (int t = 0; t < 3; ++t) o.add(oracle::random_string(4, rng, false), cplx(t, 1.0));
  MatC ad = oracle::kron_operator(a, 4), od = oracle::kron_operator(o, 4);
  MatC ref = expm_hermitian(ad, -0.7) * od * expm_hermitian(ad, 0.7);
  EXPECT_LT(max_abs_entry(conjugate_pauli(o, a, 0.7).dense(4) - ref), 1e-12);
}
