#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "nelson/analysis.hpp"
#include "oracles.hpp"

#include <random>

using namespace nelson;

namespace {

ModeGrid grid_1d(double extent = 2.0, int n = 4) {
  GridSpec s;
  s.dimension = 1;
  s.extent = extent;
  s.points_per_axis = n;
  return build_grid(s);
}

NelsonParams params(std::vector<double> P, double kappa, double Lambda, double g = 1.0) {
  NelsonParams p;
  p.g = g;
  p.P = std::move(P);
  p.window = {kappa, Lambda, 0.5 * (kappa + Lambda)};
  return p;
}

Eigen::VectorXd random_vector(std::mt19937_64& rng, Eigen::Index n, double lo, double hi) {
  std::uniform_real_distribution<double> u(lo, hi);
  Eigen::VectorXd v(n);
  for (Eigen::Index i = 0; i < n; ++i) v[i] = u(rng);
  return v;
}

}  // namespace

TEST_CASE("semigroup basics") {
  const ModeGrid g = grid_1d();
  const OccupationBasis b(4, 3);
  const FockOperator h = renormalized_hamiltonian(
      assemble_fiber_hamiltonian(b, g, params({0.3}, 1.0, 2.0)),
      renormalization_constant(g, 1.0, 2.0, EnergyScheme::grid_sum));
  const auto n = static_cast<Eigen::Index>(b.size());
  CHECK((semigroup(h, 0.0) - Eigen::MatrixXd::Identity(n, n)).isZero(0.0));
  const Semigroup s(h);
  CHECK((s.at(0.7) * s.at(1.3) - s.at(2.0)).cwiseAbs().maxCoeff() < 1e-10);
  CHECK((s.at(1.0) - oracle::expm_taylor(-h.dense())).cwiseAbs().maxCoeff() < 1e-10);
  CHECK((s.at(1.0) - s.at(1.0).transpose()).cwiseAbs().maxCoeff() < 1e-14);

  Eigen::VectorXd d(3);
  d << -1.0, 0.5, 2.0;
  const Eigen::MatrixXd e = semigroup(diagonal_operator(d), 0.5);
  for (int i = 0; i < 3; ++i) CHECK(e(i, i) == doctest::Approx(std::exp(-0.5 * d[i])));

  CHECK_THROWS_AS(semigroup(h, -1.0), std::invalid_argument);
  CHECK_THROWS_AS(semigroup(creation_operator(b, Eigen::VectorXd::Ones(4)), 1.0), std::invalid_argument);
}

TEST_CASE("order and improving checks") {
  const Eigen::MatrixXd a = Eigen::MatrixXd::Random(4, 4);
  CHECK(order_check(a, a, 1e-12).preserving);
  const Eigen::MatrixXd ones = Eigen::MatrixXd::Ones(3, 3);
  CHECK(improving_check(ones, 1e-12).improving);
  const ConeVerdict diag = improving_check(Eigen::MatrixXd::Identity(3, 3), 1e-12);
  CHECK(diag.preserving);
  CHECK_FALSE(diag.improving);
  REQUIRE(diag.witness.has_value());
  CHECK(diag.witness->first != diag.witness->second);

  const ModeGrid g = grid_1d();
  const OccupationBasis b(4, 3);
  const auto zero = Eigen::MatrixXd::Zero(b.size(), b.size());
  CHECK(order_check(semigroup(dgamma(b, g.omegas()), 1.0), zero, 1e-10).preserving);
  Eigen::VectorXd kin = Eigen::VectorXd::Zero(b.size());
  const Eigen::VectorXd pf = dgamma_diagonal(b, g.component(0));
  kin = 0.5 * (0.3 - pf.array()).square().matrix();
  CHECK(order_check(semigroup(diagonal_operator(kin), 1.0), zero, 1e-10).preserving);
  CHECK_FALSE(order_check(-Eigen::MatrixXd::Identity(3, 3), Eigen::MatrixXd::Zero(3, 3), 1e-10).preserving);
}

TEST_CASE("improving semigroup and Perron-Frobenius") {
  const ModeGrid g = grid_1d();
  const OccupationBasis b(4, 3);
  const NelsonParams p = params({0.0}, 1.0, 2.0);
  const FockOperator h = renormalized_hamiltonian(
      assemble_fiber_hamiltonian(b, g, p), renormalization_constant(g, 1.0, 2.0, EnergyScheme::grid_sum));
  CHECK(improving_check(semigroup(h, 1.0), 1e-12).improving);

  const SpectralReport r = perron_frobenius(h, {0.5, 1.0, 2.0}, Tolerances{});
  CHECK_FALSE(r.degenerate);
  CHECK(r.strictly_positive_ground);
  CHECK(r.equivalence_holds);
  CHECK(r.ground_vector.norm() == doctest::Approx(1.0));
  CHECK(r.gap > 1e-8 * r.spectral_radius);
  // Dense eigensolve oracle
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(h.dense());
  CHECK(r.lambda_min == doctest::Approx(es.eigenvalues()[0]));
  CHECK(std::abs(std::abs(r.ground_vector.dot(es.eigenvectors().col(0))) - 1.0) < 1e-10);

  const SpectralReport shifted =
      perron_frobenius(h + 3.5 * identity_operator(b.size()), {1.0}, Tolerances{});
  CHECK(shifted.gap == doctest::Approx(r.gap));
  CHECK((shifted.ground_vector - r.ground_vector).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("uncoupled negative control") {
  const ModeGrid g = grid_1d();
  const OccupationBasis b(4, 3);
  const FockOperator h = assemble_fiber_hamiltonian(b, g, params({0.0}, 1.0, 2.0, 0.0));
  const SpectralReport r = perron_frobenius(h, {0.5, 1.0}, Tolerances{});
  CHECK_FALSE(r.strictly_positive_ground);
  CHECK(std::abs(r.ground_vector[0]) == doctest::Approx(1.0));
  for (bool imp : r.improving) CHECK_FALSE(imp);
  CHECK(r.equivalence_holds);
}

TEST_CASE("ergodicity probe") {
  const OccupationBasis b(3, 3);
  Eigen::VectorXd f(3);
  f << 0.7, 1.1, 0.4;
  const Eigen::VectorXd vac = Eigen::VectorXd::Unit(b.size(), 0);
  const ErgodicityResult r0 = ergodicity_probe(b, f, vac, vac, 4);
  CHECK(r0.power == 0);

  std::vector<int> one{0, 1, 0};
  const Eigen::VectorXd y = Eigen::VectorXd::Unit(b.size(), static_cast<Eigen::Index>(*b.index_of(one)));
  const ErgodicityResult r1 = ergodicity_probe(b, f, vac, y, 4);
  CHECK(r1.power == 1);
  CHECK(r1.pairing == doctest::Approx(1.1));

  std::mt19937_64 rng(17);
  Eigen::VectorXd x = Eigen::VectorXd::Zero(b.size()), z = x;
  for (std::size_t i = b.sector_offset(2); i < b.sector_offset(3); ++i) x[i] = random_vector(rng, 1, 0.1, 1)[0];
  for (std::size_t i = b.sector_offset(1); i < b.sector_offset(2); ++i) z[i] = random_vector(rng, 1, 0.1, 1)[0];
  const ErgodicityResult r = ergodicity_probe(b, f, x, z, 3);
  CHECK(r.power <= 3);
  CHECK(r.sector_x == 2);
  CHECK(r.sector_y == 1);
  CHECK(r.lower_bound > 0.0);
  CHECK(r.bound_holds);
  // direct matrix powers
  const Eigen::MatrixXd phi = field_operator(b, f).dense();
  CHECK(r.pairing_at_bound == doctest::Approx(x.dot(phi * phi * phi * z)));

  // f vanishing on the only occupied mode: nothing connects
  Eigen::VectorXd f0(3);
  f0 << 0.0, 1.0, 1.0;
  std::vector<int> three{3, 0, 0};
  const Eigen::VectorXd w = Eigen::VectorXd::Unit(b.size(), static_cast<Eigen::Index>(*b.index_of(three)));
  CHECK_THROWS_AS(ergodicity_probe(b, f0, vac, w, 3), std::runtime_error);
}

TEST_CASE("Duhamel on the 2x2 oracle") {
  Eigen::MatrixXd a(2, 2), bm(2, 2);
  a << 0, 0, 0, 1;
  bm << 0, -1, -1, 0;
  const DuhamelReport r = duhamel(a, bm, 1.0, 8, 32);
  const Eigen::Matrix2d exact = oracle::expm_2x2(-(a + bm));
  Eigen::MatrixXd partial = Eigen::MatrixXd::Zero(2, 2);
  for (const auto& t : r.terms) partial += t;
  CHECK((partial - Eigen::MatrixXd(exact)).cwiseAbs().maxCoeff() <= r.remainder_bound + 1e-3);
  CHECK(r.terms_positive);
  CHECK(r.within_remainder_bound);
  CHECK(r.residuals_decrease);
  for (double m : r.term_min_entries) CHECK(m >= -1e-6);
  // first-order term has a closed form for diagonal A: int_0^1 e^{-s A} (-B) e^{-(1-s) A} ds
  const double d1 = (1.0 - std::exp(-1.0));
  CHECK(r.terms[1](0, 1) == doctest::Approx(d1).epsilon(1e-4));

  const DuhamelReport free = duhamel(a, Eigen::MatrixXd::Zero(2, 2), 1.0, 3, 8);
  CHECK(free.terms[0](1, 1) == doctest::Approx(std::exp(-1.0)));
  for (std::size_t n = 1; n < free.terms.size(); ++n) CHECK(free.terms[n].isZero(0.0));
  CHECK_THROWS(duhamel(a, bm, 1.0, 3, 1));
}

TEST_CASE("Duhamel terms of the fiber Hamiltonian are positive") {
  const ModeGrid g = grid_1d();
  const OccupationBasis b(4, 2);
  const NelsonParams p = params({0.3}, 1.0, 2.0);
  const Eigen::MatrixXd phi =
      field_operator(b, coupling_amplitudes(g, 1.0, cutoff_mask(g, 2.0))).dense();
  const Eigen::MatrixXd a = assemble_fiber_hamiltonian(b, g, p).dense() + phi;
  const DuhamelReport r = duhamel(a, -phi, 1.0, 6, 32);
  CHECK(r.terms_positive);
  for (double m : r.term_min_entries) CHECK(m >= -1e-6);
  CHECK(r.within_remainder_bound);
}

TEST_CASE("operator bounds") {
  const OccupationBasis b1(1, 3);
  const OperatorBoundsReport trivial =
      operator_bounds_suite(b1, Eigen::VectorXd::Ones(1), Eigen::VectorXd::Ones(1));
  CHECK(trivial.c == 1.0);
  CHECK(trivial.number_bound_min == doctest::Approx(1.0));  // N <= N + 1
  CHECK(trivial.holds(1e-10));
  const OccupationBasis b(4, 3);
  const Eigen::VectorXd omega = grid_1d().omegas();
  const OperatorBoundsReport zero = operator_bounds_suite(b, omega, Eigen::VectorXd::Zero(4));
  CHECK(zero.holds(1e-10));
  std::mt19937_64 rng(23);
  for (int s = 0; s < 20; ++s) {
    const OperatorBoundsReport r = operator_bounds_suite(b, omega, random_vector(rng, 4, 0, 1));
    CHECK(r.holds_sharp(1e-10));
    CHECK(r.number_bound_min >= -1e-10);
    CHECK(r.van_hove_plus_min >= -1e-10);
    CHECK(r.van_hove_minus_min >= -1e-10);
    // the unit form of the a a^dagger bound fails on the vacuum for omega > 1
    CHECK(r.antinumber_bound_min < 0.0);
  }
}

TEST_CASE("key inequality on a product split") {
  const ModeGrid g = grid_1d();
  const NelsonParams p = params({0.3}, 1.0, 2.0);
  const FactorizationMap split(g, 3, 1.0, CapPolicy::product);
  const FockOperator local = assemble_local(split, g, p);
  const FockOperator tail = assemble_tail(split, g, p);
  const FockOperator l = build_l_kappa(split, local, tail);
  const KeyInequalityReport r = key_inequality(split, l, local, tail, 1.0, 1e-10);
  CHECK(r.residual < 1e-8);
  CHECK(r.vacuum_overlap > 0.0);
  CHECK(r.order.preserving);
  const KeyInequalityReport r0 = key_inequality(split, l, local, tail, 0.0, 1e-10);
  CHECK(r0.residual == 0.0);
  CHECK(r0.vacuum_overlap == 1.0);

  // uncoupled tail: closed-form vacuum overlap e^{beta E_window}
  const NelsonParams p0 = params({0.3}, 1.0, 2.0, 0.0);
  const FockOperator t0 = assemble_tail(split, g, p0);
  const FockOperator l0 = build_l_kappa(split, assemble_local(split, g, p0), t0);
  const KeyInequalityReport rz = key_inequality(split, l0, assemble_local(split, g, p0), t0, 1.3, 1e-10);
  CHECK(rz.vacuum_overlap == doctest::Approx(std::exp(-1.3 * t0.dense()(0, 0))));

  // including the cross term breaks the identity
  const FactorizationMap product(g, 3, 1.0, CapPolicy::product);
  Eigen::VectorXd cross(static_cast<Eigen::Index>(product.size()));
  for (std::size_t c = 0; c < product.size(); ++c)
    cross[static_cast<Eigen::Index>(c)] =
        -(0.3 - product.low_momentum(c, 0)) * product.high_momentum(c, 0);
  const FockOperator mis = l + diagonal_operator(cross);
  CHECK(key_inequality(product, mis, local, tail, 1.0, 1e-10).residual > 1e-6);
}

TEST_CASE("regularized limit probe") {
  const ModeGrid g = grid_1d();
  const std::vector<double> P{0.3};
  const FactorizationMap split(g, 3, 1.0);
  const HamiltonianBundle bundle = build_bundle(split, g, params(P, 1.0, 2.0));
  const RegularizedLimitReport r = regularized_limit_probe(split, bundle, P, 1.0, {1, 2, 4, 8, 16});
  CHECK(r.nonincreasing);
  CHECK(r.saturated_distance < 1e-9);
  CHECK(r.distances.back() < 1e-9);
  CHECK(r.distances.front() > r.distances.back());
  CHECK(r.trotter_error_fine < r.trotter_error_coarse);
  CHECK(r.trotter_error_coarse <= 10.0 * r.trotter_error_fine);
}
