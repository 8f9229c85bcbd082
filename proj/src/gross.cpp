#include "nelson/gross.hpp"

#include <unsupported/Eigen/MatrixFunctions>

#include <cmath>
#include <random>
#include <stdexcept>

namespace nelson {

namespace {

Eigen::VectorXd sorted_eigenvalues(const Eigen::MatrixXd& m) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (m + m.transpose()),
                                                    Eigen::EigenvaluesOnly);
  return es.eigenvalues();
}

Eigen::VectorXd random_vector(std::mt19937_64& rng, std::size_t n) {
  std::normal_distribution<double> normal;
  Eigen::VectorXd v(static_cast<Eigen::Index>(n));
  for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = normal(rng);
  return v;
}

double continuum_c(const ModeGrid& grid, double K) {
  return window_constant(grid.dimension(), K, grid.mass()).value;
}

}  // namespace

GrossBundle gross_transform(const FactorizationMap& split, const ModeGrid& grid,
                            const NelsonParams& params) {
  params.window.validate(grid.spec().extent);
  const OccupationBasis& high = split.high_basis();
  GrossBundle b;
  CutoffWindow window = params.window;
  window.kappa = split.kappa();
  b.amplitudes = split.restrict_high(gross_amplitudes(grid, params.g, window));
  b.c_of_K = window_constant(grid.dimension(), params.window.K_gross, grid.mass());
  b.c_of_K_grid = window_constant_grid(grid, params.window.K_gross);

  const FockOperator ad = creation_operator(high, b.amplitudes);
  b.t_generator = {SparseMatrix(SparseMatrix(ad.matrix.transpose()) - ad.matrix), false, false};
  b.antisymmetry_residual =
      max_abs(SparseMatrix(b.t_generator.matrix + SparseMatrix(b.t_generator.matrix.transpose())));

  const Eigen::MatrixXd t = b.t_generator.dense();
  b.u = t.exp();
  const auto n = static_cast<Eigen::Index>(high.size());
  b.unitarity_residual =
      (b.u * b.u.transpose() - Eigen::MatrixXd::Identity(n, n)).cwiseAbs().maxCoeff();
  if (b.unitarity_residual > 1e-8)
    throw std::runtime_error("Gross transformation failed unitarity: residual " +
                             std::to_string(b.unitarity_residual));

  const FockOperator k = assemble_tail(split, grid, params);
  const Eigen::MatrixXd kd = k.dense();
  b.k_transformed = b.u * kd * b.u.transpose();
  b.spectral_deviation =
      (sorted_eigenvalues(kd) - sorted_eigenvalues(b.k_transformed)).cwiseAbs().maxCoeff();

  // [T, a(f)] = <G, f> 1 holds exactly on states below the top sector.
  const auto guarded = static_cast<Eigen::Index>(high.sector_offset(high.n_max()));
  for (int i = 0; i < high.mode_count(); ++i) {
    Eigen::VectorXd e = Eigen::VectorXd::Zero(high.mode_count());
    e[i] = 1.0;
    const Eigen::MatrixXd a = annihilation_operator(high, e).dense();
    Eigen::MatrixXd comm = t * a - a * t;
    comm.diagonal().array() -= b.amplitudes[i];
    if (guarded > 0)
      b.commutator_residual =
          std::max(b.commutator_residual, comm.leftCols(guarded).cwiseAbs().maxCoeff());
  }
  return b;
}

FockOperator gross_reference(const FactorizationMap& split, const ModeGrid& grid) {
  const OccupationBasis& high = split.high_basis();
  Eigen::VectorXd diag = dgamma_diagonal(high, split.restrict_high(grid.omegas()));
  for (int j = 0; j < grid.dimension(); ++j) {
    const Eigen::VectorXd p = dgamma_diagonal(high, split.restrict_high(grid.component(j)));
    diag += 0.5 * p.cwiseProduct(p);
  }
  return diagonal_operator(diag);
}

FockOperator gross_form(const FactorizationMap& split, const ModeGrid& grid,
                        const NelsonParams& params) {
  const OccupationBasis& high = split.high_basis();
  CutoffWindow window = params.window;
  window.kappa = split.kappa();
  const Eigen::VectorXd G = split.restrict_high(gross_amplitudes(grid, params.g, window));

  SparseMatrix b(static_cast<Eigen::Index>(high.size()), static_cast<Eigen::Index>(high.size()));
  for (int j = 0; j < grid.dimension(); ++j) {
    const Eigen::VectorXd kj = split.restrict_high(grid.component(j));
    const SparseMatrix p = dgamma(high, kj).matrix;
    const SparseMatrix a = annihilation_operator(high, kj.cwiseProduct(G)).matrix;
    const SparseMatrix at = a.transpose();
    b += SparseMatrix(p * a) + SparseMatrix(at * p) + 0.5 * SparseMatrix(a * a) +
         0.5 * SparseMatrix(at * at) + SparseMatrix(at * a);
  }
  const Mask inner = shell_mask(grid, split.kappa(), params.window.K_gross);
  const Eigen::VectorXd f = split.restrict_high(coupling_amplitudes(grid, params.g, inner));
  b -= field_operator(high, f).matrix;
  return {b, true, false};
}

FormBoundReport form_bound_check(const FactorizationMap& split, const ModeGrid& grid,
                                 const NelsonParams& params, double epsilon, int samples,
                                 std::uint64_t seed) {
  if (!(epsilon > 0.0)) throw std::invalid_argument("form bound requires epsilon > 0");
  if (samples < 1) throw std::invalid_argument("form bound requires at least one sample");
  FormBoundReport r;
  r.epsilon = epsilon;
  r.samples = samples;
  const WindowConstant c = window_constant(grid.dimension(), params.window.K_gross, grid.mass());
  r.c_of_K = c.value;
  r.c_of_K_grid = window_constant_grid(grid, params.window.K_gross).value;
  r.smallness = c.small;
  const double gc = params.g * c.value;
  r.form_coefficient = 2.0 * grid.dimension() * (gc + gc * gc) + epsilon;

  const Mask inner = shell_mask(grid, split.kappa(), params.window.K_gross);
  double s = 0.0;
  for (std::size_t i = 0; i < grid.size(); ++i)
    if (inner[i]) s += grid[i].weight / (grid[i].omega * grid[i].omega);
  r.d_interaction = 2.0 * params.g * std::sqrt(s);
  r.d_constant = r.d_interaction * r.d_interaction / (4.0 * epsilon);

  const SparseMatrix b = gross_form(split, grid, params).matrix;
  const SparseMatrix j = gross_reference(split, grid).matrix;
  std::mt19937_64 rng(seed);
  for (int k = 0; k < samples; ++k) {
    const Eigen::VectorXd phi = random_vector(rng, split.high_basis().size());
    const double form = std::abs(phi.dot(b * phi));
    const double norm2 = phi.squaredNorm();
    const double bound = r.form_coefficient * (phi.dot(j * phi) + norm2) + r.d_constant * norm2;
    const double ratio = bound > 0.0 ? form / bound : (form > 0.0 ? INFINITY : 0.0);
    r.worst_ratio = std::max(r.worst_ratio, ratio);
    if (ratio > 1.0) ++r.violations;
  }
  return r;
}

FormDifferenceReport form_difference_check(const FactorizationMap& split, const ModeGrid& grid,
                                           const NelsonParams& params, double lambda_small,
                                           double lambda_large, int samples,
                                           std::uint64_t seed) {
  if (!(lambda_small < lambda_large))
    throw std::invalid_argument("form difference requires Lambda_1 < Lambda_2");
  NelsonParams p1 = params, p2 = params;
  p1.window.Lambda = lambda_small;
  p2.window.Lambda = lambda_large;
  const SparseMatrix diff =
      gross_form(split, grid, p2).matrix - gross_form(split, grid, p1).matrix;
  const SparseMatrix j = gross_reference(split, grid).matrix;

  FormDifferenceReport r;
  r.lambda_small = lambda_small;
  r.lambda_large = lambda_large;
  const double cl = params.g * continuum_c(grid, lambda_small);
  const double ck = params.g * continuum_c(grid, params.window.K_gross);
  r.bound = 2.0 * grid.dimension() * cl + 4.0 * grid.dimension() * ck * cl;
  std::mt19937_64 rng(seed);
  for (int k = 0; k < samples; ++k) {
    const Eigen::VectorXd phi = random_vector(rng, split.high_basis().size());
    const double ratio = std::abs(phi.dot(diff * phi)) / (phi.dot(j * phi) + phi.squaredNorm());
    r.worst_ratio = std::max(r.worst_ratio, ratio);
  }
  return r;
}

}  // namespace nelson
