#include "nelson/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace nelson {

namespace {

void require_symmetric(const Eigen::MatrixXd& m, const char* what) {
  if (m.rows() != m.cols()) throw std::invalid_argument(std::string(what) + " is not square");
  const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
  if ((m - m.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale)
    throw std::invalid_argument(std::string(what) + " is not hermitian");
}

double spectral_norm(const Eigen::MatrixXd& m) {
  if (m.size() == 0) return 0.0;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m, Eigen::EigenvaluesOnly);
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

double min_eigenvalue(const Eigen::MatrixXd& m) {
  if (m.size() == 0) return 0.0;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m, Eigen::EigenvaluesOnly);
  return es.eigenvalues()[0];
}

ConeVerdict verdict_from(const Eigen::MatrixXd& d, double preserve_threshold,
                         double improve_threshold) {
  ConeVerdict v;
  if (d.size() == 0) {
    v.preserving = v.improving = true;
    return v;
  }
  Eigen::Index r = 0, c = 0;
  v.min_entry = d.minCoeff(&r, &c);
  v.max_negative_violation = std::max(0.0, -v.min_entry);
  v.preserving = v.min_entry >= -preserve_threshold;
  v.improving = v.preserving && v.min_entry > improve_threshold;
  if (!v.preserving || !v.improving)
    v.witness = std::pair{static_cast<std::size_t>(r), static_cast<std::size_t>(c)};
  return v;
}

Eigen::MatrixXd matrix_power(Eigen::MatrixXd base, int exponent) {
  Eigen::MatrixXd result = Eigen::MatrixXd::Identity(base.rows(), base.cols());
  while (exponent > 0) {
    if (exponent & 1) result = result * base;
    exponent >>= 1;
    if (exponent > 0) base = base * base;
  }
  return result;
}

double factorial(int n) {
  double r = 1.0;
  for (int i = 2; i <= n; ++i) r *= i;
  return r;
}

// Sector of a vector's support, or -1 when it spans several sectors.
int support_sector(const OccupationBasis& basis, const Eigen::VectorXd& x) {
  int sector = -1;
  for (std::size_t i = 0; i < basis.size(); ++i) {
    if (x[static_cast<Eigen::Index>(i)] == 0.0) continue;
    if (sector == -1) sector = basis.total(i);
    else if (sector != basis.total(i)) return -1;
  }
  return sector;
}

// D_n(beta) for n = 0..order with a trapezoidal rule of `steps` intervals.
// Works in the eigenbasis of A, where e^{-tA} is diagonal and each convolution
// step costs O(dim^2); only the multiplication by B is cubic.
std::vector<Eigen::MatrixXd> duhamel_terms(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b,
                                           double beta, int order, int steps) {
  const double h = beta / steps;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(a);
  const Eigen::MatrixXd& v = es.eigenvectors();
  const Eigen::MatrixXd nb = -(v.transpose() * b * v);
  const auto dim = a.rows();
  std::vector<Eigen::VectorXd> e(steps + 1);
  for (int j = 0; j <= steps; ++j) e[j] = (-(j * h) * es.eigenvalues().array()).exp().matrix();
  auto back = [&](const Eigen::MatrixXd& m) { return Eigen::MatrixXd(v * m * v.transpose()); };

  std::vector<Eigen::MatrixXd> terms{back(e[steps].asDiagonal().toDenseMatrix())};
  std::vector<Eigen::MatrixXd> prev(steps + 1);  // D_{n-1}(t_k) in the eigenbasis
  for (int k = 0; k <= steps; ++k) prev[k] = e[k].asDiagonal().toDenseMatrix();
  std::vector<Eigen::MatrixXd> x(steps + 1);
  for (int n = 1; n <= order; ++n) {
    for (int m = 0; m <= steps; ++m) x[m].noalias() = nb * prev[m];
    std::vector<Eigen::MatrixXd> cur(steps + 1, Eigen::MatrixXd::Zero(dim, dim));
    for (int k = 1; k <= steps; ++k) {
      Eigen::MatrixXd& acc = cur[k];
      acc.noalias() += 0.5 * (e[0].asDiagonal() * x[k]);
      acc.noalias() += 0.5 * (e[k].asDiagonal() * x[0]);
      for (int j = 1; j < k; ++j) acc.noalias() += e[j].asDiagonal() * x[k - j];
      acc *= h;
    }
    terms.push_back(back(cur[steps]));
    prev = std::move(cur);
  }
  return terms;
}

}  // namespace

Semigroup::Semigroup(const Eigen::MatrixXd& h) {
  require_symmetric(h, "semigroup generator");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(h);
  values_ = es.eigenvalues();
  vectors_ = es.eigenvectors();
}

Semigroup::Semigroup(const FockOperator& h) : Semigroup(h.dense()) {}

Eigen::MatrixXd Semigroup::at(double beta) const {
  if (beta < 0.0) throw std::invalid_argument("semigroup requires beta >= 0");
  if (beta == 0.0) return Eigen::MatrixXd::Identity(values_.size(), values_.size());
  return vectors_ * (-beta * values_.array()).exp().matrix().asDiagonal() * vectors_.transpose();
}

Eigen::MatrixXd semigroup(const FockOperator& h, double beta) { return Semigroup(h).at(beta); }

ConeVerdict order_check(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, double tau) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw std::invalid_argument("order check: dimension mismatch");
  const double scale =
      a.size() == 0 ? 0.0 : std::max(a.cwiseAbs().maxCoeff(), b.cwiseAbs().maxCoeff());
  return verdict_from(a - b, tau * scale, tau * scale);
}

ConeVerdict improving_check(const Eigen::MatrixXd& s, double tau_pos) {
  if (s.rows() != s.cols()) throw std::invalid_argument("improving check needs a square matrix");
  const double scale = s.size() == 0 ? 0.0 : s.maxCoeff();
  return verdict_from(s, tau_pos * std::abs(scale), tau_pos * std::abs(scale));
}

SpectralReport perron_frobenius(const FockOperator& h, const std::vector<double>& betas,
                                const Tolerances& tol) {
  const Semigroup sg(h);
  const Eigen::VectorXd& ev = sg.eigenvalues();
  SpectralReport r;
  r.lambda_min = ev[0];
  r.spectral_radius = ev.cwiseAbs().maxCoeff();
  r.gap = ev.size() > 1 ? ev[1] - ev[0] : 0.0;
  r.degenerate = ev.size() > 1 && r.gap <= tol.spectral_gap * r.spectral_radius;
  r.ground_vector = sg.eigenvectors().col(0);
  Eigen::Index arg = 0;
  r.ground_vector.cwiseAbs().maxCoeff(&arg);
  if (r.ground_vector[arg] < 0.0) r.ground_vector = -r.ground_vector;
  r.strictly_positive_ground = vector_positivity(r.ground_vector, tol.positivity).strictly_positive;

  bool all_improving = true;
  for (double beta : betas) {
    const Eigen::MatrixXd s = sg.at(beta);
    const ConeVerdict v = improving_check(s, tol.positivity);
    r.improving.push_back(v.improving);
    r.semigroup_min_entries.push_back(v.min_entry);
    all_improving = all_improving && v.improving;
  }
  r.equivalence_holds = all_improving == (!r.degenerate && r.strictly_positive_ground);
  return r;
}

double symmetric_overlap(const OccupationBasis& basis, const Eigen::VectorXd& f,
                         const Eigen::VectorXd& x) {
  double total = 0.0;
  for (std::size_t i = 0; i < basis.size(); ++i) {
    const double xi = x[static_cast<Eigen::Index>(i)];
    if (xi == 0.0) continue;
    const auto s = basis.state(i);
    double coeff = std::sqrt(factorial(basis.total(i)));
    for (int m = 0; m < basis.mode_count(); ++m)
      coeff *= std::pow(f[m], s[m]) / std::sqrt(factorial(s[m]));
    total += xi * coeff;
  }
  return total;
}

ErgodicityResult ergodicity_probe(const OccupationBasis& basis, const Eigen::VectorXd& f,
                                  const Eigen::VectorXd& x, const Eigen::VectorXd& y,
                                  int n_cap) {
  if (x.minCoeff() < 0.0 || y.minCoeff() < 0.0 || x.isZero(0.0) || y.isZero(0.0))
    throw std::invalid_argument("ergodicity probe needs nonzero cone vectors");
  const SparseMatrix phi = field_operator(basis, f).matrix;
  ErgodicityResult r;
  r.sector_x = support_sector(basis, x);
  r.sector_y = support_sector(basis, y);
  const int target = r.sector_x >= 0 && r.sector_y >= 0 ? r.sector_x + r.sector_y : -1;

  Eigen::VectorXd v = y;
  for (int n = 0; n <= std::max(n_cap, target); ++n) {
    const double pairing = x.dot(v);
    if (!r.found && n <= n_cap && pairing > 0.0) {
      r.found = true;
      r.power = n;
      r.pairing = pairing;
    }
    if (n == target) r.pairing_at_bound = pairing;
    if (r.found && n >= target) break;
    v = phi * v;
  }
  if (target >= 0) {
    const double p = r.sector_x, q = r.sector_y;
    r.lower_bound = std::sqrt(factorial(static_cast<int>(p)) * factorial(static_cast<int>(q))) *
                    symmetric_overlap(basis, f, x) * symmetric_overlap(basis, f, y);
    r.bound_holds = r.pairing_at_bound >= r.lower_bound * (1.0 - 1e-12) && r.lower_bound > 0.0;
  }
  if (!r.found)
    throw std::runtime_error("ergodicity probe: no positive pairing up to power " +
                             std::to_string(n_cap) + " (sectors " + std::to_string(r.sector_x) +
                             ", " + std::to_string(r.sector_y) + ")");
  return r;
}

DuhamelReport duhamel(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, double beta,
                      int order, int quad_points) {
  require_symmetric(a, "Duhamel A");
  require_symmetric(b, "Duhamel B");
  if (quad_points < 2) throw std::invalid_argument("Duhamel quadrature needs >= 2 points");
  if (order < 0) throw std::invalid_argument("Duhamel order must be nonnegative");
  if (beta < 0.0) throw std::invalid_argument("Duhamel requires beta >= 0");

  DuhamelReport r;
  r.order = order;
  r.quadrature_points = quad_points;
  const auto coarse = duhamel_terms(a, b, beta, order, quad_points);
  const auto fine = duhamel_terms(a, b, beta, order, 2 * quad_points);
  const Eigen::MatrixXd exact = Semigroup(Eigen::MatrixXd(a + b)).at(beta);

  Eigen::MatrixXd partial = Eigen::MatrixXd::Zero(a.rows(), a.cols());
  double total_error = 0.0;
  r.terms_positive = true;
  for (int n = 0; n <= order; ++n) {
    const Eigen::MatrixXd term =
        n == 0 ? fine[0] : Eigen::MatrixXd((4.0 * fine[n] - coarse[n]) / 3.0);
    const double err = (fine[n] - coarse[n]).cwiseAbs().maxCoeff();
    r.terms.push_back(term);
    r.term_min_entries.push_back(term.minCoeff());
    r.term_quadrature_errors.push_back(err);
    total_error += err;
    r.terms_positive = r.terms_positive && term.minCoeff() >= -err;
    partial += term;
    r.partial_sum_residuals.push_back((partial - exact).cwiseAbs().maxCoeff());
  }
  r.residuals_decrease = true;
  for (std::size_t n = 1; n < r.partial_sum_residuals.size(); ++n)
    r.residuals_decrease = r.residuals_decrease && r.partial_sum_residuals[n] <=
                                                       r.partial_sum_residuals[n - 1] + total_error;
  const double na = spectral_norm(a), nb = spectral_norm(b);
  r.remainder_bound =
      std::pow(nb * beta, order + 1) / factorial(order + 1) * std::exp(beta * (na + nb));
  // Rounding floor: with B = 0 the bound is exactly zero.
  const double rounding = 1e-12 * std::max(1.0, exact.cwiseAbs().maxCoeff());
  r.within_remainder_bound =
      r.partial_sum_residuals.back() <= r.remainder_bound + total_error + rounding;
  return r;
}

bool OperatorBoundsReport::holds(double tol) const {
  return number_bound_min >= -tol && antinumber_bound_min >= -tol &&
         van_hove_plus_min >= -tol && van_hove_minus_min >= -tol;
}

bool OperatorBoundsReport::holds_sharp(double tol) const {
  return number_bound_min >= -tol && antinumber_sharp_min >= -tol &&
         van_hove_plus_min >= -tol && van_hove_minus_min >= -tol;
}

OperatorBoundsReport operator_bounds_suite(const OccupationBasis& basis,
                                           const Eigen::VectorXd& omega,
                                           const Eigen::VectorXd& f) {
  if (omega.size() != basis.mode_count() || f.size() != basis.mode_count())
    throw std::invalid_argument("operator bounds: mode vector length mismatch");
  OperatorBoundsReport r;
  r.c = f.cwiseProduct(f).cwiseQuotient(omega).sum();
  const auto dim = static_cast<Eigen::Index>(basis.size());
  Eigen::MatrixXd reference = dgamma(basis, omega).dense();
  reference += Eigen::MatrixXd::Identity(dim, dim);
  reference *= r.c;

  const Eigen::MatrixXd ad = creation_operator(basis, f).dense();
  const Eigen::MatrixXd number = ad * ad.transpose();
  const Eigen::MatrixXd antinumber = ad.transpose() * ad;
  r.number_bound_min = min_eigenvalue(reference - number);
  const auto guarded = static_cast<Eigen::Index>(basis.sector_offset(basis.n_max()));
  r.antinumber_bound_min = guarded > 0
                               ? min_eigenvalue((reference - antinumber).topLeftCorner(guarded, guarded))
                               : 0.0;
  const Eigen::MatrixXd field_energy = dgamma(basis, omega).dense();
  if (guarded > 0) {
    Eigen::MatrixXd sharp = r.c * field_energy;
    sharp.diagonal().array() += f.squaredNorm();
    r.antinumber_sharp_min = min_eigenvalue((sharp - antinumber).topLeftCorner(guarded, guarded));
  }
  const Eigen::MatrixXd phi = field_operator(basis, f).dense();
  r.van_hove_plus_min = min_eigenvalue(field_energy + phi) + r.c;
  r.van_hove_minus_min = min_eigenvalue(field_energy - phi) + r.c;
  return r;
}

FockOperator build_l_kappa(const FactorizationMap& split, const FockOperator& h_local,
                           const FockOperator& k_tail) {
  return split.embed_low(h_local) + split.embed_high(k_tail);
}

std::vector<KeyInequalityReport> key_inequality(const FactorizationMap& split,
                                                const FockOperator& l_kappa,
                                                const FockOperator& h_local,
                                                const FockOperator& k_tail,
                                                const std::vector<double>& betas, double tau) {
  const Semigroup tail(k_tail), local(h_local), full(l_kappa);
  const auto vac = static_cast<Eigen::Index>(split.tail_vacuum());
  const Eigen::VectorXd q = split.q_projection().dense().diagonal();
  std::vector<KeyInequalityReport> out;
  for (double beta : betas) {
    if (beta < 0.0) throw std::invalid_argument("key inequality requires beta >= 0");
    KeyInequalityReport r;
    r.vacuum_overlap = tail.at(beta)(vac, vac);
    const FockOperator local_op{local.at(beta).sparseView(0.0, 0.0), true, false};
    const Eigen::MatrixXd rhs = r.vacuum_overlap * (split.embed_low(local_op).dense() * q.asDiagonal());
    const Eigen::MatrixXd s = full.at(beta);
    r.residual = (q.asDiagonal() * s * q.asDiagonal() - rhs).cwiseAbs().maxCoeff();
    r.order = order_check(s, rhs, tau);
    out.push_back(r);
  }
  return out;
}

KeyInequalityReport key_inequality(const FactorizationMap& split, const FockOperator& l_kappa,
                                   const FockOperator& h_local, const FockOperator& k_tail,
                                   double beta, double tau) {
  return key_inequality(split, l_kappa, h_local, k_tail, std::vector<double>{beta}, tau).front();
}

RegularizedLimitReport regularized_limit_probe(const FactorizationMap& split,
                                               const HamiltonianBundle& bundle,
                                               const std::vector<double>& P, double beta,
                                               const std::vector<int>& n_list) {
  RegularizedLimitReport r;
  r.n_values = n_list;
  r.saturation = clamp_saturation(split, P);
  const FockOperator h_ren = renormalized_hamiltonian(bundle.h_full, bundle.e_lambda_grid);
  const Eigen::MatrixXd target = semigroup(h_ren, beta);
  const Eigen::MatrixXd l = bundle.l_kappa.dense();

  auto distance = [&](int n) {
    const Eigen::MatrixXd c = regularized_cross_term(split, P, n, ClampSide::minus).dense();
    return (Semigroup(Eigen::MatrixXd(l + c)).at(beta) - target).cwiseAbs().maxCoeff();
  };
  for (int n : n_list) r.distances.push_back(distance(n));
  r.saturated_distance = distance(r.saturation);
  const double slack = 1e-12 * std::max(1.0, target.cwiseAbs().maxCoeff());
  r.nonincreasing = true;
  for (std::size_t i = 1; i < r.distances.size(); ++i)
    r.nonincreasing = r.nonincreasing && r.distances[i] <= r.distances[i - 1] + slack;

  const int n_last = n_list.empty() ? r.saturation : n_list.back();
  const Eigen::VectorXd c =
      regularized_cross_term(split, P, n_last, ClampSide::minus).dense().diagonal();
  const Eigen::MatrixXd exact = Semigroup(Eigen::MatrixXd(l + Eigen::MatrixXd(c.asDiagonal()))).at(beta);
  const Semigroup free_part(l);
  auto trotter = [&](int steps) {
    const Eigen::MatrixXd step = free_part.at(beta / steps) *
                                 (-(beta / steps) * c.array()).exp().matrix().asDiagonal();
    return (matrix_power(step, steps) - exact).cwiseAbs().maxCoeff();
  };
  r.trotter_error_coarse = trotter(r.trotter_steps_coarse);
  r.trotter_error_fine = trotter(r.trotter_steps_fine);
  return r;
}

}  // namespace nelson
