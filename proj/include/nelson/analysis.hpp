#pragma once

#include "nelson/hamiltonian.hpp"

#include <vector>

namespace nelson {

/// Spectral decomposition of a hermitian operator, reused for many beta values.
class Semigroup {
 public:
  explicit Semigroup(const FockOperator& h);
  explicit Semigroup(const Eigen::MatrixXd& h);

  /// e^{-beta H} = V e^{-beta Lambda} V^T.
  Eigen::MatrixXd at(double beta) const;
  const Eigen::VectorXd& eigenvalues() const { return values_; }
  const Eigen::MatrixXd& eigenvectors() const { return vectors_; }

 private:
  Eigen::VectorXd values_;
  Eigen::MatrixXd vectors_;
};

/// Throws std::invalid_argument for a non-hermitian operator or beta < 0.
Eigen::MatrixXd semigroup(const FockOperator& h, double beta);

/// Entrywise A >= B: min(A - B) >= -tau * scale, scale = max(|A|, |B|).
ConeVerdict order_check(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, double tau);
/// S improves positivity iff min entry > tau_pos * max entry.
ConeVerdict improving_check(const Eigen::MatrixXd& s, double tau_pos);

struct Tolerances {
  double entrywise = 1e-10;
  double positivity = 1e-12;  // tau_pos, relative to the largest entry
  double spectral_gap = 1e-8;  // relative to the spectral radius
  double quadrature = 1e-6;
};

struct SpectralReport {
  double lambda_min = 0.0;
  double gap = 0.0;
  double spectral_radius = 0.0;
  Eigen::VectorXd ground_vector;
  bool strictly_positive_ground = false;
  bool degenerate = false;
  /// improving_check(e^{-beta H}) for each beta in the list.
  std::vector<bool> improving;
  std::vector<double> semigroup_min_entries;
  /// (all improving) == (non-degenerate and strictly positive ground vector).
  bool equivalence_holds = false;
};

SpectralReport perron_frobenius(const FockOperator& h, const std::vector<double>& betas,
                                const Tolerances& tol);

struct ErgodicityResult {
  bool found = false;
  int power = -1;
  double pairing = 0.0;
  int sector_x = -1;  // -1 unless the vector lives in a single sector
  int sector_y = -1;
  double lower_bound = 0.0;  // sqrt(p! q!) <f^p|x> <f^q|y>
  double pairing_at_bound = 0.0;  // <x, phi^{p+q} y>
  bool bound_holds = true;
};

/// <f^{(x)p} | x> for x supported in sector p: sum_n x_n sqrt(p!/prod n_i!) prod f_i^{n_i}.
double symmetric_overlap(const OccupationBasis& basis, const Eigen::VectorXd& f,
                         const Eigen::VectorXd& x);

/// Smallest n <= n_cap with <x, phi(f)^n y> > 0. Throws std::runtime_error when
/// no such power exists.
ErgodicityResult ergodicity_probe(const OccupationBasis& basis, const Eigen::VectorXd& f,
                                  const Eigen::VectorXd& x, const Eigen::VectorXd& y,
                                  int n_cap);

struct DuhamelReport {
  int order = 0;
  int quadrature_points = 0;
  std::vector<Eigen::MatrixXd> terms;  // Richardson-extrapolated D_n
  std::vector<double> term_min_entries;
  std::vector<double> term_quadrature_errors;  // max |D_n(h/2) - D_n(h)|
  std::vector<double> partial_sum_residuals;   // max |sum_{k<=n} D_k - e^{-beta(A+B)}|
  double remainder_bound = 0.0;  // (|B| beta)^{N+1}/(N+1)! e^{beta(|A|+|B|)}
  bool terms_positive = false;
  bool residuals_decrease = false;
  bool within_remainder_bound = false;
};

/// Duhamel expansion of e^{-beta(A+B)} around e^{-beta A} up to order N, using
/// trapezoidal simplex quadrature with `quad_points` and 2 * `quad_points`
/// steps followed by one Richardson extrapolation.
DuhamelReport duhamel(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, double beta,
                      int order, int quad_points);

struct OperatorBoundsReport {
  double c = 0.0;  // |omega^{-1/2} f|^2
  double number_bound_min = 0.0;      // lambda_min(c (dGamma + 1) - a^dagger a)
  double antinumber_bound_min = 0.0;  // same for a a^dagger, below the top sector
  /// lambda_min(c dGamma + |f|^2 - a a^dagger) below the top sector. Since
  /// a a^dagger = a^dagger a + |f|^2, this is the form that survives omega > 1.
  double antinumber_sharp_min = 0.0;
  double van_hove_plus_min = 0.0;     // lambda_min(dGamma + phi) + c
  double van_hove_minus_min = 0.0;    // lambda_min(dGamma - phi) + c
  /// All four stated bounds, a a^dagger in the c (dGamma + 1) form.
  bool holds(double tol) const;
  /// Same, with the a a^dagger bound in the c dGamma + |f|^2 form.
  bool holds_sharp(double tol) const;
};

OperatorBoundsReport operator_bounds_suite(const OccupationBasis& basis,
                                           const Eigen::VectorXd& omega,
                                           const Eigen::VectorXd& f);

struct KeyInequalityReport {
  double residual = 0.0;  // |Q e^{-bL} Q - s (e^{-bH_loc} (x) 1) Q|
  double vacuum_overlap = 0.0;  // s = <Omega|e^{-bK}|Omega>
  ConeVerdict order;  // e^{-bL} >= s (e^{-bH_loc} (x) 1) Q
};

/// L on a product-capped split: h_local (x) 1 + 1 (x) k_tail.
FockOperator build_l_kappa(const FactorizationMap& split, const FockOperator& h_local,
                           const FockOperator& k_tail);

KeyInequalityReport key_inequality(const FactorizationMap& split, const FockOperator& l_kappa,
                                   const FockOperator& h_local, const FockOperator& k_tail,
                                   double beta, double tau);
/// Same for several beta values, sharing one diagonalization of each operator.
std::vector<KeyInequalityReport> key_inequality(const FactorizationMap& split,
                                                const FockOperator& l_kappa,
                                                const FockOperator& h_local,
                                                const FockOperator& k_tail,
                                                const std::vector<double>& betas, double tau);

struct RegularizedLimitReport {
  std::vector<int> n_values;
  std::vector<double> distances;
  int saturation = 0;
  bool nonincreasing = false;
  double saturated_distance = 0.0;
  int trotter_steps_coarse = 64;
  int trotter_steps_fine = 128;
  double trotter_error_coarse = 0.0;
  double trotter_error_fine = 0.0;
};

/// |e^{-beta(L + C^-_n)} - e^{-beta H_ren}| for n in n_list, plus a Lie-Trotter check.
RegularizedLimitReport regularized_limit_probe(const FactorizationMap& split,
                                               const HamiltonianBundle& bundle,
                                               const std::vector<double>& P, double beta,
                                               const std::vector<int>& n_list);

}  // namespace nelson
