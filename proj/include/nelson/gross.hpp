#pragma once

#include "nelson/hamiltonian.hpp"

#include <cstdint>

namespace nelson {

struct GrossBundle {
  FockOperator t_generator;       // T = a(G) - a^dagger(G), on the high factor
  Eigen::MatrixXd u;              // e^T
  Eigen::MatrixXd k_transformed;  // e^T K e^{-T}
  Eigen::VectorXd amplitudes;     // G over the high modes
  WindowConstant c_of_K;          // continuum C(K)
  WindowConstant c_of_K_grid;

  double antisymmetry_residual = 0.0;
  double unitarity_residual = 0.0;  // max |u u^T - 1|
  double spectral_deviation = 0.0;  // max |eig(K) - eig(K~)|
  /// max over modes of |[T, a_i] - G_i 1| on columns with total < n_max.
  double commutator_residual = 0.0;
};

/// Gross transformation of the tail Hamiltonian. Throws std::runtime_error when
/// e^T fails unitarity by more than 1e-8.
GrossBundle gross_transform(const FactorizationMap& split, const ModeGrid& grid,
                            const NelsonParams& params);

struct FormBoundReport {
  double epsilon = 0.0;
  double c_of_K = 0.0;       // continuum C(K)
  double c_of_K_grid = 0.0;  // grid analogue
  bool smallness = false;    // 2d (C + C^2) < 1 for the continuum C(K)
  /// 2d (gC + (gC)^2) + epsilon, multiplying <phi, (J + 1) phi>.
  double form_coefficient = 0.0;
  double d_interaction = 0.0;  // 2 g ||chi_kappa^K / omega||
  double d_constant = 0.0;     // d_interaction^2 / (4 epsilon)
  int samples = 0;
  double worst_ratio = 0.0;  // max |B(phi,phi)| / bound(phi)
  int violations = 0;
};

/// Matrix of the quadratic form B_Lambda on the high factor.
FockOperator gross_form(const FactorizationMap& split, const ModeGrid& grid,
                        const NelsonParams& params);
/// J = 1/2 (P_f^{>kappa})^2 + dGamma(omega^{>kappa}), diagonal.
FockOperator gross_reference(const FactorizationMap& split, const ModeGrid& grid);

/// Samples |<phi, B phi>| against (c + eps) <phi, (J+1) phi> + D_{K,eps} |phi|^2.
FormBoundReport form_bound_check(const FactorizationMap& split, const ModeGrid& grid,
                                 const NelsonParams& params, double epsilon, int samples,
                                 std::uint64_t seed);

struct FormDifferenceReport {
  double lambda_small = 0.0;
  double lambda_large = 0.0;
  double worst_ratio = 0.0;  // max |<phi,(B_1 - B_2) phi>| / <phi,(J+1) phi>
  double bound = 0.0;        // 2d g C(Lambda_1) + 4d g^2 C(K) C(Lambda_1)
};

FormDifferenceReport form_difference_check(const FactorizationMap& split, const ModeGrid& grid,
                                           const NelsonParams& params, double lambda_small,
                                           double lambda_large, int samples,
                                           std::uint64_t seed);

}  // namespace nelson
