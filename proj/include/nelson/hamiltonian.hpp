#pragma once

#include "nelson/factorization.hpp"
#include "nelson/fock.hpp"
#include "nelson/grid.hpp"

#include <vector>

namespace nelson {

struct NelsonParams {
  double g = 1.0;
  double m = 1.0;
  std::vector<double> P;  // total momentum, length = grid dimension
  CutoffWindow window;
  EnergyScheme e_scheme = EnergyScheme::grid_sum;

  /// Checks the coupling, the mass against the grid, P's length and the window.
  void validate(const ModeGrid& grid) const;
};

/// H_Lambda(P) = 1/2 (P - P_f)^2 - phi(f_Lambda) + dGamma(omega) on the full basis.
FockOperator assemble_fiber_hamiltonian(const OccupationBasis& basis, const ModeGrid& grid,
                                        const NelsonParams& params);

/// h - E 1.
FockOperator renormalized_hamiltonian(const FockOperator& h, double e_lambda);

/// H^{<=kappa}(P) on the low factor: 1/2 (P - P_f^{<=kappa})^2 - phi(f_kappa)
/// + dGamma(omega^{<=kappa}) - E_kappa (grid sum).
FockOperator assemble_local(const FactorizationMap& split, const ModeGrid& grid,
                            const NelsonParams& params);

/// K_{kappa,Lambda} on the high factor: 1/2 (P_f^{>kappa})^2 - phi(f_kappa^Lambda)
/// + dGamma(omega^{>kappa}) - E_kappa^Lambda (grid sum).
FockOperator assemble_tail(const FactorizationMap& split, const ModeGrid& grid,
                           const NelsonParams& params);

/// C_kappa = -(P - P_f^{<=kappa}) . P_f^{>kappa}, diagonal on the composite space.
FockOperator cross_term(const FactorizationMap& split, const std::vector<double>& P);

enum class ClampSide { plus, minus };

/// C^+_{kappa,n} (side plus) or C^-_{kappa,n} (side minus): each component product
/// (P_j - P_{f,j}^{<=kappa}) P_{f,j}^{>kappa} has its sign-indefinite part clamped
/// by the spectral windows [0, n] / [-n, 0] of both factors.
FockOperator regularized_cross_term(const FactorizationMap& split, const std::vector<double>& P,
                                    int n, ClampSide side);
/// Smallest n for which both clamps are inactive on every composite state.
int clamp_saturation(const FactorizationMap& split, const std::vector<double>& P);

struct HamiltonianBundle {
  FockOperator h_full;
  FockOperator h_ren;
  FockOperator h_local;
  FockOperator k_tail;
  FockOperator cross;
  FockOperator l_kappa;  // embed_low(h_local) + embed_high(k_tail)
  double e_lambda = 0.0;
  double e_kappa = 0.0;
  double e_window = 0.0;
  double e_lambda_grid = 0.0;
  EnergyScheme h_ren_scheme = EnergyScheme::grid_sum;
};

/// Builds every Hamiltonian on a joint-capped split. h_ren uses params.e_scheme;
/// local and tail pieces always use the grid sum.
HamiltonianBundle build_bundle(const FactorizationMap& split, const ModeGrid& grid,
                               const NelsonParams& params);

struct DecompositionResidual {
  double residual = 0.0;
  bool scheme_consistent = true;
};

/// max |h_ren - (h_local (x) 1 + 1 (x) K + C_kappa)|.
DecompositionResidual decomposition_residual(const HamiltonianBundle& bundle,
                                             const FactorizationMap& split);

}  // namespace nelson
