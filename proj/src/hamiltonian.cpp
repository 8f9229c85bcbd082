#include "nelson/hamiltonian.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace nelson {

namespace {

void check_momentum(const ModeGrid& grid, const std::vector<double>& P) {
  if (static_cast<int>(P.size()) != grid.dimension())
    throw std::invalid_argument("total momentum P has " + std::to_string(P.size()) +
                                " components, grid dimension is " +
                                std::to_string(grid.dimension()));
}

// 1/2 |P - p|^2 + sum_i n_i omega_i over the modes `modes` of a basis.
Eigen::VectorXd free_diagonal(const OccupationBasis& basis, const ModeGrid& grid,
                              const std::vector<int>& modes, const std::vector<double>& P) {
  const int d = grid.dimension();
  Eigen::VectorXd diag(static_cast<Eigen::Index>(basis.size()));
  std::vector<double> p(d);
  for (std::size_t i = 0; i < basis.size(); ++i) {
    const auto s = basis.state(i);
    std::fill(p.begin(), p.end(), 0.0);
    double field = 0.0;
    for (std::size_t m = 0; m < modes.size(); ++m) {
      if (s[m] == 0) continue;
      const Mode& mode = grid[modes[m]];
      for (int j = 0; j < d; ++j) p[j] += s[m] * mode.k[j];
      field += s[m] * mode.omega;
    }
    double kinetic = 0.0;
    for (int j = 0; j < d; ++j) kinetic += (P[j] - p[j]) * (P[j] - p[j]);
    diag[static_cast<Eigen::Index>(i)] = 0.5 * kinetic + field;
  }
  return diag;
}

std::vector<int> all_modes(const ModeGrid& grid) {
  std::vector<int> m(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) m[i] = static_cast<int>(i);
  return m;
}

FockOperator coupled(const OccupationBasis& basis, const Eigen::VectorXd& diag,
                     const Eigen::VectorXd& f) {
  FockOperator h = diagonal_operator(diag) - field_operator(basis, f);
  h.hermitian = true;
  h.number_conserving = f.isZero(0.0);
  return h;
}

double positive_part(double x) { return x > 0.0 ? x : 0.0; }
double negative_part(double x) { return x < 0.0 ? -x : 0.0; }
double in_window(double x, double lo, double hi) { return x >= lo && x <= hi ? 1.0 : 0.0; }

}  // namespace

void NelsonParams::validate(const ModeGrid& grid) const {
  if (!(g >= 0.0)) throw std::invalid_argument("coupling g must be nonnegative");
  if (!(m > 0.0)) throw std::invalid_argument("boson mass m must be positive");
  if (std::abs(m - grid.mass()) > 1e-12 * m)
    throw std::invalid_argument("Nelson mass differs from the grid dispersion mass");
  check_momentum(grid, P);
  window.validate(grid.spec().extent);
}

FockOperator assemble_fiber_hamiltonian(const OccupationBasis& basis, const ModeGrid& grid,
                                        const NelsonParams& params) {
  check_momentum(grid, params.P);
  if (static_cast<std::size_t>(basis.mode_count()) != grid.size())
    throw std::invalid_argument("basis and grid disagree on the number of modes");
  const Eigen::VectorXd f =
      coupling_amplitudes(grid, params.g, cutoff_mask(grid, params.window.Lambda));
  return coupled(basis, free_diagonal(basis, grid, all_modes(grid), params.P), f);
}

FockOperator renormalized_hamiltonian(const FockOperator& h, double e_lambda) {
  FockOperator r = h - e_lambda * identity_operator(h.dim());
  r.hermitian = h.hermitian;
  r.number_conserving = h.number_conserving;
  return r;
}

FockOperator assemble_local(const FactorizationMap& split, const ModeGrid& grid,
                            const NelsonParams& params) {
  check_momentum(grid, params.P);
  if (!(split.kappa() < params.window.Lambda))
    throw std::invalid_argument("local Hamiltonian requires kappa < Lambda");
  const Mask low = cutoff_mask(grid, split.kappa());
  const Eigen::VectorXd f = split.restrict_low(coupling_amplitudes(grid, params.g, low));
  const double e_kappa = renormalization_sum(grid, params.g, low);
  Eigen::VectorXd diag = free_diagonal(split.low_basis(), grid, split.low_modes(), params.P);
  diag.array() -= e_kappa;
  return coupled(split.low_basis(), diag, f);
}

FockOperator assemble_tail(const FactorizationMap& split, const ModeGrid& grid,
                           const NelsonParams& params) {
  const double kappa = split.kappa();
  const double Lambda = params.window.Lambda;
  if (kappa > Lambda) throw std::invalid_argument("tail Hamiltonian requires kappa <= Lambda");
  const Mask lam = cutoff_mask(grid, Lambda);
  const Mask low = cutoff_mask(grid, kappa);
  const Eigen::VectorXd f =
      split.restrict_high(coupling_amplitudes(grid, params.g, mask_and_not(lam, low)));
  const double e_window =
      renormalization_sum(grid, params.g, lam) - renormalization_sum(grid, params.g, low);
  const std::vector<double> zero(grid.dimension(), 0.0);
  Eigen::VectorXd diag = free_diagonal(split.high_basis(), grid, split.high_modes(), zero);
  diag.array() -= e_window;
  return coupled(split.high_basis(), diag, f);
}

FockOperator cross_term(const FactorizationMap& split, const std::vector<double>& P) {
  Eigen::VectorXd d(static_cast<Eigen::Index>(split.size()));
  for (std::size_t c = 0; c < split.size(); ++c) {
    double v = 0.0;
    for (std::size_t j = 0; j < P.size(); ++j)
      v -= (P[j] - split.low_momentum(c, static_cast<int>(j))) *
           split.high_momentum(c, static_cast<int>(j));
    d[static_cast<Eigen::Index>(c)] = v;
  }
  return diagonal_operator(d);
}

FockOperator regularized_cross_term(const FactorizationMap& split, const std::vector<double>& P,
                                    int n, ClampSide side) {
  if (n < 1) throw std::invalid_argument("regularization index n must be >= 1");
  const double N = n;
  Eigen::VectorXd d(static_cast<Eigen::Index>(split.size()));
  for (std::size_t c = 0; c < split.size(); ++c) {
    double v = 0.0;
    for (std::size_t j = 0; j < P.size(); ++j) {
      const double a = P[j] - split.low_momentum(c, static_cast<int>(j));
      const double b = split.high_momentum(c, static_cast<int>(j));
      const double ap = positive_part(a), am = negative_part(a);
      const double bp = positive_part(b), bm = negative_part(b);
      double product;
      if (side == ClampSide::plus) {
        // (AB)_[n]: keep the positive part, clamp the negative part.
        product = ap * bp + am * bm -
                  (ap * in_window(a, 0, N) * bm * in_window(b, -N, 0) +
                   am * in_window(a, -N, 0) * bp * in_window(b, 0, N));
      } else {
        // (AB)^[n]: clamp the positive part, keep the negative part.
        product = ap * in_window(a, 0, N) * bp * in_window(b, 0, N) +
                  am * in_window(a, -N, 0) * bm * in_window(b, -N, 0) - (ap * bm + am * bp);
      }
      v -= product;
    }
    d[static_cast<Eigen::Index>(c)] = v;
  }
  return diagonal_operator(d);
}

int clamp_saturation(const FactorizationMap& split, const std::vector<double>& P) {
  double r = 1.0;
  for (std::size_t c = 0; c < split.size(); ++c)
    for (std::size_t j = 0; j < P.size(); ++j) {
      r = std::max(r, std::abs(P[j] - split.low_momentum(c, static_cast<int>(j))));
      r = std::max(r, std::abs(split.high_momentum(c, static_cast<int>(j))));
    }
  return static_cast<int>(std::ceil(r));
}

HamiltonianBundle build_bundle(const FactorizationMap& split, const ModeGrid& grid,
                               const NelsonParams& params) {
  if (split.policy() != CapPolicy::joint)
    throw std::invalid_argument("Hamiltonian bundle requires a joint-capped split");
  HamiltonianBundle b;
  b.h_ren_scheme = params.e_scheme;
  b.e_lambda_grid = renormalization_constant(grid, params.g, params.window.Lambda,
                                             EnergyScheme::grid_sum);
  b.e_kappa = renormalization_sum(grid, params.g, cutoff_mask(grid, split.kappa()));
  b.e_window = b.e_lambda_grid - b.e_kappa;
  b.e_lambda = renormalization_constant(grid, params.g, params.window.Lambda, params.e_scheme);
  b.h_full = assemble_fiber_hamiltonian(split.full_basis(), grid, params);
  b.h_ren = renormalized_hamiltonian(b.h_full, b.e_lambda);
  b.h_local = assemble_local(split, grid, params);
  b.k_tail = assemble_tail(split, grid, params);
  b.cross = cross_term(split, params.P);
  b.l_kappa = split.embed_low(b.h_local) + split.embed_high(b.k_tail);
  return b;
}

DecompositionResidual decomposition_residual(const HamiltonianBundle& bundle,
                                             const FactorizationMap& split) {
  const FockOperator sum =
      split.embed_low(bundle.h_local) + split.embed_high(bundle.k_tail) + bundle.cross;
  return {max_abs_difference(bundle.h_ren, sum),
          bundle.h_ren_scheme == EnergyScheme::grid_sum};
}

}  // namespace nelson
