#pragma once

#include "nelson/fock.hpp"

#include <memory>

namespace nelson {

/// How the composite space of a low/high split is capped.
///  joint:   pairs (a, b) with total(a) + total(b) <= n_max. The composite basis
///           is the full occupation basis, in its own ordering.
///  product: every pair of a capped low state and a capped high state, in
///           Kronecker order (low index major). This is a genuine tensor product.
enum class CapPolicy { joint, product };

/// Splits the modes of a grid at radius kappa (low: |k| <= kappa) and identifies
/// composite states with (low state, high state) pairs.
class FactorizationMap {
 public:
  FactorizationMap(const ModeGrid& grid, int n_max, double kappa,
                   CapPolicy policy = CapPolicy::joint);

  double kappa() const { return kappa_; }
  CapPolicy policy() const { return policy_; }
  int n_max() const { return n_max_; }
  const std::vector<int>& low_modes() const { return low_modes_; }
  const std::vector<int>& high_modes() const { return high_modes_; }
  const OccupationBasis& low_basis() const { return *low_basis_; }
  const OccupationBasis& high_basis() const { return *high_basis_; }
  /// The full occupation basis over all modes (joint policy only).
  const OccupationBasis& full_basis() const;

  std::size_t size() const { return pairs_.size(); }
  std::pair<std::size_t, std::size_t> pair_of(std::size_t composite) const {
    return pairs_[composite];
  }
  std::optional<std::size_t> composite_of(std::size_t low, std::size_t high) const;
  /// Total boson number of a composite state.
  int total(std::size_t composite) const;

  /// Restrict a vector over all modes to the low / high modes.
  Eigen::VectorXd restrict_low(const Eigen::VectorXd& v) const;
  Eigen::VectorXd restrict_high(const Eigen::VectorXd& v) const;
  Mask restrict_low(const Mask& m) const;
  Mask restrict_high(const Mask& m) const;

  /// A (x) 1 and 1 (x) B compressed to the composite space.
  FockOperator embed_low(const FockOperator& a) const;
  FockOperator embed_high(const FockOperator& b) const;

  /// Q_kappa = Gamma(chi_kappa): projection onto states with no high-mode boson.
  FockOperator q_projection() const;
  /// Index of the tail vacuum in the high basis.
  std::size_t tail_vacuum() const { return 0; }

  /// Momentum component j carried by the low (high) modes of a composite state.
  double low_momentum(std::size_t composite, int j) const;
  double high_momentum(std::size_t composite, int j) const;

 private:
  double kappa_;
  CapPolicy policy_;
  int n_max_;
  std::vector<int> low_modes_;
  std::vector<int> high_modes_;
  std::unique_ptr<OccupationBasis> low_basis_;
  std::unique_ptr<OccupationBasis> high_basis_;
  std::unique_ptr<OccupationBasis> full_basis_;
  std::vector<std::pair<std::size_t, std::size_t>> pairs_;
  std::vector<std::ptrdiff_t> lookup_;  // low * high_size + high -> composite or -1
  Eigen::MatrixXd low_momenta_;         // composite x dimension
  Eigen::MatrixXd high_momenta_;
};

}  // namespace nelson
