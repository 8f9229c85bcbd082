#include "nelson/factorization.hpp"

#include "nelson/grid.hpp"

#include <stdexcept>

namespace nelson {

FactorizationMap::FactorizationMap(const ModeGrid& grid, int n_max, double kappa,
                                   CapPolicy policy)
    : kappa_(kappa), policy_(policy), n_max_(n_max) {
  if (kappa < 0.0) throw std::invalid_argument("kappa must be nonnegative");
  const Mask low = cutoff_mask(grid, kappa);
  for (std::size_t i = 0; i < grid.size(); ++i)
    (low[i] ? low_modes_ : high_modes_).push_back(static_cast<int>(i));

  low_basis_ = std::make_unique<OccupationBasis>(static_cast<int>(low_modes_.size()), n_max);
  high_basis_ = std::make_unique<OccupationBasis>(static_cast<int>(high_modes_.size()), n_max);
  const std::size_t hs = high_basis_->size();
  lookup_.assign(low_basis_->size() * hs, -1);

  if (policy == CapPolicy::joint) {
    full_basis_ = std::make_unique<OccupationBasis>(static_cast<int>(grid.size()), n_max);
    pairs_.resize(full_basis_->size());
    std::vector<int> a(low_modes_.size()), b(high_modes_.size());
    for (std::size_t i = 0; i < full_basis_->size(); ++i) {
      const auto s = full_basis_->state(i);
      for (std::size_t m = 0; m < low_modes_.size(); ++m) a[m] = s[low_modes_[m]];
      for (std::size_t m = 0; m < high_modes_.size(); ++m) b[m] = s[high_modes_[m]];
      const std::size_t la = *low_basis_->index_of(a);
      const std::size_t hb = *high_basis_->index_of(b);
      pairs_[i] = {la, hb};
      lookup_[la * hs + hb] = static_cast<std::ptrdiff_t>(i);
    }
  } else {
    pairs_.reserve(low_basis_->size() * hs);
    for (std::size_t la = 0; la < low_basis_->size(); ++la)
      for (std::size_t hb = 0; hb < hs; ++hb) {
        lookup_[la * hs + hb] = static_cast<std::ptrdiff_t>(pairs_.size());
        pairs_.emplace_back(la, hb);
      }
  }

  const int d = grid.dimension();
  low_momenta_ = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(size()), d);
  high_momenta_ = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(size()), d);
  for (std::size_t c = 0; c < size(); ++c) {
    const auto a = low_basis_->state(pairs_[c].first);
    const auto b = high_basis_->state(pairs_[c].second);
    for (int j = 0; j < d; ++j) {
      double lo = 0.0, hi = 0.0;
      for (std::size_t m = 0; m < low_modes_.size(); ++m) lo += a[m] * grid[low_modes_[m]].k[j];
      for (std::size_t m = 0; m < high_modes_.size(); ++m)
        hi += b[m] * grid[high_modes_[m]].k[j];
      low_momenta_(static_cast<Eigen::Index>(c), j) = lo;
      high_momenta_(static_cast<Eigen::Index>(c), j) = hi;
    }
  }
}

const OccupationBasis& FactorizationMap::full_basis() const {
  if (!full_basis_) throw std::logic_error("product-capped split has no full occupation basis");
  return *full_basis_;
}

std::optional<std::size_t> FactorizationMap::composite_of(std::size_t low,
                                                          std::size_t high) const {
  const auto c = lookup_[low * high_basis_->size() + high];
  if (c < 0) return std::nullopt;
  return static_cast<std::size_t>(c);
}

int FactorizationMap::total(std::size_t composite) const {
  return low_basis_->total(pairs_[composite].first) +
         high_basis_->total(pairs_[composite].second);
}

Eigen::VectorXd FactorizationMap::restrict_low(const Eigen::VectorXd& v) const {
  Eigen::VectorXd r(static_cast<Eigen::Index>(low_modes_.size()));
  for (std::size_t m = 0; m < low_modes_.size(); ++m) r[m] = v[low_modes_[m]];
  return r;
}

Eigen::VectorXd FactorizationMap::restrict_high(const Eigen::VectorXd& v) const {
  Eigen::VectorXd r(static_cast<Eigen::Index>(high_modes_.size()));
  for (std::size_t m = 0; m < high_modes_.size(); ++m) r[m] = v[high_modes_[m]];
  return r;
}

Mask FactorizationMap::restrict_low(const Mask& v) const {
  Mask r(low_modes_.size());
  for (std::size_t m = 0; m < low_modes_.size(); ++m) r[m] = v[low_modes_[m]];
  return r;
}

Mask FactorizationMap::restrict_high(const Mask& v) const {
  Mask r(high_modes_.size());
  for (std::size_t m = 0; m < high_modes_.size(); ++m) r[m] = v[high_modes_[m]];
  return r;
}

FockOperator FactorizationMap::embed_low(const FockOperator& a) const {
  if (a.dim() != low_basis_->size()) throw std::invalid_argument("embed_low: dimension mismatch");
  std::vector<Eigen::Triplet<double>> t;
  for (int k = 0; k < a.matrix.outerSize(); ++k)
    for (SparseMatrix::InnerIterator it(a.matrix, k); it; ++it)
      for (std::size_t hb = 0; hb < high_basis_->size(); ++hb) {
        const auto r = composite_of(static_cast<std::size_t>(it.row()), hb);
        const auto c = composite_of(static_cast<std::size_t>(it.col()), hb);
        if (r && c)
          t.emplace_back(static_cast<Eigen::Index>(*r), static_cast<Eigen::Index>(*c),
                         it.value());
      }
  SparseMatrix m(static_cast<Eigen::Index>(size()), static_cast<Eigen::Index>(size()));
  m.setFromTriplets(t.begin(), t.end());
  return {m, a.hermitian, a.number_conserving};
}

FockOperator FactorizationMap::embed_high(const FockOperator& b) const {
  if (b.dim() != high_basis_->size())
    throw std::invalid_argument("embed_high: dimension mismatch");
  std::vector<Eigen::Triplet<double>> t;
  for (int k = 0; k < b.matrix.outerSize(); ++k)
    for (SparseMatrix::InnerIterator it(b.matrix, k); it; ++it)
      for (std::size_t la = 0; la < low_basis_->size(); ++la) {
        const auto r = composite_of(la, static_cast<std::size_t>(it.row()));
        const auto c = composite_of(la, static_cast<std::size_t>(it.col()));
        if (r && c)
          t.emplace_back(static_cast<Eigen::Index>(*r), static_cast<Eigen::Index>(*c),
                         it.value());
      }
  SparseMatrix m(static_cast<Eigen::Index>(size()), static_cast<Eigen::Index>(size()));
  m.setFromTriplets(t.begin(), t.end());
  return {m, b.hermitian, b.number_conserving};
}

FockOperator FactorizationMap::q_projection() const {
  Eigen::VectorXd d(static_cast<Eigen::Index>(size()));
  for (std::size_t c = 0; c < size(); ++c)
    d[static_cast<Eigen::Index>(c)] = pairs_[c].second == tail_vacuum() ? 1.0 : 0.0;
  return diagonal_operator(d);
}

double FactorizationMap::low_momentum(std::size_t composite, int j) const {
  return low_momenta_(static_cast<Eigen::Index>(composite), j);
}

double FactorizationMap::high_momentum(std::size_t composite, int j) const {
  return high_momenta_(static_cast<Eigen::Index>(composite), j);
}

}  // namespace nelson
