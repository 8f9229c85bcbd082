#include "nelson/fock.hpp"

#include "nelson/grid.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <ostream>
#include <stdexcept>
#include <string>

namespace nelson {

namespace {

using Triplet = Eigen::Triplet<double>;

std::size_t binomial(std::size_t n, std::size_t k) {
  if (k > n) return 0;
  k = std::min(k, n - k);
  long double r = 1.0L;
  for (std::size_t i = 1; i <= k; ++i) r = r * static_cast<long double>(n - k + i) / i;
  if (r > static_cast<long double>(std::numeric_limits<std::size_t>::max() / 2))
    return std::numeric_limits<std::size_t>::max() / 2;
  return static_cast<std::size_t>(std::llround(r));
}

void check_length(const OccupationBasis& basis, const Eigen::VectorXd& f) {
  if (f.size() != basis.mode_count())
    throw std::invalid_argument("mode vector has length " + std::to_string(f.size()) +
                                ", basis has " + std::to_string(basis.mode_count()) + " modes");
}

SparseMatrix from_triplets(std::size_t dim, const std::vector<Triplet>& t) {
  SparseMatrix m(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(dim));
  m.setFromTriplets(t.begin(), t.end());
  m.makeCompressed();
  return m;
}

}  // namespace

std::size_t OccupationBasis::sector_count(int modes, int n) {
  if (n < 0) return 0;
  if (modes == 0) return n == 0 ? 1 : 0;
  return binomial(static_cast<std::size_t>(n + modes - 1), static_cast<std::size_t>(modes - 1));
}

std::size_t OccupationBasis::state_count(int modes, int n_max) {
  return binomial(static_cast<std::size_t>(modes + n_max), static_cast<std::size_t>(modes));
}

OccupationBasis::OccupationBasis(int mode_count, int n_max, std::size_t dimension_ceiling)
    : modes_(mode_count), n_max_(n_max), size_(0) {
  if (mode_count < 0) throw std::invalid_argument("mode count must be nonnegative");
  if (n_max < 0) throw std::invalid_argument("boson cap n_max must be nonnegative");
  const std::size_t count = mode_count == 0 ? 1 : state_count(mode_count, n_max);
  if (count > dimension_ceiling)
    throw std::length_error("occupation basis with " + std::to_string(count) +
                            " states exceeds the dimension ceiling " +
                            std::to_string(dimension_ceiling));
  size_ = count;
  occupations_.reserve(size_ * static_cast<std::size_t>(modes_));
  totals_.reserve(size_);
  offsets_.assign(static_cast<std::size_t>(n_max_) + 2, 0);

  std::vector<int> current(modes_, 0);
  for (int s = 0; s <= n_max_; ++s) {
    offsets_[s] = totals_.size();
    if (modes_ == 0) {
      if (s == 0) totals_.push_back(0);
      continue;
    }
    // Lexicographically ascending vectors with sum s: fill positions left to right.
    auto fill = [&](auto&& self, int pos, int remaining) -> void {
      if (pos == modes_ - 1) {
        current[pos] = remaining;
        occupations_.insert(occupations_.end(), current.begin(), current.end());
        totals_.push_back(s);
        return;
      }
      for (int v = 0; v <= remaining; ++v) {
        current[pos] = v;
        self(self, pos + 1, remaining - v);
      }
    };
    fill(fill, 0, s);
  }
  offsets_[n_max_ + 1] = totals_.size();
}

std::optional<std::size_t> OccupationBasis::index_of(std::span<const int> occupation) const {
  if (static_cast<int>(occupation.size()) != modes_) return std::nullopt;
  int total = 0;
  for (int n : occupation) {
    if (n < 0) return std::nullopt;
    total += n;
  }
  if (total > n_max_) return std::nullopt;
  std::size_t rank = offsets_[total];
  int remaining = total;
  for (int i = 0; i + 1 < modes_; ++i) {
    for (int v = 0; v < occupation[i]; ++v) rank += sector_count(modes_ - i - 1, remaining - v);
    remaining -= occupation[i];
  }
  return rank;
}

std::optional<std::size_t> OccupationBasis::raised(std::size_t i, int mode) const {
  if (totals_[i] >= n_max_) return std::nullopt;
  std::vector<int> occ(state(i).begin(), state(i).end());
  ++occ[mode];
  return index_of(occ);
}

std::optional<std::size_t> OccupationBasis::lowered(std::size_t i, int mode) const {
  if (state(i)[mode] == 0) return std::nullopt;
  std::vector<int> occ(state(i).begin(), state(i).end());
  --occ[mode];
  return index_of(occ);
}

double max_abs(const SparseMatrix& m) {
  double r = 0.0;
  for (int k = 0; k < m.outerSize(); ++k)
    for (SparseMatrix::InnerIterator it(m, k); it; ++it) r = std::max(r, std::abs(it.value()));
  return r;
}

double FockOperator::hermiticity_residual() const {
  const SparseMatrix t = matrix.transpose();
  const double diff = max_abs(SparseMatrix(matrix - t));
  const double scale = max_abs(matrix);
  return scale > 0.0 ? diff / scale : diff;
}

double FockOperator::sector_leakage(const OccupationBasis& basis) const {
  double r = 0.0;
  for (int k = 0; k < matrix.outerSize(); ++k)
    for (SparseMatrix::InnerIterator it(matrix, k); it; ++it)
      if (basis.total(it.row()) != basis.total(it.col())) r = std::max(r, std::abs(it.value()));
  return r;
}

FockOperator operator+(const FockOperator& a, const FockOperator& b) {
  return {a.matrix + b.matrix, a.hermitian && b.hermitian,
          a.number_conserving && b.number_conserving};
}

FockOperator operator-(const FockOperator& a, const FockOperator& b) {
  return {a.matrix - b.matrix, a.hermitian && b.hermitian,
          a.number_conserving && b.number_conserving};
}

FockOperator operator*(double s, const FockOperator& a) {
  return {s * a.matrix, a.hermitian, a.number_conserving};
}

FockOperator multiply(const FockOperator& a, const FockOperator& b) {
  return {(a.matrix * b.matrix).pruned(), false, a.number_conserving && b.number_conserving};
}

FockOperator transpose(const FockOperator& a) {
  return {SparseMatrix(a.matrix.transpose()), a.hermitian, a.number_conserving};
}

FockOperator identity_operator(std::size_t dim) {
  SparseMatrix m(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(dim));
  m.setIdentity();
  return {m, true, true};
}

FockOperator diagonal_operator(const Eigen::VectorXd& diag) {
  std::vector<Triplet> t;
  t.reserve(static_cast<std::size_t>(diag.size()));
  for (Eigen::Index i = 0; i < diag.size(); ++i)
    if (diag[i] != 0.0) t.emplace_back(i, i, diag[i]);
  return {from_triplets(static_cast<std::size_t>(diag.size()), t), true, true};
}

double max_abs_difference(const FockOperator& a, const FockOperator& b) {
  if (a.dim() != b.dim()) throw std::invalid_argument("operator dimension mismatch");
  return max_abs(SparseMatrix(a.matrix - b.matrix));
}

FockOperator creation_operator(const OccupationBasis& basis, const Eigen::VectorXd& f) {
  check_length(basis, f);
  std::vector<Triplet> t;
  const int M = basis.mode_count();
  std::vector<int> occ(M);
  for (std::size_t col = 0; col < basis.size(); ++col) {
    if (basis.total(col) >= basis.n_max()) break;  // sectors are contiguous
    const auto s = basis.state(col);
    std::copy(s.begin(), s.end(), occ.begin());
    for (int i = 0; i < M; ++i) {
      if (f[i] == 0.0) continue;
      ++occ[i];
      const auto row = basis.index_of(occ);
      --occ[i];
      t.emplace_back(static_cast<Eigen::Index>(*row), static_cast<Eigen::Index>(col),
                     f[i] * std::sqrt(static_cast<double>(s[i] + 1)));
    }
  }
  return {from_triplets(basis.size(), t), false, false};
}

FockOperator annihilation_operator(const OccupationBasis& basis, const Eigen::VectorXd& f) {
  check_length(basis, f);
  std::vector<Triplet> t;
  const int M = basis.mode_count();
  std::vector<int> occ(M);
  for (std::size_t col = 0; col < basis.size(); ++col) {
    const auto s = basis.state(col);
    std::copy(s.begin(), s.end(), occ.begin());
    for (int i = 0; i < M; ++i) {
      if (f[i] == 0.0 || s[i] == 0) continue;
      --occ[i];
      const auto row = basis.index_of(occ);
      ++occ[i];
      t.emplace_back(static_cast<Eigen::Index>(*row), static_cast<Eigen::Index>(col),
                     f[i] * std::sqrt(static_cast<double>(s[i])));
    }
  }
  return {from_triplets(basis.size(), t), false, false};
}

FockOperator field_operator(const OccupationBasis& basis, const Eigen::VectorXd& f) {
  const FockOperator ad = creation_operator(basis, f);
  FockOperator phi{SparseMatrix(ad.matrix + SparseMatrix(ad.matrix.transpose())), true, false};
  return phi;
}

Eigen::VectorXd dgamma_diagonal(const OccupationBasis& basis, const Eigen::VectorXd& F) {
  check_length(basis, F);
  Eigen::VectorXd d(static_cast<Eigen::Index>(basis.size()));
  for (std::size_t i = 0; i < basis.size(); ++i) {
    const auto s = basis.state(i);
    double v = 0.0;
    for (int m = 0; m < basis.mode_count(); ++m) v += s[m] * F[m];
    d[static_cast<Eigen::Index>(i)] = v;
  }
  return d;
}

FockOperator dgamma(const OccupationBasis& basis, const Eigen::VectorXd& F) {
  return diagonal_operator(dgamma_diagonal(basis, F));
}

FockOperator gamma_diagonal(const OccupationBasis& basis, const Eigen::VectorXd& c) {
  check_length(basis, c);
  for (Eigen::Index i = 0; i < c.size(); ++i)
    if (std::abs(c[i]) > 1.0)
      throw std::invalid_argument("Gamma requires a contraction, |c_" + std::to_string(i) +
                                  "| = " + std::to_string(std::abs(c[i])) + " > 1");
  Eigen::VectorXd d(static_cast<Eigen::Index>(basis.size()));
  for (std::size_t i = 0; i < basis.size(); ++i) {
    const auto s = basis.state(i);
    double v = 1.0;
    for (int m = 0; m < basis.mode_count(); ++m)
      for (int p = 0; p < s[m]; ++p) v *= c[m];
    d[static_cast<Eigen::Index>(i)] = v;
  }
  return diagonal_operator(d);
}

FockOperator field_momentum(const OccupationBasis& basis, const ModeGrid& grid, int component,
                            const Mask& mask) {
  if (grid.size() != static_cast<std::size_t>(basis.mode_count()) || mask.size() != grid.size())
    throw std::invalid_argument("field momentum: grid, mask and basis disagree on mode count");
  Eigen::VectorXd F = grid.component(component);
  for (std::size_t i = 0; i < grid.size(); ++i)
    if (!mask[i]) F[static_cast<Eigen::Index>(i)] = 0.0;
  return dgamma(basis, F);
}

void write_coordinate_list(std::ostream& out, const FockOperator& op) {
  const auto flags = out.flags();
  const auto precision = out.precision();
  out << std::setprecision(17);
  SparseMatrix rowmajor = op.matrix;
  std::vector<std::tuple<Eigen::Index, Eigen::Index, double>> entries;
  for (int k = 0; k < rowmajor.outerSize(); ++k)
    for (SparseMatrix::InnerIterator it(rowmajor, k); it; ++it)
      entries.emplace_back(it.row(), it.col(), it.value());
  std::sort(entries.begin(), entries.end());
  for (const auto& [r, c, v] : entries) out << r << ' ' << c << ' ' << v << '\n';
  out.flags(flags);
  out.precision(precision);
}

JordanParts cone_decompose(const Eigen::VectorXd& v) {
  return {v.cwiseMax(0.0), (-v).cwiseMax(0.0)};
}

VectorPositivity vector_positivity(const Eigen::VectorXd& v, double tau_pos) {
  if (!(tau_pos > 0.0)) throw std::invalid_argument("positivity tolerance must be positive");
  VectorPositivity r;
  if (v.size() == 0) return r;
  Eigen::Index arg = 0;
  const double lo = v.minCoeff(&arg);
  const double scale = v.cwiseAbs().maxCoeff();
  r.positive = lo >= -tau_pos * scale;
  r.strictly_positive = lo > tau_pos * scale;
  if (!r.positive || !r.strictly_positive) r.witness = static_cast<std::size_t>(arg);
  return r;
}

}  // namespace nelson
