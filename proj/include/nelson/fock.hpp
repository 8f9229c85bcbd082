#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

namespace nelson {

class ModeGrid;
using Mask = std::vector<bool>;

using SparseMatrix = Eigen::SparseMatrix<double>;

inline constexpr std::size_t kDefaultDimensionCeiling = 200000;

/// All occupation vectors over `mode_count` modes with total boson number <= n_max.
/// States are ordered by total number, then lexicographically, so each number
/// sector is a contiguous block.
class OccupationBasis {
 public:
  OccupationBasis(int mode_count, int n_max,
                  std::size_t dimension_ceiling = kDefaultDimensionCeiling);

  int mode_count() const { return modes_; }
  int n_max() const { return n_max_; }
  std::size_t size() const { return size_; }

  std::span<const int> state(std::size_t i) const {
    return {occupations_.data() + i * modes_, static_cast<std::size_t>(modes_)};
  }
  int total(std::size_t i) const { return totals_[i]; }

  /// First index of sector s, for s in [0, n_max + 1]; sector_offset(n_max + 1) == size().
  std::size_t sector_offset(int s) const { return offsets_.at(s); }

  std::optional<std::size_t> index_of(std::span<const int> occupation) const;
  /// Index of the state with one more boson in `mode`, if still inside the cap.
  std::optional<std::size_t> raised(std::size_t i, int mode) const;
  std::optional<std::size_t> lowered(std::size_t i, int mode) const;

  /// Number of occupation vectors of `modes` modes with total exactly `n`.
  static std::size_t sector_count(int modes, int n);
  /// C(M + n_max, M).
  static std::size_t state_count(int modes, int n_max);

 private:
  int modes_;
  int n_max_;
  std::size_t size_;
  std::vector<int> occupations_;
  std::vector<int> totals_;
  std::vector<std::size_t> offsets_;
};

/// Operator on a truncated Fock space, stored as a real sparse matrix.
struct FockOperator {
  SparseMatrix matrix;
  bool hermitian = false;
  bool number_conserving = false;

  std::size_t dim() const { return static_cast<std::size_t>(matrix.rows()); }
  Eigen::MatrixXd dense() const { return Eigen::MatrixXd(matrix); }
  /// max |A - A^T| relative to max |A| (absolute when A = 0).
  double hermiticity_residual() const;
  /// max |A_ij| over pairs in different number sectors.
  double sector_leakage(const OccupationBasis& basis) const;
};

FockOperator operator+(const FockOperator& a, const FockOperator& b);
FockOperator operator-(const FockOperator& a, const FockOperator& b);
FockOperator operator*(double s, const FockOperator& a);
FockOperator multiply(const FockOperator& a, const FockOperator& b);
FockOperator transpose(const FockOperator& a);
FockOperator identity_operator(std::size_t dim);
FockOperator diagonal_operator(const Eigen::VectorXd& diag);

double max_abs(const SparseMatrix& m);
double max_abs_difference(const FockOperator& a, const FockOperator& b);

/// a^dagger(f): <n + e_i| a^dagger |n> = f_i sqrt(n_i + 1); the top sector maps to zero.
FockOperator creation_operator(const OccupationBasis& basis, const Eigen::VectorXd& f);
/// a(f): <n - e_i| a |n> = f_i sqrt(n_i). Built independently of the creation matrix.
FockOperator annihilation_operator(const OccupationBasis& basis, const Eigen::VectorXd& f);
/// phi(f) = a(f) + a^dagger(f).
FockOperator field_operator(const OccupationBasis& basis, const Eigen::VectorXd& f);
/// Diagonal with sum_i n_i F_i.
FockOperator dgamma(const OccupationBasis& basis, const Eigen::VectorXd& F);
Eigen::VectorXd dgamma_diagonal(const OccupationBasis& basis, const Eigen::VectorXd& F);
/// Gamma(c) for a mode-diagonal contraction: diagonal with prod_i c_i^{n_i}.
FockOperator gamma_diagonal(const OccupationBasis& basis, const Eigen::VectorXd& c);
/// dGamma(k_j mask) on a basis whose modes are the grid modes.
FockOperator field_momentum(const OccupationBasis& basis, const ModeGrid& grid, int component,
                            const Mask& mask);

/// Coordinate-list text export: "row col value" per nonzero, 17 significant digits.
void write_coordinate_list(std::ostream& out, const FockOperator& op);

// --- cone primitives -------------------------------------------------------

struct ConeVerdict {
  bool preserving = false;
  bool improving = false;
  double min_entry = 0.0;
  double max_negative_violation = 0.0;
  std::optional<std::pair<std::size_t, std::size_t>> witness;
};

struct JordanParts {
  Eigen::VectorXd positive;
  Eigen::VectorXd negative;
};

/// v = v_+ - v_- with disjoint supports.
JordanParts cone_decompose(const Eigen::VectorXd& v);

struct VectorPositivity {
  bool positive = false;
  bool strictly_positive = false;
  std::optional<std::size_t> witness;  // argmin entry when a flag is false
};

VectorPositivity vector_positivity(const Eigen::VectorXd& v, double tau_pos);

}  // namespace nelson
