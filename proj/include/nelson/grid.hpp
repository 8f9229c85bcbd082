#pragma once

#include <Eigen/Dense>

#include <span>
#include <string>
#include <vector>

namespace nelson {

enum class Layout { cartesian, radial_shell };

enum class EnergyScheme { grid_sum, radial_quadrature };

Layout parse_layout(const std::string& name);
std::string to_string(Layout layout);
EnergyScheme parse_energy_scheme(const std::string& name);
std::string to_string(EnergyScheme scheme);

struct GridSpec {
  int dimension = 1;  // 1 or 3
  double extent = 1.0;
  int points_per_axis = 3;
  double mass = 1.0;
  Layout layout = Layout::cartesian;

  void validate() const;
};

struct Mode {
  int index = 0;
  std::vector<double> k;
  double weight = 0.0;  // quadrature cell volume
  double omega = 0.0;

  double norm() const;
  double norm2() const;
};

/// Finite set of momentum modes, sorted by |k| and then lexicographically in k.
class ModeGrid {
 public:
  ModeGrid(GridSpec spec, std::vector<Mode> modes);

  const GridSpec& spec() const { return spec_; }
  int dimension() const { return spec_.dimension; }
  double mass() const { return spec_.mass; }
  std::size_t size() const { return modes_.size(); }
  const Mode& operator[](std::size_t i) const { return modes_[i]; }
  std::span<const Mode> modes() const { return modes_; }

  double max_norm() const;
  /// Component j of every mode momentum.
  Eigen::VectorXd component(int j) const;
  Eigen::VectorXd omegas() const;
  Eigen::VectorXd weights() const;

 private:
  GridSpec spec_;
  std::vector<Mode> modes_;
};

/// Momentum split radii. 0 <= kappa < K_gross < Lambda <= extent.
struct CutoffWindow {
  double kappa = 0.0;
  double Lambda = 1.0;
  double K_gross = 0.5;

  void validate(double extent) const;
};

using Mask = std::vector<bool>;

ModeGrid build_grid(const GridSpec& spec);

double dispersion(std::span<const double> k, double m);

/// Entry i is true iff |k_i| <= radius.
Mask cutoff_mask(const ModeGrid& grid, double radius);
/// chi_hi AND NOT chi_lo, i.e. lo < |k| <= hi.
Mask shell_mask(const ModeGrid& grid, double lo, double hi);
Mask mask_and(const Mask& a, const Mask& b);
Mask mask_and_not(const Mask& a, const Mask& b);
std::size_t mask_count(const Mask& m);

/// f_i = g sqrt(w_i) mask_i / sqrt(omega_i).
Eigen::VectorXd coupling_amplitudes(const ModeGrid& grid, double g, const Mask& mask);

/// E_Lambda. grid_sum uses the modes of `grid`; radial_quadrature integrates the
/// continuum kernel in grid.dimension() dimensions.
double renormalization_constant(const ModeGrid& grid, double g, double Lambda,
                                EnergyScheme scheme);
double renormalization_constant_radial(int dimension, double g, double m, double Lambda);
/// -g^2 sum over modes selected by mask of w / (omega (omega + k^2/2)).
double renormalization_sum(const ModeGrid& grid, double g, const Mask& mask);

struct WindowConstant {
  double value = 0.0;    // C(K)
  double squared = 0.0;  // C(K)^2
  double cut_radius = 0.0;
  double tail_bound = 0.0;
  /// 2 d (C + C^2); equals 6C + 6C^2 in three dimensions.
  double form_constant = 0.0;
  bool small = false;  // form_constant < 1
};

WindowConstant window_constant(int dimension, double K, double m);
/// Grid analogue sum_{|k|>K} w / (omega + k^2/2)^2.
WindowConstant window_constant_grid(const ModeGrid& grid, double K);

/// Gross kernel g (1 - chi_K) chi_kappa^Lambda / (omega^{1/2} (omega + k^2/2)), times sqrt(w).
Eigen::VectorXd gross_amplitudes(const ModeGrid& grid, double g, const CutoffWindow& window);

}  // namespace nelson
