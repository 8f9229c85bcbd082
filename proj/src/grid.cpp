#include "nelson/grid.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace nelson {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kShellTol = 1e-12;

double integrate(const auto& f, double a, double b) {
  if (b <= a) return 0.0;
  double err = 0.0;
  return boost::math::quadrature::gauss_kronrod<double, 61>::integrate(f, a, b, 20, 1e-13,
                                                                         &err);
}

// Angular measure of the unit sphere in d dimensions, counting both signs in d = 1.
double angular_factor(int dimension) { return dimension == 3 ? 4.0 * kPi : 2.0; }

}  // namespace

Layout parse_layout(const std::string& name) {
  if (name == "cartesian") return Layout::cartesian;
  if (name == "radial-shell" || name == "radial_shell") return Layout::radial_shell;
  throw std::invalid_argument("unknown grid layout '" + name + "'");
}

std::string to_string(Layout layout) {
  return layout == Layout::cartesian ? "cartesian" : "radial-shell";
}

EnergyScheme parse_energy_scheme(const std::string& name) {
  if (name == "grid-sum" || name == "grid_sum") return EnergyScheme::grid_sum;
  if (name == "radial-quadrature" || name == "radial_quadrature")
    return EnergyScheme::radial_quadrature;
  throw std::invalid_argument("unknown energy scheme '" + name + "'");
}

std::string to_string(EnergyScheme scheme) {
  return scheme == EnergyScheme::grid_sum ? "grid-sum" : "radial-quadrature";
}

void GridSpec::validate() const {
  if (dimension != 1 && dimension != 3)
    throw std::invalid_argument("grid dimension must be 1 or 3, got " +
                                std::to_string(dimension));
  if (points_per_axis < 1) throw std::invalid_argument("grid needs at least one point per axis");
  if (!(extent > 0.0)) throw std::invalid_argument("grid extent must be positive");
  if (!(mass > 0.0)) throw std::invalid_argument("boson mass m must be positive");
}

double Mode::norm2() const {
  double s = 0.0;
  for (double c : k) s += c * c;
  return s;
}

double Mode::norm() const { return std::sqrt(norm2()); }

ModeGrid::ModeGrid(GridSpec spec, std::vector<Mode> modes)
    : spec_(spec), modes_(std::move(modes)) {}

double ModeGrid::max_norm() const {
  double r = 0.0;
  for (const auto& m : modes_) r = std::max(r, m.norm());
  return r;
}

Eigen::VectorXd ModeGrid::component(int j) const {
  if (j < 0 || j >= dimension()) throw std::out_of_range("momentum component out of range");
  Eigen::VectorXd v(size());
  for (std::size_t i = 0; i < size(); ++i) v[i] = modes_[i].k[j];
  return v;
}

Eigen::VectorXd ModeGrid::omegas() const {
  Eigen::VectorXd v(size());
  for (std::size_t i = 0; i < size(); ++i) v[i] = modes_[i].omega;
  return v;
}

Eigen::VectorXd ModeGrid::weights() const {
  Eigen::VectorXd v(size());
  for (std::size_t i = 0; i < size(); ++i) v[i] = modes_[i].weight;
  return v;
}

void CutoffWindow::validate(double extent) const {
  if (!(kappa >= 0.0)) throw std::invalid_argument("kappa must be nonnegative");
  if (!(kappa < Lambda))
    throw std::invalid_argument("cutoff window violates kappa < Lambda (kappa = " +
                                std::to_string(kappa) + ", Lambda = " + std::to_string(Lambda) +
                                ")");
  if (!(kappa < K_gross && K_gross < Lambda))
    throw std::invalid_argument("cutoff window violates kappa < K < Lambda");
  if (Lambda > extent * (1.0 + 1e-12))
    throw std::invalid_argument("cutoff window violates Lambda <= extent");
}

ModeGrid build_grid(const GridSpec& spec) {
  spec.validate();
  const int d = spec.dimension;
  const int n = spec.points_per_axis;
  std::vector<Mode> modes;

  if (spec.layout == Layout::cartesian) {
    std::vector<double> axis(n);
    for (int i = 0; i < n; ++i)
      axis[i] = n == 1 ? 0.0 : -spec.extent + 2.0 * spec.extent * i / (n - 1);
    const double cell = std::pow(2.0 * spec.extent / n, d);
    const double limit2 = spec.extent * spec.extent * (1.0 + kShellTol);

    std::vector<int> idx(d, 0);
    while (true) {
      Mode m;
      m.k.resize(d);
      for (int j = 0; j < d; ++j) m.k[j] = axis[idx[j]];
      if (m.norm2() <= limit2) {
        m.weight = cell;
        modes.push_back(std::move(m));
      }
      int j = d - 1;
      while (j >= 0 && ++idx[j] == n) idx[j--] = 0;
      if (j < 0) break;
    }
  } else {
    const double dr = spec.extent / n;
    for (int s = 0; s < n; ++s) {
      const double r_in = s * dr;
      const double r_out = (s + 1) * dr;
      const double r = (s + 0.5) * dr;
      const double directions = 2.0 * d;
      const double shell = d == 3 ? 4.0 * kPi / 3.0 * (std::pow(r_out, 3) - std::pow(r_in, 3))
                                  : 2.0 * (r_out - r_in);
      for (int j = 0; j < d; ++j) {
        for (double sign : {-1.0, 1.0}) {
          Mode m;
          m.k.assign(d, 0.0);
          m.k[j] = sign * r;
          m.weight = shell / directions;
          modes.push_back(std::move(m));
        }
      }
    }
  }

  for (auto& m : modes) m.omega = dispersion(m.k, spec.mass);
  std::sort(modes.begin(), modes.end(), [](const Mode& a, const Mode& b) {
    const double na = a.norm2();
    const double nb = b.norm2();
    if (std::abs(na - nb) > kShellTol * std::max(1.0, std::max(na, nb))) return na < nb;
    return a.k < b.k;
  });
  for (std::size_t i = 0; i < modes.size(); ++i) modes[i].index = static_cast<int>(i);
  return ModeGrid(spec, std::move(modes));
}

double dispersion(std::span<const double> k, double m) {
  if (!(m > 0.0)) throw std::invalid_argument("dispersion requires m > 0");
  double s = m * m;
  for (double c : k) s += c * c;
  return std::sqrt(s);
}

Mask cutoff_mask(const ModeGrid& grid, double radius) {
  Mask mask(grid.size());
  const double r2 = radius * radius * (1.0 + kShellTol);
  for (std::size_t i = 0; i < grid.size(); ++i) mask[i] = grid[i].norm2() <= r2;
  return mask;
}

Mask shell_mask(const ModeGrid& grid, double lo, double hi) {
  return mask_and_not(cutoff_mask(grid, hi), cutoff_mask(grid, lo));
}

Mask mask_and(const Mask& a, const Mask& b) {
  if (a.size() != b.size()) throw std::invalid_argument("mask length mismatch");
  Mask out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] && b[i];
  return out;
}

Mask mask_and_not(const Mask& a, const Mask& b) {
  if (a.size() != b.size()) throw std::invalid_argument("mask length mismatch");
  Mask out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] && !b[i];
  return out;
}

std::size_t mask_count(const Mask& m) { return static_cast<std::size_t>(std::count(m.begin(), m.end(), true)); }

Eigen::VectorXd coupling_amplitudes(const ModeGrid& grid, double g, const Mask& mask) {
  if (mask.size() != grid.size()) throw std::invalid_argument("mask length mismatch");
  Eigen::VectorXd f = Eigen::VectorXd::Zero(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i)
    if (mask[i]) f[i] = g * std::sqrt(grid[i].weight) / std::sqrt(grid[i].omega);
  return f;
}

double renormalization_sum(const ModeGrid& grid, double g, const Mask& mask) {
  double s = 0.0;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (!mask[i]) continue;
    const auto& m = grid[i];
    s += m.weight / (m.omega * (m.omega + 0.5 * m.norm2()));
  }
  return -g * g * s;
}

double renormalization_constant_radial(int dimension, double g, double m, double Lambda) {
  if (Lambda < 0.0) throw std::invalid_argument("renormalization requires Lambda >= 0");
  if (!(m > 0.0)) throw std::invalid_argument("renormalization requires m > 0");
  const auto integrand = [&](double r) {
    const double w = std::sqrt(r * r + m * m);
    const double jac = dimension == 3 ? r * r : 1.0;
    return jac / (w * (w + 0.5 * r * r));
  };
  return -g * g * angular_factor(dimension) * integrate(integrand, 0.0, Lambda);
}

double renormalization_constant(const ModeGrid& grid, double g, double Lambda,
                                EnergyScheme scheme) {
  if (Lambda < 0.0) throw std::invalid_argument("renormalization requires Lambda >= 0");
  if (scheme == EnergyScheme::grid_sum)
    return renormalization_sum(grid, g, cutoff_mask(grid, Lambda));
  return renormalization_constant_radial(grid.dimension(), g, grid.mass(), Lambda);
}

WindowConstant window_constant(int dimension, double K, double m) {
  if (!(K > 0.0)) throw std::invalid_argument("window constant requires K > 0");
  if (!(m > 0.0)) throw std::invalid_argument("window constant requires m > 0");
  if (dimension != 1 && dimension != 3) throw std::invalid_argument("dimension must be 1 or 3");

  // Substituting r = 1/u maps [K, R] to [1/R, 1/K] with a bounded integrand.
  const auto integrand_u = [&](double u) {
    const double den = 1.0 + 2.0 * u * std::sqrt(1.0 + m * m * u * u);
    return dimension == 3 ? 4.0 / (den * den) : 4.0 * u * u / (den * den);
  };
  // The integrand is bounded by 4/r^2 (3d) or 4/r^4 (1d) per unit angular measure.
  const auto tail = [&](double R) {
    return dimension == 3 ? 16.0 * kPi / R : 8.0 / (3.0 * R * R * R);
  };

  const double factor = angular_factor(dimension);
  const double head = factor * integrate(integrand_u, 1.0 / std::max(4.0 * K, 16.0), 1.0 / K);
  double R = std::max(4.0 * K, 16.0);
  while (tail(R) >= 1e-9 * head) R *= 4.0;

  WindowConstant c;
  c.squared = factor * integrate(integrand_u, 1.0 / R, 1.0 / K);
  c.value = std::sqrt(c.squared);
  c.cut_radius = R;
  c.tail_bound = tail(R);
  c.form_constant = 2.0 * dimension * (c.value + c.squared);
  c.small = c.form_constant < 1.0;
  return c;
}

WindowConstant window_constant_grid(const ModeGrid& grid, double K) {
  if (!(K > 0.0)) throw std::invalid_argument("window constant requires K > 0");
  const Mask outside = mask_and_not(Mask(grid.size(), true), cutoff_mask(grid, K));
  double s = 0.0;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (!outside[i]) continue;
    const double den = grid[i].omega + 0.5 * grid[i].norm2();
    s += grid[i].weight / (den * den);
  }
  WindowConstant c;
  c.squared = s;
  c.value = std::sqrt(s);
  c.cut_radius = grid.max_norm();
  c.form_constant = 2.0 * grid.dimension() * (c.value + c.squared);
  c.small = c.form_constant < 1.0;
  return c;
}

Eigen::VectorXd gross_amplitudes(const ModeGrid& grid, double g, const CutoffWindow& window) {
  const Mask active = mask_and_not(shell_mask(grid, window.kappa, window.Lambda),
                                   cutoff_mask(grid, window.K_gross));
  Eigen::VectorXd G = Eigen::VectorXd::Zero(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (!active[i]) continue;
    const auto& m = grid[i];
    G[i] = std::sqrt(m.weight) * g / (std::sqrt(m.omega) * (m.omega + 0.5 * m.norm2()));
  }
  return G;
}

}  // namespace nelson
