#include "nelson/experiment.hpp"
#include "nelson/gross.hpp"

#include <chrono>
#include <cstdio>
#include <functional>
#include <random>
#include <sstream>

using namespace nelson;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

const fs::path kConfigs = NELSON_CONFIG_DIR;

struct Outcome {
  bool pass = false;
  std::string detail;
};

double seconds_since(Clock::time_point t) {
  return std::chrono::duration<double>(Clock::now() - t).count();
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

const CheckRecord& record(const RunReport& r, const std::string& name) {
  for (const auto& c : r.checks)
    if (c.name == name) return c;
  throw std::runtime_error("report has no check named " + name);
}

ExperimentConfig identity_config() { return load_config(kConfigs / "identity_1d.json"); }
ExperimentConfig shadow_config() { return load_config(kConfigs / "shadow_3d.json"); }

std::vector<double> along_first_axis(int dimension, double p) {
  std::vector<double> P(dimension, 0.0);
  P[0] = p;
  return P;
}

Outcome exact_identities() {
  const auto t0 = Clock::now();
  const RunReport r = run(identity_config());
  const double elapsed = seconds_since(t0);
  const std::vector<std::pair<std::string, double>> limits{
      {"fock.ccr_sector", 1e-12},          {"fock.adjointness", 1e-14},
      {"fock.gamma_exp", 1e-10},           {"hamiltonian.decomposition", 1e-10},
      {"key_inequality", 1e-8},            {"positivity.semigroup_property", 1e-10}};
  Outcome o{elapsed < 10.0, ""};
  for (const auto& [name, limit] : limits) {
    const double v = record(r, name).measured.at("residual").get<double>();
    o.pass = o.pass && v < limit;
    o.detail += name + "=" + fmt(v) + " ";
  }
  o.detail += "runtime=" + fmt(elapsed) + "s";
  return o;
}

Outcome fiber_improving() {
  const auto t0 = Clock::now();
  Outcome o{true, ""};
  int cases = 0;
  double worst_min = 1e300, worst_gap = 1e300;
  for (const ExperimentConfig& base : {identity_config(), shadow_config()}) {
    const ModeGrid grid = build_grid(base.grid);
    const FactorizationMap split(grid, base.n_max, base.params.window.kappa);
    for (double p : {0.0, 0.3, 1.0}) {
      NelsonParams params = base.params;
      params.P = along_first_axis(grid.dimension(), p);
      const HamiltonianBundle b = build_bundle(split, grid, params);
      const SpectralReport pf = perron_frobenius(b.h_ren, {0.5, 1.0, 2.0}, base.tolerances);
      for (bool imp : pf.improving) o.pass = o.pass && imp;
      o.pass = o.pass && pf.gap > 1e-8 * pf.spectral_radius && pf.strictly_positive_ground &&
               !pf.degenerate;
      for (double m : pf.semigroup_min_entries) worst_min = std::min(worst_min, m);
      worst_gap = std::min(worst_gap, pf.gap / pf.spectral_radius);
      ++cases;
    }
  }
  const double elapsed = seconds_since(t0);
  o.pass = o.pass && elapsed < 60.0;
  o.detail = std::to_string(cases) + " configs x 3 beta; min semigroup entry=" + fmt(worst_min) +
             " min gap/radius=" + fmt(worst_gap) + " runtime=" + fmt(elapsed) + "s";
  return o;
}

Outcome operator_bounds() {
  Outcome o{true, ""};
  double number = 1e300, anti = 1e300, sharp = 1e300, hove = 1e300;
  for (const ExperimentConfig& c : {identity_config(), shadow_config()}) {
    const ModeGrid grid = build_grid(c.grid);
    const OccupationBasis basis(static_cast<int>(grid.size()), c.n_max);
    std::mt19937_64 rng(c.seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int s = 0; s < 20; ++s) {
      Eigen::VectorXd f(static_cast<Eigen::Index>(grid.size()));
      for (auto& x : f) x = u(rng);
      const OperatorBoundsReport r = operator_bounds_suite(basis, grid.omegas(), f);
      o.pass = o.pass && r.holds(1e-10);
      number = std::min(number, r.number_bound_min);
      anti = std::min(anti, r.antinumber_bound_min);
      sharp = std::min(sharp, r.antinumber_sharp_min);
      hove = std::min({hove, r.van_hove_plus_min, r.van_hove_minus_min});
    }
  }
  o.detail = "min lambda: a*a=" + fmt(number) + " aa*=" + fmt(anti) + " van_hove=" + fmt(hove) +
             "; aa* <= c dGamma + |f|^2 gives " + fmt(sharp);
  if (!o.pass)
    o.detail += "; the unit form of aa* fails on the vacuum, where <aa*> = |f|^2 > "
                "|omega^{-1/2} f|^2 once omega > 1 on supp f";
  return o;
}

Outcome duhamel_positivity() {
  Outcome o{true, ""};
  double floor = 1e300, slack = 1e300;
  for (const ExperimentConfig& c : {identity_config(), shadow_config()}) {
    const ModeGrid grid = build_grid(c.grid);
    const OccupationBasis basis(static_cast<int>(grid.size()), c.n_max);
    const FockOperator h = assemble_fiber_hamiltonian(basis, grid, c.params);
    const Eigen::MatrixXd phi =
        field_operator(basis, coupling_amplitudes(grid, c.params.g, cutoff_mask(grid, c.params.window.Lambda)))
            .dense();
    for (double beta : c.beta_list) {
      const DuhamelReport d = duhamel(h.dense() + phi, -phi, beta, 6, 32);
      for (double m : d.term_min_entries) {
        o.pass = o.pass && m >= -c.tolerances.quadrature;
        floor = std::min(floor, m);
      }
      o.pass = o.pass && d.within_remainder_bound;
      slack = std::min(slack, d.remainder_bound - d.partial_sum_residuals.back());
    }
  }
  o.detail = "N=6, 32/64 points; min term entry=" + fmt(floor) +
             " min(remainder bound - residual)=" + fmt(slack);
  return o;
}

Outcome ergodicity() {
  Outcome o{true, ""};
  int total = 0, found = 0, bounds = 0;
  for (const ExperimentConfig& c : {identity_config(), shadow_config()}) {
    const ModeGrid grid = build_grid(c.grid);
    const OccupationBasis basis(static_cast<int>(grid.size()), c.n_max);
    const Eigen::VectorXd f = coupling_amplitudes(grid, 1.0, Mask(grid.size(), true));
    std::mt19937_64 rng(c.seed + 1);
    std::uniform_int_distribution<int> sector(0, c.n_max);
    std::uniform_real_distribution<double> u(0.1, 1.0);
    for (int s = 0; s < 10; ++s) {
      const int p = sector(rng), q = sector(rng);
      Eigen::VectorXd x = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(basis.size())), y = x;
      for (std::size_t i = basis.sector_offset(p); i < basis.sector_offset(p + 1); ++i) x[i] = u(rng);
      for (std::size_t i = basis.sector_offset(q); i < basis.sector_offset(q + 1); ++i) y[i] = u(rng);
      const ErgodicityResult e = ergodicity_probe(basis, f, x, y, p + q);
      ++total;
      found += e.found && e.power <= p + q;
      bounds += e.bound_holds;
    }
  }
  o.pass = found == total && bounds == total;
  o.detail = "pairs=" + std::to_string(total) + " found=" + std::to_string(found) +
             " bound_holds=" + std::to_string(bounds);
  return o;
}

Outcome regularized_limit() {
  const ExperimentConfig c = identity_config();
  const ModeGrid grid = build_grid(c.grid);
  const FactorizationMap split(grid, c.n_max, c.params.window.kappa);
  const HamiltonianBundle b = build_bundle(split, grid, c.params);
  Outcome o{true, "distances"};
  for (double beta : c.beta_list) {
    const RegularizedLimitReport r = regularized_limit_probe(split, b, c.params.P, beta, {1, 2, 4, 8, 16});
    o.pass = o.pass && r.nonincreasing && r.saturated_distance < 1e-9;
    o.detail += " beta=" + fmt(beta) + ":";
    for (double d : r.distances) o.detail += " " + fmt(d);
    o.detail += " (saturation n=" + std::to_string(r.saturation) + ")";
  }
  return o;
}

Outcome renormalization_trend() {
  const ExperimentConfig c = load_config(kConfigs / "lambda_sweep.json");
  const SweepResult s = sweep(c, 1);
  auto trend = [&](const std::string& name) -> const CheckRecord& {
    for (const auto& r : s.trend_checks)
      if (r.name == name) return r;
    throw std::runtime_error("missing trend check " + name);
  };
  const CheckRecord& decreasing = trend("trend.inf_spec_h_lambda_decreasing");
  const CheckRecord& spread = trend("trend.renormalized_spread");
  const CheckRecord& band = trend("trend.tail_band");
  Outcome o{s.trends.size() >= 5 && decreasing.pass && spread.pass && band.pass, ""};
  o.detail = "points=" + std::to_string(s.trends.size()) +
             " strictly_decreasing=" + (decreasing.pass ? "yes" : "no") +
             " spread ratio=" + fmt(spread.measured.at("ratio").get<double>()) +
             " tail band/|E_window|=" +
             fmt(band.measured.at("band_width").get<double>() /
                 band.measured.at("abs_e_window_largest").get<double>());
  return o;
}

Outcome gross_suite() {
  Outcome o{true, ""};
  for (const ExperimentConfig& c : {identity_config(), shadow_config()}) {
    const ModeGrid grid = build_grid(c.grid);
    const FactorizationMap split(grid, c.n_max, c.params.window.kappa);
    const GrossBundle g = gross_transform(split, grid, c.params);
    o.pass = o.pass && g.unitarity_residual < 1e-10 && g.spectral_deviation < 1e-8 &&
             g.commutator_residual < 1e-10;
    const FormBoundReport f = form_bound_check(split, grid, c.params, c.form_epsilon, c.form_samples, c.seed);
    o.detail += "d=" + std::to_string(grid.dimension()) + ": unitarity=" + fmt(g.unitarity_residual) +
                " spectral=" + fmt(g.spectral_deviation) + " commutator=" + fmt(g.commutator_residual) +
                " form ratio=" + fmt(f.worst_ratio) + " C(K)=" + fmt(f.c_of_K) +
                " small=" + (f.smallness ? "yes" : "no") + "; ";
  }
  return o;
}

Outcome negative_controls() {
  Outcome o{true, ""};
  for (ExperimentConfig c : {identity_config(), shadow_config()}) {
    c.params.g = 0.0;
    const RunReport r = run(c);
    for (const char* name : {"positivity.fiber_improving", "positivity.perron_frobenius"}) {
      const CheckRecord& rec = record(r, name);
      o.pass = o.pass && rec.expected_negative && rec.pass;
      o.detail += std::string(name) + "[d=" + std::to_string(c.grid.dimension) + "]=" +
                  (rec.expected_negative && rec.pass ? "expected-negative " : "unexpected ");
    }
    o.pass = o.pass && r.pass;
  }
  return o;
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"AC1 exact identities", exact_identities},
      {"AC2 fiber improving", fiber_improving},
      {"AC3 operator bounds", operator_bounds},
      {"AC4 Duhamel positivity", duhamel_positivity},
      {"AC5 ergodicity", ergodicity},
      {"AC6 regularized limit", regularized_limit},
      {"AC7 renormalization trend", renormalization_trend},
      {"AC8 Gross suite", gross_suite},
      {"AC9 negative controls", negative_controls}};
  int failures = 0;
  for (const auto& [name, check] : criteria) {
    Outcome o;
    try {
      o = check();
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what()};
    }
    failures += !o.pass;
    std::printf("%-28s %s  %s\n", name.c_str(), o.pass ? "PASS" : "FAIL", o.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failures, criteria.size());
  return failures == 0 ? 0 : 1;
}
