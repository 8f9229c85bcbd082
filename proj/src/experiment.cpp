#include "nelson/experiment.hpp"

#include "nelson/gross.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <fstream>
#include <iomanip>
#include <limits>
#include <mutex>
#include <random>
#include <sstream>
#include <stdexcept>
#include <thread>

namespace nelson {

using nlohmann::json;

namespace {

const std::vector<std::string> kSweepVariables{"Lambda", "n_max", "kappa", "refinement"};

CheckRecord named(std::string name) {
  CheckRecord r;
  r.name = std::move(name);
  return r;
}

template <class T>
T value_or(const json& j, const char* key, T fallback) {
  return j.contains(key) ? j.at(key).get<T>() : fallback;
}

double binomial(int n, int k) {
  double r = 1.0;
  for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

class Stopwatch {
 public:
  explicit Stopwatch(std::map<std::string, double>& sink) : sink_(sink) {}
  void lap(const std::string& phase) {
    const auto now = std::chrono::steady_clock::now();
    sink_[phase] += std::chrono::duration<double>(now - last_).count();
    last_ = now;
  }

 private:
  std::map<std::string, double>& sink_;
  std::chrono::steady_clock::time_point last_ = std::chrono::steady_clock::now();
};

Eigen::VectorXd random_nonnegative(std::mt19937_64& rng, Eigen::Index n) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Eigen::VectorXd v(n);
  for (Eigen::Index i = 0; i < n; ++i) v[i] = u(rng);
  return v;
}

// 1/2 (P - P_f)^2 as a diagonal.
Eigen::VectorXd kinetic_diagonal(const OccupationBasis& basis, const ModeGrid& grid,
                                 const std::vector<double>& P) {
  Eigen::VectorXd d = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(basis.size()));
  for (int j = 0; j < grid.dimension(); ++j) {
    const Eigen::VectorXd pf = dgamma_diagonal(basis, grid.component(j));
    d += 0.5 * (P[j] - pf.array()).square().matrix();
  }
  return d;
}

// Runs `body` and converts an exception into a failed record.
template <class F>
void guarded(std::vector<CheckRecord>& out, const std::string& name, F&& body) {
  try {
    body();
  } catch (const std::exception& e) {
    CheckRecord r;
    r.name = name;
    r.measured = {{"error", e.what()}};
    r.pass = false;
    out.push_back(r);
  }
}

}  // namespace

void ExperimentConfig::validate() const {
  grid.validate();
  if (n_max < 1) throw std::invalid_argument("n_max must be at least 1");
  if (beta_list.empty()) throw std::invalid_argument("beta_list must be nonempty");
  for (double b : beta_list)
    if (!(b > 0.0)) throw std::invalid_argument("beta_list entries must be positive");
  if (!(tolerances.entrywise > 0.0 && tolerances.positivity > 0.0 &&
        tolerances.spectral_gap > 0.0 && tolerances.quadrature > 0.0))
    throw std::invalid_argument("all tolerances must be positive");
  if (!(tol_scale > 0.0)) throw std::invalid_argument("tol_scale must be positive");
  if (duhamel_order < 0 || duhamel_points < 2)
    throw std::invalid_argument("Duhamel needs order >= 0 and at least 2 quadrature points");
  if (ergodicity_pairs < 0 || bound_samples < 0 || form_samples < 1)
    throw std::invalid_argument("sample counts must be nonnegative (form_samples >= 1)");
  if (!(form_epsilon > 0.0)) throw std::invalid_argument("form_epsilon must be positive");
  for (std::size_t i = 0; i < regularization_n.size(); ++i) {
    if (regularization_n[i] < 1) throw std::invalid_argument("regularization n must be >= 1");
    if (i > 0 && regularization_n[i] <= regularization_n[i - 1])
      throw std::invalid_argument("regularization n list must be strictly increasing");
  }
  if (params.P.size() != static_cast<std::size_t>(grid.dimension))
    throw std::invalid_argument("total momentum P must have one component per dimension");
  if (params.m != grid.mass) throw std::invalid_argument("params.m must equal grid.mass");
  params.window.validate(grid.extent);
  if (sweep) {
    if (std::find(kSweepVariables.begin(), kSweepVariables.end(), sweep->variable) ==
        kSweepVariables.end())
      throw std::invalid_argument("unknown sweep variable '" + sweep->variable + "'");
    if (sweep->values.empty()) throw std::invalid_argument("sweep values must be nonempty");
    for (std::size_t i = 1; i < sweep->values.size(); ++i)
      if (!(sweep->values[i] > sweep->values[i - 1]))
        throw std::invalid_argument("sweep values must be strictly increasing");
  }
}

ExperimentConfig config_from_json(const json& j) {
  ExperimentConfig c;
  const json& g = j.at("grid");
  c.grid.dimension = value_or(g, "dimension", c.grid.dimension);
  c.grid.extent = value_or(g, "extent", c.grid.extent);
  c.grid.points_per_axis = value_or(g, "points_per_axis", c.grid.points_per_axis);
  c.grid.mass = value_or(g, "mass", c.grid.mass);
  if (g.contains("layout")) c.grid.layout = parse_layout(g.at("layout").get<std::string>());

  const json& p = j.at("params");
  c.params.g = value_or(p, "g", c.params.g);
  c.params.m = value_or(p, "m", c.grid.mass);
  c.params.P = value_or(p, "P", std::vector<double>(c.grid.dimension, 0.0));
  c.params.window.kappa = p.at("kappa").get<double>();
  c.params.window.Lambda = p.at("Lambda").get<double>();
  c.params.window.K_gross =
      value_or(p, "K_gross", 0.5 * (c.params.window.kappa + c.params.window.Lambda));
  if (p.contains("e_scheme"))
    c.params.e_scheme = parse_energy_scheme(p.at("e_scheme").get<std::string>());

  c.n_max = value_or(j, "n_max", c.n_max);
  c.beta_list = value_or(j, "beta_list", c.beta_list);
  if (j.contains("sweep") && !j.at("sweep").is_null()) {
    const json& s = j.at("sweep");
    c.sweep = SweepSpec{s.at("variable").get<std::string>(),
                        s.at("values").get<std::vector<double>>()};
  }
  if (j.contains("tolerances")) {
    const json& t = j.at("tolerances");
    c.tolerances.entrywise = value_or(t, "entrywise", c.tolerances.entrywise);
    c.tolerances.positivity = value_or(t, "positivity", c.tolerances.positivity);
    c.tolerances.spectral_gap = value_or(t, "spectral_gap", c.tolerances.spectral_gap);
    c.tolerances.quadrature = value_or(t, "quadrature", c.tolerances.quadrature);
  }
  c.seed = value_or(j, "seed", c.seed);
  c.output_dir = value_or(j, "output_dir", c.output_dir);
  c.tol_scale = value_or(j, "tol_scale", c.tol_scale);
  if (j.contains("checks")) {
    const json& k = j.at("checks");
    c.duhamel_order = value_or(k, "duhamel_order", c.duhamel_order);
    c.duhamel_points = value_or(k, "duhamel_points", c.duhamel_points);
    c.ergodicity_pairs = value_or(k, "ergodicity_pairs", c.ergodicity_pairs);
    c.bound_samples = value_or(k, "bound_samples", c.bound_samples);
    c.form_samples = value_or(k, "form_samples", c.form_samples);
    c.form_epsilon = value_or(k, "form_epsilon", c.form_epsilon);
    c.regularization_n = value_or(k, "regularization_n", c.regularization_n);
  }
  return c;
}

json config_to_json(const ExperimentConfig& c) {
  json j;
  j["grid"] = {{"dimension", c.grid.dimension},
               {"extent", c.grid.extent},
               {"points_per_axis", c.grid.points_per_axis},
               {"mass", c.grid.mass},
               {"layout", to_string(c.grid.layout)}};
  j["params"] = {{"g", c.params.g},
                 {"m", c.params.m},
                 {"P", c.params.P},
                 {"kappa", c.params.window.kappa},
                 {"Lambda", c.params.window.Lambda},
                 {"K_gross", c.params.window.K_gross},
                 {"e_scheme", to_string(c.params.e_scheme)}};
  j["n_max"] = c.n_max;
  j["beta_list"] = c.beta_list;
  j["sweep"] = c.sweep ? json{{"variable", c.sweep->variable}, {"values", c.sweep->values}}
                       : json(nullptr);
  j["tolerances"] = {{"entrywise", c.tolerances.entrywise},
                     {"positivity", c.tolerances.positivity},
                     {"spectral_gap", c.tolerances.spectral_gap},
                     {"quadrature", c.tolerances.quadrature}};
  j["seed"] = c.seed;
  j["output_dir"] = c.output_dir;
  j["tol_scale"] = c.tol_scale;
  j["checks"] = {{"duhamel_order", c.duhamel_order},
                 {"duhamel_points", c.duhamel_points},
                 {"ergodicity_pairs", c.ergodicity_pairs},
                 {"bound_samples", c.bound_samples},
                 {"form_samples", c.form_samples},
                 {"form_epsilon", c.form_epsilon},
                 {"regularization_n", c.regularization_n}};
  return j;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw std::runtime_error("corrupt config file " + path.string() + ": " + e.what());
  }
  ExperimentConfig c;
  try {
    c = config_from_json(j);
  } catch (const json::exception& e) {
    throw std::runtime_error("invalid config " + path.string() + ": " + e.what());
  }
  c.validate();
  return c;
}

json to_json(const CheckRecord& r) {
  return {{"name", r.name},
          {"parameters", r.parameters.is_null() ? json::object() : r.parameters},
          {"measured", r.measured.is_null() ? json::object() : r.measured},
          {"pass", r.pass},
          {"tolerance", r.tolerance},
          {"fatal", r.fatal},
          {"expected_negative", r.expected_negative}};
}

std::vector<std::string> RunReport::failed_checks() const {
  std::vector<std::string> out;
  for (const auto& c : checks)
    if (c.fatal && !c.pass) out.push_back(c.name);
  return out;
}

json to_json(const RunReport& r) {
  json checks = json::array();
  for (const auto& c : r.checks) checks.push_back(to_json(c));
  return {{"kind", "run"},
          {"config", r.config},
          {"basis_dimension", r.basis_dimension},
          {"checks", checks},
          {"summary", r.summary},
          {"pass", r.pass},
          {"failures", r.failed_checks()},
          {"volatile", {"timing"}},
          {"timing", r.timing}};
}

RunReport run(const ExperimentConfig& config) {
  config.validate();
  RunReport rep;
  rep.config = config_to_json(config);
  auto& out = rep.checks;
  Stopwatch clock(rep.timing);
  const Tolerances& tol = config.tolerances;
  const double ts = config.tol_scale;
  const NelsonParams& params = config.params;
  const double beta0 = config.beta_list.front();
  std::mt19937_64 rng(config.seed);

  // --- grid -----------------------------------------------------------------
  const ModeGrid grid = build_grid(config.grid);
  params.validate(grid);
  const int M = static_cast<int>(grid.size());
  {
    const int d = grid.dimension();
    const double E = grid.spec().extent;
    const double ball = d == 1 ? 2.0 * E : 4.0 / 3.0 * M_PI * E * E * E;
    const double total = grid.weights().sum();
    CheckRecord r = named("grid.weights");
    r.parameters = {{"layout", to_string(config.grid.layout)}};
    r.measured = {{"modes", M}, {"weight_sum", total}, {"ball_volume", ball},
                  {"relative_deviation", std::abs(total - ball) / ball}};
    r.tolerance = tol.quadrature * ts;
    r.pass = std::abs(total - ball) / ball < r.tolerance;
    r.fatal = false;  // cartesian cells only converge under refinement
    out.push_back(r);
  }
  clock.lap("grid");

  // --- basis ----------------------------------------------------------------
  const OccupationBasis basis(M, config.n_max);
  rep.basis_dimension = basis.size();
  {
    CheckRecord r = named("basis.count");
    r.parameters = {{"modes", M}, {"n_max", config.n_max}};
    const double expected = binomial(M + config.n_max, M);
    r.measured = {{"size", basis.size()}, {"binomial", expected}};
    r.pass = static_cast<double>(basis.size()) == expected;
    out.push_back(r);
  }
  clock.lap("basis");

  // --- operator identities --------------------------------------------------
  guarded(out, "fock.ccr_sector", [&] {
    // [a_i, a_j^dagger] = delta_ij on columns below the top sector.
    const auto guarded_cols = static_cast<Eigen::Index>(basis.sector_offset(config.n_max));
    double worst = 0.0;
    std::vector<Eigen::MatrixXd> a(M), ad(M);
    for (int i = 0; i < M; ++i) {
      const Eigen::VectorXd e = Eigen::VectorXd::Unit(M, i);
      a[i] = annihilation_operator(basis, e).dense();
      ad[i] = creation_operator(basis, e).dense();
    }
    for (int i = 0; i < M; ++i)
      for (int j = 0; j < M; ++j) {
        Eigen::MatrixXd c = a[i] * ad[j] - ad[j] * a[i];
        if (i == j) c -= Eigen::MatrixXd::Identity(c.rows(), c.cols());
        if (guarded_cols > 0) worst = std::max(worst, c.leftCols(guarded_cols).cwiseAbs().maxCoeff());
      }
    CheckRecord r = named("fock.ccr_sector");
    r.measured = {{"residual", worst}};
    r.tolerance = 1e-12 * ts;
    r.pass = worst < r.tolerance;
    out.push_back(r);
  });
  guarded(out, "fock.adjointness", [&] {
    double worst = 0.0;
    for (int s = 0; s < std::max(1, config.bound_samples); ++s) {
      const Eigen::VectorXd f = random_nonnegative(rng, M);
      worst = std::max(worst, max_abs_difference(annihilation_operator(basis, f),
                                                 transpose(creation_operator(basis, f))));
    }
    CheckRecord r = named("fock.adjointness");
    r.parameters = {{"samples", std::max(1, config.bound_samples)}};
    r.measured = {{"residual", worst}};
    r.tolerance = 1e-14 * ts;
    r.pass = worst < r.tolerance;
    out.push_back(r);
  });
  guarded(out, "fock.gamma_exp", [&] {
    const Eigen::VectorXd omega = grid.omegas();
    const Semigroup field(dgamma(basis, omega));
    double worst = 0.0;
    for (double t : config.beta_list) {
      const Eigen::VectorXd c = (-t * omega.array()).exp();
      worst = std::max(worst, (gamma_diagonal(basis, c).dense() - field.at(t)).cwiseAbs().maxCoeff());
    }
    CheckRecord r = named("fock.gamma_exp");
    r.parameters = {{"t", config.beta_list}};
    r.measured = {{"residual", worst}};
    r.tolerance = 1e-10 * ts;
    r.pass = worst < r.tolerance;
    out.push_back(r);
  });
  clock.lap("fock");

  // --- factorization --------------------------------------------------------
  const FactorizationMap split(grid, config.n_max, params.window.kappa);
  {
    CheckRecord r = named("factorization.pairing");
    bool ok = split.size() == basis.size();
    for (std::size_t c = 0; ok && c < split.size(); ++c) {
      const auto [lo, hi] = split.pair_of(c);
      const auto back = split.composite_of(lo, hi);
      ok = back && *back == c &&
           split.low_basis().total(lo) + split.high_basis().total(hi) == basis.total(c);
    }
    r.parameters = {{"kappa", params.window.kappa}};
    r.measured = {{"low_modes", split.low_modes().size()},
                  {"high_modes", split.high_modes().size()},
                  {"composite", split.size()}};
    r.pass = ok;
    out.push_back(r);
  }
  {
    Eigen::VectorXd chi(M);
    for (int i = 0; i < M; ++i) chi[i] = grid[i].norm() <= params.window.kappa * (1 + 1e-12) ? 1.0 : 0.0;
    const FockOperator q = split.q_projection();
    const double residual = max_abs_difference(q, gamma_diagonal(basis, chi));
    const double idempotent = max_abs_difference(multiply(q, q), q);
    CheckRecord r = named("factorization.q_projection");
    r.measured = {{"gamma_residual", residual}, {"idempotency_residual", idempotent}};
    r.tolerance = 1e-14 * ts;
    r.pass = residual < r.tolerance && idempotent < r.tolerance;
    out.push_back(r);
  }
  clock.lap("factorization");

  // --- Hamiltonians ---------------------------------------------------------
  const HamiltonianBundle bundle = build_bundle(split, grid, params);
  {
    CheckRecord r = named("hamiltonian.hermiticity");
    const double h = bundle.h_full.hermiticity_residual();
    const double l = bundle.h_local.hermiticity_residual();
    const double k = bundle.k_tail.hermiticity_residual();
    r.measured = {{"h_full", h}, {"h_local", l}, {"k_tail", k}};
    r.tolerance = 1e-14 * ts;
    r.pass = std::max({h, l, k}) < r.tolerance;
    out.push_back(r);
  }
  {
    const DecompositionResidual d = decomposition_residual(bundle, split);
    CheckRecord r = named("hamiltonian.decomposition");
    r.parameters = {{"kappa", params.window.kappa}, {"Lambda", params.window.Lambda},
                    {"e_scheme", to_string(bundle.h_ren_scheme)}};
    r.measured = {{"residual", d.residual}, {"scheme_consistent", d.scheme_consistent}};
    r.tolerance = 1e-10 * ts;
    r.pass = d.residual < r.tolerance;
    out.push_back(r);
  }
  const double e_radial = renormalization_constant_radial(grid.dimension(), params.g,
                                                          params.m, params.window.Lambda);
  {
    CheckRecord r = named("hamiltonian.energy_schemes");
    const double diff = std::abs(bundle.e_lambda_grid - e_radial);
    const double rel = e_radial != 0.0 ? diff / std::abs(e_radial) : diff;
    r.measured = {{"e_lambda_grid", bundle.e_lambda_grid}, {"e_lambda_radial", e_radial},
                  {"relative_difference", rel}};
    r.tolerance = tol.quadrature * ts;
    r.pass = rel < r.tolerance;
    r.fatal = false;  // discretization-sensitive
    out.push_back(r);
  }
  clock.lap("hamiltonian");

  // --- operator bounds ------------------------------------------------------
  guarded(out, "bounds.operator", [&] {
    const Eigen::VectorXd omega = grid.omegas();
    const double inf = std::numeric_limits<double>::infinity();
    double number = inf, anti = inf, sharp = inf, vplus = inf, vminus = inf;
    const int samples = std::max(1, config.bound_samples);
    for (int s = 0; s < samples; ++s) {
      const OperatorBoundsReport b = operator_bounds_suite(basis, omega, random_nonnegative(rng, M));
      number = std::min(number, b.number_bound_min);
      anti = std::min(anti, b.antinumber_bound_min);
      sharp = std::min(sharp, b.antinumber_sharp_min);
      vplus = std::min(vplus, b.van_hove_plus_min);
      vminus = std::min(vminus, b.van_hove_minus_min);
    }
    CheckRecord r = named("bounds.operator");
    r.parameters = {{"samples", samples}};
    r.measured = {{"number_min", number}, {"antinumber_sharp_min", sharp},
                  {"van_hove_plus_min", vplus}, {"van_hove_minus_min", vminus}};
    r.tolerance = 1e-10 * ts;
    r.pass = std::min({number, sharp, vplus, vminus}) >= -r.tolerance;
    out.push_back(r);
    // a a^dagger <= c (dGamma + 1) fails on the vacuum whenever omega > 1 on supp f:
    // <Omega| a a^dagger |Omega> = |f|^2 > |omega^{-1/2} f|^2. Reported, not enforced.
    CheckRecord lit = named("bounds.antinumber_unit_form");
    lit.parameters = {{"samples", samples}};
    lit.measured = {{"antinumber_min", anti}};
    lit.tolerance = r.tolerance;
    lit.pass = anti >= -lit.tolerance;
    lit.fatal = false;
    out.push_back(lit);
  });
  clock.lap("bounds");

  // --- positivity -----------------------------------------------------------
  const Semigroup s_ren(bundle.h_ren);
  const double lambda_full = Semigroup(bundle.h_full).eigenvalues()[0];
  const Eigen::VectorXd f_lambda =
      coupling_amplitudes(grid, params.g, cutoff_mask(grid, params.window.Lambda));
  const bool all_coupled = params.g > 0.0 && (f_lambda.array() > 0.0).all();
  const bool uncoupled = params.g == 0.0;
  {
    double worst = 0.0;
    for (double b1 : config.beta_list)
      for (double b2 : config.beta_list) {
        const Eigen::MatrixXd joint = s_ren.at(b1 + b2);
        const double scale = std::max(1.0, joint.cwiseAbs().maxCoeff());
        worst = std::max(worst, (s_ren.at(b1) * s_ren.at(b2) - joint).cwiseAbs().maxCoeff() / scale);
      }
    CheckRecord r = named("positivity.semigroup_property");
    r.parameters = {{"beta", config.beta_list}};
    r.measured = {{"residual", worst}};
    r.tolerance = 1e-10 * ts;
    r.pass = worst < r.tolerance;
    out.push_back(r);
  }
  {
    const Eigen::VectorXd field = dgamma_diagonal(basis, grid.omegas());
    const Eigen::VectorXd kinetic = kinetic_diagonal(basis, grid, params.P);
    double worst = 0.0;
    bool ok = true;
    const auto zero = Eigen::MatrixXd::Zero(basis.size(), basis.size());
    for (double b : config.beta_list) {
      for (const Eigen::VectorXd* d : {&field, &kinetic}) {
        const Eigen::MatrixXd s = (-b * d->array()).exp().matrix().asDiagonal();
        const ConeVerdict v = order_check(s, zero, tol.entrywise * ts);
        ok = ok && v.preserving;
        worst = std::max(worst, v.max_negative_violation);
      }
    }
    CheckRecord r = named("positivity.free_semigroups");
    r.measured = {{"max_negative_violation", worst}};
    r.tolerance = tol.entrywise * ts;
    r.pass = ok;
    out.push_back(r);
  }
  auto preserving_record = [&](const std::string& name, const FockOperator& h) {
    const Semigroup sg(h);
    double worst = 0.0;
    bool ok = true;
    for (double b : config.beta_list) {
      const Eigen::MatrixXd s = sg.at(b);
      const ConeVerdict v = order_check(s, Eigen::MatrixXd::Zero(s.rows(), s.cols()),
                                        tol.entrywise * ts);
      ok = ok && v.preserving;
      worst = std::max(worst, v.max_negative_violation / std::max(1e-300, s.cwiseAbs().maxCoeff()));
    }
    CheckRecord r = named(name);
    r.parameters = {{"beta", config.beta_list}};
    r.measured = {{"relative_negative_violation", worst}};
    r.tolerance = tol.entrywise * ts;
    r.pass = ok;
    out.push_back(r);
  };
  preserving_record("positivity.fiber_preserving", bundle.h_full);
  preserving_record("positivity.tail_preserving", bundle.k_tail);
  {
    const Semigroup sg(bundle.h_local);
    std::vector<bool> improving;
    std::vector<double> mins;
    for (double b : config.beta_list) {
      const ConeVerdict v = improving_check(sg.at(b), tol.positivity * ts);
      improving.push_back(v.improving);
      mins.push_back(v.min_entry);
    }
    const bool all = std::all_of(improving.begin(), improving.end(), [](bool x) { return x; });
    const bool any = std::any_of(improving.begin(), improving.end(), [](bool x) { return x; });
    CheckRecord r = named("positivity.local_improving");
    r.parameters = {{"beta", config.beta_list}, {"low_modes", split.low_modes().size()}};
    r.measured = {{"improving", improving}, {"min_entries", mins}};
    r.tolerance = tol.positivity * ts;
    r.expected_negative = uncoupled && split.low_basis().size() > 1;
    r.pass = r.expected_negative ? !any : all;
    out.push_back(r);
  }
  SpectralReport pf = perron_frobenius(bundle.h_ren, config.beta_list,
                                       Tolerances{tol.entrywise * ts, tol.positivity * ts,
                                                  tol.spectral_gap * ts, tol.quadrature * ts});
  {
    CheckRecord r = named("positivity.fiber_improving");
    r.parameters = {{"beta", config.beta_list}, {"P", params.P}, {"all_modes_coupled", all_coupled}};
    r.measured = {{"improving", pf.improving}, {"min_entries", pf.semigroup_min_entries}};
    r.tolerance = tol.positivity * ts;
    const bool all = std::all_of(pf.improving.begin(), pf.improving.end(), [](bool x) { return x; });
    const bool any = std::any_of(pf.improving.begin(), pf.improving.end(), [](bool x) { return x; });
    if (uncoupled) {
      r.expected_negative = true;
      r.pass = !any;
    } else {
      r.pass = all;
      r.fatal = all_coupled;  // uncoupled modes cannot be reached; informational only
    }
    out.push_back(r);
  }
  {
    CheckRecord r = named("positivity.perron_frobenius");
    r.parameters = {{"beta", config.beta_list}};
    r.measured = {{"lambda_min", pf.lambda_min},
                  {"gap", pf.gap},
                  {"spectral_radius", pf.spectral_radius},
                  {"degenerate", pf.degenerate},
                  {"strictly_positive_ground", pf.strictly_positive_ground},
                  {"ground_min_entry", pf.ground_vector.minCoeff()},
                  {"equivalence_holds", pf.equivalence_holds}};
    r.tolerance = tol.spectral_gap * ts;
    const bool simple_positive = !pf.degenerate && pf.strictly_positive_ground;
    if (uncoupled) {
      r.expected_negative = true;
      r.pass = pf.equivalence_holds && !simple_positive;
    } else if (all_coupled) {
      r.pass = pf.equivalence_holds && simple_positive;
    } else {
      r.pass = pf.equivalence_holds;
    }
    out.push_back(r);
  }
  const FactorizationMap product(grid, config.n_max, params.window.kappa, CapPolicy::product);
  const FockOperator h_local_p = assemble_local(product, grid, params);
  const FockOperator k_tail_p = assemble_tail(product, grid, params);
  {
    const Semigroup lo(h_local_p), hi(k_tail_p);
    double worst = 0.0;
    bool ok = true;
    for (double b : config.beta_list) {
      const FockOperator a{lo.at(b).sparseView(), true, false};
      const FockOperator c{hi.at(b).sparseView(), true, false};
      const Eigen::MatrixXd t = multiply(product.embed_low(a), product.embed_high(c)).dense();
      const ConeVerdict v = order_check(t, Eigen::MatrixXd::Zero(t.rows(), t.cols()),
                                        tol.entrywise * ts);
      ok = ok && v.preserving;
      worst = std::max(worst, v.max_negative_violation);
    }
    CheckRecord r = named("positivity.tensor");
    r.measured = {{"max_negative_violation", worst}, {"composite", product.size()}};
    r.tolerance = tol.entrywise * ts;
    r.pass = ok;
    out.push_back(r);
  }
  rep.summary["inf_spec_h_lambda"] = lambda_full;
  rep.summary["inf_spec_h_ren"] = pf.lambda_min;
  rep.summary["e_lambda_grid"] = bundle.e_lambda_grid;
  rep.summary["e_lambda_radial"] = e_radial;
  rep.summary["gap"] = pf.gap;
  rep.summary["min_semigroup_entry"] =
      *std::min_element(pf.semigroup_min_entries.begin(), pf.semigroup_min_entries.end());
  {
    double biggest = 0.0;
    for (double b : config.beta_list) biggest = std::max(biggest, s_ren.at(b).cwiseAbs().maxCoeff());
    rep.summary["max_semigroup_entry"] = biggest;
  }
  rep.summary["tail_ground_energy"] = Semigroup(bundle.k_tail).eigenvalues()[0];
  rep.summary["e_window"] = bundle.e_window;
  clock.lap("positivity");

  // --- ergodicity -----------------------------------------------------------
  guarded(out, "ergodicity.probe", [&] {
    const Eigen::VectorXd f =
        coupling_amplitudes(grid, params.g > 0.0 ? params.g : 1.0, Mask(M, true));
    std::uniform_int_distribution<int> sector(0, config.n_max);
    std::uniform_real_distribution<double> u(0.1, 1.0);
    int found = 0, bounds = 0, worst_power_excess = -1;
    json pairs = json::array();
    for (int s = 0; s < config.ergodicity_pairs; ++s) {
      const int p = sector(rng), q = sector(rng);
      Eigen::VectorXd x = Eigen::VectorXd::Zero(basis.size()), y = x;
      for (std::size_t i = basis.sector_offset(p); i < basis.sector_offset(p + 1); ++i) x[i] = u(rng);
      for (std::size_t i = basis.sector_offset(q); i < basis.sector_offset(q + 1); ++i) y[i] = u(rng);
      const ErgodicityResult e = ergodicity_probe(basis, f, x, y, p + q);
      found += e.found;
      bounds += e.bound_holds;
      worst_power_excess = std::max(worst_power_excess, e.power - (p + q));
      pairs.push_back({{"p", p}, {"q", q}, {"power", e.power}, {"lower_bound", e.lower_bound},
                       {"pairing_at_bound", e.pairing_at_bound}});
    }
    CheckRecord r = named("ergodicity.probe");
    r.parameters = {{"pairs", config.ergodicity_pairs}};
    r.measured = {{"found", found}, {"bound_holds", bounds}, {"pairs", pairs}};
    r.pass = found == config.ergodicity_pairs && bounds == config.ergodicity_pairs &&
             worst_power_excess <= 0;
    out.push_back(r);
  });
  clock.lap("ergodicity");

  // --- Duhamel --------------------------------------------------------------
  guarded(out, "duhamel.expansion", [&] {
    const Eigen::MatrixXd phi = field_operator(basis, f_lambda).dense();
    const Eigen::MatrixXd a = bundle.h_full.dense() + phi;
    const DuhamelReport d = duhamel(a, -phi, beta0, config.duhamel_order, config.duhamel_points);
    const double floor = *std::min_element(d.term_min_entries.begin(), d.term_min_entries.end());
    CheckRecord r = named("duhamel.expansion");
    r.parameters = {{"beta", beta0}, {"order", d.order}, {"quad_points", d.quadrature_points}};
    r.measured = {{"term_min_entries", d.term_min_entries},
                  {"term_quadrature_errors", d.term_quadrature_errors},
                  {"partial_sum_residuals", d.partial_sum_residuals},
                  {"remainder_bound", d.remainder_bound},
                  {"residuals_decrease", d.residuals_decrease}};
    r.tolerance = tol.quadrature * ts;
    r.pass = floor >= -r.tolerance && d.within_remainder_bound;
    out.push_back(r);
  });
  clock.lap("duhamel");

  // --- Gross ----------------------------------------------------------------
  guarded(out, "gross.transform", [&] {
    const GrossBundle gb = gross_transform(split, grid, params);
    auto record = [&](const std::string& name, double value, double tolerance) {
      CheckRecord r = named(name);
      r.parameters = {{"K", params.window.K_gross}};
      r.measured = {{"residual", value}};
      r.tolerance = tolerance * ts;
      r.pass = value < r.tolerance;
      out.push_back(r);
    };
    record("gross.unitarity", gb.unitarity_residual, 1e-10);
    record("gross.spectral_invariance", gb.spectral_deviation, 1e-8);
    record("gross.commutator", gb.commutator_residual, 1e-10);
  });
  guarded(out, "gross.form_bound", [&] {
    const FormBoundReport fb = form_bound_check(split, grid, params, config.form_epsilon,
                                                config.form_samples, config.seed);
    CheckRecord r = named("gross.form_bound");
    r.parameters = {{"epsilon", fb.epsilon}, {"samples", fb.samples}, {"K", params.window.K_gross}};
    r.measured = {{"c_of_K", fb.c_of_K}, {"c_of_K_grid", fb.c_of_K_grid},
                  {"smallness", fb.smallness}, {"form_coefficient", fb.form_coefficient},
                  {"d_constant", fb.d_constant}, {"worst_ratio", fb.worst_ratio},
                  {"violations", fb.violations}};
    r.pass = fb.violations == 0;
    r.fatal = false;
    out.push_back(r);
  });
  guarded(out, "gross.form_difference", [&] {
    const double l2 = params.window.Lambda;
    const double l1 = 0.5 * (params.window.K_gross + l2);
    const FormDifferenceReport fd =
        form_difference_check(split, grid, params, l1, l2, config.form_samples, config.seed);
    CheckRecord r = named("gross.form_difference");
    r.parameters = {{"lambda_small", fd.lambda_small}, {"lambda_large", fd.lambda_large}};
    r.measured = {{"worst_ratio", fd.worst_ratio}, {"bound", fd.bound}};
    r.pass = fd.worst_ratio <= fd.bound;
    r.fatal = false;
    out.push_back(r);
  });
  clock.lap("gross");

  // --- key inequality -------------------------------------------------------
  guarded(out, "key_inequality", [&] {
    const FockOperator l = build_l_kappa(product, h_local_p, k_tail_p);
    double residual = 0.0, overlap = 1.0, violation = 0.0;
    bool ordered = true;
    for (const KeyInequalityReport& k :
         key_inequality(product, l, h_local_p, k_tail_p, config.beta_list, tol.entrywise * ts)) {
      residual = std::max(residual, k.residual);
      overlap = std::min(overlap, k.vacuum_overlap);
      ordered = ordered && k.order.preserving;
      violation = std::max(violation, k.order.max_negative_violation);
    }
    CheckRecord r = named("key_inequality");
    r.parameters = {{"beta", config.beta_list}, {"composite", product.size()}};
    r.measured = {{"residual", residual}, {"min_vacuum_overlap", overlap},
                  {"order_holds", ordered}, {"max_negative_violation", violation}};
    r.tolerance = 1e-8 * ts;
    r.pass = residual < r.tolerance && overlap > 0.0 && ordered;
    out.push_back(r);
  });
  clock.lap("key_inequality");

  // --- regularized limit ----------------------------------------------------
  guarded(out, "regularized_limit", [&] {
    const RegularizedLimitReport g =
        regularized_limit_probe(split, bundle, params.P, beta0, config.regularization_n);
    const bool trotter = g.trotter_error_coarse <= 1e-12 ||
                         (g.trotter_error_fine <= g.trotter_error_coarse &&
                          g.trotter_error_coarse <= 10.0 * g.trotter_error_fine);
    CheckRecord r = named("regularized_limit");
    r.parameters = {{"beta", beta0}, {"n", g.n_values}};
    r.measured = {{"distances", g.distances}, {"saturation", g.saturation},
                  {"saturated_distance", g.saturated_distance},
                  {"nonincreasing", g.nonincreasing},
                  {"trotter_error_64", g.trotter_error_coarse},
                  {"trotter_error_128", g.trotter_error_fine}};
    r.tolerance = 1e-9 * ts;
    r.pass = g.nonincreasing && g.saturated_distance < r.tolerance && trotter;
    out.push_back(r);
  });
  clock.lap("regularized_limit");

  rep.pass = rep.failed_checks().empty();
  return rep;
}

ExperimentConfig sweep_point(const ExperimentConfig& base, const std::string& variable,
                             double value) {
  ExperimentConfig c = base;
  c.sweep.reset();
  CutoffWindow& w = c.params.window;
  if (variable == "Lambda") {
    w.Lambda = value;
  } else if (variable == "kappa") {
    w.kappa = value;
  } else if (variable == "n_max") {
    c.n_max = static_cast<int>(std::lround(value));
  } else if (variable == "refinement") {
    c.grid.points_per_axis = static_cast<int>(std::lround(value));
  } else {
    throw std::invalid_argument("unknown sweep variable '" + variable + "'");
  }
  // Keep the Gross radius inside the window when the window itself moves.
  if (!(w.kappa < w.K_gross && w.K_gross < w.Lambda)) w.K_gross = 0.5 * (w.kappa + w.Lambda);
  return c;
}

SweepResult sweep(const ExperimentConfig& config, int workers) {
  config.validate();
  if (!config.sweep) throw std::invalid_argument("sweep requested but config has no sweep block");
  const SweepSpec& spec = *config.sweep;
  std::vector<ExperimentConfig> points;
  for (double v : spec.values) {
    points.push_back(sweep_point(config, spec.variable, v));
    points.back().validate();
  }

  SweepResult result;
  result.reports.resize(points.size());
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_lock;
  auto worker = [&] {
    for (std::size_t i = next++; i < points.size(); i = next++) {
      try {
        result.reports[i] = run(points[i]);
      } catch (...) {
        std::lock_guard lock(failure_lock);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  const int n = std::clamp(workers, 1, static_cast<int>(points.size()));
  std::vector<std::thread> pool;
  for (int t = 1; t < n; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);

  for (std::size_t i = 0; i < points.size(); ++i) {
    const auto& s = result.reports[i].summary;
    result.trends.push_back({spec.values[i], s.at("inf_spec_h_lambda"), s.at("inf_spec_h_ren"),
                             s.at("e_lambda_grid"), s.at("e_lambda_radial"), s.at("gap"),
                             s.at("min_semigroup_entry")});
  }

  auto& checks = result.trend_checks;
  const auto& rows = result.trends;
  auto strictly_decreasing = [&](double TrendRow::*field) {
    for (std::size_t i = 1; i < rows.size(); ++i)
      if (!(rows[i].*field < rows[i - 1].*field)) return false;
    return true;
  };
  auto column = [&](double TrendRow::*field) {
    std::vector<double> v;
    for (const auto& r : rows) v.push_back(r.*field);
    return v;
  };
  auto spread = [](const std::vector<double>& v) {
    const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
    return *hi - *lo;
  };
  {
    CheckRecord r = named("trend.weak_closure");
    double worst = 0.0;
    for (const auto& rep : result.reports) {
      const double scale = std::max(1e-300, rep.summary.at("max_semigroup_entry"));
      worst = std::max(worst, -rep.summary.at("min_semigroup_entry") / scale);
    }
    r.measured = {{"relative_negative_violation", worst}};
    r.tolerance = config.tolerances.entrywise * config.tol_scale;
    r.pass = worst <= r.tolerance;
    checks.push_back(r);
  }
  if (spec.variable == "Lambda") {
    {
      CheckRecord r = named("trend.inf_spec_h_lambda_decreasing");
      r.measured = {{"values", column(&TrendRow::inf_spec_h_lambda)}};
      r.pass = strictly_decreasing(&TrendRow::inf_spec_h_lambda);
      checks.push_back(r);
    }
    {
      CheckRecord r = named("trend.e_lambda_radial_decreasing");
      r.measured = {{"values", column(&TrendRow::e_lambda_radial)}};
      r.pass = strictly_decreasing(&TrendRow::e_lambda_radial);
      checks.push_back(r);
    }
    {
      const double bare = spread(column(&TrendRow::inf_spec_h_lambda));
      const double ren = spread(column(&TrendRow::inf_spec_h_ren));
      CheckRecord r = named("trend.renormalized_spread");
      r.measured = {{"spread_h_lambda", bare}, {"spread_h_ren", ren},
                    {"ratio", ren > 0.0 ? bare / ren : std::numeric_limits<double>::infinity()}};
      r.tolerance = 10.0;
      r.pass = bare > 10.0 * ren;
      r.fatal = false;
      checks.push_back(r);
    }
    {
      std::vector<double> tail;
      for (const auto& rep : result.reports) tail.push_back(rep.summary.at("tail_ground_energy"));
      const double window = std::abs(result.reports.back().summary.at("e_window"));
      CheckRecord r = named("trend.tail_band");
      r.measured = {{"tail_ground_energies", tail}, {"band_width", spread(tail)},
                    {"abs_e_window_largest", window}};
      r.tolerance = 0.2;
      r.pass = spread(tail) < 0.2 * window;
      r.fatal = false;
      checks.push_back(r);
    }
  } else if (spec.variable == "n_max") {
    CheckRecord r = named("trend.inf_spec_h_ren_nonincreasing");
    const auto v = column(&TrendRow::inf_spec_h_ren);
    bool ok = true;
    for (std::size_t i = 1; i < v.size(); ++i)
      ok = ok && v[i] <= v[i - 1] + 1e-12 * std::max(1.0, std::abs(v[i - 1]));
    r.measured = {{"values", v}};
    r.pass = ok;
    checks.push_back(r);
  }

  result.pass = true;
  for (const auto& rep : result.reports) result.pass = result.pass && rep.pass;
  for (const auto& c : checks) result.pass = result.pass && (c.pass || !c.fatal);
  return result;
}

void write_trends_csv(std::ostream& out, const std::vector<TrendRow>& rows) {
  for (std::size_t i = 0; i < kTrendColumns.size(); ++i)
    out << (i ? "," : "") << kTrendColumns[i];
  out << '\n' << std::setprecision(17);
  for (const auto& r : rows)
    out << r.value << ',' << r.inf_spec_h_lambda << ',' << r.inf_spec_h_ren << ','
        << r.e_lambda_grid << ',' << r.e_lambda_radial << ',' << r.gap << ','
        << r.min_semigroup_entry << '\n';
}

namespace {

void write_json(const json& j, const std::filesystem::path& file) {
  std::ofstream out(file);
  if (!out) throw std::runtime_error("cannot write " + file.string());
  out << j.dump(2) << '\n';
}

std::string status_of(const json& c) {
  if (!c.at("pass").get<bool>()) return c.at("fatal").get<bool>() ? "FAIL" : "WARN";
  return c.at("expected_negative").get<bool>() ? "PASS*" : "PASS";
}

void check_table(std::ostream& os, const json& checks) {
  os << std::left << std::setw(40) << "check" << std::setw(8) << "status" << std::setw(10)
     << "kind" << "tolerance\n";
  for (const auto& c : checks)
    os << std::left << std::setw(40) << c.at("name").get<std::string>() << std::setw(8)
       << status_of(c) << std::setw(10) << (c.at("fatal").get<bool>() ? "fatal" : "advisory")
       << c.at("tolerance").get<double>() << '\n';
}

}  // namespace

void write_run(const RunReport& report, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  write_json(to_json(report), dir / "report.json");
}

void write_sweep(const SweepResult& result, const ExperimentConfig& config,
                 const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  json points = json::array();
  std::map<std::string, double> timing;
  for (const auto& r : result.reports) {
    points.push_back(to_json(r));
    for (const auto& [k, v] : r.timing) timing[k] += v;
  }
  json trend_checks = json::array();
  for (const auto& c : result.trend_checks) trend_checks.push_back(to_json(c));
  json j = {{"kind", "sweep"},
            {"config", config_to_json(config)},
            {"variable", config.sweep ? config.sweep->variable : ""},
            {"trend_columns", kTrendColumns},
            {"points", points},
            {"trend_checks", trend_checks},
            {"pass", result.pass},
            {"volatile", {"timing"}},
            {"timing", timing}};
  write_json(j, dir / "report.json");
  std::ofstream csv(dir / "trends.csv");
  if (!csv) throw std::runtime_error("cannot write " + (dir / "trends.csv").string());
  write_trends_csv(csv, result.trends);
}

std::string report(const std::filesystem::path& dir) {
  const auto file = dir / "report.json";
  std::ifstream in(file);
  if (!in) throw std::runtime_error("missing report file: " + file.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw std::runtime_error("corrupt report file " + file.string() + ": " + e.what());
  }
  std::ostringstream os;
  try {
    const std::string kind = j.at("kind").get<std::string>();
    if (kind == "run") {
      os << "run report (" << j.at("basis_dimension").get<std::size_t>() << " basis states)\n";
      check_table(os, j.at("checks"));
      os << "overall: " << (j.at("pass").get<bool>() ? "PASS" : "FAIL") << '\n';
      return os.str();
    }
    if (kind != "sweep") throw std::runtime_error("unknown report kind '" + kind + "'");
    const auto csv_file = dir / "trends.csv";
    std::ifstream csv(csv_file);
    if (!csv) throw std::runtime_error("missing trend file: " + csv_file.string());
    std::string header;
    std::getline(csv, header);
    std::string expected;
    for (std::size_t i = 0; i < kTrendColumns.size(); ++i)
      expected += (i ? "," : "") + kTrendColumns[i];
    if (header != expected)
      throw std::runtime_error("corrupt trend file " + csv_file.string() + ": header mismatch");
    const auto& points = j.at("points");
    os << "sweep over " << j.at("variable").get<std::string>() << " (" << points.size()
       << " points)\n";
    for (std::size_t i = 0; i < points.size(); ++i)
      os << "  point " << i << ": " << (points[i].at("pass").get<bool>() ? "PASS" : "FAIL")
         << '\n';
    os << "trends\n  " << header << '\n';
    for (std::string line; std::getline(csv, line);)
      if (!line.empty()) os << "  " << line << '\n';
    check_table(os, j.at("trend_checks"));
    os << "overall: " << (j.at("pass").get<bool>() ? "PASS" : "FAIL") << '\n';
  } catch (const json::exception& e) {
    throw std::runtime_error("corrupt report file " + file.string() + ": " + e.what());
  }
  return os.str();
}

}  // namespace nelson
