// Command-line driver: run / sweep / report.
#include "nelson/experiment.hpp"

#include <CLI11.hpp>

#include <iostream>
#include <optional>

namespace {

struct Overrides {
  int workers = 1;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::optional<double> tol_scale;
};

nelson::ExperimentConfig configure(const std::string& path, const Overrides& o) {
  nelson::ExperimentConfig c = nelson::load_config(path);
  if (!o.out.empty()) c.output_dir = o.out;
  if (o.seed) c.seed = *o.seed;
  if (o.tol_scale) c.tol_scale = *o.tol_scale;
  c.validate();
  return c;
}

void print_failures(const nelson::RunReport& r, const std::string& prefix) {
  for (const auto& name : r.failed_checks()) std::cerr << prefix << "failed check: " << name << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Truncated Fock-space toolkit for the cutoff Nelson fiber Hamiltonian"};
  app.require_subcommand(1);
  // Global flags may follow the subcommand too.
  app.fallthrough();
  Overrides o;
  app.add_option("--workers", o.workers, "Concurrent sweep points")->check(CLI::PositiveNumber);
  app.add_option("--out", o.out, "Output directory (overrides the config)");
  app.add_option("--seed", o.seed, "Seed for random sample vectors");
  app.add_option("--tol-scale", o.tol_scale, "Multiply every check tolerance")
      ->check(CLI::PositiveNumber);

  std::string config_path, report_dir;
  auto* run = app.add_subcommand("run", "Run the verification suite for one config");
  run->add_option("config", config_path, "Experiment config (JSON)")->required()->check(CLI::ExistingFile);
  auto* sweep = app.add_subcommand("sweep", "Run a parameter sweep");
  sweep->add_option("config", config_path, "Experiment config with a sweep block")
      ->required()
      ->check(CLI::ExistingFile);
  auto* report = app.add_subcommand("report", "Summarize a run or sweep directory");
  report->add_option("dir", report_dir, "Directory containing report.json")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*run) {
      const auto c = configure(config_path, o);
      const auto r = nelson::run(c);
      nelson::write_run(r, c.output_dir);
      std::cout << nelson::report(c.output_dir);
      print_failures(r, "");
      return r.pass ? 0 : 1;
    }
    if (*sweep) {
      const auto c = configure(config_path, o);
      const auto s = nelson::sweep(c, o.workers);
      nelson::write_sweep(s, c, c.output_dir);
      std::cout << nelson::report(c.output_dir);
      for (std::size_t i = 0; i < s.reports.size(); ++i)
        print_failures(s.reports[i], "point " + std::to_string(i) + ": ");
      return s.pass ? 0 : 1;
    }
    std::cout << nelson::report(report_dir);
    return 0;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
}
