// Command-line front end: runs configured experiments and emits CSV.

#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "spectra/config.hpp"
#include "spectra/csv.hpp"
#include "spectra/montecarlo.hpp"
#include "spectra/verify.hpp"

namespace {

struct RunOptions {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> replications;
  std::optional<std::string> output;
  std::size_t workers = 0;
  bool full = false;
};

void add_run_options(CLI::App* sub, RunOptions& opt) {
  sub->add_option("config", opt.config_path, "Experiment config file")->required()->check(CLI::ExistingFile);
  sub->add_option("--seed", opt.seed, "Override the config seed");
  sub->add_option("--replications", opt.replications, "Override the replication count")
      ->check(CLI::PositiveNumber);
  sub->add_option("-o,--output", opt.output, "Write CSV to this path instead of stdout");
  sub->add_option("--workers", opt.workers, "Worker threads (default: all cores, capped by SPECTRA_THREADS)");
  sub->add_flag("--full", opt.full, "Use 5000 replications");
}

spectra::ExperimentConfig load(const RunOptions& opt, spectra::ExperimentKind expected, const std::string& cmd) {
  spectra::ExperimentConfig cfg = spectra::parse_config(opt.config_path);
  if (cfg.kind != expected) {
    throw spectra::ConfigError(cmd + " needs a config with kind = " + spectra::to_string(expected) + ", got " +
                               spectra::to_string(cfg.kind));
  }
  if (opt.full) cfg.replications = 5000;
  if (opt.replications) cfg.replications = *opt.replications;
  if (opt.seed) cfg.master_seed = *opt.seed;
  return cfg;
}

void report(const spectra::MCSummary& summary, const RunOptions& opt) {
  if (opt.output) {
    spectra::emit_csv(summary, *opt.output);
    std::cout << spectra::render_table(summary) << "wrote " << *opt.output << '\n';
  } else {
    std::cout << spectra::render_csv(summary);
  }
}

int verify() {
  int failures = 0;
  for (const auto& c : spectra::verify_limits()) {
    std::cout << (c.pass ? "PASS " : "FAIL ") << c.name << ": computed " << spectra::format_number(c.computed)
              << ", expected " << spectra::format_number(c.expected) << " (tol " << c.tolerance
              << (c.relative ? " rel" : " abs") << ")\n";
    failures += c.pass ? 0 : 1;
  }
  std::cout << (failures == 0 ? "all checks passed" : std::to_string(failures) + " check(s) failed") << '\n';
  return failures == 0 ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Linear spectral statistics of ultra-high-dimensional sample covariance matrices"};
  app.require_subcommand(1);

  RunOptions lss, ident, sep, curve;
  auto* sim_cmd = app.add_subcommand("simulate-lss", "Monte Carlo mean/variance of standardized LSS");
  add_run_options(sim_cmd, lss);
  auto* id_cmd = app.add_subcommand("test-identity", "Size or power of the W and LRT-type identity tests");
  add_run_options(id_cmd, ident);
  auto* sep_cmd = app.add_subcommand("test-separable", "Size and power of the separable covariance test");
  add_run_options(sep_cmd, sep);
  auto* curve_cmd = app.add_subcommand("power-curve", "Theoretical power for an identity or separable config");
  curve_cmd->add_option("config", curve.config_path, "Experiment config file")->required()->check(CLI::ExistingFile);
  curve_cmd->add_option("-o,--output", curve.output, "Write CSV to this path instead of stdout");
  auto* verify_cmd = app.add_subcommand("verify-limits", "Run analytic self-checks of the limit formulas");

  CLI11_PARSE(app, argc, argv);

  try {
    using spectra::ExperimentKind;
    if (*verify_cmd) return verify();
    if (*sim_cmd) {
      report(spectra::run_lss(load(lss, ExperimentKind::lss, "simulate-lss"), lss.workers), lss);
    } else if (*id_cmd) {
      report(spectra::run_identity(load(ident, ExperimentKind::identity, "test-identity"), ident.workers), ident);
    } else if (*sep_cmd) {
      report(spectra::run_separable(load(sep, ExperimentKind::separable, "test-separable"), sep.workers), sep);
    } else if (*curve_cmd) {
      report(spectra::theoretical_power(spectra::parse_config(curve.config_path)), curve);
    }
  } catch (const spectra::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
