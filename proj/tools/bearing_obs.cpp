// bearing_obs: simulate the bearing/velocity-bias observer, reproduce the
// circular experiment, and audit traces for excitation and convergence bounds.

#include <CLI11.hpp>

#include <cstdint>
#include <optional>
#include <string>

#include "bearing_obs/cli.hpp"

namespace cli = bearing_obs::cli;

int main(int argc, char** argv) {
  CLI::App app{"Position and velocity-bias observer from a single bearing"};
  app.require_subcommand(1);

  cli::SimulateOptions sim;
  std::string sim_config, sim_out = ".";
  std::optional<std::string> sim_format;
  std::optional<std::uint64_t> sim_seed;
  auto* simulate = app.add_subcommand("simulate", "Run a scenario from a config file");
  simulate->add_option("--config", sim_config, "Run configuration")->required();
  simulate->add_option("--out-dir", sim_out, "Directory for relative output paths");
  simulate->add_option("--format", sim_format, "Trace format when the config names none")
      ->check(CLI::IsMember({"csv", "json"}));
  simulate->add_option("--seed", sim_seed, "Noise seed (overrides BEARING_OBS_SEED and config)");

  cli::ReproduceOptions rep;
  std::string rep_out = ".";
  std::optional<double> rep_duration;
  auto* reproduce = app.add_subcommand("reproduce-paper", "Run the circular experiment");
  reproduce->add_option("--variant", rep.variant, "noisefree or noisy");
  reproduce->add_option("--out-dir", rep_out, "Output directory");
  reproduce->add_option("--seed", rep.seed, "Noise seed (overrides BEARING_OBS_SEED)");
  reproduce->add_option("--duration", rep_duration, "Override the 100 s horizon");

  cli::TraceToolOptions pe, an;
  std::string pe_trace, an_trace;
  std::optional<std::string> pe_config, an_config, pe_out, an_out;
  auto* pe_check = app.add_subcommand("pe-check", "Persistence-of-excitation report for a trace");
  pe_check->add_option("trace", pe_trace, "Trace file (.csv or .json)")->required();
  pe_check->add_option("--config", pe_config, "Scenario for CSV traces (default: circular experiment)");
  pe_check->add_option("--delta", pe.delta, "Window length [s]");
  pe_check->add_option("--epsilon", pe.epsilon, "Derivative threshold");
  pe_check->add_flag("--dual", pe.dual, "Check the dual output M^-1 y instead of y");
  pe_check->add_option("--out-dir", pe_out, "Write pe_report.json here instead of stdout");

  auto* analyze = app.add_subcommand("analyze", "Convergence-bound audit for a trace");
  analyze->add_option("trace", an_trace, "Trace file (.csv or .json)")->required();
  analyze->add_option("--config", an_config, "Scenario for CSV traces (default: circular experiment)");
  analyze->add_option("--delta", an.delta, "Excitation window [s]");
  analyze->add_option("--epsilon", an.epsilon, "Derivative threshold");
  analyze->add_option("--out-dir", an_out, "Also write bound_report.json here");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : cli::kInputError;
  }

  if (*simulate) {
    sim.config = sim_config;
    sim.out_dir = sim_out;
    sim.format = sim_format;
    sim.seed = sim_seed;
    return cli::cmd_simulate(sim);
  }
  if (*reproduce) {
    rep.out_dir = rep_out;
    rep.duration = rep_duration;
    return cli::cmd_reproduce_paper(rep);
  }
  if (*pe_check) {
    pe.trace = pe_trace;
    if (pe_config) pe.config = *pe_config;
    if (pe_out) pe.report = std::filesystem::path(*pe_out) / "pe_report.json";
    return cli::cmd_pe_check(pe);
  }
  an.trace = an_trace;
  if (an_config) an.config = *an_config;
  if (an_out) an.report = std::filesystem::path(*an_out) / "bound_report.json";
  return cli::cmd_analyze(an);
}
