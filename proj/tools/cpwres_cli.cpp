// cpwres: command-line front end.
//
// Exit codes: 0 success, 1 usage/config error, 2 data/parse error,
// 3 fit non-convergence.

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"

#include "cpwres/errors.hpp"
#include "cpwres/trace_io.hpp"
#include "cpwres/workbench.hpp"

namespace fs = std::filesystem;
using namespace cpwres;

namespace {

enum Exit { kOk = 0, kUsage = 1, kData = 2, kFit = 3 };

int exit_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Usage:
    case ErrorKind::Config:
    case ErrorKind::Domain:
      return kUsage;
    case ErrorKind::NonConvergence:
    case ErrorKind::IllConditioned:
    case ErrorKind::FixedPointDivergence:
      return kFit;
    default:
      return kData;
  }
}

struct Flags {
  std::string out;
  std::string format = "json";
  std::optional<std::uint64_t> seed;
  unsigned jobs = 0;
  std::optional<double> extra_line_loss_dB;
};

void emit(const Flags& flags, const std::string& name, const std::string& text) {
  if (flags.out.empty()) {
    std::cout << text;
  } else {
    write_text_file(fs::path(flags.out) / name, text);
  }
}

int cmd_fit(const std::string& trace, const Flags& flags) {
  FrequencySweep sweep = read_trace(trace);
  const std::string digest = sha256_hex(read_text_file(trace));
  const NotchFitResult fit = fit_notch(sweep);
  if (flags.format == "csv") {
    emit(flags, "fit.csv", fit_report_csv(fit));
  } else {
    emit(flags, "fit.json", fit_report_json(sweep, fit, digest));
  }
  if (!fit.quality.converged) {
    std::cerr << "cpwres: fit did not converge to a physical result\n";
    return kFit;
  }
  return kOk;
}

int cmd_sweep(const std::string& manifest_path, const Flags& flags, SweepKind kind) {
  const SweepManifest manifest = load_manifest(manifest_path);
  WorkbenchOptions options;
  options.jobs = flags.jobs;
  options.extra_line_loss_dB = flags.extra_line_loss_dB;
  AnalysisReport report = kind == SweepKind::Power ? run_power_sweep(manifest, options)
                                                   : run_temperature_sweep(manifest, options);
  report.provenance.manifest_sha256 = sha256_hex(read_text_file(manifest_path));
  for (const auto& w : report.warnings) std::cerr << "cpwres: warning: " << w << "\n";
  if (flags.out.empty()) {
    std::cout << (flags.format == "csv" ? report_plot_csv(report) : report_to_json(report));
  } else {
    write_text_file(fs::path(flags.out) / "report.json", report_to_json(report));
    write_text_file(fs::path(flags.out) / "plot.csv", report_plot_csv(report));
  }
  return kOk;
}

int cmd_design(const std::string& config_path, const Flags& flags) {
  std::string text;
  try {
    text = read_text_file(config_path);
  } catch (const Error& e) {
    fail(ErrorKind::Config, e.what());
  }
  const DesignConfig config = parse_design_config_text(text);
  if (flags.format == "csv") {
    emit(flags, "design.csv", design_report_csv(config));
  } else {
    emit(flags, "design.json", design_report_json(config));
  }
  return kOk;
}

int cmd_synth(const std::string& config_path, const Flags& flags) {
  if (flags.out.empty()) fail(ErrorKind::Usage, "synth needs --out <dir>");
  std::string text;
  try {
    text = read_text_file(config_path);
  } catch (const Error& e) {
    fail(ErrorKind::Config, e.what());
  }
  SynthConfig config = parse_synth_config_text(text);
  if (flags.seed) config.seed = *flags.seed;
  const SynthDataset dataset = synthesize_dataset(config);
  write_dataset(dataset, config, flags.out);
  std::cout << "wrote " << dataset.traces.size() << " traces to " << flags.out << "\n";
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Superconducting CPW resonator design and characterization"};
  app.set_version_flag("--version", tool_version());
  app.require_subcommand(1);

  Flags flags;
  app.add_option("--out", flags.out, "Output directory");
  app.add_option("--format", flags.format, "Report format")
      ->check(CLI::IsMember({"json", "csv"}));
  app.add_option("--seed", flags.seed, "Override the synth seed");
  app.add_option("--jobs", flags.jobs, "Worker threads (0: all cores)");
  app.add_option("--extra-line-loss-db", flags.extra_line_loss_dB,
                 "Extra line loss added to the attenuation budget, dB");

  std::string input;
  auto add = [&](const char* name, const char* help, const char* arg) {
    CLI::App* sub = app.add_subcommand(name, help);
    sub->fallthrough();
    sub->add_option(arg, input)->required();
    return sub;
  };
  CLI::App* fit = add("fit", "Fit a single notch trace (.s2p or .csv)", "trace");
  CLI::App* power = add("power-sweep", "Fit a power sweep from a manifest", "manifest");
  CLI::App* temp = add("temp-sweep", "Fit a temperature sweep from a manifest", "manifest");
  CLI::App* design = add("design", "CPW and film parameters from a design config", "config");
  CLI::App* synth = add("synth", "Generate a synthetic dataset from a config", "config");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (fit->parsed()) return cmd_fit(input, flags);
    if (power->parsed()) return cmd_sweep(input, flags, SweepKind::Power);
    if (temp->parsed()) return cmd_sweep(input, flags, SweepKind::Temperature);
    if (design->parsed()) return cmd_design(input, flags);
    if (synth->parsed()) return cmd_synth(input, flags);
  } catch (const Error& e) {
    std::cerr << "cpwres: " << to_string(e.kind()) << ": " << e.what() << "\n";
    return exit_code(e.kind());
  } catch (const std::exception& e) {
    std::cerr << "cpwres: " << e.what() << "\n";
    return kData;
  }
  return kUsage;
}
