#pragma once

// Sweep orchestration behind the command-line tool: manifests, per-trace
// fits on a worker pool, sweep-level loss fits, reports and synthetic
// datasets. Manifests, configs and reports are JSON documents carrying a
// "schema_version" field; the schemas are described in the README.

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "cpwres/cpw_design.hpp"
#include "cpwres/loss_analysis.hpp"
#include "cpwres/resonance_fit.hpp"
#include "cpwres/trace_io.hpp"

namespace cpwres {

inline constexpr int kSchemaVersion = 1;

const char* tool_version() noexcept;

struct ManifestEntry {
  std::string path;  // as written; relative paths resolve against base_dir
  double vna_power_dBm = 0.0;
  double temperature_K = 0.0;
};

struct SweepManifest {
  std::string resonator_label;
  PowerBudget shared;  // vna_power_dBm unused; each entry carries its own
  std::vector<ManifestEntry> entries;
  std::optional<double> critical_temperature_K;   // required for temperature sweeps
  std::optional<TlsFitParameters> saturation;      // fixed n_c, beta for temperature sweeps
  std::optional<double> analysis_temperature_K;    // power sweeps; default: coldest entry
  std::filesystem::path base_dir;

  std::filesystem::path resolve(const ManifestEntry& e) const;
};

/// Throws Config for schema violations and Usage for an empty entry list.
SweepManifest parse_manifest_text(std::string_view text, const std::filesystem::path& base_dir);
SweepManifest load_manifest(const std::filesystem::path& path);
std::string format_manifest(const SweepManifest& manifest);

struct WorkbenchOptions {
  unsigned jobs = 0;                          // 0: hardware concurrency
  std::optional<double> extra_line_loss_dB;   // overrides the manifest value
};

struct TraceRecord {
  ManifestEntry entry;
  bool ok = false;
  std::string error_kind;  // set when !ok
  std::string error;
  NotchFitResult fit;
  double n_ph = 0.0;
  double qi_over_qc = 0.0;
  std::string sha256;
};

struct PlotRow {
  double x = 0.0;  // n_ph or T
  double Q_i = 0.0;
  double sigma = 0.0;
  double model_Q_i = 0.0;
  double delta_f_Hz = 0.0;        // temperature sweeps only
  double model_delta_f_Hz = 0.0;  // temperature sweeps only
};

struct FrequencyShiftDecomposition {
  double reference_temperature_K = 0.0;
  double reference_f_r_Hz = 0.0;
  std::vector<double> temperature_K;
  std::vector<double> measured_Hz;
  std::vector<double> tls_Hz;
  std::vector<double> qp_Hz;
};

struct Provenance {
  std::string tool_version;
  std::string manifest_sha256;
  std::string timestamp;  // UTC, ISO 8601; excluded from determinism checks
};

enum class SweepKind { Power, Temperature };

struct AnalysisReport {
  SweepKind kind = SweepKind::Power;
  std::string resonator_label;
  std::vector<TraceRecord> traces;
  std::size_t n_failed = 0;
  double analysis_temperature_K = 0.0;  // power sweeps
  double f_r_Hz = 0.0;
  std::optional<TlsFitResult> power_fit;
  std::optional<TemperatureFitResult> temperature_fit;
  std::optional<FrequencyShiftDecomposition> shifts;
  std::vector<PlotRow> plot;
  std::vector<std::string> warnings;
  Provenance provenance;
};

/// Fits every trace (concurrently), computes <n_ph> per trace and runs the
/// TLS power fit. Per-trace failures are recorded; throws when more than half
/// of the traces fail, with the error kind of the first failure.
AnalysisReport run_power_sweep(const SweepManifest& manifest, const WorkbenchOptions& options = {});
AnalysisReport run_temperature_sweep(const SweepManifest& manifest,
                                     const WorkbenchOptions& options = {});

/// JSON report; `with_timestamp = false` gives the deterministic payload.
std::string report_to_json(const AnalysisReport& report, bool with_timestamp = true);
/// Plot CSV: n_ph or T_K, Q_i, sigma, model_Q_i (+ delta_f columns for T).
std::string report_plot_csv(const AnalysisReport& report);

/// Single-trace fit report (JSON), used by `fit <trace>`.
std::string fit_report_json(const FrequencySweep& sweep, const NotchFitResult& fit,
                            const std::string& sha256);
std::string fit_report_csv(const NotchFitResult& fit);

// ---------------------------------------------------------------------------
// Design

struct DesignConfig {
  CpwGeometry geometry;
  FilmProperties film;
  int harmonics = 3;
  std::optional<double> measured_f0_Hz;
};

DesignConfig parse_design_config_text(std::string_view text);
std::string design_report_json(const DesignConfig& config);
std::string design_report_csv(const DesignConfig& config);

// ---------------------------------------------------------------------------
// Synthetic datasets

struct SynthConfig {
  SweepKind kind = SweepKind::Power;
  std::string resonator_label = "synthetic";
  std::uint64_t seed = 1;
  NotchParameters baseline;  // f_r, |Q_c|, phi and environment; Q_l is derived
  TlsFitParameters tls;
  double critical_temperature_K = 4.06;
  double kinetic_fraction = 0.0;
  PowerBudget budget;  // vna_power_dBm used for temperature schedules
  std::vector<double> vna_power_dBm;  // power schedule
  std::vector<double> temperature_K;  // temperature schedule (or single value)
  std::size_t points = 1601;
  double span_linewidths = 10.0;
  std::optional<double> snr_dB;  // noise sigma = a 10^(-snr/20) per quadrature
  CsvLayout layout = CsvLayout::ReIm;
};

SynthConfig parse_synth_config_text(std::string_view text);

struct SynthTruth {
  ManifestEntry entry;
  double f_r = 0.0;
  double Q_l = 0.0;
  double Q_i = 0.0;
  double n_ph = 0.0;
  int fixed_point_iterations = 0;
};

/// Solves n = <n_ph>(P_in, f_r, Q_i(T, n), Q_c) by fixed-point iteration from
/// n = 0 to 1e-9 relative change; throws FixedPointDivergence after 100
/// iterations.
SynthTruth solve_operating_point(double input_power_W, double T, double f_r,
                                 const NotchParameters& baseline, const TlsFitParameters& tls,
                                 const QuasiparticleModel& q);

struct SynthDataset {
  SweepManifest manifest;
  std::vector<SynthTruth> truth;
  std::vector<FrequencySweep> traces;
};

/// Deterministic for a given config; trace i uses a seed derived from
/// (config.seed, i).
SynthDataset synthesize_dataset(const SynthConfig& config);

/// Writes trace_NNN.csv files, manifest.json and truth.json into `dir`.
void write_dataset(const SynthDataset& dataset, const SynthConfig& config,
                   const std::filesystem::path& dir);

std::string sha256_hex(std::string_view bytes);

}  // namespace cpwres
