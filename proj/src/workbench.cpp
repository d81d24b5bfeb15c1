#include "cpwres/workbench.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <random>
#include <set>
#include <thread>

#include <openssl/evp.h>

#include "json.hpp"

#include "cpwres/constants.hpp"
#include "cpwres/errors.hpp"
#include "cpwres/trace_io.hpp"

#ifndef CPWRES_VERSION
#define CPWRES_VERSION "0.0.0"
#endif

namespace cpwres {

using json = nlohmann::ordered_json;

const char* tool_version() noexcept { return CPWRES_VERSION; }

namespace {

// ---------------------------------------------------------------------------
// JSON config helpers. Every failure is a Config error naming the field.

json parse_json(std::string_view text, const char* what) {
  try {
    return json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    fail(ErrorKind::Config, std::string(what) + " is not valid JSON: " + e.what());
  }
}

void check_keys(const json& obj, std::initializer_list<const char*> allowed, const std::string& ctx) {
  if (!obj.is_object()) fail(ErrorKind::Config, ctx + " must be an object");
  for (const auto& [key, value] : obj.items()) {
    if (std::none_of(allowed.begin(), allowed.end(), [&](const char* a) { return key == a; })) {
      fail(ErrorKind::Config, ctx + ": unknown key '" + key + "'");
    }
  }
}

const json& member(const json& obj, const char* key, const std::string& ctx) {
  if (!obj.is_object() || !obj.contains(key)) {
    fail(ErrorKind::Config, ctx + ": missing '" + key + "'");
  }
  return obj.at(key);
}

double number(const json& v, const std::string& ctx) {
  if (!v.is_number()) fail(ErrorKind::Config, ctx + " must be a number");
  const double x = v.get<double>();
  if (!std::isfinite(x)) fail(ErrorKind::Config, ctx + " must be finite");
  return x;
}

double number_at(const json& obj, const char* key, const std::string& ctx) {
  return number(member(obj, key, ctx), ctx + "." + key);
}

double number_or(const json& obj, const char* key, double fallback, const std::string& ctx) {
  return obj.contains(key) ? number(obj.at(key), ctx + "." + key) : fallback;
}

std::string string_or(const json& obj, const char* key, std::string fallback, const std::string& ctx) {
  if (!obj.contains(key)) return fallback;
  if (!obj.at(key).is_string()) fail(ErrorKind::Config, ctx + "." + key + " must be a string");
  return obj.at(key).get<std::string>();
}

void check_schema(const json& doc, const char* what) {
  if (!doc.is_object()) fail(ErrorKind::Config, std::string(what) + " must be a JSON object");
  const json& v = member(doc, "schema_version", what);
  if (!v.is_number_integer() || v.get<int>() != kSchemaVersion) {
    fail(ErrorKind::Config, std::string(what) + ": unsupported schema_version " + v.dump() +
                                " (expected " + std::to_string(kSchemaVersion) + ")");
  }
}

PowerBudget parse_budget(const json& obj, const std::string& ctx) {
  check_keys(obj, {"fridge_attenuation_dB", "room_temp_attenuation_dB", "extra_line_loss_dB"}, ctx);
  PowerBudget b;
  b.fridge_attenuation_dB = number_or(obj, "fridge_attenuation_dB", 0.0, ctx);
  b.room_temp_attenuation_dB = number_or(obj, "room_temp_attenuation_dB", 0.0, ctx);
  b.extra_line_loss_dB = number_or(obj, "extra_line_loss_dB", 0.0, ctx);
  try {
    validate(b);
  } catch (const Error& e) {
    fail(ErrorKind::Config, ctx + ": " + e.what());
  }
  return b;
}

json budget_json(const PowerBudget& b) {
  return json{{"fridge_attenuation_dB", b.fridge_attenuation_dB},
              {"room_temp_attenuation_dB", b.room_temp_attenuation_dB},
              {"extra_line_loss_dB", b.extra_line_loss_dB}};
}

// Either a list of numbers, a single number, or {start, stop, points}
// (linear spacing).
std::vector<double> parse_schedule(const json& v, const std::string& ctx) {
  std::vector<double> out;
  if (v.is_number()) {
    out.push_back(number(v, ctx));
  } else if (v.is_array()) {
    for (std::size_t i = 0; i < v.size(); ++i) {
      out.push_back(number(v[i], ctx + "[" + std::to_string(i) + "]"));
    }
  } else if (v.is_object()) {
    check_keys(v, {"start", "stop", "points"}, ctx);
    const double start = number_at(v, "start", ctx);
    const double stop = number_at(v, "stop", ctx);
    const json& pts = member(v, "points", ctx);
    if (!pts.is_number_integer() || pts.get<long long>() < 1) {
      fail(ErrorKind::Config, ctx + ".points must be a positive integer");
    }
    out = pts.get<long long>() == 1 ? std::vector<double>{start}
                                    : linspace(start, stop, pts.get<std::size_t>());
  } else {
    fail(ErrorKind::Config, ctx + " must be a number, list or {start, stop, points}");
  }
  if (out.empty()) fail(ErrorKind::Config, ctx + " is empty");
  return out;
}

std::string hex(const unsigned char* data, std::size_t n) {
  static const char* digits = "0123456789abcdef";
  std::string out;
  out.reserve(2 * n);
  for (std::size_t i = 0; i < n; ++i) {
    out += digits[data[i] >> 4];
    out += digits[data[i] & 0xF];
  }
  return out;
}

std::string utc_timestamp() {
  const std::time_t now = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

// Replaces non-finite numbers by null and reports where they were.
void sanitize(json& node, const std::string& where, std::vector<std::string>& warnings) {
  if (node.is_number_float() && !std::isfinite(node.get<double>())) {
    warnings.push_back("non-finite value at " + where + " written as null");
    node = nullptr;
  } else if (node.is_object()) {
    for (auto& [key, value] : node.items()) sanitize(value, where + "." + key, warnings);
  } else if (node.is_array()) {
    for (std::size_t i = 0; i < node.size(); ++i) {
      sanitize(node[i], where + "[" + std::to_string(i) + "]", warnings);
    }
  }
}

json fit_json(const NotchFitResult& fit) {
  const auto& p = fit.params;
  const auto& u = fit.uncertainties;
  return json{
      {"f_r_Hz", p.f_r},
      {"Q_l", p.Q_l},
      {"Q_c_mag", p.Q_c_mag},
      {"phi_rad", p.phi},
      {"env_amplitude", p.env_amplitude},
      {"env_phase_rad", p.env_phase},
      {"env_delay_s", p.env_delay},
      {"Q_i", fit.Q_i},
      {"uncertainties",
       {{"f_r_Hz", u.f_r},
        {"Q_l", u.Q_l},
        {"Q_c_mag", u.Q_c_mag},
        {"phi_rad", u.phi},
        {"env_amplitude", u.env_amplitude},
        {"env_phase_rad", u.env_phase},
        {"env_delay_s", u.env_delay},
        {"Q_i", u.Q_i}}},
      {"quality",
       {{"residual_rms", fit.quality.residual_rms},
        {"n_points", fit.quality.n_points},
        {"iterations", fit.quality.iterations},
        {"converged", fit.quality.converged}}}};
}

json tls_json(const TlsFitParameters& p) {
  return json{{"delta0_tls", p.delta0_tls},
              {"n_c", p.n_c},
              {"beta", p.beta},
              {"delta_other", p.delta_other}};
}

ErrorKind kind_from_name(const std::string& name) {
  for (int k = 0; k <= static_cast<int>(ErrorKind::Usage); ++k) {
    if (name == to_string(static_cast<ErrorKind>(k))) return static_cast<ErrorKind>(k);
  }
  return ErrorKind::NonConvergence;
}

// Reads and fits each entry on a pool of `jobs` threads. Results are stored
// by manifest index, so completion order never affects the output.
std::vector<TraceRecord> fit_entries(const SweepManifest& manifest, unsigned jobs) {
  const std::size_t n = manifest.entries.size();
  std::vector<TraceRecord> records(n);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      TraceRecord& rec = records[i];
      rec.entry = manifest.entries[i];
      try {
        const auto path = manifest.resolve(rec.entry);
        rec.sha256 = sha256_hex(read_text_file(path));
        FrequencySweep sweep = read_trace(path);
        rec.fit = fit_notch(sweep);
        if (!rec.fit.quality.converged) {
          rec.error_kind = to_string(ErrorKind::NonConvergence);
          rec.error = "notch fit did not converge or gave a non-physical result";
          continue;
        }
        rec.ok = true;
      } catch (const Error& e) {
        rec.error_kind = to_string(e.kind());
        rec.error = e.what();
      } catch (const std::exception& e) {
        rec.error_kind = to_string(ErrorKind::Parse);
        rec.error = e.what();
      }
    }
  };
  if (jobs == 0) jobs = std::max(1u, std::thread::hardware_concurrency());
  jobs = static_cast<unsigned>(std::min<std::size_t>(jobs, std::max<std::size_t>(n, 1)));
  std::vector<std::thread> pool;
  for (unsigned t = 1; t < jobs; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  return records;
}

AnalysisReport start_report(const SweepManifest& manifest, const WorkbenchOptions& options,
                            SweepKind kind) {
  if (manifest.entries.empty()) fail(ErrorKind::Usage, "manifest has no entries");
  AnalysisReport report;
  report.kind = kind;
  report.resonator_label = manifest.resonator_label;
  report.traces = fit_entries(manifest, options.jobs);
  std::size_t failed = 0;
  const TraceRecord* first_failure = nullptr;
  for (const auto& rec : report.traces) {
    if (rec.ok) continue;
    ++failed;
    if (!first_failure) first_failure = &rec;
    report.warnings.push_back("trace " + rec.entry.path + " failed (" + rec.error_kind +
                              "): " + rec.error);
  }
  report.n_failed = failed;
  if (2 * failed > report.traces.size()) {
    fail(kind_from_name(first_failure->error_kind),
         std::to_string(failed) + " of " + std::to_string(report.traces.size()) +
             " traces failed; first: " + first_failure->entry.path + ": " + first_failure->error);
  }
  PowerBudget budget = manifest.shared;
  if (options.extra_line_loss_dB) budget.extra_line_loss_dB = *options.extra_line_loss_dB;
  for (auto& rec : report.traces) {
    if (!rec.ok) continue;
    budget.vna_power_dBm = rec.entry.vna_power_dBm;
    rec.n_ph = mean_photon_number(budget, rec.fit);
    rec.qi_over_qc = rec.fit.Q_i / rec.fit.params.Q_c_mag;
  }
  report.provenance.tool_version = tool_version();
  report.provenance.timestamp = utc_timestamp();
  return report;
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t m = v.size();
  return m % 2 ? v[m / 2] : 0.5 * (v[m / 2 - 1] + v[m / 2]);
}

// Floor for per-trace Q_i uncertainties so noiseless inputs keep finite weights.
double sigma_q(const NotchFitResult& fit) {
  return std::max(fit.uncertainties.Q_i, 1e-9 * fit.Q_i);
}

}  // namespace

std::string sha256_hex(std::string_view bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
    fail(ErrorKind::Config, "SHA-256 digest failed");
  }
  return hex(digest, len);
}

// ---------------------------------------------------------------------------
// Manifests

std::filesystem::path SweepManifest::resolve(const ManifestEntry& e) const {
  const std::filesystem::path p(e.path);
  return p.is_absolute() ? p : base_dir / p;
}

SweepManifest parse_manifest_text(std::string_view text, const std::filesystem::path& base_dir) {
  const json doc = parse_json(text, "manifest");
  check_schema(doc, "manifest");
  check_keys(doc,
             {"schema_version", "resonator_label", "shared", "entries", "film", "saturation",
              "analysis_temperature_K"},
             "manifest");
  SweepManifest m;
  m.base_dir = base_dir;
  m.resonator_label = string_or(doc, "resonator_label", "", "manifest");
  if (doc.contains("shared")) m.shared = parse_budget(doc.at("shared"), "manifest.shared");
  if (doc.contains("film")) {
    const json& film = doc.at("film");
    check_keys(film, {"critical_temperature_K"}, "manifest.film");
    m.critical_temperature_K = number_at(film, "critical_temperature_K", "manifest.film");
    if (*m.critical_temperature_K <= 0.0) {
      fail(ErrorKind::Config, "manifest.film.critical_temperature_K must be > 0");
    }
  }
  if (doc.contains("saturation")) {
    const json& s = doc.at("saturation");
    check_keys(s, {"n_c", "beta"}, "manifest.saturation");
    TlsFitParameters sat;
    sat.n_c = number_at(s, "n_c", "manifest.saturation");
    sat.beta = number_at(s, "beta", "manifest.saturation");
    if (sat.n_c <= 0.0 || sat.beta <= 0.0) {
      fail(ErrorKind::Config, "manifest.saturation: n_c and beta must be > 0");
    }
    m.saturation = sat;
  }
  if (doc.contains("analysis_temperature_K")) {
    m.analysis_temperature_K = number(doc.at("analysis_temperature_K"), "manifest.analysis_temperature_K");
    if (*m.analysis_temperature_K <= 0.0) {
      fail(ErrorKind::Config, "manifest.analysis_temperature_K must be > 0");
    }
  }
  const json& entries = member(doc, "entries", "manifest");
  if (!entries.is_array()) fail(ErrorKind::Config, "manifest.entries must be a list");
  if (entries.empty()) fail(ErrorKind::Usage, "manifest has no entries");
  for (std::size_t i = 0; i < entries.size(); ++i) {
    const std::string ctx = "manifest.entries[" + std::to_string(i) + "]";
    const json& e = entries[i];
    check_keys(e, {"path", "vna_power_dBm", "temperature_K"}, ctx);
    ManifestEntry entry;
    const json& path = member(e, "path", ctx);
    if (!path.is_string() || path.get<std::string>().empty()) {
      fail(ErrorKind::Config, ctx + ".path must be a non-empty string");
    }
    entry.path = path.get<std::string>();
    entry.vna_power_dBm = number_at(e, "vna_power_dBm", ctx);
    entry.temperature_K = number_at(e, "temperature_K", ctx);
    if (entry.temperature_K <= 0.0) fail(ErrorKind::Config, ctx + ".temperature_K must be > 0");
    m.entries.push_back(std::move(entry));
  }
  return m;
}

SweepManifest load_manifest(const std::filesystem::path& path) {
  std::string text;
  try {
    text = read_text_file(path);
  } catch (const Error& e) {
    fail(ErrorKind::Config, e.what());
  }
  return parse_manifest_text(text, path.parent_path());
}

std::string format_manifest(const SweepManifest& m) {
  json doc;
  doc["schema_version"] = kSchemaVersion;
  doc["resonator_label"] = m.resonator_label;
  doc["shared"] = budget_json(m.shared);
  if (m.critical_temperature_K) doc["film"] = {{"critical_temperature_K", *m.critical_temperature_K}};
  if (m.saturation) doc["saturation"] = {{"n_c", m.saturation->n_c}, {"beta", m.saturation->beta}};
  if (m.analysis_temperature_K) doc["analysis_temperature_K"] = *m.analysis_temperature_K;
  json entries = json::array();
  for (const auto& e : m.entries) {
    entries.push_back(
        {{"path", e.path}, {"vna_power_dBm", e.vna_power_dBm}, {"temperature_K", e.temperature_K}});
  }
  doc["entries"] = std::move(entries);
  return doc.dump(2) + "\n";
}

// ---------------------------------------------------------------------------
// Sweep analyses

AnalysisReport run_power_sweep(const SweepManifest& manifest, const WorkbenchOptions& options) {
  AnalysisReport report = start_report(manifest, options, SweepKind::Power);
  std::vector<PowerSweepPoint> points;
  std::vector<double> f_rs;
  double T_min = std::numeric_limits<double>::infinity();
  for (const auto& rec : report.traces) {
    if (!rec.ok) continue;
    points.push_back({rec.n_ph, rec.fit.Q_i, sigma_q(rec.fit)});
    f_rs.push_back(rec.fit.params.f_r);
    T_min = std::min(T_min, rec.entry.temperature_K);
  }
  report.analysis_temperature_K = manifest.analysis_temperature_K.value_or(T_min);
  report.f_r_Hz = median(f_rs);
  report.power_fit = fit_tls_power_sweep(points, report.analysis_temperature_K, report.f_r_Hz);
  const auto& tls = report.power_fit->params;
  for (const auto& pt : points) {
    const double model =
        1.0 / (tls_loss(report.analysis_temperature_K, pt.n_ph, report.f_r_Hz, tls) + tls.delta_other);
    report.plot.push_back({pt.n_ph, pt.Q_i, pt.sigma, model, 0.0, 0.0});
  }
  std::stable_sort(report.plot.begin(), report.plot.end(),
                   [](const PlotRow& a, const PlotRow& b) { return a.x < b.x; });
  return report;
}

AnalysisReport run_temperature_sweep(const SweepManifest& manifest,
                                     const WorkbenchOptions& options) {
  if (!manifest.critical_temperature_K) {
    fail(ErrorKind::Config, "temperature sweeps need film.critical_temperature_K in the manifest");
  }
  AnalysisReport report = start_report(manifest, options, SweepKind::Temperature);
  TlsFitParameters saturation;
  if (manifest.saturation) {
    saturation = *manifest.saturation;
  } else {
    report.warnings.push_back("no saturation prior in manifest; using n_c = 1, beta = 0.5");
  }
  std::vector<TemperaturePoint> points;
  std::vector<double> n_values;
  const TraceRecord* coldest = nullptr;
  for (const auto& rec : report.traces) {
    if (!rec.ok) continue;
    points.push_back({rec.entry.temperature_K, rec.fit.Q_i, sigma_q(rec.fit), rec.n_ph});
    n_values.push_back(rec.n_ph);
    if (!coldest || rec.entry.temperature_K < coldest->entry.temperature_K) coldest = &rec;
  }
  const double T_ref = coldest->entry.temperature_K;
  const double f_ref = coldest->fit.params.f_r;
  report.f_r_Hz = f_ref;
  QuasiparticleModel q = QuasiparticleModel::from_critical_temperature(*manifest.critical_temperature_K, 0.0);
  report.temperature_fit = fit_temperature_sweep(points, median(n_values), f_ref, q, saturation);
  const auto& tf = *report.temperature_fit;
  q.kinetic_fraction = tf.kinetic_fraction;

  FrequencyShiftDecomposition shifts;
  shifts.reference_temperature_K = T_ref;
  shifts.reference_f_r_Hz = f_ref;
  const double tls_ref = f_ref * frequency_shift_tls(T_ref, f_ref, tf.tls.delta0_tls);
  const double qp_ref = frequency_shift_qp(T_ref, f_ref, q);
  std::size_t k = 0;
  for (const auto& rec : report.traces) {
    if (!rec.ok) continue;
    const double T = rec.entry.temperature_K;
    const double tls_hz = f_ref * frequency_shift_tls(T, f_ref, tf.tls.delta0_tls) - tls_ref;
    const double qp_hz = frequency_shift_qp(T, f_ref, q) - qp_ref;
    const double measured = rec.fit.params.f_r - f_ref;
    shifts.temperature_K.push_back(T);
    shifts.measured_Hz.push_back(measured);
    shifts.tls_Hz.push_back(tls_hz);
    shifts.qp_Hz.push_back(qp_hz);
    const double model_q = 1.0 / total_loss(T, points[k].n_ph, f_ref, tf.tls, q);
    report.plot.push_back({T, rec.fit.Q_i, points[k].sigma, model_q, measured, tls_hz + qp_hz});
    ++k;
  }
  report.shifts = std::move(shifts);
  std::stable_sort(report.plot.begin(), report.plot.end(),
                   [](const PlotRow& a, const PlotRow& b) { return a.x < b.x; });
  return report;
}

std::string report_to_json(const AnalysisReport& r, bool with_timestamp) {
  json doc;
  doc["schema_version"] = kSchemaVersion;
  doc["kind"] = r.kind == SweepKind::Power ? "power_sweep" : "temperature_sweep";
  doc["resonator_label"] = r.resonator_label;
  json prov;
  prov["tool_version"] = r.provenance.tool_version;
  json digests = json::object();
  for (const auto& rec : r.traces) {
    if (!rec.sha256.empty()) digests[rec.entry.path] = rec.sha256;
  }
  prov["input_sha256"] = std::move(digests);
  if (!r.provenance.manifest_sha256.empty()) prov["manifest_sha256"] = r.provenance.manifest_sha256;
  if (with_timestamp) prov["timestamp"] = r.provenance.timestamp;
  doc["provenance"] = std::move(prov);
  doc["summary"] = {{"n_traces", r.traces.size()}, {"n_failed", r.n_failed}};

  json traces = json::array();
  for (const auto& rec : r.traces) {
    json t{{"path", rec.entry.path},
           {"vna_power_dBm", rec.entry.vna_power_dBm},
           {"temperature_K", rec.entry.temperature_K},
           {"status", rec.ok ? "ok" : "failed"}};
    if (rec.ok) {
      t["fit"] = fit_json(rec.fit);
      t["n_ph"] = rec.n_ph;
      t["Q_i_over_Q_c"] = rec.qi_over_qc;
    } else {
      t["error_kind"] = rec.error_kind;
      t["error"] = rec.error;
    }
    traces.push_back(std::move(t));
  }
  doc["traces"] = std::move(traces);

  if (r.power_fit) {
    const auto& f = *r.power_fit;
    const double T = r.analysis_temperature_K;
    auto model_q = [&](double n) {
      return 1.0 / (tls_loss(T, n, r.f_r_Hz, f.params) + f.params.delta_other);
    };
    doc["power_sweep"] = {{"temperature_K", T},
                          {"f_r_Hz", r.f_r_Hz},
                          {"parameters", tls_json(f.params)},
                          {"uncertainties", tls_json(f.uncertainties)},
                          {"chi2_reduced", f.chi2_reduced},
                          {"n_points", f.n_points},
                          {"iterations", f.iterations},
                          {"model_Q_i_single_photon", model_q(1.0)},
                          {"model_Q_i_high_power", model_q(1e7)}};
  }
  if (r.temperature_fit) {
    const auto& f = *r.temperature_fit;
    json t{{"f_r_Hz", r.f_r_Hz},
           {"parameters", tls_json(f.tls)},
           {"kinetic_fraction", f.kinetic_fraction},
           {"uncertainties",
            {{"delta0_tls", f.sigma_delta0},
             {"delta_other", f.sigma_delta_other},
             {"kinetic_fraction", f.sigma_kinetic_fraction}}},
           {"chi2_reduced", f.chi2_reduced},
           {"n_points", f.n_points}};
    if (r.shifts) {
      const auto& s = *r.shifts;
      t["frequency_shift"] = {{"reference_temperature_K", s.reference_temperature_K},
                              {"reference_f_r_Hz", s.reference_f_r_Hz},
                              {"temperature_K", s.temperature_K},
                              {"measured_Hz", s.measured_Hz},
                              {"tls_Hz", s.tls_Hz},
                              {"qp_Hz", s.qp_Hz}};
    }
    doc["temperature_sweep"] = std::move(t);
  }
  std::vector<std::string> warnings = r.warnings;
  sanitize(doc, "$", warnings);
  doc["warnings"] = warnings;
  return doc.dump(2) + "\n";
}

std::string report_plot_csv(const AnalysisReport& r) {
  std::string out = r.kind == SweepKind::Power ? "n_ph,Q_i,sigma,model_Q_i\n"
                                               : "T_K,Q_i,sigma,model_Q_i,delta_f_Hz,model_delta_f_Hz\n";
  char buf[256];
  for (const auto& row : r.plot) {
    if (r.kind == SweepKind::Power) {
      std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g\n", row.x, row.Q_i, row.sigma,
                    row.model_Q_i);
    } else {
      std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n", row.x, row.Q_i,
                    row.sigma, row.model_Q_i, row.delta_f_Hz, row.model_delta_f_Hz);
    }
    out += buf;
  }
  return out;
}

std::string fit_report_json(const FrequencySweep& sweep, const NotchFitResult& fit,
                            const std::string& sha256) {
  json doc;
  doc["schema_version"] = kSchemaVersion;
  doc["kind"] = "trace_fit";
  doc["provenance"] = {{"tool_version", tool_version()}, {"input_sha256", sha256}};
  doc["input"] = {{"label", sweep.meta.label},
                  {"n_points", sweep.size()},
                  {"f_min_Hz", sweep.frequencies.front()},
                  {"f_max_Hz", sweep.frequencies.back()}};
  doc["fit"] = fit_json(fit);
  std::vector<std::string> warnings;
  sanitize(doc, "$", warnings);
  doc["warnings"] = warnings;
  return doc.dump(2) + "\n";
}

std::string fit_report_csv(const NotchFitResult& fit) {
  const auto& p = fit.params;
  const auto& u = fit.uncertainties;
  const std::pair<const char*, std::pair<double, double>> rows[] = {
      {"f_r_Hz", {p.f_r, u.f_r}},
      {"Q_l", {p.Q_l, u.Q_l}},
      {"Q_c_mag", {p.Q_c_mag, u.Q_c_mag}},
      {"phi_rad", {p.phi, u.phi}},
      {"env_amplitude", {p.env_amplitude, u.env_amplitude}},
      {"env_phase_rad", {p.env_phase, u.env_phase}},
      {"env_delay_s", {p.env_delay, u.env_delay}},
      {"Q_i", {fit.Q_i, u.Q_i}},
  };
  std::string out = "parameter,value,uncertainty\n";
  char buf[160];
  for (const auto& [name, vu] : rows) {
    std::snprintf(buf, sizeof buf, "%s,%.17g,%.17g\n", name, vu.first, vu.second);
    out += buf;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Design

DesignConfig parse_design_config_text(std::string_view text) {
  const json doc = parse_json(text, "design config");
  check_schema(doc, "design config");
  check_keys(doc, {"schema_version", "geometry", "film", "harmonics", "measured_f0_Hz"},
             "design config");
  DesignConfig c;
  const json& g = member(doc, "geometry", "design config");
  check_keys(g, {"center_width_m", "gap_m", "length_m", "substrate_rel_permittivity"}, "geometry");
  c.geometry.center_width_m = number_at(g, "center_width_m", "geometry");
  c.geometry.gap_m = number_at(g, "gap_m", "geometry");
  c.geometry.length_m = number_at(g, "length_m", "geometry");
  c.geometry.substrate_rel_permittivity = number_at(g, "substrate_rel_permittivity", "geometry");
  const json& f = member(doc, "film", "design config");
  check_keys(f,
             {"thickness_m", "critical_temperature_K", "sheet_resistance_ohm_sq",
              "bulk_penetration_depth_m"},
             "film");
  c.film.thickness_m = number_at(f, "thickness_m", "film");
  c.film.critical_temperature_K = number_at(f, "critical_temperature_K", "film");
  c.film.sheet_resistance_ohm_sq = number_at(f, "sheet_resistance_ohm_sq", "film");
  c.film.bulk_penetration_depth_m = number_at(f, "bulk_penetration_depth_m", "film");
  if (doc.contains("harmonics")) {
    const json& h = doc.at("harmonics");
    if (!h.is_number_integer() || h.get<int>() < 1 || h.get<int>() > 100) {
      fail(ErrorKind::Config, "harmonics must be an integer in [1, 100]");
    }
    c.harmonics = h.get<int>();
  }
  if (doc.contains("measured_f0_Hz")) c.measured_f0_Hz = number(doc.at("measured_f0_Hz"), "measured_f0_Hz");
  return c;
}

namespace {

json design_json(const DesignConfig& c) {
  validate(c.geometry);
  validate(c.film);
  const LineParameters line = line_parameters_geometric(c.geometry);
  json doc;
  doc["schema_version"] = kSchemaVersion;
  doc["kind"] = "design";
  doc["provenance"] = {{"tool_version", tool_version()}};
  doc["geometry"] = {{"center_width_m", c.geometry.center_width_m},
                     {"gap_m", c.geometry.gap_m},
                     {"length_m", c.geometry.length_m},
                     {"substrate_rel_permittivity", c.geometry.substrate_rel_permittivity}};
  doc["film"] = {{"thickness_m", c.film.thickness_m},
                 {"critical_temperature_K", c.film.critical_temperature_K},
                 {"sheet_resistance_ohm_sq", c.film.sheet_resistance_ohm_sq},
                 {"bulk_penetration_depth_m", c.film.bulk_penetration_depth_m}};
  doc["line"] = {{"modulus_k", c.geometry.modulus()},
                 {"effective_permittivity", c.geometry.effective_permittivity()},
                 {"C_per_m", line.C_per_m},
                 {"L_geometric_per_m", line.L_geometric_per_m},
                 {"Z0_ohm", line.Z0_ohm},
                 {"v_ph_m_per_s", line.v_ph_m_per_s}};
  doc["film_derived"] = {{"gap_energy_J", c.film.gap_energy_J()},
                         {"kinetic_inductance_per_square_H", kinetic_inductance_per_square(c.film)},
                         {"effective_penetration_depth_m", effective_penetration_depth(c.film)}};
  json harmonics = json::array();
  for (int n = 0; n < c.harmonics; ++n) harmonics.push_back(harmonic_frequency(c.geometry, n));
  doc["resonances_Hz"] = std::move(harmonics);
  if (c.measured_f0_Hz) {
    const LineParameters ex = extract_kinetic_inductance_per_length(c.geometry, *c.measured_f0_Hz);
    doc["extraction"] = {{"measured_f0_Hz", *c.measured_f0_Hz},
                         {"L_kinetic_per_m", ex.L_kinetic_per_m},
                         {"kinetic_fraction", ex.kinetic_fraction},
                         {"Z0_ohm", ex.Z0_ohm},
                         {"v_ph_m_per_s", ex.v_ph_m_per_s}};
  }
  return doc;
}

}  // namespace

std::string design_report_json(const DesignConfig& config) {
  return design_json(config).dump(2) + "\n";
}

std::string design_report_csv(const DesignConfig& config) {
  const json doc = design_json(config);
  std::string out = "quantity,value\n";
  char buf[160];
  for (const char* section : {"line", "film_derived", "extraction"}) {
    if (!doc.contains(section)) continue;
    for (const auto& [key, value] : doc.at(section).items()) {
      std::snprintf(buf, sizeof buf, "%s,%.17g\n", key.c_str(), value.get<double>());
      out += buf;
    }
  }
  const auto& res = doc.at("resonances_Hz");
  for (std::size_t n = 0; n < res.size(); ++n) {
    std::snprintf(buf, sizeof buf, "f_%zu_Hz,%.17g\n", 2 * n + 1, res[n].get<double>());
    out += buf;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Synthesis

SynthConfig parse_synth_config_text(std::string_view text) {
  const json doc = parse_json(text, "synth config");
  check_schema(doc, "synth config");
  check_keys(doc,
             {"schema_version", "kind", "resonator_label", "seed", "resonator", "tls",
              "quasiparticles", "budget", "schedule", "trace", "noise"},
             "synth config");
  SynthConfig c;
  const std::string kind = string_or(doc, "kind", "power_sweep", "synth config");
  if (kind == "power_sweep") c.kind = SweepKind::Power;
  else if (kind == "temperature_sweep") c.kind = SweepKind::Temperature;
  else fail(ErrorKind::Config, "synth config.kind must be power_sweep or temperature_sweep");
  c.resonator_label = string_or(doc, "resonator_label", c.resonator_label, "synth config");
  if (doc.contains("seed")) {
    const json& s = doc.at("seed");
    if (!s.is_number_unsigned()) fail(ErrorKind::Config, "seed must be a non-negative integer");
    c.seed = s.get<std::uint64_t>();
  }

  const json& r = member(doc, "resonator", "synth config");
  check_keys(r, {"f_r_Hz", "Q_c_mag", "phi_rad", "env_amplitude", "env_phase_rad", "env_delay_s"},
             "resonator");
  c.baseline.f_r = number_at(r, "f_r_Hz", "resonator");
  c.baseline.Q_c_mag = number_at(r, "Q_c_mag", "resonator");
  c.baseline.phi = number_or(r, "phi_rad", 0.0, "resonator");
  c.baseline.env_amplitude = number_or(r, "env_amplitude", 1.0, "resonator");
  c.baseline.env_phase = number_or(r, "env_phase_rad", 0.0, "resonator");
  c.baseline.env_delay = number_or(r, "env_delay_s", 0.0, "resonator");
  if (c.baseline.f_r <= 0.0 || c.baseline.Q_c_mag <= 0.0 || c.baseline.env_amplitude <= 0.0 ||
      std::abs(c.baseline.phi) >= constants::pi / 2) {
    fail(ErrorKind::Config, "resonator: need f_r_Hz, Q_c_mag, env_amplitude > 0 and |phi_rad| < pi/2");
  }

  const json& t = member(doc, "tls", "synth config");
  check_keys(t, {"delta0_tls", "n_c", "beta", "delta_other"}, "tls");
  c.tls.delta0_tls = number_at(t, "delta0_tls", "tls");
  c.tls.n_c = number_at(t, "n_c", "tls");
  c.tls.beta = number_at(t, "beta", "tls");
  c.tls.delta_other = number_or(t, "delta_other", 0.0, "tls");
  if (c.tls.delta0_tls < 0.0 || c.tls.n_c <= 0.0 || c.tls.beta <= 0.0 || c.tls.delta_other < 0.0) {
    fail(ErrorKind::Config, "tls: need delta0_tls, delta_other >= 0 and n_c, beta > 0");
  }

  if (doc.contains("quasiparticles")) {
    const json& q = doc.at("quasiparticles");
    check_keys(q, {"critical_temperature_K", "kinetic_fraction"}, "quasiparticles");
    c.critical_temperature_K = number_at(q, "critical_temperature_K", "quasiparticles");
    c.kinetic_fraction = number_or(q, "kinetic_fraction", 0.0, "quasiparticles");
    if (c.critical_temperature_K <= 0.0 || c.kinetic_fraction < 0.0 || c.kinetic_fraction >= 1.0) {
      fail(ErrorKind::Config, "quasiparticles: need T_c > 0 and kinetic_fraction in [0, 1)");
    }
  }
  if (doc.contains("budget")) c.budget = parse_budget(doc.at("budget"), "budget");

  const json& s = member(doc, "schedule", "synth config");
  check_keys(s, {"vna_power_dBm", "temperature_K"}, "schedule");
  c.vna_power_dBm = parse_schedule(member(s, "vna_power_dBm", "schedule"), "schedule.vna_power_dBm");
  c.temperature_K = parse_schedule(member(s, "temperature_K", "schedule"), "schedule.temperature_K");
  for (double T : c.temperature_K) {
    if (T <= 0.0) fail(ErrorKind::Config, "schedule.temperature_K values must be > 0");
  }
  if (c.kind == SweepKind::Power && c.temperature_K.size() != 1) {
    fail(ErrorKind::Config, "power sweeps take a single schedule.temperature_K");
  }
  if (c.kind == SweepKind::Temperature && c.vna_power_dBm.size() != 1) {
    fail(ErrorKind::Config, "temperature sweeps take a single schedule.vna_power_dBm");
  }

  if (doc.contains("trace")) {
    const json& tr = doc.at("trace");
    check_keys(tr, {"points", "span_linewidths", "format"}, "trace");
    if (tr.contains("points")) {
      if (!tr.at("points").is_number_unsigned() || tr.at("points").get<std::size_t>() < 16) {
        fail(ErrorKind::Config, "trace.points must be an integer >= 16");
      }
      c.points = tr.at("points").get<std::size_t>();
    }
    c.span_linewidths = number_or(tr, "span_linewidths", c.span_linewidths, "trace");
    if (c.span_linewidths <= 0.0) fail(ErrorKind::Config, "trace.span_linewidths must be > 0");
    const std::string fmt = string_or(tr, "format", "re_im", "trace");
    if (fmt == "re_im") c.layout = CsvLayout::ReIm;
    else if (fmt == "mag_phase") c.layout = CsvLayout::MagPhase;
    else fail(ErrorKind::Config, "trace.format must be re_im or mag_phase");
  }
  if (doc.contains("noise") && !doc.at("noise").is_null()) {
    const json& n = doc.at("noise");
    check_keys(n, {"snr_dB"}, "noise");
    c.snr_dB = number_at(n, "snr_dB", "noise");
  }
  return c;
}

SynthTruth solve_operating_point(double input_power_W, double T, double f_r,
                                 const NotchParameters& baseline, const TlsFitParameters& tls,
                                 const QuasiparticleModel& q) {
  auto internal_q = [&](double n) {
    const double loss = total_loss(T, n, f_r, tls, q);
    if (!(loss > 0.0)) fail(ErrorKind::Config, "truth parameters give zero total loss (infinite Q_i)");
    return 1.0 / loss;
  };
  SynthTruth out;
  out.f_r = f_r;
  double n = 0.0;
  for (int iter = 1; iter <= 100; ++iter) {
    const double next = mean_photon_number(input_power_W, f_r, internal_q(n), baseline.Q_c_mag);
    out.fixed_point_iterations = iter;
    if (!std::isfinite(next)) break;
    if (std::abs(next - n) <= 1e-9 * std::abs(next)) {
      out.n_ph = next;
      out.Q_i = internal_q(next);
      out.Q_l = 1.0 / (1.0 / out.Q_i + std::cos(baseline.phi) / baseline.Q_c_mag);
      return out;
    }
    n = next;
  }
  if (input_power_W == 0.0) {
    out.Q_i = internal_q(0.0);
    out.Q_l = 1.0 / (1.0 / out.Q_i + std::cos(baseline.phi) / baseline.Q_c_mag);
    return out;
  }
  fail(ErrorKind::FixedPointDivergence,
       "photon-number fixed point did not converge within 100 iterations at T = " +
           std::to_string(T) + " K");
}

SynthDataset synthesize_dataset(const SynthConfig& c) {
  SynthDataset ds;
  const QuasiparticleModel q =
      QuasiparticleModel::from_critical_temperature(c.critical_temperature_K, c.kinetic_fraction);
  SweepManifest& m = ds.manifest;
  m.resonator_label = c.resonator_label;
  m.shared = c.budget;
  m.critical_temperature_K = c.critical_temperature_K;
  if (c.kind == SweepKind::Temperature) {
    m.saturation = TlsFitParameters{0.0, c.tls.n_c, c.tls.beta, 0.0};
  } else {
    m.analysis_temperature_K = c.temperature_K.front();
  }

  std::vector<std::pair<double, double>> schedule;  // (P_dBm, T)
  if (c.kind == SweepKind::Power) {
    for (double p : c.vna_power_dBm) schedule.emplace_back(p, c.temperature_K.front());
  } else {
    for (double T : c.temperature_K) schedule.emplace_back(c.vna_power_dBm.front(), T);
  }

  char name[32];
  for (std::size_t i = 0; i < schedule.size(); ++i) {
    const auto [p_dBm, T] = schedule[i];
    PowerBudget budget = c.budget;
    budget.vna_power_dBm = p_dBm;
    double f_r = c.baseline.f_r;
    if (c.kind == SweepKind::Temperature) {
      f_r += total_frequency_shift(T, c.baseline.f_r, c.tls.delta0_tls, q);
    }
    SynthTruth truth = solve_operating_point(budget.input_power_W(), T, f_r, c.baseline, c.tls, q);
    std::snprintf(name, sizeof name, "trace_%03zu.csv", i);
    truth.entry = {name, p_dBm, T};

    NotchParameters p = c.baseline;
    p.f_r = f_r;
    p.Q_l = truth.Q_l;
    const auto grid = linear_grid(f_r, truth.Q_l, c.span_linewidths, c.points);
    FrequencySweep sweep = synthesize(p, grid);
    if (c.snr_dB) {
      std::seed_seq seq{static_cast<std::uint32_t>(c.seed), static_cast<std::uint32_t>(c.seed >> 32),
                        static_cast<std::uint32_t>(i)};
      std::uint32_t words[2];
      seq.generate(words, words + 2);
      const std::uint64_t trace_seed = (static_cast<std::uint64_t>(words[0]) << 32) | words[1];
      sweep = add_noise(sweep, p.env_amplitude * std::pow(10.0, -*c.snr_dB / 20.0), trace_seed);
    }
    sweep.meta.vna_power_dBm = p_dBm;
    sweep.meta.temperature_K = T;
    sweep.meta.label = c.resonator_label;
    m.entries.push_back(truth.entry);
    ds.truth.push_back(truth);
    ds.traces.push_back(std::move(sweep));
  }
  return ds;
}

void write_dataset(const SynthDataset& ds, const SynthConfig& c, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  for (std::size_t i = 0; i < ds.traces.size(); ++i) {
    write_csv_trace(dir / ds.truth[i].entry.path, ds.traces[i], c.layout);
  }
  write_text_file(dir / "manifest.json", format_manifest(ds.manifest));

  json truth;
  truth["schema_version"] = kSchemaVersion;
  truth["kind"] = c.kind == SweepKind::Power ? "power_sweep" : "temperature_sweep";
  truth["resonator_label"] = c.resonator_label;
  truth["seed"] = c.seed;
  truth["resonator"] = {{"f_r_Hz", c.baseline.f_r},
                        {"Q_c_mag", c.baseline.Q_c_mag},
                        {"phi_rad", c.baseline.phi},
                        {"env_amplitude", c.baseline.env_amplitude},
                        {"env_phase_rad", c.baseline.env_phase},
                        {"env_delay_s", c.baseline.env_delay}};
  truth["tls"] = tls_json(c.tls);
  truth["quasiparticles"] = {{"critical_temperature_K", c.critical_temperature_K},
                             {"kinetic_fraction", c.kinetic_fraction}};
  truth["budget"] = budget_json(c.budget);
  truth["snr_dB"] = c.snr_dB ? json(*c.snr_dB) : json(nullptr);
  json traces = json::array();
  for (const auto& t : ds.truth) {
    traces.push_back({{"path", t.entry.path},
                      {"vna_power_dBm", t.entry.vna_power_dBm},
                      {"temperature_K", t.entry.temperature_K},
                      {"f_r_Hz", t.f_r},
                      {"Q_l", t.Q_l},
                      {"Q_i", t.Q_i},
                      {"n_ph", t.n_ph},
                      {"fixed_point_iterations", t.fixed_point_iterations}});
  }
  truth["traces"] = std::move(traces);
  write_text_file(dir / "truth.json", truth.dump(2) + "\n");
}

}  // namespace cpwres
