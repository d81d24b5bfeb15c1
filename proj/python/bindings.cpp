#include <optional>
#include <string>
#include <vector>

#include <pybind11/complex.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "cpwres/cpw_design.hpp"
#include "cpwres/errors.hpp"
#include "cpwres/loss_analysis.hpp"
#include "cpwres/notch_model.hpp"
#include "cpwres/resonance_fit.hpp"
#include "cpwres/special_functions.hpp"
#include "cpwres/trace_io.hpp"
#include "cpwres/workbench.hpp"

namespace py = pybind11;
using namespace cpwres;

namespace {

using RealArray = py::array_t<double, py::array::c_style | py::array::forcecast>;
using ComplexArray = py::array_t<std::complex<double>, py::array::c_style | py::array::forcecast>;

std::vector<double> to_vector(const RealArray& a) {
  const auto r = a.unchecked<1>();
  std::vector<double> out(static_cast<std::size_t>(r.shape(0)));
  for (py::ssize_t i = 0; i < r.shape(0); ++i) out[static_cast<std::size_t>(i)] = r(i);
  return out;
}

std::vector<Complex> to_vector(const ComplexArray& a) {
  const auto r = a.unchecked<1>();
  std::vector<Complex> out(static_cast<std::size_t>(r.shape(0)));
  for (py::ssize_t i = 0; i < r.shape(0); ++i) out[static_cast<std::size_t>(i)] = r(i);
  return out;
}

template <typename T>
py::array_t<T> to_array(const std::vector<T>& v) {
  py::array_t<T> out(static_cast<py::ssize_t>(v.size()));
  std::copy(v.begin(), v.end(), out.mutable_data());
  return out;
}

py::object loads(const std::string& text) {
  return py::module_::import("json").attr("loads")(text);
}

py::dict tls_dict(const TlsFitParameters& p) {
  py::dict d;
  d["delta0_tls"] = p.delta0_tls;
  d["n_c"] = p.n_c;
  d["beta"] = p.beta;
  d["delta_other"] = p.delta_other;
  return d;
}

CpwGeometry geometry(double w, double s, double l, double eps_r) {
  CpwGeometry g;
  g.center_width_m = w;
  g.gap_m = s;
  g.length_m = l;
  g.substrate_rel_permittivity = eps_r;
  return g;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Superconducting CPW resonator design and characterization";
  m.attr("__version__") = tool_version();

  static py::handle base_error =
      PyErr_NewException("cpwres.CpwresError", PyExc_RuntimeError, nullptr);
  static py::handle parse_error =
      PyErr_NewException("cpwres.ParseError", base_error.ptr(), nullptr);
  m.attr("CpwresError") = base_error;
  m.attr("ParseError") = parse_error;
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const ParseError& e) {
      PyErr_SetString(parse_error.ptr(), (std::string("ParseError: ") + e.what()).c_str());
    } catch (const Error& e) {
      PyErr_SetString(base_error.ptr(), (std::string(to_string(e.kind())) + ": " + e.what()).c_str());
    }
  });

  // Special functions
  m.def("ellip_k", &special::ellip_k, py::arg("k"), "Complete elliptic integral K(k), modulus k");
  m.def("bessel_i0", &special::bessel_i0, py::arg("x"));
  m.def("bessel_k0", &special::bessel_k0, py::arg("x"));
  m.def("digamma_real_part_half_plus_iy", &special::digamma_real_part_half_plus_iy, py::arg("y"));
  m.def("coth", &special::coth, py::arg("x"));

  // Design
  m.def(
      "line_parameters",
      [](double w, double s, double l, double eps_r) {
        const CpwGeometry g = geometry(w, s, l, eps_r);
        const LineParameters p = line_parameters_geometric(g);
        py::dict d;
        d["C_per_m"] = p.C_per_m;
        d["L_geometric_per_m"] = p.L_geometric_per_m;
        d["Z0_ohm"] = p.Z0_ohm;
        d["v_ph_m_per_s"] = p.v_ph_m_per_s;
        d["effective_permittivity"] = g.effective_permittivity();
        return d;
      },
      py::arg("center_width_m") = 4e-6, py::arg("gap_m") = 2e-6, py::arg("length_m") = 8e-3,
      py::arg("substrate_rel_permittivity") = 11.9);
  m.def(
      "fundamental_frequency",
      [](double l, double eps_r) { return fundamental_frequency(geometry(4e-6, 2e-6, l, eps_r)); },
      py::arg("length_m"), py::arg("substrate_rel_permittivity") = 11.9);
  m.def(
      "kinetic_inductance_per_square",
      [](double r_s, double t_c) {
        FilmProperties f;
        f.sheet_resistance_ohm_sq = r_s;
        f.critical_temperature_K = t_c;
        return kinetic_inductance_per_square(f);
      },
      py::arg("sheet_resistance_ohm_sq"), py::arg("critical_temperature_K"));
  m.def(
      "effective_penetration_depth",
      [](double d, double lambda0) {
        FilmProperties f;
        f.thickness_m = d;
        f.bulk_penetration_depth_m = lambda0;
        return effective_penetration_depth(f);
      },
      py::arg("thickness_m"), py::arg("bulk_penetration_depth_m") = 150e-9);
  m.def(
      "design_report",
      [](const std::filesystem::path& config) {
        return loads(design_report_json(parse_design_config_text(read_text_file(config))));
      },
      py::arg("config_path"));

  // Notch model and fit
  m.def(
      "synthesize",
      [](const RealArray& freqs, double f_r, double Q_l, double Q_c_mag, double phi, double a,
         double alpha, double tau, std::optional<double> snr_dB, std::uint64_t seed) {
        NotchParameters p{f_r, Q_l, Q_c_mag, phi, a, alpha, tau};
        const auto f = to_vector(freqs);
        FrequencySweep sweep = synthesize(p, f);
        if (snr_dB) sweep = add_noise(sweep, a * std::pow(10.0, -*snr_dB / 20.0), seed);
        return to_array(sweep.s21);
      },
      py::arg("frequencies"), py::arg("f_r"), py::arg("Q_l"), py::arg("Q_c_mag"),
      py::arg("phi") = 0.0, py::arg("env_amplitude") = 1.0, py::arg("env_phase") = 0.0,
      py::arg("env_delay") = 0.0, py::arg("snr_dB") = py::none(), py::arg("seed") = 0);
  m.def(
      "fit_notch",
      [](const RealArray& freqs, const ComplexArray& s21) {
        FrequencySweep sweep;
        sweep.frequencies = to_vector(freqs);
        sweep.s21 = to_vector(s21);
        NotchFitResult fit;
        {
          py::gil_scoped_release release;
          fit = fit_notch(sweep);
        }
        py::object report = loads(fit_report_json(sweep, fit, ""));
        return py::object(report["fit"]);
      },
      py::arg("frequencies"), py::arg("s21"));

  // Loss analysis
  m.def(
      "mean_photon_number",
      [](double vna_power_dBm, double attenuation_dB, double f_r, double Q_i, double Q_c,
         double extra_line_loss_dB) {
        PowerBudget b;
        b.vna_power_dBm = vna_power_dBm;
        b.fridge_attenuation_dB = attenuation_dB;
        b.extra_line_loss_dB = extra_line_loss_dB;
        validate(b);
        return mean_photon_number(b.input_power_W(), f_r, Q_i, Q_c);
      },
      py::arg("vna_power_dBm"), py::arg("attenuation_dB"), py::arg("f_r"), py::arg("Q_i"),
      py::arg("Q_c"), py::arg("extra_line_loss_dB") = 0.0);
  m.def(
      "power_partition",
      [](double p_in, Complex s11, Complex s21) {
        const PowerPartition p = power_partition(p_in, s11, s21);
        return py::make_tuple(p.reflected_W, p.transmitted_W, p.absorbed_W);
      },
      py::arg("input_power_W"), py::arg("s11"), py::arg("s21"));
  m.def(
      "tls_loss",
      [](double T, double n, double f_r, double delta0, double n_c, double beta) {
        return tls_loss(T, n, f_r, TlsFitParameters{delta0, n_c, beta, 0.0});
      },
      py::arg("T"), py::arg("n_ph"), py::arg("f_r"), py::arg("delta0_tls"), py::arg("n_c") = 1.0,
      py::arg("beta") = 0.5);
  m.def(
      "qp_loss_mattis_bardeen",
      [](double T, double f_r, double t_c, double gamma) {
        return qp_loss_mattis_bardeen(T, f_r, QuasiparticleModel::from_critical_temperature(t_c, gamma));
      },
      py::arg("T"), py::arg("f_r"), py::arg("critical_temperature_K"), py::arg("kinetic_fraction"));
  m.def(
      "qp_loss_density_form",
      [](double T, double f_r, double t_c, double gamma) {
        return qp_loss_density_form(T, f_r, QuasiparticleModel::from_critical_temperature(t_c, gamma));
      },
      py::arg("T"), py::arg("f_r"), py::arg("critical_temperature_K"), py::arg("kinetic_fraction"));
  m.def("frequency_shift_tls", &frequency_shift_tls, py::arg("T"), py::arg("f_r"),
        py::arg("delta0_tls"));
  m.def(
      "frequency_shift_qp",
      [](double T, double f_r, double t_c, double gamma) {
        return frequency_shift_qp(T, f_r, QuasiparticleModel::from_critical_temperature(t_c, gamma));
      },
      py::arg("T"), py::arg("f_r"), py::arg("critical_temperature_K"), py::arg("kinetic_fraction"));
  m.def(
      "total_frequency_shift",
      [](double T, double f_r, double delta0, double t_c, double gamma, std::optional<double> T_ref) {
        return total_frequency_shift(T, f_r, delta0,
                                     QuasiparticleModel::from_critical_temperature(t_c, gamma), T_ref);
      },
      py::arg("T"), py::arg("f_r"), py::arg("delta0_tls"), py::arg("critical_temperature_K"),
      py::arg("kinetic_fraction"), py::arg("T_ref") = py::none());
  m.def(
      "fit_tls_power_sweep",
      [](const RealArray& n, const RealArray& q, const RealArray& sigma, double T, double f_r) {
        const auto nv = to_vector(n), qv = to_vector(q), sv = to_vector(sigma);
        if (nv.size() != qv.size() || nv.size() != sv.size()) {
          fail(ErrorKind::Domain, "n_ph, Q_i and sigma must have equal lengths");
        }
        std::vector<PowerSweepPoint> pts;
        for (std::size_t i = 0; i < nv.size(); ++i) pts.push_back({nv[i], qv[i], sv[i]});
        const TlsFitResult r = fit_tls_power_sweep(pts, T, f_r);
        py::dict d;
        d["parameters"] = tls_dict(r.params);
        d["uncertainties"] = tls_dict(r.uncertainties);
        d["chi2_reduced"] = r.chi2_reduced;
        d["iterations"] = r.iterations;
        return d;
      },
      py::arg("n_ph"), py::arg("Q_i"), py::arg("sigma"), py::arg("T"), py::arg("f_r"));
  m.def(
      "fit_temperature_sweep",
      [](const RealArray& T, const RealArray& q, const RealArray& sigma, double n_ph, double f_r,
         double t_c, double n_c, double beta) {
        const auto tv = to_vector(T), qv = to_vector(q), sv = to_vector(sigma);
        if (tv.size() != qv.size() || tv.size() != sv.size()) {
          fail(ErrorKind::Domain, "T, Q_i and sigma must have equal lengths");
        }
        std::vector<TemperaturePoint> pts;
        for (std::size_t i = 0; i < tv.size(); ++i) pts.push_back({tv[i], qv[i], sv[i]});
        const TemperatureFitResult r =
            fit_temperature_sweep(pts, n_ph, f_r, QuasiparticleModel::from_critical_temperature(t_c, 0.0),
                                  TlsFitParameters{0.0, n_c, beta, 0.0});
        py::dict d;
        d["parameters"] = tls_dict(r.tls);
        d["kinetic_fraction"] = r.kinetic_fraction;
        d["sigma_delta0_tls"] = r.sigma_delta0;
        d["sigma_delta_other"] = r.sigma_delta_other;
        d["sigma_kinetic_fraction"] = r.sigma_kinetic_fraction;
        d["chi2_reduced"] = r.chi2_reduced;
        return d;
      },
      py::arg("T"), py::arg("Q_i"), py::arg("sigma"), py::arg("n_ph"), py::arg("f_r"),
      py::arg("critical_temperature_K"), py::arg("n_c") = 1.0, py::arg("beta") = 0.5);

  // Files and workbench
  m.def(
      "read_trace",
      [](const std::filesystem::path& path) {
        const FrequencySweep s = read_trace(path);
        return py::make_tuple(to_array(s.frequencies), to_array(s.s21));
      },
      py::arg("path"), "Returns (frequencies_Hz, s21) from a .s2p or .csv trace");
  m.def(
      "write_csv_trace",
      [](const std::filesystem::path& path, const RealArray& freqs, const ComplexArray& s21,
         const std::string& layout) {
        FrequencySweep s;
        s.frequencies = to_vector(freqs);
        s.s21 = to_vector(s21);
        if (layout != "re_im" && layout != "mag_phase") {
          fail(ErrorKind::Usage, "layout must be re_im or mag_phase");
        }
        write_csv_trace(path, s, layout == "re_im" ? CsvLayout::ReIm : CsvLayout::MagPhase);
      },
      py::arg("path"), py::arg("frequencies"), py::arg("s21"), py::arg("layout") = "re_im");
  m.def(
      "run_power_sweep",
      [](const std::filesystem::path& manifest, unsigned jobs, std::optional<double> extra) {
        const SweepManifest man = load_manifest(manifest);
        AnalysisReport r;
        {
          py::gil_scoped_release release;
          r = run_power_sweep(man, WorkbenchOptions{jobs, extra});
        }
        r.provenance.manifest_sha256 = sha256_hex(read_text_file(manifest));
        return loads(report_to_json(r));
      },
      py::arg("manifest_path"), py::arg("jobs") = 0, py::arg("extra_line_loss_dB") = py::none());
  m.def(
      "run_temperature_sweep",
      [](const std::filesystem::path& manifest, unsigned jobs, std::optional<double> extra) {
        const SweepManifest man = load_manifest(manifest);
        AnalysisReport r;
        {
          py::gil_scoped_release release;
          r = run_temperature_sweep(man, WorkbenchOptions{jobs, extra});
        }
        r.provenance.manifest_sha256 = sha256_hex(read_text_file(manifest));
        return loads(report_to_json(r));
      },
      py::arg("manifest_path"), py::arg("jobs") = 0, py::arg("extra_line_loss_dB") = py::none());
  m.def(
      "synth_dataset",
      [](const std::filesystem::path& config, const std::filesystem::path& out,
         std::optional<std::uint64_t> seed) {
        SynthConfig c = parse_synth_config_text(read_text_file(config));
        if (seed) c.seed = *seed;
        const SynthDataset ds = synthesize_dataset(c);
        write_dataset(ds, c, out);
        return out / "manifest.json";
      },
      py::arg("config_path"), py::arg("out_dir"), py::arg("seed") = py::none(),
      "Writes a synthetic dataset and returns the manifest path");
}
