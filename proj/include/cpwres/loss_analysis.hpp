#pragma once

#include <complex>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "cpwres/resonance_fit.hpp"

namespace cpwres {

// ---------------------------------------------------------------------------
// Photon number and power budget

struct PowerBudget {
  double vna_power_dBm = 0.0;
  double fridge_attenuation_dB = 0.0;
  double room_temp_attenuation_dB = 0.0;
  double extra_line_loss_dB = 0.0;  // unreported cable/connector loss

  double total_attenuation_dB() const {
    return fridge_attenuation_dB + room_temp_attenuation_dB + extra_line_loss_dB;
  }
  /// Power at the resonator input, in watts.
  double input_power_W() const;
};

void validate(const PowerBudget& budget);

/// <n_ph> = (2 Q_c / w0) (Q_i / (Q_i + Q_c))^2 P_in / (hbar w0), w0 = 2 pi f_r.
double mean_photon_number(double input_power_W, double f_r, double Q_i, double Q_c);
double mean_photon_number(const PowerBudget& budget, const NotchFitResult& fit);

struct PowerPartition {
  double reflected_W = 0.0;
  double transmitted_W = 0.0;
  double absorbed_W = 0.0;
};

/// Splits P_in into reflected, transmitted and absorbed parts. Throws
/// NonPhysicalScattering when |S11|^2 + |S21|^2 > 1 + 1e-9.
PowerPartition power_partition(double input_power_W, Complex s11, Complex s21);

// ---------------------------------------------------------------------------
// Loss models. All losses are dimensionless (1/Q units).

struct TlsFitParameters {
  double delta0_tls = 0.0;   // 1/Q_TLS^0
  double n_c = 1.0;          // critical photon number
  double beta = 0.5;
  double delta_other = 0.0;
};

struct QuasiparticleModel {
  double gap_J = 0.0;                 // Delta, temperature independent
  double kinetic_fraction = 0.0;      // L_k / (L_m + L_k)
  double density_of_states = 1.0;     // D(E_F); cancels in the thermal closure

  /// Delta = 1.76 k_B T_c.
  static QuasiparticleModel from_critical_temperature(double T_c, double kinetic_fraction);
};

/// Collects non-fatal model warnings (e.g. evaluations outside the
/// low-temperature validity range).
struct Diagnostics {
  std::vector<std::string> warnings;
};

/// delta0 tanh(h f_r / 2 k_B T) / sqrt(1 + (n/n_c)^beta).
double tls_loss(double T, double n_ph, double f_r, const TlsFitParameters& p);

/// Low-temperature Mattis-Bardeen loss
///   (2 gamma / pi) e^{-zeta} sinh(xi) K0(xi)
///     / [1 - e^{-zeta} (sqrt(2 pi / zeta) - 2 e^{-xi} I0(xi))],
/// zeta = Delta / k_B T, xi = hbar w / 2 k_B T. Warns when zeta <= 1.
double qp_loss_mattis_bardeen(double T, double f_r, const QuasiparticleModel& q,
                              Diagnostics* diag = nullptr);

/// Density form (alpha / pi) sqrt(2 Delta / hbar f_r) n_qp / (D Delta) with the
/// thermal closure n_qp = 2 D sqrt(2 pi k_B T Delta) e^{-Delta / k_B T}.
double qp_loss_density_form(double T, double f_r, const QuasiparticleModel& q,
                            Diagnostics* diag = nullptr);

/// delta_TLS + delta_qp (Mattis-Bardeen) + delta_other.
double total_loss(double T, double n_ph, double f_r, const TlsFitParameters& p,
                  const QuasiparticleModel& q);

/// Marker for a lossless resonator, whose Q is unbounded.
struct InfiniteQ {};
using QualityFactor = std::variant<double, InfiniteQ>;

QualityFactor quality_factor_from_loss(double loss);

// ---------------------------------------------------------------------------
// Frequency shifts

/// Fractional TLS shift (Delta f / f_r):
///   (delta0/pi) [Re psi(1/2 + i y) - ln y],  y = h f_r / (2 pi k_B T).
/// The argument 1/2 - h f/(2 pi i k_B T) equals 1/2 + i y.
double frequency_shift_tls(double T, double f_r, double delta0_tls);

/// Absolute quasiparticle shift in Hz, -(1/2) alpha f_r zeta / sinh(zeta).
double frequency_shift_qp(double T, double f_r, const QuasiparticleModel& q);

/// f_r * frequency_shift_tls + frequency_shift_qp, in Hz. With `T_ref`, the
/// value at T_ref is subtracted (data are referenced to the coldest point).
double total_frequency_shift(double T, double f_r, double delta0_tls, const QuasiparticleModel& q,
                             std::optional<double> T_ref = std::nullopt);

// ---------------------------------------------------------------------------
// Sweep fits

struct PowerSweepPoint {
  double n_ph = 0.0;
  double Q_i = 0.0;
  double sigma = 0.0;  // one-sigma uncertainty of Q_i
};

struct TlsFitResult {
  TlsFitParameters params;
  TlsFitParameters uncertainties;
  double chi2_reduced = 0.0;
  std::size_t n_points = 0;
  int iterations = 0;
  bool converged = false;
};

/// Weighted fit of 1/Q_i(n) = tls_loss(T, n) + delta_other. Bounds:
/// beta in (0, 2], n_c in [1e-2, 1e10], losses in [0, 1e-2]. Throws
/// IllConditioned when n_ph spans fewer than 2 decades and NonConvergence
/// if no start converges.
TlsFitResult fit_tls_power_sweep(std::span<const PowerSweepPoint> points, double T, double f_r);

struct TemperaturePoint {
  double T = 0.0;
  double Q_i = 0.0;
  double sigma = 0.0;
  double n_ph = -1.0;  // per-point photon number; negative means use the sweep value
};

struct TemperatureFitResult {
  TlsFitParameters tls;  // n_c, beta copied from the fixed saturation input
  double kinetic_fraction = 0.0;
  double sigma_delta0 = 0.0;
  double sigma_delta_other = 0.0;
  double sigma_kinetic_fraction = 0.0;
  double chi2_reduced = 0.0;
  std::size_t n_points = 0;
};

/// Joint fit of delta0_tls, delta_other and the kinetic fraction at fixed gap
/// and fixed TLS saturation (n_c, beta taken from `saturation`). The model is
/// linear in the three unknowns and is solved as a non-negative weighted
/// least-squares problem. Throws IllConditioned when every point is below
/// 0.1 T_c (quasiparticle term unresolvable).
TemperatureFitResult fit_temperature_sweep(std::span<const TemperaturePoint> points, double n_ph,
                                           double f_r, const QuasiparticleModel& q,
                                           const TlsFitParameters& saturation);

}  // namespace cpwres
