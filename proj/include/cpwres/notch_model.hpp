#pragma once

#include <complex>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace cpwres {

using Complex = std::complex<double>;

/// Parameters of the notch-type S21 model
///
///   S21(f) = a e^{i alpha} e^{-2 pi i f tau}
///            * [1 - (Q_l/|Q_c|) e^{i phi} / (1 + 2 i Q_l (f/f_r - 1))].
struct NotchParameters {
  double f_r = 0.0;        // Hz
  double Q_l = 0.0;
  double Q_c_mag = 0.0;    // |Q_c|
  double phi = 0.0;        // impedance-mismatch angle, rad
  double env_amplitude = 1.0;
  double env_phase = 0.0;  // alpha, rad
  double env_delay = 0.0;  // tau, s

  /// 1/Q_i = 1/Q_l - cos(phi)/|Q_c|; may be <= 0 for unphysical inputs.
  double inverse_internal_q() const;
  double internal_q() const { return 1.0 / inverse_internal_q(); }
};

/// Throws Domain unless |phi| < pi/2, Q_l, |Q_c|, a > 0 and Q_i > 0.
void validate(const NotchParameters& p);

struct SweepMeta {
  double vna_power_dBm = 0.0;
  double temperature_K = 0.0;
  std::vector<double> attenuation_chain_dB;
  std::string label;
  std::vector<std::string> comments;
};

struct FrequencySweep {
  std::vector<double> frequencies;  // Hz, strictly increasing
  std::vector<Complex> s21;
  SweepMeta meta;

  std::size_t size() const { return frequencies.size(); }
};

/// Throws InvalidSweep unless the sweep has matching lengths, finite values,
/// strictly increasing frequencies and at least `min_points` points.
void validate(const FrequencySweep& sweep, std::size_t min_points = 16);

/// Resonator-only factor of the model (part B), no environment.
Complex notch_resonator_term(const NotchParameters& p, double f);

Complex notch_s21(const NotchParameters& p, double f);

FrequencySweep synthesize(const NotchParameters& p, std::span<const double> frequencies);

/// Adds circular complex Gaussian noise, `sigma` per quadrature. The
/// generator is a 64-bit Mersenne twister seeded with `seed`, so results are
/// reproducible for a given standard library.
FrequencySweep add_noise(const FrequencySweep& sweep, double sigma, std::uint64_t seed);

/// Linear grid of `n` points covering `span_linewidths` loaded linewidths
/// (f_r / Q_l each) centred on f_r.
std::vector<double> linear_grid(double f_r, double Q_l, double span_linewidths, std::size_t n);

std::vector<double> linspace(double lo, double hi, std::size_t n);

}  // namespace cpwres
