#include "cpwres/notch_model.hpp"

#include <cmath>
#include <random>

#include "cpwres/constants.hpp"
#include "cpwres/errors.hpp"

namespace cpwres {

double NotchParameters::inverse_internal_q() const {
  return 1.0 / Q_l - std::cos(phi) / Q_c_mag;
}

void validate(const NotchParameters& p) {
  const bool finite = std::isfinite(p.f_r) && std::isfinite(p.Q_l) && std::isfinite(p.Q_c_mag) &&
                      std::isfinite(p.phi) && std::isfinite(p.env_amplitude) &&
                      std::isfinite(p.env_phase) && std::isfinite(p.env_delay);
  if (!finite) fail(ErrorKind::Domain, "notch parameters must be finite");
  if (p.f_r <= 0.0 || p.Q_l <= 0.0 || p.Q_c_mag <= 0.0 || p.env_amplitude <= 0.0) {
    fail(ErrorKind::Domain, "notch parameters: f_r, Q_l, |Q_c| and a must be positive");
  }
  if (std::abs(p.phi) >= 0.5 * constants::pi) {
    fail(ErrorKind::Domain, "notch parameters: |phi| must be below pi/2");
  }
  if (!(p.inverse_internal_q() > 0.0)) {
    fail(ErrorKind::Domain, "notch parameters imply a non-positive internal Q");
  }
}

void validate(const FrequencySweep& sweep, std::size_t min_points) {
  if (sweep.frequencies.size() != sweep.s21.size()) {
    fail(ErrorKind::InvalidSweep, "frequency and S21 arrays differ in length");
  }
  if (sweep.size() < min_points) {
    fail(ErrorKind::InvalidSweep, "sweep has " + std::to_string(sweep.size()) +
                                      " points, at least " + std::to_string(min_points) +
                                      " required");
  }
  for (std::size_t i = 0; i < sweep.size(); ++i) {
    if (!std::isfinite(sweep.frequencies[i]) || !std::isfinite(sweep.s21[i].real()) ||
        !std::isfinite(sweep.s21[i].imag())) {
      fail(ErrorKind::InvalidSweep, "non-finite value at index " + std::to_string(i));
    }
    if (i > 0 && !(sweep.frequencies[i] > sweep.frequencies[i - 1])) {
      fail(ErrorKind::InvalidSweep, "frequencies not strictly increasing at index " +
                                        std::to_string(i));
    }
  }
}

Complex notch_resonator_term(const NotchParameters& p, double f) {
  const Complex denom(1.0, 2.0 * p.Q_l * (f / p.f_r - 1.0));
  return 1.0 - (p.Q_l / p.Q_c_mag) * std::polar(1.0, p.phi) / denom;
}

Complex notch_s21(const NotchParameters& p, double f) {
  const double phase = p.env_phase - 2.0 * constants::pi * f * p.env_delay;
  return std::polar(p.env_amplitude, phase) * notch_resonator_term(p, f);
}

FrequencySweep synthesize(const NotchParameters& p, std::span<const double> frequencies) {
  FrequencySweep out;
  out.frequencies.assign(frequencies.begin(), frequencies.end());
  out.s21.reserve(frequencies.size());
  for (double f : frequencies) out.s21.push_back(notch_s21(p, f));
  return out;
}

FrequencySweep add_noise(const FrequencySweep& sweep, double sigma, std::uint64_t seed) {
  if (!(sigma >= 0.0) || !std::isfinite(sigma)) {
    fail(ErrorKind::Domain, "noise sigma must be finite and >= 0");
  }
  FrequencySweep out = sweep;
  if (sigma == 0.0) return out;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, sigma);
  for (auto& z : out.s21) {
    const double re = gauss(rng);
    const double im = gauss(rng);
    z += Complex(re, im);
  }
  return out;
}

std::vector<double> linspace(double lo, double hi, std::size_t n) {
  std::vector<double> out(n);
  if (n == 1) {
    out[0] = lo;
    return out;
  }
  const double step = (hi - lo) / static_cast<double>(n - 1);
  for (std::size_t i = 0; i < n; ++i) out[i] = lo + step * static_cast<double>(i);
  out.back() = hi;
  return out;
}

std::vector<double> linear_grid(double f_r, double Q_l, double span_linewidths, std::size_t n) {
  const double half = 0.5 * span_linewidths * f_r / Q_l;
  return linspace(f_r - half, f_r + half, n);
}

}  // namespace cpwres
