#pragma once

#include <complex>
#include <span>
#include <vector>

#include "cpwres/notch_model.hpp"

namespace cpwres {

struct Circle {
  Complex center;
  double radius = 0.0;
};

/// Algebraic (Taubin) circle fit. Needs at least 3 points; throws
/// DegenerateGeometry for coincident or collinear points.
Circle fit_circle(std::span<const Complex> points);

/// RMS geometric distance of the points from the circle.
double circle_residual_rms(std::span<const Complex> points, const Circle& circle);

struct DelayOptions {
  int grid_points = 401;         // odd, so the bracket centre is sampled
  double bracket_factor = 1.5;   // half-width = factor * depth / span + 10 sigma_tau
  double noise_floor_factor = 5.0;
};

/// Electrical delay tau minimising the circle residual of S21 e^{+2 pi i f tau}.
///
/// Bracket: centred on the group delay from the unwrapped phase slope of the
/// outer 10% of each side; half-width 1.5 d / span + 10 sigma_tau, where d is
/// the magnitude dip depth relative to the baseline and sigma_tau the noise
/// limit of the slope. Coarse grid scan then golden-section refinement.
/// Throws NoResonanceFound if the magnitude excursion is below 5 x the
/// estimated per-quadrature noise or the magnitude minimum lies in the outer
/// 2% of the window.
double estimate_delay(const FrequencySweep& sweep, const DelayOptions& options = {});

/// Per-quadrature noise estimate from second differences of |S21| (robust MAD).
double estimate_noise_sigma(std::span<const Complex> s21);

struct PhaseFit {
  double f_r = 0.0;
  double Q_l = 0.0;
  double theta0 = 0.0;
  double residual_rms = 0.0;
  int iterations = 0;
};

/// Fits theta(f) = theta0 + 2 atan(2 Q_l (1 - f/f_r)) to the angles of data
/// already translated so that the resonance circle is centred on the origin.
/// Input order is irrelevant. Throws NonConvergence after `max_iterations`
/// and NoResonanceFound if f_r leaves the sweep span.
PhaseFit fit_phase(std::span<const double> frequencies, std::span<const Complex> centered,
                   int max_iterations = 200);

struct NotchUncertainties {
  double f_r = 0.0;
  double Q_l = 0.0;
  double Q_c_mag = 0.0;
  double phi = 0.0;
  double env_amplitude = 0.0;
  double env_phase = 0.0;
  double env_delay = 0.0;
  double Q_i = 0.0;
};

struct FitQuality {
  double residual_rms = 0.0;
  std::size_t n_points = 0;
  bool converged = false;
  int iterations = 0;
};

struct NotchFitResult {
  NotchParameters params;
  double Q_i = 0.0;
  NotchUncertainties uncertainties;
  FitQuality quality;
};

struct NotchFitOptions {
  DelayOptions delay;
  int max_iterations = 200;
};

/// Full notch fit: delay, circle, phase, environment, then a simultaneous
/// damped least-squares refinement of all seven parameters on the complex
/// residuals. Throws NoResonanceFound when the window has no resolvable dip.
/// Non-convergence of the final refinement is reported through
/// quality.converged = false rather than thrown.
NotchFitResult fit_notch(const FrequencySweep& sweep, const NotchFitOptions& options = {});

}  // namespace cpwres
