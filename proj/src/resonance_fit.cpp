#include "cpwres/resonance_fit.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include <Eigen/Dense>

#include "cpwres/constants.hpp"
#include "cpwres/errors.hpp"
#include "cpwres/levmar.hpp"

namespace cpwres {
namespace {

constexpr double kTwoPi = 2.0 * constants::pi;

double wrap_angle(double x) { return std::remainder(x, kTwoPi); }

double median(std::vector<double> v) {
  if (v.empty()) return 0.0;
  const auto mid = v.begin() + static_cast<std::ptrdiff_t>(v.size() / 2);
  std::nth_element(v.begin(), mid, v.end());
  double m = *mid;
  if (v.size() % 2 == 0) {
    m = 0.5 * (m + *std::max_element(v.begin(), mid));
  }
  return m;
}

std::vector<Complex> remove_delay(const FrequencySweep& sweep, double tau, double f_ref) {
  std::vector<Complex> out(sweep.size());
  for (std::size_t k = 0; k < sweep.size(); ++k) {
    out[k] = sweep.s21[k] * std::polar(1.0, kTwoPi * (sweep.frequencies[k] - f_ref) * tau);
  }
  return out;
}

double circle_cost(std::span<const Complex> points) {
  try {
    const Circle c = fit_circle(points);
    double sum = 0.0;
    for (const auto& z : points) {
      const double d = std::abs(z - c.center) - c.radius;
      sum += d * d;
    }
    return sum;
  } catch (const Error&) {
    return std::numeric_limits<double>::infinity();
  }
}

// Depth of the magnitude excursion from the (median) baseline level. The
// magnitude is delay-independent, so this is checked before any delay search.
double magnitude_excursion(std::span<const Complex> s21) {
  std::vector<double> mags(s21.size());
  std::transform(s21.begin(), s21.end(), mags.begin(), [](Complex z) { return std::abs(z); });
  const double level = median(mags);
  double excursion = 0.0;
  for (double m : mags) excursion = std::max(excursion, std::abs(m - level));
  return excursion;
}

}  // namespace

Circle fit_circle(std::span<const Complex> points) {
  const std::size_t n = points.size();
  if (n < 3) fail(ErrorKind::DegenerateGeometry, "circle fit needs at least 3 points");

  Complex mean = 0.0;
  for (const auto& z : points) mean += z;
  mean /= static_cast<double>(n);
  double spread = 0.0;
  for (const auto& z : points) spread += std::norm(z - mean);
  const double scale = std::sqrt(spread / static_cast<double>(n));
  if (!(scale > 0.0) || !std::isfinite(scale)) {
    fail(ErrorKind::DegenerateGeometry, "circle fit: coincident points");
  }

  // Centred, unit-RMS coordinates: mean(x) = mean(y) = 0 and mean(z) = 1,
  // z = x^2 + y^2. The algebraic circle A z + B x + C y + D = 0 with the
  // Taubin constraint 4 A^2 mean(z) + B^2 + C^2 = 1 reduces, after
  // eliminating D = -A mean(z), to the smallest eigenpair of
  // W^-1 S W^-1, S = cov(z, x, y), W = diag(2 sqrt(mean z), 1, 1).
  Eigen::Matrix3d S = Eigen::Matrix3d::Zero();
  double mean_z = 0.0;
  std::vector<Eigen::Vector3d> rows(n);
  for (std::size_t i = 0; i < n; ++i) {
    const Complex u = (points[i] - mean) / scale;
    rows[i] = {std::norm(u), u.real(), u.imag()};
    mean_z += rows[i][0];
  }
  mean_z /= static_cast<double>(n);
  for (auto& r : rows) {
    r[0] -= mean_z;
    S.noalias() += r * r.transpose();
  }
  S /= static_cast<double>(n);

  const Eigen::Vector3d w_inv(0.5 / std::sqrt(mean_z), 1.0, 1.0);
  const Eigen::Matrix3d M = w_inv.asDiagonal() * S * w_inv.asDiagonal();
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> eig(M);
  const Eigen::Vector3d v = w_inv.asDiagonal() * eig.eigenvectors().col(0);
  const double A = v[0], B = v[1], C = v[2];
  const double D = -A * mean_z;
  if (std::abs(A) < 1e-10 * v.norm()) {
    fail(ErrorKind::DegenerateGeometry, "circle fit: points are collinear");
  }
  const Complex center_u(-B / (2.0 * A), -C / (2.0 * A));
  const double radius_u = std::sqrt(B * B + C * C - 4.0 * A * D) / (2.0 * std::abs(A));
  if (!std::isfinite(radius_u)) fail(ErrorKind::DegenerateGeometry, "circle fit failed");
  return Circle{mean + scale * center_u, scale * radius_u};
}

double circle_residual_rms(std::span<const Complex> points, const Circle& circle) {
  if (points.empty()) return 0.0;
  double sum = 0.0;
  for (const auto& z : points) {
    const double d = std::abs(z - circle.center) - circle.radius;
    sum += d * d;
  }
  return std::sqrt(sum / static_cast<double>(points.size()));
}

double estimate_noise_sigma(std::span<const Complex> s21) {
  if (s21.size() < 3) return 0.0;
  // Magnitudes are blind to the delay rotation, whose curvature would
  // otherwise dominate complex second differences on wide spans.
  std::vector<double> parts;
  parts.reserve(s21.size());
  for (std::size_t k = 1; k + 1 < s21.size(); ++k) {
    parts.push_back(std::abs(std::abs(s21[k + 1]) - 2.0 * std::abs(s21[k]) + std::abs(s21[k - 1])));
  }
  // MAD -> Gaussian sigma, and var(second difference) = 6 sigma^2.
  return median(std::move(parts)) / 0.6744897501960817 / std::sqrt(6.0);
}

double estimate_delay(const FrequencySweep& sweep, const DelayOptions& options) {
  validate(sweep, 16);
  const std::size_t n = sweep.size();
  const double noise = estimate_noise_sigma(sweep.s21);
  const double excursion = magnitude_excursion(sweep.s21);
  std::vector<double> mags(n);
  std::transform(sweep.s21.begin(), sweep.s21.end(), mags.begin(), [](Complex z) { return std::abs(z); });
  const double level = median(mags);
  if (excursion <= options.noise_floor_factor * noise || excursion <= 1e-12 * level) {
    fail(ErrorKind::NoResonanceFound, "no resonance above the noise floor (excursion " +
                                          std::to_string(excursion) + ", noise " +
                                          std::to_string(noise) + ")");
  }
  // A dip whose minimum sits on the window edge is a tail, not a resonance.
  const std::size_t i_min =
      static_cast<std::size_t>(std::min_element(mags.begin(), mags.end()) - mags.begin());
  const std::size_t edge = std::max<std::size_t>(1, n / 50);
  if (i_min < edge || i_min >= n - edge) {
    fail(ErrorKind::NoResonanceFound, "magnitude minimum lies on the sweep edge");
  }

  const double f_lo = sweep.frequencies.front();
  const double f_hi = sweep.frequencies.back();
  const double span = f_hi - f_lo;
  const double f_ref = 0.5 * (f_lo + f_hi);

  // Group delay from the unwrapped phase slope in the outer 10% of each
  // side, with one intercept per wing so a resonance that winds around the
  // origin does not bias it.
  std::vector<double> theta(n);
  theta[0] = std::arg(sweep.s21[0]);
  for (std::size_t k = 1; k < n; ++k) {
    theta[k] = theta[k - 1] + wrap_angle(std::arg(sweep.s21[k]) - std::arg(sweep.s21[k - 1]));
  }
  const std::size_t wing = std::max<std::size_t>(3, n / 10);
  double sxy = 0.0, sxx = 0.0;
  for (const std::size_t start : {std::size_t{0}, n - wing}) {
    double fm = 0.0, tm = 0.0;
    for (std::size_t k = start; k < start + wing; ++k) {
      fm += sweep.frequencies[k] - f_ref;
      tm += theta[k];
    }
    fm /= static_cast<double>(wing);
    tm /= static_cast<double>(wing);
    for (std::size_t k = start; k < start + wing; ++k) {
      const double df = sweep.frequencies[k] - f_ref - fm;
      sxy += df * (theta[k] - tm);
      sxx += df * df;
    }
  }
  const double tau0 = -sxy / sxx / kTwoPi;
  // The resonance tilts the wing phase by at most ~0.05 d / span (d the
  // normalized dip depth), or a full turn when the circle encloses the
  // origin; the bracket scales with d so narrow cost basins stay resolved.
  const double depth = excursion / level;
  const double sigma_tau = noise / level / std::sqrt(sxx) / kTwoPi;
  const double half_width = options.bracket_factor * depth / span + 10.0 * sigma_tau;

  auto cost = [&](double tau) { return circle_cost(remove_delay(sweep, tau, f_ref)); };

  const int grid = std::max(options.grid_points | 1, 5);
  const double step = 2.0 * half_width / (grid - 1);
  int best = 0;
  double best_cost = std::numeric_limits<double>::infinity();
  for (int j = 0; j < grid; ++j) {
    const double c = cost(tau0 - half_width + j * step);
    if (c < best_cost) {
      best_cost = c;
      best = j;
    }
  }
  if (!std::isfinite(best_cost)) {
    fail(ErrorKind::NoResonanceFound, "delay search: no circle could be fitted");
  }

  // Golden-section refinement inside the neighbouring grid cells.
  const double inv_phi = 0.5 * (std::sqrt(5.0) - 1.0);
  double a = tau0 - half_width + (best - 1) * step;
  double b = tau0 - half_width + (best + 1) * step;
  double x1 = b - inv_phi * (b - a);
  double x2 = a + inv_phi * (b - a);
  double c1 = cost(x1);
  double c2 = cost(x2);
  for (int it = 0; it < 200 && (b - a) > 1e-12 * half_width; ++it) {
    if (c1 < c2) {
      b = x2;
      x2 = x1;
      c2 = c1;
      x1 = b - inv_phi * (b - a);
      c1 = cost(x1);
    } else {
      a = x1;
      x1 = x2;
      c1 = c2;
      x2 = a + inv_phi * (b - a);
      c2 = cost(x2);
    }
  }
  return 0.5 * (a + b);
}

PhaseFit fit_phase(std::span<const double> frequencies, std::span<const Complex> centered,
                   int max_iterations) {
  const std::size_t n = frequencies.size();
  if (n != centered.size()) fail(ErrorKind::InvalidSweep, "fit_phase: length mismatch");
  if (n < 8) fail(ErrorKind::InvalidSweep, "fit_phase: at least 8 points required");

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t i, std::size_t j) { return frequencies[i] < frequencies[j]; });
  std::vector<double> f(n), theta(n);
  std::vector<Complex> z(n);
  for (std::size_t k = 0; k < n; ++k) {
    f[k] = frequencies[order[k]];
    z[k] = centered[order[k]];
    theta[k] = std::arg(z[k]);
  }

  // Off-resonant direction from the sweep edges; on resonance the angle is
  // opposite to it.
  const std::size_t edge = std::max<std::size_t>(2, n / 20);
  Complex edge_sum = 0.0;
  for (std::size_t k = 0; k < edge; ++k) {
    edge_sum += z[k] / std::abs(z[k]);
    edge_sum += z[n - 1 - k] / std::abs(z[n - 1 - k]);
  }
  const double theta0_init = wrap_angle(std::arg(edge_sum) + constants::pi);

  // Relative phase psi decreases from about +pi to -pi across the resonance.
  std::vector<double> psi(n);
  psi[0] = wrap_angle(theta[0] - theta0_init);
  if (psi[0] < -0.5 * constants::pi) psi[0] += kTwoPi;
  for (std::size_t k = 1; k < n; ++k) psi[k] = psi[k - 1] + wrap_angle(theta[k] - theta[k - 1]);

  auto count_above = [&](double level) {
    return static_cast<std::size_t>(
        std::count_if(psi.begin(), psi.end(), [&](double p) { return p > level; }));
  };
  const std::size_t k_center = std::min(count_above(0.0), n - 1);
  const double fr_init = f[k_center];
  const std::size_t k_plus = std::min(count_above(0.5 * constants::pi), n - 1);
  const std::size_t k_minus = std::min(count_above(-0.5 * constants::pi), n - 1);
  double width = f[k_minus] - f[k_plus];
  if (!(width > 0.0)) width = f[std::min(k_center + 1, n - 1)] - f[k_center > 0 ? k_center - 1 : 0];
  const double ql_init = std::max(fr_init / width, 1.0);
  const double fr_scale = fr_init / ql_init;

  // p = [theta0, (f_r - fr_init)/linewidth, ln(Q_l/ql_init)]
  LeastSquaresProblem problem;
  problem.n_residuals = static_cast<Eigen::Index>(n);
  problem.residuals = [&](const Eigen::VectorXd& p, Eigen::VectorXd& r) {
    const double fr = fr_init + p[1] * fr_scale;
    const double ql = ql_init * std::exp(p[2]);
    for (std::size_t k = 0; k < n; ++k) {
      const double model = p[0] + 2.0 * std::atan(2.0 * ql * (1.0 - f[k] / fr));
      r[static_cast<Eigen::Index>(k)] = wrap_angle(theta[k] - model);
    }
  };
  problem.jacobian = [&](const Eigen::VectorXd& p, Eigen::MatrixXd& J) {
    const double fr = fr_init + p[1] * fr_scale;
    const double ql = ql_init * std::exp(p[2]);
    for (std::size_t k = 0; k < n; ++k) {
      const double x = 2.0 * ql * (1.0 - f[k] / fr);
      const double dm_dx = 2.0 / (1.0 + x * x);
      const auto row = static_cast<Eigen::Index>(k);
      J(row, 0) = -1.0;
      J(row, 1) = -dm_dx * 2.0 * ql * f[k] / (fr * fr) * fr_scale;
      J(row, 2) = -dm_dx * x;  // d x / d ln(Q_l) = x
    }
  };

  LevMarOptions opts;
  opts.max_iterations = max_iterations;
  opts.cost_floor = static_cast<double>(n) * 1e-26;
  Eigen::VectorXd p0(3);
  p0 << theta0_init, 0.0, 0.0;
  const LevMarResult res = levenberg_marquardt(problem, p0, opts);
  if (!res.converged) {
    fail(ErrorKind::NonConvergence,
         "phase fit did not converge within " + std::to_string(max_iterations) + " iterations");
  }

  PhaseFit out;
  out.f_r = fr_init + res.params[1] * fr_scale;
  out.Q_l = ql_init * std::exp(res.params[2]);
  out.theta0 = wrap_angle(res.params[0]);
  out.residual_rms = std::sqrt(res.cost / static_cast<double>(n));
  out.iterations = res.iterations;
  if (!(out.f_r >= f.front() && out.f_r <= f.back())) {
    fail(ErrorKind::NoResonanceFound, "fitted resonance lies outside the sweep window");
  }
  return out;
}

NotchFitResult fit_notch(const FrequencySweep& sweep, const NotchFitOptions& options) {
  validate(sweep, 16);
  const std::size_t n = sweep.size();
  const double f_lo = sweep.frequencies.front();
  const double f_hi = sweep.frequencies.back();
  const double f_ref = 0.5 * (f_lo + f_hi);
  const double span = f_hi - f_lo;

  const double tau_init = estimate_delay(sweep, options.delay);
  const std::vector<Complex> corrected = remove_delay(sweep, tau_init, 0.0);
  const Circle circle = fit_circle(corrected);

  std::vector<Complex> centered(n);
  for (std::size_t k = 0; k < n; ++k) centered[k] = corrected[k] - circle.center;
  const PhaseFit phase = fit_phase(sweep.frequencies, centered, options.max_iterations);

  // Off-resonant point: diametrically opposite the on-resonance point.
  const Complex off_resonant = circle.center - circle.radius * std::polar(1.0, phase.theta0);
  const Complex center_n = circle.center / off_resonant;
  const double radius_n = circle.radius / std::abs(off_resonant);

  NotchParameters init;
  init.f_r = phase.f_r;
  init.Q_l = phase.Q_l;
  init.Q_c_mag = phase.Q_l / (2.0 * radius_n);
  init.phi = std::arg(1.0 - center_n);
  init.env_amplitude = std::abs(off_resonant);
  init.env_phase = std::arg(off_resonant);
  init.env_delay = tau_init;

  // Internal parameters, chosen so each is O(1) and alpha decorrelates from tau:
  //   u = (f_r - fr0) / (fr0/ql0), v = ln(Q_l/ql0), w = ln(Q_c/qc0), phi,
  //   s = ln(a/a0), alpha' = alpha - 2 pi f_ref tau, t = (tau - tau0)/tau_scale.
  const double fr0 = init.f_r;
  const double ql0 = init.Q_l;
  const double qc0 = init.Q_c_mag;
  const double a0 = init.env_amplitude;
  const double tau_scale = 1.0 / (kTwoPi * span);
  const double fr_scale = fr0 / ql0;

  struct Physical {
    double fr, ql, qc, phi, a, alpha_ref, tau;
  };
  auto unpack = [&](const Eigen::VectorXd& p) {
    return Physical{fr0 + p[0] * fr_scale, ql0 * std::exp(p[1]), qc0 * std::exp(p[2]), p[3],
                    a0 * std::exp(p[4]), p[5], tau_init + p[6] * tau_scale};
  };

  const auto& freqs = sweep.frequencies;
  const auto& data = sweep.s21;
  LeastSquaresProblem problem;
  problem.n_residuals = static_cast<Eigen::Index>(2 * n);
  problem.residuals = [&](const Eigen::VectorXd& p, Eigen::VectorXd& r) {
    const Physical q = unpack(p);
    const Complex coupling = (q.ql / q.qc) * std::polar(1.0, q.phi);
    for (std::size_t k = 0; k < n; ++k) {
      const double df = freqs[k] - f_ref;
      const Complex env = std::polar(q.a, q.alpha_ref - kTwoPi * df * q.tau);
      const Complex denom(1.0, 2.0 * q.ql * (freqs[k] / q.fr - 1.0));
      const Complex diff = env * (1.0 - coupling / denom) - data[k];
      r[static_cast<Eigen::Index>(2 * k)] = diff.real();
      r[static_cast<Eigen::Index>(2 * k + 1)] = diff.imag();
    }
  };
  problem.jacobian = [&](const Eigen::VectorXd& p, Eigen::MatrixXd& J) {
    const Physical q = unpack(p);
    const Complex e_phi = std::polar(1.0, q.phi);
    const Complex I(0.0, 1.0);
    for (std::size_t k = 0; k < n; ++k) {
      const double f = freqs[k];
      const double df = f - f_ref;
      const Complex env = std::polar(q.a, q.alpha_ref - kTwoPi * df * q.tau);
      const Complex denom(1.0, 2.0 * q.ql * (f / q.fr - 1.0));
      const Complex g = (q.ql / q.qc) * e_phi / denom;  // 1 - B
      const Complex s = env * (1.0 - g);
      Complex d[7];
      // dB/d f_r = (Q_l/Q_c) e^{i phi} (-2 i Q_l f / f_r^2) / D^2
      d[0] = env * (q.ql / q.qc) * e_phi * (-2.0 * I * q.ql * f / (q.fr * q.fr)) /
             (denom * denom) * fr_scale;
      // dB/dQ_l = -e^{i phi} / (Q_c D^2)
      d[1] = env * (-e_phi / (q.qc * denom * denom)) * q.ql;
      // dB/dQ_c = g / Q_c
      d[2] = env * g;
      d[3] = env * (-I * g);
      d[4] = s;
      d[5] = I * s;
      d[6] = -I * kTwoPi * df * s * tau_scale;
      for (int j = 0; j < 7; ++j) {
        J(static_cast<Eigen::Index>(2 * k), j) = d[j].real();
        J(static_cast<Eigen::Index>(2 * k + 1), j) = d[j].imag();
      }
    }
  };

  Eigen::VectorXd p0 = Eigen::VectorXd::Zero(7);
  p0[3] = init.phi;
  p0[5] = init.env_phase - kTwoPi * f_ref * tau_init;
  p0[5] = wrap_angle(p0[5]);
  double data_scale = 0.0;
  for (const auto& z : data) data_scale = std::max(data_scale, std::abs(z));
  LevMarOptions opts;
  opts.max_iterations = options.max_iterations;
  opts.cost_floor = static_cast<double>(2 * n) * std::pow(1e-13 * data_scale, 2);
  const LevMarResult res = levenberg_marquardt(problem, p0, opts);
  const Physical q = unpack(res.params);

  NotchFitResult out;
  out.params.f_r = q.fr;
  out.params.Q_l = q.ql;
  out.params.Q_c_mag = q.qc;
  out.params.phi = q.phi;
  out.params.env_amplitude = q.a;
  out.params.env_delay = q.tau;
  out.params.env_phase = wrap_angle(q.alpha_ref + kTwoPi * f_ref * q.tau);
  const double inv_qi = out.params.inverse_internal_q();
  out.Q_i = 1.0 / inv_qi;

  out.quality.n_points = n;
  out.quality.iterations = res.iterations;
  out.quality.residual_rms = std::sqrt(res.cost / static_cast<double>(n));
  out.quality.converged = res.converged && inv_qi > 0.0 &&
                          std::abs(q.phi) < 0.5 * constants::pi && std::isfinite(res.cost);

  // One-sigma uncertainties from the linearised covariance scaled by the
  // residual variance, propagated to the physical parameters.
  const double dof = static_cast<double>(2 * n) - 7.0;
  const Eigen::MatrixXd cov = linearized_covariance(res.jacobian, res.cost / dof);
  Eigen::MatrixXd G = Eigen::MatrixXd::Zero(8, 7);
  G(0, 0) = fr_scale;
  G(1, 1) = q.ql;
  G(2, 2) = q.qc;
  G(3, 3) = 1.0;
  G(4, 4) = q.a;
  G(5, 5) = 1.0;
  G(5, 6) = kTwoPi * f_ref * tau_scale;
  G(6, 6) = tau_scale;
  const double qi2 = out.Q_i * out.Q_i;
  G(7, 1) = qi2 / q.ql;
  G(7, 2) = -qi2 * std::cos(q.phi) / q.qc;
  G(7, 3) = -qi2 * std::sin(q.phi) / q.qc;
  const Eigen::VectorXd sigma = (G * cov * G.transpose()).diagonal().cwiseMax(0.0).cwiseSqrt();
  out.uncertainties = {sigma[0], sigma[1], sigma[2], sigma[3],
                       sigma[4], sigma[5], sigma[6], sigma[7]};
  return out;
}

}  // namespace cpwres
