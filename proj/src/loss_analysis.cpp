#include "cpwres/loss_analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include <Eigen/Dense>

#include "cpwres/constants.hpp"
#include "cpwres/errors.hpp"
#include "cpwres/levmar.hpp"
#include "cpwres/special_functions.hpp"

namespace cpwres {
namespace {

using constants::h;
using constants::hbar;
using constants::k_B;
using constants::pi;

void require_positive(double x, const char* what) {
  if (!std::isfinite(x) || x <= 0.0) fail(ErrorKind::Domain, std::string(what) + " must be > 0");
}

void warn_validity(double zeta, Diagnostics* diag) {
  if (diag && zeta <= 1.0) {
    diag->warnings.push_back("ValidityRange: Delta/k_B T = " + std::to_string(zeta) +
                             " <= 1, low-temperature quasiparticle model not valid");
  }
}

// zeta / sinh(zeta) without overflow.
double zeta_over_sinh(double zeta) {
  if (zeta < 1e-8) return 1.0;
  const double e = std::exp(-zeta);
  return 2.0 * zeta * e / ((1.0 - e) * (1.0 + e));
}

}  // namespace

double PowerBudget::input_power_W() const {
  return std::pow(10.0, (vna_power_dBm - total_attenuation_dB() - 30.0) / 10.0);
}

void validate(const PowerBudget& budget) {
  if (!std::isfinite(budget.vna_power_dBm)) fail(ErrorKind::Domain, "VNA power must be finite");
  for (double att : {budget.fridge_attenuation_dB, budget.room_temp_attenuation_dB,
                     budget.extra_line_loss_dB}) {
    if (!std::isfinite(att) || att < 0.0) {
      fail(ErrorKind::Domain, "attenuations must be finite and >= 0 dB");
    }
  }
}

double mean_photon_number(double input_power_W, double f_r, double Q_i, double Q_c) {
  require_positive(f_r, "f_r");
  require_positive(Q_i, "Q_i");
  require_positive(Q_c, "Q_c");
  if (!std::isfinite(input_power_W) || input_power_W < 0.0) {
    fail(ErrorKind::Domain, "input power must be finite and >= 0");
  }
  const double w0 = 2.0 * pi * f_r;
  const double ratio = Q_i / (Q_i + Q_c);
  return 2.0 * Q_c / w0 * ratio * ratio * input_power_W / (hbar * w0);
}

double mean_photon_number(const PowerBudget& budget, const NotchFitResult& fit) {
  validate(budget);
  return mean_photon_number(budget.input_power_W(), fit.params.f_r, fit.Q_i, fit.params.Q_c_mag);
}

PowerPartition power_partition(double input_power_W, Complex s11, Complex s21) {
  if (!std::isfinite(input_power_W) || input_power_W < 0.0) {
    fail(ErrorKind::Domain, "input power must be finite and >= 0");
  }
  const double r = std::norm(s11);
  const double t = std::norm(s21);
  if (!(r + t <= 1.0 + 1e-9)) {
    fail(ErrorKind::NonPhysicalScattering,
         "|S11|^2 + |S21|^2 = " + std::to_string(r + t) + " exceeds 1");
  }
  PowerPartition out;
  out.reflected_W = input_power_W * r;
  out.transmitted_W = input_power_W * t;
  const double absorbed = 1.0 - t - r;
  out.absorbed_W = absorbed < 0.0 ? 0.0 : input_power_W * absorbed;
  return out;
}

QuasiparticleModel QuasiparticleModel::from_critical_temperature(double T_c,
                                                                 double kinetic_fraction) {
  require_positive(T_c, "T_c");
  QuasiparticleModel q;
  q.gap_J = constants::bcs_gap_ratio * k_B * T_c;
  q.kinetic_fraction = kinetic_fraction;
  return q;
}

double tls_loss(double T, double n_ph, double f_r, const TlsFitParameters& p) {
  require_positive(T, "temperature");
  require_positive(f_r, "f_r");
  if (!(n_ph >= 0.0)) fail(ErrorKind::Domain, "photon number must be >= 0");
  const double thermal = std::tanh(h * f_r / (2.0 * k_B * T));
  const double saturation = std::sqrt(1.0 + std::pow(n_ph / p.n_c, p.beta));
  return p.delta0_tls * thermal / saturation;
}

double qp_loss_mattis_bardeen(double T, double f_r, const QuasiparticleModel& q,
                              Diagnostics* diag) {
  require_positive(T, "temperature");
  require_positive(f_r, "f_r");
  require_positive(q.gap_J, "gap");
  const double zeta = q.gap_J / (k_B * T);
  const double xi = hbar * 2.0 * pi * f_r / (2.0 * k_B * T);
  warn_validity(zeta, diag);
  if (zeta > 700.0) return 0.0;  // e^{-zeta} below the double range
  const double e_zeta = std::exp(-zeta);
  const double numerator = e_zeta * std::sinh(xi) * special::bessel_k0(xi);
  const double denominator =
      1.0 - e_zeta * (std::sqrt(2.0 * pi / zeta) - 2.0 * std::exp(-xi) * special::bessel_i0(xi));
  return 2.0 * q.kinetic_fraction / pi * numerator / denominator;
}

double qp_loss_density_form(double T, double f_r, const QuasiparticleModel& q,
                            Diagnostics* diag) {
  require_positive(T, "temperature");
  require_positive(f_r, "f_r");
  require_positive(q.gap_J, "gap");
  require_positive(q.density_of_states, "density of states");
  const double delta = q.gap_J;
  const double zeta = delta / (k_B * T);
  warn_validity(zeta, diag);
  const double n_qp =
      2.0 * q.density_of_states * std::sqrt(2.0 * pi * k_B * T * delta) * std::exp(-zeta);
  return q.kinetic_fraction / pi * std::sqrt(2.0 * delta / (hbar * f_r)) * n_qp /
         (q.density_of_states * delta);
}

double total_loss(double T, double n_ph, double f_r, const TlsFitParameters& p,
                  const QuasiparticleModel& q) {
  return tls_loss(T, n_ph, f_r, p) + qp_loss_mattis_bardeen(T, f_r, q) + p.delta_other;
}

QualityFactor quality_factor_from_loss(double loss) {
  if (!std::isfinite(loss) || loss < 0.0) fail(ErrorKind::Domain, "loss must be finite and >= 0");
  if (loss == 0.0) return InfiniteQ{};
  return 1.0 / loss;
}

double frequency_shift_tls(double T, double f_r, double delta0_tls) {
  require_positive(T, "temperature");
  require_positive(f_r, "f_r");
  const double y = h * f_r / (2.0 * pi * k_B * T);
  return delta0_tls / pi * (special::digamma_real_part_half_plus_iy(y) - std::log(y));
}

double frequency_shift_qp(double T, double f_r, const QuasiparticleModel& q) {
  require_positive(T, "temperature");
  require_positive(f_r, "f_r");
  require_positive(q.gap_J, "gap");
  const double zeta = q.gap_J / (k_B * T);
  return -0.5 * q.kinetic_fraction * f_r * zeta_over_sinh(zeta);
}

double total_frequency_shift(double T, double f_r, double delta0_tls, const QuasiparticleModel& q,
                             std::optional<double> T_ref) {
  auto shift = [&](double temp) {
    return f_r * frequency_shift_tls(temp, f_r, delta0_tls) + frequency_shift_qp(temp, f_r, q);
  };
  const double value = shift(T);
  return T_ref ? value - shift(*T_ref) : value;
}

// ---------------------------------------------------------------------------

namespace {

constexpr double kNcMin = 1e-2;
constexpr double kNcMax = 1e10;
constexpr double kBetaMin = 1e-3;
constexpr double kBetaMax = 2.0;
constexpr double kLossMax = 1e-2;

struct TlsData {
  std::vector<double> n, y, sigma_y;
  double thermal = 0.0;
};

double tls_model(const TlsData& d, std::size_t k, double delta0, double n_c, double beta,
                 double delta_other) {
  return delta0 * d.thermal / std::sqrt(1.0 + std::pow(d.n[k] / n_c, beta)) + delta_other;
}

// Weighted non-negative least squares for y = a * basis + b, a, b >= 0.
// Returns chi^2 and sets (a, b).
double linear_two_term(const TlsData& d, const std::vector<double>& basis, double& a, double& b) {
  double s_bb = 0, s_b1 = 0, s_11 = 0, s_by = 0, s_1y = 0;
  for (std::size_t k = 0; k < d.n.size(); ++k) {
    const double w = 1.0 / (d.sigma_y[k] * d.sigma_y[k]);
    s_bb += w * basis[k] * basis[k];
    s_b1 += w * basis[k];
    s_11 += w;
    s_by += w * basis[k] * d.y[k];
    s_1y += w * d.y[k];
  }
  const double det = s_bb * s_11 - s_b1 * s_b1;
  a = det != 0.0 ? (s_by * s_11 - s_b1 * s_1y) / det : 0.0;
  b = det != 0.0 ? (s_bb * s_1y - s_b1 * s_by) / det : 0.0;
  if (a < 0.0 || det == 0.0) {
    a = 0.0;
    b = s_1y / s_11;
  }
  if (b < 0.0) {
    b = 0.0;
    a = s_bb > 0.0 ? std::max(s_by / s_bb, 0.0) : 0.0;
  }
  double chi2 = 0.0;
  for (std::size_t k = 0; k < d.n.size(); ++k) {
    const double r = (a * basis[k] + b - d.y[k]) / d.sigma_y[k];
    chi2 += r * r;
  }
  return chi2;
}

}  // namespace

TlsFitResult fit_tls_power_sweep(std::span<const PowerSweepPoint> points, double T, double f_r) {
  require_positive(T, "temperature");
  require_positive(f_r, "f_r");
  if (points.size() < 6) {
    fail(ErrorKind::Domain, "TLS power fit needs at least 6 points, got " +
                                std::to_string(points.size()));
  }
  TlsData d;
  d.thermal = std::tanh(h * f_r / (2.0 * k_B * T));
  double n_min = std::numeric_limits<double>::infinity(), n_max = 0.0;
  std::size_t i_min = 0, i_max = 0;
  for (std::size_t k = 0; k < points.size(); ++k) {
    const auto& pt = points[k];
    if (!(pt.n_ph > 0.0) || !(pt.Q_i > 0.0) || !(pt.sigma > 0.0) || !std::isfinite(pt.n_ph) ||
        !std::isfinite(pt.Q_i) || !std::isfinite(pt.sigma)) {
      fail(ErrorKind::Domain, "power sweep points need positive finite n_ph, Q_i and sigma");
    }
    d.n.push_back(pt.n_ph);
    d.y.push_back(1.0 / pt.Q_i);
    d.sigma_y.push_back(pt.sigma / (pt.Q_i * pt.Q_i));
    if (pt.n_ph < n_min) { n_min = pt.n_ph; i_min = k; }
    if (pt.n_ph > n_max) { n_max = pt.n_ph; i_max = k; }
  }
  if (std::log10(n_max / n_min) < 2.0) {
    fail(ErrorKind::IllConditioned,
         "photon numbers span fewer than 2 decades; beta is not identifiable");
  }
  const std::size_t m = d.n.size();

  // p = [ln delta0, ln n_c, beta, delta_other]
  LeastSquaresProblem problem;
  problem.n_residuals = static_cast<Eigen::Index>(m);
  problem.residuals = [&](const Eigen::VectorXd& p, Eigen::VectorXd& r) {
    const double delta0 = std::exp(p[0]), n_c = std::exp(p[1]);
    for (std::size_t k = 0; k < m; ++k) {
      r[static_cast<Eigen::Index>(k)] =
          (tls_model(d, k, delta0, n_c, p[2], p[3]) - d.y[k]) / d.sigma_y[k];
    }
  };
  problem.jacobian = [&](const Eigen::VectorXd& p, Eigen::MatrixXd& J) {
    const double delta0 = std::exp(p[0]), n_c = std::exp(p[1]), beta = p[2];
    for (std::size_t k = 0; k < m; ++k) {
      const double s = std::pow(d.n[k] / n_c, beta);
      const double g = 1.0 / std::sqrt(1.0 + s);
      const double g3 = g * g * g;
      const double amp = delta0 * d.thermal;
      const auto row = static_cast<Eigen::Index>(k);
      J(row, 0) = amp * g / d.sigma_y[k];
      J(row, 1) = 0.5 * amp * beta * s * g3 / d.sigma_y[k];
      J(row, 2) = -0.5 * amp * s * std::log(d.n[k] / n_c) * g3 / d.sigma_y[k];
      J(row, 3) = 1.0 / d.sigma_y[k];
    }
  };
  problem.project = [](Eigen::VectorXd& p) {
    p[0] = std::clamp(p[0], std::log(1e-14), std::log(kLossMax));
    p[1] = std::clamp(p[1], std::log(kNcMin), std::log(kNcMax));
    p[2] = std::clamp(p[2], kBetaMin, kBetaMax);
    p[3] = std::clamp(p[3], 0.0, kLossMax);
  };

  // Start 1: delta_other from the highest-power point, delta0 from the
  // lowest-power point corrected for tanh, n_c at the geometric mean, beta 0.5.
  std::vector<Eigen::VectorXd> starts;
  {
    const double other0 = d.y[i_max];
    double delta0 = (d.y[i_min] - other0) / d.thermal;
    if (!(delta0 > 0.0)) delta0 = d.y[i_min] / d.thermal;
    Eigen::VectorXd p(4);
    p << std::log(delta0), 0.5 * (std::log(n_min) + std::log(n_max)), 0.5, other0;
    starts.push_back(p);
  }
  // Start 2: best point of a (ln n_c, beta) grid with the two linear
  // amplitudes solved exactly at each node.
  {
    double best = std::numeric_limits<double>::infinity();
    Eigen::VectorXd best_p(4);
    std::vector<double> basis(m);
    for (int i = 0; i <= 48; ++i) {
      const double ln_nc = std::log(kNcMin) + (std::log(kNcMax) - std::log(kNcMin)) * i / 48.0;
      for (int j = 1; j <= 20; ++j) {
        const double beta = 0.1 * j;
        for (std::size_t k = 0; k < m; ++k) {
          basis[k] = d.thermal / std::sqrt(1.0 + std::pow(d.n[k] / std::exp(ln_nc), beta));
        }
        double a = 0.0, b = 0.0;
        const double chi2 = linear_two_term(d, basis, a, b);
        if (chi2 < best && a > 0.0) {
          best = chi2;
          best_p << std::log(a), ln_nc, beta, b;
        }
      }
    }
    if (std::isfinite(best)) starts.push_back(best_p);
  }

  LevMarOptions opts;
  opts.max_iterations = 500;
  std::optional<LevMarResult> best;
  for (const auto& p0 : starts) {
    LevMarResult res = levenberg_marquardt(problem, p0, opts);
    if (!std::isfinite(res.cost)) continue;
    const bool better = !best || (res.converged && !best->converged) ||
                        (res.converged == best->converged && res.cost < best->cost);
    if (better) best = std::move(res);
  }
  if (!best || !best->converged) {
    fail(ErrorKind::NonConvergence, "TLS power-sweep fit did not converge");
  }

  TlsFitResult out;
  out.params.delta0_tls = std::exp(best->params[0]);
  out.params.n_c = std::exp(best->params[1]);
  out.params.beta = best->params[2];
  out.params.delta_other = best->params[3];
  out.n_points = m;
  out.iterations = best->iterations;
  out.converged = true;
  const double dof = static_cast<double>(m) - 4.0;
  out.chi2_reduced = dof > 0.0 ? best->cost / dof : 0.0;
  const Eigen::MatrixXd cov =
      linearized_covariance(best->jacobian, dof > 0.0 ? out.chi2_reduced : 1.0);
  out.uncertainties.delta0_tls = out.params.delta0_tls * std::sqrt(std::max(cov(0, 0), 0.0));
  out.uncertainties.n_c = out.params.n_c * std::sqrt(std::max(cov(1, 1), 0.0));
  out.uncertainties.beta = std::sqrt(std::max(cov(2, 2), 0.0));
  out.uncertainties.delta_other = std::sqrt(std::max(cov(3, 3), 0.0));
  return out;
}

TemperatureFitResult fit_temperature_sweep(std::span<const TemperaturePoint> points, double n_ph,
                                           double f_r, const QuasiparticleModel& q,
                                           const TlsFitParameters& saturation) {
  require_positive(f_r, "f_r");
  require_positive(q.gap_J, "gap");
  if (!(n_ph >= 0.0)) fail(ErrorKind::Domain, "photon number must be >= 0");
  if (points.size() < 8) {
    fail(ErrorKind::Domain, "temperature fit needs at least 8 points, got " +
                                std::to_string(points.size()));
  }
  const double T_c = q.gap_J / (constants::bcs_gap_ratio * k_B);
  double T_max = 0.0;
  for (const auto& pt : points) {
    if (!(pt.T > 0.0) || !(pt.Q_i > 0.0) || !(pt.sigma > 0.0) || !std::isfinite(pt.T) ||
        !std::isfinite(pt.Q_i) || !std::isfinite(pt.sigma)) {
      fail(ErrorKind::Domain, "temperature points need positive finite T, Q_i and sigma");
    }
    T_max = std::max(T_max, pt.T);
  }
  if (T_max < 0.1 * T_c) {
    fail(ErrorKind::IllConditioned,
         "all temperatures are below 0.1 T_c; the quasiparticle term is unresolvable");
  }

  const std::size_t m = points.size();
  QuasiparticleModel unit = q;
  unit.kinetic_fraction = 1.0;
  TlsFitParameters unit_tls = saturation;
  unit_tls.delta0_tls = 1.0;
  // Weighted design matrix, columns: delta0, delta_other, gamma.
  Eigen::MatrixXd A(static_cast<Eigen::Index>(m), 3);
  Eigen::VectorXd b(static_cast<Eigen::Index>(m));
  for (std::size_t k = 0; k < m; ++k) {
    const auto& pt = points[k];
    const double w = pt.Q_i * pt.Q_i / pt.sigma;  // 1 / sigma_loss
    const auto row = static_cast<Eigen::Index>(k);
    A(row, 0) = w * tls_loss(pt.T, pt.n_ph >= 0.0 ? pt.n_ph : n_ph, f_r, unit_tls);
    A(row, 1) = w;
    A(row, 2) = w * qp_loss_mattis_bardeen(pt.T, f_r, unit);
    b[row] = w / pt.Q_i;
  }

  // Column scaling for conditioning.
  const Eigen::Vector3d scale = A.colwise().norm().transpose().cwiseMax(1e-300);
  const Eigen::MatrixXd As = A * scale.cwiseInverse().asDiagonal();

  // Exact NNLS by enumerating the 8 active sets of the three constraints.
  double best_chi2 = std::numeric_limits<double>::infinity();
  Eigen::Vector3d best_x = Eigen::Vector3d::Zero();
  for (int mask = 0; mask < 8; ++mask) {
    std::vector<Eigen::Index> free_cols;
    for (int j = 0; j < 3; ++j) {
      if (mask & (1 << j)) free_cols.push_back(j);
    }
    Eigen::Vector3d x = Eigen::Vector3d::Zero();
    if (!free_cols.empty()) {
      Eigen::MatrixXd sub(As.rows(), static_cast<Eigen::Index>(free_cols.size()));
      for (std::size_t j = 0; j < free_cols.size(); ++j) {
        sub.col(static_cast<Eigen::Index>(j)) = As.col(free_cols[j]);
      }
      const Eigen::VectorXd xs = sub.colPivHouseholderQr().solve(b);
      for (std::size_t j = 0; j < free_cols.size(); ++j) {
        x[free_cols[j]] = xs[static_cast<Eigen::Index>(j)];
      }
    }
    if ((x.array() < 0.0).any()) continue;
    const double chi2 = (As * x - b).squaredNorm();
    if (chi2 < best_chi2) {
      best_chi2 = chi2;
      best_x = x;
    }
  }
  const Eigen::Vector3d x = best_x.cwiseQuotient(scale);

  TemperatureFitResult out;
  out.tls = saturation;
  out.tls.delta0_tls = x[0];
  out.tls.delta_other = x[1];
  out.kinetic_fraction = x[2];
  out.n_points = m;
  const double dof = static_cast<double>(m) - 3.0;
  out.chi2_reduced = best_chi2 / dof;
  const Eigen::MatrixXd cov = linearized_covariance(A, out.chi2_reduced);
  out.sigma_delta0 = std::sqrt(std::max(cov(0, 0), 0.0));
  out.sigma_delta_other = std::sqrt(std::max(cov(1, 1), 0.0));
  out.sigma_kinetic_fraction = std::sqrt(std::max(cov(2, 2), 0.0));
  return out;
}

}  // namespace cpwres
