#pragma once

#include <functional>

#include <Eigen/Dense>

namespace cpwres {

/// Nonlinear least squares problem: minimise sum_i r_i(p)^2.
struct LeastSquaresProblem {
  using Residuals = std::function<void(const Eigen::VectorXd& p, Eigen::VectorXd& r)>;
  using Jacobian = std::function<void(const Eigen::VectorXd& p, Eigen::MatrixXd& J)>;
  using Projection = std::function<void(Eigen::VectorXd& p)>;

  Eigen::Index n_residuals = 0;
  Residuals residuals;
  Jacobian jacobian;      // empty -> central finite differences
  Projection project;     // optional: clamp trial points onto a feasible box
};

struct LevMarOptions {
  int max_iterations = 200;
  double ftol = 1e-14;  // relative cost reduction
  double xtol = 1e-12;  // relative step
  double gtol = 1e-14;  // scaled gradient
  double fd_relative_step = 1e-6;
  double initial_damping = 1e-3;
  // Stop once the cost reaches this absolute level (round-off floor of the
  // residuals); 0 disables.
  double cost_floor = 0.0;
};

struct LevMarResult {
  Eigen::VectorXd params;
  Eigen::VectorXd residuals;
  Eigen::MatrixXd jacobian;  // at params
  double cost = 0.0;         // sum of squared residuals
  int iterations = 0;
  bool converged = false;
};

/// Levenberg-Marquardt with Marquardt diagonal scaling and Nielsen's damping
/// update.
LevMarResult levenberg_marquardt(const LeastSquaresProblem& problem, Eigen::VectorXd p0,
                                 const LevMarOptions& options = {});

/// Central-difference Jacobian with step h_j = rel *
/// max(|p_j|, 1e-8).
Eigen::MatrixXd finite_difference_jacobian(const LeastSquaresProblem::Residuals& residuals,
                                           const Eigen::VectorXd& p, Eigen::Index n_residuals,
                                           double relative_step);

/// (J^T J)^+ * s2, via a complete orthogonal decomposition so rank-deficient
/// problems still yield a (pseudo-inverse) covariance.
Eigen::MatrixXd linearized_covariance(const Eigen::MatrixXd& J, double residual_variance);

}  // namespace cpwres
