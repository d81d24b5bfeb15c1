#include "cpwres/levmar.hpp"

#include <algorithm>
#include <cmath>

namespace cpwres {

Eigen::MatrixXd finite_difference_jacobian(const LeastSquaresProblem::Residuals& residuals,
                                           const Eigen::VectorXd& p, Eigen::Index n_residuals,
                                           double relative_step) {
  Eigen::MatrixXd J(n_residuals, p.size());
  Eigen::VectorXd plus(n_residuals), minus(n_residuals);
  for (Eigen::Index j = 0; j < p.size(); ++j) {
    const double h = relative_step * std::max(std::abs(p[j]), 1e-8);
    Eigen::VectorXd q = p;
    q[j] = p[j] + h;
    residuals(q, plus);
    q[j] = p[j] - h;
    residuals(q, minus);
    J.col(j) = (plus - minus) / (2.0 * h);
  }
  return J;
}

LevMarResult levenberg_marquardt(const LeastSquaresProblem& problem, Eigen::VectorXd p0,
                                 const LevMarOptions& options) {
  const Eigen::Index n = p0.size();
  const Eigen::Index m = problem.n_residuals;

  auto evaluate_jacobian = [&](const Eigen::VectorXd& p, Eigen::MatrixXd& J) {
    if (problem.jacobian) {
      J.resize(m, n);
      problem.jacobian(p, J);
    } else {
      J = finite_difference_jacobian(problem.residuals, p, m, options.fd_relative_step);
    }
  };

  if (problem.project) problem.project(p0);

  LevMarResult out;
  out.params = std::move(p0);
  out.residuals.resize(m);
  problem.residuals(out.params, out.residuals);
  out.cost = out.residuals.squaredNorm();
  evaluate_jacobian(out.params, out.jacobian);

  Eigen::MatrixXd JtJ = out.jacobian.transpose() * out.jacobian;
  Eigen::VectorXd g = out.jacobian.transpose() * out.residuals;
  Eigen::VectorXd scale = JtJ.diagonal().cwiseMax(1e-300);
  double mu = options.initial_damping;
  double nu = 2.0;

  Eigen::VectorXd trial(n), r_trial(m);
  for (int iter = 0; iter < options.max_iterations; ++iter) {
    out.iterations = iter + 1;
    if (!std::isfinite(out.cost)) break;
    if (out.cost <= options.cost_floor || (g.cwiseQuotient(scale.cwiseSqrt())).lpNorm<Eigen::Infinity>() <=
                               options.gtol * std::sqrt(out.cost)) {
      out.converged = true;
      break;
    }
    scale = scale.cwiseMax(JtJ.diagonal());

    Eigen::MatrixXd A = JtJ;
    A.diagonal() += mu * scale;
    const Eigen::VectorXd step = A.ldlt().solve(-g);
    if (!step.allFinite()) {
      mu *= nu;
      nu *= 2.0;
      continue;
    }
    trial = out.params + step;
    if (problem.project) problem.project(trial);
    const Eigen::VectorXd actual_step = trial - out.params;

    problem.residuals(trial, r_trial);
    const double cost_trial = r_trial.squaredNorm();
    // Predicted reduction of the quadratic model for the (possibly projected) step.
    const double predicted =
        -(2.0 * g.dot(actual_step) + actual_step.dot(JtJ * actual_step));
    const double rho = predicted > 0.0 ? (out.cost - cost_trial) / predicted : -1.0;

    if (std::isfinite(cost_trial) && cost_trial < out.cost && rho > 0.0) {
      const double reduction = (out.cost - cost_trial) / out.cost;
      const double step_norm = actual_step.norm();
      const double param_norm = out.params.norm();
      out.params = trial;
      out.residuals = r_trial;
      out.cost = cost_trial;
      evaluate_jacobian(out.params, out.jacobian);
      JtJ = out.jacobian.transpose() * out.jacobian;
      g = out.jacobian.transpose() * out.residuals;
      mu *= std::max(1.0 / 3.0, 1.0 - std::pow(2.0 * rho - 1.0, 3));
      nu = 2.0;
      if (reduction <= options.ftol || step_norm <= options.xtol * (param_norm + options.xtol)) {
        out.converged = true;
        break;
      }
    } else {
      if (actual_step.norm() <= options.xtol * (out.params.norm() + options.xtol)) {
        // No productive step left at machine resolution.
        out.converged = true;
        break;
      }
      mu *= nu;
      nu *= 2.0;
    }
  }
  return out;
}

Eigen::MatrixXd linearized_covariance(const Eigen::MatrixXd& J, double residual_variance) {
  const Eigen::MatrixXd JtJ = J.transpose() * J;
  // Normalise columns before inversion for conditioning.
  const Eigen::VectorXd d = JtJ.diagonal().cwiseMax(1e-300).cwiseSqrt();
  const Eigen::MatrixXd scaled = d.cwiseInverse().asDiagonal() * JtJ * d.cwiseInverse().asDiagonal();
  Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(scaled);
  const Eigen::MatrixXd inv = cod.pseudoInverse();
  return residual_variance * (d.cwiseInverse().asDiagonal() * inv * d.cwiseInverse().asDiagonal());
}

}  // namespace cpwres
