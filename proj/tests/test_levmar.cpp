#include <cmath>

#include "doctest.h"

#include "cpwres/levmar.hpp"

using namespace cpwres;

TEST_SUITE("levmar") {

TEST_CASE("Rosenbrock as a least-squares problem") {
  LeastSquaresProblem prob;
  prob.n_residuals = 2;
  prob.residuals = [](const Eigen::VectorXd& p, Eigen::VectorXd& r) {
    r[0] = 10.0 * (p[1] - p[0] * p[0]);
    r[1] = 1.0 - p[0];
  };
  Eigen::VectorXd p0(2);
  p0 << -1.2, 1.0;
  const LevMarResult res = levenberg_marquardt(prob, p0);
  CHECK(res.converged);
  CHECK(res.params[0] == doctest::Approx(1.0).epsilon(1e-8));
  CHECK(res.params[1] == doctest::Approx(1.0).epsilon(1e-8));
}

TEST_CASE("exponential decay with badly scaled parameters and analytic Jacobian") {
  // y = A exp(-t / tau) + c with A ~ 1e-6, tau ~ 1e3, c ~ 1e-8.
  const int m = 40;
  Eigen::VectorXd t(m), y(m);
  for (int i = 0; i < m; ++i) {
    t[i] = 100.0 * i;
    y[i] = 2e-6 * std::exp(-t[i] / 800.0) + 3e-8;
  }
  LeastSquaresProblem prob;
  prob.n_residuals = m;
  prob.residuals = [&](const Eigen::VectorXd& p, Eigen::VectorXd& r) {
    for (int i = 0; i < m; ++i) r[i] = (p[0] * std::exp(-t[i] / p[1]) + p[2] - y[i]) / 1e-9;
  };
  prob.jacobian = [&](const Eigen::VectorXd& p, Eigen::MatrixXd& J) {
    for (int i = 0; i < m; ++i) {
      const double e = std::exp(-t[i] / p[1]);
      J(i, 0) = e / 1e-9;
      J(i, 1) = p[0] * e * t[i] / (p[1] * p[1]) / 1e-9;
      J(i, 2) = 1.0 / 1e-9;
    }
  };
  Eigen::VectorXd p0(3);
  p0 << 1e-6, 500.0, 0.0;
  const LevMarResult res = levenberg_marquardt(prob, p0);
  CHECK(res.converged);
  CHECK(res.params[0] == doctest::Approx(2e-6).epsilon(1e-8));
  CHECK(res.params[1] == doctest::Approx(800.0).epsilon(1e-8));
  CHECK(res.params[2] == doctest::Approx(3e-8).epsilon(1e-6));

  // Finite differences agree with the analytic Jacobian.
  Eigen::MatrixXd J(m, 3);
  prob.jacobian(res.params, J);
  const Eigen::MatrixXd Jfd = finite_difference_jacobian(prob.residuals, res.params, m, 1e-6);
  CHECK((J - Jfd).norm() < 1e-6 * J.norm());
}

TEST_CASE("projection keeps iterates inside bounds") {
  // Minimum of (p - 3)^2 constrained to p <= 1 sits on the bound.
  LeastSquaresProblem prob;
  prob.n_residuals = 1;
  prob.residuals = [](const Eigen::VectorXd& p, Eigen::VectorXd& r) { r[0] = p[0] - 3.0; };
  prob.project = [](Eigen::VectorXd& p) { p[0] = std::min(p[0], 1.0); };
  Eigen::VectorXd p0(1);
  p0 << -5.0;
  const LevMarResult res = levenberg_marquardt(prob, p0);
  CHECK(res.params[0] == doctest::Approx(1.0));
}

TEST_CASE("linearized covariance of a straight-line fit") {
  // y = a + b x with unit weights: cov = s2 (X^T X)^-1.
  const int m = 10;
  Eigen::MatrixXd X(m, 2);
  for (int i = 0; i < m; ++i) X.row(i) << 1.0, static_cast<double>(i);
  const Eigen::MatrixXd cov = linearized_covariance(X, 2.0);
  const Eigen::MatrixXd expect = 2.0 * (X.transpose() * X).inverse();
  CHECK((cov - expect).norm() < 1e-12 * expect.norm());
}

}  // TEST_SUITE
