#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "sepgan/core.hpp"
#include "sepgan/rng.hpp"

namespace sepgan {

// Gaussian sensing matrix, entries i.i.d. N(0, 1/m).
struct MeasurementOperator {
  Eigen::MatrixXd A;
  int m = 0;
  int p = 0;
  std::uint64_t seed = 0;
};

inline MeasurementOperator make_gaussian_operator(int m, int p,
                                                  std::uint64_t seed) {
  if (m < 1 || p < 1)
    throw DimMismatch("make_gaussian_operator: need m,p >= 1");
  MeasurementOperator op;
  op.m = m;
  op.p = p;
  op.seed = seed;
  op.A.resize(m, p);
  RngStream rng = RngStream::derive(seed, "measurement");
  const double std = 1.0 / std::sqrt(double(m));
  for (int i = 0; i < m; ++i)  // row by row
    for (int j = 0; j < p; ++j) op.A(i, j) = rng.normal(0.0, std);
  return op;
}

struct LassoResult {
  Eigen::VectorXd x;
  std::vector<double> objectives;  // per outer iteration, non-increasing
};

inline double lasso_objective(const Eigen::MatrixXd& A, const Eigen::VectorXd& y,
                              double lambda, const Eigen::VectorXd& x) {
  return (A * x - y).squaredNorm() + lambda * x.lpNorm<1>();
}

// ||A x - y||^2 + lambda ||x||_1 by FISTA with a monotone safeguard and
// adaptive restart, step size 1/L from a 20-iteration power estimate of
// L = 2 ||A^T A||. The safeguard keeps the recorded objective sequence
// non-increasing, which plain FISTA does not guarantee.
inline LassoResult lasso_solve(const Eigen::MatrixXd& A, const Eigen::VectorXd& y,
                               double lambda, int iterations = 500) {
  if (A.rows() != y.size())
    throw DimMismatch("lasso_solve: rows(A) != len(y)");
  const Eigen::Index p = A.cols();

  // power iteration for ||A^T A||, deterministic start
  Eigen::VectorXd v = Eigen::VectorXd::Ones(p) / std::sqrt(double(p));
  double sigma = 1.0;
  for (int i = 0; i < 20; ++i) {
    v = A.transpose() * (A * v);
    sigma = v.norm();
    if (sigma == 0.0) break;
    v /= sigma;
  }
  const double L = std::max(2.0 * sigma, 1e-12);
  const double step = 1.0 / L;
  const double thresh = lambda * step;  // prox of step * lambda * ||.||_1

  auto soft = [&](Eigen::VectorXd w) {
    for (Eigen::Index i = 0; i < w.size(); ++i)
      w(i) = w(i) > thresh ? w(i) - thresh : (w(i) < -thresh ? w(i) + thresh : 0.0);
    return w;
  };

  LassoResult res;
  Eigen::VectorXd x = Eigen::VectorXd::Zero(p);
  Eigen::VectorXd z = x;
  double t = 1.0;
  double fx = lasso_objective(A, y, lambda, x);
  res.objectives.push_back(fx);
  for (int it = 0; it < iterations; ++it) {
    const Eigen::VectorXd grad = 2.0 * (A.transpose() * (A * z - y));
    Eigen::VectorXd x_new = soft(z - step * grad);
    const double f_new = lasso_objective(A, y, lambda, x_new);
    if (f_new <= fx) {
      const double t_new = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
      z = x_new + ((t - 1.0) / t_new) * (x_new - x);
      x = std::move(x_new);
      fx = f_new;
      t = t_new;
    } else {
      // momentum overshoot: restart from the best point
      z = x;
      t = 1.0;
    }
    res.objectives.push_back(fx);
  }
  res.x = std::move(x);
  return res;
}

}  // namespace sepgan
