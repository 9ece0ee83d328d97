#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "sepgan/ica.hpp"
#include "sepgan/rng.hpp"
#include "sepgan/sensing.hpp"

using namespace sepgan;

namespace {

// cyclic coordinate descent on ||Ax-y||^2 + lambda ||x||_1, run to
// convergence; closed-form coordinate minimizer
Eigen::VectorXd lasso_cd_oracle(const Eigen::MatrixXd& A,
                                const Eigen::VectorXd& y, double lambda,
                                int sweeps = 4000) {
  const Eigen::Index p = A.cols();
  Eigen::VectorXd x = Eigen::VectorXd::Zero(p);
  Eigen::VectorXd r = y;  // residual y - A x
  const Eigen::VectorXd col_sq = A.colwise().squaredNorm();
  for (int s = 0; s < sweeps; ++s) {
    double moved = 0;
    for (Eigen::Index j = 0; j < p; ++j) {
      if (col_sq(j) == 0.0) continue;
      const double rho = A.col(j).dot(r) + col_sq(j) * x(j);
      const double denom = col_sq(j);
      double xj;
      const double thr = lambda / 2.0;
      if (rho > thr)
        xj = (rho - thr) / denom;
      else if (rho < -thr)
        xj = (rho + thr) / denom;
      else
        xj = 0.0;
      const double delta = xj - x(j);
      if (delta != 0.0) {
        r -= delta * A.col(j);
        x(j) = xj;
        moved = std::max(moved, std::abs(delta));
      }
    }
    if (moved < 1e-14) break;
  }
  return x;
}

}  // namespace

TEST_CASE("make_gaussian_operator: variance, determinism, plumbing") {
  const auto op = make_gaussian_operator(100, 784, 5);
  REQUIRE(op.A.rows() == 100);
  REQUIRE(op.A.cols() == 784);
  const double mean_sq = op.A.array().square().mean();
  CHECK(mean_sq >= 0.8 / 100.0);
  CHECK(mean_sq <= 1.2 / 100.0);

  const auto op2 = make_gaussian_operator(100, 784, 5);
  CHECK(op.A == op2.A);
  const auto op3 = make_gaussian_operator(100, 784, 6);
  CHECK(op.A != op3.A);

  const auto tiny = make_gaussian_operator(1, 1, 9);
  CHECK(tiny.A.rows() == 1);
  CHECK(std::isfinite(tiny.A(0, 0)));
  CHECK_THROWS_AS(make_gaussian_operator(0, 5, 1), DimMismatch);

  // distinct seeds: flattened entries roughly uncorrelated (sanity band)
  Eigen::VectorXd a = Eigen::Map<const Eigen::VectorXd>(op.A.data(), op.A.size());
  Eigen::VectorXd b = Eigen::Map<const Eigen::VectorXd>(op3.A.data(), op3.A.size());
  a.array() -= a.mean();
  b.array() -= b.mean();
  const double corr = a.dot(b) / (a.norm() * b.norm());
  CHECK(std::abs(corr) < 0.05);
}

TEST_CASE("lasso_solve: identity operator soft threshold") {
  Eigen::MatrixXd A = Eigen::MatrixXd::Identity(2, 2);
  Eigen::VectorXd y(2);
  y << 1.0, 0.2;
  const auto res = lasso_solve(A, y, 0.5, 300);
  CHECK(res.x(0) == doctest::Approx(0.75).epsilon(1e-8));
  CHECK(res.x(1) == doctest::Approx(0.0));

  const auto zero = lasso_solve(A, Eigen::VectorXd::Zero(2), 0.5, 50);
  CHECK(zero.x.norm() == 0.0);
}

TEST_CASE("lasso_solve: objective never increases and beats x=0") {
  RngStream rng(1);
  for (int trial = 0; trial < 5; ++trial) {
    Eigen::MatrixXd A(20, 50);
    for (Eigen::Index i = 0; i < A.size(); ++i)
      A.data()[i] = rng.normal(0.0, 1.0 / std::sqrt(20.0));
    Eigen::VectorXd y(20);
    for (int i = 0; i < 20; ++i) y(i) = rng.normal(0, 1);
    const auto res = lasso_solve(A, y, 0.1, 400);
    for (std::size_t i = 1; i < res.objectives.size(); ++i)
      CHECK(res.objectives[i] <= res.objectives[i - 1] + 1e-9);
    CHECK(res.objectives.back() <=
          lasso_objective(A, y, 0.1, Eigen::VectorXd::Zero(50)));
  }
  CHECK_THROWS_AS(lasso_solve(Eigen::MatrixXd::Identity(3, 3),
                              Eigen::VectorXd::Zero(2), 0.1, 10),
                  DimMismatch);
}

TEST_CASE("lasso_solve: matches coordinate-descent oracle within 1e-6") {
  RngStream rng(2);
  for (int trial = 0; trial < 20; ++trial) {
    Eigen::MatrixXd A(20, 50);
    for (Eigen::Index i = 0; i < A.size(); ++i)
      A.data()[i] = rng.normal(0.0, 1.0 / std::sqrt(20.0));
    Eigen::VectorXd x_true = Eigen::VectorXd::Zero(50);
    for (int k = 0; k < 5; ++k)
      x_true(Eigen::Index(rng.uniform_int(50))) = rng.uniform(0.5, 1.5);
    Eigen::VectorXd y = A * x_true;
    for (int i = 0; i < 20; ++i) y(i) += rng.normal(0.0, 0.01);

    const double lambda = 0.05;
    const auto fista = lasso_solve(A, y, lambda, 3000);
    const auto cd = lasso_cd_oracle(A, y, lambda);
    const double f_obj = lasso_objective(A, y, lambda, fista.x);
    const double cd_obj = lasso_objective(A, y, lambda, cd);
    CHECK(std::abs(f_obj - cd_obj) <= 1e-6);
  }
}

TEST_CASE("simulate_ica_mixing: definition and injected identity") {
  RngStream rng(3);
  Eigen::MatrixXd X(100, 2);
  for (Eigen::Index i = 0; i < X.size(); ++i) X.data()[i] = rng.uniform();

  CHECK(apply_mixing(X, Eigen::Matrix2d::Identity()) == X);

  const auto mm = draw_mixing_matrix(7, MixingLaw::truncated_std_normal);
  const Eigen::MatrixXd Y = apply_mixing(X, mm.W);
  CHECK((Y - X * mm.W.transpose()).cwiseAbs().maxCoeff() == 0.0);
  CHECK(mm.W.cwiseAbs().maxCoeff() <= 0.5);  // truncation bound

  const auto mm2 = draw_mixing_matrix(7, MixingLaw::normal_mean_neg_half);
  CHECK(mm2.W.minCoeff() >= -1.5);
  CHECK(mm2.W.maxCoeff() <= 0.5);

  CHECK(simulate_ica_mixing(X, 7) == Y);  // same seed, same W
  CHECK_THROWS_AS(apply_mixing(Eigen::MatrixXd(5, 3), Eigen::Matrix2d::Identity()),
                  DimMismatch);
}

TEST_CASE("fast_ica: self recovery of independent uniform signals") {
  RngStream rng(4);
  const int p = 4000;
  Eigen::MatrixXd S0(p, 2);
  for (Eigen::Index i = 0; i < S0.size(); ++i) S0.data()[i] = rng.uniform(-1, 1);

  // already independent input: recovered sources match up to perm/sign
  const auto self = fast_ica(S0, 2, 11);
  CHECK(self.converged);
  const auto self_corr = align_abs_correlation(self.sources, S0);
  CHECK(self_corr[0] >= 0.99);
  CHECK(self_corr[1] >= 0.99);

  // unit variance constraint (n-1 denominator)
  for (int c = 0; c < 2; ++c) {
    const Eigen::VectorXd s = self.sources.col(c);
    const double var = (s.array() - s.mean()).square().sum() / double(p - 1);
    CHECK(var == doctest::Approx(1.0).epsilon(1e-8));
  }
}

TEST_CASE("fast_ica: synthetic blind source separation") {
  RngStream rng(5);
  const int p = 4000;
  Eigen::MatrixXd S0(p, 2);
  for (Eigen::Index i = 0; i < S0.size(); ++i) S0.data()[i] = rng.uniform(-1, 1);
  Eigen::Matrix2d W;
  W << 0.9, 0.4, -0.3, 0.8;  // well-conditioned invertible mix
  const Eigen::MatrixXd Y = apply_mixing(S0, W);
  const auto res = fast_ica(Y, 2, 12);
  const auto corr = align_abs_correlation(res.sources, S0);
  CHECK(corr[0] >= 0.95);
  CHECK(corr[1] >= 0.95);
}

TEST_CASE("fast_ica: scale invariance and rank deficiency") {
  RngStream rng(6);
  const int p = 2000;
  Eigen::MatrixXd S0(p, 2);
  for (Eigen::Index i = 0; i < S0.size(); ++i) S0.data()[i] = rng.uniform(-1, 1);
  Eigen::Matrix2d W;
  W << 0.7, 0.5, 0.2, -0.9;
  const Eigen::MatrixXd Y = apply_mixing(S0, W);
  Eigen::MatrixXd Y_scaled = Y;
  Y_scaled.col(0) *= 13.0;
  Y_scaled.col(1) *= 0.03;
  const auto a = fast_ica(Y, 2, 13);
  const auto b = fast_ica(Y_scaled, 2, 13);
  const auto cross = align_abs_correlation(b.sources, a.sources);
  CHECK(cross[0] >= 0.999);
  CHECK(cross[1] >= 0.999);

  Eigen::MatrixXd degenerate(p, 2);
  degenerate.col(0) = S0.col(0);
  degenerate.col(1) = 2.0 * S0.col(0);  // rank 1
  CHECK_THROWS_AS(fast_ica(degenerate, 2, 14), RankDeficient);
}
