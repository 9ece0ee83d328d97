#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "sepgan/core.hpp"
#include "sepgan/rng.hpp"

namespace sepgan {

// Two readings of the appendix's "truncated random normal" mixing weights;
// neither is asserted as ground truth.
enum class MixingLaw {
  truncated_std_normal,   // N(0,1) truncated to [-0.5, 0.5]
  normal_mean_neg_half,   // N(-0.5, 0.5) truncated at +-2 sigma
};

struct MixingMatrix {
  Eigen::Matrix2d W;
  std::uint64_t seed = 0;
};

inline MixingMatrix draw_mixing_matrix(std::uint64_t seed, MixingLaw law) {
  MixingMatrix m;
  m.seed = seed;
  RngStream rng = RngStream::derive(seed, "ica-mixing");
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j)
      m.W(i, j) = law == MixingLaw::truncated_std_normal
                      ? rng.truncated_normal(0.0, 1.0, -0.5, 0.5)
                      : rng.truncated_normal(-0.5, 0.5, -1.5, 0.5);
  return m;
}

// Y = X W^T with X the p x 2 source matrix (columns = components, rows =
// pixels of the flattened images).
inline Eigen::MatrixXd apply_mixing(const Eigen::MatrixXd& X,
                                    const Eigen::Matrix2d& W) {
  if (X.cols() != 2) throw DimMismatch("apply_mixing: X must be p x 2");
  return X * W.transpose();
}

inline Eigen::MatrixXd simulate_ica_mixing(
    const Eigen::MatrixXd& X, std::uint64_t seed,
    MixingLaw law = MixingLaw::truncated_std_normal) {
  return apply_mixing(X, draw_mixing_matrix(seed, law).W);
}

struct IcaResult {
  Eigen::MatrixXd sources;   // p x k, unit sample variance per column
  Eigen::MatrixXd unmixing;  // k x k, maps centered observations to sources
  bool converged = false;
  int sweeps = 0;
};

namespace detail {

// (M)^(-1/2) via eigendecomposition of the symmetric positive part.
inline Eigen::MatrixXd inv_sqrt_sym(const Eigen::MatrixXd& M) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(M);
  Eigen::VectorXd d = es.eigenvalues();
  for (Eigen::Index i = 0; i < d.size(); ++i)
    d(i) = 1.0 / std::sqrt(std::max(d(i), 1e-300));
  return es.eigenvectors() * d.asDiagonal() * es.eigenvectors().transpose();
}

}  // namespace detail

// FastICA: center, whiten, then symmetric fixed-point iteration with the
// logcosh contrast until the unmixing matrix moves less than tol or the
// sweep budget runs out (best iterate returned with converged=false).
inline IcaResult fast_ica(const Eigen::MatrixXd& Y, int k,
                          std::uint64_t seed = 0, double tol = 1e-6,
                          int max_sweeps = 500) {
  const Eigen::Index p = Y.rows();
  if (k < 1 || k > Y.cols())
    throw DimMismatch("fast_ica: k out of range");
  // center
  Eigen::MatrixXd Yc = Y;
  const Eigen::RowVectorXd mean = Yc.colwise().mean();
  Yc.rowwise() -= mean;

  // whiten (sample covariance, n-1 denominator)
  const Eigen::MatrixXd C = (Yc.transpose() * Yc) / double(p - 1);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(C);
  const Eigen::VectorXd evals = es.eigenvalues();
  const double emax = evals.maxCoeff();
  // keep the k leading components (eigenvalues ascend in Eigen)
  const Eigen::Index nc = evals.size();
  for (Eigen::Index i = nc - k; i < nc; ++i)
    if (evals(i) <= 1e-12 * std::max(emax, 1.0))
      throw RankDeficient("fast_ica: covariance rank below k after centering");
  Eigen::MatrixXd K(k, Y.cols());
  for (int i = 0; i < k; ++i) {
    const Eigen::Index col = nc - 1 - i;
    K.row(i) = es.eigenvectors().col(col).transpose() / std::sqrt(evals(col));
  }
  const Eigen::MatrixXd Xw = Yc * K.transpose();  // p x k, identity covariance

  // symmetric fixed point, seeded init
  RngStream rng = RngStream::derive(seed, "ica-init");
  Eigen::MatrixXd W(k, k);
  for (int i = 0; i < k; ++i)
    for (int j = 0; j < k; ++j) W(i, j) = rng.normal(0.0, 1.0);
  W = detail::inv_sqrt_sym(W * W.transpose()) * W;

  IcaResult res;
  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    Eigen::MatrixXd W_new(k, k);
    for (int i = 0; i < k; ++i) {
      const Eigen::VectorXd u = Xw * W.row(i).transpose();
      const Eigen::VectorXd gu = u.array().tanh();
      const double gprime_mean = (1.0 - gu.array().square()).mean();
      W_new.row(i) =
          ((Xw.transpose() * gu) / double(p) - gprime_mean * W.row(i).transpose())
              .transpose();
    }
    W_new = detail::inv_sqrt_sym(W_new * W_new.transpose()) * W_new;
    double delta = 0.0;
    for (int i = 0; i < k; ++i)
      delta = std::max(delta,
                       std::abs(1.0 - std::abs(W_new.row(i).dot(W.row(i)))));
    W = std::move(W_new);
    res.sweeps = sweep + 1;
    if (delta < tol) {
      res.converged = true;
      break;
    }
  }
  res.unmixing = W * K;       // k x k on centered observations
  res.sources = Yc * res.unmixing.transpose();  // p x k, unit variance
  return res;
}

// Best alignment of recovered sources to references over permutations and
// signs; returns the per-source |correlation| under that alignment.
inline std::vector<double> align_abs_correlation(const Eigen::MatrixXd& S,
                                                 const Eigen::MatrixXd& ref) {
  if (S.rows() != ref.rows() || S.cols() != ref.cols())
    throw DimMismatch("align_abs_correlation: shapes differ");
  const int k = int(S.cols());
  auto corr = [&](int i, int j) {
    Eigen::VectorXd a = S.col(i);
    Eigen::VectorXd b = ref.col(j);
    a.array() -= a.mean();
    b.array() -= b.mean();
    const double den = a.norm() * b.norm();
    return den == 0.0 ? 0.0 : std::abs(a.dot(b)) / den;
  };
  std::vector<int> perm(k);
  for (int i = 0; i < k; ++i) perm[i] = i;
  std::vector<double> best;
  double best_total = -1.0;
  do {
    double total = 0.0;
    std::vector<double> cur(k);
    for (int i = 0; i < k; ++i) {
      cur[i] = corr(i, perm[i]);
      total += cur[i];
    }
    if (total > best_total) {
      best_total = total;
      best = cur;
    }
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best;
}

}  // namespace sepgan
