#pragma once

#include <complex>
#include <utility>
#include <vector>

#include "sepgan/core.hpp"

namespace sepgan {

// Probability mass function on the cyclic group Z_n. Working on Z_n keeps
// the Fourier algebra exact, so every identifiability claim can be checked
// numerically instead of measure-theoretically.
class DiscreteDistribution {
 public:
  explicit DiscreteDistribution(Eigen::VectorXd mass) : mass_(std::move(mass)) {
    if (mass_.size() == 0)
      throw SupportMismatch("distribution: empty support");
    if (mass_.minCoeff() < -1e-12)
      throw Error("distribution: negative mass " +
                  std::to_string(mass_.minCoeff()));
    const double s = mass_.sum();
    if (std::abs(s - 1.0) > 1e-12)
      throw Error("distribution: mass sums to " + std::to_string(s));
    mass_ = mass_.cwiseMax(0.0);
  }

  static DiscreteDistribution delta(int n, int j) {
    Eigen::VectorXd m = Eigen::VectorXd::Zero(n);
    m(((j % n) + n) % n) = 1.0;
    return DiscreteDistribution(m);
  }

  static DiscreteDistribution uniform(int n) {
    return DiscreteDistribution(Eigen::VectorXd::Constant(n, 1.0 / n));
  }

  // Normalizes arbitrary nonnegative weights.
  static DiscreteDistribution from_weights(const Eigen::VectorXd& w) {
    return DiscreteDistribution(w / w.sum());
  }

  int size() const { return int(mass_.size()); }
  double operator()(int j) const { return mass_(j); }
  const Eigen::VectorXd& mass() const { return mass_; }

 private:
  Eigen::VectorXd mass_;
};

using CharacteristicFunction = Eigen::VectorXcd;

inline double total_variation(const DiscreteDistribution& a,
                              const DiscreteDistribution& b) {
  if (a.size() != b.size())
    throw SupportMismatch("total_variation: support sizes differ");
  return 0.5 * (a.mass() - b.mass()).cwiseAbs().sum();
}

// Cyclic convolution: the law of the sum of independent Z_n variables.
inline DiscreteDistribution convolve(const DiscreteDistribution& dx,
                                     const DiscreteDistribution& dn) {
  const int n = dx.size();
  if (dn.size() != n)
    throw SupportMismatch("convolve: support sizes differ (" +
                          std::to_string(n) + " vs " +
                          std::to_string(dn.size()) + ")");
  Eigen::VectorXd out = Eigen::VectorXd::Zero(n);
  for (int k = 0; k < n; ++k) {
    double acc = 0.0;
    for (int j = 0; j < n; ++j) acc += dx(j) * dn(((k - j) % n + n) % n);
    out(k) = acc;
  }
  // guard against round-off drift so downstream invariants stay exact
  out /= out.sum();
  return DiscreteDistribution(out);
}

// Phi[k] = sum_j p_j exp(+2*pi*i*j*k/n); Phi(0) = 1, conjugate symmetric for
// real mass. Direct O(n^2) evaluation: supports here are tiny and exactness
// beats speed.
inline CharacteristicFunction char_fn(const DiscreteDistribution& d) {
  const int n = d.size();
  CharacteristicFunction phi(n);
  for (int k = 0; k < n; ++k) {
    std::complex<double> acc(0.0, 0.0);
    for (int j = 0; j < n; ++j) {
      const double ang = 2.0 * M_PI * double(j) * double(k) / n;
      acc += d(j) * std::complex<double>(std::cos(ang), std::sin(ang));
    }
    phi(k) = acc;
  }
  return phi;
}

// Recovers D_x from D_y = D_x * D_n via the pointwise quotient of
// characteristic functions. Ill-posed whenever Phi_n vanishes somewhere.
inline DiscreteDistribution deconvolve(const DiscreteDistribution& dy,
                                       const DiscreteDistribution& dn,
                                       double eps = 1e-8) {
  const int n = dy.size();
  if (dn.size() != n)
    throw SupportMismatch("deconvolve: support sizes differ");
  const CharacteristicFunction phi_y = char_fn(dy);
  const CharacteristicFunction phi_n = char_fn(dn);
  std::vector<int> dead;
  for (int k = 0; k < n; ++k)
    if (std::abs(phi_n(k)) <= eps) dead.push_back(k);
  if (!dead.empty())
    throw IllPosed("deconvolve: |Phi_n| <= " + std::to_string(eps) + " at " +
                       std::to_string(dead.size()) + " frequencies",
                   dead);
  Eigen::VectorXd mass(n);
  for (int j = 0; j < n; ++j) {
    std::complex<double> acc(0.0, 0.0);
    for (int k = 0; k < n; ++k) {
      const double ang = -2.0 * M_PI * double(j) * double(k) / n;
      acc += (phi_y(k) / phi_n(k)) *
             std::complex<double>(std::cos(ang), std::sin(ang));
    }
    mass(j) = acc.real() / n;
    if (mass(j) < 0.0 && mass(j) > -1e-9) mass(j) = 0.0;  // round-off clip
  }
  mass = mass.cwiseMax(0.0);
  return DiscreteDistribution(mass / mass.sum());
}

// Pointwise best response D*(u) = dy(u) / (dy(u) + dg(u)); 0.5 where both
// vanish.
inline std::vector<double> optimal_discriminator(const DiscreteDistribution& dy,
                                                 const DiscreteDistribution& dg) {
  if (dy.size() != dg.size())
    throw SupportMismatch("optimal_discriminator: support sizes differ");
  std::vector<double> d(dy.size());
  for (int u = 0; u < dy.size(); ++u) {
    const double s = dy(u) + dg(u);
    d[u] = s == 0.0 ? 0.5 : dy(u) / s;
  }
  return d;
}

inline DiscreteDistribution shift(const DiscreteDistribution& d, int s) {
  const int n = d.size();
  Eigen::VectorXd m(n);
  for (int j = 0; j < n; ++j) m((j + s % n + n) % n) = d(j);
  return DiscreteDistribution(m);
}

// Constructive ill-posedness: pairs (g1,g2) != (dx,dn) with g1*g2 == dx*dn.
// The swap always qualifies when dx != dn; cyclic shift pairs
// (shift(dx,+s), shift(dn,-s)) qualify whenever they differ from the input.
inline std::vector<std::pair<DiscreteDistribution, DiscreteDistribution>>
demix_ambiguity_witness(const DiscreteDistribution& dx,
                        const DiscreteDistribution& dn) {
  if (dx.size() != dn.size())
    throw SupportMismatch("demix_ambiguity_witness: support sizes differ");
  const int n = dx.size();
  std::vector<std::pair<DiscreteDistribution, DiscreteDistribution>> out;
  auto differs = [&](const DiscreteDistribution& a,
                     const DiscreteDistribution& b) {
    return (a.mass() - dx.mass()).cwiseAbs().maxCoeff() > 1e-15 ||
           (b.mass() - dn.mass()).cwiseAbs().maxCoeff() > 1e-15;
  };
  if (differs(dn, dx) || differs(dx, dn)) {
    if ((dx.mass() - dn.mass()).cwiseAbs().maxCoeff() > 1e-15)
      out.emplace_back(dn, dx);
  }
  for (int s = 1; s < n; ++s) {
    auto g1 = shift(dx, s);
    auto g2 = shift(dn, -s);
    if (differs(g1, g2)) {
      out.emplace_back(std::move(g1), std::move(g2));
      break;  // one shift witness is enough
    }
  }
  return out;
}

}  // namespace sepgan
