#pragma once

#include <cmath>

#include "sepgan/core.hpp"

namespace sepgan {

// Adam with bias correction on one flat parameter vector.
template <class S>
struct Adam {
  S lr = S(2e-4);
  S beta1 = S(0.5);
  S beta2 = S(0.999);
  S eps = S(1e-8);
  VectorT<S> m, v;
  long t = 0;

  Adam() = default;
  Adam(S lr_, S b1, S b2) : lr(lr_), beta1(b1), beta2(b2) {}

  void reset(Eigen::Index n) {
    m = VectorT<S>::Zero(n);
    v = VectorT<S>::Zero(n);
    t = 0;
  }

  void step(VectorT<S>& x, const VectorT<S>& g) {
    if (m.size() != x.size()) reset(x.size());
    ++t;
    m = beta1 * m + (S(1) - beta1) * g;
    v = (beta2 * v.array() + (S(1) - beta2) * g.array().square()).matrix();
    const S bc1 = S(1) - S(std::pow(double(beta1), double(t)));
    const S bc2 = S(1) - S(std::pow(double(beta2), double(t)));
    x.array() -=
        lr * (m.array() / bc1) / ((v.array() / bc2).sqrt() + eps);
  }
};

}  // namespace sepgan
