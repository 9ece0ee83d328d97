#pragma once

#include "sepgan/nets.hpp"
#include "sepgan/rng.hpp"

namespace sepgan::testutil {

inline GeneratorArch tiny_gen_arch(int image = 16, int latent = 8,
                                   bool batchnorm = false) {
  GeneratorArch a;
  a.family = "custom";
  a.latent_dim = latent;
  a.image_h = a.image_w = image;
  a.base_h = a.base_w = image / 4;
  a.fc1_width = 32;
  a.fc2_channels = 8;
  a.deconv_filters = 6;
  a.kernel = 4;
  a.batchnorm = batchnorm;
  return a;
}

inline DiscriminatorArch tiny_disc_arch(int image = 16, bool batchnorm = false) {
  DiscriminatorArch a;
  a.family = "custom";
  a.image_h = a.image_w = image;
  a.conv1_filters = 6;
  a.conv2_filters = 8;
  a.kernel = 4;
  a.batchnorm = batchnorm;
  return a;
}

template <class S>
BatchT<S> random_batch(int rows, int cols, RngStream& rng, double lo = -1,
                       double hi = 1) {
  BatchT<S> b(rows, cols);
  for (Eigen::Index i = 0; i < b.size(); ++i)
    b.data()[i] = S(rng.uniform(lo, hi));
  return b;
}

// Relative agreement of an analytic derivative with a central difference.
inline double rel_err(double analytic, double fd) {
  return std::abs(analytic - fd) /
         std::max({std::abs(analytic), std::abs(fd), 1e-8});
}

}  // namespace sepgan::testutil
