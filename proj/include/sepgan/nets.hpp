#pragma once

#include <cstdint>
#include <string>

#include "sepgan/core.hpp"
#include "sepgan/layers.hpp"
#include "sepgan/rng.hpp"

namespace sepgan {

inline constexpr double kInitStd = 0.02;
inline constexpr double kBnEps = 1e-5;
inline constexpr double kBnMomentum = 0.9;
inline constexpr double kLeakySlope = 0.2;

// Generator ladder: two fully-connected ReLU layers, reshape to
// (fc2_channels, base, base), then the named stride-2 transposed convolution
// up to 2*base, and a 1-filter transposed convolution projecting to the
// (4*base)^2 image under a final sigmoid. Batch norm sits on fc1/fc2/deconv1
// when enabled, never on the output layer.
struct GeneratorArch {
  std::string family = "custom";
  int latent_dim = 100;
  int image_h = 28, image_w = 28;
  int fc1_width = 1024;
  int fc2_channels = 128;
  int base_h = 7, base_w = 7;
  int deconv_filters = 64;
  int kernel = 5;
  bool batchnorm = true;

  static GeneratorArch dcgan28() {
    GeneratorArch a;
    a.family = "dcgan28";
    a.latent_dim = 100;
    a.deconv_filters = 64;
    a.kernel = 5;
    return a;
  }

  static GeneratorArch infogan28() {
    GeneratorArch a;
    a.family = "infogan28";
    a.latent_dim = 62;
    a.deconv_filters = 128;
    a.kernel = 4;
    return a;
  }

  void validate() const {
    if (image_h != base_h * 4 || image_w != base_w * 4)
      throw ConfigInvalid("generator arch: image must be 4x the reshape base");
    if (latent_dim < 1 || fc1_width < 1 || fc2_channels < 1 ||
        deconv_filters < 1 || kernel < 1)
      throw ConfigInvalid("generator arch: nonpositive dimension");
  }
};

// Discriminator: two stride-2 convolutions with leaky ReLU, then one
// fully-connected layer producing a single logit. Batch norm on conv2 only
// (never the first layer) when enabled.
struct DiscriminatorArch {
  std::string family = "custom";
  int image_h = 28, image_w = 28;
  int conv1_filters = 64;
  int conv2_filters = 128;
  int kernel = 5;
  bool batchnorm = true;

  static DiscriminatorArch dcgan28() {
    DiscriminatorArch a;
    a.family = "dcgan28";
    return a;
  }

  void validate() const {
    if (image_h % 4 != 0 || image_w % 4 != 0)
      throw ConfigInvalid("discriminator arch: image dims must be divisible by 4");
    if (conv1_filters < 1 || conv2_filters < 1 || kernel < 1)
      throw ConfigInvalid("discriminator arch: nonpositive dimension");
  }
};

template <class S>
class Generator {
 public:
  GeneratorArch arch;
  ParamPack<S> params;  // trainable
  ParamPack<S> stats;   // batch-norm running statistics

  struct Cache {
    BatchT<S> z, a1_pre, a1_act_in, a1, a2_pre, a2_act_in, a2;
    BatchT<S> d1_pre, d1_act_in, d1, out;
    nn::BnCache<S> bn1, bn2, bn3;
  };

  static Generator build(const GeneratorArch& a) {
    a.validate();
    Generator g;
    g.arch = a;
    const int fc2_out = a.fc2_channels * a.base_h * a.base_w;
    g.params.add("fc1.W", {a.latent_dim, a.fc1_width});
    g.params.add("fc1.b", {a.fc1_width});
    g.params.add("fc2.W", {a.fc1_width, fc2_out});
    g.params.add("fc2.b", {fc2_out});
    g.params.add("dc1.W", {a.fc2_channels, a.deconv_filters * a.kernel * a.kernel});
    g.params.add("dc1.b", {a.deconv_filters});
    g.params.add("dc2.W", {a.deconv_filters, 1 * a.kernel * a.kernel});
    g.params.add("dc2.b", {1});
    if (a.batchnorm) {
      g.params.add("bn1.gamma", {a.fc1_width});
      g.params.add("bn1.beta", {a.fc1_width});
      g.params.add("bn2.gamma", {a.fc2_channels});
      g.params.add("bn2.beta", {a.fc2_channels});
      g.params.add("bn3.gamma", {a.deconv_filters});
      g.params.add("bn3.beta", {a.deconv_filters});
      g.stats.add("bn1.mean", {a.fc1_width});
      g.stats.add("bn1.var", {a.fc1_width});
      g.stats.add("bn2.mean", {a.fc2_channels});
      g.stats.add("bn2.var", {a.fc2_channels});
      g.stats.add("bn3.mean", {a.deconv_filters});
      g.stats.add("bn3.var", {a.deconv_filters});
    }
    g.params.finalize();
    g.stats.finalize();
    if (a.batchnorm) {
      g.params.vec("bn1.gamma").setOnes();
      g.params.vec("bn2.gamma").setOnes();
      g.params.vec("bn3.gamma").setOnes();
      g.stats.vec("bn1.var").setOnes();
      g.stats.vec("bn2.var").setOnes();
      g.stats.vec("bn3.var").setOnes();
    }
    return g;
  }

  // [B, latent] -> [B, H*W], every pixel strictly inside (0,1).
  BatchT<S> forward(const BatchT<S>& z, bool train, Cache* cache) {
    if (z.cols() != arch.latent_dim)
      throw DimMismatch("generator: latent width " + std::to_string(z.cols()) +
                        " != " + std::to_string(arch.latent_dim));
    const auto& a = arch;
    const int bh = a.base_h, bw = a.base_w;
    Cache local;
    Cache& c = cache ? *cache : local;
    c.z = z;

    c.a1_pre = nn::fc_forward<S>(z, params.mat("fc1.W"), params.vec("fc1.b"));
    c.a1_act_in = a.batchnorm
                      ? nn::bn_forward<S>(c.a1_pre, a.fc1_width, 1,
                                          params.vec("bn1.gamma"),
                                          params.vec("bn1.beta"),
                                          stats.vec("bn1.mean"),
                                          stats.vec("bn1.var"), train,
                                          S(kBnEps), S(kBnMomentum), &c.bn1)
                      : c.a1_pre;
    c.a1 = nn::relu(c.a1_act_in);

    c.a2_pre = nn::fc_forward<S>(c.a1, params.mat("fc2.W"), params.vec("fc2.b"));
    c.a2_act_in = a.batchnorm
                      ? nn::bn_forward<S>(c.a2_pre, a.fc2_channels, bh * bw,
                                          params.vec("bn2.gamma"),
                                          params.vec("bn2.beta"),
                                          stats.vec("bn2.mean"),
                                          stats.vec("bn2.var"), train,
                                          S(kBnEps), S(kBnMomentum), &c.bn2)
                      : c.a2_pre;
    c.a2 = nn::relu(c.a2_act_in);

    const auto g1 = nn::same_conv_geom(2 * bh, 2 * bw, a.kernel, 2);
    c.d1_pre = nn::deconv_forward<S>(c.a2, a.fc2_channels, a.deconv_filters, g1,
                                     params.mat("dc1.W"), params.vec("dc1.b"));
    c.d1_act_in = a.batchnorm
                      ? nn::bn_forward<S>(c.d1_pre, a.deconv_filters,
                                          4 * bh * bw, params.vec("bn3.gamma"),
                                          params.vec("bn3.beta"),
                                          stats.vec("bn3.mean"),
                                          stats.vec("bn3.var"), train,
                                          S(kBnEps), S(kBnMomentum), &c.bn3)
                      : c.d1_pre;
    c.d1 = nn::relu(c.d1_act_in);

    const auto g2 = nn::same_conv_geom(a.image_h, a.image_w, a.kernel, 2);
    BatchT<S> out_pre = nn::deconv_forward<S>(c.d1, a.deconv_filters, 1, g2,
                                              params.mat("dc2.W"),
                                              params.vec("dc2.b"));
    c.out = nn::sigmoid(out_pre);
    return c.out;
  }

  // dOut: [B, H*W]. Fills param-shaped gradient vector and/or dZ.
  void backward(const Cache& c, const BatchT<S>& dOut, VectorT<S>* grads,
                BatchT<S>* dZ) const {
    const auto& a = arch;
    const int bh = a.base_h, bw = a.base_w;
    VectorT<S> scratch;
    VectorT<S>& gv = grads ? *grads : scratch;
    gv = VectorT<S>::Zero(params.size());

    BatchT<S> d = (dOut.array() * c.out.array() * (S(1) - c.out.array())).matrix();

    const auto g2 = nn::same_conv_geom(a.image_h, a.image_w, a.kernel, 2);
    BatchT<S> d_d1;
    nn::deconv_backward<S>(c.d1, a.deconv_filters, 1, g2, params.mat("dc2.W"),
                           d, d_d1, params.mat(gv, "dc2.W"),
                           params.vec(gv, "dc2.b"));

    d = nn::relu_backward(c.d1_act_in, d_d1);
    if (a.batchnorm)
      d = nn::bn_backward<S>(c.bn3, params.vec("bn3.gamma"), d,
                             params.vec(gv, "bn3.gamma"),
                             params.vec(gv, "bn3.beta"));

    const auto g1 = nn::same_conv_geom(2 * bh, 2 * bw, a.kernel, 2);
    BatchT<S> d_a2;
    nn::deconv_backward<S>(c.a2, a.fc2_channels, a.deconv_filters, g1,
                           params.mat("dc1.W"), d, d_a2,
                           params.mat(gv, "dc1.W"), params.vec(gv, "dc1.b"));

    d = nn::relu_backward(c.a2_act_in, d_a2);
    if (a.batchnorm)
      d = nn::bn_backward<S>(c.bn2, params.vec("bn2.gamma"), d,
                             params.vec(gv, "bn2.gamma"),
                             params.vec(gv, "bn2.beta"));

    BatchT<S> d_a1;
    nn::fc_backward<S>(c.a1, params.mat("fc2.W"), d, d_a1,
                       params.mat(gv, "fc2.W"), params.vec(gv, "fc2.b"));

    d = nn::relu_backward(c.a1_act_in, d_a1);
    if (a.batchnorm)
      d = nn::bn_backward<S>(c.bn1, params.vec("bn1.gamma"), d,
                             params.vec(gv, "bn1.gamma"),
                             params.vec(gv, "bn1.beta"));

    BatchT<S> d_z;
    nn::fc_backward<S>(c.z, params.mat("fc1.W"), d, d_z,
                       params.mat(gv, "fc1.W"), params.vec(gv, "fc1.b"));
    if (dZ) *dZ = d_z;
  }
};

template <class S>
class Discriminator {
 public:
  DiscriminatorArch arch;
  ParamPack<S> params;
  ParamPack<S> stats;

  struct Cache {
    BatchT<S> x, c1_pre, c1, c2_pre, c2_act_in, c2;
    nn::BnCache<S> bn;
  };

  static Discriminator build(const DiscriminatorArch& a) {
    a.validate();
    Discriminator d;
    d.arch = a;
    const int flat = a.conv2_filters * (a.image_h / 4) * (a.image_w / 4);
    d.params.add("c1.W", {a.conv1_filters, 1 * a.kernel * a.kernel});
    d.params.add("c1.b", {a.conv1_filters});
    d.params.add("c2.W", {a.conv2_filters, a.conv1_filters * a.kernel * a.kernel});
    d.params.add("c2.b", {a.conv2_filters});
    d.params.add("fc.W", {flat, 1});
    d.params.add("fc.b", {1});
    if (a.batchnorm) {
      d.params.add("bn.gamma", {a.conv2_filters});
      d.params.add("bn.beta", {a.conv2_filters});
      d.stats.add("bn.mean", {a.conv2_filters});
      d.stats.add("bn.var", {a.conv2_filters});
    }
    d.params.finalize();
    d.stats.finalize();
    if (a.batchnorm) {
      d.params.vec("bn.gamma").setOnes();
      d.stats.vec("bn.var").setOnes();
    }
    return d;
  }

  // [B, H*W] -> one logit per image; probability = sigmoid(logit).
  VectorT<S> forward(const BatchT<S>& x, bool train, Cache* cache) {
    const auto& a = arch;
    if (x.cols() != Eigen::Index(a.image_h) * a.image_w)
      throw DimMismatch("discriminator: input width " +
                        std::to_string(x.cols()) + " != " +
                        std::to_string(a.image_h * a.image_w));
    Cache local;
    Cache& c = cache ? *cache : local;
    c.x = x;

    const auto g1 = nn::same_conv_geom(a.image_h, a.image_w, a.kernel, 2);
    c.c1_pre = nn::conv_forward<S>(x, 1, g1, params.mat("c1.W"), params.vec("c1.b"));
    c.c1 = nn::leaky_relu(c.c1_pre, S(kLeakySlope));

    const auto g2 = nn::same_conv_geom(a.image_h / 2, a.image_w / 2, a.kernel, 2);
    c.c2_pre = nn::conv_forward<S>(c.c1, a.conv1_filters, g2, params.mat("c2.W"),
                                   params.vec("c2.b"));
    c.c2_act_in = a.batchnorm
                      ? nn::bn_forward<S>(c.c2_pre, a.conv2_filters,
                                          (a.image_h / 4) * (a.image_w / 4),
                                          params.vec("bn.gamma"),
                                          params.vec("bn.beta"),
                                          stats.vec("bn.mean"),
                                          stats.vec("bn.var"), train, S(kBnEps),
                                          S(kBnMomentum), &c.bn)
                      : c.c2_pre;
    c.c2 = nn::leaky_relu(c.c2_act_in, S(kLeakySlope));

    BatchT<S> logits =
        nn::fc_forward<S>(c.c2, params.mat("fc.W"), params.vec("fc.b"));
    return logits.col(0);
  }

  void backward(const Cache& c, const VectorT<S>& dLogits, VectorT<S>* grads,
                BatchT<S>* dX) const {
    const auto& a = arch;
    VectorT<S> scratch;
    VectorT<S>& gv = grads ? *grads : scratch;
    gv = VectorT<S>::Zero(params.size());

    BatchT<S> d(dLogits.size(), 1);
    d.col(0) = dLogits;
    BatchT<S> d_c2;
    nn::fc_backward<S>(c.c2, params.mat("fc.W"), d, d_c2,
                       params.mat(gv, "fc.W"), params.vec(gv, "fc.b"));

    d = nn::leaky_relu_backward(c.c2_act_in, d_c2, S(kLeakySlope));
    if (a.batchnorm)
      d = nn::bn_backward<S>(c.bn, params.vec("bn.gamma"), d,
                             params.vec(gv, "bn.gamma"),
                             params.vec(gv, "bn.beta"));

    const auto g2 = nn::same_conv_geom(a.image_h / 2, a.image_w / 2, a.kernel, 2);
    BatchT<S> d_c1;
    nn::conv_backward<S>(c.c1, a.conv1_filters, g2, params.mat("c2.W"), d, d_c1,
                         params.mat(gv, "c2.W"), params.vec(gv, "c2.b"));

    d = nn::leaky_relu_backward(c.c1_pre, d_c1, S(kLeakySlope));

    const auto g1 = nn::same_conv_geom(a.image_h, a.image_w, a.kernel, 2);
    BatchT<S> d_x;
    nn::conv_backward<S>(c.x, 1, g1, params.mat("c1.W"), d, d_x,
                         params.mat(gv, "c1.W"), params.vec(gv, "c1.b"));
    if (dX) *dX = d_x;
  }
};

namespace detail {

template <class S>
void fill_normal(Eigen::Map<MatrixT<S>> m, RngStream& rng, double stddev) {
  for (Eigen::Index i = 0; i < m.size(); ++i)
    m.data()[i] = S(rng.normal(0.0, stddev));
}

template <class S>
void fill_truncated_normal(Eigen::Map<MatrixT<S>> m, RngStream& rng,
                           double stddev) {
  for (Eigen::Index i = 0; i < m.size(); ++i)
    m.data()[i] =
        S(rng.truncated_normal(0.0, stddev, -2.0 * stddev, 2.0 * stddev));
}

}  // namespace detail

// Fully-connected and transposed-convolution weights ~ N(0, 0.02^2), biases
// zero, deterministic given seed.
template <class S>
Generator<S> init_generator(const GeneratorArch& arch, std::uint64_t seed) {
  Generator<S> g = Generator<S>::build(arch);
  RngStream rng = RngStream::derive(seed, "init.generator");
  detail::fill_normal<S>(g.params.mat("fc1.W"), rng, kInitStd);
  detail::fill_normal<S>(g.params.mat("fc2.W"), rng, kInitStd);
  detail::fill_normal<S>(g.params.mat("dc1.W"), rng, kInitStd);
  detail::fill_normal<S>(g.params.mat("dc2.W"), rng, kInitStd);
  return g;
}

// Convolution weights ~ N(0, 0.02^2) resampled beyond 2 sigma; the
// fully-connected layer initialized like the generator's.
template <class S>
Discriminator<S> init_discriminator(const DiscriminatorArch& arch,
                                    std::uint64_t seed) {
  Discriminator<S> d = Discriminator<S>::build(arch);
  RngStream rng = RngStream::derive(seed, "init.discriminator");
  detail::fill_truncated_normal<S>(d.params.mat("c1.W"), rng, kInitStd);
  detail::fill_truncated_normal<S>(d.params.mat("c2.W"), rng, kInitStd);
  detail::fill_normal<S>(d.params.mat("fc.W"), rng, kInitStd);
  return d;
}

// Inference-mode wrappers (deterministic: batch norm uses running stats).
template <class S>
BatchT<S> generator_forward(Generator<S>& g, const BatchT<S>& z) {
  return g.forward(z, /*train=*/false, nullptr);
}

template <class S>
VectorT<S> discriminator_forward(Discriminator<S>& d, const BatchT<S>& images) {
  return d.forward(images, /*train=*/false, nullptr);
}

}  // namespace sepgan
