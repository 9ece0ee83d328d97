#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "sepgan/adam.hpp"
#include "sepgan/core.hpp"
#include "sepgan/dataset.hpp"
#include "sepgan/layers.hpp"
#include "sepgan/rng.hpp"

namespace sepgan {

// The accuracy probe from the testing section: two convolution + max-pool
// stages, a fully-connected layer with dropout on top, ReLU activations,
// softmax output.
struct ClassifierArch {
  int image_h = 28, image_w = 28;
  int classes = 10;
  int conv1_filters = 32;
  int conv2_filters = 64;
  int kernel = 5;
  int fc_width = 512;
  double dropout = 0.5;

  void validate() const {
    if (image_h % 4 != 0 || image_w % 4 != 0)
      throw ConfigInvalid("classifier arch: image dims must be divisible by 4");
    if (classes < 2) throw ConfigInvalid("classifier arch: need >= 2 classes");
  }
};

struct ClassifierTrainConfig {
  int epochs = 3;
  int batch_size = 64;
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
};

template <class S>
class Classifier {
 public:
  ClassifierArch arch;
  ParamPack<S> params;

  struct Cache {
    BatchT<S> x, c1_pre, c1, p1, c2_pre, c2, p2, f1_pre, f1, drop, logits, probs;
    nn::ArgmaxMat am1, am2;
    BatchT<S> mask;  // dropout keep mask scaled by 1/keep
    bool train = false;
  };

  static Classifier build(const ClassifierArch& a) {
    a.validate();
    Classifier c;
    c.arch = a;
    const int flat = a.conv2_filters * (a.image_h / 4) * (a.image_w / 4);
    c.params.add("c1.W", {a.conv1_filters, 1 * a.kernel * a.kernel});
    c.params.add("c1.b", {a.conv1_filters});
    c.params.add("c2.W", {a.conv2_filters, a.conv1_filters * a.kernel * a.kernel});
    c.params.add("c2.b", {a.conv2_filters});
    c.params.add("fc1.W", {flat, a.fc_width});
    c.params.add("fc1.b", {a.fc_width});
    c.params.add("fc2.W", {a.fc_width, a.classes});
    c.params.add("fc2.b", {a.classes});
    c.params.finalize();
    return c;
  }

  // He-style fan-in scaling keeps deep ReLU activations at unit scale.
  static Classifier init(const ClassifierArch& a, std::uint64_t seed) {
    Classifier c = build(a);
    RngStream rng = RngStream::derive(seed, "init.classifier");
    auto fill = [&](const std::string& name, double fan_in) {
      auto m = c.params.mat(name);
      const double std = std::sqrt(2.0 / fan_in);
      for (Eigen::Index i = 0; i < m.size(); ++i)
        m.data()[i] = S(rng.normal(0.0, std));
    };
    fill("c1.W", a.kernel * a.kernel);
    fill("c2.W", double(a.conv1_filters) * a.kernel * a.kernel);
    fill("fc1.W", double(a.conv2_filters) * (a.image_h / 4) * (a.image_w / 4));
    fill("fc2.W", a.fc_width);
    return c;
  }

  BatchT<S> forward(const BatchT<S>& x, bool train, Cache* cache,
                    RngStream* dropout_rng) {
    const auto& a = arch;
    if (x.cols() != Eigen::Index(a.image_h) * a.image_w)
      throw DimMismatch("classifier: bad input width");
    Cache local;
    Cache& c = cache ? *cache : local;
    c.x = x;
    c.train = train;

    const auto g1 = nn::same_conv_geom(a.image_h, a.image_w, a.kernel, 1);
    c.c1_pre = nn::conv_forward<S>(x, 1, g1, params.mat("c1.W"), params.vec("c1.b"));
    c.c1 = nn::relu(c.c1_pre);
    c.p1 = nn::maxpool2_forward(c.c1, a.conv1_filters, a.image_h, a.image_w, &c.am1);

    const auto g2 = nn::same_conv_geom(a.image_h / 2, a.image_w / 2, a.kernel, 1);
    c.c2_pre = nn::conv_forward<S>(c.p1, a.conv1_filters, g2, params.mat("c2.W"),
                                   params.vec("c2.b"));
    c.c2 = nn::relu(c.c2_pre);
    c.p2 = nn::maxpool2_forward(c.c2, a.conv2_filters, a.image_h / 2,
                                a.image_w / 2, &c.am2);

    c.f1_pre = nn::fc_forward<S>(c.p2, params.mat("fc1.W"), params.vec("fc1.b"));
    c.f1 = nn::relu(c.f1_pre);

    if (train && a.dropout > 0.0) {
      if (!dropout_rng)
        throw ConfigInvalid("classifier: dropout in train mode needs an rng");
      const S keep = S(1.0 - a.dropout);
      c.mask.resize(c.f1.rows(), c.f1.cols());
      for (Eigen::Index i = 0; i < c.mask.size(); ++i)
        c.mask.data()[i] = dropout_rng->uniform() < double(keep) ? S(1) / keep : S(0);
      c.drop = c.f1.cwiseProduct(c.mask);
    } else {
      c.drop = c.f1;
    }

    c.logits = nn::fc_forward<S>(c.drop, params.mat("fc2.W"), params.vec("fc2.b"));
    // row-wise stable softmax
    c.probs.resize(c.logits.rows(), c.logits.cols());
    for (Eigen::Index i = 0; i < c.logits.rows(); ++i) {
      const S mx = c.logits.row(i).maxCoeff();
      auto e = (c.logits.row(i).array() - mx).exp();
      c.probs.row(i) = (e / e.sum()).matrix();
    }
    return c.probs;
  }

  // Mean cross-entropy; fills the param gradient.
  double backward_ce(const Cache& c, const std::vector<int>& labels,
                     VectorT<S>* grads) const {
    const auto& a = arch;
    const int B = int(c.x.rows());
    VectorT<S>& gv = *grads;
    gv = VectorT<S>::Zero(params.size());

    double loss = 0.0;
    BatchT<S> dlogits = c.probs;
    for (int i = 0; i < B; ++i) {
      loss -= std::log(std::max(double(c.probs(i, labels[i])), 1e-300));
      dlogits(i, labels[i]) -= S(1);
    }
    loss /= B;
    dlogits /= S(B);

    BatchT<S> d_drop;
    nn::fc_backward<S>(c.drop, params.mat("fc2.W"), dlogits, d_drop,
                       params.mat(gv, "fc2.W"), params.vec(gv, "fc2.b"));
    BatchT<S> d_f1 = (c.train && a.dropout > 0.0) ? d_drop.cwiseProduct(c.mask)
                                                  : d_drop;
    d_f1 = nn::relu_backward(c.f1_pre, d_f1);

    BatchT<S> d_p2;
    nn::fc_backward<S>(c.p2, params.mat("fc1.W"), d_f1, d_p2,
                       params.mat(gv, "fc1.W"), params.vec(gv, "fc1.b"));

    BatchT<S> d_c2 = nn::maxpool2_backward<S>(c.am2, c.c2.cols(), d_p2);
    d_c2 = nn::relu_backward(c.c2_pre, d_c2);
    const auto g2 = nn::same_conv_geom(a.image_h / 2, a.image_w / 2, a.kernel, 1);
    BatchT<S> d_p1;
    nn::conv_backward<S>(c.p1, a.conv1_filters, g2, params.mat("c2.W"), d_c2,
                         d_p1, params.mat(gv, "c2.W"), params.vec(gv, "c2.b"));

    BatchT<S> d_c1 = nn::maxpool2_backward<S>(c.am1, c.c1.cols(), d_p1);
    d_c1 = nn::relu_backward(c.c1_pre, d_c1);
    const auto g1 = nn::same_conv_geom(a.image_h, a.image_w, a.kernel, 1);
    BatchT<S> d_x;
    nn::conv_backward<S>(c.x, 1, g1, params.mat("c1.W"), d_c1, d_x,
                         params.mat(gv, "c1.W"), params.vec(gv, "c1.b"));
    return loss;
  }

  std::vector<int> predict(const BatchT<S>& x) {
    const BatchT<S> probs = forward(x, false, nullptr, nullptr);
    std::vector<int> out(probs.rows());
    for (Eigen::Index i = 0; i < probs.rows(); ++i) {
      Eigen::Index best;
      probs.row(i).maxCoeff(&best);
      out[i] = int(best);
    }
    return out;
  }
};

// Trains the probe on a labeled set and returns the frozen classifier.
template <class S>
Classifier<S> train_probe_classifier(const ImageSetT<S>& train,
                                     std::uint64_t seed,
                                     const ClassifierArch& arch = {},
                                     const ClassifierTrainConfig& cfg = {}) {
  if (train.labels.size() != train.size())
    throw LengthMismatch("train_probe_classifier: labeled set required");
  Classifier<S> model = Classifier<S>::init(arch, seed);
  Adam<S> adam(S(cfg.lr), S(cfg.beta1), S(cfg.beta2));
  adam.reset(model.params.size());
  RngStream order_rng = RngStream::derive(seed, "classifier.data");
  RngStream drop_rng = RngStream::derive(seed, "classifier.dropout");

  const int B = cfg.batch_size;
  const std::size_t n = train.size();
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    for (std::size_t i = 0; i + 1 < order.size(); ++i) {
      const std::size_t j = i + order_rng.uniform_int(order.size() - i);
      std::swap(order[i], order[j]);
    }
    for (std::size_t it = 0; it + B <= n; it += B) {
      BatchT<S> x(B, Eigen::Index(arch.image_h) * arch.image_w);
      std::vector<int> labels(B);
      for (int b = 0; b < B; ++b) {
        x.row(b) = flatten(train.images[order[it + b]]).transpose();
        labels[b] = train.labels[order[it + b]];
      }
      typename Classifier<S>::Cache cache;
      model.forward(x, true, &cache, &drop_rng);
      VectorT<S> grads;
      const double loss = model.backward_ce(cache, labels, &grads);
      if (!std::isfinite(loss))
        throw NumericalDivergence("classifier: non-finite loss");
      adam.step(model.params.flat(), grads);
    }
  }
  return model;
}

// Fraction of argmax predictions matching the (pre-corruption) labels.
template <class S>
double classify_accuracy(Classifier<S>& model,
                         const std::vector<ImageT<S>>& images,
                         const std::vector<int>& labels, int batch = 256) {
  if (images.size() != labels.size())
    throw LengthMismatch("classify_accuracy: image/label counts differ");
  if (images.empty()) throw LengthMismatch("classify_accuracy: empty input");
  std::size_t correct = 0;
  for (std::size_t at = 0; at < images.size(); at += std::size_t(batch)) {
    const std::size_t hi = std::min(images.size(), at + std::size_t(batch));
    BatchT<S> x(Eigen::Index(hi - at), images.front().size());
    for (std::size_t i = at; i < hi; ++i)
      x.row(Eigen::Index(i - at)) = flatten(images[i]).transpose();
    const auto pred = model.predict(x);
    for (std::size_t i = at; i < hi; ++i)
      if (pred[i - at] == labels[i]) ++correct;
  }
  return double(correct) / double(images.size());
}

}  // namespace sepgan
