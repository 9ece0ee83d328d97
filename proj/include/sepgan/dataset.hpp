#pragma once

#include <cstdint>
#include <cmath>
#include <string>
#include <vector>

#include "sepgan/core.hpp"
#include "sepgan/idx.hpp"
#include "sepgan/rng.hpp"

namespace sepgan {

// Ordered image collection, pixels in [0,1], optional class labels.
template <class S>
struct ImageSetT {
  std::vector<ImageT<S>> images;
  std::vector<int> labels;  // empty when absent

  std::size_t size() const { return images.size(); }
  bool empty() const { return images.empty(); }
  int height() const { return images.empty() ? 0 : int(images.front().rows()); }
  int width() const { return images.empty() ? 0 : int(images.front().cols()); }
};

using ImageSet = ImageSetT<double>;

struct PairProvenance {
  std::size_t a = 0;
  std::size_t b = 0;
  std::uint64_t seed = 0;
};

// Superposed pairs y = a + b, unclamped, with the pairing recorded so a run
// can be replayed exactly.
template <class S>
struct MixtureSetT {
  std::vector<ImageT<S>> mixtures;
  std::vector<PairProvenance> provenance;

  std::size_t size() const { return mixtures.size(); }
};

using MixtureSet = MixtureSetT<double>;

template <class S>
ImageSetT<S> images_from_idx(const IdxData& d) {
  if (!d.is_images()) throw BadMagic("idx: not an image container");
  ImageSetT<S> set;
  const std::size_t n = d.dims[0];
  const int h = int(d.dims[1]), w = int(d.dims[2]);
  set.images.reserve(n);
  std::size_t at = 0;
  for (std::size_t i = 0; i < n; ++i) {
    ImageT<S> img(h, w);
    for (int r = 0; r < h; ++r)
      for (int c = 0; c < w; ++c)
        img(r, c) = static_cast<S>(d.payload[at++]) / S(255);
    set.images.push_back(std::move(img));
  }
  return set;
}

inline std::vector<int> labels_from_idx(const IdxData& d) {
  if (!d.is_labels()) throw BadMagic("idx: not a label container");
  return std::vector<int>(d.payload.begin(), d.payload.end());
}

// Canonical writer used by the round-trip property: pixel k/255 -> byte k.
template <class S>
IdxData images_to_idx(const ImageSetT<S>& set) {
  IdxData d;
  d.magic = kIdxImagesMagic;
  d.dims = {std::uint32_t(set.size()), std::uint32_t(set.height()),
            std::uint32_t(set.width())};
  d.payload.reserve(set.size() * std::size_t(set.height()) * set.width());
  for (const auto& img : set.images)
    for (int r = 0; r < img.rows(); ++r)
      for (int c = 0; c < img.cols(); ++c) {
        double v = std::min(std::max(double(img(r, c)), 0.0), 1.0);
        d.payload.push_back(
            static_cast<std::uint8_t>(std::lround(v * 255.0)));
      }
  return d;
}

inline IdxData labels_to_idx(const std::vector<int>& labels) {
  IdxData d;
  d.magic = kIdxLabelsMagic;
  d.dims = {std::uint32_t(labels.size())};
  for (int v : labels) d.payload.push_back(static_cast<std::uint8_t>(v));
  return d;
}

// Pixel p maps to 1 iff p >= threshold (boundary inclusive). Idempotent.
template <class S>
ImageSetT<S> binarize(const ImageSetT<S>& set, double threshold) {
  if (!(threshold > 0.0 && threshold < 1.0))
    throw ConfigInvalid("binarize: threshold must lie in (0,1)");
  ImageSetT<S> out;
  out.labels = set.labels;
  out.images.reserve(set.size());
  for (const auto& img : set.images)
    out.images.push_back(
        (img.array() >= S(threshold)).template cast<S>().matrix());
  return out;
}

// Uniform random pairing with replacement; deterministic given seed; sums
// left unclamped so dataset mixtures and generator-output sums stay on the
// same scale.
template <class S>
MixtureSetT<S> make_mixture_dataset(const ImageSetT<S>& a,
                                    const ImageSetT<S>& b, std::size_t k,
                                    std::uint64_t seed) {
  if (a.empty() || b.empty())
    throw ShapeMismatch("make_mixture_dataset: empty source set");
  if (a.height() != b.height() || a.width() != b.width())
    throw ShapeMismatch("make_mixture_dataset: source shapes differ");
  RngStream rng = RngStream::derive(seed, "mixture-pairing");
  MixtureSetT<S> out;
  out.mixtures.reserve(k);
  out.provenance.reserve(k);
  for (std::size_t i = 0; i < k; ++i) {
    const std::size_t ia = rng.uniform_int(a.size());
    const std::size_t ib = rng.uniform_int(b.size());
    out.mixtures.push_back(a.images[ia] + b.images[ib]);
    out.provenance.push_back({ia, ib, seed});
  }
  return out;
}

template <class S>
ImageSetT<S> subset(const ImageSetT<S>& set, std::size_t begin,
                    std::size_t count) {
  ImageSetT<S> out;
  for (std::size_t i = begin; i < begin + count && i < set.size(); ++i) {
    out.images.push_back(set.images[i]);
    if (!set.labels.empty()) out.labels.push_back(set.labels[i]);
  }
  return out;
}

}  // namespace sepgan
