#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "sepgan/corruption.hpp"
#include "sepgan/core.hpp"
#include "sepgan/dataset.hpp"
#include "sepgan/rng.hpp"

namespace sepgan {

// Synthetic structured-component tasks: sets of horizontal-line and
// vertical-line images. Small enough to train a GAN on in seconds, yet the
// orientation statistic below can score what each generator learned.
template <class S>
ImageSetT<S> make_line_image_set(int h, int w, std::size_t count,
                                 bool horizontal, int max_lines,
                                 std::uint64_t seed) {
  RngStream rng = RngStream::derive(seed, horizontal ? "lines-h" : "lines-v");
  ImageSetT<S> set;
  set.images.reserve(count);
  CorruptionSpec spec;
  spec.kind = CorruptionKind::lines;
  for (std::size_t i = 0; i < count; ++i) {
    const int lines = 1 + int(rng.uniform_int(std::uint64_t(max_lines)));
    spec.n_vertical = horizontal ? 0 : lines;
    spec.n_horizontal = horizontal ? lines : 0;
    set.images.push_back(gen_line_corruption<S>(h, w, spec, rng));
  }
  return set;
}

// Row-sum vs column-sum concentration. Horizontal-line images concentrate
// mass in a few rows (high row-sum dispersion, flat column sums); vertical
// ones are the transpose. Returns +1 horizontal, -1 vertical, 0 undecided.
// Images with no decisive structure (near-uniform or near-black, dispersion
// below the floor) are undecided rather than arbitrarily classified.
template <class S>
int orientation_of(const ImageT<S>& img, double dispersion_floor = 1.0) {
  const Eigen::VectorXd rows =
      img.template cast<double>().rowwise().sum();
  const Eigen::VectorXd cols =
      img.template cast<double>().colwise().sum().transpose();
  auto dispersion = [](const Eigen::VectorXd& v) {
    const double mean = v.mean();
    return std::sqrt((v.array() - mean).square().mean());
  };
  const double dr = dispersion(rows), dc = dispersion(cols);
  if (std::max(dr, dc) < dispersion_floor) return 0;
  if (dr > dc * 1.05) return +1;
  if (dc > dr * 1.05) return -1;
  return 0;
}

struct PurityScore {
  double g1_horizontal_frac = 0;  // fraction of g1 samples judged horizontal
  double g2_horizontal_frac = 0;
  double g1_purity = 0;  // majority fraction
  double g2_purity = 0;
  bool opposite = false;  // majority orientations differ
  double score = 0;       // best antisymmetric assignment, in [0,1]
};

// Component-purity of a demixing run: how cleanly generator-1's samples land
// in one orientation and generator-2's in the other.
template <class S>
PurityScore demix_purity(const std::vector<ImageT<S>>& g1_samples,
                         const std::vector<ImageT<S>>& g2_samples) {
  // fractions over all samples; undecided ones count toward neither
  auto fracs = [](const std::vector<ImageT<S>>& v) {
    double h = 0, vv = 0;
    for (const auto& img : v) {
      const int o = orientation_of(img);
      if (o > 0) h += 1.0;
      if (o < 0) vv += 1.0;
    }
    const double n = std::max<double>(1.0, double(v.size()));
    return std::pair{h / n, vv / n};
  };
  const auto [h1, v1] = fracs(g1_samples);
  const auto [h2, v2] = fracs(g2_samples);
  PurityScore p;
  p.g1_horizontal_frac = h1;
  p.g2_horizontal_frac = h2;
  p.g1_purity = std::max(h1, v1);
  p.g2_purity = std::max(h2, v2);
  p.opposite = (h1 >= v1) != (h2 >= v2);
  // score the best of (g1->H, g2->V) and (g1->V, g2->H)
  p.score = std::max(0.5 * (h1 + v2), 0.5 * (v1 + h2));
  return p;
}

// Full-width line with a Gaussian cross profile at a continuous (sub-pixel)
// position. The class is a one-dimensional manifold, which a small generator
// covers without mode hopping, and the line carries enough mass that an
// all-black reconstruction scores worse than the corrupted input.
template <class S>
ImageSetT<S> make_soft_line_image_set(int h, int w, std::size_t count,
                                      bool horizontal, std::uint64_t seed,
                                      double sigma = 0.7) {
  RngStream rng =
      RngStream::derive(seed, horizontal ? "soft-lines-h" : "soft-lines-v");
  ImageSetT<S> set;
  set.images.reserve(count);
  const int extent = horizontal ? h : w;
  for (std::size_t i = 0; i < count; ++i) {
    ImageT<S> img = ImageT<S>::Zero(h, w);
    const double pos = rng.uniform(1.0, extent - 2.0);
    for (int j = 0; j < extent; ++j) {
      const double d = (j - pos) / sigma;
      const double v = std::exp(-0.5 * d * d);
      if (v < 1e-4) continue;
      if (horizontal)
        img.row(j).setConstant(S(v));
      else
        img.col(j).setConstant(S(v));
    }
    set.images.push_back(std::move(img));
  }
  return set;
}

// k-sparse signals in [0,1]^p for the compressed-sensing baseline sweeps.
template <class S>
std::vector<VectorT<S>> make_sparse_signals(int p, int sparsity,
                                            std::size_t count,
                                            std::uint64_t seed) {
  RngStream rng = RngStream::derive(seed, "sparse-signals");
  std::vector<VectorT<S>> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    VectorT<S> x = VectorT<S>::Zero(p);
    std::vector<int> support = detail::sample_without_replacement(p, sparsity, rng);
    for (int idx : support) x(idx) = S(rng.uniform(0.2, 1.0));
    out.push_back(std::move(x));
  }
  return out;
}

}  // namespace sepgan
