#pragma once

#include <array>
#include <cmath>
#include <numeric>
#include <vector>

#include "sepgan/core.hpp"
#include "sepgan/dataset.hpp"
#include "sepgan/rng.hpp"

namespace sepgan {

enum class CorruptionKind { sine, lines };

// lc is the level of corruption: the number of sinusoids (sine kind) or the
// per-orientation line count (lines kind, unless n_vertical/n_horizontal
// override it).
struct CorruptionSpec {
  CorruptionKind kind = CorruptionKind::sine;
  int lc = 1;
  int n_vertical = -1;    // lines kind; -1 means "use lc"
  int n_horizontal = -1;  // lines kind; -1 means "use lc"
  std::array<double, 2> amplitude_range{0.5, 1.0};  // fraction of h/4
  std::array<double, 2> frequency_range{1.0, 4.0};  // cycles per image width
  std::array<double, 2> phase_range{0.0, 2.0 * M_PI};

  int vertical_count() const { return n_vertical >= 0 ? n_vertical : lc; }
  int horizontal_count() const { return n_horizontal >= 0 ? n_horizontal : lc; }
};

// lc one-pixel-thick curves y(x) = round(c + a*h/4*sin(2*pi*f*x/w + phi)),
// rows clipped to the image; curve pixels 1, rest 0.
template <class S>
ImageT<S> gen_sine_corruption(int h, int w, const CorruptionSpec& spec,
                              RngStream& rng) {
  if (spec.kind != CorruptionKind::sine)
    throw ConfigInvalid("gen_sine_corruption: spec.kind != sine");
  ImageT<S> img = ImageT<S>::Zero(h, w);
  for (int curve = 0; curve < spec.lc; ++curve) {
    const double a = rng.uniform(spec.amplitude_range[0], spec.amplitude_range[1]);
    const double f = rng.uniform(spec.frequency_range[0], spec.frequency_range[1]);
    const double phi = rng.uniform(spec.phase_range[0], spec.phase_range[1]);
    const int c = int(rng.uniform_int(std::uint64_t(h)));
    for (int x = 0; x < w; ++x) {
      long y = std::lround(c + a * h / 4.0 * std::sin(2.0 * M_PI * f * x / w + phi));
      y = std::min<long>(std::max<long>(y, 0), h - 1);
      img(int(y), x) = S(1);
    }
  }
  return img;
}

namespace detail {

// First n entries of a seeded partial Fisher-Yates over 0..total-1.
inline std::vector<int> sample_without_replacement(int total, int n,
                                                   RngStream& rng) {
  std::vector<int> pool(total);
  std::iota(pool.begin(), pool.end(), 0);
  for (int i = 0; i < n; ++i) {
    const int j = i + int(rng.uniform_int(std::uint64_t(total - i)));
    std::swap(pool[i], pool[j]);
  }
  pool.resize(n);
  return pool;
}

}  // namespace detail

// n_vertical distinct full-height columns and n_horizontal distinct
// full-width rows set to 1.
template <class S>
ImageT<S> gen_line_corruption(int h, int w, const CorruptionSpec& spec,
                              RngStream& rng) {
  if (spec.kind != CorruptionKind::lines)
    throw ConfigInvalid("gen_line_corruption: spec.kind != lines");
  const int nv = spec.vertical_count();
  const int nh = spec.horizontal_count();
  if (nv > w)
    throw TooManyLines("gen_line_corruption: " + std::to_string(nv) +
                       " vertical lines exceed width " + std::to_string(w));
  if (nh > h)
    throw TooManyLines("gen_line_corruption: " + std::to_string(nh) +
                       " horizontal lines exceed height " + std::to_string(h));
  ImageT<S> img = ImageT<S>::Zero(h, w);
  for (int col : detail::sample_without_replacement(w, nv, rng))
    img.col(col).setConstant(S(1));
  for (int row : detail::sample_without_replacement(h, nh, rng))
    img.row(row).setConstant(S(1));
  return img;
}

template <class S>
ImageT<S> sample_corruption(int h, int w, const CorruptionSpec& spec,
                            RngStream& rng) {
  return spec.kind == CorruptionKind::sine
             ? gen_sine_corruption<S>(h, w, spec, rng)
             : gen_line_corruption<S>(h, w, spec, rng);
}

// Elementwise sum, unclamped.
template <class S>
ImageT<S> superpose(const ImageT<S>& x, const ImageT<S>& n) {
  if (x.rows() != n.rows() || x.cols() != n.cols())
    throw ShapeMismatch("superpose: shapes differ");
  return x + n;
}

// Counterclockwise rotation about the image center. 0 and 90 degrees are
// exact index permutations; the other supported angles use bilinear
// interpolation with zero padding.
template <class S>
ImageT<S> rotate(const ImageT<S>& img, int degrees) {
  if (img.rows() != img.cols())
    throw ShapeMismatch("rotate: image must be square");
  if (degrees != 0 && degrees != 10 && degrees != 30 && degrees != 60 &&
      degrees != 90)
    throw UnsupportedAngle("rotate: angle " + std::to_string(degrees) +
                           " not in {0,10,30,60,90}");
  const int n = int(img.rows());
  if (degrees == 0) return img;
  ImageT<S> out(n, n);
  if (degrees == 90) {
    for (int r = 0; r < n; ++r)
      for (int c = 0; c < n; ++c) out(n - 1 - c, r) = img(r, c);
    return out;
  }
  const double theta = degrees * M_PI / 180.0;
  const double ct = std::cos(theta), st = std::sin(theta);
  const double m = (n - 1) / 2.0;
  out.setZero();
  for (int r = 0; r < n; ++r)
    for (int c = 0; c < n; ++c) {
      // inverse map: rotate the destination pixel back by theta
      const double u = c - m, v = r - m;
      const double cs = u * ct - v * st + m;
      const double rs = u * st + v * ct + m;
      const int r0 = int(std::floor(rs)), c0 = int(std::floor(cs));
      const double fr = rs - r0, fc = cs - c0;
      auto at = [&](int rr, int cc) -> double {
        return (rr >= 0 && rr < n && cc >= 0 && cc < n) ? double(img(rr, cc))
                                                        : 0.0;
      };
      out(r, c) = S((1 - fr) * ((1 - fc) * at(r0, c0) + fc * at(r0, c0 + 1)) +
                    fr * ((1 - fc) * at(r0 + 1, c0) + fc * at(r0 + 1, c0 + 1)));
    }
  return out;
}

// k fresh corruption samples as an ImageSet (the extensional stand-in for
// the structured noise class).
template <class S>
ImageSetT<S> make_corruption_set(int h, int w, const CorruptionSpec& spec,
                                 std::size_t count, std::uint64_t seed) {
  RngStream rng = RngStream::derive(seed, "corruption-set");
  ImageSetT<S> out;
  out.images.reserve(count);
  for (std::size_t i = 0; i < count; ++i)
    out.images.push_back(sample_corruption<S>(h, w, spec, rng));
  return out;
}

}  // namespace sepgan
