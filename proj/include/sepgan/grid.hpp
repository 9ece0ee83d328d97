#pragma once

#include <cmath>
#include <filesystem>
#include <vector>

#include "sepgan/core.hpp"
#include "sepgan/pngio.hpp"

namespace sepgan {

inline constexpr int kGridSide = 8;

// 8x8 row-major montage of exactly 64 images, clamped to [0,1] and scaled to
// 8-bit. Metric computation never clamps; display emission is the one place
// that does.
template <class S>
void write_sample_grid(const std::vector<ImageT<S>>& images,
                       const std::filesystem::path& path) {
  if (images.size() != std::size_t(kGridSide * kGridSide))
    throw BadCount("write_sample_grid: need exactly 64 images, got " +
                   std::to_string(images.size()));
  const int h = int(images.front().rows());
  const int w = int(images.front().cols());
  std::vector<std::uint8_t> pixels(std::size_t(kGridSide * h) *
                                   std::size_t(kGridSide * w));
  for (int i = 0; i < kGridSide * kGridSide; ++i) {
    const auto& img = images[i];
    if (img.rows() != h || img.cols() != w)
      throw ShapeMismatch("write_sample_grid: image shapes differ");
    const int tile_r = (i / kGridSide) * h;
    const int tile_c = (i % kGridSide) * w;
    for (int r = 0; r < h; ++r)
      for (int c = 0; c < w; ++c) {
        const double v = std::min(std::max(double(img(r, c)), 0.0), 1.0);
        pixels[std::size_t(tile_r + r) * (kGridSide * w) + tile_c + c] =
            std::uint8_t(std::lround(v * 255.0));
      }
  }
  write_png_gray8(path, kGridSide * h, kGridSide * w, pixels);
}

}  // namespace sepgan
