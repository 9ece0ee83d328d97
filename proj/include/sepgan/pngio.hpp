#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

namespace sepgan {

// Minimal 8-bit grayscale PNG codec (zlib deflate, non-interlaced). Covers
// exactly what the sample grids need; the reader handles any row filter so
// foreign grayscale files also load.
void write_png_gray8(const std::filesystem::path& path, int height, int width,
                     const std::vector<std::uint8_t>& pixels);

struct Gray8Image {
  int height = 0;
  int width = 0;
  std::vector<std::uint8_t> pixels;  // row-major
};

Gray8Image read_png_gray8(const std::filesystem::path& path);

}  // namespace sepgan
