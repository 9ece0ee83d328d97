#include "sepgan/pngio.hpp"

#include <zlib.h>

#include <array>
#include <cstring>
#include <fstream>
#include <stdexcept>

#include "sepgan/core.hpp"

namespace sepgan {

namespace {

void append_be_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  out.push_back(std::uint8_t(v >> 24));
  out.push_back(std::uint8_t(v >> 16));
  out.push_back(std::uint8_t(v >> 8));
  out.push_back(std::uint8_t(v));
}

std::uint32_t read_be_u32(const std::uint8_t* p) {
  return (std::uint32_t(p[0]) << 24) | (std::uint32_t(p[1]) << 16) |
         (std::uint32_t(p[2]) << 8) | std::uint32_t(p[3]);
}

void append_chunk(std::vector<std::uint8_t>& out, const char type[4],
                  const std::vector<std::uint8_t>& data) {
  append_be_u32(out, std::uint32_t(data.size()));
  const std::size_t crc_start = out.size();
  out.insert(out.end(), type, type + 4);
  out.insert(out.end(), data.begin(), data.end());
  const auto crc =
      crc32(0, out.data() + crc_start, uInt(out.size() - crc_start));
  append_be_u32(out, std::uint32_t(crc));
}

constexpr std::array<std::uint8_t, 8> kPngSignature = {0x89, 'P', 'N', 'G',
                                                       '\r', '\n', 0x1a, '\n'};

}  // namespace

void write_png_gray8(const std::filesystem::path& path, int height, int width,
                     const std::vector<std::uint8_t>& pixels) {
  if (height <= 0 || width <= 0 ||
      pixels.size() != std::size_t(height) * std::size_t(width))
    throw BadCount("png: pixel buffer does not match dimensions");

  // scanlines with filter byte 0 (None)
  std::vector<std::uint8_t> raw;
  raw.reserve(std::size_t(height) * (std::size_t(width) + 1));
  for (int r = 0; r < height; ++r) {
    raw.push_back(0);
    raw.insert(raw.end(), pixels.begin() + std::size_t(r) * width,
               pixels.begin() + std::size_t(r + 1) * width);
  }
  uLongf comp_len = compressBound(uLong(raw.size()));
  std::vector<std::uint8_t> comp(comp_len);
  if (compress2(comp.data(), &comp_len, raw.data(), uLong(raw.size()), 6) != Z_OK)
    throw Error("png: deflate failed");
  comp.resize(comp_len);

  std::vector<std::uint8_t> out(kPngSignature.begin(), kPngSignature.end());
  std::vector<std::uint8_t> ihdr;
  append_be_u32(ihdr, std::uint32_t(width));
  append_be_u32(ihdr, std::uint32_t(height));
  ihdr.push_back(8);  // bit depth
  ihdr.push_back(0);  // color type: grayscale
  ihdr.push_back(0);  // compression
  ihdr.push_back(0);  // filter method
  ihdr.push_back(0);  // no interlace
  append_chunk(out, "IHDR", ihdr);
  append_chunk(out, "IDAT", comp);
  append_chunk(out, "IEND", {});

  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw Error("png: cannot write " + path.string());
  f.write(reinterpret_cast<const char*>(out.data()),
          std::streamsize(out.size()));
}

Gray8Image read_png_gray8(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw Error("png: cannot open " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(f)),
                                  std::istreambuf_iterator<char>());
  if (bytes.size() < 8 ||
      !std::equal(kPngSignature.begin(), kPngSignature.end(), bytes.begin()))
    throw Error("png: bad signature in " + path.string());

  Gray8Image img;
  std::vector<std::uint8_t> idat;
  std::size_t at = 8;
  while (at + 8 <= bytes.size()) {
    const std::uint32_t len = read_be_u32(&bytes[at]);
    const std::string type(bytes.begin() + at + 4, bytes.begin() + at + 8);
    if (at + 12 + len > bytes.size()) throw Error("png: truncated chunk");
    const std::uint8_t* data = &bytes[at + 8];
    if (type == "IHDR") {
      img.width = int(read_be_u32(data));
      img.height = int(read_be_u32(data + 4));
      if (data[8] != 8 || data[9] != 0 || data[12] != 0)
        throw Error("png: only 8-bit grayscale non-interlaced supported");
    } else if (type == "IDAT") {
      idat.insert(idat.end(), data, data + len);
    } else if (type == "IEND") {
      break;
    }
    at += 12 + len;
  }
  if (img.width <= 0 || img.height <= 0) throw Error("png: missing IHDR");

  const std::size_t stride = std::size_t(img.width) + 1;
  std::vector<std::uint8_t> raw(stride * img.height);
  uLongf raw_len = uLongf(raw.size());
  if (uncompress(raw.data(), &raw_len, idat.data(), uLong(idat.size())) != Z_OK ||
      raw_len != raw.size())
    throw Error("png: inflate failed");

  img.pixels.resize(std::size_t(img.width) * img.height);
  // de-filter; bpp = 1 for gray8
  for (int r = 0; r < img.height; ++r) {
    const std::uint8_t filter = raw[r * stride];
    const std::uint8_t* src = &raw[r * stride + 1];
    std::uint8_t* dst = &img.pixels[std::size_t(r) * img.width];
    const std::uint8_t* up =
        r > 0 ? &img.pixels[std::size_t(r - 1) * img.width] : nullptr;
    for (int c = 0; c < img.width; ++c) {
      const int left = c > 0 ? dst[c - 1] : 0;
      const int above = up ? up[c] : 0;
      const int upleft = (up && c > 0) ? up[c - 1] : 0;
      int v = src[c];
      switch (filter) {
        case 0: break;
        case 1: v += left; break;
        case 2: v += above; break;
        case 3: v += (left + above) / 2; break;
        case 4: {
          const int p = left + above - upleft;
          const int pa = std::abs(p - left), pb = std::abs(p - above),
                    pc = std::abs(p - upleft);
          v += (pa <= pb && pa <= pc) ? left : (pb <= pc ? above : upleft);
          break;
        }
        default: throw Error("png: unknown filter type");
      }
      dst[c] = std::uint8_t(v & 0xff);
    }
  }
  return img;
}

}  // namespace sepgan
