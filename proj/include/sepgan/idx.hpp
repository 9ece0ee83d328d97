#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "sepgan/core.hpp"

namespace sepgan {

inline constexpr std::uint32_t kIdxImagesMagic = 0x00000803;  // ubyte, 3-D
inline constexpr std::uint32_t kIdxLabelsMagic = 0x00000801;  // ubyte, 1-D

// Raw decoded IDX container: big-endian magic + per-dimension sizes, then a
// row-major unsigned byte payload.
struct IdxData {
  std::uint32_t magic = 0;
  std::vector<std::uint32_t> dims;
  std::vector<std::uint8_t> payload;

  bool is_images() const { return magic == kIdxImagesMagic; }
  bool is_labels() const { return magic == kIdxLabelsMagic; }
};

// Throws BadMagic for any magic other than the two accepted ones, Truncated
// when the byte count disagrees with what the header promises.
IdxData parse_idx(const std::vector<std::uint8_t>& bytes);

// Canonical writer; parse_idx(serialize_idx(d)) == d byte for byte.
std::vector<std::uint8_t> serialize_idx(const IdxData& d);

IdxData read_idx_file(const std::filesystem::path& path);
void write_idx_file(const std::filesystem::path& path, const IdxData& d);

}  // namespace sepgan
