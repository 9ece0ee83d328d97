#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "sepgan/core.hpp"

namespace sepgan {

// Versioned checkpoint container: a JSON manifest followed by named raw
// little-endian float64 blobs. Loading reproduces forward outputs bit-exactly.
struct Checkpoint {
  nlohmann::json manifest;  // architecture descriptor, seed, step count, ...
  struct Blob {
    std::string name;
    std::vector<std::uint64_t> dims;
    std::vector<double> data;
  };
  std::vector<Blob> blobs;

  void add(const std::string& name, const Eigen::VectorXd& v,
           std::vector<std::uint64_t> dims = {}) {
    Blob b;
    b.name = name;
    b.dims = dims.empty() ? std::vector<std::uint64_t>{std::uint64_t(v.size())}
                          : std::move(dims);
    b.data.assign(v.data(), v.data() + v.size());
    blobs.push_back(std::move(b));
  }

  const Blob& blob(const std::string& name) const {
    for (const auto& b : blobs)
      if (b.name == name) return b;
    throw Error("checkpoint: no blob named " + name);
  }

  Eigen::VectorXd vec(const std::string& name) const {
    const Blob& b = blob(name);
    return Eigen::Map<const Eigen::VectorXd>(b.data.data(),
                                             Eigen::Index(b.data.size()));
  }

  bool has(const std::string& name) const {
    for (const auto& b : blobs)
      if (b.name == name) return true;
    return false;
  }
};

namespace detail {

inline void put_u32(std::ostream& os, std::uint32_t v) {
  char b[4] = {char(v), char(v >> 8), char(v >> 16), char(v >> 24)};
  os.write(b, 4);
}

inline std::uint32_t get_u32(std::istream& is) {
  unsigned char b[4];
  is.read(reinterpret_cast<char*>(b), 4);
  return std::uint32_t(b[0]) | (std::uint32_t(b[1]) << 8) |
         (std::uint32_t(b[2]) << 16) | (std::uint32_t(b[3]) << 24);
}

inline void put_u64(std::ostream& os, std::uint64_t v) {
  put_u32(os, std::uint32_t(v));
  put_u32(os, std::uint32_t(v >> 32));
}

inline std::uint64_t get_u64(std::istream& is) {
  const std::uint64_t lo = get_u32(is);
  const std::uint64_t hi = get_u32(is);
  return lo | (hi << 32);
}

}  // namespace detail

inline constexpr char kCheckpointMagic[8] = {'S', 'G', 'C', 'K',
                                             'P', 'T', '0', '1'};

// Atomic write: temp file in the destination directory, then rename.
inline void save_checkpoint(const std::filesystem::path& path,
                            const Checkpoint& ck) {
  const auto tmp = path.string() + ".tmp";
  {
    std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
    if (!os) throw Error("checkpoint: cannot write " + tmp);
    os.write(kCheckpointMagic, 8);
    const std::string man = ck.manifest.dump();
    detail::put_u32(os, std::uint32_t(man.size()));
    os.write(man.data(), std::streamsize(man.size()));
    detail::put_u32(os, std::uint32_t(ck.blobs.size()));
    for (const auto& b : ck.blobs) {
      detail::put_u32(os, std::uint32_t(b.name.size()));
      os.write(b.name.data(), std::streamsize(b.name.size()));
      detail::put_u32(os, std::uint32_t(b.dims.size()));
      for (auto d : b.dims) detail::put_u64(os, d);
      detail::put_u64(os, b.data.size());
      os.write(reinterpret_cast<const char*>(b.data.data()),
               std::streamsize(b.data.size() * sizeof(double)));
    }
  }
  std::filesystem::rename(tmp, path);
}

inline Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error("checkpoint: cannot open " + path.string());
  char magic[8];
  is.read(magic, 8);
  if (!is || std::string(magic, 8) != std::string(kCheckpointMagic, 8))
    throw Error("checkpoint: bad magic in " + path.string());
  Checkpoint ck;
  const std::uint32_t man_len = detail::get_u32(is);
  std::string man(man_len, '\0');
  is.read(man.data(), man_len);
  ck.manifest = nlohmann::json::parse(man);
  const std::uint32_t n = detail::get_u32(is);
  for (std::uint32_t i = 0; i < n; ++i) {
    Checkpoint::Blob b;
    const std::uint32_t name_len = detail::get_u32(is);
    b.name.resize(name_len);
    is.read(b.name.data(), name_len);
    const std::uint32_t rank = detail::get_u32(is);
    for (std::uint32_t r = 0; r < rank; ++r) b.dims.push_back(detail::get_u64(is));
    const std::uint64_t count = detail::get_u64(is);
    b.data.resize(count);
    is.read(reinterpret_cast<char*>(b.data.data()),
            std::streamsize(count * sizeof(double)));
    if (!is) throw Truncated("checkpoint: blob data cut short in " + path.string());
    ck.blobs.push_back(std::move(b));
  }
  return ck;
}

}  // namespace sepgan
