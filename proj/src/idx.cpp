#include "sepgan/idx.hpp"

#include <fstream>

namespace sepgan {

namespace {

std::uint32_t read_be_u32(const std::vector<std::uint8_t>& b, std::size_t at) {
  return (std::uint32_t(b[at]) << 24) | (std::uint32_t(b[at + 1]) << 16) |
         (std::uint32_t(b[at + 2]) << 8) | std::uint32_t(b[at + 3]);
}

void append_be_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  out.push_back(static_cast<std::uint8_t>(v >> 24));
  out.push_back(static_cast<std::uint8_t>(v >> 16));
  out.push_back(static_cast<std::uint8_t>(v >> 8));
  out.push_back(static_cast<std::uint8_t>(v));
}

}  // namespace

IdxData parse_idx(const std::vector<std::uint8_t>& bytes) {
  if (bytes.size() < 4) throw Truncated("idx: fewer than 4 bytes");
  const std::uint32_t magic = read_be_u32(bytes, 0);
  std::size_t ndims = 0;
  if (magic == kIdxImagesMagic)
    ndims = 3;
  else if (magic == kIdxLabelsMagic)
    ndims = 1;
  else {
    char buf[16];
    std::snprintf(buf, sizeof buf, "0x%08x", magic);
    throw BadMagic(std::string("idx: unknown magic word ") + buf);
  }

  const std::size_t header = 4 + 4 * ndims;
  if (bytes.size() < header) throw Truncated("idx: header cut short");

  IdxData d;
  d.magic = magic;
  std::size_t count = 1;
  for (std::size_t i = 0; i < ndims; ++i) {
    const std::uint32_t dim = read_be_u32(bytes, 4 + 4 * i);
    d.dims.push_back(dim);
    count *= dim;
  }
  if (bytes.size() < header + count)
    throw Truncated("idx: payload shorter than header promises (" +
                    std::to_string(bytes.size() - header) + " of " +
                    std::to_string(count) + " bytes)");
  if (bytes.size() > header + count)
    throw Truncated("idx: payload longer than header promises (" +
                    std::to_string(bytes.size() - header) + " of " +
                    std::to_string(count) + " bytes)");
  d.payload.assign(bytes.begin() + header, bytes.end());
  return d;
}

std::vector<std::uint8_t> serialize_idx(const IdxData& d) {
  std::vector<std::uint8_t> out;
  out.reserve(4 + 4 * d.dims.size() + d.payload.size());
  append_be_u32(out, d.magic);
  for (std::uint32_t dim : d.dims) append_be_u32(out, dim);
  out.insert(out.end(), d.payload.begin(), d.payload.end());
  return out;
}

IdxData read_idx_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("idx: cannot open " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  return parse_idx(bytes);
}

void write_idx_file(const std::filesystem::path& path, const IdxData& d) {
  const auto bytes = serialize_idx(d);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("idx: cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
}

}  // namespace sepgan
