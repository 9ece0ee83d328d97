#include "sepgan/manifest.hpp"

#include <chrono>
#include <ctime>
#include <fstream>

#include "sepgan/core.hpp"

namespace sepgan {

std::string iso_timestamp_utc() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

nlohmann::json RunManifest::to_json() const {
  return {{"subcommand", subcommand},
          {"config", config.serialize()},
          {"seed", seed},
          {"started", started},
          {"finished", finished},
          {"artifacts", artifacts},
          {"code_version", code_version},
          {"metrics", metrics}};
}

namespace {

void write_atomic(const std::filesystem::path& path, const std::string& text) {
  const auto tmp = path.string() + ".tmp";
  {
    std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
    if (!os) throw Error("manifest: cannot write " + tmp);
    os << text;
  }
  std::filesystem::rename(tmp, path);
}

}  // namespace

void write_manifest(const std::filesystem::path& dir, const RunManifest& m) {
  std::filesystem::create_directories(dir);
  write_atomic(dir / "manifest.json", m.to_json().dump(2) + "\n");
  write_atomic(dir / "config.ini", m.config.serialize());
}

void write_metrics(const std::filesystem::path& dir, const nlohmann::json& metrics) {
  std::filesystem::create_directories(dir);
  write_atomic(dir / "metrics.json", metrics.dump(2) + "\n");
}

}  // namespace sepgan
