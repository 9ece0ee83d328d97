#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "sepgan/config.hpp"

namespace sepgan {

// Written atomically at run end. Config + seeds reproduce all primary
// artifacts bit-exactly in single-threaded mode; timestamps are the only
// run-to-run difference.
struct RunManifest {
  std::string subcommand;
  Config config;  // fully resolved
  std::uint64_t seed = 0;
  std::string started;
  std::string finished;
  std::vector<std::string> artifacts;  // paths relative to the run directory
  std::string code_version;
  nlohmann::json metrics = nlohmann::json::object();

  nlohmann::json to_json() const;
};

std::string iso_timestamp_utc();

// Writes manifest.json and a config.ini snapshot into dir (atomic rename).
void write_manifest(const std::filesystem::path& dir, const RunManifest& m);

// Metrics alone, timestamp-free, for byte-level determinism comparisons.
void write_metrics(const std::filesystem::path& dir, const nlohmann::json& metrics);

}  // namespace sepgan
