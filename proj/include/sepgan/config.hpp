#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "sepgan/core.hpp"

namespace sepgan {

// Sectioned key/value configuration with a fixed schema: every key has a
// declared type and default, unknown keys are hard errors, and the resolved
// config (all defaults materialized) serializes canonically so a run can be
// replayed from its manifest snapshot.
class Config {
 public:
  enum class Type { integer, unsigned64, real, boolean, text, choice, int_list, real_list };

  struct Field {
    std::string key;  // "section.name"
    Type type;
    std::string default_value;
    std::vector<std::string> choices;  // Type::choice only
  };

  Config();  // all defaults

  static Config load(const std::filesystem::path& path);
  static Config parse(const std::string& text);

  std::string serialize() const;

  void set(const std::string& key, const std::string& value);  // validates

  long long get_int(const std::string& key) const;
  std::uint64_t get_u64(const std::string& key) const;
  double get_double(const std::string& key) const;
  bool get_bool(const std::string& key) const;
  const std::string& get_string(const std::string& key) const;
  std::vector<long long> get_int_list(const std::string& key) const;
  std::vector<double> get_double_list(const std::string& key) const;

  bool operator==(const Config& other) const { return values_ == other.values_; }

  static const std::vector<Field>& schema();

 private:
  const Field& field(const std::string& key) const;
  std::map<std::string, std::string> values_;  // key -> canonical text
};

}  // namespace sepgan
