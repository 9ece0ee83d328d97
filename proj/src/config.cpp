#include "sepgan/config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <sstream>

namespace sepgan {

namespace {

std::string trim(const std::string& s) {
  std::size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return s.substr(a, b - a);
}

bool parse_ll(const std::string& s, long long& out) {
  const char* first = s.data();
  const char* last = s.data() + s.size();
  auto [p, ec] = std::from_chars(first, last, out);
  return ec == std::errc() && p == last;
}

bool parse_f64(const std::string& s, double& out) {
  try {
    std::size_t used = 0;
    out = std::stod(s, &used);
    return used == s.size();
  } catch (...) {
    return false;
  }
}

std::vector<std::string> split_commas(const std::string& s) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream is(s);
  while (std::getline(is, cur, ',')) out.push_back(trim(cur));
  if (!s.empty() && s.back() == ',') out.push_back("");
  return out;
}

}  // namespace

const std::vector<Config::Field>& Config::schema() {
  static const std::vector<Field> s = {
      {"run.seed", Type::unsigned64, "0", {}},
      {"run.out", Type::text, "run", {}},
      {"run.device", Type::choice, "cpu", {"cpu"}},

      {"dataset.images", Type::text, "", {}},
      {"dataset.labels", Type::text, "", {}},
      {"dataset.images_b", Type::text, "", {}},
      {"dataset.labels_b", Type::text, "", {}},
      {"dataset.binarize", Type::boolean, "true", {}},
      {"dataset.binarize_threshold", Type::real, "0.5", {}},
      {"dataset.mixture_count", Type::integer, "0", {}},
      {"dataset.limit", Type::integer, "0", {}},

      {"corruption.kind", Type::choice, "sine", {"sine", "lines"}},
      {"corruption.lc", Type::integer, "1", {}},
      {"corruption.n_vertical", Type::integer, "-1", {}},
      {"corruption.n_horizontal", Type::integer, "-1", {}},
      {"corruption.amplitude", Type::real_list, "0.5,1", {}},
      {"corruption.frequency", Type::real_list, "1,4", {}},
      {"corruption.phase", Type::real_list, "0,6.283185307179586", {}},

      {"nets.image", Type::integer, "28", {}},
      {"nets.batchnorm", Type::boolean, "true", {}},
      {"nets.g_family", Type::choice, "dcgan28", {"dcgan28", "infogan28", "custom"}},
      {"nets.g_latent", Type::integer, "100", {}},
      {"nets.g_fc1", Type::integer, "1024", {}},
      {"nets.g_fc2_channels", Type::integer, "128", {}},
      {"nets.g_filters", Type::integer, "64", {}},
      {"nets.g_kernel", Type::integer, "5", {}},
      {"nets.g2_family", Type::choice, "dcgan28", {"dcgan28", "infogan28", "custom"}},
      {"nets.g2_latent", Type::integer, "100", {}},
      {"nets.g2_fc1", Type::integer, "1024", {}},
      {"nets.g2_fc2_channels", Type::integer, "128", {}},
      {"nets.g2_filters", Type::integer, "64", {}},
      {"nets.g2_kernel", Type::integer, "5", {}},
      {"nets.d_conv1", Type::integer, "64", {}},
      {"nets.d_conv2", Type::integer, "128", {}},
      {"nets.d_kernel", Type::integer, "5", {}},

      {"train.mode", Type::choice, "denoise", {"denoise", "demix"}},
      {"train.batch_size", Type::integer, "64", {}},
      {"train.epochs", Type::integer, "64", {}},
      {"train.lr", Type::real, "0.0002", {}},
      {"train.beta1", Type::real, "0.5", {}},
      {"train.beta2", Type::real, "0.999", {}},
      {"train.d_steps_per_g_step", Type::integer, "1", {}},
      {"train.z_link", Type::choice, "independent", {"independent", "shared", "scaled"}},
      {"train.z_scale", Type::real, "0.1", {}},
      {"train.non_saturating", Type::boolean, "true", {}},
      {"train.sample_epochs", Type::int_list, "1,2,5,64", {}},
      {"train.checkpoint_every", Type::integer, "0", {}},

      {"inversion.lambda", Type::real, "0.1", {}},
      {"inversion.lambda2", Type::real, "0.1", {}},
      {"inversion.restarts", Type::integer, "10", {}},
      {"inversion.iterations", Type::integer, "10000", {}},
      {"inversion.step_size", Type::real, "0.01", {}},
      {"inversion.block_size", Type::integer, "100", {}},
      {"inversion.count", Type::integer, "16", {}},

      {"sensing.m", Type::integer, "100", {}},
      {"sensing.measurements", Type::int_list, "10,50,100,300,750", {}},
      {"sensing.lasso_lambda", Type::real, "0.1", {}},
      {"sensing.lasso_iterations", Type::integer, "500", {}},
      {"sensing.mixing_law", Type::choice, "truncated_std_normal",
       {"truncated_std_normal", "normal_mean_neg_half"}},
      {"sensing.sparsity", Type::integer, "30", {}},
      {"sensing.signal_count", Type::integer, "10", {}},
      {"sensing.corrupt", Type::boolean, "false", {}},

      {"classifier.epochs", Type::integer, "3", {}},
      {"classifier.batch_size", Type::integer, "64", {}},
      {"classifier.lr", Type::real, "0.001", {}},
      {"classifier.fc_width", Type::integer, "512", {}},
      {"classifier.conv1", Type::integer, "32", {}},
      {"classifier.conv2", Type::integer, "64", {}},
      {"classifier.dropout", Type::real, "0.5", {}},

      {"theory.support", Type::integer, "16", {}},
      {"theory.trials", Type::integer, "100", {}},
  };
  return s;
}

Config::Config() {
  // defaults pass through set() so they carry the same canonical spelling as
  // parsed values and serialize round trips exactly
  for (const auto& f : schema()) values_[f.key] = f.default_value;
  for (const auto& f : schema()) set(f.key, f.default_value);
}

const Config::Field& Config::field(const std::string& key) const {
  for (const auto& f : schema())
    if (f.key == key) return f;
  throw UnknownKey("config: unknown key '" + key + "'");
}

void Config::set(const std::string& key, const std::string& raw) {
  const Field& f = field(key);
  const std::string value = trim(raw);
  switch (f.type) {
    case Type::integer: {
      long long v;
      if (!parse_ll(value, v))
        throw TypeError("config: key '" + key + "' expects an integer, got '" +
                        value + "'");
      values_[key] = std::to_string(v);
      return;
    }
    case Type::unsigned64: {
      std::uint64_t v = 0;
      const char* last = value.data() + value.size();
      auto [p, ec] = std::from_chars(value.data(), last, v);
      if (ec != std::errc() || p != last)
        throw TypeError("config: key '" + key +
                        "' expects an unsigned integer, got '" + value + "'");
      values_[key] = std::to_string(v);
      return;
    }
    case Type::real: {
      double v;
      if (!parse_f64(value, v))
        throw TypeError("config: key '" + key + "' expects a number, got '" +
                        value + "'");
      std::ostringstream os;
      os.precision(17);
      os << v;
      values_[key] = os.str();
      return;
    }
    case Type::boolean: {
      if (value == "true" || value == "1")
        values_[key] = "true";
      else if (value == "false" || value == "0")
        values_[key] = "false";
      else
        throw TypeError("config: key '" + key + "' expects true/false, got '" +
                        value + "'");
      return;
    }
    case Type::text:
      values_[key] = value;
      return;
    case Type::choice: {
      if (std::find(f.choices.begin(), f.choices.end(), value) == f.choices.end())
        throw TypeError("config: key '" + key + "' got '" + value +
                        "', not one of its allowed values");
      values_[key] = value;
      return;
    }
    case Type::int_list: {
      std::string canon;
      for (const auto& part : split_commas(value)) {
        long long v;
        if (!parse_ll(part, v))
          throw TypeError("config: key '" + key +
                          "' expects a comma list of integers, got '" + value +
                          "'");
        if (!canon.empty()) canon += ",";
        canon += std::to_string(v);
      }
      values_[key] = canon;
      return;
    }
    case Type::real_list: {
      std::string canon;
      for (const auto& part : split_commas(value)) {
        double v;
        if (!parse_f64(part, v))
          throw TypeError("config: key '" + key +
                          "' expects a comma list of numbers, got '" + value +
                          "'");
        std::ostringstream os;
        os.precision(17);
        os << v;
        if (!canon.empty()) canon += ",";
        canon += os.str();
      }
      values_[key] = canon;
      return;
    }
  }
  throw Error("config: unhandled type for key " + key);
}

Config Config::parse(const std::string& text) {
  Config cfg;
  std::istringstream is(text);
  std::string line, section;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#' || t[0] == ';') continue;
    if (t.front() == '[') {
      if (t.back() != ']')
        throw ParseError("config: malformed section header at line " +
                         std::to_string(lineno));
      section = trim(t.substr(1, t.size() - 2));
      continue;
    }
    const auto eq = t.find('=');
    if (eq == std::string::npos)
      throw ParseError("config: expected key = value at line " +
                       std::to_string(lineno));
    const std::string key = trim(t.substr(0, eq));
    const std::string value = trim(t.substr(eq + 1));
    if (section.empty())
      throw ParseError("config: key '" + key + "' outside any section at line " +
                       std::to_string(lineno));
    cfg.set(section + "." + key, value);
  }
  return cfg;
}

Config Config::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("config: cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse(ss.str());
}

std::string Config::serialize() const {
  std::ostringstream os;
  std::string section;
  for (const auto& f : schema()) {
    const auto dot = f.key.find('.');
    const std::string sec = f.key.substr(0, dot);
    if (sec != section) {
      if (!section.empty()) os << "\n";
      os << "[" << sec << "]\n";
      section = sec;
    }
    os << f.key.substr(dot + 1) << " = " << values_.at(f.key) << "\n";
  }
  return os.str();
}

long long Config::get_int(const std::string& key) const {
  const Field& f = field(key);
  if (f.type != Type::integer) throw TypeError("config: " + key + " is not an integer");
  long long v;
  parse_ll(values_.at(key), v);
  return v;
}

std::uint64_t Config::get_u64(const std::string& key) const {
  const Field& f = field(key);
  if (f.type != Type::unsigned64)
    throw TypeError("config: " + key + " is not unsigned");
  std::uint64_t v = 0;
  const auto& s = values_.at(key);
  std::from_chars(s.data(), s.data() + s.size(), v);
  return v;
}

double Config::get_double(const std::string& key) const {
  const Field& f = field(key);
  if (f.type != Type::real) throw TypeError("config: " + key + " is not a number");
  double v;
  parse_f64(values_.at(key), v);
  return v;
}

bool Config::get_bool(const std::string& key) const {
  const Field& f = field(key);
  if (f.type != Type::boolean) throw TypeError("config: " + key + " is not boolean");
  return values_.at(key) == "true";
}

const std::string& Config::get_string(const std::string& key) const {
  const Field& f = field(key);
  if (f.type != Type::text && f.type != Type::choice)
    throw TypeError("config: " + key + " is not text");
  return values_.at(key);
}

std::vector<long long> Config::get_int_list(const std::string& key) const {
  const Field& f = field(key);
  if (f.type != Type::int_list)
    throw TypeError("config: " + key + " is not an integer list");
  std::vector<long long> out;
  for (const auto& part : split_commas(values_.at(key))) {
    if (part.empty()) continue;
    long long v;
    parse_ll(part, v);
    out.push_back(v);
  }
  return out;
}

std::vector<double> Config::get_double_list(const std::string& key) const {
  const Field& f = field(key);
  if (f.type != Type::real_list)
    throw TypeError("config: " + key + " is not a number list");
  std::vector<double> out;
  for (const auto& part : split_commas(values_.at(key))) {
    if (part.empty()) continue;
    double v;
    parse_f64(part, v);
    out.push_back(v);
  }
  return out;
}

}  // namespace sepgan
