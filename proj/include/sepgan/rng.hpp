#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <sstream>
#include <string>
#include <string_view>

namespace sepgan {

// All randomness flows through named streams derived from one root seed, so
// components can be re-seeded independently and replayed exactly. The raw
// mt19937_64 output is bit-portable; the distributions below are hand-rolled
// because the std::* distributions are not specified bit-exactly across
// standard libraries.
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed) : eng_(seed) {}

  static std::uint64_t mix(std::uint64_t root, std::string_view name,
                           std::uint64_t index = 0) {
    std::uint64_t h = 1469598103934665603ull;  // FNV-1a 64
    for (char c : name) {
      h ^= static_cast<std::uint8_t>(c);
      h *= 1099511628211ull;
    }
    return splitmix64(splitmix64(root ^ h) + index);
  }

  static RngStream derive(std::uint64_t root, std::string_view name,
                          std::uint64_t index = 0) {
    return RngStream(mix(root, name, index));
  }

  std::uint64_t raw() { return eng_(); }

  // [0,1)
  double uniform() {
    return static_cast<double>(eng_() >> 11) * 0x1.0p-53;
  }

  double uniform(double a, double b) { return a + (b - a) * uniform(); }

  // unbiased integer in [0,n)
  std::uint64_t uniform_int(std::uint64_t n) {
    const std::uint64_t reject_below = (0 - n) % n;  // 2^64 mod n
    for (;;) {
      const std::uint64_t r = eng_();
      if (r >= reject_below) return r % n;
    }
  }

  // Box-Muller, one value per call; no cached state so the stream position is
  // a pure function of call count.
  double normal(double mean = 0.0, double stddev = 1.0) {
    const double u1 = 1.0 - uniform();  // (0,1]
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    return mean + stddev * r * std::cos(2.0 * M_PI * u2);
  }

  double truncated_normal(double mean, double stddev, double lo, double hi) {
    for (;;) {
      const double x = normal(mean, stddev);
      if (x >= lo && x <= hi) return x;
    }
  }

  std::string save_state() const {
    std::ostringstream os;
    os << eng_;
    return os.str();
  }

  void restore_state(const std::string& state) {
    std::istringstream is(state);
    is >> eng_;
    if (is.fail()) throw std::runtime_error("RngStream: bad saved state");
  }

 private:
  static std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
  }

  std::mt19937_64 eng_;
};

}  // namespace sepgan
