#pragma once

#include <cmath>
#include <cstdint>
#include <string_view>

namespace smoothcert {

// Splittable pseudorandom stream built on the splitmix64 finalizer.
//
// A stream is identified by a 64-bit id fixed at construction. split()
// derives a child from (id, key) only, never from the consumed position,
// so sub-streams are independent of evaluation order and thread schedule.
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed) : id_(seed), state_(seed) {}

  std::uint64_t next_u64() {
    state_ += 0x9E3779B97F4A7C15ull;
    return mix(state_);
  }

  // Uniform on (0, 1]; never 0 so log() is safe.
  double next_unit() {
    return static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53;
  }

  // Standard normal via Box-Muller, one variate per call.
  double next_gaussian() {
    const double u1 = next_unit();
    const double u2 = next_unit();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(kTwoPi * u2);
  }

  // Uniform integer in [0, bound) via the 128-bit multiply trick.
  std::uint64_t next_below(std::uint64_t bound) {
    return static_cast<std::uint64_t>(
        (static_cast<unsigned __int128>(next_u64()) * bound) >> 64);
  }

  RngStream split(std::uint64_t key) const {
    return RngStream(mix(id_ + 0x9E3779B97F4A7C15ull * (key + 1)));
  }

  RngStream split(std::string_view name) const { return split(fnv1a(name)); }

  std::uint64_t id() const { return id_; }

 private:
  static constexpr double kTwoPi = 6.28318530717958647692;

  static std::uint64_t mix(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
  }

  static std::uint64_t fnv1a(std::string_view s) {
    std::uint64_t h = 0xCBF29CE484222325ull;
    for (unsigned char c : s) {
      h ^= c;
      h *= 0x100000001B3ull;
    }
    return h;
  }

  std::uint64_t id_;
  std::uint64_t state_;
};

}  // namespace smoothcert
