#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <string>

namespace coforget {

/// Independent child seed for a named stream of a parent seed (splitmix64).
constexpr std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) noexcept {
  auto mix = [](std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
  };
  return mix(mix(seed) ^ stream);
}

/// Seeded generator whose derived draws are identical on every platform.
/// The standard distributions are implementation-defined, so the few shapes
/// the simulator needs are derived here from raw 64-bit engine output.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }

  /// Uniform in [0, 1) with 53 bits of resolution.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Uniform integer in [lo, hi], inclusive. Rejection keeps it unbiased.
  std::int64_t uniform_int(std::int64_t lo, std::int64_t hi) {
    const std::uint64_t span = static_cast<std::uint64_t>(hi - lo) + 1;
    if (span == 0) return static_cast<std::int64_t>(engine_());
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % span;
    std::uint64_t x;
    do {
      x = engine_();
    } while (x >= limit);
    return lo + static_cast<std::int64_t>(x % span);
  }

  bool coin(double p_true = 0.5) { return uniform() < p_true; }

  /// Standard normal via Box-Muller.
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1;
    do {
      u1 = uniform();
    } while (u1 == 0.0);
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    spare_ = r * std::sin(2.0 * std::numbers::pi * u2);
    has_spare_ = true;
    return r * std::cos(2.0 * std::numbers::pi * u2);
  }

  /// RFC 4122 version-4 layout, lowercase hex.
  std::string uuid4() {
    std::uint64_t hi = engine_();
    std::uint64_t lo = engine_();
    hi = (hi & ~0xF000ULL) | 0x4000ULL;
    lo = (lo & ~(0x3ULL << 62)) | (0x2ULL << 62);
    static constexpr char kHex[] = "0123456789abcdef";
    std::string out;
    out.reserve(36);
    auto emit = [&](std::uint64_t word, int from_nibble, int count) {
      for (int i = from_nibble; i < from_nibble + count; ++i) {
        out.push_back(kHex[(word >> (60 - 4 * i)) & 0xF]);
      }
    };
    emit(hi, 0, 8);
    out.push_back('-');
    emit(hi, 8, 4);
    out.push_back('-');
    emit(hi, 12, 4);
    out.push_back('-');
    emit(lo, 0, 4);
    out.push_back('-');
    emit(lo, 4, 12);
    return out;
  }

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace coforget
