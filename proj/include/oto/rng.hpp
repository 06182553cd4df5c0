#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

namespace oto {

// std::mt19937 is fully specified by the standard, but the <random>
// distributions are not, so the few needed here are spelled out to keep
// seeded runs bit-reproducible across standard libraries.
class Rng {
 public:
  explicit Rng(std::uint32_t seed) : eng_(seed) {}

  std::uint32_t next_u32() { return eng_(); }

  // uniform in [0, 1) with 24 bits of resolution
  float uniform() {
    return static_cast<float>(eng_() >> 8) * (1.0f / 16777216.0f);
  }

  float uniform(float lo, float hi) { return lo + (hi - lo) * uniform(); }

  double uniform_double() {
    std::uint64_t hi = eng_() >> 6;   // 26 bits
    std::uint64_t lo = eng_() >> 5;   // 27 bits
    return static_cast<double>((hi << 27) | lo) * (1.0 / 9007199254740992.0);
  }

  // inclusive bounds, rejection sampled so every value is equally likely
  int uniform_int(int lo, int hi) {
    std::uint32_t range = static_cast<std::uint32_t>(hi - lo) + 1u;
    if (range == 0) return static_cast<int>(eng_());  // full 32-bit span
    std::uint32_t limit = UINT32_MAX - UINT32_MAX % range;
    std::uint32_t r;
    do {
      r = eng_();
    } while (r >= limit);
    return lo + static_cast<int>(r % range);
  }

  // Box-Muller, one cached value per pair
  float normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u1, u2;
    do {
      u1 = uniform_double();
    } while (u1 <= 0.0);
    u2 = uniform_double();
    double r = std::sqrt(-2.0 * std::log(u1));
    double a = 6.283185307179586476925286766559 * u2;
    spare_ = static_cast<float>(r * std::sin(a));
    have_spare_ = true;
    return static_cast<float>(r * std::cos(a));
  }

  float normal(float mean, float stddev) { return mean + stddev * normal(); }

  // Fisher-Yates
  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::size_t j = static_cast<std::size_t>(
          uniform_int(0, static_cast<int>(i) - 1));
      std::swap(v[i - 1], v[j]);
    }
  }

 private:
  std::mt19937 eng_;
  float spare_ = 0.0f;
  bool have_spare_ = false;
};

}  // namespace oto
