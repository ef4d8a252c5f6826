#ifndef SQG_COMMON_HPP
#define SQG_COMMON_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace sqg {

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

// Error hierarchy. Every failure the library reports derives from Error so
// callers (CLI, experiment driver) can map it to an exit code.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DomainError : public Error { using Error::Error; };
class SingularityError : public Error { using Error::Error; };
class CapabilityError : public Error { using Error::Error; };
class InvertibilityError : public Error { using Error::Error; };
class StepSizeError : public Error { using Error::Error; };
class PoisonError : public Error { using Error::Error; };
class FormatError : public Error { using Error::Error; };
class ConfigError : public Error { using Error::Error; };

struct Vec2 {
  double x1 = 0.0;
  double x2 = 0.0;

  constexpr Vec2 operator+(const Vec2& o) const { return {x1 + o.x1, x2 + o.x2}; }
  constexpr Vec2 operator-(const Vec2& o) const { return {x1 - o.x1, x2 - o.x2}; }
  constexpr Vec2 operator-() const { return {-x1, -x2}; }
  constexpr Vec2 operator*(double s) const { return {x1 * s, x2 * s}; }
  constexpr bool operator==(const Vec2&) const = default;
  constexpr double dot(const Vec2& o) const { return x1 * o.x1 + x2 * o.x2; }
  double norm() const { return std::hypot(x1, x2); }
  constexpr double norm_inf() const {
    return std::max(x1 < 0 ? -x1 : x1, x2 < 0 ? -x2 : x2);
  }
};

inline constexpr Vec2 operator*(double s, const Vec2& v) { return v * s; }

// Spatial multi-index (derivative orders in x1, x2).
struct MultiIndex {
  int d1 = 0;
  int d2 = 0;
  constexpr int order() const { return d1 + d2; }
  constexpr bool operator==(const MultiIndex&) const = default;
};

// Space-time multi-index (t, x1, x2).
struct StMultiIndex {
  int dt = 0;
  int d1 = 0;
  int d2 = 0;
  constexpr int order() const { return dt + d1 + d2; }
  constexpr bool operator==(const StMultiIndex&) const = default;
};

// All spatial multi-indices with |alpha| <= k, ordered by total order.
inline std::vector<MultiIndex> multi_indices_up_to(int k) {
  std::vector<MultiIndex> out;
  for (int total = 0; total <= k; ++total) {
    for (int d1 = total; d1 >= 0; --d1) out.push_back({d1, total - d1});
  }
  return out;
}

// 64-bit FNV-1a, used for configuration and quadrature identities.
inline std::uint64_t fnv1a(const void* data, std::size_t size,
                           std::uint64_t h = 0xcbf29ce484222325ULL) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < size; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::uint64_t fnv1a(const std::string& s, std::uint64_t h = 0xcbf29ce484222325ULL) {
  return fnv1a(s.data(), s.size(), h);
}

// Uniform double in [0, 1) from the top 53 bits; unlike
// std::uniform_real_distribution this is identical across standard libraries.
inline double uniform01(std::mt19937_64& rng) {
  return double(rng() >> 11) * 0x1.0p-53;
}

inline double uniform(std::mt19937_64& rng, double lo, double hi) {
  return lo + (hi - lo) * uniform01(rng);
}

}  // namespace sqg

#endif  // SQG_COMMON_HPP
