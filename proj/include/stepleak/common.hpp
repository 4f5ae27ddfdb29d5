#pragma once

#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>

namespace stepleak {

constexpr int kPeriodsPerDay = 5760;   // 24h of 15s periods
constexpr int kDaysPerWeek = 7;
constexpr int kPeriodsPerWeek = kDaysPerWeek * kPeriodsPerDay;  // 40320

constexpr const char* kToolVersion = "0.1.0";

/// Raised on malformed inputs, bad configs, and contract violations.
class DataError : public std::runtime_error {
 public:
  explicit DataError(const std::string& msg) : std::runtime_error(msg) {}
};

/// splitmix64 finalizer, used to derive independent per-entity seeds from a
/// master seed without any sequence dependence between entities.
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (salt + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

using Rng = std::mt19937_64;

}  // namespace stepleak
