#pragma once

#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>

namespace robdn {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

// Feasibility / duality tolerance used across the library unless a caller
// overrides it explicitly.
inline constexpr double kTol = 1e-6;

// Bad or inconsistent input data (files, dimensions, parameter ranges).
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A model was built or queried in a way that violates its own contract
// (mismatched dimensions, missing rows, infeasible recourse where relatively
// complete recourse was promised, ...).
class ModelError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// The LP/MIP engine failed outright (not a limit, not infeasibility).
class SolverError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A solve hit an iteration/time budget without reaching the requested
// accuracy and no safe fallback exists.
class LimitError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// FNV-1a, used to stamp derived artifacts with the hash of their inputs so
// reruns are idempotent and stale caches are detectable.
inline std::uint64_t fnv1a(const void* data, std::size_t n,
                           std::uint64_t seed = 1469598103934665603ULL) {
  const auto* p = static_cast<const unsigned char*>(data);
  std::uint64_t h = seed;
  for (std::size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= 1099511628211ULL;
  }
  return h;
}

inline std::uint64_t fnv1a(const std::string& s,
                           std::uint64_t seed = 1469598103934665603ULL) {
  return fnv1a(s.data(), s.size(), seed);
}

inline std::string hex64(std::uint64_t v) {
  static const char* digits = "0123456789abcdef";
  std::string s(16, '0');
  for (int i = 15; i >= 0; --i) {
    s[i] = digits[v & 0xF];
    v >>= 4;
  }
  return s;
}

}  // namespace robdn
