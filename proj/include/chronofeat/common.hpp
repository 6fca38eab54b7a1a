#pragma once

#include <charconv>
#include <cstdint>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>

namespace chronofeat {

/// Error type thrown by every operation in this library. Messages carry
/// enough context (line numbers, column names, paths) to act on.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

template <typename... Args>
std::string cat(Args&&... args) {
  std::ostringstream os;
  (os << ... << args);
  return os.str();
}

template <typename... Args>
[[noreturn]] void fail(Args&&... args) {
  throw Error(cat(std::forward<Args>(args)...));
}

inline constexpr const char* kToolVersion = "0.1.0";

// ---------------------------------------------------------------------------
// Hashing

inline constexpr std::uint64_t kFnvOffsetBasis = 14695981039346656037ULL;
inline constexpr std::uint64_t kFnvPrime = 1099511628211ULL;

/// FNV-1a 64-bit over raw bytes. This is the project's stable row hash;
/// sampling membership is defined bit-exactly in terms of it.
inline std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = kFnvOffsetBasis;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= kFnvPrime;
  }
  return h;
}

std::uint64_t fnv1a64_file(const std::string& path);

// ---------------------------------------------------------------------------
// Calendar time. Hours are absolute indexes (hours since 1970-01-01 00:00)
// in the log's native clock; days are hour/24.

std::int64_t days_from_civil(int year, int month, int day);
void civil_from_days(std::int64_t days, int& year, int& month, int& day);

inline std::int64_t day_of_hour(std::int64_t hour) {
  return hour >= 0 ? hour / 24 : (hour - 23) / 24;
}

inline std::int64_t day_start_hour(std::int64_t hour) { return day_of_hour(hour) * 24; }

/// Parses a YYMMDDHH timestamp (e.g. "14102100") to an absolute hour index.
/// Two-digit years are read as 20YY.
std::int64_t parse_hour_yymmddhh(std::string_view text);

std::string format_day(std::int64_t day);
/// "YYYY-MM-DD HH:00", the format used by split reports.
std::string format_hour(std::int64_t hour);

// ---------------------------------------------------------------------------
// Number formatting: shortest round-trip representation, locale independent.

std::string num_str(double v);
std::string num_str(float v);
std::string num_str(std::int64_t v);
std::string num_str(std::uint64_t v);

double parse_double(std::string_view text, const std::string& what);
std::int64_t parse_int64(std::string_view text, const std::string& what);
std::uint64_t parse_uint64(std::string_view text, const std::string& what);

// ---------------------------------------------------------------------------
// Deterministic RNG. All randomized outputs of the project draw through this
// wrapper; std:: distributions are avoided because their streams are
// implementation defined.

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  std::uint64_t z = x;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform in [0, 1) with 53 random bits.
  double uniform01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  /// Uniform in (0, 1]; safe as a log() argument.
  double uniform01_open() { return (static_cast<double>(engine_() >> 11) + 1.0) * 0x1.0p-53; }

  /// Uniform integer in [0, n). n must be positive.
  std::uint64_t uniform_int(std::uint64_t n) { return engine_() % n; }

  double normal(double mean = 0.0, double stddev = 1.0);
  std::int64_t poisson(double lambda);

 private:
  std::mt19937_64 engine_;
};

}  // namespace chronofeat
