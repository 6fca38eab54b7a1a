#include "chronofeat/common.hpp"

#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>

namespace chronofeat {

std::uint64_t fnv1a64_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail("cannot open file for hashing: ", path);
  std::uint64_t h = kFnvOffsetBasis;
  std::array<char, 1 << 16> buf;
  while (in) {
    in.read(buf.data(), static_cast<std::streamsize>(buf.size()));
    std::streamsize got = in.gcount();
    for (std::streamsize i = 0; i < got; ++i) {
      h ^= static_cast<unsigned char>(buf[static_cast<std::size_t>(i)]);
      h *= kFnvPrime;
    }
  }
  return h;
}

// Howard Hinnant's civil date algorithms.
std::int64_t days_from_civil(int y, int m, int d) {
  y -= m <= 2;
  const std::int64_t era = (y >= 0 ? y : y - 399) / 400;
  const unsigned yoe = static_cast<unsigned>(y - era * 400);
  const unsigned doy = (153u * static_cast<unsigned>(m + (m > 2 ? -3 : 9)) + 2u) / 5u +
                       static_cast<unsigned>(d) - 1u;
  const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
  return era * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

void civil_from_days(std::int64_t z, int& year, int& month, int& day) {
  z += 719468;
  const std::int64_t era = (z >= 0 ? z : z - 146096) / 146097;
  const unsigned doe = static_cast<unsigned>(z - era * 146097);
  const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
  const std::int64_t y = static_cast<std::int64_t>(yoe) + era * 400;
  const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
  const unsigned mp = (5 * doy + 2) / 153;
  day = static_cast<int>(doy - (153 * mp + 2) / 5 + 1);
  month = static_cast<int>(mp + (mp < 10 ? 3 : -9));
  year = static_cast<int>(y + (month <= 2));
}

std::int64_t parse_hour_yymmddhh(std::string_view text) {
  if (text.size() != 8) fail("unknown timestamp format (expected YYMMDDHH): '", text, "'");
  int digits[8];
  for (int i = 0; i < 8; ++i) {
    char c = text[static_cast<std::size_t>(i)];
    if (c < '0' || c > '9') fail("unknown timestamp format (expected YYMMDDHH): '", text, "'");
    digits[i] = c - '0';
  }
  int yy = digits[0] * 10 + digits[1];
  int mm = digits[2] * 10 + digits[3];
  int dd = digits[4] * 10 + digits[5];
  int hh = digits[6] * 10 + digits[7];
  if (mm < 1 || mm > 12 || dd < 1 || dd > 31 || hh > 23)
    fail("unknown timestamp format (invalid date/hour): '", text, "'");
  return days_from_civil(2000 + yy, mm, dd) * 24 + hh;
}

std::string format_day(std::int64_t day) {
  int y, m, d;
  civil_from_days(day, y, m, d);
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%04d-%02d-%02d", y, m, d);
  return buf;
}

std::string format_hour(std::int64_t hour) {
  int y, m, d;
  civil_from_days(day_of_hour(hour), y, m, d);
  int hh = static_cast<int>(hour - day_start_hour(hour));
  char buf[24];
  std::snprintf(buf, sizeof(buf), "%04d-%02d-%02d %02d:00", y, m, d, hh);
  return buf;
}

namespace {

template <typename T>
std::string float_to_shortest(T v) {
  if (std::isnan(v)) return "nan";
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

}  // namespace

std::string num_str(double v) { return float_to_shortest(v); }
std::string num_str(float v) { return float_to_shortest(v); }

std::string num_str(std::int64_t v) {
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

std::string num_str(std::uint64_t v) {
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

double parse_double(std::string_view text, const std::string& what) {
  double v = 0;
  auto res = std::from_chars(text.data(), text.data() + text.size(), v);
  if (res.ec != std::errc() || res.ptr != text.data() + text.size())
    fail("invalid ", what, ": '", text, "'");
  return v;
}

std::int64_t parse_int64(std::string_view text, const std::string& what) {
  std::int64_t v = 0;
  auto res = std::from_chars(text.data(), text.data() + text.size(), v);
  if (res.ec != std::errc() || res.ptr != text.data() + text.size())
    fail("invalid ", what, ": '", text, "'");
  return v;
}

std::uint64_t parse_uint64(std::string_view text, const std::string& what) {
  std::uint64_t v = 0;
  auto res = std::from_chars(text.data(), text.data() + text.size(), v);
  if (res.ec != std::errc() || res.ptr != text.data() + text.size())
    fail("invalid ", what, ": '", text, "'");
  return v;
}

double Rng::normal(double mean, double stddev) {
  // Box-Muller; the sine branch is discarded to keep the stream stateless.
  double u1 = uniform01_open();
  double u2 = uniform01();
  double r = std::sqrt(-2.0 * std::log(u1));
  return mean + stddev * r * std::cos(6.283185307179586476925286766559 * u2);
}

std::int64_t Rng::poisson(double lambda) {
  if (lambda <= 0) return 0;
  // Halving keeps Knuth's product method in a numerically safe range.
  if (lambda > 30.0) return poisson(lambda / 2) + poisson(lambda / 2);
  const double limit = std::exp(-lambda);
  std::int64_t k = 0;
  double p = 1.0;
  do {
    ++k;
    p *= uniform01_open();
  } while (p > limit);
  return k - 1;
}

}  // namespace chronofeat
