#pragma once

#include <array>
#include <cctype>
#include <chrono>
#include <cstdint>
#include <cstdio>
#include <ctime>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace trustgate {

using Clock = std::chrono::system_clock;
using Instant = std::chrono::time_point<Clock, std::chrono::milliseconds>;

inline Instant now_utc() {
  return std::chrono::time_point_cast<std::chrono::milliseconds>(Clock::now());
}

// Raised when a configuration value fails validation. key() names the
// offending configuration path, e.g. "trust.weights".
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string key, const std::string& what)
      : std::runtime_error(key + ": " + what), key_(std::move(key)) {}
  const std::string& key() const noexcept { return key_; }

 private:
  std::string key_;
};

// ── Sensitivity levels ───────────────────────────────────────────────────────

enum class SensitivityLevel : int { Public = 0, Internal = 1, Confidential = 2, Secret = 3 };

inline constexpr std::array<std::string_view, 4> kLevelNames = {"public", "internal",
                                                                 "confidential", "secret"};

inline std::string_view to_string(SensitivityLevel l) {
  return kLevelNames[static_cast<int>(l)];
}

inline std::optional<SensitivityLevel> level_from_string(std::string_view s) {
  for (int i = 0; i < 4; ++i)
    if (kLevelNames[i] == s) return static_cast<SensitivityLevel>(i);
  return std::nullopt;
}

// ── Time formatting ──────────────────────────────────────────────────────────

// 2024-05-01T12:30:00.123Z
inline std::string format_iso8601(Instant t) {
  auto ms = t.time_since_epoch().count();
  std::time_t secs = static_cast<std::time_t>(ms / 1000);
  int frac = static_cast<int>(ms % 1000);
  if (frac < 0) {
    frac += 1000;
    --secs;
  }
  std::tm tm{};
  gmtime_r(&secs, &tm);
  char buf[80];
  std::snprintf(buf, sizeof buf, "%04d-%02d-%02dT%02d:%02d:%02d.%03dZ", tm.tm_year + 1900,
                tm.tm_mon + 1, tm.tm_mday, tm.tm_hour, tm.tm_min, tm.tm_sec, frac);
  return buf;
}

// Accepts "YYYY-MM-DDTHH:MM:SS[.fff]Z" and the date-only form "YYYY-MM-DD".
inline std::optional<Instant> parse_iso8601(std::string_view s) {
  int y = 0, mo = 0, d = 0, h = 0, mi = 0, sec = 0, ms = 0;
  std::string str(s);
  int n = std::sscanf(str.c_str(), "%4d-%2d-%2dT%2d:%2d:%2d", &y, &mo, &d, &h, &mi, &sec);
  if (n != 6 && n != 3) return std::nullopt;
  if (n == 6) {
    auto dot = str.find('.');
    if (dot != std::string::npos) {
      int digits = 0;
      for (std::size_t i = dot + 1; i < str.size() && std::isdigit(static_cast<unsigned char>(str[i])); ++i) {
        if (digits < 3) ms = ms * 10 + (str[i] - '0');
        ++digits;
      }
      for (; digits < 3; ++digits) ms *= 10;
    }
  }
  if (mo < 1 || mo > 12 || d < 1 || d > 31 || h > 23 || mi > 59 || sec > 60) return std::nullopt;
  std::tm tm{};
  tm.tm_year = y - 1900;
  tm.tm_mon = mo - 1;
  tm.tm_mday = d;
  tm.tm_hour = h;
  tm.tm_min = mi;
  tm.tm_sec = sec;
  std::time_t secs = timegm(&tm);
  return Instant(std::chrono::milliseconds(static_cast<std::int64_t>(secs) * 1000 + ms));
}

}  // namespace trustgate
