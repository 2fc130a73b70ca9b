#pragma once

#include <compare>
#include <cstdint>
#include <cstdio>
#include <optional>
#include <string>
#include <string_view>

namespace reviewkit {

namespace detail {

// Civil-date conversions (Howard Hinnant's algorithms), valid far beyond any
// conference timeline.
inline int64_t days_from_civil(int64_t y, unsigned m, unsigned d) {
  y -= m <= 2;
  const int64_t era = (y >= 0 ? y : y - 399) / 400;
  const unsigned yoe = static_cast<unsigned>(y - era * 400);
  const unsigned doy = (153 * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
  const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
  return era * 146097 + static_cast<int64_t>(doe) - 719468;
}

inline void civil_from_days(int64_t z, int64_t& y, unsigned& m, unsigned& d) {
  z += 719468;
  const int64_t era = (z >= 0 ? z : z - 146096) / 146097;
  const unsigned doe = static_cast<unsigned>(z - era * 146097);
  const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
  y = static_cast<int64_t>(yoe) + era * 400;
  const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
  const unsigned mp = (5 * doy + 2) / 153;
  d = doy - (153 * mp + 2) / 5 + 1;
  m = mp + (mp < 10 ? 3 : -9);
  y += m <= 2;
}

inline bool is_leap(int64_t y) {
  return (y % 4 == 0 && y % 100 != 0) || y % 400 == 0;
}

inline unsigned days_in_month(int64_t y, unsigned m) {
  static constexpr unsigned lengths[] = {31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
  if (m == 2 && is_leap(y)) return 29;
  return lengths[m - 1];
}

}  // namespace detail

/// UTC instant with one-second resolution, stored as seconds since the Unix
/// epoch. Text form is strict ISO-8601 Zulu: YYYY-MM-DDTHH:MM:SSZ.
struct UtcTime {
  int64_t secs = 0;

  static constexpr UtcTime from_secs(int64_t s) { return UtcTime{s}; }

  static std::optional<UtcTime> parse(std::string_view s) {
    if (s.size() != 20) return std::nullopt;
    if (s[4] != '-' || s[7] != '-' || s[10] != 'T' || s[13] != ':' || s[16] != ':' ||
        s[19] != 'Z') {
      return std::nullopt;
    }
    auto digits = [&](size_t pos, size_t n, int64_t& out) {
      out = 0;
      for (size_t i = pos; i < pos + n; ++i) {
        if (s[i] < '0' || s[i] > '9') return false;
        out = out * 10 + (s[i] - '0');
      }
      return true;
    };
    int64_t y, mo, d, h, mi, sec;
    if (!digits(0, 4, y) || !digits(5, 2, mo) || !digits(8, 2, d) || !digits(11, 2, h) ||
        !digits(14, 2, mi) || !digits(17, 2, sec)) {
      return std::nullopt;
    }
    if (mo < 1 || mo > 12) return std::nullopt;
    if (d < 1 || d > detail::days_in_month(y, static_cast<unsigned>(mo))) return std::nullopt;
    if (h > 23 || mi > 59 || sec > 59) return std::nullopt;
    int64_t days = detail::days_from_civil(y, static_cast<unsigned>(mo), static_cast<unsigned>(d));
    return UtcTime{days * 86400 + h * 3600 + mi * 60 + sec};
  }

  std::string str() const {
    int64_t days = secs >= 0 ? secs / 86400 : (secs - 86399) / 86400;
    int64_t rem = secs - days * 86400;
    int64_t y;
    unsigned mo, d;
    detail::civil_from_days(days, y, mo, d);
    char buf[72];
    std::snprintf(buf, sizeof buf, "%04lld-%02u-%02uT%02lld:%02lld:%02lldZ",
                  static_cast<long long>(y), mo, d, static_cast<long long>(rem / 3600),
                  static_cast<long long>((rem % 3600) / 60), static_cast<long long>(rem % 60));
    return std::string(buf);
  }

  /// Filename-safe compact form: YYYYMMDDTHHMMSSZ (used in fixture layouts).
  std::string compact() const {
    std::string iso = str();
    std::string out;
    for (char c : iso) {
      if (c != '-' && c != ':') out.push_back(c);
    }
    return out;
  }

  static std::optional<UtcTime> parse_compact(std::string_view s) {
    if (s.size() != 16) return std::nullopt;
    std::string iso;
    iso += s.substr(0, 4);
    iso += '-';
    iso += s.substr(4, 2);
    iso += '-';
    iso += s.substr(6, 5);  // DDTHH
    iso += ':';
    iso += s.substr(11, 2);
    iso += ':';
    iso += s.substr(13, 3);  // SSZ
    return parse(iso);
  }

  UtcTime operator+(int64_t delta_secs) const { return UtcTime{secs + delta_secs}; }
  int64_t operator-(UtcTime other) const { return secs - other.secs; }

  auto operator<=>(const UtcTime&) const = default;
};

}  // namespace reviewkit
