#pragma once

#include <cmath>
#include <compare>
#include <cstdint>
#include <cstdio>
#include <optional>
#include <string>
#include <string_view>

namespace reviewkit {

/// Fixed-point decimal with six fractional digits (micro-units).
///
/// Review scores, scale bounds, and bin parameters are stored exactly so that
/// sums, means, and bin assignment can be done in integer arithmetic with no
/// floating-point drift. Conversions to double happen only at report time.
class Decimal {
 public:
  static constexpr int64_t kScale = 1000000;

  constexpr Decimal() = default;

  static constexpr Decimal from_micros(int64_t micros) {
    Decimal d;
    d.micros_ = micros;
    return d;
  }

  static constexpr Decimal from_int(int64_t units) {
    return from_micros(units * kScale);
  }

  static Decimal from_double(double v) {
    return from_micros(static_cast<int64_t>(std::llround(v * kScale)));
  }

  // Strict grammar: -?[0-9]+(.[0-9]{1,6})?  No exponents, no '+', no blanks.
  static std::optional<Decimal> parse(std::string_view s) {
    if (s.empty()) return std::nullopt;
    bool neg = false;
    size_t i = 0;
    if (s[0] == '-') {
      neg = true;
      i = 1;
      if (s.size() == 1) return std::nullopt;
    }
    int64_t whole = 0;
    size_t digits = 0;
    while (i < s.size() && s[i] >= '0' && s[i] <= '9') {
      whole = whole * 10 + (s[i] - '0');
      ++i;
      ++digits;
      if (digits > 12) return std::nullopt;
    }
    if (digits == 0) return std::nullopt;
    int64_t frac = 0;
    if (i < s.size()) {
      if (s[i] != '.') return std::nullopt;
      ++i;
      size_t frac_digits = 0;
      while (i < s.size() && s[i] >= '0' && s[i] <= '9') {
        frac = frac * 10 + (s[i] - '0');
        ++i;
        ++frac_digits;
      }
      if (frac_digits == 0 || frac_digits > 6 || i != s.size()) return std::nullopt;
      for (size_t k = frac_digits; k < 6; ++k) frac *= 10;
    }
    int64_t micros = whole * kScale + frac;
    return from_micros(neg ? -micros : micros);
  }

  constexpr int64_t micros() const { return micros_; }
  double to_double() const { return static_cast<double>(micros_) / kScale; }

  /// Canonical text form: integer part, then fractional digits with trailing
  /// zeros removed; no '.' when the fraction is zero. "6", "6.5", "-0.25".
  std::string str() const {
    int64_t m = micros_;
    std::string out;
    if (m < 0) {
      out.push_back('-');
      m = -m;
    }
    out += std::to_string(m / kScale);
    int64_t frac = m % kScale;
    if (frac != 0) {
      char buf[8];
      std::snprintf(buf, sizeof buf, "%06lld", static_cast<long long>(frac));
      std::string f(buf);
      while (!f.empty() && f.back() == '0') f.pop_back();
      out.push_back('.');
      out += f;
    }
    return out;
  }

  constexpr Decimal operator+(Decimal o) const { return from_micros(micros_ + o.micros_); }
  constexpr Decimal operator-(Decimal o) const { return from_micros(micros_ - o.micros_); }
  constexpr Decimal operator-() const { return from_micros(-micros_); }

  auto operator<=>(const Decimal&) const = default;

 private:
  int64_t micros_ = 0;
};

/// Running exact mean of decimals: keeps the rational sum/count so averages,
/// bin assignment, and rounded report values stay deterministic.
struct MeanAccumulator {
  int64_t sum_micros = 0;
  int64_t count = 0;

  void add(Decimal v) {
    sum_micros += v.micros();
    ++count;
  }
  bool empty() const { return count == 0; }
  double value() const {
    return static_cast<double>(sum_micros) / (static_cast<double>(count) * Decimal::kScale);
  }
};

namespace detail {

inline int64_t round_div_half_away(int64_t numer, int64_t denom) {
  // denom > 0. Rounds half away from zero.
  if (numer >= 0) return (numer + denom / 2) / denom;
  return -((-numer + denom / 2) / denom);
}

}  // namespace detail

/// Formats the exact rational sum/count as a decimal string with at most nine
/// fractional digits (round half away from zero, trailing zeros removed).
/// Nine digits keep formatted means within 5e-10 of the true mean.
inline std::string format_mean(int64_t sum_micros, int64_t count) {
  // nanos = round(sum_micros * 1000 / count)
  __int128 scaled = static_cast<__int128>(sum_micros) * 1000;
  __int128 c = count;
  __int128 half = c / 2;
  __int128 nanos128 = scaled >= 0 ? (scaled + half) / c : -((-scaled + half) / c);
  int64_t nanos = static_cast<int64_t>(nanos128);
  std::string out;
  if (nanos < 0) {
    out.push_back('-');
    nanos = -nanos;
  }
  out += std::to_string(nanos / 1000000000);
  int64_t frac = nanos % 1000000000;
  if (frac != 0) {
    char buf[12];
    std::snprintf(buf, sizeof buf, "%09lld", static_cast<long long>(frac));
    std::string f(buf);
    while (!f.empty() && f.back() == '0') f.pop_back();
    out.push_back('.');
    out += f;
  }
  return out;
}

inline std::string format_mean(const MeanAccumulator& m) {
  return format_mean(m.sum_micros, m.count);
}

}  // namespace reviewkit
