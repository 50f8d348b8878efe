#pragma once

#include <cmath>
#include <compare>
#include <cstdint>
#include <cstdio>
#include <limits>
#include <ostream>
#include <stdexcept>
#include <string>
#include <string_view>

namespace crowdauction {

/// Fixed-point currency amount with six decimal places.
///
/// Bids, offers and payments are all carried as an integral number of
/// micro-units so that threshold comparisons (`bid <= offer`) are exact and
/// identical on every platform. Conversions from real-valued formulas round
/// to the nearest micro-unit.
class Money {
 public:
  static constexpr std::int64_t kScale = 1'000'000;
  static constexpr int kDecimals = 6;

  constexpr Money() = default;

  static constexpr Money from_micros(std::int64_t micros) {
    Money m;
    m.micros_ = micros;
    return m;
  }

  static Money from_double(double value) {
    if (!std::isfinite(value)) {
      throw std::domain_error("Money: non-finite amount");
    }
    const double scaled = std::round(value * static_cast<double>(kScale));
    if (std::fabs(scaled) > 9.0e18) {
      throw std::overflow_error("Money: amount out of range");
    }
    return from_micros(static_cast<std::int64_t>(scaled));
  }

  /// Parses a plain decimal literal ("3", "-1.25", "0.000001").
  static Money parse(std::string_view text) {
    std::string s(text);
    std::size_t pos = 0;
    double v = 0;
    try {
      v = std::stod(s, &pos);
    } catch (const std::exception&) {
      throw std::invalid_argument("Money: cannot parse '" + s + "'");
    }
    if (pos != s.size()) {
      throw std::invalid_argument("Money: trailing characters in '" + s + "'");
    }
    return from_double(v);
  }

  static constexpr Money zero() { return Money{}; }
  static constexpr Money epsilon() { return from_micros(1); }
  static constexpr Money max() {
    return from_micros(std::numeric_limits<std::int64_t>::max());
  }

  constexpr std::int64_t micros() const { return micros_; }
  constexpr double to_double() const {
    return static_cast<double>(micros_) / static_cast<double>(kScale);
  }
  constexpr bool is_positive() const { return micros_ > 0; }

  std::string to_string() const {
    const std::int64_t whole = micros_ / kScale;
    std::int64_t frac = micros_ % kScale;
    const bool negative = micros_ < 0;
    if (frac < 0) frac = -frac;
    char buf[48];
    std::snprintf(buf, sizeof buf, "%s%lld.%06lld",
                  (negative && whole == 0) ? "-" : "",
                  static_cast<long long>(whole), static_cast<long long>(frac));
    return buf;
  }

  constexpr Money& operator+=(Money o) {
    micros_ += o.micros_;
    return *this;
  }
  constexpr Money& operator-=(Money o) {
    micros_ -= o.micros_;
    return *this;
  }
  friend constexpr Money operator+(Money a, Money b) { return a += b; }
  friend constexpr Money operator-(Money a, Money b) { return a -= b; }
  friend constexpr Money operator-(Money a) { return from_micros(-a.micros_); }

  friend constexpr auto operator<=>(Money, Money) = default;
  friend constexpr bool operator==(Money, Money) = default;

  friend std::ostream& operator<<(std::ostream& os, Money m) {
    return os << m.to_string();
  }

 private:
  std::int64_t micros_ = 0;
};

inline Money operator""_money(long double v) {
  return Money::from_double(static_cast<double>(v));
}
inline Money operator""_money(unsigned long long v) {
  return Money::from_micros(static_cast<std::int64_t>(v) * Money::kScale);
}

}  // namespace crowdauction
