#pragma once

#include <compare>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace geodesign {

// Calendar date stored as days since 1970-01-01 (proleptic Gregorian).
// Arithmetic is plain integer math, so contiguity checks and block slicing
// never touch time zones or DST.
class Date {
 public:
  Date() : serial_(0) {}
  explicit Date(std::int32_t serial) : serial_(serial) {}

  static Date from_ymd(int year, int month, int day);
  // Strict ISO-8601 "YYYY-MM-DD"; rejects impossible dates like 2024-02-30.
  static std::optional<Date> parse(std::string_view iso);

  std::int32_t serial() const { return serial_; }
  std::string iso() const;

  Date operator+(int days) const { return Date(serial_ + days); }
  Date operator-(int days) const { return Date(serial_ - days); }
  int operator-(Date other) const { return serial_ - other.serial_; }
  auto operator<=>(const Date&) const = default;

 private:
  std::int32_t serial_;
};

// Inclusive day range [first, last].
struct DateRange {
  Date first;
  Date last;

  int length() const { return last - first + 1; }
  bool contains(Date d) const { return first <= d && d <= last; }
  auto operator<=>(const DateRange&) const = default;
};

}  // namespace geodesign
