#pragma once

#include <algorithm>
#include <optional>
#include <string>
#include <string_view>

namespace tsqa {

// All time is measured in months: year * 12 + (month - 1).
using Month = int;

inline constexpr int kMinYear = 1000;
inline constexpr int kMaxYear = 2999;
inline constexpr Month kMinMonth = kMinYear * 12;
inline constexpr Month kMaxMonth = kMaxYear * 12 + 11;

constexpr Month make_month(int year, int month_1_based) {
  return year * 12 + (month_1_based - 1);
}
constexpr int year_of(Month m) { return m / 12; }
constexpr int month_of(Month m) { return m % 12 + 1; }

/// Closed interval [start, end] of month indices.
struct Interval {
  Month start = 0;
  Month end = 0;

  constexpr bool valid() const { return start <= end; }
  /// Number of months covered, inclusive.
  constexpr int length() const { return end - start + 1; }
  friend constexpr bool operator==(const Interval&, const Interval&) = default;
};

constexpr Interval year_interval(int year) {
  return {make_month(year, 1), make_month(year, 12)};
}

constexpr bool intersects(const Interval& a, const Interval& b) {
  return a.start <= b.end && b.start <= a.end;
}

/// Months shared by both intervals; 0 when disjoint.
constexpr int overlap_months(const Interval& a, const Interval& b) {
  const Month lo = std::max(a.start, b.start);
  const Month hi = std::min(a.end, b.end);
  return hi < lo ? 0 : hi - lo + 1;
}

/// Signed distance from `q` to `c`: negative when `c` ends before `q`
/// starts, positive when `c` starts after `q` ends, zero when they overlap.
constexpr int signed_gap_months(const Interval& q, const Interval& c) {
  if (c.end < q.start) return c.end - q.start;
  if (c.start > q.end) return c.start - q.end;
  return 0;
}

/// "YYYY-MM" formatting and parsing, as used in the JSONL schema.
std::string format_month(Month m);
std::optional<Month> parse_month(std::string_view text);

}  // namespace tsqa
