#include "tsqa/time.hpp"

#include <charconv>
#include <cstdio>

namespace tsqa {

std::string format_month(Month m) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%04d-%02d", year_of(m), month_of(m));
  return buf;
}

std::optional<Month> parse_month(std::string_view text) {
  if (text.size() != 7 || text[4] != '-') return std::nullopt;
  int year = 0, month = 0;
  auto [p1, e1] = std::from_chars(text.data(), text.data() + 4, year);
  auto [p2, e2] = std::from_chars(text.data() + 5, text.data() + 7, month);
  if (e1 != std::errc() || e2 != std::errc() || p1 != text.data() + 4 ||
      p2 != text.data() + 7)
    return std::nullopt;
  if (year < kMinYear || year > kMaxYear || month < 1 || month > 12) return std::nullopt;
  return make_month(year, month);
}

}  // namespace tsqa
