#include "tsqa/temporal_tagger.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <string>

namespace tsqa {
namespace {

constexpr std::array<std::string_view, 4> kMultiBytePunct = {
    "\xE2\x80\x93",  // en dash
    "\xE2\x80\x94",  // em dash
    "\xE2\x80\x9C",  // left double quote
    "\xE2\x80\x9D",  // right double quote
};

bool is_space(char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v'; }

// Length in bytes of the punctuation character starting at s[i], or 0.
std::size_t punct_len(std::string_view s, std::size_t i) {
  const auto c = static_cast<unsigned char>(s[i]);
  if (c < 0x80) return std::ispunct(c) ? 1 : 0;
  for (auto p : kMultiBytePunct)
    if (s.substr(i, p.size()) == p) return p.size();
  if (s.substr(i, 3) == "\xE2\x80\x98" || s.substr(i, 3) == "\xE2\x80\x99") return 3;
  return 0;
}

// Length of the punctuation character ending at s[end-1], or 0.
std::size_t punct_len_back(std::string_view s, std::size_t begin, std::size_t end) {
  if (end - begin >= 3) {
    const std::size_t n = punct_len(s, end - 3);
    if (n == 3) return 3;
  }
  const auto c = static_cast<unsigned char>(s[end - 1]);
  return (c < 0x80 && std::ispunct(c)) ? 1 : 0;
}

std::size_t dash_len(std::string_view s, std::size_t i) {
  if (s[i] == '-') return 1;
  if (s.substr(i, 3) == kMultiBytePunct[0] || s.substr(i, 3) == kMultiBytePunct[1]) return 3;
  return 0;
}

bool is_digit(char c) { return c >= '0' && c <= '9'; }

void push(std::vector<Token>& out, std::string_view text, std::size_t b, std::size_t e) {
  if (b < e) out.push_back({std::string(text.substr(b, e - b)), b, e});
}

// Splits a punctuation-free core at dashes joining digits.
void split_core(std::vector<Token>& out, std::string_view text, std::size_t b, std::size_t e) {
  std::size_t piece = b;
  for (std::size_t i = b; i < e;) {
    const std::size_t dl = dash_len(text, i);
    if (dl && i > b && is_digit(text[i - 1]) && i + dl < e && is_digit(text[i + dl])) {
      push(out, text, piece, i);
      push(out, text, i, i + dl);
      i += dl;
      piece = i;
      continue;
    }
    ++i;
  }
  push(out, text, piece, e);
}

std::string lower(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

std::optional<int> parse_digits(std::string_view s, std::size_t width) {
  if (s.size() != width) return std::nullopt;
  int v = 0;
  for (char c : s) {
    if (!is_digit(c)) return std::nullopt;
    v = v * 10 + (c - '0');
  }
  return v;
}

std::optional<int> as_year(const Token& t) {
  auto v = parse_digits(t.text, 4);
  if (v && *v >= kMinYear && *v <= kMaxYear) return v;
  return std::nullopt;
}

std::optional<int> as_month(const Token& t) {
  static constexpr std::array<std::string_view, 12> kNames = {
      "january", "february", "march",     "april",   "may",      "june",
      "july",    "august",   "september", "october", "november", "december"};
  const std::string w = lower(t.text);
  for (std::size_t m = 0; m < kNames.size(); ++m) {
    if (w == kNames[m] || w == kNames[m].substr(0, 3)) return static_cast<int>(m) + 1;
  }
  if (w == "sept") return 9;
  return std::nullopt;
}

bool is_dash(const Token& t) {
  return t.text == "-" || t.text == kMultiBytePunct[0] || t.text == kMultiBytePunct[1];
}

struct Date {
  int year = 0;
  std::optional<int> month;
  std::size_t end = 0;  // one past the last token

  Month first() const { return make_month(year, month.value_or(1)); }
  Month last() const { return make_month(year, month.value_or(12)); }
};

// [MONTH [","]] YEAR
std::optional<Date> match_date(const std::vector<Token>& toks, std::size_t i) {
  if (i >= toks.size()) return std::nullopt;
  if (auto y = as_year(toks[i])) return Date{*y, std::nullopt, i + 1};
  if (auto m = as_month(toks[i])) {
    std::size_t j = i + 1;
    if (j < toks.size() && toks[j].text == ",") ++j;
    if (j < toks.size())
      if (auto y = as_year(toks[j])) return Date{*y, m, j + 1};
  }
  return std::nullopt;
}

// Range end after a connector: a full date or a two-digit tail ("1949–66").
std::optional<Date> match_range_end(const std::vector<Token>& toks, std::size_t i,
                                    const Date& head, bool allow_tail) {
  if (auto d = match_date(toks, i)) return d;
  if (!allow_tail || i >= toks.size()) return std::nullopt;
  auto tail = parse_digits(toks[i].text, 2);
  if (!tail) return std::nullopt;
  int year = head.year / 100 * 100 + *tail;
  if (year < head.year) year += 100;
  if (year > kMaxYear) return std::nullopt;
  return Date{year, std::nullopt, i + 1};
}

std::optional<TemporalSpan> range_span(std::size_t b, const Date& from, const Date& to) {
  Interval iv{from.first(), to.last()};
  if (!iv.valid()) return std::nullopt;
  return TemporalSpan{b, to.end, SpanKind::year_range, iv};
}

std::optional<int> as_decade(const Token& t) {
  std::string_view s = t.text;
  if (s.size() == 6 && s.substr(4) == "'s") s = s.substr(0, 4);
  else if (s.size() == 5 && (s[4] == 's' || s[4] == 'S')) s = s.substr(0, 4);
  else return std::nullopt;
  auto v = parse_digits(s, 4);
  if (!v || *v % 10 != 0 || *v < kMinYear || *v + 9 > kMaxYear) return std::nullopt;
  return v;
}

// Every rule that can fire at position i; the caller keeps the longest.
std::vector<TemporalSpan> matches_at(const std::vector<Token>& toks, std::size_t i) {
  std::vector<TemporalSpan> out;
  const std::string w = lower(toks[i].text);

  auto connected_range = [&](std::size_t b, const Date& head, bool allow_to, bool allow_and) {
    const std::size_t j = head.end;
    if (j >= toks.size()) return;
    const std::string c = lower(toks[j].text);
    const bool dash = is_dash(toks[j]);
    const bool to = allow_to && (c == "to" || c == "until" || c == "till" || c == "through");
    const bool and_ = allow_and && c == "and";
    if (!dash && !to && !and_) return;
    if (auto end = match_range_end(toks, j + 1, head, dash))
      if (auto s = range_span(b, head, *end)) out.push_back(*s);
  };

  if (w == "from" || w == "between") {
    if (auto head = match_date(toks, i + 1)) connected_range(i, *head, w == "from", w == "between");
  }
  if (auto head = match_date(toks, i)) {
    connected_range(i, *head, true, false);
    const bool month = head->month.has_value();
    out.push_back({i, head->end, month ? SpanKind::month_point : SpanKind::year_point,
                   Interval{head->first(), head->last()}});
  }
  if (w == "since") {
    if (auto d = match_date(toks, i + 1))
      out.push_back({i, d->end, SpanKind::open_since, Interval{d->first(), kMaxMonth}});
  }
  if (w == "until" || w == "till") {
    if (auto d = match_date(toks, i + 1))
      out.push_back({i, d->end, SpanKind::open_until, Interval{kMinMonth, d->last()}});
  }
  if (auto dec = as_decade(toks[i])) {
    out.push_back({i, i + 1, SpanKind::decade,
                   Interval{make_month(*dec, 1), make_month(*dec + 9, 12)}});
  }
  if (is_signal_word(w)) out.push_back({i, i + 1, SpanKind::signal, std::nullopt});
  return out;
}

bool is_terminal(const Token& t) {
  return t.text == "?" || t.text == "." || t.text == "," || t.text == "!" || t.text == ";";
}

std::optional<std::string> event_after(const std::vector<Token>& toks, std::size_t i) {
  std::string name;
  for (; i < toks.size() && !is_terminal(toks[i]); ++i) {
    if (!name.empty()) name += ' ';
    name += toks[i].text;
  }
  if (name.empty()) return std::nullopt;
  return name;
}

}  // namespace

bool is_signal_word(std::string_view lowered) {
  static constexpr std::array<std::string_view, 8> kSignals = {
      "before", "after", "during", "first", "last", "until", "since", "simultaneous"};
  return std::find(kSignals.begin(), kSignals.end(), lowered) != kSignals.end();
}

std::string_view to_string(SpanKind kind) {
  switch (kind) {
    case SpanKind::year_point: return "year_point";
    case SpanKind::month_point: return "month_point";
    case SpanKind::year_range: return "year_range";
    case SpanKind::decade: return "decade";
    case SpanKind::open_since: return "open_since";
    case SpanKind::open_until: return "open_until";
    case SpanKind::signal: return "signal";
  }
  return "signal";
}

std::string_view to_string(TimeSpecKind kind) {
  switch (kind) {
    case TimeSpecKind::point: return "point";
    case TimeSpecKind::range: return "range";
    case TimeSpecKind::before: return "before";
    case TimeSpecKind::after: return "after";
    case TimeSpecKind::during_event: return "during_event";
    case TimeSpecKind::first: return "first";
    case TimeSpecKind::last: return "last";
    case TimeSpecKind::none: return "none";
  }
  return "none";
}

std::optional<SpanKind> span_kind_from_string(std::string_view s) {
  for (auto k : {SpanKind::year_point, SpanKind::month_point, SpanKind::year_range,
                 SpanKind::decade, SpanKind::open_since, SpanKind::open_until, SpanKind::signal})
    if (to_string(k) == s) return k;
  return std::nullopt;
}

std::optional<TimeSpecKind> time_spec_kind_from_string(std::string_view s) {
  for (auto k : {TimeSpecKind::point, TimeSpecKind::range, TimeSpecKind::before,
                 TimeSpecKind::after, TimeSpecKind::during_event, TimeSpecKind::first,
                 TimeSpecKind::last, TimeSpecKind::none})
    if (to_string(k) == s) return k;
  return std::nullopt;
}

std::vector<Token> tokenize(std::string_view text) {
  std::vector<Token> out;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && is_space(text[i])) ++i;
    if (i >= text.size()) break;
    std::size_t b = i;
    while (i < text.size() && !is_space(text[i])) ++i;
    std::size_t e = i;

    while (b < e) {
      const std::size_t n = punct_len(text, b);
      if (!n) break;
      push(out, text, b, b + n);
      b += n;
    }
    std::vector<std::pair<std::size_t, std::size_t>> trailing;
    while (b < e) {
      const std::size_t n = punct_len_back(text, b, e);
      if (!n) break;
      trailing.emplace_back(e - n, e);
      e -= n;
    }
    split_core(out, text, b, e);
    for (auto it = trailing.rbegin(); it != trailing.rend(); ++it) push(out, text, it->first, it->second);
  }
  return out;
}

std::vector<TemporalSpan> tag(const std::vector<Token>& tokens) {
  std::vector<TemporalSpan> spans;
  std::size_t i = 0;
  while (i < tokens.size()) {
    auto candidates = matches_at(tokens, i);
    if (candidates.empty()) {
      ++i;
      continue;
    }
    // Longest wins; earlier rules win ties.
    const TemporalSpan* best = &candidates.front();
    for (const auto& c : candidates)
      if (c.tok_end > best->tok_end) best = &c;
    spans.push_back(*best);
    i = best->tok_end;
  }
  return spans;
}

QuestionTimeSpec parse_question_time(const std::vector<Token>& tokens,
                                     const std::vector<TemporalSpan>& spans) {
  auto word = [&](std::size_t k) { return lower(tokens[k].text); };

  // A temporal span right after before/after/during (optionally past "the")
  // is that signal's anchor rather than an explicit question time.
  std::vector<std::optional<std::size_t>> anchor_of(spans.size());
  std::vector<bool> is_anchor(spans.size(), false);
  for (std::size_t s = 0; s + 1 < spans.size(); ++s) {
    if (spans[s].kind != SpanKind::signal) continue;
    const std::string w = word(spans[s].tok_start);
    if (w != "before" && w != "after" && w != "during") continue;
    std::size_t next = spans[s].tok_end;
    if (next < tokens.size() && word(next) == "the") ++next;
    if (spans[s + 1].tok_start == next && spans[s + 1].kind != SpanKind::signal) {
      anchor_of[s] = s + 1;
      is_anchor[s + 1] = true;
    }
  }

  auto is_rangeish = [](SpanKind k) {
    return k == SpanKind::year_range || k == SpanKind::decade || k == SpanKind::open_since ||
           k == SpanKind::open_until;
  };

  for (std::size_t s = 0; s < spans.size(); ++s)
    if (!is_anchor[s] && is_rangeish(spans[s].kind))
      return {TimeSpecKind::range, spans[s].interval, std::nullopt};
  for (std::size_t s = 0; s < spans.size(); ++s)
    if (!is_anchor[s] &&
        (spans[s].kind == SpanKind::year_point || spans[s].kind == SpanKind::month_point))
      return {TimeSpecKind::point, spans[s].interval, std::nullopt};

  std::optional<QuestionTimeSpec> ordinal;
  for (std::size_t s = 0; s < spans.size(); ++s) {
    if (spans[s].kind != SpanKind::signal) continue;
    const std::string w = word(spans[s].tok_start);
    if (w == "before" || w == "after") {
      const auto kind = w == "before" ? TimeSpecKind::before : TimeSpecKind::after;
      if (anchor_of[s]) return {kind, spans[*anchor_of[s]].interval, std::nullopt};
      if (auto ev = event_after(tokens, spans[s].tok_end)) return {kind, std::nullopt, ev};
    } else if (w == "during") {
      if (anchor_of[s]) {
        const auto& a = spans[*anchor_of[s]];
        return {is_rangeish(a.kind) ? TimeSpecKind::range : TimeSpecKind::point, a.interval,
                std::nullopt};
      }
      if (auto ev = event_after(tokens, spans[s].tok_end))
        return {TimeSpecKind::during_event, std::nullopt, ev};
    } else if (w == "simultaneous") {
      std::size_t k = spans[s].tok_end;
      if (k < tokens.size() && (word(k) == "with" || word(k) == "to")) ++k;
      if (auto ev = event_after(tokens, k)) return {TimeSpecKind::during_event, std::nullopt, ev};
    } else if ((w == "first" || w == "last") && !ordinal) {
      ordinal = QuestionTimeSpec{w == "first" ? TimeSpecKind::first : TimeSpecKind::last,
                                 std::nullopt, std::nullopt};
    }
  }
  // "at the time of <event>"
  for (std::size_t k = 0; k + 1 < tokens.size(); ++k) {
    if (word(k) == "time" && word(k + 1) == "of")
      if (auto ev = event_after(tokens, k + 2))
        return {TimeSpecKind::during_event, std::nullopt, ev};
  }
  if (ordinal) return *ordinal;
  return {};
}

QuestionTimeSpec parse_question_time(std::string_view question) {
  const auto tokens = tokenize(question);
  return parse_question_time(tokens, tag(tokens));
}

}  // namespace tsqa
