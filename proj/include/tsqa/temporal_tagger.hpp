#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "tsqa/time.hpp"

namespace tsqa {

struct Token {
  std::string text;
  std::size_t char_start = 0;  // byte offsets into the source text
  std::size_t char_end = 0;
  friend bool operator==(const Token&, const Token&) = default;
};

enum class SpanKind {
  year_point,
  month_point,
  year_range,
  decade,
  open_since,
  open_until,
  signal,
};

/// A detected temporal expression over tokens [tok_start, tok_end).
///
/// Span extents follow one convention that the synthetic generator also uses
/// for its annotations: a bare preposition ("in") is not part of the span,
/// while words that carry range semantics ("from", "between", "since",
/// "until") are.
struct TemporalSpan {
  std::size_t tok_start = 0;
  std::size_t tok_end = 0;
  SpanKind kind = SpanKind::signal;
  std::optional<Interval> interval;  // absent only for signals
  friend bool operator==(const TemporalSpan&, const TemporalSpan&) = default;
};

enum class TimeSpecKind {
  point,
  range,
  before,
  after,
  during_event,
  first,
  last,
  none,
};

struct QuestionTimeSpec {
  TimeSpecKind kind = TimeSpecKind::none;
  std::optional<Interval> interval;
  std::optional<std::string> event_name;
  friend bool operator==(const QuestionTimeSpec&, const QuestionTimeSpec&) = default;
};

std::string_view to_string(SpanKind kind);
std::string_view to_string(TimeSpecKind kind);
std::optional<SpanKind> span_kind_from_string(std::string_view s);
std::optional<TimeSpecKind> time_spec_kind_from_string(std::string_view s);

/// Whitespace tokenization with leading/trailing punctuation peeled off into
/// one-character tokens. A dash joining two numbers ("1984–1991", "1949-66")
/// becomes its own token.
std::vector<Token> tokenize(std::string_view text);

/// Left-to-right, longest-match application of the temporal rule grammar.
/// Returned spans are sorted and never overlap.
std::vector<TemporalSpan> tag(const std::vector<Token>& tokens);

QuestionTimeSpec parse_question_time(const std::vector<Token>& tokens,
                                     const std::vector<TemporalSpan>& spans);

/// Convenience: tokenize, tag, parse.
QuestionTimeSpec parse_question_time(std::string_view question);

/// Words the grammar emits as `signal` spans.
bool is_signal_word(std::string_view lowered);

}  // namespace tsqa
