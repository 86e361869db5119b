#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "tsqa/fact_store.hpp"
#include "tsqa/temporal_tagger.hpp"

namespace tsqa {

enum class QuestionType { L2_point, L3_event, EASY_explicit, HARD_implicit };

inline constexpr std::array<QuestionType, 4> kQuestionTypes = {
    QuestionType::L2_point, QuestionType::L3_event, QuestionType::EASY_explicit,
    QuestionType::HARD_implicit};

/// Schema tag: "L2", "L3", "EASY", "HARD".
std::string_view to_string(QuestionType type);
std::optional<QuestionType> question_type_from_string(std::string_view s);

/// Token range [start, end) of a temporal expression in the context, as
/// emitted by the synthetic generator.
struct SpanAnnotation {
  std::size_t tok_start = 0;
  std::size_t tok_end = 0;
  Interval interval;
  friend bool operator==(const SpanAnnotation&, const SpanAnnotation&) = default;
};

struct QARecord {
  std::string id;
  std::string question;
  std::string context;
  std::vector<std::string> gold_answers;  // {""} marks an unanswerable question
  QuestionType question_type = QuestionType::L2_point;
  std::vector<TimeFact> facts;
  // Subject and relation the question asks about. Optional in the schema;
  // default to the first non-event fact.
  std::string subject;
  std::string relation;
  std::optional<QuestionTimeSpec> time_spec;
  std::vector<SpanAnnotation> context_spans;

  bool unanswerable() const {
    return gold_answers.size() == 1 && gold_answers.front().empty();
  }
  friend bool operator==(const QARecord&, const QARecord&) = default;
};

/// Throws ValidationError naming the field.
void validate(const QARecord& record);

/// `line_no` only decorates error messages.
QARecord parse_record(std::string_view line, std::size_t line_no = 0);
std::string serialize_record(const QARecord& record);

std::vector<QARecord> load_dataset(const std::filesystem::path& path);
void save_dataset(const std::filesystem::path& path, const std::vector<QARecord>& records);

TimeFact parse_fact_line(std::string_view line, std::size_t line_no = 0);
std::string serialize_fact(const TimeFact& fact);
std::vector<TimeFact> load_facts(const std::filesystem::path& path);
void save_facts(const std::filesystem::path& path, const std::vector<TimeFact>& facts);

struct SyntheticConfig {
  int n_entities = 120;
  int n_relations = 4;  // at most 5 (team, employer, position, organization, award)
  int facts_per_pair = 4;
  int distractor_sentences_per_context = 3;
  int year_min = 1900;
  int year_max = 2020;
  double unanswerable_fraction = 0.1;
  // Weights for L2_point, L3_event, EASY_explicit, HARD_implicit.
  std::array<double, 4> question_type_mix = {1.0, 1.0, 1.0, 1.0};
  // Split sizes; when all three are zero, n_records is split 70/15/15.
  int n_records = 1000;
  int n_train = 0;
  int n_dev = 0;
  int n_test = 0;
  std::uint64_t seed = 42;
};

void validate(const SyntheticConfig& config);

struct SyntheticCorpus {
  std::vector<QARecord> train, dev, test;
  std::vector<TimeFact> facts;  // every generated fact, events included
};

SyntheticCorpus generate_synthetic(const SyntheticConfig& config);

/// Writes to a temporary sibling, then renames over `path`.
void write_file_atomic(const std::filesystem::path& path, std::string_view contents);

}  // namespace tsqa
