#pragma once

#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "tsqa/corpus.hpp"

namespace tsqa {

/// Lowercase, strip ASCII punctuation, drop the articles a/an/the, collapse
/// whitespace.
std::string normalize_answer(std::string_view s);

int exact_match(std::string_view pred, const std::vector<std::string>& golds);

/// Multiset token-overlap F1, maximized over golds. Two empty answers score 1.
double f1(std::string_view pred, const std::vector<std::string>& golds);

struct TypeScore {
  double em = 0.0;
  double f1 = 0.0;
  std::size_t n = 0;
  friend bool operator==(const TypeScore&, const TypeScore&) = default;
};

struct Metrics {
  double em = 0.0;
  double f1 = 0.0;
  std::size_t n = 0;
  std::map<QuestionType, TypeScore> by_type;
  friend bool operator==(const Metrics&, const Metrics&) = default;
};

/// Accumulates per-record scores into Metrics.
class MetricsBuilder {
 public:
  void add(QuestionType type, std::string_view pred, const std::vector<std::string>& golds);
  Metrics finish() const;

 private:
  struct Sums {
    double em = 0.0, f1 = 0.0;
    std::size_t n = 0;
  };
  std::map<QuestionType, Sums> sums_;
};

enum class ReportFormat { csv, json, markdown };
ReportFormat report_format_from_string(std::string_view s);

/// `label` names the dataset in markdown rows.
std::string report(const Metrics& metrics, ReportFormat format, std::string_view label = "");
Metrics metrics_from_csv(std::string_view csv);

}  // namespace tsqa
