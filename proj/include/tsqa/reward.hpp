#pragma once

#include <cstddef>
#include <filesystem>
#include <memory>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace tsqa {

/// Unit-norm vector, or all zeros for an empty answer.
using AnswerVector = std::vector<double>;

enum class EmbedderKind { surface_ngram, lookup_table };

/// How d(P, N) is reduced over a set of negatives.
enum class NegativeAggregation { min, mean };

/// Word vectors loaded from a text file: each line is a word followed by D
/// whitespace-separated reals.
class LookupTable {
 public:
  static LookupTable load(const std::filesystem::path& path);

  std::size_t dim() const { return dim_; }
  const std::vector<double>* find(const std::string& word) const;
  void add(std::string word, std::vector<double> values);

 private:
  std::size_t dim_ = 0;
  std::unordered_map<std::string, std::vector<double>> vectors_;
};

struct RewardParams {
  double alpha = 4.0;
  double beta = 2.0;
  double delta = 1e-6;
  double margin = 1.0;
  EmbedderKind embedder = EmbedderKind::surface_ngram;
  std::size_t dim = 256;  // surface_ngram buckets
  NegativeAggregation aggregation = NegativeAggregation::min;
  std::shared_ptr<const LookupTable> table;  // required for lookup_table

  void validate() const;
};

AnswerVector embed_answer(std::string_view answer, const RewardParams& params);

/// Throws ShapeError on a dimension mismatch.
double l2_distance(const AnswerVector& u, const AnswerVector& v);

/// max{d(gt, p) - d_N + margin, 0}, with d_N the hardest (closest) negative;
/// an empty negative set yields d(gt, p).
double triplet_score(const AnswerVector& gt, const AnswerVector& p,
                     const std::vector<AnswerVector>& negatives, double margin,
                     NegativeAggregation aggregation = NegativeAggregation::min);

/// alpha * 2 / (1 + e^T + delta) - beta
double reward(double t, const RewardParams& params);

struct ScoredPrediction {
  double triplet = 0.0;
  double reward = 0.0;
};

ScoredPrediction score_prediction(std::string_view gt, std::string_view pred,
                                  const std::vector<std::string>& negatives,
                                  const RewardParams& params);

}  // namespace tsqa
