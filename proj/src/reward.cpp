#include "tsqa/reward.hpp"

#include <cmath>
#include <cstdint>
#include <fstream>
#include <limits>
#include <sstream>

#include "tsqa/error.hpp"
#include "tsqa/eval.hpp"

namespace tsqa {
namespace {

// 64-bit FNV-1a; stable across platforms, unlike std::hash.
std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : s) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

void l2_normalize(std::vector<double>& v) {
  double sq = 0.0;
  for (double x : v) sq += x * x;
  if (sq == 0.0) return;
  const double inv = 1.0 / std::sqrt(sq);
  for (double& x : v) x *= inv;
}

std::vector<std::string> words_of(const std::string& normalized) {
  std::vector<std::string> out;
  std::istringstream in(normalized);
  for (std::string w; in >> w;) out.push_back(std::move(w));
  return out;
}

}  // namespace

LookupTable LookupTable::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open lookup table " + path.string());
  LookupTable table;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::istringstream row(line);
    std::string word;
    if (!(row >> word)) continue;
    std::vector<double> values;
    for (std::string cell; row >> cell;) {
      try {
        std::size_t used = 0;
        values.push_back(std::stod(cell, &used));
        if (used != cell.size()) throw std::invalid_argument(cell);
      } catch (const std::logic_error&) {
        throw ParseError(line_no, "bad number '" + cell + "' in " + path.string());
      }
    }
    if (values.empty()) throw ParseError(line_no, "word without vector in " + path.string());
    if (table.dim_ && values.size() != table.dim_)
      throw ParseError(line_no, "inconsistent vector width in " + path.string());
    table.add(normalize_answer(word), std::move(values));
  }
  if (!table.dim_) throw Error("empty lookup table " + path.string());
  return table;
}

const std::vector<double>* LookupTable::find(const std::string& word) const {
  auto it = vectors_.find(word);
  return it == vectors_.end() ? nullptr : &it->second;
}

void LookupTable::add(std::string word, std::vector<double> values) {
  if (!dim_) dim_ = values.size();
  if (values.size() != dim_) throw ShapeError("lookup vector width mismatch for " + word);
  vectors_[std::move(word)] = std::move(values);
}

void RewardParams::validate() const {
  if (!(alpha > 0)) throw ValidationError("alpha", "must be > 0");
  if (!(delta > 0)) throw ValidationError("delta", "must be > 0");
  if (!(margin >= 0)) throw ValidationError("margin", "must be >= 0");
  if (embedder == EmbedderKind::surface_ngram && dim == 0)
    throw ValidationError("dim", "must be > 0");
  if (embedder == EmbedderKind::lookup_table && !table)
    throw ValidationError("embedder", "lookup_table requires a loaded table");
}

AnswerVector embed_answer(std::string_view answer, const RewardParams& params) {
  const std::string norm = normalize_answer(answer);
  if (params.embedder == EmbedderKind::lookup_table) {
    if (!params.table) throw Error("lookup_table embedder without a table");
    AnswerVector v(params.table->dim(), 0.0);
    for (const auto& w : words_of(norm))
      if (const auto* row = params.table->find(w))
        for (std::size_t k = 0; k < v.size(); ++k) v[k] += (*row)[k];
    l2_normalize(v);
    return v;
  }

  AnswerVector v(params.dim, 0.0);
  for (const auto& w : words_of(norm)) {
    const std::string padded = "<" + w + ">";
    for (std::size_t i = 0; i + 3 <= padded.size(); ++i) {
      const std::uint64_t h = fnv1a(std::string_view(padded).substr(i, 3));
      v[h % params.dim] += (h >> 63) ? -1.0 : 1.0;
    }
  }
  l2_normalize(v);
  return v;
}

double l2_distance(const AnswerVector& u, const AnswerVector& v) {
  if (u.size() != v.size())
    throw ShapeError("l2_distance: " + std::to_string(u.size()) + " vs " + std::to_string(v.size()));
  double sq = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) sq += (u[i] - v[i]) * (u[i] - v[i]);
  return std::sqrt(sq);
}

double triplet_score(const AnswerVector& gt, const AnswerVector& p,
                     const std::vector<AnswerVector>& negatives, double margin,
                     NegativeAggregation aggregation) {
  const double d_pos = l2_distance(gt, p);
  if (negatives.empty()) return d_pos;
  double d_neg = aggregation == NegativeAggregation::min ? std::numeric_limits<double>::infinity() : 0.0;
  for (const auto& n : negatives) {
    const double d = l2_distance(p, n);
    if (aggregation == NegativeAggregation::min) d_neg = std::min(d_neg, d);
    else d_neg += d;
  }
  if (aggregation == NegativeAggregation::mean) d_neg /= static_cast<double>(negatives.size());
  return std::max(d_pos - d_neg + margin, 0.0);
}

double reward(double t, const RewardParams& params) {
  return params.alpha * (2.0 / (1.0 + std::exp(t) + params.delta)) - params.beta;
}

ScoredPrediction score_prediction(std::string_view gt, std::string_view pred,
                                  const std::vector<std::string>& negatives,
                                  const RewardParams& params) {
  const AnswerVector g = embed_answer(gt, params);
  const AnswerVector p = embed_answer(pred, params);
  std::vector<AnswerVector> negs;
  negs.reserve(negatives.size());
  for (const auto& n : negatives) negs.push_back(embed_answer(n, params));
  ScoredPrediction out;
  out.triplet = triplet_score(g, p, negs, params.margin, params.aggregation);
  out.reward = reward(out.triplet, params);
  return out;
}

}  // namespace tsqa
