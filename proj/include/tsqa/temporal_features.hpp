#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "tsqa/temporal_tagger.hpp"

namespace tsqa {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;

/// Per-token 0/1 marks over one token sequence.
struct TemporalMask {
  std::vector<std::uint8_t> bits;

  std::size_t size() const { return bits.size(); }
  friend bool operator==(const TemporalMask&, const TemporalMask&) = default;
};

/// How the time embedding is combined with the text embedding.
enum class FusionMode {
  add,     // text + time, width d
  concat,  // [text, time], width 2d
  off,     // text only; time table ignored
};

std::string_view to_string(FusionMode mode);
FusionMode fusion_mode_from_string(std::string_view s);

/// Row width of fused vectors for text width `d`.
constexpr std::size_t fused_width(FusionMode mode, std::size_t d) {
  return mode == FusionMode::concat ? 2 * d : d;
}

struct EmbeddingTables {
  Matrix time_table;  // 2 x d, row = mask value
  Matrix text_table;  // V x d
};

struct FusedSequence {
  Matrix vectors;  // (n + m) x width
  std::size_t question_len = 0;
};

/// Throws Error when a span reaches past `length`.
TemporalMask build_mask(std::size_t length, const std::vector<TemporalSpan>& spans);

/// Bit i is set iff some input bit within distance `half_width` is set.
TemporalMask dilate(const TemporalMask& mask, std::size_t half_width);

TemporalMask concat_masks(const TemporalMask& question, const TemporalMask& context);

Matrix embed_temporal(const TemporalMask& mask, const EmbeddingTables& tables);

/// Row i combines text_table[token_ids[i]] with time_table[mask.bits[i]].
/// Throws Error for an out-of-vocabulary id or a length mismatch.
FusedSequence fuse(std::span<const int> token_ids, const TemporalMask& mask,
                   const EmbeddingTables& tables, std::size_t question_len,
                   FusionMode mode = FusionMode::add);

}  // namespace tsqa
