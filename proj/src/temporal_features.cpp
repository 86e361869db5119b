#include "tsqa/temporal_features.hpp"

#include <algorithm>
#include <string>

#include "tsqa/error.hpp"

namespace tsqa {

std::string_view to_string(FusionMode mode) {
  switch (mode) {
    case FusionMode::add: return "add";
    case FusionMode::concat: return "concat";
    case FusionMode::off: return "off";
  }
  return "add";
}

FusionMode fusion_mode_from_string(std::string_view s) {
  if (s == "add") return FusionMode::add;
  if (s == "concat") return FusionMode::concat;
  if (s == "off") return FusionMode::off;
  throw Error("unknown fusion mode: " + std::string(s));
}

TemporalMask build_mask(std::size_t length, const std::vector<TemporalSpan>& spans) {
  TemporalMask mask{std::vector<std::uint8_t>(length, 0)};
  for (const auto& s : spans) {
    if (s.tok_start >= s.tok_end || s.tok_end > length)
      throw Error("span [" + std::to_string(s.tok_start) + ", " + std::to_string(s.tok_end) +
                  ") outside sequence of length " + std::to_string(length));
    std::fill(mask.bits.begin() + s.tok_start, mask.bits.begin() + s.tok_end, 1);
  }
  return mask;
}

TemporalMask dilate(const TemporalMask& mask, std::size_t half_width) {
  const std::size_t n = mask.size();
  TemporalMask out{std::vector<std::uint8_t>(n, 0)};
  // Difference array over the covered ranges keeps this linear in n.
  std::vector<int> delta(n + 1, 0);
  for (std::size_t j = 0; j < n; ++j) {
    if (!mask.bits[j]) continue;
    const std::size_t lo = j > half_width ? j - half_width : 0;
    const std::size_t hi = std::min(n, j + half_width + 1);
    ++delta[lo];
    --delta[hi];
  }
  int run = 0;
  for (std::size_t i = 0; i < n; ++i) {
    run += delta[i];
    out.bits[i] = run > 0 ? 1 : 0;
  }
  return out;
}

TemporalMask concat_masks(const TemporalMask& question, const TemporalMask& context) {
  TemporalMask out = question;
  out.bits.insert(out.bits.end(), context.bits.begin(), context.bits.end());
  return out;
}

Matrix embed_temporal(const TemporalMask& mask, const EmbeddingTables& tables) {
  Matrix out(static_cast<Eigen::Index>(mask.size()), tables.time_table.cols());
  for (std::size_t i = 0; i < mask.size(); ++i)
    out.row(static_cast<Eigen::Index>(i)) = tables.time_table.row(mask.bits[i] ? 1 : 0);
  return out;
}

FusedSequence fuse(std::span<const int> token_ids, const TemporalMask& mask,
                   const EmbeddingTables& tables, std::size_t question_len, FusionMode mode) {
  if (token_ids.size() != mask.size())
    throw ShapeError("fuse: " + std::to_string(token_ids.size()) + " tokens vs mask of " +
                     std::to_string(mask.size()));
  const auto d = tables.text_table.cols();
  if (mode != FusionMode::off && tables.time_table.cols() != d)
    throw ShapeError("fuse: time and text tables differ in width");
  const auto vocab = tables.text_table.rows();
  const auto width = static_cast<Eigen::Index>(fused_width(mode, static_cast<std::size_t>(d)));

  FusedSequence out;
  out.question_len = question_len;
  out.vectors.resize(static_cast<Eigen::Index>(token_ids.size()), width);
  for (std::size_t i = 0; i < token_ids.size(); ++i) {
    const int id = token_ids[i];
    if (id < 0 || id >= vocab) throw Error("token id " + std::to_string(id) + " out of vocabulary");
    const auto r = static_cast<Eigen::Index>(i);
    const auto time_row = tables.time_table.row(mask.bits[i] ? 1 : 0);
    switch (mode) {
      case FusionMode::add:
        out.vectors.row(r) = tables.text_table.row(id) + time_row;
        break;
      case FusionMode::concat:
        out.vectors.row(r).head(d) = tables.text_table.row(id);
        out.vectors.row(r).tail(d) = time_row;
        break;
      case FusionMode::off:
        out.vectors.row(r) = tables.text_table.row(id);
        break;
    }
  }
  return out;
}

}  // namespace tsqa
