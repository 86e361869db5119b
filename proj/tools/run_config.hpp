#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include "tsqa/corpus.hpp"
#include "tsqa/policy_model.hpp"
#include "tsqa/reward.hpp"
#include "tsqa/trainer.hpp"

namespace tsqa::cli {

struct Paths {
  std::filesystem::path data = "data";
  std::filesystem::path facts;  // empty: <data>/facts.jsonl
  std::filesystem::path checkpoints = "checkpoints";
  std::filesystem::path reports = "reports";
};

struct RunConfig {
  Paths paths;
  FeatureConfig features;
  RewardParams reward;
  std::optional<std::filesystem::path> lookup_table;
  SyntheticConfig synthetic;
  SFTConfig sft;
  PPOConfig ppo;
  std::uint64_t seed = 1;

  /// Seeds every block from `seed`.
  void apply_seed(std::uint64_t s);
  void validate() const;
};

/// Defaults overridden by the JSON object in `path`. Unknown keys are
/// rejected with ValidationError.
RunConfig load_run_config(const std::filesystem::path& path);
RunConfig parse_run_config(const std::string& json_text);

}  // namespace tsqa::cli
