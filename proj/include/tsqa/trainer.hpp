#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "tsqa/corpus.hpp"
#include "tsqa/eval.hpp"
#include "tsqa/fact_store.hpp"
#include "tsqa/policy_model.hpp"
#include "tsqa/reward.hpp"

namespace tsqa {

/// A record with everything the policy needs precomputed.
struct Example {
  QARecord record;
  FactIndex index;  // over record.facts
  QuestionTimeSpec spec;  // event-resolved
  CandidateSet candidates;
  EncodedRecord encoded;
  std::optional<std::size_t> gold_index;  // EMPTY for unanswerable questions
  std::optional<Interval> mining_interval;  // question interval, else gold fact's
};

Example prepare_example(const QARecord& record, const Vocabulary& vocab,
                        const FeatureConfig& config);
std::vector<Example> prepare_examples(const std::vector<QARecord>& records,
                                      const Vocabulary& vocab, const FeatureConfig& config);

/// Adam with decoupled weight decay over every tensor of PolicyParams.
class AdamW {
 public:
  AdamW(const PolicyDims& dims, double lr, double weight_decay, double beta1 = 0.9,
        double beta2 = 0.999, double eps = 1e-8);
  void step(PolicyParams& params, const PolicyParams& grads);
  std::size_t steps() const { return t_; }

 private:
  double lr_, weight_decay_, beta1_, beta2_, eps_;
  std::size_t t_ = 0;
  PolicyParams m_, v_;
};

struct SFTConfig {
  int epochs = 6;
  int batch_size = 8;
  double learning_rate = 1e-2;  // the scorer trains from scratch
  double weight_decay = 1e-4;
  std::uint64_t seed = 1;
  void validate() const;
};

enum class RewardKind { contrastive, exact_match };
std::string_view to_string(RewardKind kind);
RewardKind reward_kind_from_string(std::string_view s);

struct PPOConfig {
  int num_rollouts = 256;
  int chunk_size = 12;  // minibatch size inside ppo_update
  int ppo_epochs = 4;
  double init_kl_coef = 0.05;
  double target = 6.0;
  double horizon = 10000.0;
  double gamma = 0.99;
  double lam = 0.95;
  double cliprange = 0.2;
  double vf_coef = 1.0;
  int iterations = 30;
  double learning_rate = 2e-3;
  double weight_decay = 0.0;
  std::size_t k_per_side = 2;
  std::uint64_t seed = 1;
  RewardKind reward_kind = RewardKind::contrastive;
  void validate() const;
};

struct EpochLog {
  int epoch = 0;
  double train_loss = 0.0;
  double dev_em = 0.0;
  double dev_f1 = 0.0;
};

struct SFTResult {
  PolicyParams params;
  std::vector<EpochLog> history;
  std::size_t skipped = 0;
  int best_epoch = 0;  // 0 = initial params
};

/// Params start from init_params(seed). Returns the best-dev-EM checkpoint.
SFTResult train_sft(const std::vector<Example>& train, const std::vector<Example>& dev,
                    const SFTConfig& config, const PolicyDims& dims);
SFTResult train_sft(const std::vector<Example>& train, const std::vector<Example>& dev,
                    const SFTConfig& config, PolicyParams init);

struct Rollout {
  std::size_t example = 0;  // index into the dataset
  std::size_t action = 0;
  double logprob_old = 0.0;
  double raw_reward = 0.0;
  double reward = 0.0;  // raw - kl_coef * kl
  double value_old = 0.0;
  double kl = 0.0;      // logprob_current - logprob_reference for the action
  double advantage = 0.0;
  double ret = 0.0;
  bool done = true;
};

struct RolloutBatch {
  std::vector<Rollout> samples;
  double kl_coef = 0.0;
};

/// Caches answer embeddings across calls; shared by rollout collection.
class RewardScorer {
 public:
  explicit RewardScorer(RewardParams params);
  const RewardParams& params() const { return params_; }
  /// Contrastive reward of `pred` against `gold` and the given negatives.
  ScoredPrediction score(const std::string& gold, const std::string& pred,
                         const std::vector<std::string>& negatives);

 private:
  const AnswerVector& embed(const std::string& text);
  RewardParams params_;
  std::unordered_map<std::string, AnswerVector> cache_;
};

/// Raw reward for choosing candidate `action` of `example`.
double raw_reward(const Example& example, std::size_t action, RewardKind kind,
                  RewardScorer& scorer, std::size_t k_per_side, std::mt19937_64& rng);

RolloutBatch collect_rollouts(const PolicyParams& params, const PolicyParams& reference,
                              const std::vector<Example>& dataset, const PPOConfig& config,
                              double kl_coef, RewardScorer& scorer, std::mt19937_64& rng);

struct GaeResult {
  std::vector<double> advantages;  // standardized
  std::vector<double> raw_advantages;
  std::vector<double> returns;
};

/// Generalized advantage estimation; `dones[t]` ends an episode after step
/// t. Advantages are standardized over the batch.
GaeResult compute_gae(const std::vector<double>& rewards, const std::vector<double>& values,
                      const std::vector<bool>& dones, double gamma, double lam);
/// All steps are one-step episodes.
GaeResult compute_gae(const std::vector<double>& rewards, const std::vector<double>& values,
                      double gamma, double lam);

struct PPOStats {
  double policy_loss = 0.0;
  double value_loss = 0.0;
  double approx_kl = 0.0;  // mean(logprob_old - logprob_new)
  double clip_fraction = 0.0;
  std::size_t updates = 0;
};

/// Gradient of the total PPO loss (policy + vf_coef * value) averaged over
/// `samples`. Returns the policy and value losses.
std::pair<double, double> ppo_gradient(const PolicyParams& params,
                                       const std::vector<Example>& dataset,
                                       std::span<const Rollout> samples, const PPOConfig& config,
                                       PolicyParams& grads, double* clip_fraction = nullptr);

/// Gradient of -mean(A * log pi(a)) over `samples`, the REINFORCE estimator
/// with the value baseline folded into A.
void reinforce_gradient(const PolicyParams& params, const std::vector<Example>& dataset,
                        std::span<const Rollout> samples, PolicyParams& grads);

PPOStats ppo_update(PolicyParams& params, AdamW& optimizer, const RolloutBatch& batch,
                    const std::vector<Example>& dataset, const PPOConfig& config,
                    std::mt19937_64& rng);

double adaptive_kl_update(double coef, double observed_kl, const PPOConfig& config,
                          std::size_t n_samples);

struct PPOIterationLog {
  int iteration = 0;
  double mean_reward = 0.0;
  double kl = 0.0;
  double kl_coef = 0.0;
  double clip_frac = 0.0;
  double dev_em = 0.0;
  double dev_f1 = 0.0;
};

struct PPOResult {
  PolicyParams params;
  std::vector<PPOIterationLog> history;  // entry 0 is the starting checkpoint
  int best_iteration = 0;
};

PPOResult train_ppo(const std::vector<Example>& train, const std::vector<Example>& dev,
                    const PolicyParams& sft_params, const PPOConfig& config,
                    const RewardParams& reward_params);

std::string history_csv(const std::vector<PPOIterationLog>& history);
std::string history_csv(const std::vector<EpochLog>& history);

/// Greedy prediction text for one example.
std::string predict(const PolicyParams& params, const Example& example);

/// Greedy decoding over the dataset, aggregated overall and by type.
Metrics evaluate(const std::vector<Example>& dataset, const PolicyParams& params);

}  // namespace tsqa
