#include "tsqa/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>
#include <sstream>

#include "tsqa/error.hpp"
#include "tsqa/temporal_tagger.hpp"

namespace tsqa {
namespace {

std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

bool has_question_interval(const QuestionTimeSpec& s) {
  return s.interval && (s.kind == TimeSpecKind::point || s.kind == TimeSpecKind::range ||
                        s.kind == TimeSpecKind::during_event);
}

}  // namespace

// ---------------------------------------------------------------------------
// Examples

Example prepare_example(const QARecord& record, const Vocabulary& vocab, const FeatureConfig& config) {
  Example ex;
  ex.record = record;
  ex.index = bulk_load(record.facts);
  QuestionTimeSpec spec = record.time_spec ? *record.time_spec : parse_question_time(record.question);
  try {
    spec = resolve_time_spec(spec, ex.index);
  } catch (const ResolutionError&) {
    // Unknown event: keep the signal, drop the interval.
  }
  ex.spec = spec;
  ex.candidates = extract_candidates(record, ex.index);
  ex.encoded = encode_record(record, ex.candidates, spec, vocab, config);

  if (record.unanswerable()) {
    ex.gold_index = ex.candidates.empty_index();
  } else {
    for (const auto& g : record.gold_answers)
      if (auto i = ex.candidates.find(g); i && !ex.candidates.candidates[*i].is_empty()) {
        ex.gold_index = i;
        break;
      }
  }

  if (has_question_interval(spec)) {
    ex.mining_interval = spec.interval;
  } else {
    const std::string gold = normalize_answer(record.gold_answers.front());
    for (auto id : ex.index.pair(record.subject, record.relation))
      if (!gold.empty() && normalize_answer(ex.index.fact(id).object) == gold) {
        ex.mining_interval = ex.index.fact(id).effective();
        break;
      }
    if (!ex.mining_interval) ex.mining_interval = spec.interval;
  }
  return ex;
}

std::vector<Example> prepare_examples(const std::vector<QARecord>& records, const Vocabulary& vocab,
                                      const FeatureConfig& config) {
  std::vector<Example> out;
  out.reserve(records.size());
  for (const auto& r : records) out.push_back(prepare_example(r, vocab, config));
  return out;
}

// ---------------------------------------------------------------------------
// Optimizer

AdamW::AdamW(const PolicyDims& dims, double lr, double weight_decay, double beta1, double beta2, double eps)
    : lr_(lr), weight_decay_(weight_decay), beta1_(beta1), beta2_(beta2), eps_(eps),
      m_(PolicyParams::zeros(dims)), v_(PolicyParams::zeros(dims)) {}

void AdamW::step(PolicyParams& params, const PolicyParams& grads) {
  if (!(params.dims == m_.dims) || !(grads.dims == m_.dims)) throw ShapeError("AdamW: dims differ");
  ++t_;
  const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  std::vector<std::span<double>> p, m, v;
  std::vector<std::span<const double>> g;
  params.for_each_tensor([&](std::string_view, std::span<double> t) { p.push_back(t); });
  m_.for_each_tensor([&](std::string_view, std::span<double> t) { m.push_back(t); });
  v_.for_each_tensor([&](std::string_view, std::span<double> t) { v.push_back(t); });
  grads.for_each_tensor([&](std::string_view, std::span<const double> t) { g.push_back(t); });
  for (std::size_t k = 0; k < p.size(); ++k)
    for (std::size_t i = 0; i < p[k].size(); ++i) {
      m[k][i] = beta1_ * m[k][i] + (1.0 - beta1_) * g[k][i];
      v[k][i] = beta2_ * v[k][i] + (1.0 - beta2_) * g[k][i] * g[k][i];
      const double update = (m[k][i] / c1) / (std::sqrt(v[k][i] / c2) + eps_);
      p[k][i] -= lr_ * (update + weight_decay_ * p[k][i]);
    }
}

// ---------------------------------------------------------------------------
// Configs

void SFTConfig::validate() const {
  if (epochs < 0) throw ValidationError("sft.epochs", "must be >= 0");
  if (batch_size <= 0) throw ValidationError("sft.batch_size", "must be > 0");
  if (!(learning_rate > 0)) throw ValidationError("sft.learning_rate", "must be > 0");
  if (!(weight_decay >= 0)) throw ValidationError("sft.weight_decay", "must be >= 0");
}

std::string_view to_string(RewardKind kind) {
  return kind == RewardKind::contrastive ? "contrastive" : "exact_match";
}

RewardKind reward_kind_from_string(std::string_view s) {
  if (s == "contrastive") return RewardKind::contrastive;
  if (s == "exact_match" || s == "em") return RewardKind::exact_match;
  throw ValidationError("reward_kind", "unknown reward kind '" + std::string(s) + "'");
}

void PPOConfig::validate() const {
  if (num_rollouts <= 0) throw ValidationError("ppo.num_rollouts", "must be > 0");
  if (chunk_size <= 0) throw ValidationError("ppo.chunk_size", "must be > 0");
  if (ppo_epochs <= 0) throw ValidationError("ppo.ppo_epochs", "must be > 0");
  if (iterations < 0) throw ValidationError("ppo.iterations", "must be >= 0");
  if (!(init_kl_coef > 0)) throw ValidationError("ppo.init_kl_coef", "must be > 0");
  if (!(target > 0)) throw ValidationError("ppo.target", "must be > 0");
  if (!(horizon > 0)) throw ValidationError("ppo.horizon", "must be > 0");
  if (!(gamma > 0 && gamma <= 1)) throw ValidationError("ppo.gamma", "must be in (0, 1]");
  if (!(lam > 0 && lam <= 1)) throw ValidationError("ppo.lam", "must be in (0, 1]");
  if (!(cliprange > 0)) throw ValidationError("ppo.cliprange", "must be > 0");
  if (!(vf_coef >= 0)) throw ValidationError("ppo.vf_coef", "must be >= 0");
  if (!(learning_rate > 0)) throw ValidationError("ppo.learning_rate", "must be > 0");
  if (!(weight_decay >= 0)) throw ValidationError("ppo.weight_decay", "must be >= 0");
}

// ---------------------------------------------------------------------------
// Stage 1

SFTResult train_sft(const std::vector<Example>& train, const std::vector<Example>& dev,
                    const SFTConfig& config, const PolicyDims& dims) {
  std::mt19937_64 rng(config.seed);
  PolicyParams init = init_params(rng, dims);
  return train_sft(train, dev, config, std::move(init));
}

SFTResult train_sft(const std::vector<Example>& train, const std::vector<Example>& dev,
                    const SFTConfig& config, PolicyParams init) {
  config.validate();
  if (train.empty()) throw Error("train_sft: empty training set");
  std::vector<std::size_t> usable;
  for (std::size_t i = 0; i < train.size(); ++i)
    if (train[i].gold_index) usable.push_back(i);

  SFTResult result;
  result.skipped = train.size() - usable.size();
  if (result.skipped * 10 > train.size())
    throw Error("train_sft: " + std::to_string(result.skipped) + " of " + std::to_string(train.size()) +
                " records have no gold candidate");
  if (result.skipped)
    std::fprintf(stderr, "warning: skipped %zu records without a gold candidate\n", result.skipped);

  // Shuffling uses its own stream so both overloads behave the same.
  std::mt19937_64 rng(config.seed ^ 0x5f1a7e11ULL);
  PolicyParams params = std::move(init);
  result.params = params;
  double best_em = dev.empty() ? 0.0 : evaluate(dev, params).em;
  AdamW opt(params.dims, config.learning_rate, config.weight_decay);
  PolicyParams grads = PolicyParams::zeros(params.dims);

  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    std::shuffle(usable.begin(), usable.end(), rng);
    double loss_sum = 0.0;
    for (std::size_t b = 0; b < usable.size(); b += static_cast<std::size_t>(config.batch_size)) {
      const std::size_t e = std::min(usable.size(), b + static_cast<std::size_t>(config.batch_size));
      grads.set_zero();
      const double scale = 1.0 / static_cast<double>(e - b);
      for (std::size_t k = b; k < e; ++k) {
        const auto& ex = train[usable[k]];
        loss_sum += backward(params, ex.encoded, CrossEntropyLoss{*ex.gold_index}, grads, scale);
      }
      opt.step(params, grads);
    }
    if (!params.all_finite()) throw Error("train_sft: non-finite parameters at epoch " + std::to_string(epoch));
    EpochLog log;
    log.epoch = epoch;
    log.train_loss = usable.empty() ? 0.0 : loss_sum / static_cast<double>(usable.size());
    if (!dev.empty()) {
      const Metrics m = evaluate(dev, params);
      log.dev_em = m.em;
      log.dev_f1 = m.f1;
    }
    result.history.push_back(log);
    if (dev.empty() || log.dev_em > best_em) {
      best_em = log.dev_em;
      result.best_epoch = epoch;
      result.params = params;
    }
  }
  return result;
}

// ---------------------------------------------------------------------------
// Rewards and rollouts

RewardScorer::RewardScorer(RewardParams params) : params_(std::move(params)) { params_.validate(); }

const AnswerVector& RewardScorer::embed(const std::string& text) {
  auto it = cache_.find(text);
  if (it == cache_.end()) it = cache_.emplace(text, embed_answer(text, params_)).first;
  return it->second;
}

ScoredPrediction RewardScorer::score(const std::string& gold, const std::string& pred,
                                     const std::vector<std::string>& negatives) {
  std::vector<AnswerVector> negs;
  negs.reserve(negatives.size());
  for (const auto& n : negatives) negs.push_back(embed(n));
  ScoredPrediction out;
  out.triplet = triplet_score(embed(gold), embed(pred), negs, params_.margin, params_.aggregation);
  out.reward = reward(out.triplet, params_);
  return out;
}

double raw_reward(const Example& example, std::size_t action, RewardKind kind, RewardScorer& scorer,
                  std::size_t k_per_side, std::mt19937_64& rng) {
  const auto& pred = example.candidates.candidates.at(action).text;
  const auto& golds = example.record.gold_answers;
  if (kind == RewardKind::exact_match) return exact_match(pred, golds) ? 1.0 : -1.0;

  const std::string& gold = golds.front();
  std::vector<std::string> negatives;
  if (example.mining_interval) {
    const auto& r = example.record;
    auto remote = mine_remote(r.subject, r.relation, gold, *example.mining_interval, example.index);
    auto proximal = mine_proximal(r.subject, r.relation, gold, *example.mining_interval, example.index);
    NegativeSet set = sample_negatives(remote, proximal, k_per_side, rng);
    negatives = std::move(set.remote);
    negatives.insert(negatives.end(), set.proximal.begin(), set.proximal.end());
  }
  return scorer.score(gold, pred, negatives).reward;
}

RolloutBatch collect_rollouts(const PolicyParams& params, const PolicyParams& reference,
                              const std::vector<Example>& dataset, const PPOConfig& config, double kl_coef,
                              RewardScorer& scorer, std::mt19937_64& rng) {
  if (dataset.empty()) throw Error("collect_rollouts: empty dataset");
  RolloutBatch batch;
  batch.kl_coef = kl_coef;
  std::uniform_int_distribution<std::size_t> pick(0, dataset.size() - 1);
  for (int i = 0; i < config.num_rollouts; ++i) {
    Rollout r;
    r.example = pick(rng);
    const auto& ex = dataset[r.example];
    const PolicyOutput cur = forward(params, ex.encoded);
    const PolicyOutput ref = forward(reference, ex.encoded);
    r.action = sample_index(cur.probs, rng);
    r.logprob_old = log_softmax_at(cur.logits, r.action);
    r.kl = r.logprob_old - log_softmax_at(ref.logits, r.action);
    r.value_old = cur.value;
    r.raw_reward = raw_reward(ex, r.action, config.reward_kind, scorer, config.k_per_side, rng);
    r.reward = r.raw_reward - kl_coef * r.kl;
    batch.samples.push_back(r);
  }
  return batch;
}

// ---------------------------------------------------------------------------
// GAE

GaeResult compute_gae(const std::vector<double>& rewards, const std::vector<double>& values,
                      const std::vector<bool>& dones, double gamma, double lam) {
  const std::size_t n = rewards.size();
  if (values.size() != n || dones.size() != n) throw ShapeError("compute_gae: length mismatch");
  GaeResult out;
  out.raw_advantages.assign(n, 0.0);
  out.returns.assign(n, 0.0);
  double next_adv = 0.0;
  for (std::size_t k = n; k-- > 0;) {
    const double notdone = dones[k] ? 0.0 : 1.0;
    const double next_value = k + 1 < n ? values[k + 1] : 0.0;
    const double delta = rewards[k] + gamma * next_value * notdone - values[k];
    next_adv = delta + gamma * lam * notdone * next_adv;
    out.raw_advantages[k] = next_adv;
    out.returns[k] = next_adv + values[k];
  }
  out.advantages = out.raw_advantages;
  if (n) {
    const double mean = std::accumulate(out.raw_advantages.begin(), out.raw_advantages.end(), 0.0) / n;
    double var = 0.0;
    for (double a : out.raw_advantages) var += (a - mean) * (a - mean);
    const double sd = std::sqrt(var / n);
    for (double& a : out.advantages) a = sd > 1e-12 ? (a - mean) / sd : 0.0;
  }
  return out;
}

GaeResult compute_gae(const std::vector<double>& rewards, const std::vector<double>& values, double gamma,
                      double lam) {
  return compute_gae(rewards, values, std::vector<bool>(rewards.size(), true), gamma, lam);
}

// ---------------------------------------------------------------------------
// PPO

std::pair<double, double> ppo_gradient(const PolicyParams& params, const std::vector<Example>& dataset,
                                       std::span<const Rollout> samples, const PPOConfig& config,
                                       PolicyParams& grads, double* clip_fraction) {
  grads.set_zero();
  if (samples.empty()) return {0.0, 0.0};
  const double scale = 1.0 / static_cast<double>(samples.size());
  double policy_loss = 0.0, value_loss = 0.0;
  std::size_t clipped = 0;
  for (const auto& s : samples) {
    const auto& enc = dataset.at(s.example).encoded;
    if (clip_fraction) {
      const double ratio = std::exp(log_softmax_at(forward(params, enc).logits, s.action) - s.logprob_old);
      if (std::abs(ratio - 1.0) > config.cliprange) ++clipped;
    }
    policy_loss += backward(params, enc, PpoSurrogateLoss{s.action, s.logprob_old, s.advantage, config.cliprange},
                            grads, scale);
    if (config.vf_coef != 0.0)
      value_loss += backward(params, enc, ValueMseLoss{s.ret}, grads, scale * config.vf_coef);
  }
  if (clip_fraction) *clip_fraction = static_cast<double>(clipped) * scale;
  return {policy_loss * scale, value_loss * scale};
}

void reinforce_gradient(const PolicyParams& params, const std::vector<Example>& dataset,
                        std::span<const Rollout> samples, PolicyParams& grads) {
  grads.set_zero();
  if (samples.empty()) return;
  // -A * dlog pi(a)/dlogits = A * (p - onehot(a)), the cross-entropy seed scaled by A.
  const double scale = 1.0 / static_cast<double>(samples.size());
  for (const auto& s : samples)
    if (s.advantage != 0.0)
      backward(params, dataset.at(s.example).encoded, CrossEntropyLoss{s.action}, grads, scale * s.advantage);
}

PPOStats ppo_update(PolicyParams& params, AdamW& optimizer, const RolloutBatch& batch,
                    const std::vector<Example>& dataset, const PPOConfig& config, std::mt19937_64& rng) {
  PPOStats stats;
  const auto& samples = batch.samples;
  if (samples.empty()) return stats;
  std::vector<std::size_t> order(samples.size());
  std::iota(order.begin(), order.end(), 0);
  PolicyParams grads = PolicyParams::zeros(params.dims);
  std::vector<Rollout> chunk;
  double clip_sum = 0.0;
  for (int epoch = 0; epoch < config.ppo_epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t b = 0; b < order.size(); b += static_cast<std::size_t>(config.chunk_size)) {
      const std::size_t e = std::min(order.size(), b + static_cast<std::size_t>(config.chunk_size));
      chunk.clear();
      for (std::size_t k = b; k < e; ++k) chunk.push_back(samples[order[k]]);
      double clip = 0.0;
      const auto [pl, vl] = ppo_gradient(params, dataset, chunk, config, grads, &clip);
      if (!std::isfinite(pl) || !std::isfinite(vl) || !grads.all_finite())
        throw Error("ppo_update: non-finite loss (policy " + fmt17(pl) + ", value " + fmt17(vl) + ") at epoch " +
                    std::to_string(epoch) + ", chunk " + std::to_string(b / config.chunk_size));
      optimizer.step(params, grads);
      stats.policy_loss += pl;
      stats.value_loss += vl;
      clip_sum += clip;
      ++stats.updates;
    }
  }
  stats.policy_loss /= static_cast<double>(stats.updates);
  stats.value_loss /= static_cast<double>(stats.updates);
  stats.clip_fraction = clip_sum / static_cast<double>(stats.updates);
  double kl = 0.0;
  for (const auto& s : samples)
    kl += s.logprob_old - log_softmax_at(forward(params, dataset.at(s.example).encoded).logits, s.action);
  stats.approx_kl = kl / static_cast<double>(samples.size());
  return stats;
}

double adaptive_kl_update(double coef, double observed_kl, const PPOConfig& config, std::size_t n_samples) {
  if (!(coef > 0)) throw Error("adaptive_kl_update: coefficient must be > 0");
  const double err = std::clamp((observed_kl - config.target) / config.target, -0.2, 0.2);
  const double next = coef * (1.0 + err * static_cast<double>(n_samples) / config.horizon);
  return std::max(next, std::numeric_limits<double>::min());
}

PPOResult train_ppo(const std::vector<Example>& train, const std::vector<Example>& dev,
                    const PolicyParams& sft_params, const PPOConfig& config, const RewardParams& reward_params) {
  config.validate();
  PPOResult result;
  result.params = sft_params;
  PPOIterationLog start;
  start.kl_coef = config.init_kl_coef;
  if (!dev.empty()) {
    const Metrics m = evaluate(dev, sft_params);
    start.dev_em = m.em;
    start.dev_f1 = m.f1;
  }
  result.history.push_back(start);
  if (config.iterations == 0) return result;
  if (train.empty()) throw Error("train_ppo: empty training set");

  std::mt19937_64 rng(config.seed);
  RewardScorer scorer(reward_params);
  PolicyParams params = sft_params;
  AdamW opt(params.dims, config.learning_rate, config.weight_decay);
  double coef = config.init_kl_coef;
  double best_em = start.dev_em;

  for (int it = 1; it <= config.iterations; ++it) {
    RolloutBatch batch = collect_rollouts(params, sft_params, train, config, coef, scorer, rng);
    std::vector<double> rewards, values;
    for (const auto& s : batch.samples) {
      rewards.push_back(s.reward);
      values.push_back(s.value_old);
    }
    const GaeResult gae = compute_gae(rewards, values, config.gamma, config.lam);
    double mean_raw = 0.0, mean_kl = 0.0;
    for (std::size_t k = 0; k < batch.samples.size(); ++k) {
      auto& s = batch.samples[k];
      s.advantage = gae.advantages[k];
      s.ret = gae.returns[k];
      mean_raw += s.raw_reward;
      mean_kl += s.kl;
    }
    mean_raw /= static_cast<double>(batch.samples.size());
    mean_kl /= static_cast<double>(batch.samples.size());
    const PPOStats stats = ppo_update(params, opt, batch, train, config, rng);

    PPOIterationLog log;
    log.iteration = it;
    log.mean_reward = mean_raw;
    log.kl = mean_kl;
    log.kl_coef = coef;
    log.clip_frac = stats.clip_fraction;
    if (!dev.empty()) {
      const Metrics m = evaluate(dev, params);
      log.dev_em = m.em;
      log.dev_f1 = m.f1;
    }
    result.history.push_back(log);
    coef = adaptive_kl_update(coef, mean_kl, config, batch.samples.size());
    if (dev.empty() || log.dev_em > best_em) {
      best_em = log.dev_em;
      result.best_iteration = it;
      result.params = params;
    }
  }
  return result;
}

std::string history_csv(const std::vector<PPOIterationLog>& history) {
  std::ostringstream out;
  out << "iteration,mean_reward,kl,kl_coef,clip_frac,dev_em,dev_f1\n";
  for (const auto& h : history)
    out << h.iteration << ',' << fmt17(h.mean_reward) << ',' << fmt17(h.kl) << ',' << fmt17(h.kl_coef) << ','
        << fmt17(h.clip_frac) << ',' << fmt17(h.dev_em) << ',' << fmt17(h.dev_f1) << '\n';
  return out.str();
}

std::string history_csv(const std::vector<EpochLog>& history) {
  std::ostringstream out;
  out << "epoch,train_loss,dev_em,dev_f1\n";
  for (const auto& h : history)
    out << h.epoch << ',' << fmt17(h.train_loss) << ',' << fmt17(h.dev_em) << ',' << fmt17(h.dev_f1) << '\n';
  return out.str();
}

std::string predict(const PolicyParams& params, const Example& example) {
  const PolicyOutput out = forward(params, example.encoded);
  return example.candidates.candidates[argmax(out.probs)].text;
}

Metrics evaluate(const std::vector<Example>& dataset, const PolicyParams& params) {
  MetricsBuilder b;
  for (const auto& ex : dataset) b.add(ex.record.question_type, predict(params, ex), ex.record.gold_answers);
  return b.finish();
}

}  // namespace tsqa
