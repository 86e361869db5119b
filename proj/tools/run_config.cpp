#include "run_config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "tsqa/error.hpp"

namespace tsqa::cli {

using json = nlohmann::json;

namespace {

// Reads typed members of one JSON object and rejects keys nobody asked for.
class Block {
 public:
  Block(const json& j, std::string name) : j_(j), name_(std::move(name)) {
    if (!j_.is_object()) throw ValidationError(name_, "expected an object");
  }

  template <class T>
  void get(const char* key, T& out) {
    seen_.insert(key);
    auto it = j_.find(key);
    if (it == j_.end() || it->is_null()) return;
    try {
      out = it->get<T>();
    } catch (const json::exception&) {
      throw ValidationError(field(key), "wrong type");
    }
  }

  template <class Fn>
  void get_string(const char* key, Fn&& apply) {
    seen_.insert(key);
    auto it = j_.find(key);
    if (it == j_.end() || it->is_null()) return;
    if (!it->is_string()) throw ValidationError(field(key), "expected a string");
    try {
      apply(it->get<std::string>());
    } catch (const Error& e) {
      throw ValidationError(field(key), e.what());
    }
  }

  const json* child(const char* key) {
    seen_.insert(key);
    auto it = j_.find(key);
    return it == j_.end() || it->is_null() ? nullptr : &*it;
  }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it)
      if (!seen_.count(it.key())) throw ValidationError(field(it.key()), "unknown key");
  }

  std::string field(const std::string& key) const { return name_.empty() ? key : name_ + "." + key; }

 private:
  const json& j_;
  std::string name_;
  std::set<std::string> seen_;
};

void read_paths(const json& j, Paths& p) {
  Block b(j, "paths");
  std::string s;
  auto path = [&](const char* key, std::filesystem::path& out) {
    s.clear();
    b.get(key, s);
    if (!s.empty()) out = s;
  };
  path("data", p.data);
  path("facts", p.facts);
  path("checkpoints", p.checkpoints);
  path("reports", p.reports);
  b.finish();
}

void read_features(const json& j, FeatureConfig& f) {
  Block b(j, "features");
  b.get("d", f.d);
  b.get("window", f.window);
  b.get("hidden", f.hidden);
  b.get_string("fusion", [&](const std::string& s) { f.fusion = fusion_mode_from_string(s); });
  b.finish();
}

void read_reward(const json& j, RewardParams& r, std::optional<std::filesystem::path>& table) {
  Block b(j, "reward");
  b.get("alpha", r.alpha);
  b.get("beta", r.beta);
  b.get("delta", r.delta);
  b.get("margin", r.margin);
  b.get("dim", r.dim);
  b.get_string("embedder", [&](const std::string& s) {
    if (s == "surface_ngram") r.embedder = EmbedderKind::surface_ngram;
    else if (s == "lookup_table") r.embedder = EmbedderKind::lookup_table;
    else throw Error("unknown embedder '" + s + "'");
  });
  b.get_string("aggregation", [&](const std::string& s) {
    if (s == "min") r.aggregation = NegativeAggregation::min;
    else if (s == "mean") r.aggregation = NegativeAggregation::mean;
    else throw Error("unknown aggregation '" + s + "'");
  });
  b.get_string("table", [&](const std::string& s) { table = s; });
  b.finish();
}

void read_synthetic(const json& j, SyntheticConfig& c) {
  Block b(j, "synthetic");
  b.get("n_entities", c.n_entities);
  b.get("n_relations", c.n_relations);
  b.get("facts_per_pair", c.facts_per_pair);
  b.get("distractor_sentences_per_context", c.distractor_sentences_per_context);
  b.get("year_min", c.year_min);
  b.get("year_max", c.year_max);
  b.get("unanswerable_fraction", c.unanswerable_fraction);
  b.get("question_type_mix", c.question_type_mix);
  b.get("n_records", c.n_records);
  b.get("n_train", c.n_train);
  b.get("n_dev", c.n_dev);
  b.get("n_test", c.n_test);
  b.get("seed", c.seed);
  b.finish();
}

void read_sft(const json& j, SFTConfig& c) {
  Block b(j, "sft");
  b.get("epochs", c.epochs);
  b.get("batch_size", c.batch_size);
  b.get("learning_rate", c.learning_rate);
  b.get("weight_decay", c.weight_decay);
  b.get("seed", c.seed);
  b.finish();
}

void read_ppo(const json& j, PPOConfig& c) {
  Block b(j, "ppo");
  b.get("num_rollouts", c.num_rollouts);
  b.get("chunk_size", c.chunk_size);
  b.get("ppo_epochs", c.ppo_epochs);
  b.get("init_kl_coef", c.init_kl_coef);
  b.get("target", c.target);
  b.get("horizon", c.horizon);
  b.get("gamma", c.gamma);
  b.get("lam", c.lam);
  b.get("cliprange", c.cliprange);
  b.get("vf_coef", c.vf_coef);
  b.get("iterations", c.iterations);
  b.get("learning_rate", c.learning_rate);
  b.get("weight_decay", c.weight_decay);
  b.get("k_per_side", c.k_per_side);
  b.get("seed", c.seed);
  b.get_string("reward_kind", [&](const std::string& s) { c.reward_kind = reward_kind_from_string(s); });
  b.finish();
}

}  // namespace

void RunConfig::apply_seed(std::uint64_t s) {
  seed = s;
  synthetic.seed = s;
  sft.seed = s;
  ppo.seed = s;
}

void RunConfig::validate() const {
  if (features.d == 0) throw ValidationError("features.d", "must be > 0");
  if (features.hidden == 0) throw ValidationError("features.hidden", "must be > 0");
  if (features.window > 512) throw ValidationError("features.window", "must be <= 512");
  if (reward.embedder == EmbedderKind::lookup_table && !lookup_table)
    throw ValidationError("reward.table", "lookup_table embedder needs a table path");
  if (lookup_table && !std::filesystem::exists(*lookup_table))
    throw ValidationError("reward.table", "no such file " + lookup_table->string());
  tsqa::validate(synthetic);
  sft.validate();
  ppo.validate();
}

RunConfig parse_run_config(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(0, std::string("config: ") + e.what());
  }
  RunConfig c;
  Block root(j, "");
  std::uint64_t seed = c.seed;
  const bool has_seed = j.is_object() && j.contains("seed");
  root.get("seed", seed);
  if (has_seed) c.apply_seed(seed);
  if (auto* p = root.child("paths")) read_paths(*p, c.paths);
  if (auto* p = root.child("features")) read_features(*p, c.features);
  if (auto* p = root.child("reward")) read_reward(*p, c.reward, c.lookup_table);
  if (auto* p = root.child("synthetic")) read_synthetic(*p, c.synthetic);
  if (auto* p = root.child("sft")) read_sft(*p, c.sft);
  if (auto* p = root.child("ppo")) read_ppo(*p, c.ppo);
  root.finish();
  if (c.reward.embedder == EmbedderKind::lookup_table && c.lookup_table)
    c.reward.table = std::make_shared<LookupTable>(LookupTable::load(*c.lookup_table));
  c.validate();
  c.reward.validate();
  return c;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open config " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_run_config(ss.str());
}

}  // namespace tsqa::cli
