#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <functional>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <variant>
#include <vector>

#include "tsqa/corpus.hpp"
#include "tsqa/fact_store.hpp"
#include "tsqa/temporal_features.hpp"

namespace tsqa {

struct FeatureConfig {
  std::size_t d = 32;
  std::size_t window = 10;  // dilation half-width and mention window half-width
  FusionMode fusion = FusionMode::add;
  std::size_t hidden = 64;
};

/// Lowercased token vocabulary; id 0 is UNK.
class Vocabulary {
 public:
  static constexpr int kUnk = 0;

  static Vocabulary build(const std::vector<QARecord>& records, std::size_t min_count = 2);
  static Vocabulary from_words(std::vector<std::string> words);  // words[0] must be UNK

  int id(std::string_view token) const;
  std::size_t size() const { return words_.size(); }
  const std::vector<std::string>& words() const { return words_; }

 private:
  std::vector<std::string> words_;
  std::unordered_map<std::string, int> ids_;
};

using TokenRange = std::pair<std::size_t, std::size_t>;  // [begin, end)

struct Candidate {
  std::string text;                  // "" is the EMPTY candidate
  std::optional<TokenRange> mention;  // first mention in the context tokens
  std::optional<Interval> fact_interval;
  bool is_empty() const { return text.empty(); }
};

struct CandidateSet {
  std::vector<Candidate> candidates;  // context order, EMPTY last

  std::size_t size() const { return candidates.size(); }
  std::size_t empty_index() const { return candidates.size() - 1; }
  /// Index of the candidate whose normalized text equals `answer`'s.
  std::optional<std::size_t> find(std::string_view answer) const;
};

/// One candidate per distinct object of a non-event fact whose subject and
/// object both occur in the context, then EMPTY.
CandidateSet extract_candidates(const QARecord& record, const FactIndex& index);

/// Layout of the policy. F = 2w + 4 per candidate, state width w + 2, where w
/// is the fused width.
struct PolicyDims {
  std::size_t vocab = 1;
  std::size_t d = 32;
  std::size_t hidden = 64;
  FusionMode fusion = FusionMode::add;

  std::size_t width() const { return fused_width(fusion, d); }
  std::size_t features() const { return 2 * width() + kStaticFeatures; }
  std::size_t state() const { return width() + kStateFeatures; }

  static constexpr std::size_t kStaticFeatures = 4;  // overlap, gap, presence, density
  static constexpr std::size_t kStateFeatures = 2;   // q-interval presence, length
  friend bool operator==(const PolicyDims&, const PolicyDims&) = default;
};

struct PolicyParams {
  PolicyDims dims;
  EmbeddingTables tables;
  Matrix w1;  // hidden x F
  Vector b1;  // hidden
  Vector w2;  // hidden
  Vector b2;  // 1
  Vector wv;  // state
  Vector bv;  // 1

  static PolicyParams zeros(const PolicyDims& dims);

  /// Visits every tensor in checkpoint order as (name, flat row-major data).
  template <class Fn>
  void for_each_tensor(Fn&& fn) {
    fn(std::string_view("text_table"), std::span<double>(tables.text_table.data(), tables.text_table.size()));
    fn(std::string_view("time_table"), std::span<double>(tables.time_table.data(), tables.time_table.size()));
    fn(std::string_view("w1"), std::span<double>(w1.data(), w1.size()));
    fn(std::string_view("b1"), std::span<double>(b1.data(), b1.size()));
    fn(std::string_view("w2"), std::span<double>(w2.data(), w2.size()));
    fn(std::string_view("b2"), std::span<double>(b2.data(), b2.size()));
    fn(std::string_view("wv"), std::span<double>(wv.data(), wv.size()));
    fn(std::string_view("bv"), std::span<double>(bv.data(), bv.size()));
  }
  template <class Fn>
  void for_each_tensor(Fn&& fn) const {
    const_cast<PolicyParams*>(this)->for_each_tensor(
        [&](std::string_view name, std::span<double> t) {
          fn(name, std::span<const double>(t.data(), t.size()));
        });
  }

  std::size_t parameter_count() const;
  void set_zero();
  /// this += scale * other
  void add_scaled(const PolicyParams& other, double scale);
  bool all_finite() const;
  friend bool operator==(const PolicyParams& a, const PolicyParams& b);
};

/// Xavier-uniform weights, zero biases, zero time table.
PolicyParams init_params(std::mt19937_64& rng, const PolicyDims& dims);

/// Per-candidate inputs that do not depend on parameters.
struct CandidateSlot {
  std::size_t window_begin = 0;  // context token range around the mention
  std::size_t window_end = 0;    // empty for EMPTY
  std::array<double, PolicyDims::kStaticFeatures> static_features{};
};

/// A record reduced to what the policy reads: token ids and dilated mask over
/// question ++ context, plus candidate slots.
struct EncodedRecord {
  std::vector<int> token_ids;
  TemporalMask mask;
  std::size_t question_len = 0;
  std::vector<CandidateSlot> slots;
  std::array<double, PolicyDims::kStateFeatures> state_features{};
};

/// Blocks (c) and (d) of the feature vector for one candidate.
std::array<double, PolicyDims::kStaticFeatures> interval_features(
    const std::optional<Interval>& question, const Candidate& candidate,
    const TemporalMask& context_mask, const TokenRange& window);

/// `spec` should already be event-resolved (see resolve_time_spec).
EncodedRecord encode_record(const QARecord& record, const CandidateSet& candidates,
                            const QuestionTimeSpec& spec, const Vocabulary& vocab,
                            const FeatureConfig& config);

/// Feature vector of candidate `slot` read off a fused sequence.
Vector featurize(const EncodedRecord& record, std::size_t slot, const FusedSequence& fused);

/// Mean of all fused rows followed by the question-interval features.
Vector pooled_state(const EncodedRecord& record, const FusedSequence& fused);

FusedSequence fuse_record(const EncodedRecord& record, const PolicyParams& params);

struct PolicyOutput {
  Vector logits;
  Vector probs;
  double value = 0.0;
};

PolicyOutput forward(const PolicyParams& params, const std::vector<Vector>& features,
                     const Vector& pooled_state);

/// fuse_record + featurize + pooled_state + forward.
PolicyOutput forward(const PolicyParams& params, const EncodedRecord& record);

struct CrossEntropyLoss {
  std::size_t gold = 0;
};
struct PpoSurrogateLoss {
  std::size_t action = 0;
  double logprob_old = 0.0;
  double advantage = 0.0;
  double cliprange = 0.2;
};
struct ValueMseLoss {
  double target = 0.0;
};
using Loss = std::variant<CrossEntropyLoss, PpoSurrogateLoss, ValueMseLoss>;

double loss_value(const PolicyParams& params, const EncodedRecord& record, const Loss& loss);

/// Adds scale * dLoss/dParams into `grads` (same dims as `params`) and
/// returns the loss. The pooled state is an input to the value head, so
/// ValueMseLoss only reaches wv and bv.
double backward(const PolicyParams& params, const EncodedRecord& record, const Loss& loss,
                PolicyParams& grads, double scale = 1.0);

/// Max relative error between `analytic` and central differences over a
/// random subsample of at least `n_coords` coordinates, half of them drawn
/// from coordinates with nonzero analytic gradient.
double grad_check(const PolicyParams& params,
                  const std::function<double(const PolicyParams&)>& loss,
                  const PolicyParams& analytic, double epsilon, std::mt19937_64& rng,
                  std::size_t n_coords = 200);

double log_softmax_at(const Vector& logits, std::size_t index);
std::size_t argmax(const Vector& values);
std::size_t sample_index(const Vector& probs, std::mt19937_64& rng);

/// Binary checkpoint: header, dimension block, little-endian f64 tensors in
/// for_each_tensor order, then the feature window and vocabulary.
struct Checkpoint {
  PolicyParams params;
  FeatureConfig features;
  Vocabulary vocab;
};
void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::filesystem::path& path);
std::string serialize_checkpoint(const Checkpoint& ckpt);
Checkpoint deserialize_checkpoint(std::string_view bytes);

}  // namespace tsqa
