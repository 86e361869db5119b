#include "tsqa/policy_model.hpp"

#include <algorithm>
#include <bit>
#include <cctype>
#include <cmath>
#include <cstring>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>
#include <unordered_set>

#include "tsqa/error.hpp"
#include "tsqa/eval.hpp"
#include "tsqa/temporal_tagger.hpp"

namespace tsqa {
namespace {

std::string lower(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

bool word_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '\''; }

// First occurrence of `needle` in `text` not glued to neighbouring word characters.
std::optional<std::size_t> find_word(std::string_view text, std::string_view needle) {
  if (needle.empty()) return std::nullopt;
  for (std::size_t pos = text.find(needle); pos != std::string_view::npos;
       pos = text.find(needle, pos + 1)) {
    const bool left_ok = pos == 0 || !word_char(text[pos - 1]) || !word_char(needle.front());
    const std::size_t end = pos + needle.size();
    const bool right_ok = end == text.size() || !word_char(text[end]) || !word_char(needle.back());
    if (left_ok && right_ok) return pos;
  }
  return std::nullopt;
}

TokenRange char_to_tokens(const std::vector<Token>& toks, std::size_t begin, std::size_t end) {
  std::size_t a = 0;
  while (a < toks.size() && toks[a].char_end <= begin) ++a;
  std::size_t b = a;
  while (b < toks.size() && toks[b].char_start < end) ++b;
  return {a, std::max(b, a)};
}

std::optional<Interval> question_interval(const QuestionTimeSpec& spec) {
  return spec.interval;
}

Vector row_mean(const Matrix& m, std::size_t begin, std::size_t end) {
  Vector out = Vector::Zero(m.cols());
  if (end <= begin) return out;
  for (std::size_t i = begin; i < end; ++i) out += m.row(static_cast<Eigen::Index>(i)).transpose();
  return out / static_cast<double>(end - begin);
}

void check_dims(const PolicyParams& p, const char* what) {
  const auto& d = p.dims;
  const auto w = static_cast<Eigen::Index>(d.width());
  bool ok = p.tables.text_table.rows() == static_cast<Eigen::Index>(d.vocab) &&
            p.tables.text_table.cols() == static_cast<Eigen::Index>(d.d) &&
            p.tables.time_table.rows() == 2 && p.tables.time_table.cols() == static_cast<Eigen::Index>(d.d) &&
            p.w1.rows() == static_cast<Eigen::Index>(d.hidden) &&
            p.w1.cols() == static_cast<Eigen::Index>(d.features()) &&
            p.b1.size() == static_cast<Eigen::Index>(d.hidden) &&
            p.w2.size() == static_cast<Eigen::Index>(d.hidden) && p.b2.size() == 1 &&
            p.wv.size() == static_cast<Eigen::Index>(d.state()) && p.bv.size() == 1;
  (void)w;
  if (!ok) throw ShapeError(std::string(what) + ": parameter shapes do not match dims");
}

struct Activations {
  std::vector<Vector> features;
  Vector pooled;
  std::vector<Vector> hidden;  // tanh outputs
  PolicyOutput out;
};

Activations run(const PolicyParams& params, const EncodedRecord& record, const FusedSequence& fused) {
  Activations a;
  for (std::size_t c = 0; c < record.slots.size(); ++c) a.features.push_back(featurize(record, c, fused));
  a.pooled = pooled_state(record, fused);
  const std::size_t n = a.features.size();
  a.out.logits.resize(static_cast<Eigen::Index>(n));
  for (std::size_t c = 0; c < n; ++c) {
    Vector h = (params.w1 * a.features[c] + params.b1).array().tanh().matrix();
    a.out.logits[static_cast<Eigen::Index>(c)] = params.w2.dot(h) + params.b2[0];
    a.hidden.push_back(std::move(h));
  }
  const double mx = n ? a.out.logits.maxCoeff() : 0.0;
  a.out.probs = (a.out.logits.array() - mx).exp().matrix();
  a.out.probs /= a.out.probs.sum();
  a.out.value = params.wv.dot(a.pooled) + params.bv[0];
  return a;
}

void check_loss(const Loss& loss, std::size_t n) {
  std::visit(
      [&](const auto& l) {
        using T = std::decay_t<decltype(l)>;
        if constexpr (std::is_same_v<T, CrossEntropyLoss>) {
          if (l.gold >= n) throw Error("cross-entropy gold index out of range");
        } else if constexpr (std::is_same_v<T, PpoSurrogateLoss>) {
          if (l.action >= n) throw Error("ppo action index out of range");
          if (!(l.cliprange > 0)) throw Error("ppo cliprange must be > 0");
          if (!std::isfinite(l.logprob_old) || !std::isfinite(l.advantage))
            throw Error("ppo loss inputs must be finite");
        } else {
          if (!std::isfinite(l.target)) throw Error("value target must be finite");
        }
      },
      loss);
}

// Loss value plus dL/dlogits and dL/dvalue.
double loss_and_seeds(const PolicyOutput& out, const Loss& loss, Vector& g_logits, double& g_value) {
  const auto n = out.logits.size();
  g_logits = Vector::Zero(n);
  g_value = 0.0;
  if (const auto* ce = std::get_if<CrossEntropyLoss>(&loss)) {
    g_logits = out.probs;
    g_logits[static_cast<Eigen::Index>(ce->gold)] -= 1.0;
    return -log_softmax_at(out.logits, ce->gold);
  }
  if (const auto* ppo = std::get_if<PpoSurrogateLoss>(&loss)) {
    const double logp = log_softmax_at(out.logits, ppo->action);
    const double ratio = std::exp(logp - ppo->logprob_old);
    const double clipped = std::clamp(ratio, 1.0 - ppo->cliprange, 1.0 + ppo->cliprange);
    const double unclipped_obj = ratio * ppo->advantage;
    const double clipped_obj = clipped * ppo->advantage;
    if (unclipped_obj <= clipped_obj) {
      // d(-rho A)/dlogits = -A rho (onehot - p)
      g_logits = ppo->advantage * ratio * out.probs;
      g_logits[static_cast<Eigen::Index>(ppo->action)] -= ppo->advantage * ratio;
      return -unclipped_obj;
    }
    return -clipped_obj;
  }
  const auto& v = std::get<ValueMseLoss>(loss);
  const double diff = out.value - v.target;
  g_value = 2.0 * diff;
  return diff * diff;
}

void scatter_row(PolicyParams& grads, const EncodedRecord& record, std::size_t row,
                 const Eigen::Ref<const Vector>& g, double scale) {
  const auto d = static_cast<Eigen::Index>(grads.dims.d);
  const int id = record.token_ids[row];
  const int t = record.mask.bits[row] ? 1 : 0;
  switch (grads.dims.fusion) {
    case FusionMode::add:
      grads.tables.text_table.row(id) += scale * g.transpose();
      grads.tables.time_table.row(t) += scale * g.transpose();
      break;
    case FusionMode::concat:
      grads.tables.text_table.row(id) += scale * g.head(d).transpose();
      grads.tables.time_table.row(t) += scale * g.tail(d).transpose();
      break;
    case FusionMode::off:
      grads.tables.text_table.row(id) += scale * g.transpose();
      break;
  }
}

// --- little-endian byte stream helpers for the checkpoint format

constexpr char kMagic[8] = {'T', 'S', 'Q', 'A', 'C', 'K', 'P', 'T'};
constexpr std::uint32_t kVersion = 1;

class Writer {
 public:
  void u32(std::uint32_t v) { put(v, 4); }
  void u64(std::uint64_t v) { put(v, 8); }
  void f64(double v) { put(std::bit_cast<std::uint64_t>(v), 8); }
  void bytes(std::string_view s) { out_.append(s); }
  std::string take() { return std::move(out_); }

 private:
  void put(std::uint64_t v, int n) {
    for (int i = 0; i < n; ++i) out_.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
  }
  std::string out_;
};

class Reader {
 public:
  explicit Reader(std::string_view in) : in_(in) {}
  std::uint32_t u32() { return static_cast<std::uint32_t>(get(4)); }
  std::uint64_t u64() { return get(8); }
  double f64() { return std::bit_cast<double>(get(8)); }
  std::string_view bytes(std::size_t n) {
    need(n);
    auto s = in_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  bool done() const { return pos_ == in_.size(); }

 private:
  void need(std::size_t n) const {
    if (in_.size() - pos_ < n) throw Error("truncated checkpoint");
  }
  std::uint64_t get(int n) {
    need(static_cast<std::size_t>(n));
    std::uint64_t v = 0;
    for (int i = 0; i < n; ++i)
      v |= static_cast<std::uint64_t>(static_cast<unsigned char>(in_[pos_ + i])) << (8 * i);
    pos_ += static_cast<std::size_t>(n);
    return v;
  }
  std::string_view in_;
  std::size_t pos_ = 0;
};

FusionMode fusion_from_code(std::uint32_t code) {
  if (code > 2) throw Error("bad fusion mode in checkpoint");
  return static_cast<FusionMode>(code);
}

}  // namespace

// ---------------------------------------------------------------------------
// Vocabulary

Vocabulary Vocabulary::build(const std::vector<QARecord>& records, std::size_t min_count) {
  std::map<std::string, std::size_t> counts;
  for (const auto& r : records)
    for (auto text : {std::string_view(r.question), std::string_view(r.context)})
      for (const auto& t : tokenize(text)) ++counts[lower(t.text)];
  std::vector<std::string> words{"<unk>"};
  for (const auto& [w, c] : counts)
    if (c >= min_count && w != "<unk>") words.push_back(w);
  return from_words(std::move(words));
}

Vocabulary Vocabulary::from_words(std::vector<std::string> words) {
  if (words.empty() || words.front() != "<unk>") throw Error("vocabulary must start with <unk>");
  Vocabulary v;
  v.words_ = std::move(words);
  for (std::size_t i = 0; i < v.words_.size(); ++i)
    if (!v.ids_.emplace(v.words_[i], static_cast<int>(i)).second && i != 0)
      throw Error("duplicate vocabulary word '" + v.words_[i] + "'");
  return v;
}

int Vocabulary::id(std::string_view token) const {
  auto it = ids_.find(lower(token));
  return it == ids_.end() || it->second == 0 ? kUnk : it->second;
}

// ---------------------------------------------------------------------------
// Candidates

std::optional<std::size_t> CandidateSet::find(std::string_view answer) const {
  const std::string norm = normalize_answer(answer);
  for (std::size_t i = 0; i < candidates.size(); ++i)
    if (normalize_answer(candidates[i].text) == norm) return i;
  return std::nullopt;
}

CandidateSet extract_candidates(const QARecord& record, const FactIndex& index) {
  const auto toks = tokenize(record.context);
  struct Found {
    std::size_t pos;
    Candidate cand;
  };
  std::vector<Found> found;
  std::unordered_set<std::string> seen;
  std::unordered_map<std::string, bool> subject_present;
  for (std::size_t id = 0; id < index.size(); ++id) {
    const auto& f = index.fact(id);
    if (f.is_event()) continue;
    auto [it, fresh] = subject_present.try_emplace(f.subject, false);
    if (fresh) it->second = find_word(record.context, f.subject).has_value();
    if (!it->second) continue;
    const std::string norm = normalize_answer(f.object);
    if (norm.empty() || seen.count(norm)) continue;
    auto pos = find_word(record.context, f.object);
    if (!pos) continue;
    seen.insert(norm);
    Candidate c;
    c.text = f.object;
    c.mention = char_to_tokens(toks, *pos, *pos + f.object.size());
    c.fact_interval = f.effective();
    found.push_back({*pos, std::move(c)});
  }
  std::stable_sort(found.begin(), found.end(), [](const Found& a, const Found& b) { return a.pos < b.pos; });
  CandidateSet out;
  for (auto& f : found) out.candidates.push_back(std::move(f.cand));
  out.candidates.push_back(Candidate{});
  return out;
}

// ---------------------------------------------------------------------------
// Parameters

PolicyParams PolicyParams::zeros(const PolicyDims& dims) {
  if (dims.vocab == 0 || dims.d == 0 || dims.hidden == 0) throw ShapeError("policy dims must be positive");
  PolicyParams p;
  p.dims = dims;
  const auto d = static_cast<Eigen::Index>(dims.d), h = static_cast<Eigen::Index>(dims.hidden);
  p.tables.text_table = Matrix::Zero(static_cast<Eigen::Index>(dims.vocab), d);
  p.tables.time_table = Matrix::Zero(2, d);
  p.w1 = Matrix::Zero(h, static_cast<Eigen::Index>(dims.features()));
  p.b1 = Vector::Zero(h);
  p.w2 = Vector::Zero(h);
  p.b2 = Vector::Zero(1);
  p.wv = Vector::Zero(static_cast<Eigen::Index>(dims.state()));
  p.bv = Vector::Zero(1);
  return p;
}

std::size_t PolicyParams::parameter_count() const {
  std::size_t n = 0;
  for_each_tensor([&](std::string_view, std::span<const double> t) { n += t.size(); });
  return n;
}

void PolicyParams::set_zero() {
  for_each_tensor([](std::string_view, std::span<double> t) { std::fill(t.begin(), t.end(), 0.0); });
}

void PolicyParams::add_scaled(const PolicyParams& other, double scale) {
  if (!(dims == other.dims)) throw ShapeError("add_scaled: dims differ");
  std::vector<std::span<const double>> src;
  other.for_each_tensor([&](std::string_view, std::span<const double> t) { src.push_back(t); });
  std::size_t k = 0;
  for_each_tensor([&](std::string_view, std::span<double> t) {
    const auto s = src[k++];
    for (std::size_t i = 0; i < t.size(); ++i) t[i] += scale * s[i];
  });
}

bool PolicyParams::all_finite() const {
  bool ok = true;
  for_each_tensor([&](std::string_view, std::span<const double> t) {
    for (double x : t) ok = ok && std::isfinite(x);
  });
  return ok;
}

bool operator==(const PolicyParams& a, const PolicyParams& b) {
  if (!(a.dims == b.dims)) return false;
  std::vector<std::span<const double>> ta, tb;
  a.for_each_tensor([&](std::string_view, std::span<const double> t) { ta.push_back(t); });
  b.for_each_tensor([&](std::string_view, std::span<const double> t) { tb.push_back(t); });
  for (std::size_t k = 0; k < ta.size(); ++k)
    if (ta[k].size() != tb[k].size() ||
        std::memcmp(ta[k].data(), tb[k].data(), ta[k].size() * sizeof(double)) != 0)
      return false;
  return true;
}

PolicyParams init_params(std::mt19937_64& rng, const PolicyDims& dims) {
  PolicyParams p = PolicyParams::zeros(dims);
  auto xavier = [&](double* data, std::size_t n, std::size_t fan_in, std::size_t fan_out) {
    const double a = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    std::uniform_real_distribution<double> u(-a, a);
    for (std::size_t i = 0; i < n; ++i) data[i] = u(rng);
  };
  xavier(p.tables.text_table.data(), p.tables.text_table.size(), dims.vocab, dims.d);
  xavier(p.w1.data(), p.w1.size(), dims.features(), dims.hidden);
  xavier(p.w2.data(), p.w2.size(), dims.hidden, 1);
  xavier(p.wv.data(), p.wv.size(), dims.state(), 1);
  return p;
}

// ---------------------------------------------------------------------------
// Encoding and features

std::array<double, PolicyDims::kStaticFeatures> interval_features(
    const std::optional<Interval>& question, const Candidate& candidate,
    const TemporalMask& context_mask, const TokenRange& window) {
  std::array<double, PolicyDims::kStaticFeatures> f{};
  if (candidate.is_empty()) return f;
  if (question && candidate.fact_interval) {
    const Interval q = *question, c = *candidate.fact_interval;
    f[0] = static_cast<double>(overlap_months(q, c)) / q.length();
    f[1] = std::clamp(signed_gap_months(q, c), -120, 120) / 120.0;
    f[2] = 1.0;
  }
  const std::size_t lo = std::min(window.first, context_mask.size());
  const std::size_t hi = std::min(window.second, context_mask.size());
  if (hi > lo) {
    std::size_t on = 0;
    for (std::size_t i = lo; i < hi; ++i) on += context_mask.bits[i];
    f[3] = static_cast<double>(on) / static_cast<double>(hi - lo);
  }
  return f;
}

EncodedRecord encode_record(const QARecord& record, const CandidateSet& candidates,
                            const QuestionTimeSpec& spec, const Vocabulary& vocab,
                            const FeatureConfig& config) {
  const auto qt = tokenize(record.question);
  const auto ct = tokenize(record.context);
  const TemporalMask qm = dilate(build_mask(qt.size(), tag(qt)), config.window);
  const TemporalMask cm = dilate(build_mask(ct.size(), tag(ct)), config.window);

  EncodedRecord e;
  e.question_len = qt.size();
  for (const auto& t : qt) e.token_ids.push_back(vocab.id(t.text));
  for (const auto& t : ct) e.token_ids.push_back(vocab.id(t.text));
  e.mask = concat_masks(qm, cm);

  const auto q_iv = question_interval(spec);
  for (const auto& c : candidates.candidates) {
    CandidateSlot slot;
    TokenRange window{0, 0};
    if (!c.is_empty() && c.mention) {
      const std::size_t b = c.mention->first > config.window ? c.mention->first - config.window : 0;
      const std::size_t en = std::min(ct.size(), c.mention->second + config.window);
      window = {b, en};
      slot.window_begin = e.question_len + b;
      slot.window_end = e.question_len + en;
    }
    slot.static_features = interval_features(q_iv, c, cm, window);
    e.slots.push_back(slot);
  }
  e.state_features[0] = q_iv ? 1.0 : 0.0;
  e.state_features[1] = std::min<double>(static_cast<double>(e.token_ids.size()), 120.0) / 120.0;
  return e;
}

Vector featurize(const EncodedRecord& record, std::size_t slot, const FusedSequence& fused) {
  if (slot >= record.slots.size()) throw Error("featurize: slot out of range");
  const auto w = fused.vectors.cols();
  const auto& s = record.slots[slot];
  Vector f(2 * w + static_cast<Eigen::Index>(PolicyDims::kStaticFeatures));
  f.head(w) = row_mean(fused.vectors, 0, record.question_len);
  f.segment(w, w) = row_mean(fused.vectors, s.window_begin, s.window_end);
  for (std::size_t k = 0; k < PolicyDims::kStaticFeatures; ++k)
    f[2 * w + static_cast<Eigen::Index>(k)] = s.static_features[k];
  return f;
}

Vector pooled_state(const EncodedRecord& record, const FusedSequence& fused) {
  const auto w = fused.vectors.cols();
  Vector s(w + static_cast<Eigen::Index>(PolicyDims::kStateFeatures));
  s.head(w) = row_mean(fused.vectors, 0, static_cast<std::size_t>(fused.vectors.rows()));
  for (std::size_t k = 0; k < PolicyDims::kStateFeatures; ++k)
    s[w + static_cast<Eigen::Index>(k)] = record.state_features[k];
  return s;
}

FusedSequence fuse_record(const EncodedRecord& record, const PolicyParams& params) {
  return fuse(record.token_ids, record.mask, params.tables, record.question_len, params.dims.fusion);
}

PolicyOutput forward(const PolicyParams& params, const std::vector<Vector>& features,
                     const Vector& pooled) {
  check_dims(params, "forward");
  const auto F = static_cast<Eigen::Index>(params.dims.features());
  PolicyOutput out;
  out.logits.resize(static_cast<Eigen::Index>(features.size()));
  for (std::size_t c = 0; c < features.size(); ++c) {
    if (features[c].size() != F)
      throw ShapeError("forward: feature width " + std::to_string(features[c].size()) + " != " +
                       std::to_string(F));
    const Vector h = (params.w1 * features[c] + params.b1).array().tanh().matrix();
    out.logits[static_cast<Eigen::Index>(c)] = params.w2.dot(h) + params.b2[0];
  }
  if (pooled.size() != params.wv.size()) throw ShapeError("forward: pooled state width mismatch");
  const double mx = features.empty() ? 0.0 : out.logits.maxCoeff();
  out.probs = (out.logits.array() - mx).exp().matrix();
  out.probs /= out.probs.sum();
  out.value = params.wv.dot(pooled) + params.bv[0];
  return out;
}

PolicyOutput forward(const PolicyParams& params, const EncodedRecord& record) {
  check_dims(params, "forward");
  return run(params, record, fuse_record(record, params)).out;
}

double loss_value(const PolicyParams& params, const EncodedRecord& record, const Loss& loss) {
  check_loss(loss, record.slots.size());
  const auto out = forward(params, record);
  Vector g;
  double gv;
  return loss_and_seeds(out, loss, g, gv);
}

double backward(const PolicyParams& params, const EncodedRecord& record, const Loss& loss,
                PolicyParams& grads, double scale) {
  check_dims(params, "backward");
  if (!(grads.dims == params.dims)) throw ShapeError("backward: gradient dims differ");
  check_loss(loss, record.slots.size());
  const FusedSequence fused = fuse_record(record, params);
  const Activations a = run(params, record, fused);
  Vector g_logits;
  double g_value = 0.0;
  const double value = loss_and_seeds(a.out, loss, g_logits, g_value);

  if (g_value != 0.0) {
    grads.wv += scale * g_value * a.pooled;
    grads.bv[0] += scale * g_value;
  }
  if (g_logits.isZero(0.0)) return value;

  const auto w = static_cast<Eigen::Index>(params.dims.width());
  Vector g_question = Vector::Zero(w);
  for (std::size_t c = 0; c < a.features.size(); ++c) {
    const double g = g_logits[static_cast<Eigen::Index>(c)];
    if (g == 0.0) continue;
    const Vector& h = a.hidden[c];
    grads.w2 += scale * g * h;
    grads.b2[0] += scale * g;
    const Vector dz = (g * params.w2.array() * (1.0 - h.array().square())).matrix();
    grads.w1 += scale * dz * a.features[c].transpose();
    grads.b1 += scale * dz;
    const Vector df = params.w1.transpose() * dz;
    g_question += df.head(w);
    const auto& s = record.slots[c];
    if (s.window_end > s.window_begin) {
      const Vector per_row = df.segment(w, w) / static_cast<double>(s.window_end - s.window_begin);
      for (std::size_t r = s.window_begin; r < s.window_end; ++r) scatter_row(grads, record, r, per_row, scale);
    }
  }
  if (record.question_len) {
    const Vector per_row = g_question / static_cast<double>(record.question_len);
    for (std::size_t r = 0; r < record.question_len; ++r) scatter_row(grads, record, r, per_row, scale);
  }
  return value;
}

// ---------------------------------------------------------------------------
// Gradient check and sampling helpers

double grad_check(const PolicyParams& params, const std::function<double(const PolicyParams&)>& loss,
                  const PolicyParams& analytic, double epsilon, std::mt19937_64& rng,
                  std::size_t n_coords) {
  if (!(analytic.dims == params.dims)) throw ShapeError("grad_check: gradient dims differ");
  std::vector<double> flat_grad;
  analytic.for_each_tensor([&](std::string_view, std::span<const double> t) {
    flat_grad.insert(flat_grad.end(), t.begin(), t.end());
  });
  const std::size_t total = flat_grad.size();
  std::vector<std::size_t> nonzero, coords;
  for (std::size_t i = 0; i < total; ++i)
    if (flat_grad[i] != 0.0) nonzero.push_back(i);
  if (total <= n_coords) {
    coords.resize(total);
    std::iota(coords.begin(), coords.end(), 0);
  } else {
    std::uniform_int_distribution<std::size_t> any(0, total - 1);
    for (std::size_t k = 0; k < n_coords; ++k) {
      if (k % 2 == 0 && !nonzero.empty()) {
        std::uniform_int_distribution<std::size_t> pick(0, nonzero.size() - 1);
        coords.push_back(nonzero[pick(rng)]);
      } else {
        coords.push_back(any(rng));
      }
    }
  }

  PolicyParams probe = params;
  std::vector<double*> flat;
  probe.for_each_tensor([&](std::string_view, std::span<double> t) {
    for (double& x : t) flat.push_back(&x);
  });
  double worst = 0.0;
  for (auto i : coords) {
    const double orig = *flat[i];
    *flat[i] = orig + epsilon;
    const double up = loss(probe);
    *flat[i] = orig - epsilon;
    const double down = loss(probe);
    *flat[i] = orig;
    const double numeric = (up - down) / (2.0 * epsilon);
    const double a = flat_grad[i];
    // Floor keeps coordinates with (near-)zero gradient from dividing noise by noise.
    const double denom = std::max(std::abs(a) + std::abs(numeric), 1e-6);
    worst = std::max(worst, std::abs(a - numeric) / denom);
  }
  return worst;
}

double log_softmax_at(const Vector& logits, std::size_t index) {
  const double mx = logits.maxCoeff();
  const double lse = mx + std::log((logits.array() - mx).exp().sum());
  return logits[static_cast<Eigen::Index>(index)] - lse;
}

std::size_t argmax(const Vector& values) {
  Eigen::Index best = 0;
  for (Eigen::Index i = 1; i < values.size(); ++i)
    if (values[i] > values[best]) best = i;
  return static_cast<std::size_t>(best);
}

std::size_t sample_index(const Vector& probs, std::mt19937_64& rng) {
  const double u = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
  double acc = 0.0;
  for (Eigen::Index i = 0; i < probs.size(); ++i) {
    acc += probs[i];
    if (u < acc) return static_cast<std::size_t>(i);
  }
  return static_cast<std::size_t>(probs.size() - 1);
}

// ---------------------------------------------------------------------------
// Checkpoints

std::string serialize_checkpoint(const Checkpoint& ckpt) {
  const auto& p = ckpt.params;
  check_dims(p, "serialize_checkpoint");
  Writer w;
  w.bytes(std::string_view(kMagic, sizeof(kMagic)));
  w.u32(kVersion);
  w.u64(p.dims.vocab);
  w.u64(p.dims.d);
  w.u64(p.dims.hidden);
  w.u32(static_cast<std::uint32_t>(p.dims.fusion));
  p.for_each_tensor([&](std::string_view name, std::span<const double> t) {
    w.u32(static_cast<std::uint32_t>(name.size()));
    w.bytes(name);
    w.u64(t.size());
    for (double x : t) w.f64(x);
  });
  w.u64(ckpt.features.d);
  w.u64(ckpt.features.window);
  w.u64(ckpt.features.hidden);
  w.u32(static_cast<std::uint32_t>(ckpt.features.fusion));
  w.u64(ckpt.vocab.size());
  for (const auto& word : ckpt.vocab.words()) {
    w.u32(static_cast<std::uint32_t>(word.size()));
    w.bytes(word);
  }
  return w.take();
}

Checkpoint deserialize_checkpoint(std::string_view bytes) {
  Reader r(bytes);
  if (r.bytes(sizeof(kMagic)) != std::string_view(kMagic, sizeof(kMagic)))
    throw Error("not a checkpoint file");
  if (const auto v = r.u32(); v != kVersion) throw Error("unsupported checkpoint version " + std::to_string(v));
  PolicyDims dims;
  dims.vocab = r.u64();
  dims.d = r.u64();
  dims.hidden = r.u64();
  dims.fusion = fusion_from_code(r.u32());
  if (dims.vocab > (1u << 24) || dims.d > 4096 || dims.hidden > 4096) throw Error("implausible checkpoint dims");
  Checkpoint ckpt{PolicyParams::zeros(dims), {}, Vocabulary::from_words({"<unk>"})};
  ckpt.params.for_each_tensor([&](std::string_view name, std::span<double> t) {
    const auto len = r.u32();
    if (r.bytes(len) != name) throw Error("checkpoint tensor order mismatch at " + std::string(name));
    if (r.u64() != t.size()) throw Error("checkpoint tensor size mismatch for " + std::string(name));
    for (double& x : t) x = r.f64();
  });
  ckpt.features.d = r.u64();
  ckpt.features.window = r.u64();
  ckpt.features.hidden = r.u64();
  ckpt.features.fusion = fusion_from_code(r.u32());
  const auto n = r.u64();
  if (n != dims.vocab) throw Error("checkpoint vocabulary size mismatch");
  std::vector<std::string> words;
  words.reserve(n);
  for (std::uint64_t i = 0; i < n; ++i) {
    const auto len = r.u32();
    words.emplace_back(r.bytes(len));
  }
  ckpt.vocab = Vocabulary::from_words(std::move(words));
  if (!r.done()) throw Error("trailing bytes in checkpoint");
  return ckpt;
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  write_file_atomic(path, serialize_checkpoint(ckpt));
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open checkpoint " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return deserialize_checkpoint(buf.str());
}

}  // namespace tsqa
