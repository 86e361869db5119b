#include "tsqa/fact_store.hpp"

#include <algorithm>
#include <cctype>
#include <numeric>
#include <set>
#include <tuple>
#include <unordered_set>

#include "tsqa/error.hpp"
#include "tsqa/eval.hpp"

namespace tsqa {
namespace {

std::string pair_key(std::string_view subject, std::string_view relation) {
  std::string key(subject);
  key += '\x1f';
  key += relation;
  return key;
}

std::string lower(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

std::string describe(const TimeFact& f) {
  return "(" + f.subject + ", " + f.relation + ", " + f.object + ")";
}

// Keeps the first occurrence of each normalized string, dropping the gold.
std::vector<std::string> distinct_objects(const FactIndex& index,
                                          const std::vector<std::size_t>& ids,
                                          std::string_view gold) {
  const std::string gold_norm = normalize_answer(gold);
  std::unordered_set<std::string> seen;
  std::vector<std::string> out;
  for (auto id : ids) {
    const auto& obj = index.fact(id).object;
    const std::string norm = normalize_answer(obj);
    if (norm == gold_norm) continue;
    if (seen.insert(norm).second) out.push_back(obj);
  }
  return out;
}

}  // namespace

void validate(const TimeFact& fact) {
  if (fact.subject.empty()) throw ValidationError("subject", "empty in fact " + describe(fact));
  if (fact.relation.empty()) throw ValidationError("relation", "empty in fact " + describe(fact));
  if (fact.object.empty()) throw ValidationError("object", "empty in fact " + describe(fact));
  for (auto m : {fact.start, fact.end})
    if (m && (*m < kMinMonth || *m > kMaxMonth))
      throw ValidationError("interval", "month out of range in fact " + describe(fact));
  if (fact.start && fact.end && *fact.start > *fact.end)
    throw ValidationError("interval", "start after end in fact " + describe(fact));
}

FactIndex bulk_load(const std::vector<TimeFact>& facts) {
  FactIndex index;
  std::set<std::tuple<std::string, std::string, std::string, Month, Month, int>> seen;
  for (const auto& f : facts) {
    validate(f);
    const int open = (f.start ? 0 : 1) | (f.end ? 0 : 2);
    if (!seen.emplace(f.subject, f.relation, f.object, f.start.value_or(0), f.end.value_or(0), open)
             .second)
      continue;
    index.facts_.push_back(f);
  }

  const auto& stored = index.facts_;
  auto by_time = [&](std::size_t a, std::size_t b) {
    const auto ia = stored[a].effective(), ib = stored[b].effective();
    return std::tie(ia.start, ia.end, a) < std::tie(ib.start, ib.end, b);
  };

  for (std::size_t id = 0; id < stored.size(); ++id) {
    index.by_pair_[pair_key(stored[id].subject, stored[id].relation)].push_back(id);
    if (stored[id].is_event()) index.events_.emplace(lower(stored[id].subject), id);
  }
  for (auto& [key, ids] : index.by_pair_) std::sort(ids.begin(), ids.end(), by_time);

  std::vector<std::size_t> order(stored.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), by_time);
  index.tree_.resize(order.size());
  for (std::size_t k = 0; k < order.size(); ++k) index.tree_[k] = {order[k], 0};
  index.build_tree(0, order.size());
  return index;
}

void FactIndex::build_tree(std::size_t lo, std::size_t hi) {
  if (lo >= hi) return;
  const std::size_t mid = lo + (hi - lo) / 2;
  build_tree(lo, mid);
  build_tree(mid + 1, hi);
  Month m = facts_[tree_[mid].id].effective().end;
  if (lo < mid) m = std::max(m, tree_[lo + (mid - lo) / 2].max_end);
  if (mid + 1 < hi) m = std::max(m, tree_[mid + 1 + (hi - mid - 1) / 2].max_end);
  tree_[mid].max_end = m;
}

void FactIndex::query_tree(std::size_t lo, std::size_t hi, const Interval& q,
                           std::vector<std::size_t>& out) const {
  if (lo >= hi) return;
  const std::size_t mid = lo + (hi - lo) / 2;
  if (tree_[mid].max_end < q.start) return;
  query_tree(lo, mid, q, out);
  const Interval iv = facts_[tree_[mid].id].effective();
  if (intersects(iv, q)) out.push_back(tree_[mid].id);
  if (iv.start <= q.end) query_tree(mid + 1, hi, q, out);
}

const std::vector<std::size_t>& FactIndex::pair(std::string_view subject,
                                                std::string_view relation) const {
  static const std::vector<std::size_t> kNone;
  auto it = by_pair_.find(pair_key(subject, relation));
  return it == by_pair_.end() ? kNone : it->second;
}

std::vector<std::size_t> FactIndex::overlapping(const Interval& q) const {
  std::vector<std::size_t> out;
  query_tree(0, tree_.size(), q, out);
  std::sort(out.begin(), out.end());
  return out;
}

std::optional<Interval> FactIndex::event_interval(std::string_view name) const {
  auto it = events_.find(lower(name));
  if (it == events_.end()) return std::nullopt;
  return facts_[it->second].effective();
}

QuestionTimeSpec resolve_time_spec(const QuestionTimeSpec& spec, const FactIndex& index) {
  if (spec.interval || !spec.event_name) return spec;
  auto iv = index.event_interval(*spec.event_name);
  if (!iv) throw ResolutionError("unknown event: " + *spec.event_name);
  QuestionTimeSpec out = spec;
  out.interval = iv;
  return out;
}

std::optional<std::size_t> resolve_fact(const QuestionTimeSpec& raw, std::string_view subject,
                                        std::string_view relation, const FactIndex& index) {
  if (raw.kind == TimeSpecKind::none) return std::nullopt;
  const QuestionTimeSpec spec = resolve_time_spec(raw, index);
  const auto& ids = index.pair(subject, relation);

  std::optional<std::size_t> best;
  auto better = [&](std::size_t id, auto key) {
    if (!best || key(id) < key(*best)) best = id;
  };

  switch (spec.kind) {
    case TimeSpecKind::point:
    case TimeSpecKind::range:
    case TimeSpecKind::during_event: {
      if (!spec.interval) return std::nullopt;
      const Interval q = *spec.interval;
      for (auto id : ids) {
        const Interval iv = index.fact(id).effective();
        if (!intersects(iv, q)) continue;
        better(id, [&](std::size_t k) {
          const Interval v = index.fact(k).effective();
          return std::make_tuple(-overlap_months(v, q), v.start, k);
        });
      }
      break;
    }
    case TimeSpecKind::first:
      for (auto id : ids)
        better(id, [&](std::size_t k) {
          const Interval v = index.fact(k).effective();
          return std::make_tuple(v.start, v.end, k);
        });
      break;
    case TimeSpecKind::last:
      for (auto id : ids)
        better(id, [&](std::size_t k) {
          const Interval v = index.fact(k).effective();
          return std::make_tuple(-v.start, -v.end, k);
        });
      break;
    case TimeSpecKind::before: {
      if (!spec.interval) return std::nullopt;
      for (auto id : ids) {
        const Interval iv = index.fact(id).effective();
        if (iv.end > spec.interval->start) continue;
        better(id, [&](std::size_t k) {
          const Interval v = index.fact(k).effective();
          return std::make_tuple(-v.end, -v.start, k);
        });
      }
      break;
    }
    case TimeSpecKind::after: {
      if (!spec.interval) return std::nullopt;
      for (auto id : ids) {
        const Interval iv = index.fact(id).effective();
        if (iv.start < spec.interval->end) continue;
        better(id, [&](std::size_t k) {
          const Interval v = index.fact(k).effective();
          return std::make_tuple(v.start, v.end, k);
        });
      }
      break;
    }
    case TimeSpecKind::none:
      break;
  }
  return best;
}

std::string resolve_question(const QuestionTimeSpec& spec, std::string_view subject,
                             std::string_view relation, const FactIndex& index) {
  auto id = resolve_fact(spec, subject, relation, index);
  return id ? index.fact(*id).object : std::string();
}

std::vector<std::string> mine_remote(std::string_view subject, std::string_view relation,
                                     std::string_view gold, const Interval& q,
                                     const FactIndex& index) {
  std::vector<std::size_t> ids;
  for (auto id : index.pair(subject, relation)) {
    const auto& f = index.fact(id);
    if (!f.is_event() && !intersects(f.effective(), q)) ids.push_back(id);
  }
  return distinct_objects(index, ids, gold);
}

std::vector<std::string> mine_proximal(std::string_view subject, std::string_view relation,
                                       std::string_view gold, const Interval& q,
                                       const FactIndex& index) {
  std::vector<std::size_t> ids;
  for (auto id : index.overlapping(q)) {
    const auto& f = index.fact(id);
    if (f.is_event() || (f.subject == subject && f.relation == relation)) continue;
    ids.push_back(id);
  }
  std::stable_sort(ids.begin(), ids.end(), [&](std::size_t a, std::size_t b) {
    return index.fact(a).effective().start < index.fact(b).effective().start;
  });
  return distinct_objects(index, ids, gold);
}

NegativeSet sample_negatives(const std::vector<std::string>& remote,
                             const std::vector<std::string>& proximal, std::size_t k_per_side,
                             std::mt19937_64& rng) {
  const std::size_t n = std::min({k_per_side, remote.size(), proximal.size()});
  auto draw = [&](std::vector<std::string> pool) {
    for (std::size_t i = 0; i < n; ++i) {
      std::uniform_int_distribution<std::size_t> pick(i, pool.size() - 1);
      std::swap(pool[i], pool[pick(rng)]);
    }
    pool.resize(n);
    return pool;
  };
  NegativeSet out;
  out.remote = draw(remote);
  out.proximal = draw(proximal);
  return out;
}

}  // namespace tsqa
