#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "tsqa/temporal_tagger.hpp"
#include "tsqa/time.hpp"

namespace tsqa {

/// Relation name reserved for event facts. An event fact names a period
/// ("the Silver Accord", event, "the Silver Accord", [ts, te]) and anchors
/// L3 questions; it never supplies answers or negatives.
inline constexpr std::string_view kEventRelation = "event";

/// (subject, relation, object, [ts, te]); either end may be open.
struct TimeFact {
  std::string subject;
  std::string relation;
  std::string object;
  std::optional<Month> start;
  std::optional<Month> end;

  /// Open ends extend to the representable min/max month.
  Interval effective() const {
    return {start.value_or(kMinMonth), end.value_or(kMaxMonth)};
  }
  bool is_event() const { return relation == kEventRelation; }
  friend bool operator==(const TimeFact&, const TimeFact&) = default;
};

/// Throws ValidationError naming the offending field.
void validate(const TimeFact& fact);

/// Immutable store over deduplicated facts with a (subject, relation) index
/// and a static interval tree for intersection queries.
class FactIndex {
 public:
  FactIndex() = default;

  std::size_t size() const { return facts_.size(); }
  bool empty() const { return facts_.empty(); }
  const TimeFact& fact(std::size_t id) const { return facts_[id]; }
  const std::vector<TimeFact>& facts() const { return facts_; }

  /// Fact ids for one (subject, relation), ordered by effective start.
  const std::vector<std::size_t>& pair(std::string_view subject,
                                       std::string_view relation) const;

  /// Ids of all facts whose effective interval intersects `q`, ascending.
  std::vector<std::size_t> overlapping(const Interval& q) const;

  /// Interval of the event fact named `name`, if any.
  std::optional<Interval> event_interval(std::string_view name) const;

 private:
  friend FactIndex bulk_load(const std::vector<TimeFact>& facts);

  struct Node {
    std::size_t id;  // into facts_
    Month max_end;   // over the subtree rooted here
  };
  void build_tree(std::size_t lo, std::size_t hi);
  void query_tree(std::size_t lo, std::size_t hi, const Interval& q,
                  std::vector<std::size_t>& out) const;

  std::vector<TimeFact> facts_;
  std::unordered_map<std::string, std::vector<std::size_t>> by_pair_;
  std::unordered_map<std::string, std::size_t> events_;
  std::vector<Node> tree_;  // implicit BST over facts sorted by start
};

FactIndex bulk_load(const std::vector<TimeFact>& facts);

/// Fills in the interval of event-anchored specs (during_event, and
/// before/after with an event anchor). Throws ResolutionError for an unknown
/// event name.
QuestionTimeSpec resolve_time_spec(const QuestionTimeSpec& spec, const FactIndex& index);

/// Id of the fact selected by `spec` among the (subject, relation) facts.
std::optional<std::size_t> resolve_fact(const QuestionTimeSpec& spec,
                                        std::string_view subject,
                                        std::string_view relation,
                                        const FactIndex& index);

/// Object of the selected fact, or "" when no fact qualifies.
std::string resolve_question(const QuestionTimeSpec& spec, std::string_view subject,
                             std::string_view relation, const FactIndex& index);

struct NegativeSet {
  std::vector<std::string> remote;
  std::vector<std::string> proximal;
  bool empty() const { return remote.empty() && proximal.empty(); }
};

/// Same (subject, relation), interval disjoint from `q`; ordered by start.
std::vector<std::string> mine_remote(std::string_view subject, std::string_view relation,
                                     std::string_view gold, const Interval& q,
                                     const FactIndex& index);

/// Different (subject, relation), interval intersecting `q`; ordered by
/// start, then by fact id.
std::vector<std::string> mine_proximal(std::string_view subject, std::string_view relation,
                                       std::string_view gold, const Interval& q,
                                       const FactIndex& index);

/// Draws min(k, |remote|, |proximal|) from each side without replacement,
/// so the two sides stay 1:1.
NegativeSet sample_negatives(const std::vector<std::string>& remote,
                             const std::vector<std::string>& proximal,
                             std::size_t k_per_side, std::mt19937_64& rng);

}  // namespace tsqa
