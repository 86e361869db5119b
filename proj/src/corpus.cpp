#include "tsqa/corpus.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <random>
#include <set>
#include <sstream>
#include <unistd.h>
#include <unordered_set>

#include <nlohmann/json.hpp>

#include "tsqa/error.hpp"

namespace tsqa {

using nlohmann::json;

std::string_view to_string(QuestionType type) {
  switch (type) {
    case QuestionType::L2_point: return "L2";
    case QuestionType::L3_event: return "L3";
    case QuestionType::EASY_explicit: return "EASY";
    case QuestionType::HARD_implicit: return "HARD";
  }
  return "L2";
}

std::optional<QuestionType> question_type_from_string(std::string_view s) {
  for (auto t : kQuestionTypes)
    if (to_string(t) == s) return t;
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// JSONL schema

namespace {

json month_json(const std::optional<Month>& m) {
  return m ? json(format_month(*m)) : json(nullptr);
}

std::optional<Month> month_from_json(const json& j, const char* field, std::size_t line_no) {
  if (j.is_null()) return std::nullopt;
  if (!j.is_string()) throw ValidationError(field, "expected \"YYYY-MM\" or null");
  auto m = parse_month(j.get<std::string>());
  if (!m) throw ValidationError(field, "bad month '" + j.get<std::string>() + "'");
  (void)line_no;
  return m;
}

std::string string_field(const json& obj, const char* field, bool required,
                         const std::string& fallback = {}) {
  auto it = obj.find(field);
  if (it == obj.end() || it->is_null()) {
    if (required) throw ValidationError(field, "missing");
    return fallback;
  }
  if (!it->is_string()) throw ValidationError(field, "expected a string");
  return it->get<std::string>();
}

TimeFact fact_from_json(const json& j, std::size_t line_no) {
  if (!j.is_object()) throw ValidationError("facts", "expected an object");
  TimeFact f;
  f.subject = string_field(j, "s", true);
  f.relation = string_field(j, "r", true);
  f.object = string_field(j, "o", true);
  f.start = month_from_json(j.value("start", json(nullptr)), "start", line_no);
  f.end = month_from_json(j.value("end", json(nullptr)), "end", line_no);
  validate(f);
  return f;
}

json fact_to_json(const TimeFact& f) {
  return {{"s", f.subject}, {"r", f.relation}, {"o", f.object},
          {"start", month_json(f.start)}, {"end", month_json(f.end)}};
}

json interval_json(const std::optional<Interval>& iv) {
  if (!iv) return nullptr;
  return json::array({format_month(iv->start), format_month(iv->end)});
}

std::optional<Interval> interval_from_json(const json& j, const char* field) {
  if (j.is_null()) return std::nullopt;
  if (!j.is_array() || j.size() != 2) throw ValidationError(field, "expected [start, end]");
  auto a = month_from_json(j[0], field, 0), b = month_from_json(j[1], field, 0);
  if (!a || !b || *a > *b) throw ValidationError(field, "bad interval");
  return Interval{*a, *b};
}

json time_spec_json(const QuestionTimeSpec& spec) {
  return {{"kind", std::string(to_string(spec.kind))},
          {"interval", interval_json(spec.interval)},
          {"event", spec.event_name ? json(*spec.event_name) : json(nullptr)}};
}

QuestionTimeSpec time_spec_from_json(const json& j) {
  if (!j.is_object()) throw ValidationError("time_spec", "expected an object");
  QuestionTimeSpec spec;
  auto kind = time_spec_kind_from_string(j.value("kind", std::string("none")));
  if (!kind) throw ValidationError("time_spec.kind", "unknown kind");
  spec.kind = *kind;
  spec.interval = interval_from_json(j.value("interval", json(nullptr)), "time_spec.interval");
  if (auto it = j.find("event"); it != j.end() && it->is_string()) spec.event_name = it->get<std::string>();
  return spec;
}

std::vector<std::string> read_lines(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());
  std::vector<std::string> lines;
  for (std::string line; std::getline(in, line);) lines.push_back(std::move(line));
  return lines;
}

bool blank(std::string_view s) {
  return std::all_of(s.begin(), s.end(), [](char c) { return std::isspace(static_cast<unsigned char>(c)); });
}

}  // namespace

void validate(const QARecord& r) {
  if (r.question.empty()) throw ValidationError("question", "empty");
  if (r.context.empty()) throw ValidationError("context", "empty");
  if (r.gold_answers.empty()) throw ValidationError("answers", "empty list");
  if (r.time_spec) {
    const auto& s = *r.time_spec;
    if ((s.kind == TimeSpecKind::point || s.kind == TimeSpecKind::range) &&
        (!s.interval || !s.interval->valid()))
      throw ValidationError("time_spec.interval", "point/range needs a valid interval");
    if (s.kind == TimeSpecKind::during_event && !s.event_name && !s.interval)
      throw ValidationError("time_spec.event", "during_event needs an event name");
  }
}

QARecord parse_record(std::string_view line, std::size_t line_no) {
  json j;
  try {
    j = json::parse(line);
  } catch (const json::parse_error& e) {
    throw ParseError(line_no, e.what());
  }
  if (!j.is_object()) throw ParseError(line_no, "record is not a JSON object");

  try {
    QARecord r;
    r.id = string_field(j, "id", false, line_no ? "line-" + std::to_string(line_no) : "record");
    r.question = string_field(j, "question", true);
    r.context = string_field(j, "context", true);
    auto answers = j.find("answers");
    if (answers == j.end() || answers->is_null()) throw ValidationError("answers", "missing");
    if (!answers->is_array()) throw ValidationError("answers", "expected a list");
    for (const auto& a : *answers) {
      if (!a.is_string()) throw ValidationError("answers", "expected strings");
      r.gold_answers.push_back(a.get<std::string>());
    }
    const std::string type = string_field(j, "type", false, "L2");
    auto qt = question_type_from_string(type);
    if (!qt) throw ValidationError("type", "unknown question type '" + type + "'");
    r.question_type = *qt;
    if (auto facts = j.find("facts"); facts != j.end() && !facts->is_null()) {
      if (!facts->is_array()) throw ValidationError("facts", "expected a list");
      for (const auto& f : *facts) r.facts.push_back(fact_from_json(f, line_no));
    }
    const TimeFact* first = nullptr;
    for (const auto& f : r.facts)
      if (!f.is_event()) {
        first = &f;
        break;
      }
    r.subject = string_field(j, "subject", false, first ? first->subject : "");
    r.relation = string_field(j, "relation", false, first ? first->relation : "");
    if (auto ts = j.find("time_spec"); ts != j.end() && !ts->is_null())
      r.time_spec = time_spec_from_json(*ts);
    if (auto spans = j.find("time_spans"); spans != j.end() && spans->is_array()) {
      for (const auto& s : *spans) {
        if (!s.is_array() || s.size() != 3) throw ValidationError("time_spans", "expected [start, end, interval]");
        auto iv = interval_from_json(s[2], "time_spans");
        if (!iv) throw ValidationError("time_spans", "missing interval");
        r.context_spans.push_back({s[0].get<std::size_t>(), s[1].get<std::size_t>(), *iv});
      }
    }
    validate(r);
    return r;
  } catch (const ValidationError& e) {
    if (!line_no) throw;
    throw ValidationError(e.field(), std::string(e.what()) + " (line " + std::to_string(line_no) + ")");
  } catch (const json::exception& e) {
    throw ParseError(line_no, e.what());
  }
}

std::string serialize_record(const QARecord& r) {
  json j = {{"id", r.id},
            {"type", std::string(to_string(r.question_type))},
            {"question", r.question},
            {"context", r.context},
            {"answers", r.gold_answers}};
  json facts = json::array();
  for (const auto& f : r.facts) facts.push_back(fact_to_json(f));
  j["facts"] = std::move(facts);
  j["subject"] = r.subject;
  j["relation"] = r.relation;
  if (r.time_spec) j["time_spec"] = time_spec_json(*r.time_spec);
  if (!r.context_spans.empty()) {
    json spans = json::array();
    for (const auto& s : r.context_spans)
      spans.push_back(json::array({s.tok_start, s.tok_end, interval_json(s.interval)}));
    j["time_spans"] = std::move(spans);
  }
  return j.dump();
}

std::vector<QARecord> load_dataset(const std::filesystem::path& path) {
  std::vector<QARecord> out;
  const auto lines = read_lines(path);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (blank(lines[i])) continue;
    out.push_back(parse_record(lines[i], i + 1));
  }
  return out;
}

void save_dataset(const std::filesystem::path& path, const std::vector<QARecord>& records) {
  std::string out;
  for (const auto& r : records) {
    out += serialize_record(r);
    out += '\n';
  }
  write_file_atomic(path, out);
}

TimeFact parse_fact_line(std::string_view line, std::size_t line_no) {
  json j;
  try {
    j = json::parse(line);
  } catch (const json::parse_error& e) {
    throw ParseError(line_no, e.what());
  }
  try {
    return fact_from_json(j, line_no);
  } catch (const json::exception& e) {
    throw ParseError(line_no, e.what());
  }
}

std::string serialize_fact(const TimeFact& fact) { return fact_to_json(fact).dump(); }

std::vector<TimeFact> load_facts(const std::filesystem::path& path) {
  std::vector<TimeFact> out;
  const auto lines = read_lines(path);
  for (std::size_t i = 0; i < lines.size(); ++i)
    if (!blank(lines[i])) out.push_back(parse_fact_line(lines[i], i + 1));
  return out;
}

void save_facts(const std::filesystem::path& path, const std::vector<TimeFact>& facts) {
  std::string out;
  for (const auto& f : facts) {
    out += serialize_fact(f);
    out += '\n';
  }
  write_file_atomic(path, out);
}

void write_file_atomic(const std::filesystem::path& path, std::string_view contents) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  auto tmp = path;
  tmp += ".tmp." + std::to_string(::getpid());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + tmp.string());
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    if (!out) throw Error("write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

// ---------------------------------------------------------------------------
// Synthetic generator

void validate(const SyntheticConfig& c) {
  if (c.n_entities < 2) throw ValidationError("n_entities", "must be >= 2");
  if (c.n_relations < 1 || c.n_relations > 5) throw ValidationError("n_relations", "must be in [1, 5]");
  if (c.facts_per_pair < 1) throw ValidationError("facts_per_pair", "must be >= 1");
  if (c.distractor_sentences_per_context < 0)
    throw ValidationError("distractor_sentences_per_context", "must be >= 0");
  if (c.year_min >= c.year_max) throw ValidationError("year_range", "y_min must be < y_max");
  if (c.year_min < kMinYear + 1 || c.year_max > kMaxYear - 1)
    throw ValidationError("year_range", "outside representable years");
  if (c.facts_per_pair > c.year_max - c.year_min + 1)
    throw ValidationError("facts_per_pair", "does not fit in the year range");
  if (!(c.unanswerable_fraction >= 0 && c.unanswerable_fraction <= 1))
    throw ValidationError("unanswerable_fraction", "must be in [0, 1]");
  double sum = 0;
  for (double w : c.question_type_mix) {
    if (w < 0) throw ValidationError("question_type_mix", "weights must be non-negative");
    sum += w;
  }
  if (sum <= 0) throw ValidationError("question_type_mix", "weights sum to zero");
  if (c.n_train < 0 || c.n_dev < 0 || c.n_test < 0 || c.n_records < 0)
    throw ValidationError("n_records", "must be non-negative");
  if (c.n_train + c.n_dev + c.n_test + c.n_records == 0)
    throw ValidationError("n_records", "no records requested");
}

namespace {

constexpr std::array<const char*, 48> kFirstNames = {
    "Alden", "Brona", "Cassian", "Delphine", "Emrys", "Fenella", "Gideon", "Halla",
    "Ivor", "Jessamy", "Kester", "Linnea", "Magnus", "Nerys", "Osric", "Petra",
    "Quillon", "Rhoswen", "Silas", "Tamsin", "Ulric", "Verity", "Wystan", "Xanthe",
    "Yorick", "Zelda", "Anselm", "Briony", "Corwin", "Dagny", "Elric", "Freya",
    "Garrick", "Hester", "Isolde", "Jory", "Kerensa", "Lorcan", "Morwenna", "Niall",
    "Odile", "Peregrine", "Rowena", "Soren", "Theda", "Ulla", "Vaughan", "Winifred"};

constexpr std::array<const char*, 48> kLastNames = {
    "Ashcombe", "Blackwood", "Carrow", "Dunmore", "Eastley", "Fairweather", "Greaves",
    "Holloway", "Ingram", "Jessop", "Kettering", "Lockhart", "Marchbank", "Northcote",
    "Oakhurst", "Pennington", "Quarrie", "Radley", "Sallow", "Thackeray", "Underhill",
    "Vance", "Whitlock", "Yelland", "Abernethy", "Brackley", "Corrigan", "Denholm",
    "Elsworth", "Farrant", "Gilchrist", "Hartigan", "Illingworth", "Jardine", "Kilbride",
    "Lindqvist", "Merriweather", "Nettleton", "Ormsby", "Prideaux", "Rutherford",
    "Stannard", "Tregarthen", "Vellacott", "Wetherby", "Ackroyd", "Blenkinsop", "Cardew"};

constexpr std::array<const char*, 60> kPlaces = {
    "Ashby", "Brenmoor", "Calder", "Dunholt", "Elmstead", "Farrowdale", "Glenmere",
    "Harrowgate", "Islington", "Jarrow", "Kelford", "Larkhill", "Marston", "Netherby",
    "Oakridge", "Pemberton", "Queensferry", "Ravenscar", "Stowmarket", "Thornbury",
    "Ulverston", "Vexley", "Westbrook", "Yarmouth", "Aldwick", "Bramford", "Coldharbour",
    "Dorrington", "Easterhaven", "Fenwick", "Grantley", "Hollins", "Ivybridge", "Kirkwall",
    "Lowther", "Millbrook", "Norbury", "Ottery", "Penrith", "Redruth", "Saltash",
    "Tavistock", "Uppingham", "Wymondham", "Amberley", "Blyth", "Carnforth", "Dalby",
    "Eskdale", "Frome", "Garstang", "Hexham", "Keswick", "Ludlow", "Malton", "Newlyn",
    "Otley", "Padstow", "Rothbury", "Sedbergh"};

constexpr std::array<const char*, 20> kEventAdjectives = {
    "Silver", "Northern", "Crimson", "Great", "Quiet", "Iron", "Golden", "Western",
    "Long", "Amber", "Pale", "Broken", "Scarlet", "Eastern", "Hollow", "Green",
    "Bitter", "Bright", "Grey", "Distant"};
constexpr std::array<const char*, 12> kEventNouns = {
    "Accord", "Flood", "Exhibition", "Blockade", "Famine", "Rebellion", "Treaty",
    "Drought", "Crusade", "Congress", "Schism", "Embargo"};
constexpr int kEvents = 40;

constexpr std::array<const char*, 12> kMonthAbbrev = {
    "Jan", "Feb", "Mar", "Apr", "May", "Jun", "Jul", "Aug", "Sep", "Oct", "Nov", "Dec"};

struct RelationSpec {
  const char* name;
  const char* noun;       // "Which {noun} did ..."
  const char* base_verb;  // "... did S {verb}"
  std::array<const char*, 2> verbs;  // "S {verb} O"
  std::array<const char*, 4> object_forms;  // %s = place
  bool single_year;
};

constexpr std::array<RelationSpec, 5> kRelations = {{
    {"plays_for", "team", "play for", {"played for", "turned out for"},
     {"%s F.C.", "%s United", "%s Rovers", "%s Athletic"}, false},
    {"employer", "employer", "work for", {"worked for", "was employed by"},
     {"University of %s", "%s College", "%s Institute", "%s Polytechnic"}, false},
    {"position", "position", "hold", {"served as", "held the post of"},
     {"Mayor of %s", "Governor of %s", "Chancellor of %s", "Treasurer of %s"}, false},
    {"member_of", "organization", "belong to", {"was a member of", "belonged to"},
     {"the %s Society", "the %s Guild", "the %s Circle", "the %s League"}, false},
    {"award", "award", "receive", {"received", "was awarded"},
     {"the %s Medal", "the %s Prize", "the %s Award", "the %s Shield"}, true},
}};

const RelationSpec* relation_spec(std::string_view name) {
  for (const auto& r : kRelations)
    if (name == r.name) return &r;
  return nullptr;
}

std::string format_object(const char* form, const char* place) {
  char buf[96];
  std::snprintf(buf, sizeof(buf), form, place);
  return buf;
}

int start_year(const TimeFact& f) { return year_of(*f.start); }
int end_year(const TimeFact& f) { return year_of(*f.end); }

struct Piece {
  std::string text;
  bool temporal = false;
  Interval interval{};
};

// One rendered sentence as pieces, so temporal extents are known exactly.
std::vector<Piece> render_fact(const TimeFact& f, std::mt19937_64& rng) {
  const RelationSpec* spec = relation_spec(f.relation);
  const int y1 = start_year(f), y2 = end_year(f);
  const Interval iv = f.effective();
  std::uniform_int_distribution<int> coin(0, 1);
  const std::string verb = spec->verbs[coin(rng)];

  std::vector<Piece> out;
  const bool ends_with_period = !f.object.empty() && f.object.back() == '.';
  if (y1 == y2) {
    if (coin(rng)) {
      out = {{"In "}, {std::to_string(y1), true, iv}, {", " + f.subject + " " + verb + " " + f.object}};
      if (!ends_with_period) out.push_back({"."});
    } else {
      out = {{f.subject + " " + verb + " " + f.object + " in "}, {std::to_string(y1), true, iv}, {"."}};
    }
    return out;
  }
  const std::string a = std::to_string(y1), b = std::to_string(y2);
  std::uniform_int_distribution<int> form(0, 4);
  switch (form(rng)) {
    case 0:
      out = {{f.subject + " " + verb + " " + f.object + " "}, {"from " + a + " to " + b, true, iv}, {"."}};
      break;
    case 1:
      out = {{f.subject + " " + verb + " " + f.object + " "}, {"between " + a + " and " + b, true, iv}, {"."}};
      break;
    case 2:
      out = {{f.subject + " " + verb + " " + f.object + " ("}, {a + "\xE2\x80\x93" + b, true, iv}, {")."}};
      break;
    case 3:
      out = {{f.subject + " " + verb + " " + f.object + " "}, {"from " + a + " until " + b, true, iv}, {"."}};
      break;
    default:
      out = {{"From " + a + " to " + b, true, iv}, {", " + f.subject + " " + verb + " " + f.object}};
      if (!ends_with_period) out.push_back({"."});
      break;
  }
  return out;
}

struct Rendered {
  std::string context;
  std::vector<SpanAnnotation> spans;
};

Rendered assemble(const std::vector<std::vector<Piece>>& sentences) {
  Rendered r;
  std::vector<std::pair<std::size_t, std::size_t>> chars;
  std::vector<Interval> intervals;
  for (const auto& s : sentences) {
    if (!r.context.empty()) r.context += ' ';
    for (const auto& p : s) {
      if (p.temporal) {
        chars.emplace_back(r.context.size(), r.context.size() + p.text.size());
        intervals.push_back(p.interval);
      }
      r.context += p.text;
    }
  }
  const auto toks = tokenize(r.context);
  for (std::size_t k = 0; k < chars.size(); ++k) {
    SpanAnnotation a;
    a.interval = intervals[k];
    std::size_t t = 0;
    while (t < toks.size() && toks[t].char_start < chars[k].first) ++t;
    a.tok_start = t;
    while (t < toks.size() && toks[t].char_end <= chars[k].second) ++t;
    a.tok_end = t;
    r.spans.push_back(a);
  }
  return r;
}

class Generator {
 public:
  explicit Generator(const SyntheticConfig& c) : cfg_(c), rng_(c.seed) {}

  SyntheticCorpus run() {
    make_entities();
    make_facts();
    make_events();
    index_ = bulk_load(facts_);

    int n_train = cfg_.n_train, n_dev = cfg_.n_dev, n_test = cfg_.n_test;
    if (n_train + n_dev + n_test == 0) {
      n_train = static_cast<int>(cfg_.n_records * 0.70);
      n_dev = static_cast<int>(cfg_.n_records * 0.15);
      n_test = cfg_.n_records - n_train - n_dev;
    }
    const int total = n_train + n_dev + n_test;
    std::vector<QARecord> records;
    records.reserve(static_cast<std::size_t>(total));
    for (int i = 0; records.size() < static_cast<std::size_t>(total); ++i) {
      if (i > total * 50) throw Error("synthetic generator could not build enough records");
      if (auto r = make_record(records.size())) records.push_back(std::move(*r));
    }
    std::shuffle(records.begin(), records.end(), rng_);

    SyntheticCorpus out;
    out.train.assign(records.begin(), records.begin() + n_train);
    out.dev.assign(records.begin() + n_train, records.begin() + n_train + n_dev);
    out.test.assign(records.begin() + n_train + n_dev, records.end());
    out.facts = facts_;
    return out;
  }

 private:
  int uniform(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng_); }
  double unit() { return std::uniform_real_distribution<double>(0.0, 1.0)(rng_); }

  void make_entities() {
    std::vector<std::string> all;
    for (auto f : kFirstNames)
      for (auto l : kLastNames) all.push_back(std::string(f) + " " + l);
    if (static_cast<std::size_t>(cfg_.n_entities) > all.size())
      throw ValidationError("n_entities", "at most " + std::to_string(all.size()));
    std::shuffle(all.begin(), all.end(), rng_);
    all.resize(static_cast<std::size_t>(cfg_.n_entities));
    entities_ = std::move(all);
  }

  void make_facts() {
    const int span = cfg_.year_max - cfg_.year_min + 1;
    for (int r = 0; r < cfg_.n_relations; ++r) {
      const auto& rel = kRelations[static_cast<std::size_t>(r)];
      std::vector<std::string> pool;
      for (auto form : rel.object_forms)
        for (auto place : kPlaces) pool.push_back(format_object(form, place));
      for (const auto& e : entities_) {
        std::vector<int> dur(static_cast<std::size_t>(cfg_.facts_per_pair)), gap(dur.size());
        for (std::size_t k = 0; k < dur.size(); ++k) {
          dur[k] = rel.single_year ? 1 : uniform(1, 6);
          gap[k] = k + 1 < dur.size() ? uniform(0, rel.single_year ? 6 : 3) : 0;
        }
        auto needed = [&] { return std::accumulate(dur.begin(), dur.end(), 0) + std::accumulate(gap.begin(), gap.end(), 0); };
        while (needed() > span) {
          for (auto& g : gap) g = std::max(0, g - 1);
          for (auto& d : dur) d = std::max(1, d - 1);
        }
        int y = cfg_.year_min + uniform(0, span - needed());
        std::shuffle(pool.begin(), pool.end(), rng_);
        for (std::size_t k = 0; k < dur.size(); ++k) {
          const int y1 = y, y2 = y + dur[k] - 1;
          facts_.push_back({e, rel.name, pool[k], make_month(y1, 1), make_month(y2, 12)});
          y = y2 + 1 + gap[k];
        }
      }
    }
  }

  void make_events() {
    std::vector<std::string> names;
    for (auto a : kEventAdjectives)
      for (auto n : kEventNouns) names.push_back(std::string("the ") + a + " " + n);
    std::shuffle(names.begin(), names.end(), rng_);
    for (int k = 0; k < kEvents && k < static_cast<int>(names.size()); ++k) {
      const int len = uniform(1, 5);
      const int y1 = uniform(cfg_.year_min, cfg_.year_max - len + 1);
      TimeFact ev{names[static_cast<std::size_t>(k)], std::string(kEventRelation),
                  names[static_cast<std::size_t>(k)], make_month(y1, 1), make_month(y1 + len - 1, 12)};
      events_.push_back(facts_.size());
      facts_.push_back(std::move(ev));
    }
  }

  struct Plan {
    QuestionTimeSpec spec;
    std::string time_phrase;    // appended to the question
    std::string ordinal;        // "first"/"last" inserted before the verb
    std::optional<std::size_t> event_fact;
    std::optional<int> avoid_year;  // must not appear in the context
  };

  std::optional<Plan> plan_question(QuestionType type, bool unanswerable,
                                    const std::vector<std::size_t>& pair,
                                    const std::set<int>& context_years) {
    auto covered = [&](int year) {
      for (auto id : pair)
        if (intersects(index_.fact(id).effective(), year_interval(year))) return true;
      return false;
    };
    const auto& F = [&](std::size_t k) -> const TimeFact& { return index_.fact(pair[k]); };
    const std::size_t n = pair.size();
    Plan p;

    switch (type) {
      case QuestionType::L2_point: {
        int year;
        if (unanswerable) {
          std::vector<int> free;
          for (int y = cfg_.year_min; y <= cfg_.year_max; ++y)
            if (!covered(y)) free.push_back(y);
          if (free.empty()) return std::nullopt;
          year = free[static_cast<std::size_t>(uniform(0, static_cast<int>(free.size()) - 1))];
        } else {
          const auto& f = F(static_cast<std::size_t>(uniform(0, static_cast<int>(n) - 1)));
          const int y1 = start_year(f), y2 = end_year(f);
          year = (y2 - y1 >= 2 && unit() < 0.7) ? uniform(y1 + 1, y2 - 1) : uniform(y1, y2);
        }
        if (unit() < 0.3) {
          const int m = uniform(1, 12);
          p.spec = {TimeSpecKind::point, Interval{make_month(year, m), make_month(year, m)}, std::nullopt};
          p.time_phrase = std::string(" in ") + kMonthAbbrev[static_cast<std::size_t>(m - 1)] + ", " + std::to_string(year);
        } else {
          p.spec = {TimeSpecKind::point, year_interval(year), std::nullopt};
          p.time_phrase = " in " + std::to_string(year);
        }
        return p;
      }
      case QuestionType::EASY_explicit: {
        if (unanswerable) {
          std::vector<int> free;
          for (int y : context_years)
            if (!covered(y)) free.push_back(y);
          if (free.empty()) return std::nullopt;
          const int year = free[static_cast<std::size_t>(uniform(0, static_cast<int>(free.size()) - 1))];
          p.spec = {TimeSpecKind::point, year_interval(year), std::nullopt};
          p.time_phrase = " in " + std::to_string(year);
          return p;
        }
        const auto& f = F(static_cast<std::size_t>(uniform(0, static_cast<int>(n) - 1)));
        const int y1 = start_year(f), y2 = end_year(f);
        if (y1 < y2 && unit() < 0.5) {
          p.spec = {TimeSpecKind::range, Interval{make_month(y1, 1), make_month(y2, 12)}, std::nullopt};
          p.time_phrase = " from " + std::to_string(y1) + " to " + std::to_string(y2);
        } else {
          const int y = unit() < 0.5 ? y1 : y2;
          p.spec = {TimeSpecKind::point, year_interval(y), std::nullopt};
          p.time_phrase = " in " + std::to_string(y);
        }
        return p;
      }
      case QuestionType::HARD_implicit: {
        const int choice = unanswerable ? uniform(0, 1) : uniform(0, 3);
        if (choice == 2 || choice == 3) {
          p.spec = {choice == 2 ? TimeSpecKind::first : TimeSpecKind::last, std::nullopt, std::nullopt};
          p.ordinal = choice == 2 ? "first" : "last";
          return p;
        }
        const bool before = choice == 0;
        std::vector<int> years;
        for (int y = cfg_.year_min; y <= cfg_.year_max; ++y) {
          if (context_years.count(y)) continue;
          years.push_back(y);
        }
        std::shuffle(years.begin(), years.end(), rng_);
        for (int y : years) {
          QuestionTimeSpec spec{before ? TimeSpecKind::before : TimeSpecKind::after, year_interval(y), std::nullopt};
          const bool answerable = resolve_fact_in(spec, pair).has_value();
          if (answerable == unanswerable) continue;
          p.spec = spec;
          p.time_phrase = (before ? " before " : " after ") + std::to_string(y);
          p.avoid_year = y;
          return p;
        }
        return std::nullopt;
      }
      case QuestionType::L3_event: {
        const int choice = uniform(0, 2);
        const TimeSpecKind kind = choice == 0 ? TimeSpecKind::during_event
                                 : choice == 1 ? TimeSpecKind::before : TimeSpecKind::after;
        std::vector<std::size_t> order = events_;
        std::shuffle(order.begin(), order.end(), rng_);
        for (auto ev : order) {
          const auto& e = facts_[ev];
          QuestionTimeSpec spec{kind, e.effective(), e.subject};
          const bool answerable = resolve_fact_in(spec, pair).has_value();
          if (answerable == unanswerable) continue;
          p.spec = spec;
          p.event_fact = ev;
          p.time_phrase = (choice == 0 ? " during " : choice == 1 ? " before " : " after ") + e.subject;
          return p;
        }
        return std::nullopt;
      }
    }
    return std::nullopt;
  }

  std::optional<std::size_t> resolve_fact_in(const QuestionTimeSpec& spec,
                                             const std::vector<std::size_t>& pair) {
    if (pair.empty()) return std::nullopt;
    const auto& f = index_.fact(pair.front());
    return resolve_fact(spec, f.subject, f.relation, index_);
  }

  std::optional<QARecord> make_record(std::size_t ordinal) {
    const auto& subject = entities_[static_cast<std::size_t>(uniform(0, cfg_.n_entities - 1))];
    const auto& rel = kRelations[static_cast<std::size_t>(uniform(0, cfg_.n_relations - 1))];
    std::discrete_distribution<int> mix(cfg_.question_type_mix.begin(), cfg_.question_type_mix.end());
    const QuestionType type = kQuestionTypes[static_cast<std::size_t>(mix(rng_))];
    const bool unanswerable = unit() < cfg_.unanswerable_fraction;

    const auto& pair = index_.pair(subject, rel.name);
    std::vector<std::size_t> own;  // every fact of the subject
    std::set<int> years;
    for (int r = 0; r < cfg_.n_relations; ++r)
      for (auto id : index_.pair(subject, kRelations[static_cast<std::size_t>(r)].name)) {
        own.push_back(id);
        years.insert(start_year(index_.fact(id)));
        years.insert(end_year(index_.fact(id)));
      }

    auto plan = plan_question(type, unanswerable, pair, years);
    if (!plan) return std::nullopt;
    const auto gold_id = resolve_fact_in(plan->spec, pair);
    if (gold_id.has_value() == unanswerable) return std::nullopt;

    // Distractors: other subjects, other relations, overlapping the period the
    // answer lives in.
    Interval focus;
    if (plan->spec.interval && (plan->spec.kind == TimeSpecKind::point ||
                                plan->spec.kind == TimeSpecKind::range ||
                                plan->spec.kind == TimeSpecKind::during_event))
      focus = *plan->spec.interval;
    else if (gold_id)
      focus = index_.fact(*gold_id).effective();
    else if (plan->spec.interval)
      focus = *plan->spec.interval;
    else
      focus = index_.fact(pair.front()).effective();

    std::unordered_set<std::string> objects;
    for (auto id : own) objects.insert(index_.fact(id).object);
    std::vector<std::size_t> pool;
    for (auto id : index_.overlapping(focus)) {
      const auto& f = index_.fact(id);
      if (f.is_event() || f.subject == subject || f.relation == rel.name) continue;
      if (objects.count(f.object)) continue;
      if (plan->avoid_year && (start_year(f) == *plan->avoid_year || end_year(f) == *plan->avoid_year))
        continue;
      pool.push_back(id);
    }
    std::shuffle(pool.begin(), pool.end(), rng_);
    std::vector<std::size_t> distractors;
    for (auto id : pool) {
      if (distractors.size() >= static_cast<std::size_t>(cfg_.distractor_sentences_per_context)) break;
      if (!objects.insert(index_.fact(id).object).second) continue;
      distractors.push_back(id);
    }

    std::vector<std::size_t> rendered = own;
    rendered.insert(rendered.end(), distractors.begin(), distractors.end());
    std::vector<std::size_t> order = rendered;
    std::shuffle(order.begin(), order.end(), rng_);
    std::vector<std::vector<Piece>> sentences;
    for (auto id : order) sentences.push_back(render_fact(index_.fact(id), rng_));
    Rendered ctx = assemble(sentences);

    QARecord r;
    char id[48];
    std::snprintf(id, sizeof(id), "syn%llu-%05zu", static_cast<unsigned long long>(cfg_.seed), ordinal);
    r.id = id;
    r.question_type = type;
    r.subject = subject;
    r.relation = rel.name;
    r.question = std::string("Which ") + rel.noun + " did " + subject + " " +
                 (plan->ordinal.empty() ? "" : plan->ordinal + " ") + rel.base_verb +
                 plan->time_phrase + "?";
    r.context = std::move(ctx.context);
    r.context_spans = std::move(ctx.spans);
    r.time_spec = plan->spec;
    r.gold_answers = {gold_id ? index_.fact(*gold_id).object : std::string()};
    for (auto fid : rendered) r.facts.push_back(index_.fact(fid));
    if (plan->event_fact) r.facts.push_back(facts_[*plan->event_fact]);
    return r;
  }

  SyntheticConfig cfg_;
  std::mt19937_64 rng_;
  std::vector<std::string> entities_;
  std::vector<TimeFact> facts_;
  std::vector<std::size_t> events_;
  FactIndex index_;
};

}  // namespace

SyntheticCorpus generate_synthetic(const SyntheticConfig& config) {
  validate(config);
  return Generator(config).run();
}

}  // namespace tsqa
