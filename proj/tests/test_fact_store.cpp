#include <doctest.h>

#include <random>
#include <set>

#include "oracles.hpp"
#include "tsqa/error.hpp"
#include "tsqa/fact_store.hpp"

using namespace tsqa;

namespace {

TimeFact fact(std::string s, std::string r, std::string o, int y1, int y2) {
  return {std::move(s), std::move(r), std::move(o), make_month(y1, 1), make_month(y2, 12)};
}

QuestionTimeSpec point(int year) { return {TimeSpecKind::point, year_interval(year), std::nullopt}; }

std::vector<TimeFact> warnock() {
  const std::string w = "Mary Warnock";
  return {fact(w, "employer", "St Hugh's College", 1949, 1966),
          fact(w, "employer", "Oxford High School", 1966, 1972),
          fact(w, "employer", "Lady Margaret Hall", 1972, 1976),
          fact(w, "employer", "Girton College", 1984, 1991),
          fact(w, "chair", "Home Office Committee", 1984, 1989),
          fact(w, "honorary_degree", "University of Bath", 1987, 1987),
          fact(w, "lecture", "Richard Dimbleby Lecture", 1980, 1999)};
}

std::vector<TimeFact> miller() {
  const std::string m = "George Abram Miller";
  return {fact(m, "employer", "Eureka College", 1890, 1892),
          fact(m, "employer", "University of Michigan", 1892, 1897),
          fact(m, "employer", "Cornell University", 1897, 1901),
          fact(m, "employer", "Stanford University", 1901, 1906),
          fact(m, "employer", "University of Illinois", 1906, 1931),
          fact(m, "president_of", "the Mathematical Association of America", 1921, 1922),
          fact(m, "plenary_address", "the International Congress of Mathematicians", 1924, 1924)};
}

bool contains(const std::vector<std::string>& v, const std::string& s) {
  return std::find(v.begin(), v.end(), s) != v.end();
}

}  // namespace

TEST_CASE("bulk_load") {
  auto facts = warnock();
  facts.resize(3);
  CHECK(bulk_load(facts).size() == 3);
  CHECK(bulk_load({facts[0], facts[0]}).size() == 1);
  CHECK(bulk_load({}).empty());
  TimeFact bad = facts[0];
  bad.start = make_month(2000, 1);
  bad.end = make_month(1990, 1);
  CHECK_THROWS_AS(bulk_load({bad}), ValidationError);
  TimeFact unnamed = facts[0];
  unnamed.object.clear();
  CHECK_THROWS_AS(bulk_load({unnamed}), ValidationError);
  TimeFact open = facts[0];
  open.end.reset();
  CHECK(bulk_load({open, facts[0]}).size() == 2);
}

TEST_CASE("resolve_question") {
  const auto w = bulk_load(warnock());
  CHECK(resolve_question(point(1987), "Mary Warnock", "employer", w) == "Girton College");
  CHECK(resolve_question(point(1980), "Mary Warnock", "employer", w).empty());
  const auto m = bulk_load(miller());
  CHECK(resolve_question(point(1923), "George Abram Miller", "employer", m) == "University of Illinois");

  SUBCASE("first, last, before, after") {
    QuestionTimeSpec first{TimeSpecKind::first, std::nullopt, std::nullopt};
    QuestionTimeSpec last{TimeSpecKind::last, std::nullopt, std::nullopt};
    CHECK(resolve_question(first, "George Abram Miller", "employer", m) == "Eureka College");
    CHECK(resolve_question(last, "George Abram Miller", "employer", m) == "University of Illinois");
    QuestionTimeSpec before{TimeSpecKind::before, year_interval(1900), std::nullopt};
    CHECK(resolve_question(before, "George Abram Miller", "employer", m) == "University of Michigan");
    QuestionTimeSpec after{TimeSpecKind::after, year_interval(1900), std::nullopt};
    CHECK(resolve_question(after, "George Abram Miller", "employer", m) == "Stanford University");
  }
  SUBCASE("ties: most overlap, then earliest start") {
    const auto idx = bulk_load({fact("a", "r", "x", 2000, 2001), fact("a", "r", "y", 2001, 2003),
                                fact("a", "r", "z", 2001, 2002)});
    QuestionTimeSpec range{TimeSpecKind::range, Interval{make_month(2001, 1), make_month(2002, 12)}, std::nullopt};
    // y and z both cover 24 months of the range; both start 2001, z is inserted later.
    CHECK(resolve_question(range, "a", "r", idx) == "y");
  }
  SUBCASE("events") {
    auto facts = miller();
    facts.push_back({"the Great Flood", std::string(kEventRelation), "the Great Flood", make_month(1899, 3),
                     make_month(1899, 9)});
    const auto idx = bulk_load(facts);
    QuestionTimeSpec during{TimeSpecKind::during_event, std::nullopt, std::string("The Great Flood")};
    CHECK(resolve_question(during, "George Abram Miller", "employer", idx) == "Cornell University");
    QuestionTimeSpec unknown{TimeSpecKind::during_event, std::nullopt, std::string("the Long Drought")};
    CHECK_THROWS_AS(resolve_question(unknown, "George Abram Miller", "employer", idx), ResolutionError);
  }
}

TEST_CASE("mining") {
  const auto w = bulk_load(warnock());
  const Interval q = year_interval(1987);
  const auto remote = mine_remote("Mary Warnock", "employer", "Girton College", q, w);
  CHECK(remote == std::vector<std::string>{"St Hugh's College", "Oxford High School", "Lady Margaret Hall"});
  const auto prox = mine_proximal("Mary Warnock", "employer", "Girton College", q, w);
  CHECK(contains(prox, "Home Office Committee"));
  CHECK(contains(prox, "University of Bath"));
  CHECK(contains(prox, "Richard Dimbleby Lecture"));
  CHECK_FALSE(contains(prox, "Girton College"));

  const auto m = bulk_load(miller());
  const auto mprox = mine_proximal("George Abram Miller", "employer", "University of Illinois", year_interval(1923), m);
  CHECK_FALSE(contains(mprox, "the Mathematical Association of America"));
  CHECK_FALSE(contains(mprox, "the International Congress of Mathematicians"));

  const auto obama = bulk_load({fact("Obama", "position", "Professor at the University of Chicago Law School", 1993, 2005),
                                fact("Obama", "position", "Illinois State Senator", 1998, 2004),
                                fact("Obama", "position", "Federal Senator", 2004, 2008),
                                fact("Obama", "position", "President of the United States", 2009, 2017),
                                fact("Clinton", "position", "Secretary of State", 2009, 2013),
                                fact("Obama", "award", "Nobel Peace Prize", 2009, 2009)});
  const auto orem = mine_remote("Obama", "position", "President of the United States", year_interval(2009), obama);
  CHECK(contains(orem, "Illinois State Senator"));
  const auto oprox = mine_proximal("Obama", "position", "President of the United States", year_interval(2009), obama);
  CHECK(oprox == std::vector<std::string>{"Secretary of State", "Nobel Peace Prize"});

  const auto only = bulk_load({fact("a", "r", "gold", 2000, 2001)});
  CHECK(mine_remote("a", "r", "gold", year_interval(1990), only).empty());
  CHECK(mine_proximal("a", "r", "gold", year_interval(2000), only).empty());

  SUBCASE("gold excluded after normalisation, duplicates removed") {
    const auto idx = bulk_load({fact("a", "r", "The Gold.", 1990, 1991), fact("a", "r", "x", 1980, 1981),
                                fact("a", "r", "x", 1970, 1971), fact("a", "r", "gold", 2000, 2001)});
    CHECK(mine_remote("a", "r", "gold", year_interval(2000), idx) == std::vector<std::string>{"x"});
  }
}

TEST_CASE("sample_negatives keeps the 1:1 ratio") {
  std::mt19937_64 rng(5);
  const std::vector<std::string> five{"a", "b", "c", "d", "e"};
  const std::vector<std::string> one{"z"};
  auto s1 = sample_negatives(five, five, 2, rng);
  CHECK(s1.remote.size() == 2);
  CHECK(s1.proximal.size() == 2);
  auto s2 = sample_negatives(one, five, 2, rng);
  CHECK(s2.remote.size() == 1);
  CHECK(s2.proximal.size() == 1);
  CHECK(sample_negatives({}, {}, 2, rng).empty());
  CHECK(sample_negatives({}, five, 2, rng).empty());
  auto s3 = sample_negatives(five, five, 5, rng);
  CHECK(std::set<std::string>(s3.remote.begin(), s3.remote.end()).size() == 5);

  std::mt19937_64 a(9), b(9);
  CHECK(sample_negatives(five, five, 3, a).remote == sample_negatives(five, five, 3, b).remote);
}

TEST_CASE("interval index and resolver against brute force") {
  std::mt19937_64 rng(21);
  std::uniform_int_distribution<int> year(1900, 2000), len(0, 15), pick(0, 3);
  const std::vector<std::string> subjects{"s0", "s1", "s2"}, relations{"r0", "r1"};
  for (int store = 0; store < 1000; ++store) {
    std::vector<TimeFact> facts;
    const int n = std::uniform_int_distribution<int>(0, 25)(rng);
    for (int k = 0; k < n; ++k) {
      const int y = year(rng);
      TimeFact f = fact(subjects[rng() % 3], relations[rng() % 2], "o" + std::to_string(rng() % 12), y, y + len(rng));
      if (pick(rng) == 0) f.start.reset();
      if (pick(rng) == 0) f.end.reset();
      facts.push_back(f);
    }
    facts.push_back({"the Event", std::string(kEventRelation), "the Event", make_month(1950, 1), make_month(1952, 6)});
    const auto idx = bulk_load(facts);

    const int qy = year(rng);
    const Interval q{make_month(qy, 1), make_month(qy + len(rng), 12)};
    auto ids = idx.overlapping(q);
    std::vector<std::size_t> brute;
    for (std::size_t i = 0; i < idx.size(); ++i)
      if (intersects(idx.fact(i).effective(), q)) brute.push_back(i);
    CHECK(ids == brute);

    const std::string s = subjects[rng() % 3], r = relations[rng() % 2];
    for (auto kind : {TimeSpecKind::point, TimeSpecKind::range, TimeSpecKind::before, TimeSpecKind::after,
                      TimeSpecKind::first, TimeSpecKind::last}) {
      QuestionTimeSpec spec{kind, q, std::nullopt};
      CHECK(resolve_question(spec, s, r, idx) == *oracle::resolve(spec, s, r, facts));
    }
    QuestionTimeSpec during{TimeSpecKind::during_event, std::nullopt, std::string("the event")};
    CHECK(resolve_question(during, s, r, idx) == *oracle::resolve(during, s, r, facts));
  }
}
