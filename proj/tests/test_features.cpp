#include <doctest.h>

#include <algorithm>
#include <random>

#include "tsqa/error.hpp"
#include "tsqa/temporal_features.hpp"
#include "tsqa/temporal_tagger.hpp"

using namespace tsqa;

namespace {

TemporalMask mask_of(std::vector<std::uint8_t> bits) { return TemporalMask{std::move(bits)}; }

TemporalSpan span(std::size_t a, std::size_t b) { return {a, b, SpanKind::year_point, year_interval(2000)}; }

// Direct transcription of the window definition: i is set iff some set j lies within L.
TemporalMask dilate_brute(const TemporalMask& m, std::size_t L) {
  TemporalMask out{std::vector<std::uint8_t>(m.size(), 0)};
  for (std::size_t i = 0; i < m.size(); ++i)
    for (std::size_t j = 0; j < m.size(); ++j) {
      const std::size_t dist = i > j ? i - j : j - i;
      if (dist <= L && m.bits[j]) out.bits[i] = 1;
    }
  return out;
}

EmbeddingTables tables(std::size_t vocab, std::size_t d, std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  EmbeddingTables t;
  t.text_table = Matrix(static_cast<Eigen::Index>(vocab), static_cast<Eigen::Index>(d));
  t.time_table = Matrix(2, static_cast<Eigen::Index>(d));
  for (Eigen::Index i = 0; i < t.text_table.size(); ++i) t.text_table.data()[i] = n(rng);
  for (Eigen::Index i = 0; i < t.time_table.size(); ++i) t.time_table.data()[i] = n(rng);
  return t;
}

}  // namespace

TEST_CASE("build_mask") {
  CHECK(build_mask(5, {span(2, 3)}) == mask_of({0, 0, 1, 0, 0}));
  CHECK(build_mask(4, {}) == mask_of({0, 0, 0, 0}));
  CHECK(build_mask(6, {span(1, 2), span(4, 5)}) == mask_of({0, 1, 0, 0, 1, 0}));
  CHECK(build_mask(6, {span(1, 3), span(1, 3)}) == build_mask(6, {span(1, 3)}));
  CHECK_THROWS_AS(build_mask(3, {span(2, 4)}), Error);
  TemporalSpan sig{0, 1, SpanKind::signal, std::nullopt};
  CHECK(build_mask(2, {sig}) == mask_of({1, 0}));
}

TEST_CASE("dilate examples") {
  CHECK(dilate(mask_of({0, 0, 1, 0, 0}), 1) == mask_of({0, 1, 1, 1, 0}));
  CHECK(dilate(mask_of({0, 0, 0, 0}), 7) == mask_of({0, 0, 0, 0}));
  CHECK(dilate(mask_of({1, 0, 0, 0, 0}), 10) == mask_of({1, 1, 1, 1, 1}));
  CHECK(dilate(mask_of({}), 3) == mask_of({}));
}

TEST_CASE("dilate properties") {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t n = std::uniform_int_distribution<std::size_t>(0, 64)(rng);
    const std::size_t L = std::uniform_int_distribution<std::size_t>(0, 16)(rng);
    const double density = std::uniform_real_distribution<double>(0.0, 0.3)(rng);
    TemporalMask m{std::vector<std::uint8_t>(n)};
    for (auto& b : m.bits) b = std::bernoulli_distribution(density)(rng) ? 1 : 0;
    const TemporalMask copy = m;
    const TemporalMask out = dilate(m, L);
    CHECK(m == copy);
    CHECK(out == dilate_brute(m, L));
    CHECK(dilate(m, 0) == m);

    TemporalMask rev = m;
    std::reverse(rev.bits.begin(), rev.bits.end());
    TemporalMask out_rev = out;
    std::reverse(out_rev.bits.begin(), out_rev.bits.end());
    CHECK(dilate(rev, L) == out_rev);

    if (n) {
      TemporalMask more = m;
      more.bits[std::uniform_int_distribution<std::size_t>(0, n - 1)(rng)] = 1;
      const TemporalMask out_more = dilate(more, L);
      for (std::size_t i = 0; i < n; ++i) CHECK(out_more.bits[i] >= out.bits[i]);
    }
  }
}

TEST_CASE("concat_masks") {
  CHECK(concat_masks(mask_of({1, 0}), mask_of({0, 1, 1})) == mask_of({1, 0, 0, 1, 1}));
  CHECK(concat_masks(mask_of({}), mask_of({1})) == mask_of({1}));
  CHECK(concat_masks(mask_of({0, 0}), mask_of({0})) == mask_of({0, 0, 0}));
}

TEST_CASE("embed_temporal and fuse") {
  std::mt19937_64 rng(3);
  auto t = tables(6, 4, rng);
  const Matrix e = embed_temporal(mask_of({0, 1}), t);
  CHECK(e.row(0) == t.time_table.row(0));
  CHECK(e.row(1) == t.time_table.row(1));
  CHECK(embed_temporal(mask_of({}), t).rows() == 0);
  const Matrix z = embed_temporal(mask_of({0, 0, 0}), t);
  for (Eigen::Index i = 0; i < 3; ++i) CHECK(z.row(i) == t.time_table.row(0));

  const std::vector<int> ids{1, 2, 1, 5};
  const TemporalMask m = mask_of({0, 1, 0, 1});
  const FusedSequence f = fuse(ids, m, t, 2);
  CHECK(f.question_len == 2);
  CHECK(f.vectors.rows() == 4);
  CHECK(f.vectors.row(1) == t.text_table.row(2) + t.time_table.row(1));
  CHECK(f.vectors.row(0) == f.vectors.row(2));

  SUBCASE("zero time table gives text embeddings") {
    auto t0 = t;
    t0.time_table.setZero();
    const FusedSequence f0 = fuse(ids, m, t0, 2);
    for (std::size_t i = 0; i < ids.size(); ++i)
      CHECK(f0.vectors.row(static_cast<Eigen::Index>(i)) == t.text_table.row(ids[i]));
    CHECK(fuse(ids, m, t0, 2, FusionMode::off).vectors == f0.vectors);
  }
  SUBCASE("linear in the time table") {
    auto t3 = t;
    t3.time_table *= 3.0;
    const FusedSequence f3 = fuse(ids, m, t3, 2);
    const FusedSequence foff = fuse(ids, m, t, 2, FusionMode::off);
    const Matrix lhs = f3.vectors - foff.vectors;
    const Matrix rhs = 3.0 * (f.vectors - foff.vectors);
    CHECK((lhs - rhs).cwiseAbs().maxCoeff() < 1e-12);
  }
  SUBCASE("concat") {
    const FusedSequence fc = fuse(ids, m, t, 2, FusionMode::concat);
    CHECK(fc.vectors.cols() == 8);
    CHECK(fc.vectors.row(3).head(4) == t.text_table.row(5));
    CHECK(fc.vectors.row(3).tail(4) == t.time_table.row(1));
  }
  SUBCASE("errors") {
    const std::vector<int> bad{0, 6};
    CHECK_THROWS_AS(fuse(bad, mask_of({0, 0}), t, 1), Error);
    CHECK_THROWS_AS(fuse(ids, mask_of({0}), t, 1), ShapeError);
  }
}
