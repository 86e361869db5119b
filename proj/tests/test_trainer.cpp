#include <doctest.h>

#include <cmath>

#include "fixtures.hpp"
#include "tsqa/error.hpp"
#include "tsqa/trainer.hpp"

using namespace tsqa;

TEST_CASE("compute_gae") {
  SUBCASE("one-step episodes") {
    const auto g = compute_gae({1.0, 0.0, 2.0}, {0.5, 0.5, 0.5}, 0.99, 0.95);
    CHECK(g.raw_advantages == std::vector<double>{0.5, -0.5, 1.5});
    CHECK(g.returns == std::vector<double>{1.0, 0.0, 2.0});
    const double sd = std::sqrt(2.0 / 3.0);
    CHECK(g.advantages[0] == doctest::Approx(0.0));
    CHECK(g.advantages[1] == doctest::Approx(-1.0 / sd));
    CHECK(g.advantages[2] == doctest::Approx(1.0 / sd));
  }
  SUBCASE("two-step episode") {
    const auto g = compute_gae({1.0, 1.0}, {0.0, 0.0}, {false, true}, 0.99, 0.95);
    CHECK(g.raw_advantages[1] == doctest::Approx(1.0));
    CHECK(g.raw_advantages[0] == doctest::Approx(1.9405));
    CHECK(g.returns[0] == doctest::Approx(1.9405));
  }
  SUBCASE("constant advantages standardize to zero") {
    const auto g = compute_gae({1.0, 1.0, 1.0}, {0.0, 0.0, 0.0}, 0.99, 0.95);
    CHECK(g.advantages == std::vector<double>{0.0, 0.0, 0.0});
  }
  CHECK_THROWS_AS(compute_gae({1.0}, {0.0, 0.0}, 0.99, 0.95), ShapeError);
  CHECK(compute_gae({}, {}, 0.99, 0.95).advantages.empty());
}

TEST_CASE("adaptive KL controller") {
  PPOConfig c;
  CHECK(adaptive_kl_update(1.0, 12.0, c, 256) == doctest::Approx(1.00512));
  CHECK(adaptive_kl_update(1.0, 0.0, c, 256) == doctest::Approx(0.99488));
  CHECK(adaptive_kl_update(1.0, 6.0, c, 256) == 1.0);
  CHECK(adaptive_kl_update(0.5, 6.6, c, 10000) == doctest::Approx(0.55));
  CHECK_THROWS_AS(adaptive_kl_update(0.0, 1.0, c, 1), Error);
}

TEST_CASE("config validation") {
  PPOConfig p;
  p.cliprange = 0;
  CHECK_THROWS_AS(p.validate(), ValidationError);
  SFTConfig s;
  s.batch_size = 0;
  CHECK_THROWS_AS(s.validate(), ValidationError);
  CHECK(reward_kind_from_string("em") == RewardKind::exact_match);
  CHECK(reward_kind_from_string(to_string(RewardKind::contrastive)) == RewardKind::contrastive);
  CHECK_THROWS_AS(reward_kind_from_string("bleu"), Error);
}

TEST_CASE("AdamW") {
  const PolicyDims dims{3, 2, 2, FusionMode::add};
  PolicyParams p = PolicyParams::zeros(dims);
  PolicyParams g = PolicyParams::zeros(dims);
  g.b2[0] = 4.0;
  AdamW opt(dims, 0.1, 0.0);
  opt.step(p, g);
  // First bias-corrected step moves by lr * sign(g).
  CHECK(p.b2[0] == doctest::Approx(-0.1).epsilon(1e-6));
  CHECK(p.b1.isZero(0));

  PolicyParams q = PolicyParams::zeros(dims);
  q.b1.setConstant(1.0);
  AdamW decay(dims, 0.1, 0.5);
  decay.step(q, PolicyParams::zeros(dims));
  CHECK(q.b1[0] == doctest::Approx(0.95));
}

TEST_CASE("PPO gradients") {
  const auto& s = fixture::small();
  std::mt19937_64 rng(3);
  const PolicyParams p = init_params(rng, fixture::dims(s));
  PPOConfig c;
  c.vf_coef = 0.0;

  std::vector<Rollout> rollouts;
  for (std::size_t i = 0; i < 16; ++i) {
    Rollout r;
    r.example = i;
    r.action = i % s.train[i].candidates.size();
    r.logprob_old = log_softmax_at(forward(p, s.train[i].encoded).logits, r.action);
    r.advantage = (i % 3 == 0) ? -0.8 : 0.6;
    rollouts.push_back(r);
  }

  SUBCASE("matches REINFORCE at ratio one") {
    PolicyParams gp = PolicyParams::zeros(p.dims), gr = PolicyParams::zeros(p.dims);
    ppo_gradient(p, s.train, rollouts, c, gp);
    reinforce_gradient(p, s.train, rollouts, gr);
    PolicyParams diff = gp;
    diff.add_scaled(gr, -1.0);
    double worst = 0.0;
    diff.for_each_tensor([&](std::string_view, std::span<const double> t) {
      for (double x : t) worst = std::max(worst, std::abs(x));
    });
    CHECK(worst < 1e-12);
  }

  SUBCASE("zero advantages leave the policy untouched") {
    for (auto& r : rollouts) r.advantage = 0.0;
    PolicyParams g = PolicyParams::zeros(p.dims);
    ppo_gradient(p, s.train, rollouts, c, g);
    CHECK(g == PolicyParams::zeros(p.dims));

    RolloutBatch batch{rollouts, 0.05};
    PolicyParams q = p;
    AdamW opt(p.dims, c.learning_rate, 0.0);
    ppo_update(q, opt, batch, s.train, c, rng);
    CHECK(q == p);
  }
}

TEST_CASE("raw_reward") {
  const auto& s = fixture::small();
  RewardScorer scorer{RewardParams{}};
  std::mt19937_64 rng(1);
  for (std::size_t i = 0; i < s.train.size(); ++i) {
    const auto& ex = s.train[i];
    if (ex.record.unanswerable()) continue;
    const double right = raw_reward(ex, *ex.gold_index, RewardKind::contrastive, scorer, 2, rng);
    // A correct answer still pays for negatives closer than the margin.
    CHECK(right >= reward(1.0, RewardParams{}));
    CHECK(raw_reward(ex, *ex.gold_index, RewardKind::exact_match, scorer, 2, rng) == 1.0);
    const std::size_t wrong = (*ex.gold_index + 1) % ex.candidates.size();
    CHECK(raw_reward(ex, wrong, RewardKind::contrastive, scorer, 2, rng) < right);
    CHECK(raw_reward(ex, wrong, RewardKind::exact_match, scorer, 2, rng) == -1.0);
  }
}

TEST_CASE("SFT overfits a single record") {
  const auto& s = fixture::small();
  std::vector<Example> one{s.train[5]};
  SFTConfig c;
  c.epochs = 60;
  c.batch_size = 1;
  c.learning_rate = 0.05;
  const auto r = train_sft(one, one, c, fixture::dims(s));
  CHECK(predict(r.params, one[0]) == one[0].record.gold_answers.front());
  CHECK(r.history.size() == 60);
  CHECK(r.history.back().train_loss < r.history.front().train_loss);
}

TEST_CASE("training is deterministic") {
  const auto& s = fixture::small();
  SFTConfig sc;
  sc.epochs = 2;
  const auto a = train_sft(s.train, s.dev, sc, fixture::dims(s));
  const auto b = train_sft(s.train, s.dev, sc, fixture::dims(s));
  CHECK(a.params == b.params);
  CHECK(history_csv(a.history) == history_csv(b.history));
  CHECK(history_csv(a.history).rfind("epoch,train_loss,dev_em,dev_f1\n", 0) == 0);

  PPOConfig pc;
  pc.iterations = 2;
  pc.num_rollouts = 32;
  const auto p1 = train_ppo(s.train, s.dev, a.params, pc, RewardParams{});
  const auto p2 = train_ppo(s.train, s.dev, a.params, pc, RewardParams{});
  CHECK(p1.params == p2.params);
  CHECK(p1.history.size() == 3);
  CHECK(history_csv(p1.history) == history_csv(p2.history));
  CHECK(history_csv(p1.history).rfind("iteration,mean_reward,kl,kl_coef,clip_frac,dev_em,dev_f1\n", 0) == 0);
  CHECK(p1.history[0].dev_em == doctest::Approx(evaluate(s.dev, a.params).em));
  CHECK(evaluate(s.dev, p1.params).em >= p1.history[0].dev_em);
}
