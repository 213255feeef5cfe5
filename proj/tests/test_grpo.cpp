#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <numeric>

#include "vidrl/dataset.hpp"
#include "vidrl/grpo.hpp"
#include "vidrl/judge.hpp"

using namespace vidrl;
using Catch::Approx;

namespace {

std::vector<RewardBreakdown> breakdowns(std::initializer_list<double> totals) {
  std::vector<RewardBreakdown> out;
  for (double t : totals) {
    RewardBreakdown r;
    r.total = t;
    out.push_back(r);
  }
  return out;
}

// Random batch over a given policy, for gradient checks.
GroupBatch random_batch(const WindowPolicy& policy, std::mt19937_64& rng, int n) {
  GroupBatch batch;
  for (int k = 0; k < n; ++k) {
    batch.sampled_actions.push_back(policy.sample(rng));
    batch.modulated.push_back(uniform(rng, -2.0, 2.0));
  }
  return batch;
}

}  // namespace

TEST_CASE("group scores are the composite totals") {
  const auto scores = group_scores(breakdowns({2.0, 0.0, 1.5}));
  CHECK(scores == std::vector<double>{2.0, 0.0, 1.5});
  CHECK(group_scores(breakdowns({0.7})) == std::vector<double>{0.7});
  CHECK(group_scores(breakdowns({1.0, 1.0, 1.0})) == std::vector<double>{1.0, 1.0, 1.0});
  CHECK_THROWS_AS(group_scores({}), EmptyGroupError);
}

TEST_CASE("raw advantages mean-center without variance normalization") {
  CHECK(raw_advantages({2.0, 0.0, 1.0}) == std::vector<double>{1.0, -1.0, 0.0});
  CHECK(raw_advantages({3.0, 3.0, 3.0}) == std::vector<double>{0.0, 0.0, 0.0});
  CHECK(raw_advantages({5.0}) == std::vector<double>{0.0});
  CHECK_THROWS_AS(raw_advantages({}), EmptyGroupError);

  SECTION("advantages sum to zero on random groups") {
    std::mt19937_64 rng(9001);
    for (int i = 0; i < 500; ++i) {
      const std::size_t n = 1 + uniform_index(rng, 32);
      std::vector<double> scores;
      for (std::size_t k = 0; k < n; ++k) scores.push_back(uniform(rng, -3.0, 3.0));
      const auto adv = raw_advantages(scores);
      const double sum = std::accumulate(adv.begin(), adv.end(), 0.0);
      CHECK(std::abs(sum) < 1e-9);
    }
  }
}

TEST_CASE("fidelity factor follows the three branches") {
  const AdvantageConfig cfg;  // alpha 0.5, c 1.0, s_min 0.1
  SECTION("tool-free trajectories are untouched") {
    CHECK(fidelity_factor(5.0, 0.9, 0, cfg) == 1.0);
    CHECK(fidelity_factor(-5.0, -0.9, 0, cfg) == 1.0);
  }
  SECTION("positive advantage, positive fidelity boosts") {
    CHECK(fidelity_factor(2.0, 0.5, 1, cfg) == Approx(1.25).margin(1e-15));
  }
  SECTION("negative advantage with clipping") {
    // f = 3 clips to c = 1: max(1 - 0.5, 0.1) = 0.5
    CHECK(fidelity_factor(-1.0, 3.0, 1, cfg) == Approx(0.5).margin(1e-15));
  }
  SECTION("floor binds") {
    AdvantageConfig strong;
    strong.alpha_adv = 2.0;
    // A >= 0 with very negative fidelity: 1 + 2*(-1) = -1 -> floor 0.1
    CHECK(fidelity_factor(1.0, -5.0, 1, strong) == Approx(0.1).margin(1e-15));
    // A < 0 with very positive fidelity: 1 - 2*1 = -1 -> floor 0.1
    CHECK(fidelity_factor(-1.0, 5.0, 1, strong) == Approx(0.1).margin(1e-15));
  }
  SECTION("A = 0 uses the non-negative branch") {
    CHECK(fidelity_factor(0.0, 1.0, 1, cfg) == Approx(1.5).margin(1e-15));
  }
  SECTION("config validation") {
    AdvantageConfig bad;
    bad.floor_s_min = 0.0;
    CHECK_THROWS_AS(fidelity_factor(1.0, 1.0, 1, bad), ConfigError);
  }
}

TEST_CASE("modulated advantages") {
  const AdvantageConfig cfg;
  SECTION("tool-free group is unchanged elementwise") {
    const std::vector<double> adv{1.0, -1.0, 0.0};
    const auto mod = modulated_advantages(adv, {0.5, 0.5, 0.5}, {0, 0, 0}, cfg);
    CHECK(mod == adv);
  }
  SECTION("spec-level hand values") {
    CHECK(modulated_advantages({1.0}, {1.0}, {1}, cfg)[0] == Approx(1.5).margin(1e-15));
    CHECK(modulated_advantages({-1.0}, {1.0}, {1}, cfg)[0] == Approx(-0.5).margin(1e-15));
  }
  SECTION("sign is always preserved") {
    std::mt19937_64 rng(9002);
    for (int i = 0; i < 2000; ++i) {
      AdvantageConfig c;
      c.alpha_adv = uniform(rng, 0.1, 3.0);
      c.clip_c = uniform(rng, 0.2, 2.0);
      c.floor_s_min = uniform(rng, 0.01, 1.0);
      const double a = uniform(rng, -3.0, 3.0);
      const double f = uniform(rng, -3.0, 3.0);
      const int m = u01(rng) < 0.5 ? 1 : 0;
      const double mod = a * fidelity_factor(a, f, m, c);
      if (a > 0) CHECK(mod > 0.0);
      if (a < 0) CHECK(mod < 0.0);
      if (a == 0) CHECK(mod == 0.0);
      // floor bound: |A^| >= |A| * s_min
      CHECK(std::abs(mod) >= std::abs(a) * c.floor_s_min - 1e-12);
    }
  }
  SECTION("monotone in fidelity on both branches") {
    std::mt19937_64 rng(9003);
    for (int i = 0; i < 2000; ++i) {
      double f1 = uniform(rng, -2.0, 2.0);
      double f2 = uniform(rng, -2.0, 2.0);
      if (f1 > f2) std::swap(f1, f2);
      const double a = uniform(rng, -2.0, 2.0);
      const double m1 = a * fidelity_factor(a, f1, 1, cfg);
      const double m2 = a * fidelity_factor(a, f2, 1, cfg);
      // higher fidelity never hurts: boosts gains, softens penalties
      CHECK(m1 <= m2 + 1e-12);
    }
  }
}

TEST_CASE("window policy grid covers the video and softmax normalizes") {
  const WindowPolicy policy = make_window_policy(600.0, 20, 5);
  CHECK(policy.grid.size() == 100);
  const auto p = policy.probs();
  CHECK(std::accumulate(p.begin(), p.end(), 0.0) == Approx(1.0).margin(1e-12));
  double covered_to = 0.0;
  for (const TimeInterval& w : policy.grid) {
    CHECK(w.start >= 0.0);
    CHECK(w.end <= 600.0);
    CHECK(w.start < w.end);
    if (w.start <= covered_to) covered_to = std::max(covered_to, w.end);
  }
  CHECK(covered_to == 600.0);
}

namespace {

struct RolloutFixture {
  SyntheticVideo video;
  QACandidate query;
  RolloutConfig cfg;
  MockJudge judge;

  RolloutFixture() {
    video = generate_video(11, 600.0, 1, 0.1);
    query = make_candidate(video, video.events.front());
    cfg.tool.frame_cap = 64;
  }
};

}  // namespace

TEST_CASE_METHOD(RolloutFixture, "rollout groups are deterministic and well-formed") {
  const WindowPolicy policy = make_window_policy(video.duration, 20, 5);
  const GroupBatch a = rollout_group(policy, video, query, 16, 4242, cfg, judge);
  const GroupBatch b = rollout_group(policy, video, query, 16, 4242, cfg, judge);
  REQUIRE(a.size() == 16);
  CHECK(a.sampled_actions == b.sampled_actions);
  CHECK(a.scores == b.scores);
  CHECK(a.trajectories == b.trajectories);
  const double sum =
      std::accumulate(a.raw_advantages.begin(), a.raw_advantages.end(), 0.0);
  CHECK(std::abs(sum) < 1e-9);
  for (std::size_t k = 0; k < a.size(); ++k) {
    CHECK(a.tool_mask[k] == 1);
    CHECK(a.fidelities[k] == a.rewards[k].r_evidence);
    CHECK(validate_format(a.trajectories[k]));
  }
}

TEST_CASE_METHOD(RolloutFixture, "policy concentrated on the GT window earns full rewards") {
  WindowPolicy policy = make_window_policy(video.duration, 20, 5);
  // add the exact GT window to the grid and put all mass there
  policy.grid.push_back(query.window);
  policy.logits.assign(policy.grid.size(), 0.0);
  policy.logits.back() = 50.0;
  const GroupBatch batch = rollout_group(policy, video, query, 16, 7, cfg, judge);
  const double full_crop = crop_reward(query.window, Supervision::interval(
                                           query.window.start, query.window.end),
                                       cfg.crop_schedule);
  for (std::size_t k = 0; k < batch.size(); ++k) {
    CHECK(batch.rewards[k].r_acc == 1.0);
    CHECK(batch.rewards[k].r_evidence == Approx(full_crop).margin(1e-12));
  }
}

TEST_CASE_METHOD(RolloutFixture, "no-overlap grid saturates the group") {
  // grid entirely before the event window
  WindowPolicy policy;
  const double gs = query.window.start;
  REQUIRE(gs > 10.0);
  for (int i = 0; i < 10; ++i)
    policy.grid.push_back({gs * i / 20.0, gs * i / 20.0 + gs / 40.0});
  policy.logits.assign(policy.grid.size(), 0.0);
  const GroupBatch batch = rollout_group(policy, video, query, 16, 99, cfg, judge);
  for (std::size_t k = 0; k < batch.size(); ++k) {
    CHECK(batch.rewards[k].r_evidence <= 0.0);
    CHECK(batch.raw_advantages[k] == 0.0);  // equal scores center to zero
    CHECK(batch.modulated[k] == 0.0);
  }
}

TEST_CASE_METHOD(RolloutFixture, "ablation switch zeroes the evidence term") {
  RolloutConfig ablated = cfg;
  ablated.evidence_enabled = false;
  const WindowPolicy policy = make_window_policy(video.duration, 20, 5);
  const GroupBatch batch = rollout_group(policy, video, query, 8, 5, ablated, judge);
  for (std::size_t k = 0; k < batch.size(); ++k) {
    CHECK(batch.rewards[k].r_evidence == 0.0);
    CHECK(batch.rewards[k].total == batch.rewards[k].r_acc + batch.rewards[k].r_format);
  }
}

TEST_CASE("grpo_step leaves the policy unchanged on all-zero advantages") {
  WindowPolicy policy = make_window_policy(100.0, 5, 2);
  std::mt19937_64 rng(77);
  GroupBatch batch = random_batch(policy, rng, 8);
  for (double& a : batch.modulated) a = 0.0;
  const WindowPolicy next = grpo_step(policy, policy, batch, 0.1);
  CHECK(next.logits == policy.logits);
}

TEST_CASE("a single positive-advantage window gains logit mass") {
  WindowPolicy policy = make_window_policy(100.0, 5, 2);
  GroupBatch batch;
  batch.sampled_actions = {3};
  batch.modulated = {1.0};
  const WindowPolicy next = grpo_step(policy, policy, batch, 0.1);
  CHECK(next.logits[3] > policy.logits[3]);
  for (std::size_t j = 0; j < next.logits.size(); ++j)
    if (j != 3) CHECK(next.logits[j] < policy.logits[j]);
}

TEST_CASE("analytic gradient matches central finite differences") {
  std::mt19937_64 rng(31337);
  double worst_rel = 0.0;
  for (int trial = 0; trial < 25; ++trial) {
    const int n_windows = 3 + static_cast<int>(uniform_index(rng, 8));
    WindowPolicy old_policy = make_window_policy(100.0, n_windows, 1);
    for (double& z : old_policy.logits) z = uniform(rng, -1.0, 1.0);
    old_policy.temperature = uniform(rng, 0.5, 2.0);
    WindowPolicy policy = old_policy;
    for (double& z : policy.logits) z += uniform(rng, -0.3, 0.3);

    const GroupBatch batch = random_batch(old_policy, rng, 6);
    const auto analytic = grpo_gradient(policy, old_policy, batch);

    const double h = 1e-5;
    for (std::size_t j = 0; j < policy.logits.size(); ++j) {
      WindowPolicy plus = policy, minus = policy;
      plus.logits[j] += h;
      minus.logits[j] -= h;
      const double fd =
          (grpo_objective(plus, old_policy, batch) - grpo_objective(minus, old_policy, batch)) /
          (2.0 * h);
      const double rel = std::abs(analytic[j] - fd) / std::max(1.0, std::abs(fd));
      worst_rel = std::max(worst_rel, rel);
    }
  }
  CHECK(worst_rel < 1e-6);
}

TEST_CASE("objective ratios with mismatched grids or zero probabilities fail loudly") {
  WindowPolicy a = make_window_policy(100.0, 4, 1);
  WindowPolicy b = make_window_policy(100.0, 5, 1);
  GroupBatch batch;
  batch.sampled_actions = {0};
  batch.modulated = {1.0};
  CHECK_THROWS_AS(grpo_objective(a, b, batch), DomainError);
  CHECK_THROWS_AS(grpo_step(a, a, batch, -1.0), ConfigError);
}

TEST_CASE("prob mass on the GT window sums matching grid probabilities") {
  WindowPolicy policy;
  policy.grid = {{0, 10}, {0, 12}, {50, 60}};
  policy.logits = {0.0, 0.0, 0.0};
  // windows 0 and 1 overlap [0,10] heavily; window 2 not at all
  const double mass = prob_mass_on_window(policy, {0, 10}, 0.5);
  CHECK(mass == Approx(2.0 / 3.0).margin(1e-12));
}
