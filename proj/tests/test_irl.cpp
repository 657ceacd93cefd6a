#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "pacc/data.hpp"
#include "pacc/irl.hpp"
#include "pacc/metrics.hpp"
#include "pacc/rng.hpp"

using namespace pacc;

namespace {

RewardWeights unit_weight(int feature_m) {  // 1-based feature number
  RewardWeights w{};
  w[feature_m - 1] = 1.0;
  return w;
}

// Brute-force oracle: average discounted reward-to-go per occurrence,
// recomputed forward from every position.
QTable brute_force_q(const std::vector<Demonstration>& demos, const RewardWeights& w, double gamma) {
  std::array<std::array<double, kNumActions>, kNumStates> sum{};
  std::array<std::array<int, kNumActions>, kNumStates> count{};
  for (const auto& demo : demos) {
    for (std::size_t t = 0; t < demo.steps.size(); ++t) {
      double g = 0.0, disc = 1.0;
      for (std::size_t k = t; k < demo.steps.size(); ++k) {
        g += disc * w[demo.steps[k].state_index];
        disc *= gamma;
      }
      sum[demo.steps[t].state_index][demo.steps[t].action_index] += g;
      count[demo.steps[t].state_index][demo.steps[t].action_index] += 1;
    }
  }
  QTable q;
  double min_visited = std::numeric_limits<double>::infinity();
  for (int s = 0; s < kNumStates; ++s)
    for (int a = 0; a < kNumActions; ++a)
      if (count[s][a] > 0) {
        q.q[s][a] = sum[s][a] / count[s][a];
        q.counts[s][a] = count[s][a];
        min_visited = std::min(min_visited, q.q[s][a]);
      }
  for (int s = 0; s < kNumStates; ++s)
    for (int a = 0; a < kNumActions; ++a)
      if (count[s][a] == 0) q.q[s][a] = min_visited - 1.0;
  return q;
}

std::vector<Demonstration> random_demos(int n_demos, int len, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<Demonstration> demos(n_demos);
  for (auto& d : demos)
    for (int t = 0; t < len; ++t)
      d.steps.push_back({static_cast<int>(rng.uniform_int(kNumStates)),
                         static_cast<int>(rng.uniform_int(kNumActions))});
  return demos;
}

}  // namespace

TEST_CASE("reward_of is an indicator dot product") {
  CHECK(reward_of(11, unit_weight(12)) == 1.0);
  CHECK(reward_of(3, RewardWeights{}) == 0.0);
  RewardWeights ramp;
  for (int m = 0; m < 25; ++m) ramp[m] = m + 1;
  CHECK(reward_of(0, ramp) == 1.0);
  CHECK_THROWS_AS(reward_of(25, ramp), std::out_of_range);
}

TEST_CASE("estimate_q on hand-computed episodes") {
  RewardWeights w;
  for (int m = 0; m < 25; ++m) w[m] = 0.1 * (m + 1);

  SECTION("single-step episode equals the immediate reward") {
    std::vector<Demonstration> demos{{{{7, 2}}}};
    auto q = estimate_q(demos, w, 0.9);
    CHECK(q.q[7][2] == Catch::Approx(w[7]));
    CHECK(q.counts[7][2] == 1);
  }

  SECTION("two-step episode discounts the tail") {
    std::vector<Demonstration> demos{{{{3, 1}, {9, 4}}}};
    auto q = estimate_q(demos, w, 0.9);
    CHECK(q.q[3][1] == Catch::Approx(w[3] + 0.9 * w[9]));
    CHECK(q.q[9][4] == Catch::Approx(w[9]));
  }

  SECTION("repeat occurrences average their tails") {
    // occurrences of (5, 0) with reward-to-go 1.0 and 3.0 must average to 2.0
    RewardWeights u{};
    u[5] = 1.0;
    u[6] = 2.0;
    std::vector<Demonstration> demos{{{{5, 0}}}, {{{5, 0}, {6, 1}}}};
    auto q = estimate_q(demos, u, 1.0 - 1e-12);
    CHECK(q.q[5][0] == Catch::Approx(2.0).epsilon(1e-9));
  }

  SECTION("unvisited pairs sit one below the minimum and empty demos throw") {
    std::vector<Demonstration> demos{{{{7, 2}}}};
    auto q = estimate_q(demos, w, 0.9);
    double min_visited = q.q[7][2];
    CHECK(q.q[7][3] == Catch::Approx(min_visited - 1.0));
    CHECK(q.counts[7][3] == 0);
    CHECK_THROWS_AS(estimate_q({}, w, 0.9), std::invalid_argument);
  }
}

TEST_CASE("estimate_q matches the brute-force oracle on random instances") {
  for (std::uint64_t seed : {11ULL, 22ULL, 33ULL}) {
    auto demos = random_demos(4, 50, seed);
    RewardWeights w;
    Rng rng(seed ^ 0xabc);
    for (int m = 0; m < 25; ++m) w[m] = rng.uniform(-2.0, 2.0);
    auto expected = brute_force_q(demos, w, 0.9);
    auto actual = estimate_q(demos, w, 0.9);
    for (int s = 0; s < kNumStates; ++s)
      for (int a = 0; a < kNumActions; ++a) {
        CHECK(actual.q[s][a] == Catch::Approx(expected.q[s][a]).margin(1e-9));
        CHECK(actual.counts[s][a] == expected.counts[s][a]);
      }
  }
}

TEST_CASE("log_likelihood of zero weights is T log(1/5) when all actions are visited") {
  // one state, all five actions demonstrated
  std::vector<Demonstration> demos;
  for (int a = 0; a < kNumActions; ++a) demos.push_back({{{4, a}}});
  IrlConfig config;
  double ll = log_likelihood(demos, RewardWeights{}, config);
  CHECK(ll == Catch::Approx(5.0 * std::log(1.0 / 5.0)));

  // with unvisited actions the demonstrated ones contribute at least log(1/5)
  std::vector<Demonstration> partial{{{{4, 1}, {4, 2}}}};
  double ll_partial = log_likelihood(partial, RewardWeights{}, config);
  CHECK(ll_partial >= 2.0 * std::log(1.0 / 5.0));
  CHECK(ll_partial <= 0.0);
}

TEST_CASE("log_likelihood approaches T log(1/5) as beta goes to zero") {
  auto demos = random_demos(3, 20, 77);
  RewardWeights w;
  Rng rng(5);
  for (int m = 0; m < 25; ++m) w[m] = rng.uniform(-1.0, 1.0);
  IrlConfig config;
  config.beta = 1e-9;
  double total_steps = 60.0;
  CHECK(log_likelihood(demos, w, config) == Catch::Approx(total_steps * std::log(0.2)).epsilon(1e-6));
}

TEST_CASE("log_likelihood tends to zero when the demonstrated action dominates") {
  // single-step demo: the unvisited actions sit exactly one below the
  // demonstrated Q, so the margin dominates once it is much larger than 1/beta
  std::vector<Demonstration> demos{{{{11, 2}}}};
  RewardWeights w = unit_weight(12);
  IrlConfig config;
  config.beta = 30.0;  // margin of 1 >> 1/beta
  double ll = log_likelihood(demos, w, config);
  CHECK(ll < 0.0);
  CHECK(ll > -1e-6);

  // closed form: log softmax with one entry at margin 1 over four at 0
  double expected = -std::log(1.0 + 4.0 * std::exp(-config.beta));
  CHECK(ll == Catch::Approx(expected).margin(1e-12));
}

TEST_CASE("log_likelihood is never positive") {
  for (std::uint64_t seed : {1ULL, 2ULL, 3ULL, 4ULL}) {
    auto demos = random_demos(2, 30, seed);
    RewardWeights w;
    Rng rng(seed);
    for (int m = 0; m < 25; ++m) w[m] = rng.uniform(-3.0, 3.0);
    CHECK(log_likelihood(demos, w, IrlConfig{}) <= 0.0);
  }
}

TEST_CASE("learn_reward concentrates weight on the only visited state") {
  std::vector<Demonstration> demos;
  for (int i = 0; i < 6; ++i) demos.push_back({{{11, 2}, {11, 2}, {11, 3}}});
  auto learned = learn_reward(demos, IrlConfig{});
  CHECK(learned.weights.argmax() == 11);
}

TEST_CASE("learn_reward improves on the zero-weight likelihood and reports it faithfully") {
  auto demos = random_demos(4, 30, 314);
  IrlConfig config;
  double baseline = log_likelihood(demos, RewardWeights{}, config);
  auto learned = learn_reward(demos, config);
  CHECK(learned.log_likelihood >= baseline - 1e-12);
  CHECK(std::isfinite(learned.log_likelihood));
  CHECK(log_likelihood(demos, learned.weights, config) == Catch::Approx(learned.log_likelihood));
}

TEST_CASE("normalize_weights maps min/max to the interval ends") {
  RewardWeights w{};
  w[0] = 0.0;
  w[1] = 5.0;
  for (int m = 2; m < 25; ++m) w[m] = 10.0;
  auto n = normalize_weights(w);
  CHECK(n[0] == Catch::Approx(-1.0));
  CHECK(n[1] == Catch::Approx(0.0));
  CHECK(n[2] == Catch::Approx(1.0));

  SECTION("idempotent on an already-normalized vector") {
    auto again = normalize_weights(n);
    for (int m = 0; m < 25; ++m) CHECK(again[m] == Catch::Approx(n[m]).margin(1e-12));
  }

  SECTION("constant vectors are rejected") {
    RewardWeights c;
    c.values.fill(3.0);
    CHECK_THROWS_AS(normalize_weights(c), std::invalid_argument);
  }
}

TEST_CASE("normalize_weights preserves ranks") {
  Rng rng(2718);
  for (int trial = 0; trial < 5; ++trial) {
    RewardWeights w;
    for (int m = 0; m < 25; ++m) w[m] = rng.uniform(-10.0, 10.0);
    auto n = normalize_weights(w);
    std::vector<double> raw(w.values.begin(), w.values.end());
    std::vector<double> scaled(n.values.begin(), n.values.end());
    CHECK(spearman(raw, scaled) == Catch::Approx(1.0));
    CHECK(n.argmax() == w.argmax());
  }
}

TEST_CASE("scaling weights leaves the greedy action of each state unchanged") {
  auto demos = random_demos(4, 40, 555);
  RewardWeights w;
  Rng rng(556);
  for (int m = 0; m < 25; ++m) w[m] = rng.uniform(-1.0, 1.0);
  RewardWeights w3 = w;
  for (int m = 0; m < 25; ++m) w3[m] *= 3.0;

  auto q1 = estimate_q(demos, w, 0.9);
  auto q3 = estimate_q(demos, w3, 0.9);
  for (int s = 0; s < kNumStates; ++s) {
    int best1 = -1, best3 = -1;
    for (int a = 0; a < kNumActions; ++a) {
      if (!q1.visited(s, a)) continue;
      if (best1 < 0 || q1.q[s][a] > q1.q[s][best1]) best1 = a;
      if (best3 < 0 || q3.q[s][a] > q3.q[s][best3]) best3 = a;
    }
    CHECK(best1 == best3);
  }
}

TEST_CASE("demonstrations derived from events carry one step per aggregated point") {
  DriverProfile profile{11, 1.0, 5.0, 0.5};
  auto events = synthesize_driver(profile, 3, 17);
  auto demos = to_demonstrations(events);
  REQUIRE(demos.size() == events.size());
  for (std::size_t e = 0; e < events.size(); ++e)
    CHECK(demos[e].steps.size() == aggregate(events[e]).size());
}
