#pragma once

// Model-free reward learning from discretized car-following demonstrations.
// Q-values are estimated as averaged empirical discounted reward-to-go over
// demonstration occurrences; weights are fit by maximum likelihood under a
// Boltzmann action model.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "pacc/data.hpp"

namespace pacc {

constexpr int kNumStates = DiscretizationSpec::n_states;
constexpr int kNumActions = DiscretizationSpec::n_actions;

struct Demonstration {
  std::vector<DiscreteStep> steps;  // one episode; reward-to-go truncates here
};

struct RewardWeights {
  std::array<double, kNumStates> values{};

  double operator[](int i) const { return values[static_cast<std::size_t>(i)]; }
  double& operator[](int i) { return values[static_cast<std::size_t>(i)]; }

  int argmax() const {
    return static_cast<int>(std::max_element(values.begin(), values.end()) - values.begin());
  }
};

struct IrlConfig {
  double gamma = 0.9;
  double beta = 1.0;
  double learning_rate = 0.05;
  int max_iterations = 500;
  double convergence_tol = 1e-6;
  std::uint64_t seed = 0;
};

inline void validate(const IrlConfig& c) {
  if (c.gamma < 0.0 || c.gamma >= 1.0) throw std::invalid_argument("IrlConfig: gamma must be in [0,1)");
  if (c.beta <= 0.0) throw std::invalid_argument("IrlConfig: beta must be positive");
  if (c.learning_rate <= 0.0) throw std::invalid_argument("IrlConfig: learning_rate must be positive");
  if (c.max_iterations < 1) throw std::invalid_argument("IrlConfig: max_iterations must be >= 1");
  if (c.convergence_tol <= 0.0) throw std::invalid_argument("IrlConfig: convergence_tol must be positive");
}

// Features are state indicators, so the reward of (s, a) is just the weight
// of state s.
inline double reward_of(int state_index, const RewardWeights& weights) {
  if (state_index < 0 || state_index >= kNumStates)
    throw std::out_of_range("reward_of: bad state index");
  return weights[state_index];
}

struct QTable {
  std::array<std::array<double, kNumActions>, kNumStates> q{};
  std::array<std::array<int, kNumActions>, kNumStates> counts{};

  bool visited(int s, int a) const { return counts[s][a] > 0; }
};

namespace detail {

// Mean discounted future state-occupancy per demonstrated (s, a) pair.
// Q(s,a) under weights w is then the dot product occupancy(s,a) . w, which is
// what lets the likelihood be re-evaluated cheaply during optimization.
struct OccupancyTable {
  std::array<std::array<std::array<double, kNumStates>, kNumActions>, kNumStates> mean_occ{};
  std::array<std::array<int, kNumActions>, kNumStates> counts{};
  long total_steps = 0;

  bool visited(int s, int a) const { return counts[s][a] > 0; }
};

inline OccupancyTable build_occupancy(const std::vector<Demonstration>& demos, double gamma) {
  OccupancyTable table;
  std::vector<std::array<double, kNumStates>> tails;
  for (const auto& demo : demos) {
    if (demo.steps.empty()) throw std::invalid_argument("empty demonstration");
    tails.assign(demo.steps.size(), {});
    for (std::size_t t = demo.steps.size(); t-- > 0;) {
      const auto& step = demo.steps[t];
      if (step.state_index < 0 || step.state_index >= kNumStates || step.action_index < 0 ||
          step.action_index >= kNumActions)
        throw std::invalid_argument("demonstration step index out of bounds");
      if (t + 1 < demo.steps.size())
        for (int s = 0; s < kNumStates; ++s) tails[t][s] = gamma * tails[t + 1][s];
      tails[t][step.state_index] += 1.0;
    }
    for (std::size_t t = 0; t < demo.steps.size(); ++t) {
      const auto& step = demo.steps[t];
      auto& acc = table.mean_occ[step.state_index][step.action_index];
      for (int s = 0; s < kNumStates; ++s) acc[s] += tails[t][s];
      table.counts[step.state_index][step.action_index] += 1;
      table.total_steps += 1;
    }
  }
  if (table.total_steps == 0) throw std::invalid_argument("no demonstration steps");
  for (int s = 0; s < kNumStates; ++s)
    for (int a = 0; a < kNumActions; ++a)
      if (table.counts[s][a] > 0)
        for (int m = 0; m < kNumStates; ++m) table.mean_occ[s][a][m] /= table.counts[s][a];
  return table;
}

// Q-values from an occupancy table; unvisited pairs sit one unit below the
// smallest visited value so the softmax never prefers unseen actions.
inline QTable q_from_occupancy(const OccupancyTable& table, const RewardWeights& weights) {
  QTable out;
  double min_visited = std::numeric_limits<double>::infinity();
  for (int s = 0; s < kNumStates; ++s)
    for (int a = 0; a < kNumActions; ++a)
      if (table.visited(s, a)) {
        double q = 0.0;
        for (int m = 0; m < kNumStates; ++m) q += table.mean_occ[s][a][m] * weights[m];
        out.q[s][a] = q;
        out.counts[s][a] = table.counts[s][a];
        min_visited = std::min(min_visited, q);
      }
  for (int s = 0; s < kNumStates; ++s)
    for (int a = 0; a < kNumActions; ++a)
      if (!table.visited(s, a)) out.q[s][a] = min_visited - 1.0;
  return out;
}

// Boltzmann likelihood conditioned on the visited actions of each state.
// Unvisited actions are excluded from the normalizer: their sentinel Q values
// would otherwise couple every state's denominator to the global minimum and
// reward pushing well-visited states down.
inline double log_likelihood_from_q(const QTable& q, const OccupancyTable& table, double beta) {
  double ll = 0.0;
  for (int s = 0; s < kNumStates; ++s) {
    bool any = false;
    double zmax = -std::numeric_limits<double>::infinity();
    for (int a = 0; a < kNumActions; ++a)
      if (table.visited(s, a)) {
        any = true;
        zmax = std::max(zmax, beta * q.q[s][a]);
      }
    if (!any) continue;
    double lse = 0.0;
    for (int a = 0; a < kNumActions; ++a)
      if (table.visited(s, a)) lse += std::exp(beta * q.q[s][a] - zmax);
    lse = zmax + std::log(lse);
    for (int a = 0; a < kNumActions; ++a)
      if (table.visited(s, a)) ll += table.counts[s][a] * (beta * q.q[s][a] - lse);
  }
  return ll;
}

}  // namespace detail

// Empirical Q estimate: for every demonstrated (s, a), the mean over its
// occurrences of the discounted reward-to-go until the episode end.
inline QTable estimate_q(const std::vector<Demonstration>& demos, const RewardWeights& weights,
                         double gamma) {
  if (demos.empty()) throw std::invalid_argument("estimate_q: no demonstrations");
  return detail::q_from_occupancy(detail::build_occupancy(demos, gamma), weights);
}

inline double log_likelihood(const std::vector<Demonstration>& demos, const RewardWeights& weights,
                             const IrlConfig& config) {
  validate(config);
  if (demos.empty()) throw std::invalid_argument("log_likelihood: no demonstrations");
  auto table = detail::build_occupancy(demos, config.gamma);
  return detail::log_likelihood_from_q(detail::q_from_occupancy(table, weights), table, config.beta);
}

struct LearnedReward {
  RewardWeights weights;  // un-normalized
  double log_likelihood = 0.0;
  int iterations = 0;
};

// Gradient ascent on the Boltzmann log-likelihood, starting from zero
// weights. The gradient is a central difference (the min-minus-one rule for
// unvisited pairs puts kinks in the surface where one-sided derivatives
// mislead); the step size is halved whenever a step would decrease the
// likelihood, so accepted iterations are monotone.
inline LearnedReward learn_reward(const std::vector<Demonstration>& demos, const IrlConfig& config) {
  validate(config);
  if (demos.empty()) throw std::invalid_argument("learn_reward: no demonstrations");

  auto table = detail::build_occupancy(demos, config.gamma);
  auto ll_of = [&](const RewardWeights& w) {
    return detail::log_likelihood_from_q(detail::q_from_occupancy(table, w), table, config.beta);
  };

  RewardWeights weights{};
  double ll = ll_of(weights);
  if (!std::isfinite(ll)) throw std::runtime_error("learn_reward: non-finite likelihood at iteration 0");

  const double h = 1e-5;
  auto gradient_at = [&](const RewardWeights& w) {
    std::array<double, kNumStates> grad{};
    RewardWeights probe = w;
    for (int m = 0; m < kNumStates; ++m) {
      probe[m] = w[m] + h;
      double hi = ll_of(probe);
      probe[m] = w[m] - h;
      double lo = ll_of(probe);
      probe[m] = w[m];
      grad[m] = (hi - lo) / (2.0 * h);
    }
    return grad;
  };

  double lr = config.learning_rate;
  int iter = 0;
  for (; iter < config.max_iterations; ++iter) {
    auto grad = gradient_at(weights);

    RewardWeights proposal = weights;
    double ll_new = -std::numeric_limits<double>::infinity();
    bool accepted = false;
    for (int backtrack = 0; backtrack < 60; ++backtrack) {
      for (int m = 0; m < kNumStates; ++m) proposal[m] = weights[m] + lr * grad[m];
      ll_new = ll_of(proposal);
      if (!std::isfinite(ll_new))
        throw std::runtime_error("learn_reward: non-finite likelihood at iteration " + std::to_string(iter));
      if (ll_new >= ll) {
        accepted = true;
        break;
      }
      lr *= 0.5;
    }
    if (!accepted) break;
    double gain = ll_new - ll;
    weights = proposal;
    ll = ll_new;
    lr = std::min(lr * 2.0, config.learning_rate);  // recover from backtracks, never exceed
    if (gain < config.convergence_tol) {
      ++iter;
      break;
    }
  }
  return {weights, ll, iter};
}

// Affine min-max map onto [-1, 1]; preserves the ordering of components.
inline RewardWeights normalize_weights(const RewardWeights& weights) {
  double lo = *std::min_element(weights.values.begin(), weights.values.end());
  double hi = *std::max_element(weights.values.begin(), weights.values.end());
  for (double v : weights.values)
    if (!std::isfinite(v)) throw std::invalid_argument("normalize_weights: non-finite weight");
  if (hi == lo) throw std::invalid_argument("normalize_weights: constant weight vector");
  RewardWeights out;
  for (int m = 0; m < kNumStates; ++m) out[m] = -1.0 + 2.0 * (weights[m] - lo) / (hi - lo);
  return out;
}

// (state, action) sequences of one event per demonstration episode.
inline std::vector<Demonstration> to_demonstrations(const std::vector<CarFollowingEvent>& events,
                                                    const DiscretizationSpec& spec = {}) {
  std::vector<Demonstration> demos;
  demos.reserve(events.size());
  for (const auto& event : events) {
    Demonstration d;
    for (const auto& p : aggregate(event))
      d.steps.push_back({discretize_state(p.speed_mps, p.distance_m, spec),
                         classify_action(p.accel_mps2, spec)});
    if (!d.steps.empty()) demos.push_back(std::move(d));
  }
  return demos;
}

}  // namespace pacc
