#pragma once

// Anytime cost-constrained Monte-Carlo tree search: UCB over the scalarized
// value Q_R - lambda * Q_C with dual ascent on lambda after every simulation.
// The tree is generic over a model providing step(state, action, rng); the
// PACC-specific belief update and episode loop live at the bottom.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "pacc/pomdp.hpp"
#include "pacc/rng.hpp"

namespace pacc {

struct PlannerConfig {
  int n_simulations = 2048;
  double uct_c = 2.0;
  double cost_limit = 0.5;   // c-hat; +infinity disables the constraint
  double gamma = 0.95;
  int max_depth = 30;
  double lambda_init = 1.0;
  double lambda_step = 0.1;  // dual ascent rate kappa
  double lambda_max = 100.0;
  double time_budget_s = 1.0;
  std::uint64_t seed = 0;
  bool constrained = true;   // false: plain POMCP, lambda machinery inert
  int belief_particles = 500;

  void validate() const {
    if (n_simulations < 1) throw std::invalid_argument("PlannerConfig: n_simulations must be >= 1");
    if (uct_c <= 0.0) throw std::invalid_argument("PlannerConfig: uct_c must be positive");
    if (cost_limit < 0.0) throw std::invalid_argument("PlannerConfig: cost_limit must be >= 0");
    if (gamma < 0.0 || gamma >= 1.0) throw std::invalid_argument("PlannerConfig: gamma must be in [0,1)");
    if (max_depth < 1) throw std::invalid_argument("PlannerConfig: max_depth must be >= 1");
    if (lambda_init < 0.0 || lambda_step <= 0.0 || lambda_max <= 0.0)
      throw std::invalid_argument("PlannerConfig: bad lambda parameters");
    if (time_budget_s <= 0.0) throw std::invalid_argument("PlannerConfig: time budget must be positive");
    if (belief_particles < 1) throw std::invalid_argument("PlannerConfig: need at least one particle");
  }
};

struct PlanDiagnostics {
  std::vector<double> root_q_reward;  // per action
  std::vector<double> root_q_cost;
  std::vector<int> root_action_counts;
  double final_lambda = 0.0;
  int simulations = 0;
  double elapsed_s = 0.0;
};

struct PlanResult {
  int action = 0;
  PlanDiagnostics diagnostics;
};

namespace detail {

// Columnar tree storage: per-(node, action) statistics and a child index per
// (node, action, observation). Avoids per-node allocations in the hot loop.
class SearchTree {
 public:
  SearchTree(int n_actions, int n_observations, int reserve_nodes)
      : a_(n_actions), o_(n_observations) {
    visits_.reserve(reserve_nodes);
    n_.reserve(static_cast<std::size_t>(reserve_nodes) * a_);
    qr_.reserve(static_cast<std::size_t>(reserve_nodes) * a_);
    qc_.reserve(static_cast<std::size_t>(reserve_nodes) * a_);
    child_.reserve(static_cast<std::size_t>(reserve_nodes) * a_ * o_);
    root_ = new_node();
  }

  int new_node() {
    visits_.push_back(0);
    n_.insert(n_.end(), a_, 0);
    qr_.insert(qr_.end(), a_, 0.0);
    qc_.insert(qc_.end(), a_, 0.0);
    child_.insert(child_.end(), static_cast<std::size_t>(a_) * o_, -1);
    return static_cast<int>(visits_.size()) - 1;
  }

  int root() const { return root_; }
  int visits(int node) const { return visits_[node]; }
  int count(int node, int a) const { return n_[idx(node, a)]; }
  double q_reward(int node, int a) const { return qr_[idx(node, a)]; }
  double q_cost(int node, int a) const { return qc_[idx(node, a)]; }
  int child(int node, int a, int o) const { return child_[cidx(node, a, o)]; }
  void set_child(int node, int a, int o, int c) { child_[cidx(node, a, o)] = c; }

  void update(int node, int a, double g_reward, double g_cost) {
    ++visits_[node];
    std::size_t i = idx(node, a);
    int n = ++n_[i];
    qr_[i] += (g_reward - qr_[i]) / n;
    qc_[i] += (g_cost - qc_[i]) / n;
  }

  int n_actions() const { return a_; }

 private:
  std::size_t idx(int node, int a) const { return static_cast<std::size_t>(node) * a_ + a; }
  std::size_t cidx(int node, int a, int o) const {
    return (static_cast<std::size_t>(node) * a_ + a) * o_ + o;
  }

  int a_, o_, root_ = 0;
  std::vector<int> visits_;
  std::vector<int> n_;
  std::vector<double> qr_, qc_;
  std::vector<int> child_;
};

// UCB over the scalarized value; untried actions first, in index order.
inline int select_ucb(const SearchTree& tree, int node, double lambda, double uct_c) {
  int n_actions = tree.n_actions();
  for (int a = 0; a < n_actions; ++a)
    if (tree.count(node, a) == 0) return a;
  double log_n = std::log(static_cast<double>(tree.visits(node)));
  int best = 0;
  double best_v = -std::numeric_limits<double>::infinity();
  for (int a = 0; a < n_actions; ++a) {
    double v = tree.q_reward(node, a) - lambda * tree.q_cost(node, a) +
               uct_c * std::sqrt(log_n / tree.count(node, a));
    if (v > best_v) {
      best_v = v;
      best = a;
    }
  }
  return best;
}

// Greedy root action among visited ones; ties go to the lowest index.
inline int greedy_action(const SearchTree& tree, int node, double lambda) {
  int best = -1;
  double best_v = -std::numeric_limits<double>::infinity();
  for (int a = 0; a < tree.n_actions(); ++a) {
    if (tree.count(node, a) == 0) continue;
    double v = tree.q_reward(node, a) - lambda * tree.q_cost(node, a);
    if (best < 0 || v > best_v) {
      best_v = v;
      best = a;
    }
  }
  return best;
}

template <class Model>
std::pair<double, double> rollout(const Model& model, typename Model::State state, int depth,
                                  int max_depth, double gamma, Rng& rng) {
  double g_reward = 0.0, g_cost = 0.0, disc = 1.0;
  int n_actions = model.num_actions();
  for (int d = depth; d < max_depth; ++d) {
    auto result = model.step(state, static_cast<int>(rng.uniform_int(n_actions)), rng);
    g_reward += disc * result.reward;
    g_cost += disc * result.cost;
    if (result.terminal) break;
    disc *= gamma;
    state = result.next;
  }
  return {g_reward, g_cost};
}

template <class Model>
std::pair<double, double> simulate(const Model& model, SearchTree& tree, int node,
                                   typename Model::State state, int depth,
                                   const PlannerConfig& cfg, double lambda, Rng& rng) {
  if (depth >= cfg.max_depth) return {0.0, 0.0};
  int action = select_ucb(tree, node, lambda, cfg.uct_c);
  auto result = model.step(state, action, rng);

  double g_reward = result.reward, g_cost = result.cost;
  if (!result.terminal) {
    int child = tree.child(node, action, result.observation);
    if (child < 0) {
      child = tree.new_node();
      tree.set_child(node, action, result.observation, child);
      auto [r, c] = rollout(model, result.next, depth + 1, cfg.max_depth, cfg.gamma, rng);
      g_reward += cfg.gamma * r;
      g_cost += cfg.gamma * c;
    } else {
      auto [r, c] = simulate(model, tree, child, result.next, depth + 1, cfg, lambda, rng);
      g_reward += cfg.gamma * r;
      g_cost += cfg.gamma * c;
    }
  }
  tree.update(node, action, g_reward, g_cost);
  return {g_reward, g_cost};
}

}  // namespace detail

// One planning decision from the root belief. Each simulation samples a
// particle, descends the tree under scalarized UCB, expands one node, rolls
// out with a uniform-random policy, and backs up reward and cost separately;
// lambda then takes one dual-ascent step toward the cost limit.
template <class Model>
PlanResult plan(std::span<const typename Model::State> belief, const PlannerConfig& config,
                const Model& model) {
  config.validate();
  if (belief.empty()) throw std::invalid_argument("plan: empty belief");
  const int n_actions = model.num_actions();
  const int n_observations = model.num_observations();
  if (n_actions < 1 || n_observations < 1) throw std::invalid_argument("plan: degenerate model");

  using clock = std::chrono::steady_clock;
  const auto t_start = clock::now();
  auto elapsed = [&] { return std::chrono::duration<double>(clock::now() - t_start).count(); };

  detail::SearchTree tree(n_actions, n_observations, std::min(config.n_simulations + 1, 1 << 20));
  Rng rng(config.seed);
  double lambda = config.constrained ? config.lambda_init : 0.0;

  int simulations = 0;
  while (simulations < config.n_simulations) {
    if (elapsed() >= config.time_budget_s) break;
    const auto& state = belief[rng.uniform_int(belief.size())];
    detail::simulate(model, tree, tree.root(), state, 0, config, lambda, rng);
    ++simulations;
    if (config.constrained) {
      int greedy = detail::greedy_action(tree, tree.root(), lambda);
      double over = tree.q_cost(tree.root(), greedy) - config.cost_limit;
      lambda = std::clamp(lambda + config.lambda_step * over, 0.0, config.lambda_max);
    }
  }
  if (simulations == 0)
    throw std::runtime_error("plan: time budget exhausted before completing one simulation");

  PlanResult result;
  result.action = detail::greedy_action(tree, tree.root(), config.constrained ? lambda : 0.0);
  auto& d = result.diagnostics;
  d.root_q_reward.resize(n_actions);
  d.root_q_cost.resize(n_actions);
  d.root_action_counts.resize(n_actions);
  for (int a = 0; a < n_actions; ++a) {
    d.root_q_reward[a] = tree.q_reward(tree.root(), a);
    d.root_q_cost[a] = tree.q_cost(tree.root(), a);
    d.root_action_counts[a] = tree.count(tree.root(), a);
  }
  d.final_lambda = lambda;
  d.simulations = simulations;
  d.elapsed_s = elapsed();
  return result;
}

// ---------------------------------------------------------------------------
// PACC belief tracking and episode loop
// ---------------------------------------------------------------------------

using Belief = std::vector<PaccState>;

inline Belief make_initial_belief(const PaccState& observed, int n_particles) {
  if (n_particles < 1) throw std::invalid_argument("make_initial_belief: need particles");
  Belief belief(n_particles, observed);
  for (int i = 0; i < n_particles; ++i)
    belief[i].intention = static_cast<Intention>(i % kNumIntentions);
  return belief;
}

struct BeliefUpdateInfo {
  int lead_accel_index = -1;
  bool snapped = false;         // inferred acceleration was off the class grid
  bool reinvigorated = false;   // all likelihoods were zero; reset to uniform
};

// Infer the realized lead acceleration from the observed lead-speed change,
// reweight the intention hypotheses by its likelihood under each intention,
// resample to the fixed particle count, and pin all kinematic fields to the
// observation.
inline Belief belief_update(const Belief& belief, int /*action*/, const KinObservation& obs,
                            const PaccModel& model, Rng& rng, BeliefUpdateInfo* info = nullptr) {
  if (belief.empty()) throw std::invalid_argument("belief_update: empty belief");
  const double inferred = (obs.v_lead - belief.front().v_lead) / model.dt;

  const auto& accels = model.intentions.accel_values;
  int nearest = 0;
  double nearest_err = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < accels.size(); ++i) {
    double err = std::abs(inferred - accels[i]);
    if (err < nearest_err) {
      nearest_err = err;
      nearest = static_cast<int>(i);
    }
  }
  bool snapped = nearest_err > 1e-6;

  std::array<double, kNumIntentions> counts{};
  for (const auto& p : belief) counts[static_cast<int>(p.intention)] += 1.0;
  std::array<double, kNumIntentions> weights{};
  double total = 0.0;
  for (int i = 0; i < kNumIntentions; ++i) {
    weights[i] = counts[i] * model.intentions.accel_probs[i][nearest];
    total += weights[i];
  }
  bool reinvigorated = false;
  if (total <= 0.0) {
    weights = {1.0, 1.0, 1.0};
    reinvigorated = true;
  }

  Belief next(belief.size());
  for (auto& p : next) {
    p.v_ego = obs.v_ego;
    p.y_ego = obs.y_ego;
    p.v_lead = obs.v_lead;
    p.y_lead = obs.y_lead;
    p.intention = static_cast<Intention>(rng.categorical(weights));
  }
  if (info) *info = {nearest, snapped, reinvigorated};
  return next;
}

struct EpisodeStep {
  PaccState state;  // post-transition
  int action = 0;
  KinObservation observation;
  double reward = 0.0;
  double cost = 0.0;
  double planning_time_s = 0.0;
  double lambda = 0.0;
  int simulations = 0;
};

struct EpisodeTrajectory {
  PaccState initial_state;
  std::vector<EpisodeStep> steps;
  bool collision = false;
  double total_reward = 0.0;
  double total_cost = 0.0;
  double discounted_reward = 0.0;
  double discounted_cost = 0.0;
  int snapped_observations = 0;
};

// Alternate plan / transition / observe / belief-update until the horizon is
// reached or the gap closes. Deterministic given the seed.
inline EpisodeTrajectory run_episode(const PaccModel& model, const PlannerConfig& config,
                                     std::uint64_t seed) {
  model.validate();
  config.validate();
  Rng env_rng = Rng(seed).derive(0xe4f);
  Rng belief_rng = Rng(seed).derive(0xbe11ef);

  EpisodeTrajectory trajectory;
  PaccState state = model.initial_state(env_rng);
  trajectory.initial_state = state;
  Belief belief = make_initial_belief(state, config.belief_particles);

  double disc = 1.0;
  for (int t = 0;; ++t) {
    auto status = is_terminal(state, t, model.horizon);
    if (status.terminal) {
      trajectory.collision = status.collision;
      break;
    }
    PlannerConfig step_config = config;
    step_config.seed = Rng(seed).derive(0x91a4, static_cast<std::uint64_t>(t) + 1).u64();

    auto t0 = std::chrono::steady_clock::now();
    auto plan_result = plan<PaccModel>(belief, step_config, model);
    double plan_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    auto step = model.step(state, plan_result.action, env_rng);
    state = step.next;

    BeliefUpdateInfo info;
    belief = belief_update(belief, plan_result.action, observe(state), model, belief_rng, &info);
    if (info.snapped) ++trajectory.snapped_observations;

    trajectory.steps.push_back({state, plan_result.action, observe(state), step.reward, step.cost,
                                plan_time, plan_result.diagnostics.final_lambda,
                                plan_result.diagnostics.simulations});
    trajectory.total_reward += step.reward;
    trajectory.total_cost += step.cost;
    trajectory.discounted_reward += disc * step.reward;
    trajectory.discounted_cost += disc * step.cost;
    disc *= config.gamma;
  }
  return trajectory;
}

}  // namespace pacc
