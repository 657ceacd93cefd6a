#pragma once

// Car-following POMDP: continuous ego/lead kinematics with a hidden lead-driver
// intention that dictates the lead acceleration distribution. The reward grid
// comes from learned style weights; a hard cost fires when the gap drops
// below a safety threshold.

#include <array>
#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "pacc/data.hpp"
#include "pacc/irl.hpp"
#include "pacc/rng.hpp"

namespace pacc {

enum class Intention : int { Hesitating = 0, Normal = 1, Aggressive = 2 };
constexpr int kNumIntentions = 3;

struct PaccState {
  double v_ego = 0.0;
  double y_ego = 0.0;
  double v_lead = 0.0;
  double y_lead = 0.0;
  Intention intention = Intention::Normal;

  double gap() const { return y_lead - y_ego; }
};

// Kinematic projection of the state; the intention is hidden by construction.
struct KinObservation {
  double v_ego = 0.0;
  double y_ego = 0.0;
  double v_lead = 0.0;
  double y_lead = 0.0;
};

// Lead acceleration classes and their probability under each intention.
struct IntentionModel {
  std::vector<double> accel_values{-0.5, 0.0, 0.5};  // brake, maintain, accelerate
  std::array<std::vector<double>, kNumIntentions> accel_probs{{
      {0.3, 0.4, 0.3},  // Hesitating
      {0.1, 0.8, 0.1},  // Normal
      {0.4, 0.2, 0.4},  // Aggressive
  }};

  void validate() const {
    if (accel_values.empty()) throw std::invalid_argument("IntentionModel: no acceleration classes");
    for (const auto& row : accel_probs) {
      if (row.size() != accel_values.size())
        throw std::invalid_argument("IntentionModel: probability row size mismatch");
      double total = 0.0;
      for (double p : row) {
        if (p < 0.0) throw std::invalid_argument("IntentionModel: negative probability");
        total += p;
      }
      if (std::abs(total - 1.0) > 1e-9)
        throw std::invalid_argument("IntentionModel: row does not sum to 1");
    }
  }
};

struct RewardGrid {
  RewardWeights normalized_weights;  // expected to span [-1, 1]
  DiscretizationSpec spec;
  double cost_value = 10.0;
  double cost_distance_threshold_m = 2.0;
  double gamma = 0.95;
  double off_grid_reward = -1.0;  // the normalized minimum
};

inline int sample_lead_accel_index(Intention intention, const IntentionModel& model, Rng& rng) {
  const auto& row = model.accel_probs[static_cast<int>(intention)];
  return static_cast<int>(rng.categorical(std::span<const double>(row.data(), row.size())));
}

inline double sample_lead_accel(Intention intention, const IntentionModel& model, Rng& rng) {
  return model.accel_values[sample_lead_accel_index(intention, model, rng)];
}

namespace detail {

// Constant-acceleration update with speed clamped at zero; the position never
// moves backwards.
inline void advance_vehicle(double& v, double& y, double accel, double dt) {
  double v_next = v + accel * dt;
  double advance = v * dt + 0.5 * accel * dt * dt;
  if (v_next < 0.0) v_next = 0.0;
  if (advance < 0.0) advance = 0.0;
  v = v_next;
  y += advance;
}

}  // namespace detail

// One kinematic step with a given lead acceleration (the deterministic part
// of the transition). The hidden intention persists across steps.
inline PaccState step_kinematics(const PaccState& state, double ego_accel, double lead_accel,
                                 double dt) {
  if (dt <= 0.0) throw std::invalid_argument("step_kinematics: dt must be positive");
  PaccState next = state;
  detail::advance_vehicle(next.v_ego, next.y_ego, ego_accel, dt);
  detail::advance_vehicle(next.v_lead, next.y_lead, lead_accel, dt);
  return next;
}

inline PaccState transition(const PaccState& state, double ego_accel, double dt,
                            const IntentionModel& model, Rng& rng) {
  return step_kinematics(state, ego_accel, sample_lead_accel(state.intention, model, rng), dt);
}

inline KinObservation observe(const PaccState& state) {
  return {state.v_ego, state.y_ego, state.v_lead, state.y_lead};
}

// Style reward of the current (speed, gap) cell; the normalized grid minimum
// outside the learned grid.
inline double reward_of_state(const PaccState& state, const RewardGrid& grid) {
  double d = state.gap();
  if (state.v_ego < grid.spec.speed_edges.front() || state.v_ego > grid.spec.speed_edges.back() ||
      d < grid.spec.distance_edges.front() || d > grid.spec.distance_edges.back())
    return grid.off_grid_reward;
  return grid.normalized_weights[discretize_state(state.v_ego, d, grid.spec)];
}

inline double cost_of_state(const PaccState& state, const RewardGrid& grid) {
  return state.gap() < grid.cost_distance_threshold_m ? grid.cost_value : 0.0;
}

struct TerminalStatus {
  bool terminal = false;
  bool collision = false;
};

inline TerminalStatus is_terminal(const PaccState& state, int elapsed_steps, int horizon) {
  if (state.gap() <= 0.0) return {true, true};
  return {elapsed_steps >= horizon, false};
}

// ---------------------------------------------------------------------------
// Planner-facing model. The tree keys observations by the realized lead
// acceleration class: given the previous state, that class is exactly what a
// kinematic observation reveals about the hidden intention.
// ---------------------------------------------------------------------------

struct PaccModel {
  using State = PaccState;

  RewardGrid grid;
  IntentionModel intentions;
  std::vector<double> ego_accels{-0.6, 0.0, 0.6};  // m/s^2
  double dt = 1.0;
  int horizon = 120;
  double init_v_ego = 30.0;
  double init_v_lead = 30.0;
  double init_gap = 40.0;

  int num_actions() const { return static_cast<int>(ego_accels.size()); }
  int num_observations() const { return static_cast<int>(intentions.accel_values.size()); }

  struct StepResult {
    PaccState next;
    int observation = 0;  // lead acceleration class
    double reward = 0.0;
    double cost = 0.0;
    bool terminal = false;
  };

  // Reward and cost are evaluated at the resulting state.
  StepResult step(const PaccState& state, int action, Rng& rng) const {
    int lead_idx = sample_lead_accel_index(state.intention, intentions, rng);
    PaccState next =
        step_kinematics(state, ego_accels[action], intentions.accel_values[lead_idx], dt);
    return {next, lead_idx, reward_of_state(next, grid), cost_of_state(next, grid),
            next.gap() <= 0.0};
  }

  PaccState initial_state(Rng& rng) const {
    PaccState s;
    s.v_ego = init_v_ego;
    s.y_ego = 0.0;
    s.v_lead = init_v_lead;
    s.y_lead = init_gap;
    s.intention = static_cast<Intention>(rng.uniform_int(kNumIntentions));
    return s;
  }

  void validate() const {
    intentions.validate();
    if (ego_accels.empty()) throw std::invalid_argument("PaccModel: no ego actions");
    if (dt <= 0.0) throw std::invalid_argument("PaccModel: dt must be positive");
    if (horizon < 1) throw std::invalid_argument("PaccModel: horizon must be >= 1");
    if (init_gap <= 0.0) throw std::invalid_argument("PaccModel: initial gap must be positive");
  }
};

}  // namespace pacc
