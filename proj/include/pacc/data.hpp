#pragma once

// Car-following data pipeline: trajectory ingestion, event extraction,
// 3-second aggregation, grid discretization and the synthetic demonstration
// generator used in place of recorded fleet data.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "pacc/rng.hpp"

namespace pacc {

constexpr double kSamplePeriodS = 0.1;          // 10 Hz recording
constexpr double kMaxSampleGapS = 0.25;         // at most one dropped sample
constexpr double kMinEventDurationS = 30.0;
constexpr double kMaxLeadDistanceM = 120.0;     // beyond this: free driving
constexpr double kMinEgoSpeedMps = 18.0;
constexpr double kMaxEgoSpeedMps = 43.0;
constexpr int kSamplesPerWindow = 30;           // 3 s at 10 Hz

struct RawSample {
  double timestamp_s = 0.0;
  double ego_speed_mps = 0.0;
  double ego_accel_mps2 = 0.0;
  std::optional<double> rel_distance_m;  // empty: no lead vehicle in range
  std::optional<double> rel_speed_mps;

  bool has_lead() const { return rel_distance_m.has_value(); }
};

struct Trajectory {
  std::string driver_id;
  std::vector<RawSample> samples;
};

struct CarFollowingEvent {
  std::string driver_id;
  std::vector<RawSample> samples;

  double duration_s() const { return static_cast<double>(samples.size()) * kSamplePeriodS; }
};

struct AggregatedPoint {
  double speed_mps = 0.0;
  double distance_m = 0.0;
  double accel_mps2 = 0.0;
};

struct DiscretizationSpec {
  std::array<double, 6> speed_edges{18.0, 23.0, 28.0, 33.0, 38.0, 43.0};
  std::array<double, 6> distance_edges{0.0, 24.0, 48.0, 72.0, 96.0, 120.0};
  std::array<double, 4> accel_edges{-1.46, -0.18, 0.18, 1.46};

  static constexpr int n_speed_bins = 5;
  static constexpr int n_distance_bins = 5;
  static constexpr int n_states = 25;
  static constexpr int n_actions = 5;
};

struct DiscreteStep {
  int state_index = 0;   // 5 * speed_bin + distance_bin, in [0, 24]
  int action_index = 0;  // 0 HighBrake .. 4 HighAccel
};

// Inputs of the synthetic demonstration generator. Noise SDs control the
// spread of a driver's operating point around the preferred cell center;
// policy_temperature scales the white acceleration noise of the controller.
struct DriverProfile {
  int preferred_state_index = 12;
  double speed_noise_sd = 1.2;   // m/s
  double gap_noise_sd = 6.0;     // m
  double policy_temperature = 0.6;
};

namespace detail {

// Bin index for half-open intervals [e_i, e_{i+1}), top edge inclusive.
template <std::size_t N>
inline int low_inclusive_bin(double x, const std::array<double, N>& edges, const char* what) {
  if (!(x >= edges.front() && x <= edges.back()))
    throw std::out_of_range(std::string(what) + " out of range: " + std::to_string(x));
  if (x == edges.back()) return static_cast<int>(N) - 2;
  int lo = 0;
  for (std::size_t i = 1; i + 1 < N; ++i)
    if (x >= edges[i]) lo = static_cast<int>(i);
  return lo;
}

}  // namespace detail

inline int discretize_state(double speed_mps, double distance_m, const DiscretizationSpec& spec = {}) {
  int sb = detail::low_inclusive_bin(speed_mps, spec.speed_edges, "speed");
  int db = detail::low_inclusive_bin(distance_m, spec.distance_edges, "distance");
  return DiscretizationSpec::n_distance_bins * sb + db;
}

// Acceleration classes with right-inclusive boundaries:
//   0 HighBrake (<= -1.46), 1 MildBrake, 2 Minimal, 3 MildAccel, 4 HighAccel (> 1.46).
inline int classify_action(double accel_mps2, const DiscretizationSpec& spec = {}) {
  if (!std::isfinite(accel_mps2))
    throw std::invalid_argument("classify_action: non-finite acceleration");
  int a = 0;
  while (a < static_cast<int>(spec.accel_edges.size()) && accel_mps2 > spec.accel_edges[a]) ++a;
  return a;
}

// Center of the (speed, distance) cell of a state index.
inline std::pair<double, double> state_cell_center(int state_index, const DiscretizationSpec& spec = {}) {
  if (state_index < 0 || state_index >= DiscretizationSpec::n_states)
    throw std::out_of_range("state_cell_center: bad state index");
  int sb = state_index / DiscretizationSpec::n_distance_bins;
  int db = state_index % DiscretizationSpec::n_distance_bins;
  double v = 0.5 * (spec.speed_edges[sb] + spec.speed_edges[sb + 1]);
  double d = 0.5 * (spec.distance_edges[db] + spec.distance_edges[db + 1]);
  return {v, d};
}

// ---------------------------------------------------------------------------
// Trajectory CSV ingestion
//
// Schema (header required):
//   driver_id,timestamp_s,ego_speed_mps,ego_accel_mps2,rel_distance_m,rel_speed_mps
// Missing lead vehicle is encoded as an empty rel_distance_m field. Rows are
// partitioned by driver; a time gap above kMaxSampleGapS starts a new
// trajectory block for that driver.
// ---------------------------------------------------------------------------

namespace detail {

inline std::vector<std::string> split_csv_row(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream ss(line);
  while (std::getline(ss, field, ',')) out.push_back(field);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

inline double parse_double(const std::string& s, std::size_t row, const char* what) {
  try {
    std::size_t pos = 0;
    double v = std::stod(s, &pos);
    if (pos != s.size()) throw std::invalid_argument("trailing characters");
    return v;
  } catch (const std::exception&) {
    throw std::runtime_error("row " + std::to_string(row) + ": malformed " + what + " '" + s + "'");
  }
}

}  // namespace detail

inline std::vector<Trajectory> load_trajectories(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open trajectory file: " + path);

  std::string line;
  if (!std::getline(in, line)) return {};
  if (line.size() && line.back() == '\r') line.pop_back();
  const std::string expected = "driver_id,timestamp_s,ego_speed_mps,ego_accel_mps2,rel_distance_m,rel_speed_mps";
  if (line != expected)
    throw std::runtime_error("unexpected CSV header: '" + line + "'");

  struct PerDriver {
    std::vector<Trajectory> blocks;
    double last_t = 0.0;
    bool any = false;
  };
  std::map<std::string, PerDriver> drivers;
  std::vector<std::string> driver_order;

  std::size_t row = 1;  // header was row 1
  while (std::getline(in, line)) {
    ++row;
    if (line.size() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto fields = detail::split_csv_row(line);
    if (fields.size() != 6)
      throw std::runtime_error("row " + std::to_string(row) + ": expected 6 fields, got " +
                               std::to_string(fields.size()));
    RawSample s;
    s.timestamp_s = detail::parse_double(fields[1], row, "timestamp_s");
    s.ego_speed_mps = detail::parse_double(fields[2], row, "ego_speed_mps");
    s.ego_accel_mps2 = detail::parse_double(fields[3], row, "ego_accel_mps2");
    if (!fields[4].empty()) s.rel_distance_m = detail::parse_double(fields[4], row, "rel_distance_m");
    if (!fields[5].empty()) s.rel_speed_mps = detail::parse_double(fields[5], row, "rel_speed_mps");
    if (s.has_lead() && *s.rel_distance_m <= 0.0)
      throw std::runtime_error("row " + std::to_string(row) + ": rel_distance_m must be positive");

    auto [it, inserted] = drivers.try_emplace(fields[0]);
    if (inserted) driver_order.push_back(fields[0]);
    PerDriver& pd = it->second;
    if (pd.any && s.timestamp_s <= pd.last_t)
      throw std::runtime_error("row " + std::to_string(row) + ": out-of-order timestamp for driver " + fields[0]);
    if (!pd.any || s.timestamp_s - pd.last_t > kMaxSampleGapS) {
      pd.blocks.push_back(Trajectory{fields[0], {}});
    }
    pd.blocks.back().samples.push_back(s);
    pd.last_t = s.timestamp_s;
    pd.any = true;
  }

  std::vector<Trajectory> out;
  for (const auto& id : driver_order)
    for (auto& block : drivers[id].blocks) out.push_back(std::move(block));
  return out;
}

inline void write_trajectories_csv(const std::vector<Trajectory>& trajectories, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write trajectory file: " + path);
  out << "driver_id,timestamp_s,ego_speed_mps,ego_accel_mps2,rel_distance_m,rel_speed_mps\n";
  out.precision(9);
  for (const auto& tr : trajectories) {
    for (const auto& s : tr.samples) {
      out << tr.driver_id << ',' << s.timestamp_s << ',' << s.ego_speed_mps << ',' << s.ego_accel_mps2 << ',';
      if (s.rel_distance_m) out << *s.rel_distance_m;
      out << ',';
      if (s.rel_speed_mps) out << *s.rel_speed_mps;
      out << '\n';
    }
  }
}

// ---------------------------------------------------------------------------
// Event extraction and aggregation
// ---------------------------------------------------------------------------

namespace detail {

inline bool car_following_sample(const RawSample& s) {
  return s.has_lead() && *s.rel_distance_m > 0.0 && *s.rel_distance_m < kMaxLeadDistanceM &&
         s.ego_speed_mps >= kMinEgoSpeedMps && s.ego_speed_mps <= kMaxEgoSpeedMps;
}

}  // namespace detail

// Maximal contiguous runs where the ego follows a lead closer than 120 m at a
// speed inside [18, 43] m/s, kept only when they span at least 30 s. Runs are
// also split at sampling gaps larger than kMaxSampleGapS.
inline std::vector<CarFollowingEvent> extract_events(const Trajectory& trajectory,
                                                     const DiscretizationSpec& = {}) {
  std::vector<CarFollowingEvent> events;
  CarFollowingEvent current{trajectory.driver_id, {}};
  auto flush = [&]() {
    if (current.duration_s() >= kMinEventDurationS) events.push_back(current);
    current.samples.clear();
  };
  for (const auto& s : trajectory.samples) {
    if (!current.samples.empty() && s.timestamp_s <= current.samples.back().timestamp_s)
      throw std::invalid_argument("extract_events: trajectory not time-ordered");
    bool gap = !current.samples.empty() &&
               s.timestamp_s - current.samples.back().timestamp_s > kMaxSampleGapS;
    if (gap || !detail::car_following_sample(s)) {
      flush();
      if (!gap && !detail::car_following_sample(s)) {
        // the violating sample itself belongs to no event
        continue;
      }
    }
    if (detail::car_following_sample(s)) current.samples.push_back(s);
  }
  flush();
  return events;
}

// Means over consecutive non-overlapping 3 s windows; a trailing partial
// window is dropped.
inline std::vector<AggregatedPoint> aggregate(const CarFollowingEvent& event) {
  std::vector<AggregatedPoint> points;
  std::size_t n_windows = event.samples.size() / kSamplesPerWindow;
  points.reserve(n_windows);
  for (std::size_t w = 0; w < n_windows; ++w) {
    AggregatedPoint p;
    for (std::size_t i = 0; i < kSamplesPerWindow; ++i) {
      const RawSample& s = event.samples[w * kSamplesPerWindow + i];
      p.speed_mps += s.ego_speed_mps;
      p.distance_m += s.rel_distance_m.value();
      p.accel_mps2 += s.ego_accel_mps2;
    }
    p.speed_mps /= kSamplesPerWindow;
    p.distance_m /= kSamplesPerWindow;
    p.accel_mps2 /= kSamplesPerWindow;
    points.push_back(p);
  }
  return points;
}

inline std::vector<AggregatedPoint> aggregate_all(const std::vector<CarFollowingEvent>& events) {
  std::vector<AggregatedPoint> points;
  for (const auto& e : events) {
    auto p = aggregate(e);
    points.insert(points.end(), p.begin(), p.end());
  }
  return points;
}

// ---------------------------------------------------------------------------
// Synthetic demonstration generator
//
// The ego driver is a Boltzmann-rational controller for the planted style:
// soft value iteration on a (speed, gap, closing-speed) lattice yields
// Q-values of the discounted style reward, and once per 3 s window the driver
// samples an acceleration class from exp(Q / policy_temperature), then tracks
// that class's representative acceleration with Gaussian noise. The lead
// vehicle cruises at a per-event speed with a bounded random-walk
// acceleration in [-0.5, 0.5] m/s^2. Recorded accelerations are the effective
// (post-clamp) ones so the samples stay kinematically consistent.
// ---------------------------------------------------------------------------

// Style preference decay per grid-cell distance from the preferred cell; the
// single constant keeps the generator and planted ground-truth styles in
// agreement.
constexpr double kStylePreferenceDecay = 0.9;

// Planted style values per state: exponential decay of the L1 bin distance
// from the preferred cell, affinely mapped onto [-1, 1]. This is the ground
// truth that demonstrations generated from the profile encode.
// Preferences are local: beyond this L1 bin distance every state is equally
// disliked and the normalized style sits at its minimum.
constexpr double kStylePreferenceRadius = 3.0;

inline std::array<double, 25> planted_style_values(int preferred_state_index) {
  if (preferred_state_index < 0 || preferred_state_index >= DiscretizationSpec::n_states)
    throw std::out_of_range("planted_style_values: bad state index");
  int sb0 = preferred_state_index / 5, db0 = preferred_state_index % 5;
  std::array<double, 25> w{};
  double lo = 1.0, hi = 0.0;
  for (int s = 0; s < 25; ++s) {
    double l1 = std::abs(s / 5 - sb0) + std::abs(s % 5 - db0);
    w[s] = std::exp(-kStylePreferenceDecay * std::min(l1, kStylePreferenceRadius));
    lo = std::min(lo, w[s]);
    hi = std::max(hi, w[s]);
  }
  for (double& v : w) v = -1.0 + 2.0 * (v - lo) / (hi - lo);
  return w;
}

struct SynthesisTuning {
  double class_accels[5] = {-1.7, -0.8, 0.0, 0.8, 1.7};  // representative accel per class
  double accel_noise_sd = 0.12;       // ego white noise while tracking a class
  double lead_pull_per_window = 0.3;  // fraction of the cruise-speed error removed per 3 s
  double lead_wander_sd = 0.8;        // lead speed change per window, m/s
  double closing_speed_sd = 1.1;      // stationary closing-speed spread the driver plans under
  double start_gap_sd = 12.0;         // episode initial-gap spread, m
  double start_speed_sd = 2.0;        // episode initial ego-speed spread, m/s
  int decision_interval = 30;         // samples between acceleration-class choices
  double min_event_duration_s = 33.0;
  double max_event_duration_s = 48.0;
  double expert_gamma = 0.9;          // discount of the driver's planning objective
};

// Boltzmann-rational driver for one planted style. The policy is the fixed
// point of pi = softmax(Q / tau) where Q is the expected discounted style
// reward under pi itself, computed on a (speed, gap) lattice with the
// closing speed treated as exogenous noise. Depending only on the observed
// (speed, gap) keeps the demonstrated actions conditionally independent of
// the lead's hidden motion, which is what the downstream reward estimator
// assumes.
class StylePolicy {
 public:
  StylePolicy(int preferred_state_index, double policy_temperature,
              const DiscretizationSpec& spec = {}, const SynthesisTuning& tuning = {})
      : spec_(spec), tau_(policy_temperature), style_(planted_style_values(preferred_state_index)) {
    if (tau_ <= 0.0) throw std::invalid_argument("StylePolicy: temperature must be positive");
    std::copy(std::begin(tuning.class_accels), std::end(tuning.class_accels), class_accels_.begin());
    build(tuning);
  }

  // Boltzmann action probabilities at a (possibly off-lattice) point.
  std::array<double, 5> action_probs(double v, double d) const {
    std::array<double, 5> q;
    for (int a = 0; a < 5; ++a) q[a] = interpolate(q_, v, d, a, 5);
    double z = *std::max_element(q.begin(), q.end());
    std::array<double, 5> p;
    double total = 0.0;
    for (int a = 0; a < 5; ++a) {
      p[a] = std::exp((q[a] - z) / tau_);
      total += p[a];
    }
    for (double& x : p) x /= total;
    return p;
  }

  int sample_action(double v, double d, Rng& rng) const {
    auto p = action_probs(v, d);
    return static_cast<int>(rng.categorical(std::span<const double>(p.data(), p.size())));
  }

  const std::array<double, 25>& style() const { return style_; }

 private:
  static constexpr int kNv = 26, kNd = 41;

  double cell_reward(double v, double d) const {
    int sb = detail::low_inclusive_bin(std::clamp(v, spec_.speed_edges.front(), spec_.speed_edges.back()),
                                       spec_.speed_edges, "speed");
    int db = detail::low_inclusive_bin(
        std::clamp(d, spec_.distance_edges.front(), spec_.distance_edges.back()),
        spec_.distance_edges, "distance");
    return style_[5 * sb + db];
  }

  void build(const SynthesisTuning& tuning) {
    dv_ = (spec_.speed_edges.back() - spec_.speed_edges.front()) / (kNv - 1);
    dd_ = (spec_.distance_edges.back() - spec_.distance_edges.front()) / (kNd - 1);
    const double window = kSamplesPerWindow * kSamplePeriodS;
    const double gamma = tuning.expert_gamma;

    // closing-speed quadrature matching its stationary variance
    const double eps = tuning.closing_speed_sd * std::sqrt(2.0);
    const std::array<double, 3> noise{-eps, 0.0, eps};
    const std::array<double, 3> noise_p{0.25, 0.5, 0.25};

    q_.assign(static_cast<std::size_t>(kNv) * kNd * 5, 0.0);
    std::vector<double> value(static_cast<std::size_t>(kNv) * kNd, 0.0);
    std::vector<double> next(value.size());

    for (int sweep = 0; sweep < 140; ++sweep) {
      for (int i = 0; i < kNv; ++i)
        for (int j = 0; j < kNd; ++j) {
          double v = spec_.speed_edges.front() + i * dv_;
          double d = spec_.distance_edges.front() + j * dd_;
          double r_here = cell_reward(v, d);
          double z = -std::numeric_limits<double>::infinity();
          std::array<double, 5> q_here;
          for (int a = 0; a < 5; ++a) {
            double acc = tuning.class_accels[a];
            double v_next = std::clamp(v + acc * window, spec_.speed_edges.front(),
                                       spec_.speed_edges.back());
            double applied = (v_next - v) / window;  // clamped acceleration
            double ev = 0.0;
            for (int n = 0; n < 3; ++n) {
              double d_next = std::clamp(d + noise[n] * window - 0.5 * applied * window * window,
                                         spec_.distance_edges.front(), spec_.distance_edges.back());
              ev += noise_p[n] * interpolate(value, v_next, d_next, 0, 1);
            }
            q_here[a] = r_here + gamma * ev;
            q_[(static_cast<std::size_t>(i) * kNd + j) * 5 + a] = q_here[a];
            z = std::max(z, q_here[a]);
          }
          double total = 0.0, v_pi = 0.0;
          for (int a = 0; a < 5; ++a) total += std::exp((q_here[a] - z) / tau_);
          for (int a = 0; a < 5; ++a) v_pi += std::exp((q_here[a] - z) / tau_) / total * q_here[a];
          next[static_cast<std::size_t>(i) * kNd + j] = v_pi;
        }
      value.swap(next);
    }
  }

  double interpolate(const std::vector<double>& table, double v, double d, int a, int stride) const {
    auto locate = [](double x, double x0, double step, int n) {
      double t = (x - x0) / step;
      int i = std::clamp(static_cast<int>(t), 0, n - 2);
      return std::pair<int, double>{i, std::clamp(t - i, 0.0, 1.0)};
    };
    auto [i, fi] = locate(v, spec_.speed_edges.front(), dv_, kNv);
    auto [j, fj] = locate(d, spec_.distance_edges.front(), dd_, kNd);
    double out = 0.0;
    for (int bi = 0; bi < 2; ++bi)
      for (int bj = 0; bj < 2; ++bj) {
        double w = (bi ? fi : 1 - fi) * (bj ? fj : 1 - fj);
        out += w * table[(static_cast<std::size_t>(i + bi) * kNd + (j + bj)) * stride + a];
      }
    return out;
  }

  DiscretizationSpec spec_;
  double tau_;
  std::array<double, 25> style_;
  std::array<double, 5> class_accels_{};
  double dv_ = 0.0, dd_ = 0.0;
  std::vector<double> q_;
};

inline void validate(const DriverProfile& profile) {
  if (profile.speed_noise_sd <= 0.0 || profile.gap_noise_sd <= 0.0)
    throw std::invalid_argument("synthesize_driver: noise SDs must be positive");
  if (profile.policy_temperature <= 0.0)
    throw std::invalid_argument("synthesize_driver: policy_temperature must be positive");
  if (profile.preferred_state_index < 0 || profile.preferred_state_index >= DiscretizationSpec::n_states)
    throw std::invalid_argument("synthesize_driver: bad preferred_state_index");
}

// The policy-reusing overload: building a StylePolicy dominates the cost, so
// callers generating several drivers of one style should share it.
inline std::vector<CarFollowingEvent> synthesize_driver(const DriverProfile& profile,
                                                        const StylePolicy& policy, int n_events,
                                                        std::uint64_t seed,
                                                        const DiscretizationSpec& spec = {},
                                                        const SynthesisTuning& tuning = {}) {
  if (n_events < 1) throw std::invalid_argument("synthesize_driver: n_events must be >= 1");
  validate(profile);

  auto [v_center, d_center] = state_cell_center(profile.preferred_state_index, spec);
  Rng driver_rng(seed);
  const double dt = kSamplePeriodS;
  const double window_s = kSamplesPerWindow * dt;
  // per-sample lead dynamics matching the policy's window-level model: the
  // wander is a per-window acceleration bias so the +-0.5 clamp stays rare
  const double lead_pull_per_s = -std::log(1.0 - tuning.lead_pull_per_window) / window_s;
  const double lead_bias_sd = tuning.lead_wander_sd / window_s;

  std::vector<CarFollowingEvent> events;
  events.reserve(n_events);
  for (int e = 0; e < n_events; ++e) {
    Rng rng = driver_rng.derive(0x5e5e, static_cast<std::uint64_t>(e) + 1);
    int n_windows = static_cast<int>(std::lround(
        rng.uniform(tuning.min_event_duration_s, tuning.max_event_duration_s) / window_s));
    int n_samples = n_windows * kSamplesPerWindow;

    // Event-level variation: the lead cruises off the preferred speed (the
    // driver rationally tracks it), the tolerated gap shifts, and the episode
    // starts away from the preferred cell. Single events are therefore
    // biased views of the style.
    double v_event = std::clamp(v_center + rng.normal(0.0, profile.speed_noise_sd),
                                kMinEgoSpeedMps + 1.0, kMaxEgoSpeedMps - 1.0);
    double dd_event = rng.normal(0.0, profile.gap_noise_sd);

    double v_lead = std::clamp(v_event + rng.normal(0.0, 0.4), kMinEgoSpeedMps + 0.5,
                               kMaxEgoSpeedMps - 0.5);
    double v_ego = std::clamp(v_event + rng.normal(0.0, tuning.start_speed_sd), kMinEgoSpeedMps + 0.5,
                              kMaxEgoSpeedMps - 0.5);
    double gap = std::clamp(d_center + dd_event + rng.normal(0.0, tuning.start_gap_sd), 3.0,
                            kMaxLeadDistanceM - 3.0);
    double a_class = 0.0;
    double lead_bias = 0.0;

    CarFollowingEvent event{"", {}};
    event.samples.reserve(n_samples);
    for (int i = 0; i < n_samples; ++i) {
      if (i % tuning.decision_interval == 0) {
        // the gap axis is queried in shifted coordinates so the tolerated-gap
        // offset moves the point the driver regulates toward
        int cls = policy.sample_action(v_ego, gap - dd_event, rng);
        a_class = tuning.class_accels[cls];
      }
      if (i % kSamplesPerWindow == 0) lead_bias = rng.normal(0.0, lead_bias_sd);

      double a_lead = std::clamp(
          lead_pull_per_s * (v_event - v_lead) + lead_bias + rng.normal(0.0, 0.08), -0.5, 0.5);
      double v_lead_next = std::clamp(v_lead + a_lead * dt, kMinEgoSpeedMps - 2.0,
                                      kMaxEgoSpeedMps + 2.0);
      a_lead = (v_lead_next - v_lead) / dt;

      double a = a_class + rng.normal(0.0, tuning.accel_noise_sd);
      double v_ego_next = std::clamp(v_ego + a * dt, kMinEgoSpeedMps, kMaxEgoSpeedMps);
      double a_eff = (v_ego_next - v_ego) / dt;
      double gap_next = gap + (v_lead - v_ego) * dt + 0.5 * (a_lead - a_eff) * dt * dt;
      gap_next = std::clamp(gap_next, 1.0, kMaxLeadDistanceM - 0.5);

      RawSample s;
      s.timestamp_s = i * dt;
      s.ego_speed_mps = v_ego;
      s.ego_accel_mps2 = a_eff;
      s.rel_distance_m = gap;
      s.rel_speed_mps = v_lead - v_ego;
      event.samples.push_back(s);

      v_ego = v_ego_next;
      v_lead = v_lead_next;
      gap = gap_next;
    }
    events.push_back(std::move(event));
  }
  return events;
}

inline std::vector<CarFollowingEvent> synthesize_driver(const DriverProfile& profile, int n_events,
                                                        std::uint64_t seed,
                                                        const DiscretizationSpec& spec = {},
                                                        const SynthesisTuning& tuning = {}) {
  validate(profile);
  StylePolicy policy(profile.preferred_state_index, profile.policy_temperature, spec, tuning);
  return synthesize_driver(profile, policy, n_events, seed, spec, tuning);
}

}  // namespace pacc
