#pragma once

// Gaussian mixture modelling of aggregated (speed, distance) samples,
// Monte-Carlo KL-divergence between mixtures, and cluster prediction for
// drivers with limited data.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "pacc/data.hpp"
#include "pacc/irl.hpp"
#include "pacc/kmeans.hpp"
#include "pacc/rng.hpp"

namespace pacc {

using Vec2 = std::array<double, 2>;
using Mat2 = std::array<std::array<double, 2>, 2>;

constexpr double kCovRegularization = 1e-4;  // added to cov diagonals each M-step
constexpr double kDensityFloor = 1e-300;

struct GmmComponent {
  double weight = 1.0;
  Vec2 mean{};
  Mat2 cov{};
};

struct Gmm {
  std::vector<GmmComponent> components;
};

struct KlEstimate {
  double value = 0.0;  // nats
  int n_samples = 0;
  double std_error = 0.0;
  double density_floor = kDensityFloor;
};

struct PredictionOutcome {
  std::string driver_id;
  std::vector<double> kl_values;  // one per cluster, in cluster order
  int predicted_cluster = -1;
  RewardWeights assigned_weights;  // centroid of the predicted cluster
};

namespace detail {

inline double det2(const Mat2& m) { return m[0][0] * m[1][1] - m[0][1] * m[1][0]; }

inline void validate_component(const GmmComponent& c) {
  if (!(c.weight >= 0.0)) throw std::invalid_argument("gmm: negative component weight");
  if (c.cov[0][1] != c.cov[1][0]) throw std::invalid_argument("gmm: covariance not symmetric");
  if (!(c.cov[0][0] > 0.0) || !(det2(c.cov) > 0.0))
    throw std::invalid_argument("gmm: covariance not positive definite");
}

inline double log_gaussian(const Vec2& x, const GmmComponent& c) {
  double dx = x[0] - c.mean[0];
  double dy = x[1] - c.mean[1];
  double det = det2(c.cov);
  // inverse of a symmetric 2x2
  double q = (c.cov[1][1] * dx * dx - 2.0 * c.cov[0][1] * dx * dy + c.cov[0][0] * dy * dy) / det;
  constexpr double log2pi = 1.8378770664093454836;
  return -0.5 * (q + std::log(det)) - log2pi;
}

}  // namespace detail

inline void validate(const Gmm& gmm) {
  if (gmm.components.empty()) throw std::invalid_argument("gmm: no components");
  double total = 0.0;
  for (const auto& c : gmm.components) {
    detail::validate_component(c);
    total += c.weight;
  }
  if (std::abs(total - 1.0) > 1e-9) throw std::invalid_argument("gmm: weights do not sum to 1");
}

inline double log_density(const Gmm& gmm, const Vec2& x) {
  double zmax = -std::numeric_limits<double>::infinity();
  std::vector<double> terms(gmm.components.size());
  for (std::size_t i = 0; i < gmm.components.size(); ++i) {
    const auto& c = gmm.components[i];
    terms[i] = c.weight > 0.0 ? std::log(c.weight) + detail::log_gaussian(x, c)
                              : -std::numeric_limits<double>::infinity();
    zmax = std::max(zmax, terms[i]);
  }
  if (!std::isfinite(zmax)) return -std::numeric_limits<double>::infinity();
  double acc = 0.0;
  for (double t : terms) acc += std::exp(t - zmax);
  return zmax + std::log(acc);
}

inline Vec2 sample(const Gmm& gmm, Rng& rng) {
  std::vector<double> w(gmm.components.size());
  for (std::size_t i = 0; i < w.size(); ++i) w[i] = gmm.components[i].weight;
  const auto& c = gmm.components[rng.categorical(w)];
  // Cholesky factor of the 2x2 covariance
  double l00 = std::sqrt(c.cov[0][0]);
  double l10 = c.cov[0][1] / l00;
  double l11 = std::sqrt(std::max(c.cov[1][1] - l10 * l10, 1e-12));
  double z0 = rng.normal(), z1 = rng.normal();
  return {c.mean[0] + l00 * z0, c.mean[1] + l10 * z0 + l11 * z1};
}

struct GmmFitDiagnostics {
  int iterations = 0;
  std::vector<double> log_likelihoods;  // per EM iteration, non-decreasing
};

// EM fit with k-means++ initialization. Covariances are regularized by adding
// kCovRegularization * I after every M-step; iteration stops when the
// log-likelihood gain drops below 1e-6 or after 300 iterations.
inline Gmm fit_gmm(const std::vector<Vec2>& samples, int n_components, std::uint64_t seed,
                   GmmFitDiagnostics* diagnostics = nullptr) {
  if (n_components < 1) throw std::invalid_argument("fit_gmm: need at least one component");
  if (samples.size() < 2 * static_cast<std::size_t>(n_components))
    throw std::invalid_argument("fit_gmm: need at least 2*M samples, got " +
                                std::to_string(samples.size()));

  const std::size_t n = samples.size();
  const int M = n_components;

  std::vector<Point> pts(n, Point(2));
  for (std::size_t i = 0; i < n; ++i) pts[i] = {samples[i][0], samples[i][1]};
  auto init = kmeans(pts, M, splitmix64(seed) ^ 0x9d2c, 4);

  Gmm gmm;
  gmm.components.resize(M);
  Mat2 pooled{};  // fallback covariance for tiny clusters
  {
    Vec2 mean{};
    for (const auto& s : samples) {
      mean[0] += s[0];
      mean[1] += s[1];
    }
    mean[0] /= n;
    mean[1] /= n;
    for (const auto& s : samples) {
      double dx = s[0] - mean[0], dy = s[1] - mean[1];
      pooled[0][0] += dx * dx;
      pooled[0][1] += dx * dy;
      pooled[1][1] += dy * dy;
    }
    pooled[0][0] = pooled[0][0] / n + kCovRegularization;
    pooled[0][1] /= n;
    pooled[1][0] = pooled[0][1];
    pooled[1][1] = pooled[1][1] / n + kCovRegularization;
  }
  for (int m = 0; m < M; ++m) {
    auto& c = gmm.components[m];
    c.mean = {init.centroids[m][0], init.centroids[m][1]};
    int size = 0;
    Mat2 cov{};
    for (std::size_t i = 0; i < n; ++i) {
      if (init.labels[i] != m) continue;
      ++size;
      double dx = samples[i][0] - c.mean[0], dy = samples[i][1] - c.mean[1];
      cov[0][0] += dx * dx;
      cov[0][1] += dx * dy;
      cov[1][1] += dy * dy;
    }
    if (size >= 2) {
      cov[0][0] = cov[0][0] / size + kCovRegularization;
      cov[0][1] /= size;
      cov[1][0] = cov[0][1];
      cov[1][1] = cov[1][1] / size + kCovRegularization;
      c.cov = cov;
    } else {
      c.cov = pooled;
    }
    c.weight = std::max(static_cast<double>(size), 1.0) / static_cast<double>(n);
  }
  {
    double total = 0.0;
    for (auto& c : gmm.components) total += c.weight;
    for (auto& c : gmm.components) c.weight /= total;
  }

  std::vector<std::vector<double>> resp(n, std::vector<double>(M));
  double prev_ll = -std::numeric_limits<double>::infinity();
  int iterations = 0;
  for (; iterations < 300; ++iterations) {
    // E-step
    double ll = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      double zmax = -std::numeric_limits<double>::infinity();
      for (int m = 0; m < M; ++m) {
        double t = gmm.components[m].weight > 0.0
                       ? std::log(gmm.components[m].weight) +
                             detail::log_gaussian(samples[i], gmm.components[m])
                       : -std::numeric_limits<double>::infinity();
        resp[i][m] = t;
        zmax = std::max(zmax, t);
      }
      double norm = 0.0;
      for (int m = 0; m < M; ++m) norm += std::exp(resp[i][m] - zmax);
      double log_px = zmax + std::log(norm);
      if (!std::isfinite(log_px)) throw std::runtime_error("fit_gmm: non-finite likelihood");
      ll += log_px;
      for (int m = 0; m < M; ++m) resp[i][m] = std::exp(resp[i][m] - log_px);
    }
    if (iterations > 0 && ll < prev_ll - 1e-8 * (1.0 + std::abs(prev_ll)))
      throw std::logic_error("fit_gmm: log-likelihood decreased");
    if (diagnostics) diagnostics->log_likelihoods.push_back(ll);
    bool converged = iterations > 0 && ll - prev_ll < 1e-6;
    prev_ll = ll;
    if (converged) break;

    // M-step
    for (int m = 0; m < M; ++m) {
      double nm = 0.0;
      Vec2 mean{};
      for (std::size_t i = 0; i < n; ++i) {
        nm += resp[i][m];
        mean[0] += resp[i][m] * samples[i][0];
        mean[1] += resp[i][m] * samples[i][1];
      }
      auto& c = gmm.components[m];
      if (nm < 1e-12) {
        c.weight = 0.0;
        continue;
      }
      mean[0] /= nm;
      mean[1] /= nm;
      Mat2 cov{};
      for (std::size_t i = 0; i < n; ++i) {
        double dx = samples[i][0] - mean[0], dy = samples[i][1] - mean[1];
        cov[0][0] += resp[i][m] * dx * dx;
        cov[0][1] += resp[i][m] * dx * dy;
        cov[1][1] += resp[i][m] * dy * dy;
      }
      c.weight = nm / static_cast<double>(n);
      c.mean = mean;
      c.cov[0][0] = cov[0][0] / nm + kCovRegularization;
      c.cov[0][1] = cov[0][1] / nm;
      c.cov[1][0] = c.cov[0][1];
      c.cov[1][1] = cov[1][1] / nm + kCovRegularization;
    }
    double total = 0.0;
    for (auto& c : gmm.components) total += c.weight;
    for (auto& c : gmm.components) c.weight /= total;
  }

  if (diagnostics) diagnostics->iterations = iterations;
  validate(gmm);
  return gmm;
}

// D(f || g) estimated by sampling from f. The density of g is floored at
// kDensityFloor so tail samples cannot produce infinities.
inline KlEstimate kl_divergence_mc(const Gmm& f, const Gmm& g, int n_samples, std::uint64_t seed) {
  validate(f);
  validate(g);
  if (n_samples < 100) throw std::invalid_argument("kl_divergence_mc: need at least 100 samples");
  Rng rng(splitmix64(seed) ^ 0x616b);
  const double log_floor = std::log(kDensityFloor);
  double mean = 0.0, m2 = 0.0;
  for (int j = 0; j < n_samples; ++j) {
    Vec2 x = sample(f, rng);
    double term = log_density(f, x) - std::max(log_density(g, x), log_floor);
    double delta = term - mean;
    mean += delta / (j + 1);
    m2 += delta * (term - mean);
  }
  double variance = n_samples > 1 ? m2 / (n_samples - 1) : 0.0;
  return {mean, n_samples, std::sqrt(variance / n_samples), kDensityFloor};
}

// Fit a GMM to the driver's limited data and assign the centroid style of the
// most similar (smallest KL) cluster. Ties resolve to the lowest cluster
// index; samples are canonically ordered first so the outcome does not depend
// on input order.
inline PredictionOutcome predict_cluster(const std::string& driver_id,
                                         std::vector<Vec2> driver_samples,
                                         const std::vector<Gmm>& cluster_gmms,
                                         const std::vector<RewardWeights>& cluster_weights,
                                         int n_components, int n_samples, std::uint64_t seed) {
  if (cluster_gmms.empty()) throw std::invalid_argument("predict_cluster: no cluster models");
  if (!cluster_weights.empty() && cluster_weights.size() != cluster_gmms.size())
    throw std::invalid_argument("predict_cluster: centroid/gmm count mismatch");
  std::sort(driver_samples.begin(), driver_samples.end());

  PredictionOutcome outcome;
  outcome.driver_id = driver_id;
  Gmm f = fit_gmm(driver_samples, n_components, splitmix64(seed) ^ 0xf17);
  outcome.kl_values.reserve(cluster_gmms.size());
  for (std::size_t c = 0; c < cluster_gmms.size(); ++c)
    outcome.kl_values.push_back(
        kl_divergence_mc(f, cluster_gmms[c], n_samples, splitmix64(seed) ^ (0xd1 + c)).value);
  outcome.predicted_cluster = static_cast<int>(
      std::min_element(outcome.kl_values.begin(), outcome.kl_values.end()) -
      outcome.kl_values.begin());
  if (!cluster_weights.empty())
    outcome.assigned_weights = cluster_weights[outcome.predicted_cluster];
  return outcome;
}

inline std::vector<Vec2> to_gmm_samples(const std::vector<AggregatedPoint>& points) {
  std::vector<Vec2> out;
  out.reserve(points.size());
  for (const auto& p : points) out.push_back({p.speed_mps, p.distance_m});
  return out;
}

// ---------------------------------------------------------------------------
// Prediction-accuracy study
// ---------------------------------------------------------------------------

struct TargetDriverData {
  std::string driver_id;
  std::vector<CarFollowingEvent> gmm_events;         // low-data pool for GMM fitting
  std::vector<CarFollowingEvent> validation_events;  // held out for the reward ground truth
};

struct PredictionRecord {
  std::string driver_id;
  int n_events = 0;
  int trial = 0;
  std::vector<double> kl_values;
  int predicted = -1;
  int truth = -1;
  bool correct = false;
};

struct AccuracyStudy {
  std::vector<int> n_events;
  std::vector<double> accuracy;  // mean over trials of the per-trial driver fraction
  std::vector<double> sd;        // across trials
  std::vector<PredictionRecord> records;
  std::vector<std::string> warnings;
  int n_drivers_used = 0;
};

namespace detail {

inline int nearest_weights(const RewardWeights& w, const std::vector<RewardWeights>& centroids) {
  int best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t c = 0; c < centroids.size(); ++c) {
    double d = 0.0;
    for (int m = 0; m < kNumStates; ++m) {
      double t = w[m] - centroids[c][m];
      d += t * t;
    }
    if (d < best_d) {
      best_d = d;
      best = static_cast<int>(c);
    }
  }
  return best;
}

}  // namespace detail

// Per-driver ground truth is the nearest cluster centroid of the reward
// learned on the validation events; accuracy at each n is the fraction of
// drivers predicted into their ground-truth cluster, averaged over trials
// with resampled event subsets.
inline AccuracyStudy evaluate_accuracy(const std::vector<TargetDriverData>& targets,
                                       const std::vector<Gmm>& cluster_gmms,
                                       const std::vector<RewardWeights>& cluster_weights,
                                       const IrlConfig& irl_config, int n_components,
                                       int mc_samples, int max_n_events, int trials,
                                       std::uint64_t seed, const DiscretizationSpec& spec = {}) {
  if (cluster_gmms.size() != cluster_weights.size())
    throw std::invalid_argument("evaluate_accuracy: centroid/gmm count mismatch");
  if (trials < 1 || max_n_events < 1) throw std::invalid_argument("evaluate_accuracy: bad study size");

  AccuracyStudy study;
  struct UsableDriver {
    const TargetDriverData* data;
    int truth;
  };
  std::vector<UsableDriver> usable;
  for (const auto& t : targets) {
    if (t.validation_events.empty()) {
      study.warnings.push_back("driver " + t.driver_id + " has no validation events; excluded");
      continue;
    }
    if (t.gmm_events.empty()) {
      study.warnings.push_back("driver " + t.driver_id + " has no events for GMM fitting; excluded");
      continue;
    }
    auto learned = learn_reward(to_demonstrations(t.validation_events, spec), irl_config);
    int truth = detail::nearest_weights(normalize_weights(learned.weights), cluster_weights);
    usable.push_back({&t, truth});
  }
  study.n_drivers_used = static_cast<int>(usable.size());
  if (usable.empty()) throw std::runtime_error("evaluate_accuracy: no usable target drivers");

  Rng base(seed);
  for (int n = 1; n <= max_n_events; ++n) {
    std::vector<double> per_trial(trials, 0.0);
    for (int trial = 0; trial < trials; ++trial) {
      int correct = 0;
      for (std::size_t d = 0; d < usable.size(); ++d) {
        const auto& driver = *usable[d].data;
        Rng rng = base.derive(static_cast<std::uint64_t>(n) * 1000003 + d + 1,
                              static_cast<std::uint64_t>(trial) + 1);
        std::vector<std::size_t> order(driver.gmm_events.size());
        for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
        rng.shuffle(order);
        std::size_t take = std::min<std::size_t>(n, order.size());
        std::vector<CarFollowingEvent> subset;
        subset.reserve(take);
        for (std::size_t i = 0; i < take; ++i) subset.push_back(driver.gmm_events[order[i]]);

        auto samples = to_gmm_samples(aggregate_all(subset));
        int m_eff = std::min<int>(n_components, static_cast<int>(samples.size() / 2));
        if (m_eff < 1) continue;  // not enough data to fit anything
        auto outcome = predict_cluster(driver.driver_id, samples, cluster_gmms, cluster_weights,
                                       m_eff, mc_samples, rng.u64());

        PredictionRecord rec;
        rec.driver_id = driver.driver_id;
        rec.n_events = n;
        rec.trial = trial;
        rec.kl_values = outcome.kl_values;
        rec.predicted = outcome.predicted_cluster;
        rec.truth = usable[d].truth;
        rec.correct = rec.predicted == rec.truth;
        if (rec.correct) ++correct;
        study.records.push_back(std::move(rec));
      }
      per_trial[trial] = static_cast<double>(correct) / static_cast<double>(usable.size());
    }
    double mean = 0.0;
    for (double v : per_trial) mean += v;
    mean /= trials;
    double var = 0.0;
    for (double v : per_trial) var += (v - mean) * (v - mean);
    study.n_events.push_back(n);
    study.accuracy.push_back(mean);
    study.sd.push_back(trials > 1 ? std::sqrt(var / (trials - 1)) : 0.0);
  }
  return study;
}

}  // namespace pacc
