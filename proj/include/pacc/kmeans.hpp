#pragma once

// K-means clustering of normalized reward vectors with elbow diagnostics.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "pacc/rng.hpp"

namespace pacc {

using Point = std::vector<double>;

struct ClusterModel {
  int k = 0;
  std::vector<Point> centroids;
  std::vector<int> labels;  // per input point, nearest centroid
  double inertia = 0.0;
};

struct ElbowReport {
  std::vector<int> ks;
  std::vector<double> inertia;     // sum of squared distances to nearest centroid
  std::vector<double> distortion;  // mean of those squared distances
};

namespace detail {

inline double sq_distance(const Point& a, const Point& b) {
  double d = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    double t = a[i] - b[i];
    d += t * t;
  }
  return d;
}

inline int nearest_centroid(const Point& p, const std::vector<Point>& centroids) {
  int best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t c = 0; c < centroids.size(); ++c) {
    double d = sq_distance(p, centroids[c]);
    if (d < best_d) {
      best_d = d;
      best = static_cast<int>(c);
    }
  }
  return best;
}

inline std::vector<Point> kmeanspp_init(const std::vector<Point>& points, int k, Rng& rng) {
  std::vector<Point> centroids;
  centroids.push_back(points[rng.uniform_int(points.size())]);
  std::vector<double> d2(points.size());
  while (static_cast<int>(centroids.size()) < k) {
    double total = 0.0;
    for (std::size_t i = 0; i < points.size(); ++i) {
      double d = sq_distance(points[i], centroids.back());
      if (centroids.size() == 1 || d < d2[i]) d2[i] = d;
      total += d2[i];
    }
    std::size_t pick;
    if (total <= 0.0) {
      pick = rng.uniform_int(points.size());
    } else {
      double r = rng.uniform01() * total;
      double acc = 0.0;
      pick = points.size() - 1;
      for (std::size_t i = 0; i < points.size(); ++i) {
        acc += d2[i];
        if (r < acc) {
          pick = i;
          break;
        }
      }
    }
    centroids.push_back(points[pick]);
  }
  return centroids;
}

struct LloydResult {
  std::vector<Point> centroids;
  std::vector<int> labels;
  double inertia = 0.0;
};

inline LloydResult lloyd(const std::vector<Point>& points, std::vector<Point> centroids) {
  const std::size_t n = points.size();
  const std::size_t dim = points.front().size();
  const int k = static_cast<int>(centroids.size());
  std::vector<int> labels(n, -1);
  double prev_inertia = std::numeric_limits<double>::infinity();

  for (int iteration = 0; iteration < 300; ++iteration) {
    bool changed = false;
    double inertia = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      int c = nearest_centroid(points[i], centroids);
      if (c != labels[i]) {
        labels[i] = c;
        changed = true;
      }
      inertia += sq_distance(points[i], centroids[c]);
    }
    // Lloyd's iterations never increase inertia
    if (inertia > prev_inertia + 1e-9 * (1.0 + prev_inertia))
      throw std::logic_error("kmeans: inertia increased");
    prev_inertia = inertia;

    std::vector<Point> next(k, Point(dim, 0.0));
    std::vector<int> sizes(k, 0);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t d = 0; d < dim; ++d) next[labels[i]][d] += points[i][d];
      ++sizes[labels[i]];
    }
    for (int c = 0; c < k; ++c) {
      if (sizes[c] == 0) {
        // repair: reseed the empty cluster at the point farthest from its
        // current centroid
        std::size_t far = 0;
        double far_d = -1.0;
        for (std::size_t i = 0; i < n; ++i) {
          double d = sq_distance(points[i], centroids[labels[i]]);
          if (d > far_d) {
            far_d = d;
            far = i;
          }
        }
        next[c] = points[far];
        changed = true;
      } else {
        for (std::size_t d = 0; d < dim; ++d) next[c][d] /= sizes[c];
      }
    }
    centroids = std::move(next);
    if (!changed) break;
  }

  double inertia = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    labels[i] = nearest_centroid(points[i], centroids);
    inertia += sq_distance(points[i], centroids[labels[i]]);
  }
  return {std::move(centroids), std::move(labels), inertia};
}

}  // namespace detail

inline ClusterModel kmeans(const std::vector<Point>& points, int k, std::uint64_t seed,
                           int n_restarts = 10) {
  if (k < 1) throw std::invalid_argument("kmeans: k must be >= 1");
  if (points.size() < static_cast<std::size_t>(k))
    throw std::invalid_argument("kmeans: fewer points (" + std::to_string(points.size()) +
                                ") than clusters (" + std::to_string(k) + ")");
  if (n_restarts < 1) throw std::invalid_argument("kmeans: n_restarts must be >= 1");
  const std::size_t dim = points.front().size();
  for (const auto& p : points)
    if (p.size() != dim) throw std::invalid_argument("kmeans: ragged input");

  Rng base(seed);
  detail::LloydResult best;
  best.inertia = std::numeric_limits<double>::infinity();
  for (int r = 0; r < n_restarts; ++r) {
    Rng rng = base.derive(0xc1a5, static_cast<std::uint64_t>(r) + 1);
    auto result = detail::lloyd(points, detail::kmeanspp_init(points, k, rng));
    if (result.inertia < best.inertia) best = std::move(result);
  }
  return {k, std::move(best.centroids), std::move(best.labels), best.inertia};
}

inline ElbowReport elbow_scan(const std::vector<Point>& points, int k_min, int k_max,
                              std::uint64_t seed, int n_restarts = 10) {
  if (k_min < 1 || k_max < k_min || static_cast<std::size_t>(k_max) > points.size())
    throw std::invalid_argument("elbow_scan: k range must lie within [1, n]");
  ElbowReport report;
  for (int k = k_min; k <= k_max; ++k) {
    auto model = kmeans(points, k, splitmix64(seed) ^ static_cast<std::uint64_t>(k), n_restarts);
    report.ks.push_back(k);
    report.inertia.push_back(model.inertia);
    report.distortion.push_back(model.inertia / static_cast<double>(points.size()));
  }
  return report;
}

// Elbow selection: the k with the largest second forward difference of the
// inertia curve (discrete curvature); ties resolve to the smallest k.
inline int select_k(const ElbowReport& report) {
  if (report.ks.size() < 3) throw std::invalid_argument("select_k: need at least 3 k values");
  double scale = 0.0;
  for (double v : report.inertia) scale = std::max(scale, std::abs(v));
  int best_k = -1;
  double best_curv = 0.0;
  for (std::size_t i = 1; i + 1 < report.ks.size(); ++i) {
    double curv = report.inertia[i - 1] - 2.0 * report.inertia[i] + report.inertia[i + 1];
    if (best_k < 0 || curv > best_curv) {
      best_curv = curv;
      best_k = report.ks[i];
    }
  }
  if (best_curv <= 1e-9 * std::max(1.0, scale))
    throw std::runtime_error("select_k: no elbow in the inertia curve; choose k manually");
  return best_k;
}

}  // namespace pacc
