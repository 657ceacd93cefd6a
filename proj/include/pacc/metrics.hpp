#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <stdexcept>
#include <vector>

namespace pacc {

// Adjusted Rand index between two labelings of the same points.
inline double adjusted_rand_index(const std::vector<int>& a, const std::vector<int>& b) {
  if (a.size() != b.size() || a.empty())
    throw std::invalid_argument("adjusted_rand_index: label size mismatch");
  std::map<std::pair<int, int>, long> table;
  std::map<int, long> row, col;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ++table[{a[i], b[i]}];
    ++row[a[i]];
    ++col[b[i]];
  }
  auto choose2 = [](long n) { return 0.5 * n * (n - 1); };
  double sum_ij = 0.0, sum_r = 0.0, sum_c = 0.0;
  for (const auto& [k, v] : table) sum_ij += choose2(v);
  for (const auto& [k, v] : row) sum_r += choose2(v);
  for (const auto& [k, v] : col) sum_c += choose2(v);
  double n2 = choose2(static_cast<long>(a.size()));
  double expected = sum_r * sum_c / n2;
  double max_index = 0.5 * (sum_r + sum_c);
  if (max_index == expected) return 1.0;  // both labelings trivial
  return (sum_ij - expected) / (max_index - expected);
}

namespace detail {

inline std::vector<double> fractional_ranks(const std::vector<double>& xs) {
  std::vector<std::size_t> order(xs.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) { return xs[i] < xs[j]; });
  std::vector<double> ranks(xs.size());
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i;
    while (j + 1 < order.size() && xs[order[j + 1]] == xs[order[i]]) ++j;
    double mean_rank = 0.5 * (i + j) + 1.0;  // 1-based, ties share the mean
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = mean_rank;
    i = j + 1;
  }
  return ranks;
}

}  // namespace detail

// Spearman rank correlation; ties receive fractional ranks.
inline double spearman(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw std::invalid_argument("spearman: bad input");
  auto rx = detail::fractional_ranks(x);
  auto ry = detail::fractional_ranks(y);
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < rx.size(); ++i) {
    mx += rx[i];
    my += ry[i];
  }
  mx /= rx.size();
  my /= ry.size();
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < rx.size(); ++i) {
    sxy += (rx[i] - mx) * (ry[i] - my);
    sxx += (rx[i] - mx) * (rx[i] - mx);
    syy += (ry[i] - my) * (ry[i] - my);
  }
  if (sxx == 0.0 || syy == 0.0) throw std::invalid_argument("spearman: constant input");
  return sxy / std::sqrt(sxx * syy);
}

}  // namespace pacc
