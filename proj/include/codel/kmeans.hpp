#pragma once

#include <algorithm>
#include <cstddef>
#include <limits>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "codel/error.hpp"
#include "codel/rng.hpp"

namespace codel {

struct KMeansResult {
  std::vector<std::vector<double>> centers;
  std::vector<std::size_t> assignment;
  /// Within-cluster sum of squares after each Lloyd iteration.
  std::vector<double> sse_history;
  std::size_t iterations = 0;
};

struct KMeansOptions {
  std::size_t max_iterations = 100;
};

namespace detail {

inline double squared_distance(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

inline std::size_t nearest_center(std::span<const double> p, const std::vector<std::vector<double>>& centers) {
  std::size_t best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t c = 0; c < centers.size(); ++c) {
    const double d = squared_distance(p, centers[c]);
    if (d < best_d) {
      best_d = d;
      best = c;
    }
  }
  return best;
}

}  // namespace detail

inline double within_cluster_sse(const std::vector<std::vector<double>>& points,
                                 const std::vector<std::vector<double>>& centers,
                                 std::span<const std::size_t> assignment) {
  double s = 0.0;
  for (std::size_t i = 0; i < points.size(); ++i) s += detail::squared_distance(points[i], centers[assignment[i]]);
  return s;
}

/// Lloyd's algorithm seeded from k distinct random points. An emptied cluster
/// takes over the point lying farthest from its current center.
inline KMeansResult kmeans(const std::vector<std::vector<double>>& points, std::size_t k, Rng& rng,
                           const KMeansOptions& opts = {}) {
  const std::size_t n = points.size();
  if (k < 2 || k > n)
    throw ParameterError("k-means needs 2 <= k <= n points (k = " + std::to_string(k) +
                         ", n = " + std::to_string(n) + ")");
  const std::size_t dim = points.front().size();
  for (const auto& p : points)
    if (p.size() != dim) throw ShapeError("k-means points must share a dimension");

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  for (std::size_t i = 0; i < k; ++i) std::swap(order[i], order[rng.uniform_index(i, n - 1)]);

  KMeansResult r;
  for (std::size_t i = 0; i < k; ++i) r.centers.push_back(points[order[i]]);
  r.assignment.assign(n, 0);
  for (std::size_t i = 0; i < n; ++i) r.assignment[i] = detail::nearest_center(points[i], r.centers);

  std::vector<std::size_t> counts(k);
  for (std::size_t it = 0; it < opts.max_iterations; ++it) {
    // Reseed empty clusters.
    std::fill(counts.begin(), counts.end(), 0);
    for (std::size_t a : r.assignment) ++counts[a];
    for (std::size_t c = 0; c < k; ++c) {
      if (counts[c] != 0) continue;
      std::size_t far = n;
      double far_d = -1.0;
      for (std::size_t i = 0; i < n; ++i) {
        if (counts[r.assignment[i]] < 2) continue;
        const double d = detail::squared_distance(points[i], r.centers[r.assignment[i]]);
        if (d > far_d) {
          far_d = d;
          far = i;
        }
      }
      if (far == n) break;
      --counts[r.assignment[far]];
      r.assignment[far] = c;
      counts[c] = 1;
    }

    // Update step.
    for (auto& c : r.centers) std::fill(c.begin(), c.end(), 0.0);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t d = 0; d < dim; ++d) r.centers[r.assignment[i]][d] += points[i][d];
    for (std::size_t c = 0; c < k; ++c)
      for (auto& v : r.centers[c]) v /= static_cast<double>(counts[c]);
    r.sse_history.push_back(within_cluster_sse(points, r.centers, r.assignment));
    r.iterations = it + 1;

    // Assignment step.
    bool changed = false;
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t a = detail::nearest_center(points[i], r.centers);
      if (a != r.assignment[i]) {
        r.assignment[i] = a;
        changed = true;
      }
    }
    if (!changed) break;
  }
  return r;
}

}  // namespace codel
