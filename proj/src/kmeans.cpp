#include "ltc/kmeans.hpp"

#include <algorithm>
#include <limits>

#include "ltc/error.hpp"
#include "ltc/rng.hpp"

namespace ltc {

double squared_distance(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

std::size_t nearest_centroid(const Matrix& centroids, std::span<const double> point) {
  std::size_t best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t c = 0; c < centroids.rows(); ++c) {
    const double d = squared_distance(centroids.row(c), point);
    if (d < best_d) {
      best_d = d;
      best = c;
    }
  }
  return best;
}

namespace {

Matrix seed_centroids(const Matrix& points, std::size_t k, Rng& rng) {
  const std::size_t n = points.rows();
  Matrix centroids(k, points.cols());
  std::vector<bool> chosen(n, false);
  std::vector<double> d2(n, std::numeric_limits<double>::infinity());

  auto take = [&](std::size_t c, std::size_t idx) {
    chosen[idx] = true;
    std::copy(points.row(idx).begin(), points.row(idx).end(), centroids.row(c).begin());
    for (std::size_t i = 0; i < n; ++i) d2[i] = std::min(d2[i], squared_distance(points.row(i), points.row(idx)));
  };

  take(0, static_cast<std::size_t>(rng.below(n)));
  for (std::size_t c = 1; c < k; ++c) {
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) total += chosen[i] ? 0.0 : d2[i];
    std::size_t pick = n;
    if (total > 0.0) {
      double target = rng.uniform() * total;
      for (std::size_t i = 0; i < n; ++i) {
        if (chosen[i] || d2[i] <= 0.0) continue;
        pick = i;
        target -= d2[i];
        if (target < 0.0) break;
      }
    }
    if (pick == n) {
      // Remaining points coincide with chosen ones.
      pick = static_cast<std::size_t>(std::find(chosen.begin(), chosen.end(), false) - chosen.begin());
    }
    take(c, pick);
  }
  return centroids;
}

double assign(const Matrix& points, const Matrix& centroids, std::vector<std::size_t>& assignments) {
  double objective = 0.0;
  for (std::size_t i = 0; i < points.rows(); ++i) {
    const std::size_t c = nearest_centroid(centroids, points.row(i));
    assignments[i] = c;
    objective += squared_distance(points.row(i), centroids.row(c));
  }
  return objective;
}

}  // namespace

KMeansResult kmeans(const Matrix& points, std::size_t k, std::uint64_t seed, int max_iters) {
  if (k < 1) throw DomainError("kmeans needs k >= 1");
  if (k > points.rows()) throw DomainError("kmeans k exceeds the number of points");
  if (max_iters < 1) throw DomainError("kmeans needs max_iters >= 1");

  Rng rng(seed);
  KMeansResult result;
  result.centroids = seed_centroids(points, k, rng);
  const std::size_t n = points.rows();
  const std::size_t dims = points.cols();
  result.assignments.assign(n, 0);
  std::vector<std::size_t> previous;

  for (int it = 0; it < max_iters; ++it) {
    result.objective_history.push_back(assign(points, result.centroids, result.assignments));
    result.iterations = it + 1;
    if (result.assignments == previous) {
      result.converged = true;
      break;
    }
    previous = result.assignments;

    Matrix sums(k, dims);
    std::vector<std::size_t> counts(k, 0);
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t c = result.assignments[i];
      ++counts[c];
      const auto row = points.row(i);
      auto dst = sums.row(c);
      for (std::size_t d = 0; d < dims; ++d) dst[d] += row[d];
    }
    const Matrix old_centroids = result.centroids;
    std::vector<bool> used_as_seed(n, false);
    for (std::size_t c = 0; c < k; ++c) {
      auto dst = result.centroids.row(c);
      if (counts[c] > 0) {
        const auto src = sums.row(c);
        for (std::size_t d = 0; d < dims; ++d) dst[d] = src[d] / static_cast<double>(counts[c]);
        continue;
      }
      std::size_t far = 0;
      double far_d = -1.0;
      for (std::size_t i = 0; i < n; ++i) {
        if (used_as_seed[i]) continue;
        const double d = squared_distance(points.row(i), old_centroids.row(result.assignments[i]));
        if (d > far_d) {
          far_d = d;
          far = i;
        }
      }
      used_as_seed[far] = true;
      std::copy(points.row(far).begin(), points.row(far).end(), dst.begin());
    }
  }
  return result;
}

}  // namespace ltc
