#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "ltc/matrix.hpp"

namespace ltc {

struct KMeansResult {
  Matrix centroids;                      // k x dims
  std::vector<std::size_t> assignments;  // per point
  // Sum of squared distances after each assignment step.
  std::vector<double> objective_history;
  int iterations = 0;
  bool converged = false;
};

// Lloyd iterations from k-means++ (D^2-sampled) seeding. Stops when an
// assignment step changes nothing or after max_iters steps. A cluster that
// empties is re-seeded at the point furthest from its current centroid.
KMeansResult kmeans(const Matrix& points, std::size_t k, std::uint64_t seed, int max_iters = 100);

double squared_distance(std::span<const double> a, std::span<const double> b);
std::size_t nearest_centroid(const Matrix& centroids, std::span<const double> point);

}  // namespace ltc
