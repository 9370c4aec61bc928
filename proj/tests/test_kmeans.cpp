#include <doctest.h>

#include <set>

#include "ltc/error.hpp"
#include "ltc/kmeans.hpp"
#include "ltc/rng.hpp"

#include "oracles.hpp"

using namespace ltc;
using namespace oracle;

TEST_CASE("objective is non-increasing") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto x = random_points(seed, 300, 3, 6);
    const auto res = kmeans(x, 5, seed);
    REQUIRE_FALSE(res.objective_history.empty());
    for (std::size_t i = 1; i < res.objective_history.size(); ++i) {
      CHECK(res.objective_history[i] <= res.objective_history[i - 1]);
    }
  }
}

TEST_CASE("k equal to the number of points gives zero objective") {
  const auto x = random_points(1, 12, 2, 3);
  const auto res = kmeans(x, 12, 4);
  CHECK(res.objective_history.back() == 0.0);
  CHECK(std::set<std::size_t>(res.assignments.begin(), res.assignments.end()).size() == 12);
}

TEST_CASE("two well separated blobs are recovered") {
  Rng rng(8);
  Matrix x(200, 2);
  std::vector<int> blob(200);
  for (std::size_t i = 0; i < 200; ++i) {
    blob[i] = i < 100 ? 0 : 1;
    x(i, 0) = (blob[i] ? 6.0 : 0.0) + rng.normal() * 0.5;
    x(i, 1) = rng.normal() * 0.5;
  }
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto res = kmeans(x, 2, seed);
    for (std::size_t i = 0; i < 200; ++i) {
      CHECK((res.assignments[i] == res.assignments[0]) == (blob[i] == blob[0]));
    }
  }
}

TEST_CASE("kmeans is deterministic and validates k") {
  const auto x = random_points(3, 100, 2, 4);
  const auto a = kmeans(x, 4, 11);
  const auto b = kmeans(x, 4, 11);
  CHECK(a.centroids == b.centroids);
  CHECK(a.assignments == b.assignments);
  CHECK_THROWS_AS(kmeans(x, 0, 1), DomainError);
  CHECK_THROWS_AS(kmeans(x, 101, 1), DomainError);
}

TEST_CASE("duplicate points do not produce empty clusters") {
  Matrix x(10, 1);
  for (std::size_t i = 0; i < 10; ++i) x(i, 0) = i < 8 ? 1.0 : 5.0;
  const auto res = kmeans(x, 3, 2);
  for (std::size_t i = 1; i < res.objective_history.size(); ++i) {
    CHECK(res.objective_history[i] <= res.objective_history[i - 1]);
  }
  CHECK(nearest_centroid(res.centroids, std::vector<double>{5.0}) == res.assignments[9]);
}
