#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "ltc/error.hpp"
#include "ltc/feature_select.hpp"
#include "ltc/rng.hpp"

#include "oracles.hpp"

using namespace ltc;
using namespace oracle;

TEST_CASE("partition entropy values") {
  CHECK(partition_entropy(5, 5) == doctest::Approx(std::numbers::ln2).epsilon(1e-14));
  CHECK(std::abs(partition_entropy(5, 5) - std::numbers::ln2) <= 1e-12);
  CHECK(partition_entropy(10, 0) == 0.0);
  CHECK(std::abs(partition_entropy(1, 3) - (-0.25 * std::log(0.25) - 0.75 * std::log(0.75))) <= 1e-12);
  CHECK(partition_entropy(1, 3) == doctest::Approx(0.562335).epsilon(1e-6));
  CHECK_THROWS_AS(partition_entropy(0, 0), DomainError);
}

TEST_CASE("focal term values") {
  CHECK(std::abs(focal_term(0.5, 1.0, 2.0, 1e-6) - 0.25 * std::numbers::ln2) <= 1e-12);
  CHECK(focal_term(0.5, 1.0, 2.0, 1e-6) == doctest::Approx(0.173287).epsilon(1e-6));
  CHECK(focal_term(1.0 - 1e-6, 1.0, 2.0, 1e-6) < 1e-15);
  for (double p : {0.1, 0.3, 0.77}) CHECK(focal_term(p, 1.0, 0.0, 1e-6) == doctest::Approx(-std::log(p)));
  // Clamping keeps p = 0 finite.
  CHECK(std::isfinite(focal_term(0.0, 1.0, 2.0, 1e-6)));
}

TEST_CASE("candidate thresholds are interior and evenly spaced") {
  const auto t = candidate_thresholds(0.0, 33.0, 32);
  REQUIRE(t.size() == 32);
  CHECK(t.front() == 1.0);
  CHECK(t.back() == 32.0);
}

TEST_CASE("separable feature has zero entropy loss") {
  DftConfig cfg;
  cfg.loss_kind = PartitionLossKind::entropy;
  std::vector<double> v;
  std::vector<std::uint8_t> y;
  for (int i = 0; i < 10; ++i) {
    v.push_back(i * 0.1);
    y.push_back(0);
    v.push_back(10.0 + i * 0.1);
    y.push_back(1);
  }
  const auto r = dft_score_feature(v, y, cfg);
  CHECK(r.loss == 0.0);
  CHECK(r.threshold > 0.9);
  CHECK(r.threshold < 10.0);
  CHECK(r.n_left == 10);
  CHECK(r.n_right == 10);
}

TEST_CASE("independent labels score near ln 2") {
  DftConfig cfg;
  cfg.loss_kind = PartitionLossKind::entropy;
  Rng rng(3);
  std::vector<double> v(20000);
  std::vector<std::uint8_t> y(20000);
  for (std::size_t i = 0; i < v.size(); ++i) {
    v[i] = rng.uniform();
    y[i] = rng.uniform() < 0.5;
  }
  CHECK(std::abs(dft_score_feature(v, y, cfg).loss - std::numbers::ln2) < 0.05);
}

TEST_CASE("dft score equals the brute-force oracle") {
  Rng rng(2024);
  for (int trial = 0; trial < 100; ++trial) {
    DftConfig cfg;
    cfg.loss_kind = trial % 2 ? PartitionLossKind::entropy : PartitionLossKind::focal;
    const std::size_t n = 2 + rng.below(63);
    std::vector<double> v(n);
    std::vector<std::uint8_t> y(n);
    const bool discrete = trial % 3 == 0;
    for (std::size_t i = 0; i < n; ++i) {
      v[i] = discrete ? static_cast<double>(rng.below(5)) : rng.normal();
      y[i] = rng.uniform() < 0.4;
    }
    if (v == std::vector<double>(n, v[0])) v[0] += 1.0;
    const auto got = dft_score_feature(v, y, cfg);
    const auto want = brute_force(v, y, cfg);
    REQUIRE(want.any);
    CHECK(got.loss == want.loss);
    CHECK(got.threshold == want.threshold);
  }
}

TEST_CASE("constant feature is degenerate") {
  DftConfig cfg;
  cfg.loss_kind = PartitionLossKind::entropy;
  const std::vector<double> v(6, 2.5);
  const std::vector<std::uint8_t> y{1, 0, 1, 0, 1, 0};
  const auto r = dft_score_feature(v, y, cfg);
  CHECK(r.degenerate);
  CHECK(r.loss == doctest::Approx(std::numbers::ln2));
}

TEST_CASE("dft rejects bad inputs") {
  DftConfig cfg;
  CHECK_THROWS_AS(dft_score_feature(std::vector<double>{1.0, 2.0}, std::vector<std::uint8_t>{1}, cfg), ShapeError);
  cfg.num_thresholds = 1;
  CHECK_THROWS_AS(cfg.validate(), DomainError);
}

TEST_CASE("label feature ranks first with zero loss") {
  DftConfig cfg;
  cfg.loss_kind = PartitionLossKind::entropy;
  Rng rng(9);
  Matrix m(40, 3);
  std::vector<std::uint8_t> y(40);
  for (std::size_t r = 0; r < 40; ++r) {
    y[r] = r % 2;
    m(r, 0) = rng.normal();
    m(r, 1) = y[r];
    m(r, 2) = rng.normal();
  }
  const auto ranking = rank_features(m, y, cfg);
  CHECK(ranking.entries.front().feature_index == 1);
  CHECK(ranking.entries.front().loss == 0.0);
}

TEST_CASE("duplicated columns rank adjacently with equal loss") {
  DftConfig cfg;
  Rng rng(4);
  Matrix m(30, 4);
  std::vector<std::uint8_t> y(30);
  for (std::size_t r = 0; r < 30; ++r) {
    y[r] = rng.uniform() < 0.5;
    m(r, 0) = rng.normal();
    m(r, 1) = rng.normal() + 2.0 * y[r];
    m(r, 2) = m(r, 1);
    m(r, 3) = rng.normal();
  }
  const auto ranking = rank_features(m, y, cfg);
  for (std::size_t i = 0; i + 1 < ranking.entries.size(); ++i) {
    if (ranking.entries[i].feature_index == 1) {
      CHECK(ranking.entries[i + 1].feature_index == 2);
      CHECK(ranking.entries[i + 1].loss == ranking.entries[i].loss);
    }
  }
}

TEST_CASE("rank order matches an oracle re-sort") {
  DftConfig cfg;
  Rng rng(77);
  Matrix m(50, 20);
  std::vector<std::uint8_t> y(50);
  for (std::size_t r = 0; r < 50; ++r) {
    y[r] = rng.uniform() < 0.5;
    for (std::size_t f = 0; f < 20; ++f) m(r, f) = rng.normal() + (f % 4 == 0 ? 1.5 * y[r] : 0.0);
  }
  std::vector<std::pair<double, std::size_t>> oracle;
  for (std::size_t f = 0; f < 20; ++f) {
    const auto col = m.column(f);
    oracle.emplace_back(brute_force(col, y, cfg).loss, f);
  }
  std::sort(oracle.begin(), oracle.end());
  const auto ranking = rank_features(m, y, cfg);
  for (std::size_t i = 0; i < 20; ++i) {
    CHECK(ranking.entries[i].feature_index == oracle[i].second);
    CHECK(ranking.entries[i].loss == oracle[i].first);
  }
}

TEST_CASE("selection modes") {
  DftRanking ranking;
  for (std::size_t f = 0; f < 5; ++f) ranking.entries.push_back({4 - f, 0.0, static_cast<double>(f), 1, 1, false});
  CHECK(select_features(ranking, Selection::top(2)) == std::vector<std::size_t>{4, 3});
  CHECK(select_features(ranking, Selection::top(5)) == std::vector<std::size_t>{4, 3, 2, 1, 0});
  CHECK(select_features(ranking, Selection::top(50)).size() == 5);
  CHECK(select_features(ranking, Selection::everything()).size() == 5);
  CHECK_THROWS_AS(select_features(ranking, Selection::top(0)), DomainError);
}

TEST_CASE("elbow keeps the zero-loss plateau") {
  const std::vector<double> curve{0, 0, 0, 1, 1, 1};
  CHECK(elbow_index(curve) == 2);
  DftRanking ranking;
  for (std::size_t f = 0; f < 6; ++f) ranking.entries.push_back({f, 0.0, curve[f], 1, 1, false});
  CHECK(select_features(ranking, Selection::elbow()) == std::vector<std::size_t>{0, 1, 2});
  // A straight line has no knee.
  CHECK(elbow_index(std::vector<double>{0, 1, 2, 3}) == 3);
}

TEST_CASE("ranking csv lists every feature") {
  DftRanking ranking;
  ranking.entries.push_back({3, 0.5, 0.1, 4, 6, false});
  ranking.entries.push_back({1, 0.25, 0.2, 5, 5, false});
  ranking.selected_indices = {3};
  std::ostringstream out;
  write_ranking_csv(out, ranking);
  CHECK(out.str() == "rank,feature_index,threshold,loss,selected\n0,3,0.5,0.1,1\n1,1,0.25,0.2,0\n");
}
