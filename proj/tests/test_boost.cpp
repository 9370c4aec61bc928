#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <nlohmann/json.hpp>

#include "ltc/boost.hpp"
#include "ltc/error.hpp"
#include "ltc/rng.hpp"

#include "oracles.hpp"

using namespace ltc;
using namespace oracle;

TEST_CASE("presets") {
  const auto large = BoostConfig::preset("paper-large");
  CHECK(large.num_rounds == 700);
  CHECK(large.max_depth == 5);
  const auto small = BoostConfig::preset("paper-small");
  CHECK(small.num_rounds == 300);
  CHECK(small.max_depth == 3);
  CHECK_THROWS_AS(BoostConfig::preset("huge"), LookupError);
  BoostConfig bad;
  bad.learning_rate = 0.0;
  CHECK_THROWS_AS(bad.validate(), DomainError);
}

TEST_CASE("xor is learned at depth 3 but not by stumps") {
  const auto f = xor_fixture(200, 1);
  BoostConfig cfg;
  cfg.num_rounds = 100;
  cfg.max_depth = 3;
  cfg.learning_rate = 0.1;
  const auto model = train_bit_classifier(f.x, f.y, cfg);
  CHECK(accuracy(model, f) == 1.0);
  CHECK(model.rounds_completed == 100);
  CHECK(model.trees.size() == 100);
  for (const auto& t : model.trees) CHECK(t.depth() <= 3);

  cfg.max_depth = 1;
  CHECK(accuracy(train_bit_classifier(f.x, f.y, cfg), f) < 0.9);
}

TEST_CASE("all-positive labels give a confident constant model") {
  Matrix x(10, 2, 1.0);
  const std::vector<std::uint8_t> y(10, 1);
  const auto model = train_bit_classifier(x, y, BoostConfig::preset("paper-small"));
  CHECK(model.constant);
  for (std::size_t i = 0; i < 10; ++i) CHECK(predict_bit_prob(model, x.row(i)) >= 0.99);
}

TEST_CASE("training logloss is non-increasing and beats the prior") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto f = random_fixture(seed);
    BoostConfig cfg;
    cfg.num_rounds = 40;
    cfg.max_depth = 3;
    const auto model = train_bit_classifier(f.x, f.y, cfg);
    for (std::size_t r = 1; r < model.train_logloss.size(); ++r) {
      CHECK(model.train_logloss[r] <= model.train_logloss[r - 1]);
    }
    double prior = 0.0;
    for (auto y : f.y) prior += logistic_loss(0.0, y);
    prior /= static_cast<double>(f.y.size());
    CHECK(model.final_train_logloss() < prior);
  }
}

TEST_CASE("sample permutation leaves predictions bit-identical") {
  const auto f = random_fixture(99);
  BoostConfig cfg;
  cfg.num_rounds = 30;
  cfg.max_depth = 4;
  const auto a = train_bit_classifier(f.x, f.y, cfg);
  std::vector<std::size_t> perm(f.y.size());
  for (std::size_t i = 0; i < perm.size(); ++i) perm[i] = i;
  Rng rng(5);
  rng.shuffle(perm.begin(), perm.end());
  std::vector<std::size_t> cols(f.x.cols());
  for (std::size_t j = 0; j < cols.size(); ++j) cols[j] = j;
  const Matrix px = f.x.gather(perm, cols);
  std::vector<std::uint8_t> py(perm.size());
  for (std::size_t i = 0; i < perm.size(); ++i) py[i] = f.y[perm[i]];
  const auto b = train_bit_classifier(px, py, cfg);
  CHECK(a == b);
  for (std::size_t i = 0; i < f.y.size(); ++i) CHECK(predict_margin(a, f.x.row(i)) == predict_margin(b, f.x.row(i)));
}

TEST_CASE("split thresholds are midpoints so monotone rescaling preserves predictions") {
  const auto f = random_fixture(12);
  BoostConfig cfg;
  cfg.num_rounds = 20;
  cfg.max_depth = 3;
  const auto a = train_bit_classifier(f.x, f.y, cfg);
  Matrix scaled = f.x;
  for (std::size_t i = 0; i < scaled.rows(); ++i) {
    for (std::size_t j = 0; j < scaled.cols(); ++j) scaled(i, j) = 3.0 * scaled(i, j) + 1.0;
  }
  const auto b = train_bit_classifier(scaled, f.y, cfg);
  for (std::size_t i = 0; i < f.y.size(); ++i) {
    CHECK(predict_bit_prob(a, f.x.row(i)) == doctest::Approx(predict_bit_prob(b, scaled.row(i))).epsilon(1e-12));
  }
}

TEST_CASE("prediction closed forms") {
  BoostedBitClassifier m;
  m.config.base_score = 0.5;
  CHECK(predict_bit_prob(m, std::vector<double>{}) == 0.5);
  m.config.learning_rate = 0.3;
  m.trees.emplace_back(std::vector<TreeNode>{TreeNode{-1, 0.0, -1, -1, 1.7}});
  CHECK(predict_bit_prob(m, std::vector<double>{}) == doctest::Approx(1.0 / (1.0 + std::exp(-0.3 * 1.7))));
  m.base_margin = std::log(0.2 / 0.8);
  CHECK(predict_bit_prob(m, std::vector<double>{}) ==
        doctest::Approx(1.0 / (1.0 + std::exp(-(std::log(0.25) + 0.3 * 1.7)))));
}

TEST_CASE("batch and row predictions agree, probabilities stay inside (0,1)") {
  const auto f = random_fixture(3);
  BoostConfig cfg;
  cfg.num_rounds = 50;
  cfg.max_depth = 5;
  const auto m = train_bit_classifier(f.x, f.y, cfg);
  const auto batch = predict_bit_probs(m, f.x);
  for (std::size_t i = 0; i < f.y.size(); ++i) {
    CHECK(batch[i] == predict_bit_prob(m, f.x.row(i)));
    CHECK(batch[i] > 0.0);
    CHECK(batch[i] < 1.0);
  }
  CHECK_THROWS_AS(predict_margin(m, std::vector<double>{}), ShapeError);
}

TEST_CASE("selected features index dataset columns") {
  auto f = xor_fixture(200, 8);
  Matrix wide(200, 4);
  for (std::size_t i = 0; i < 200; ++i) {
    wide(i, 0) = 0.0;
    wide(i, 1) = f.x(i, 0);
    wide(i, 2) = 0.0;
    wide(i, 3) = f.x(i, 1);
  }
  BoostConfig cfg;
  cfg.num_rounds = 100;
  cfg.max_depth = 3;
  const auto m = train_bit_classifier(wide, f.y, cfg, {1, 3});
  for (const auto& t : m.trees) {
    for (const auto& n : t.nodes()) CHECK((n.is_leaf() || n.feature == 1 || n.feature == 3));
  }
  std::size_t hit = 0;
  for (std::size_t i = 0; i < 200; ++i) hit += (predict_bit_prob(m, wide.row(i)) > 0.5) == (f.y[i] != 0);
  CHECK(hit == 200);
}

TEST_CASE("footprint convention") {
  BoostedBitClassifier m;
  CHECK(footprint(m).ops_per_query == 5);
  CHECK(footprint(m).param_count == 0);
  const RegressionTree stump(std::vector<TreeNode>{TreeNode{0, 0.5, 1, 2, 0.0}, TreeNode{-1, 0, -1, -1, -1.0},
                                                   TreeNode{-1, 0, -1, -1, 1.0}});
  m.trees = {stump, stump};
  const auto fp = footprint(m);
  CHECK(fp.ops_per_query == 9);
  CHECK(fp.param_count == 2 * 3 * kFieldsPerNode);
  BoostedBitClassifier one;
  one.trees = {stump};
  CHECK(footprint(one).ops_per_query + 2 == fp.ops_per_query);
}

TEST_CASE("model json round trip is exact") {
  const auto f = random_fixture(21);
  BoostConfig cfg;
  cfg.num_rounds = 10;
  cfg.max_depth = 3;
  const auto m = train_bit_classifier(f.x, f.y, cfg);
  const nlohmann::json j = m;
  const auto back = nlohmann::json::parse(j.dump()).get<BoostedBitClassifier>();
  CHECK(back == m);
}

TEST_CASE("logistic loss is stable") {
  CHECK(logistic_loss(0.0, 1) == doctest::Approx(std::log(2.0)));
  CHECK(std::isfinite(logistic_loss(-800.0, 1)));
  CHECK(logistic_loss(-800.0, 1) == doctest::Approx(800.0));
  CHECK(logistic_loss(800.0, 1) == 0.0);
}
