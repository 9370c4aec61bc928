#pragma once

// Gradient-boosted regression trees on the logistic loss, used as the
// probability estimator for a single code bit. Trees are grown level-wise
// with exact greedy split search over midpoints between distinct values.

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "ltc/matrix.hpp"

namespace ltc {

struct BoostConfig {
  int num_rounds = 700;
  int max_depth = 5;
  double learning_rate = 0.1;
  double l2_lambda = 1.0;
  double min_child_hessian = 1.0;
  double base_score = 0.5;

  // "paper-large" (700 rounds, depth 5) or "paper-small" (300 rounds, depth 3).
  static BoostConfig preset(const std::string& name);
  void validate() const;
  bool operator==(const BoostConfig&) const = default;
};

struct TreeNode {
  int feature = -1;  // -1 marks a leaf
  double threshold = 0.0;
  int left = -1;  // taken when value < threshold
  int right = -1;
  double weight = 0.0;

  bool is_leaf() const noexcept { return feature < 0; }
  bool operator==(const TreeNode&) const = default;
};

class RegressionTree {
 public:
  RegressionTree() = default;
  explicit RegressionTree(std::vector<TreeNode> nodes) : nodes_(std::move(nodes)) {}

  // Raw leaf weight reached by `row` (indexed by original feature index).
  double leaf_weight(std::span<const double> row) const;
  int depth() const;
  const std::vector<TreeNode>& nodes() const noexcept { return nodes_; }
  bool operator==(const RegressionTree&) const = default;

 private:
  std::vector<TreeNode> nodes_;
};

struct BoostedBitClassifier {
  BoostConfig config;
  std::vector<std::size_t> selected_features;
  double base_margin = 0.0;
  std::vector<RegressionTree> trees;
  // Training labels were all one class; the model is a constant.
  bool constant = false;
  int rounds_completed = 0;
  std::vector<double> train_logloss;  // mean logloss after each round

  double final_train_logloss() const { return train_logloss.empty() ? 0.0 : train_logloss.back(); }
  bool operator==(const BoostedBitClassifier&) const = default;
};

// Probability assigned to each class by a single-class constant model.
inline constexpr double kConstantModelProb = 1e-3;

// Trains on the columns `selected_features` of `matrix` (all columns when empty).
BoostedBitClassifier train_bit_classifier(const Matrix& matrix, std::span<const std::uint8_t> bit_labels,
                                          const BoostConfig& config,
                                          std::vector<std::size_t> selected_features = {});

// Zero-tree model predicting kConstantModelProb or 1 - kConstantModelProb.
BoostedBitClassifier constant_bit_classifier(bool positive, const BoostConfig& config,
                                             std::vector<std::size_t> selected_features = {});

double predict_margin(const BoostedBitClassifier& model, std::span<const double> row);
double predict_bit_prob(const BoostedBitClassifier& model, std::span<const double> row);
std::vector<double> predict_bit_probs(const BoostedBitClassifier& model, const Matrix& rows);

double sigmoid(double margin);
double logistic_loss(double margin, std::uint8_t label);

struct Footprint {
  std::size_t param_count = 0;
  std::size_t ops_per_query = 0;

  Footprint& operator+=(const Footprint& other) {
    param_count += other.param_count;
    ops_per_query += other.ops_per_query;
    return *this;
  }
  friend Footprint operator+(Footprint a, const Footprint& b) { return a += b; }
  bool operator==(const Footprint&) const = default;
};

// Parameters: 5 stored fields per node. Ops per query: one compare per level
// on the deepest path plus one add per tree, one add for the base margin and
// 4 for the sigmoid.
inline constexpr std::size_t kFieldsPerNode = 5;
inline constexpr std::size_t kSigmoidOps = 4;
Footprint footprint(const BoostedBitClassifier& model);

void to_json(nlohmann::json& j, const BoostConfig& config);
void from_json(const nlohmann::json& j, BoostConfig& config);
void to_json(nlohmann::json& j, const BoostedBitClassifier& model);
void from_json(const nlohmann::json& j, BoostedBitClassifier& model);

}  // namespace ltc
