#include "ltc/boost.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <nlohmann/json.hpp>

#include "ltc/error.hpp"

namespace ltc {

namespace {

constexpr double kProbFloor = 1e-15;

double logit(double p) { return std::log(p / (1.0 - p)); }

struct SplitCandidate {
  double gain = 0.0;
  int feature = -1;  // position in the selected-column matrix
  double threshold = 0.0;
};

struct NodeScan {
  double g_left = 0.0;
  double h_left = 0.0;
  double last_value = 0.0;
  bool has_last = false;
};

double split_gain(double gl, double hl, double gr, double hr, double lambda) {
  const double g = gl + gr;
  const double h = hl + hr;
  return 0.5 * (gl * gl / (hl + lambda) + gr * gr / (hr + lambda) - g * g / (h + lambda));
}

double midpoint(double lo, double hi) {
  const double mid = lo + 0.5 * (hi - lo);
  return mid > lo ? mid : hi;
}

double mean_logloss(std::span<const double> margins, std::span<const std::uint8_t> labels) {
  double total = 0.0;
  for (std::size_t i = 0; i < margins.size(); ++i) total += logistic_loss(margins[i], labels[i]);
  return total / static_cast<double>(margins.size());
}

// Grows one tree on gradient statistics. `x` holds the selected columns in
// canonical sample order, `sorted` the per-column sample order by value.
std::vector<TreeNode> grow_tree(const Matrix& x, const std::vector<std::vector<std::uint32_t>>& sorted,
                                std::span<const double> grad, std::span<const double> hess,
                                const BoostConfig& config, std::span<const std::size_t> column_ids,
                                std::vector<int>& node_of) {
  const std::size_t n = x.rows();
  std::vector<TreeNode> nodes(1);
  std::fill(node_of.begin(), node_of.end(), 0);

  std::vector<int> frontier{0};
  std::vector<int> slot_of;  // node id -> frontier slot, -1 when not on the frontier
  for (int depth = 0; !frontier.empty(); ++depth) {
    slot_of.assign(nodes.size(), -1);
    for (std::size_t s = 0; s < frontier.size(); ++s) slot_of[frontier[s]] = static_cast<int>(s);

    std::vector<double> g_total(frontier.size(), 0.0);
    std::vector<double> h_total(frontier.size(), 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      const int slot = slot_of[node_of[i]];
      if (slot < 0) continue;
      g_total[slot] += grad[i];
      h_total[slot] += hess[i];
    }

    std::vector<SplitCandidate> best(frontier.size());
    if (depth < config.max_depth) {
      std::vector<NodeScan> scan(frontier.size());
      for (std::size_t f = 0; f < x.cols(); ++f) {
        std::fill(scan.begin(), scan.end(), NodeScan{});
        for (std::uint32_t i : sorted[f]) {
          const int slot = slot_of[node_of[i]];
          if (slot < 0) continue;
          NodeScan& st = scan[slot];
          const double v = x(i, f);
          if (st.has_last && v > st.last_value) {
            const double hr = h_total[slot] - st.h_left;
            if (st.h_left >= config.min_child_hessian && hr >= config.min_child_hessian) {
              const double gain =
                  split_gain(st.g_left, st.h_left, g_total[slot] - st.g_left, hr, config.l2_lambda);
              if (gain > best[slot].gain) best[slot] = {gain, static_cast<int>(f), midpoint(st.last_value, v)};
            }
          }
          st.g_left += grad[i];
          st.h_left += hess[i];
          st.last_value = v;
          st.has_last = true;
        }
      }
    }

    std::vector<int> next;
    std::vector<int> split_column(nodes.size() + 2 * frontier.size(), -1);
    for (std::size_t s = 0; s < frontier.size(); ++s) {
      const int id = frontier[s];
      if (best[s].feature < 0) {
        nodes[id].weight = -g_total[s] / (h_total[s] + config.l2_lambda);
        continue;
      }
      const int left = static_cast<int>(nodes.size());
      nodes.emplace_back();
      nodes.emplace_back();
      TreeNode& node = nodes[id];
      node.feature = static_cast<int>(column_ids[best[s].feature]);
      node.threshold = best[s].threshold;
      node.left = left;
      node.right = left + 1;
      split_column[id] = best[s].feature;
      next.push_back(left);
      next.push_back(left + 1);
    }
    if (next.empty()) break;
    for (std::size_t i = 0; i < n; ++i) {
      const int id = node_of[i];
      const int col = split_column[id];
      if (col < 0) continue;
      node_of[i] = x(i, col) < nodes[id].threshold ? nodes[id].left : nodes[id].right;
    }
    frontier = std::move(next);
  }
  return nodes;
}

}  // namespace

BoostConfig BoostConfig::preset(const std::string& name) {
  BoostConfig c;
  if (name == "paper-large") {
    c.num_rounds = 700;
    c.max_depth = 5;
  } else if (name == "paper-small") {
    c.num_rounds = 300;
    c.max_depth = 3;
  } else {
    throw LookupError("unknown boosting preset '" + name + "' (expected paper-large or paper-small)");
  }
  return c;
}

void BoostConfig::validate() const {
  if (num_rounds < 1) throw DomainError("num_rounds must be >= 1");
  if (max_depth < 1) throw DomainError("max_depth must be >= 1");
  if (!(learning_rate > 0.0 && learning_rate <= 1.0)) throw DomainError("learning_rate must lie in (0, 1]");
  if (!(l2_lambda >= 0.0)) throw DomainError("l2_lambda must be >= 0");
  if (!(min_child_hessian >= 0.0)) throw DomainError("min_child_hessian must be >= 0");
  if (!(base_score > 0.0 && base_score < 1.0)) throw DomainError("base_score must lie in (0, 1)");
}

double RegressionTree::leaf_weight(std::span<const double> row) const {
  int id = 0;
  while (!nodes_[id].is_leaf()) {
    const TreeNode& node = nodes_[id];
    id = row[node.feature] < node.threshold ? node.left : node.right;
  }
  return nodes_[id].weight;
}

int RegressionTree::depth() const {
  if (nodes_.empty()) return 0;
  std::vector<int> depth(nodes_.size(), 0);
  int deepest = 0;
  for (std::size_t id = 0; id < nodes_.size(); ++id) {
    const TreeNode& node = nodes_[id];
    if (node.is_leaf()) continue;
    depth[node.left] = depth[node.right] = depth[id] + 1;
    deepest = std::max(deepest, depth[id] + 1);
  }
  return deepest;
}

double sigmoid(double margin) { return 1.0 / (1.0 + std::exp(-margin)); }

double logistic_loss(double margin, std::uint8_t label) {
  // log(1 + exp(-m)) for positives, log(1 + exp(m)) for negatives.
  const double z = label ? -margin : margin;
  return z > 0.0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z));
}

BoostedBitClassifier train_bit_classifier(const Matrix& matrix, std::span<const std::uint8_t> bit_labels,
                                          const BoostConfig& config, std::vector<std::size_t> selected_features) {
  config.validate();
  if (matrix.rows() != bit_labels.size()) throw ShapeError("matrix rows and bit labels differ in length");
  if (matrix.rows() < 2) throw ShapeError("train_bit_classifier needs at least 2 samples");
  if (selected_features.empty()) {
    selected_features.resize(matrix.cols());
    std::iota(selected_features.begin(), selected_features.end(), std::size_t{0});
  }
  if (selected_features.empty()) throw ShapeError("train_bit_classifier needs at least one feature");
  for (std::size_t f : selected_features) {
    if (f >= matrix.cols()) throw ShapeError("selected feature index out of range");
  }

  BoostedBitClassifier model;
  model.config = config;
  model.selected_features = selected_features;

  const std::size_t n = matrix.rows();
  const std::size_t positives = static_cast<std::size_t>(std::count_if(
      bit_labels.begin(), bit_labels.end(), [](std::uint8_t y) { return y != 0; }));
  if (positives == 0 || positives == n) {
    model = constant_bit_classifier(positives == n, config, std::move(selected_features));
    std::vector<double> margins(n, model.base_margin);
    std::vector<std::uint8_t> labels(bit_labels.begin(), bit_labels.end());
    model.train_logloss.push_back(mean_logloss(margins, labels));
    return model;
  }

  // Canonical sample order (lexicographic on the selected columns, then
  // label) makes every floating-point accumulation independent of the
  // order in which samples were supplied.
  std::vector<std::size_t> canon(n);
  std::iota(canon.begin(), canon.end(), std::size_t{0});
  std::sort(canon.begin(), canon.end(), [&](std::size_t a, std::size_t b) {
    const auto ra = matrix.row(a);
    const auto rb = matrix.row(b);
    for (std::size_t f : selected_features) {
      if (ra[f] != rb[f]) return ra[f] < rb[f];
    }
    return bit_labels[a] < bit_labels[b];
  });
  const Matrix x = matrix.gather(canon, selected_features);
  std::vector<std::uint8_t> y(n);
  for (std::size_t i = 0; i < n; ++i) y[i] = bit_labels[canon[i]] ? 1 : 0;

  std::vector<std::vector<std::uint32_t>> sorted(x.cols(), std::vector<std::uint32_t>(n));
  for (std::size_t f = 0; f < x.cols(); ++f) {
    auto& order = sorted[f];
    std::iota(order.begin(), order.end(), 0u);
    std::stable_sort(order.begin(), order.end(), [&](std::uint32_t a, std::uint32_t b) { return x(a, f) < x(b, f); });
  }

  model.base_margin = logit(config.base_score);
  std::vector<double> margins(n, model.base_margin);
  std::vector<double> grad(n);
  std::vector<double> hess(n);
  std::vector<int> node_of(n, 0);
  model.trees.reserve(static_cast<std::size_t>(config.num_rounds));
  model.train_logloss.reserve(static_cast<std::size_t>(config.num_rounds));

  for (int round = 0; round < config.num_rounds; ++round) {
    for (std::size_t i = 0; i < n; ++i) {
      const double p = sigmoid(margins[i]);
      grad[i] = p - static_cast<double>(y[i]);
      hess[i] = p * (1.0 - p);
    }
    std::vector<TreeNode> nodes = grow_tree(x, sorted, grad, hess, config, selected_features, node_of);
    for (std::size_t i = 0; i < n; ++i) margins[i] += config.learning_rate * nodes[node_of[i]].weight;
    model.trees.emplace_back(std::move(nodes));
    model.train_logloss.push_back(mean_logloss(margins, y));
    ++model.rounds_completed;
  }
  return model;
}

BoostedBitClassifier constant_bit_classifier(bool positive, const BoostConfig& config,
                                             std::vector<std::size_t> selected_features) {
  BoostedBitClassifier model;
  model.config = config;
  model.selected_features = std::move(selected_features);
  model.constant = true;
  model.base_margin = logit(positive ? 1.0 - kConstantModelProb : kConstantModelProb);
  return model;
}

double predict_margin(const BoostedBitClassifier& model, std::span<const double> row) {
  if (!model.selected_features.empty() &&
      row.size() <= *std::max_element(model.selected_features.begin(), model.selected_features.end())) {
    throw ShapeError("feature vector of size " + std::to_string(row.size()) +
                     " does not cover the model's selected features");
  }
  double margin = model.base_margin;
  for (const auto& tree : model.trees) margin += model.config.learning_rate * tree.leaf_weight(row);
  return margin;
}

double predict_bit_prob(const BoostedBitClassifier& model, std::span<const double> row) {
  return std::clamp(sigmoid(predict_margin(model, row)), kProbFloor, 1.0 - kProbFloor);
}

std::vector<double> predict_bit_probs(const BoostedBitClassifier& model, const Matrix& rows) {
  std::vector<double> out(rows.rows());
  for (std::size_t r = 0; r < rows.rows(); ++r) out[r] = predict_bit_prob(model, rows.row(r));
  return out;
}

Footprint footprint(const BoostedBitClassifier& model) {
  Footprint fp;
  fp.ops_per_query = 1 + kSigmoidOps;
  for (const auto& tree : model.trees) {
    fp.param_count += tree.nodes().size() * kFieldsPerNode;
    fp.ops_per_query += static_cast<std::size_t>(tree.depth()) + 1;
  }
  return fp;
}

void to_json(nlohmann::json& j, const BoostConfig& c) {
  j = {{"num_rounds", c.num_rounds},       {"max_depth", c.max_depth},
       {"learning_rate", c.learning_rate}, {"l2_lambda", c.l2_lambda},
       {"min_child_hessian", c.min_child_hessian}, {"base_score", c.base_score}};
}

void from_json(const nlohmann::json& j, BoostConfig& c) {
  c.num_rounds = j.at("num_rounds").get<int>();
  c.max_depth = j.at("max_depth").get<int>();
  c.learning_rate = j.at("learning_rate").get<double>();
  c.l2_lambda = j.at("l2_lambda").get<double>();
  c.min_child_hessian = j.at("min_child_hessian").get<double>();
  c.base_score = j.at("base_score").get<double>();
}

void to_json(nlohmann::json& j, const BoostedBitClassifier& m) {
  nlohmann::json trees = nlohmann::json::array();
  for (const auto& tree : m.trees) {
    nlohmann::json nodes = nlohmann::json::array();
    for (const auto& node : tree.nodes()) {
      nodes.push_back({node.feature, node.threshold, node.left, node.right, node.weight});
    }
    trees.push_back(std::move(nodes));
  }
  j = {{"config", m.config},
       {"selected_features", m.selected_features},
       {"base_margin", m.base_margin},
       {"constant", m.constant},
       {"rounds_completed", m.rounds_completed},
       {"train_logloss", m.train_logloss},
       {"trees", std::move(trees)}};
}

void from_json(const nlohmann::json& j, BoostedBitClassifier& m) {
  m = BoostedBitClassifier{};
  m.config = j.at("config").get<BoostConfig>();
  m.selected_features = j.at("selected_features").get<std::vector<std::size_t>>();
  m.base_margin = j.at("base_margin").get<double>();
  m.constant = j.at("constant").get<bool>();
  m.rounds_completed = j.at("rounds_completed").get<int>();
  m.train_logloss = j.at("train_logloss").get<std::vector<double>>();
  for (const auto& tree : j.at("trees")) {
    std::vector<TreeNode> nodes;
    nodes.reserve(tree.size());
    for (const auto& rec : tree) {
      TreeNode node{rec.at(0).get<int>(), rec.at(1).get<double>(), rec.at(2).get<int>(), rec.at(3).get<int>(),
                    rec.at(4).get<double>()};
      if (!node.is_leaf() &&
          (node.left <= 0 || node.right <= 0 || static_cast<std::size_t>(std::max(node.left, node.right)) >= tree.size())) {
        throw ParseError("tree node has out-of-range children");
      }
      nodes.push_back(node);
    }
    if (nodes.empty()) throw ParseError("empty tree in model");
    m.trees.emplace_back(std::move(nodes));
  }
}

}  // namespace ltc
