#include "ltc/cond_pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include <nlohmann/json.hpp>

#include "ltc/error.hpp"
#include "ltc/eval_metrics.hpp"
#include "ltc/kmeans.hpp"
#include "ltc/parallel.hpp"

namespace ltc {

void ViewSpec::validate(std::size_t num_columns) const {
  if (view_a_columns.empty()) throw DomainError("view A needs at least one column");
  std::vector<bool> used(num_columns, false);
  for (const auto* cols : {&view_a_columns, &view_b_columns}) {
    for (std::size_t c : *cols) {
      if (c >= num_columns) throw ShapeError("view column " + std::to_string(c) + " out of range");
      if (used[c]) throw DomainError("view column " + std::to_string(c) + " used twice");
      used[c] = true;
    }
  }
}

ViewSpec default_view_spec(const LongTailDataset& dataset) {
  ViewSpec view;
  for (std::size_t i = 0; i < dataset.view_a_dims; ++i) view.view_a_columns.push_back(i);
  for (std::size_t i = 0; i < dataset.view_b_dims; ++i) view.view_b_columns.push_back(dataset.view_a_dims + i);
  return view;
}

std::string to_string(Aggregator aggregator) { return aggregator == Aggregator::lda ? "lda" : "product"; }

Aggregator parse_aggregator(const std::string& name) {
  if (name == "lda") return Aggregator::lda;
  if (name == "product") return Aggregator::product;
  throw LookupError("unknown aggregator '" + name + "'");
}

std::vector<double> Submodel::bit_probs(std::span<const double> row) const {
  std::vector<double> probs(bits.size());
  for (std::size_t b = 0; b < bits.size(); ++b) probs[b] = predict_bit_prob(bits[b].classifier, row);
  return probs;
}

std::vector<double> Submodel::local_scores(std::span<const double> row, Aggregator aggregator) const {
  if (degenerate) return std::vector<double>(relations.size(), 1.0);
  const auto probs = bit_probs(row);
  if (aggregator == Aggregator::lda && lda) return lda_class_scores(*lda, probs);
  return decode_soft(codebook, probs);
}

const Submodel* ConditionalModel::find_context(std::size_t context) const {
  const auto it = std::lower_bound(contexts.begin(), contexts.end(), context,
                                   [](const Submodel& s, std::size_t c) { return s.id < c; });
  return it != contexts.end() && it->id == context ? &*it : nullptr;
}

namespace {

// Training rows and their local labels for one submodel.
struct SubmodelPlan {
  Submodel* sub = nullptr;
  std::vector<std::size_t> rows;
  std::vector<std::size_t> local_labels;
  const std::vector<std::size_t>* columns = nullptr;
};

void plan_submodel(SubmodelPlan& plan, const LongTailDataset& dataset, const PipelineConfig& config) {
  Submodel& sub = *plan.sub;
  std::map<std::size_t, std::size_t> counts;
  for (std::size_t r : plan.rows) ++counts[dataset.relations[r]];
  for (const auto& [rel, count] : counts) {
    sub.relations.push_back(rel);
    sub.train_counts.push_back(count);
  }
  plan.local_labels.reserve(plan.rows.size());
  for (std::size_t r : plan.rows) {
    const auto it = std::lower_bound(sub.relations.begin(), sub.relations.end(), dataset.relations[r]);
    plan.local_labels.push_back(static_cast<std::size_t>(it - sub.relations.begin()));
  }
  if (sub.relations.size() < 2) {
    sub.degenerate = true;
    return;
  }
  sub.codebook = build_codebook(sub.train_counts, config.rare_threshold, config.scheme,
                                CodebookOptions{config.hamming_data_bits});
  sub.bits.resize(sub.codebook.codeword_length);
}

struct FittedBit {
  std::vector<PartitionLoss> ranking;
  BoostedBitClassifier classifier;
};

FittedBit fit_bit(std::span<const std::size_t> rows, std::span<const std::uint8_t> labels,
                  const std::vector<std::size_t>& columns, const LongTailDataset& dataset,
                  const PipelineConfig& config) {
  FittedBit out;
  const auto positives = static_cast<std::size_t>(std::count(labels.begin(), labels.end(), std::uint8_t{1}));
  if (rows.size() < 2 || positives == 0 || positives == rows.size()) {
    out.classifier = constant_bit_classifier(positives * 2 > rows.size(), config.boost);
    return out;
  }
  std::vector<std::size_t> selected = columns;
  if (config.feature_selection) {
    const Matrix view = dataset.features.gather(rows, columns);
    DftRanking ranking = rank_features(view, labels, config.dft);
    for (auto& entry : ranking.entries) entry.feature_index = columns[entry.feature_index];
    selected = select_features(ranking, config.selection);
    out.ranking = std::move(ranking.entries);
  }
  std::vector<std::size_t> all(dataset.features.cols());
  std::iota(all.begin(), all.end(), std::size_t{0});
  const Matrix x = dataset.features.gather(rows, all);
  out.classifier = train_bit_classifier(x, labels, config.boost, std::move(selected));
  return out;
}

void train_bit(SubmodelPlan& plan, std::size_t bit, const LongTailDataset& dataset, const PipelineConfig& config) {
  Submodel& sub = *plan.sub;
  const HybridCodebook& cb = sub.codebook;
  BitModel& model = sub.bits[bit];
  model.rare_section = cb.scheme == CodingScheme::hybrid && cb.rare_bit_range.contains(bit);

  std::vector<std::size_t> rows;
  std::vector<std::uint8_t> labels;
  for (std::size_t i = 0; i < plan.rows.size(); ++i) {
    const std::size_t local = plan.local_labels[i];
    if (model.rare_section && !cb.is_rare(local)) continue;
    rows.push_back(plan.rows[i]);
    labels.push_back(cb.codewords[local][bit]);
  }
  model.train_rows = rows.size();
  FittedBit fitted = fit_bit(rows, labels, *plan.columns, dataset, config);
  model.ranking = std::move(fitted.ranking);
  model.classifier = std::move(fitted.classifier);
}

void fit_aggregator(SubmodelPlan& plan, const LongTailDataset& dataset, const PipelineConfig& config) {
  Submodel& sub = *plan.sub;
  if (sub.degenerate || config.aggregator != Aggregator::lda) return;
  Matrix probs(plan.rows.size(), sub.bits.size());
  for (std::size_t i = 0; i < plan.rows.size(); ++i) {
    const auto p = sub.bit_probs(dataset.features.row(plan.rows[i]));
    std::copy(p.begin(), p.end(), probs.row(i).begin());
  }
  sub.lda = fit_lda(probs, plan.local_labels, sub.relations.size(), config.lda);
}

void train_submodels(std::vector<SubmodelPlan>& plans, const LongTailDataset& dataset, const PipelineConfig& config) {
  for (auto& plan : plans) plan_submodel(plan, dataset, config);
  std::vector<std::pair<std::size_t, std::size_t>> jobs;
  for (std::size_t p = 0; p < plans.size(); ++p) {
    for (std::size_t b = 0; b < plans[p].sub->bits.size(); ++b) jobs.emplace_back(p, b);
  }
  // Larger training sets first for better load balance.
  std::stable_sort(jobs.begin(), jobs.end(), [&](const auto& a, const auto& b) {
    return plans[a.first].rows.size() > plans[b.first].rows.size();
  });
  parallel_for(jobs.size(), config.threads,
               [&](std::size_t j) { train_bit(plans[jobs[j].first], jobs[j].second, dataset, config); });
  parallel_for(plans.size(), config.threads, [&](std::size_t p) { fit_aggregator(plans[p], dataset, config); });
}

double median(std::vector<double> values) {
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  return n % 2 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

void normalize(std::vector<double>& v) {
  double total = 0.0;
  for (double x : v) total += x;
  if (total > 0.0) {
    for (double& x : v) x /= total;
  } else {
    std::fill(v.begin(), v.end(), 1.0 / static_cast<double>(v.size()));
  }
}

Matrix score_rows(std::span<const std::size_t> rows, std::size_t relations,
                  unsigned threads, const auto& scorer) {
  Matrix out(rows.size(), relations);
  parallel_for(rows.size(), threads, [&](std::size_t i) {
    const auto s = scorer(rows[i]);
    std::copy(s.begin(), s.end(), out.row(i).begin());
  });
  return out;
}

}  // namespace

ConditionalModel train_pipeline(const LongTailDataset& dataset, const ViewSpec& view, const PipelineConfig& config) {
  view.validate(dataset.features.cols());
  config.dft.validate();
  config.boost.validate();
  const auto train_rows = dataset.rows_in(Split::train);
  if (train_rows.empty()) throw DomainError("dataset has no training rows");

  ConditionalModel model;
  model.view = view;
  model.config = config;
  model.num_relations = dataset.num_relations();
  model.rare_relations = dataset.rare_set(config.rare_threshold);

  std::map<std::size_t, std::vector<std::size_t>> by_context;
  for (std::size_t r : train_rows) by_context[dataset.contexts[r]].push_back(r);
  model.contexts.resize(by_context.size());
  std::vector<SubmodelPlan> plans;
  std::size_t idx = 0;
  for (auto& [context, rows] : by_context) {
    model.contexts[idx].id = context;
    plans.push_back({&model.contexts[idx], std::move(rows), {}, &model.view.view_a_columns});
    ++idx;
  }

  if (config.two_query && !view.view_b_columns.empty()) {
    const Matrix points = dataset.features.gather(train_rows, view.view_b_columns);
    const std::size_t k = std::min(std::max<std::size_t>(config.k_clusters, 1), train_rows.size());
    const KMeansResult clustering = kmeans(points, k, config.seed, config.kmeans_max_iters);
    model.clusters.resize(k);
    std::vector<std::vector<std::size_t>> members(k);
    for (std::size_t i = 0; i < train_rows.size(); ++i) members[clustering.assignments[i]].push_back(train_rows[i]);
    for (std::size_t c = 0; c < k; ++c) {
      const auto centroid = clustering.centroids.row(c);
      model.clusters[c].centroid.assign(centroid.begin(), centroid.end());
      model.clusters[c].model.id = c;
    }
    std::vector<double> pairwise;
    for (std::size_t a = 0; a < k; ++a) {
      for (std::size_t b = a + 1; b < k; ++b) {
        pairwise.push_back(squared_distance(model.clusters[a].centroid, model.clusters[b].centroid));
      }
    }
    const double tau = pairwise.empty() ? 1.0 : median(pairwise);
    model.cluster_temperature = tau > 0.0 ? tau : 1.0;
    for (std::size_t c = 0; c < k; ++c) {
      plans.push_back({&model.clusters[c].model, std::move(members[c]), {}, &model.view.view_b_columns});
    }
  }

  train_submodels(plans, dataset, config);

  if (model.clusters.empty()) {
    model.alpha = 1.0;
    model.beta = 0.0;
    return model;
  }

  const auto valid_rows = dataset.rows_in(Split::valid);
  std::vector<std::size_t> labels;
  for (std::size_t r : valid_rows) labels.push_back(dataset.relations[r]);
  const Matrix scores_a = score_rows(valid_rows, model.num_relations, config.threads, [&](std::size_t r) {
    return context_scores(model, dataset.features.row(r), dataset.contexts[r]);
  });
  const Matrix scores_b = score_rows(valid_rows, model.num_relations, config.threads,
                                     [&](std::size_t r) { return cluster_scores(model, dataset.features.row(r)); });
  const FusionWeights fusion = fit_fusion_weights(scores_a, scores_b, labels);
  model.alpha = fusion.alpha;
  model.beta = fusion.beta;
  model.fusion_defaulted = fusion.defaulted;
  return model;
}

std::vector<double> context_scores(const ConditionalModel& model, std::span<const double> row, std::size_t context) {
  std::vector<double> out(model.num_relations, 0.0);
  const Submodel* sub = model.find_context(context);
  if (!sub) return out;
  const auto local = sub->local_scores(row, model.config.aggregator);
  for (std::size_t i = 0; i < local.size(); ++i) out[sub->relations[i]] = local[i];
  return out;
}

std::vector<double> cluster_weights(const ConditionalModel& model, std::span<const double> row) {
  std::vector<double> point;
  point.reserve(model.view.view_b_columns.size());
  for (std::size_t c : model.view.view_b_columns) point.push_back(row[c]);
  std::vector<double> logits(model.clusters.size());
  for (std::size_t k = 0; k < model.clusters.size(); ++k) {
    logits[k] = -squared_distance(model.clusters[k].centroid, point) / model.cluster_temperature;
  }
  const double mx = *std::max_element(logits.begin(), logits.end());
  double total = 0.0;
  for (double& l : logits) {
    l = std::exp(l - mx);
    total += l;
  }
  for (double& l : logits) l /= total;
  return logits;
}

std::vector<double> cluster_scores(const ConditionalModel& model, std::span<const double> row) {
  std::vector<double> out(model.num_relations, 0.0);
  if (model.clusters.empty()) return out;
  const auto weights = cluster_weights(model, row);
  for (std::size_t k = 0; k < model.clusters.size(); ++k) {
    if (weights[k] == 0.0) continue;
    const Submodel& sub = model.clusters[k].model;
    const auto local = sub.local_scores(row, model.config.aggregator);
    for (std::size_t i = 0; i < local.size(); ++i) out[sub.relations[i]] += weights[k] * local[i];
  }
  normalize(out);
  return out;
}

RelationPrediction predict_relation(const ConditionalModel& model, std::span<const double> row, std::size_t context) {
  if (row.size() < model.view.view_a_columns.size() + model.view.view_b_columns.size()) {
    throw ShapeError("feature row too short for the model's view spec");
  }
  RelationPrediction pred;
  const bool has_b = !model.clusters.empty();
  if (!model.find_context(context)) {
    pred.unseen_context = true;
    pred.scores = has_b ? cluster_scores(model, row) : std::vector<double>(model.num_relations, 0.0);
    normalize(pred.scores);
    return pred;
  }
  pred.scores = context_scores(model, row, context);
  if (has_b && model.beta > 0.0) {
    const auto b = cluster_scores(model, row);
    for (std::size_t i = 0; i < pred.scores.size(); ++i) pred.scores[i] = model.alpha * pred.scores[i] + model.beta * b[i];
  } else {
    for (double& s : pred.scores) s *= model.alpha;
  }
  normalize(pred.scores);
  return pred;
}

Matrix predict_table(const ConditionalModel& model, const LongTailDataset& dataset, std::span<const std::size_t> rows,
                     unsigned threads) {
  return score_rows(rows, model.num_relations, threads, [&](std::size_t r) {
    return predict_relation(model, dataset.features.row(r), dataset.contexts[r]).scores;
  });
}

Matrix fuse_scores(const Matrix& a, const Matrix& b, double alpha, double beta) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) throw ShapeError("fusion score tables differ in shape");
  Matrix out(a.rows(), a.cols());
  std::vector<double> row(a.cols());
  for (std::size_t r = 0; r < a.rows(); ++r) {
    for (std::size_t c = 0; c < a.cols(); ++c) row[c] = alpha * a(r, c) + beta * b(r, c);
    normalize(row);
    std::copy(row.begin(), row.end(), out.row(r).begin());
  }
  return out;
}

FusionWeights fit_fusion_weights(const Matrix& scores_a, const Matrix& scores_b, std::span<const std::size_t> labels) {
  if (scores_a.rows() != labels.size() || scores_b.rows() != labels.size()) {
    throw ShapeError("fusion score tables and labels differ in length");
  }
  FusionWeights best;
  best.defaulted = true;
  if (labels.empty()) return best;
  // Improvements smaller than this are treated as ties.
  constexpr double kTieTolerance = 1e-12;
  std::optional<double> best_map;
  for (int step = 0; step <= kFusionGridSteps; ++step) {
    const double alpha = static_cast<double>(step) / kFusionGridSteps;
    const auto map = mean_average_precision(fuse_scores(scores_a, scores_b, alpha, 1.0 - alpha), labels);
    if (!map) return best;
    if (!best_map || *map > *best_map + kTieTolerance) {
      best_map = map;
      best = {alpha, 1.0 - alpha, false};
    }
  }
  return best;
}

Footprint submodel_footprint(const Submodel& sub) {
  Footprint fp;
  if (sub.degenerate) return fp;
  for (const auto& bit : sub.bits) fp += footprint(bit.classifier);
  fp.param_count += sub.codebook.num_classes * sub.codebook.codeword_length;
  if (sub.lda) {
    fp.param_count += lda_param_count(*sub.lda);
    fp.ops_per_query += lda_ops_per_query(*sub.lda);
  }
  return fp;
}

Footprint model_footprint(const ConditionalModel& model) {
  Footprint fp;
  for (const auto& sub : model.contexts) fp += submodel_footprint(sub);
  for (const auto& cluster : model.clusters) fp += submodel_footprint(cluster.model);
  return fp;
}

std::size_t codeword_storage_bits(const ConditionalModel& model) {
  std::size_t bits = 0;
  auto add = [&](const Submodel& s) {
    if (!s.degenerate) bits += s.codebook.num_classes * s.codebook.codeword_length;
  };
  for (const auto& sub : model.contexts) add(sub);
  for (const auto& cluster : model.clusters) add(cluster.model);
  return bits;
}

void to_json(nlohmann::json& j, const ViewSpec& v) {
  j = {{"view_a_columns", v.view_a_columns}, {"view_b_columns", v.view_b_columns}};
}

void from_json(const nlohmann::json& j, ViewSpec& v) {
  v.view_a_columns = j.at("view_a_columns").get<std::vector<std::size_t>>();
  v.view_b_columns = j.at("view_b_columns").get<std::vector<std::size_t>>();
}

namespace {

std::string selection_mode_name(Selection::Mode mode) {
  switch (mode) {
    case Selection::Mode::top_k: return "top_k";
    case Selection::Mode::elbow: return "elbow";
    case Selection::Mode::all: return "all";
  }
  return "unknown";
}

Selection::Mode parse_selection_mode(const std::string& name) {
  if (name == "top_k") return Selection::Mode::top_k;
  if (name == "elbow") return Selection::Mode::elbow;
  if (name == "all") return Selection::Mode::all;
  throw ParseError("unknown selection mode '" + name + "'");
}

}  // namespace

void to_json(nlohmann::json& j, const PipelineConfig& c) {
  j = {{"scheme", to_string(c.scheme)},
       {"rare_threshold", c.rare_threshold},
       {"hamming_data_bits", c.hamming_data_bits},
       {"feature_selection", c.feature_selection},
       {"selection", {{"mode", selection_mode_name(c.selection.mode)}, {"k", c.selection.k}}},
       {"dft",
        {{"num_thresholds", c.dft.num_thresholds},
         {"loss_kind", c.dft.loss_kind == PartitionLossKind::entropy ? "entropy" : "focal"},
         {"focal_alpha", c.dft.focal_alpha},
         {"focal_gamma", c.dft.focal_gamma},
         {"prob_clamp_eps", c.dft.prob_clamp_eps}}},
       {"boost", c.boost},
       {"lda",
        {{"shrinkage", c.lda.shrinkage}, {"diagonal_floor", c.lda.diagonal_floor}, {"uniform_priors", c.lda.uniform_priors}}},
       {"aggregator", to_string(c.aggregator)},
       {"two_query", c.two_query},
       {"k_clusters", c.k_clusters},
       {"kmeans_max_iters", c.kmeans_max_iters},
       {"seed", c.seed}};
}

void from_json(const nlohmann::json& j, PipelineConfig& c) {
  c = PipelineConfig{};
  c.scheme = parse_scheme(j.at("scheme").get<std::string>());
  c.rare_threshold = j.at("rare_threshold").get<int>();
  c.hamming_data_bits = j.at("hamming_data_bits").get<int>();
  c.feature_selection = j.at("feature_selection").get<bool>();
  c.selection.mode = parse_selection_mode(j.at("selection").at("mode").get<std::string>());
  c.selection.k = j.at("selection").at("k").get<std::size_t>();
  const auto& dft = j.at("dft");
  c.dft.num_thresholds = dft.at("num_thresholds").get<int>();
  c.dft.loss_kind = dft.at("loss_kind").get<std::string>() == "entropy" ? PartitionLossKind::entropy
                                                                          : PartitionLossKind::focal;
  c.dft.focal_alpha = dft.at("focal_alpha").get<double>();
  c.dft.focal_gamma = dft.at("focal_gamma").get<double>();
  c.dft.prob_clamp_eps = dft.at("prob_clamp_eps").get<double>();
  c.boost = j.at("boost").get<BoostConfig>();
  const auto& lda = j.at("lda");
  c.lda.shrinkage = lda.at("shrinkage").get<double>();
  c.lda.diagonal_floor = lda.at("diagonal_floor").get<double>();
  c.lda.uniform_priors = lda.at("uniform_priors").get<bool>();
  c.aggregator = parse_aggregator(j.at("aggregator").get<std::string>());
  c.two_query = j.at("two_query").get<bool>();
  c.k_clusters = j.at("k_clusters").get<std::size_t>();
  c.kmeans_max_iters = j.at("kmeans_max_iters").get<int>();
  c.seed = j.at("seed").get<std::uint64_t>();
}

void to_json(nlohmann::json& j, const Submodel& s) {
  nlohmann::json bits = nlohmann::json::array();
  for (const auto& bit : s.bits) {
    nlohmann::json ranking = nlohmann::json::array();
    for (const auto& e : bit.ranking) ranking.push_back({e.feature_index, e.threshold, e.loss});
    bits.push_back({{"train_rows", bit.train_rows},
                    {"rare_section", bit.rare_section},
                    {"ranking", std::move(ranking)},
                    {"classifier", bit.classifier}});
  }
  j = {{"id", s.id},
       {"degenerate", s.degenerate},
       {"relations", s.relations},
       {"train_counts", s.train_counts},
       {"codebook", s.degenerate ? nlohmann::json(nullptr) : nlohmann::json(s.codebook)},
       {"bits", std::move(bits)},
       {"lda", s.lda ? nlohmann::json(*s.lda) : nlohmann::json(nullptr)}};
}

void from_json(const nlohmann::json& j, Submodel& s) {
  s = Submodel{};
  s.id = j.at("id").get<std::size_t>();
  s.degenerate = j.at("degenerate").get<bool>();
  s.relations = j.at("relations").get<std::vector<std::size_t>>();
  s.train_counts = j.at("train_counts").get<std::vector<std::size_t>>();
  if (!j.at("codebook").is_null()) s.codebook = j.at("codebook").get<HybridCodebook>();
  for (const auto& b : j.at("bits")) {
    BitModel bit;
    bit.train_rows = b.at("train_rows").get<std::size_t>();
    bit.rare_section = b.at("rare_section").get<bool>();
    for (const auto& e : b.at("ranking")) {
      PartitionLoss p;
      p.feature_index = e.at(0).get<std::size_t>();
      p.threshold = e.at(1).get<double>();
      p.loss = e.at(2).get<double>();
      bit.ranking.push_back(p);
    }
    bit.classifier = b.at("classifier").get<BoostedBitClassifier>();
    s.bits.push_back(std::move(bit));
  }
  if (!j.at("lda").is_null()) s.lda = j.at("lda").get<LdaModel>();
  if (!s.degenerate && s.bits.size() != s.codebook.codeword_length) {
    throw ParseError("submodel bit count does not match its codeword length");
  }
}

void to_json(nlohmann::json& j, const ConditionalModel& m) {
  nlohmann::json clusters = nlohmann::json::array();
  for (const auto& c : m.clusters) clusters.push_back({{"centroid", c.centroid}, {"submodel", c.model}});
  j = {{"view", m.view},
       {"config", m.config},
       {"num_relations", m.num_relations},
       {"rare_relations", m.rare_relations},
       {"contexts", m.contexts},
       {"clusters", std::move(clusters)},
       {"cluster_temperature", m.cluster_temperature},
       {"alpha", m.alpha},
       {"beta", m.beta},
       {"fusion_defaulted", m.fusion_defaulted}};
}

void from_json(const nlohmann::json& j, ConditionalModel& m) {
  m = ConditionalModel{};
  m.view = j.at("view").get<ViewSpec>();
  m.config = j.at("config").get<PipelineConfig>();
  m.num_relations = j.at("num_relations").get<std::size_t>();
  m.rare_relations = j.at("rare_relations").get<std::vector<std::size_t>>();
  m.contexts = j.at("contexts").get<std::vector<Submodel>>();
  for (const auto& c : j.at("clusters")) {
    ClusterSubmodel cs;
    cs.centroid = c.at("centroid").get<std::vector<double>>();
    cs.model = c.at("submodel").get<Submodel>();
    if (cs.centroid.size() != m.view.view_b_columns.size()) throw ParseError("cluster centroid dimension mismatch");
    m.clusters.push_back(std::move(cs));
  }
  m.cluster_temperature = j.at("cluster_temperature").get<double>();
  m.alpha = j.at("alpha").get<double>();
  m.beta = j.at("beta").get<double>();
  m.fusion_defaulted = j.at("fusion_defaulted").get<bool>();
  for (const auto& sub : m.contexts) {
    for (std::size_t r : sub.relations) {
      if (r >= m.num_relations) throw ParseError("submodel relation id out of range");
    }
  }
}

}  // namespace ltc
