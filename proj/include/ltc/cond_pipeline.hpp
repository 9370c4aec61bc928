#pragma once

// Conditional two-query relation classifier.
//
// View A is modelled per context: rows sharing a context id train their own
// coded submodel over the relations seen with that context. View B is
// clustered with k-means and each cluster trains a submodel of the same
// shape. A submodel codes its relations with a codebook, picks features per
// bit with the discriminant feature test, trains one boosted classifier per
// bit and aggregates the bit probabilities with LDA. The two views are fused
// as alpha * P_A + beta * P_B with alpha chosen on the validation split.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "ltc/boost.hpp"
#include "ltc/feature_select.hpp"
#include "ltc/kmeans.hpp"
#include "ltc/label_codec.hpp"
#include "ltc/lda.hpp"
#include "ltc/matrix.hpp"
#include "ltc/synth_data.hpp"

namespace ltc {

struct ViewSpec {
  std::vector<std::size_t> view_a_columns;
  std::vector<std::size_t> view_b_columns;

  void validate(std::size_t num_columns) const;
  bool operator==(const ViewSpec&) const = default;
};

// a_* columns form view A, b_* columns view B.
ViewSpec default_view_spec(const LongTailDataset& dataset);

enum class Aggregator { lda, product };

struct PipelineConfig {
  CodingScheme scheme = CodingScheme::hybrid;
  int rare_threshold = 10;
  int hamming_data_bits = 4;
  bool feature_selection = true;
  Selection selection = Selection::top(1000);
  DftConfig dft;
  BoostConfig boost;
  LdaConfig lda;
  Aggregator aggregator = Aggregator::lda;
  bool two_query = true;
  std::size_t k_clusters = 8;
  int kmeans_max_iters = 100;
  std::uint64_t seed = 7;
  unsigned threads = 1;  // not serialized; results do not depend on it
};

struct BitModel {
  std::size_t train_rows = 0;
  bool rare_section = false;  // trained only on rows of rare classes
  std::vector<PartitionLoss> ranking;  // empty when selection is off
  BoostedBitClassifier classifier;
};

struct Submodel {
  std::size_t id = 0;
  bool degenerate = false;  // a single relation; posterior is constant
  std::vector<std::size_t> relations;  // local id -> global relation id
  std::vector<std::size_t> train_counts;
  HybridCodebook codebook;
  std::vector<BitModel> bits;
  std::optional<LdaModel> lda;

  std::vector<double> bit_probs(std::span<const double> row) const;
  // Posterior over local relation ids.
  std::vector<double> local_scores(std::span<const double> row, Aggregator aggregator) const;
};

struct ClusterSubmodel {
  std::vector<double> centroid;
  Submodel model;
};

struct ConditionalModel {
  ViewSpec view;
  PipelineConfig config;
  std::size_t num_relations = 0;
  std::vector<std::size_t> rare_relations;
  std::vector<Submodel> contexts;  // ascending context id
  std::vector<ClusterSubmodel> clusters;
  double cluster_temperature = 1.0;  // tau in softmax(-d^2 / tau)
  double alpha = 1.0;
  double beta = 0.0;
  bool fusion_defaulted = false;

  const Submodel* find_context(std::size_t context) const;
};

struct RelationPrediction {
  std::vector<double> scores;  // per global relation, sums to 1
  bool unseen_context = false;
};

ConditionalModel train_pipeline(const LongTailDataset& dataset, const ViewSpec& view, const PipelineConfig& config);

// `row` is a full feature row of the dataset layout.
RelationPrediction predict_relation(const ConditionalModel& model, std::span<const double> row, std::size_t context);

// Per-view posteriors scattered to global relation ids.
std::vector<double> context_scores(const ConditionalModel& model, std::span<const double> row, std::size_t context);
std::vector<double> cluster_weights(const ConditionalModel& model, std::span<const double> row);
std::vector<double> cluster_scores(const ConditionalModel& model, std::span<const double> row);

// rows x relations table of fused scores for the given dataset rows.
Matrix predict_table(const ConditionalModel& model, const LongTailDataset& dataset, std::span<const std::size_t> rows,
                     unsigned threads = 1);

struct FusionWeights {
  double alpha = 0.5;
  double beta = 0.5;
  bool defaulted = false;
};

inline constexpr int kFusionGridSteps = 20;  // alpha in {0, 0.05, ..., 1}

// Grid search maximizing validation mAP; ties keep the smaller alpha.
FusionWeights fit_fusion_weights(const Matrix& scores_a, const Matrix& scores_b, std::span<const std::size_t> labels);

// Row-normalized alpha * a + beta * b.
Matrix fuse_scores(const Matrix& scores_a, const Matrix& scores_b, double alpha, double beta);

Footprint submodel_footprint(const Submodel& sub);
Footprint model_footprint(const ConditionalModel& model);
// Total codebook storage in bits: classes x codeword length, summed.
std::size_t codeword_storage_bits(const ConditionalModel& model);

std::string to_string(Aggregator aggregator);
Aggregator parse_aggregator(const std::string& name);

void to_json(nlohmann::json& j, const ViewSpec& view);
void from_json(const nlohmann::json& j, ViewSpec& view);
void to_json(nlohmann::json& j, const PipelineConfig& config);
void from_json(const nlohmann::json& j, PipelineConfig& config);
void to_json(nlohmann::json& j, const Submodel& sub);
void from_json(const nlohmann::json& j, Submodel& sub);
void to_json(nlohmann::json& j, const ConditionalModel& model);
void from_json(const nlohmann::json& j, ConditionalModel& model);

}  // namespace ltc
