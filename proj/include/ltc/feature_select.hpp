#pragma once

// Discriminant feature test: each 1-D feature is scored by the best binary
// partition of its value range, measured as the sample-weighted entropy (or
// focal loss) of the two sides. Lower loss means a more discriminant feature.

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include "ltc/matrix.hpp"

namespace ltc {

enum class PartitionLossKind { entropy, focal };

struct DftConfig {
  int num_thresholds = 32;
  PartitionLossKind loss_kind = PartitionLossKind::focal;
  double focal_alpha = 1.0;
  double focal_gamma = 2.0;
  double prob_clamp_eps = 1e-6;

  void validate() const;
};

struct PartitionLoss {
  std::size_t feature_index = 0;
  double threshold = 0.0;
  double loss = 0.0;
  std::size_t n_left = 0;   // samples with value <= threshold
  std::size_t n_right = 0;  // samples with value > threshold
  bool degenerate = false;  // constant feature, no interior candidate
};

struct DftRanking {
  std::vector<PartitionLoss> entries;  // ascending loss, ties by feature index
  std::vector<std::size_t> selected_indices;
};

// Binary entropy in nats of a partition with the given label counts.
double partition_entropy(std::size_t n_pos, std::size_t n_neg);

// -alpha (1-p)^gamma ln p, with p clamped into [eps, 1-eps].
double focal_term(double p, double alpha, double gamma, double eps);

// Loss of one side of a partition under the configured loss kind.
double side_loss(std::size_t n_pos, std::size_t n_neg, const DftConfig& config);

// Candidate thresholds: num_thresholds points evenly spaced strictly inside (lo, hi).
std::vector<double> candidate_thresholds(double lo, double hi, int num_thresholds);

PartitionLoss dft_score_feature(std::span<const double> values, std::span<const std::uint8_t> labels,
                                const DftConfig& config);

DftRanking rank_features(const Matrix& matrix, std::span<const std::uint8_t> bit_labels,
                         const DftConfig& config);

struct Selection {
  enum class Mode { top_k, elbow, all };
  Mode mode = Mode::top_k;
  std::size_t k = 1000;

  static Selection top(std::size_t k) { return {Mode::top_k, k}; }
  static Selection elbow() { return {Mode::elbow, 0}; }
  static Selection everything() { return {Mode::all, 0}; }
};

// Returns the selected feature indices in rank order. top_k clamps k to the
// number of ranked features.
std::vector<std::size_t> select_features(const DftRanking& ranking, const Selection& selection);

// Rank index of the elbow of an ascending loss curve: the point furthest
// from the chord joining the first and last points (first on ties).
std::size_t elbow_index(std::span<const double> sorted_losses);

void write_ranking_csv(std::ostream& out, const DftRanking& ranking);

}  // namespace ltc
