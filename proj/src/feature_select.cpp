#include "ltc/feature_select.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <numeric>
#include <ostream>

#include "ltc/error.hpp"
#include "ltc/format.hpp"

namespace ltc {

void DftConfig::validate() const {
  if (num_thresholds < 2) throw DomainError("num_thresholds must be >= 2");
  if (focal_gamma < 0.0) throw DomainError("focal_gamma must be >= 0");
  if (!(prob_clamp_eps > 0.0 && prob_clamp_eps < 0.5)) throw DomainError("prob_clamp_eps must lie in (0, 0.5)");
}

double partition_entropy(std::size_t n_pos, std::size_t n_neg) {
  const std::size_t n = n_pos + n_neg;
  if (n == 0) throw DomainError("partition_entropy of an empty partition");
  const double p = static_cast<double>(n_pos) / static_cast<double>(n);
  const double q = static_cast<double>(n_neg) / static_cast<double>(n);
  double h = 0.0;
  if (p > 0.0) h -= p * std::log(p);
  if (q > 0.0) h -= q * std::log(q);
  return h;
}

double focal_term(double p, double alpha, double gamma, double eps) {
  const double clamped = std::clamp(p, eps, 1.0 - eps);
  return -alpha * std::pow(1.0 - clamped, gamma) * std::log(clamped);
}

double side_loss(std::size_t n_pos, std::size_t n_neg, const DftConfig& config) {
  if (config.loss_kind == PartitionLossKind::entropy) return partition_entropy(n_pos, n_neg);
  const double p = static_cast<double>(n_pos) / static_cast<double>(n_pos + n_neg);
  return focal_term(p, config.focal_alpha, config.focal_gamma, config.prob_clamp_eps);
}

std::vector<double> candidate_thresholds(double lo, double hi, int num_thresholds) {
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(num_thresholds));
  const double step = (hi - lo) / static_cast<double>(num_thresholds + 1);
  for (int j = 1; j <= num_thresholds; ++j) out.push_back(lo + step * static_cast<double>(j));
  return out;
}

PartitionLoss dft_score_feature(std::span<const double> values, std::span<const std::uint8_t> labels,
                                const DftConfig& config) {
  config.validate();
  if (values.size() != labels.size()) throw ShapeError("values and labels differ in length");
  if (values.size() < 2) throw ShapeError("dft_score_feature needs at least 2 samples");

  const std::size_t n = values.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });

  std::size_t total_pos = 0;
  for (auto y : labels) total_pos += (y != 0);

  const double lo = values[order.front()];
  const double hi = values[order.back()];
  PartitionLoss best;
  if (!(lo < hi)) {
    best.threshold = lo;
    best.loss = side_loss(total_pos, n - total_pos, config);
    best.n_left = n;
    best.n_right = 0;
    best.degenerate = true;
    return best;
  }

  const double nd = static_cast<double>(n);
  bool found = false;
  std::size_t cursor = 0;
  std::size_t left_pos = 0;
  for (double t : candidate_thresholds(lo, hi, config.num_thresholds)) {
    while (cursor < n && values[order[cursor]] <= t) {
      left_pos += (labels[order[cursor]] != 0);
      ++cursor;
    }
    const std::size_t n_left = cursor;
    const std::size_t n_right = n - cursor;
    if (n_left == 0 || n_right == 0) continue;
    const std::size_t right_pos = total_pos - left_pos;
    const double loss = (static_cast<double>(n_left) * side_loss(left_pos, n_left - left_pos, config) +
                         static_cast<double>(n_right) * side_loss(right_pos, n_right - right_pos, config)) /
                        nd;
    if (!found || loss < best.loss) {
      best.threshold = t;
      best.loss = loss;
      best.n_left = n_left;
      best.n_right = n_right;
      found = true;
    }
  }
  return best;
}

DftRanking rank_features(const Matrix& matrix, std::span<const std::uint8_t> bit_labels, const DftConfig& config) {
  if (matrix.empty()) throw ShapeError("rank_features on an empty matrix");
  if (matrix.rows() != bit_labels.size()) throw ShapeError("matrix rows and labels differ in length");
  DftRanking ranking;
  ranking.entries.reserve(matrix.cols());
  std::vector<double> column(matrix.rows());
  for (std::size_t f = 0; f < matrix.cols(); ++f) {
    for (std::size_t r = 0; r < matrix.rows(); ++r) column[r] = matrix(r, f);
    PartitionLoss score = dft_score_feature(column, bit_labels, config);
    score.feature_index = f;
    ranking.entries.push_back(score);
  }
  std::stable_sort(ranking.entries.begin(), ranking.entries.end(),
                   [](const PartitionLoss& a, const PartitionLoss& b) { return a.loss < b.loss; });
  return ranking;
}

std::size_t elbow_index(std::span<const double> sorted_losses) {
  if (sorted_losses.empty()) throw DomainError("elbow of an empty curve");
  const std::size_t n = sorted_losses.size();
  if (n <= 2) return n - 1;
  const double dx = static_cast<double>(n - 1);
  const double dy = sorted_losses.back() - sorted_losses.front();
  // Distance to the chord up to the constant factor 1/sqrt(dx^2 + dy^2).
  std::size_t best = 0;
  double best_distance = -1.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double d = std::abs(dy * static_cast<double>(i) - dx * (sorted_losses[i] - sorted_losses.front()));
    if (d > best_distance) {
      best_distance = d;
      best = i;
    }
  }
  if (best_distance <= 0.0) return n - 1;  // straight line: keep everything
  return best;
}

std::vector<std::size_t> select_features(const DftRanking& ranking, const Selection& selection) {
  if (ranking.entries.empty()) throw DomainError("select_features on an empty ranking");
  std::size_t count = ranking.entries.size();
  switch (selection.mode) {
    case Selection::Mode::top_k:
      count = std::min(selection.k, count);
      if (count == 0) throw DomainError("top_k selection with k = 0");
      break;
    case Selection::Mode::elbow: {
      std::vector<double> losses;
      losses.reserve(ranking.entries.size());
      for (const auto& e : ranking.entries) losses.push_back(e.loss);
      count = elbow_index(losses) + 1;
      break;
    }
    case Selection::Mode::all:
      break;
  }
  std::vector<std::size_t> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) out.push_back(ranking.entries[i].feature_index);
  return out;
}

void write_ranking_csv(std::ostream& out, const DftRanking& ranking) {
  out << "rank,feature_index,threshold,loss,selected\n";
  for (std::size_t i = 0; i < ranking.entries.size(); ++i) {
    const auto& e = ranking.entries[i];
    const bool selected = std::find(ranking.selected_indices.begin(), ranking.selected_indices.end(),
                                    e.feature_index) != ranking.selected_indices.end();
    out << i << ',' << e.feature_index << ',' << format_double(e.threshold) << ',' << format_double(e.loss) << ','
        << (selected ? 1 : 0) << '\n';
  }
}

}  // namespace ltc
