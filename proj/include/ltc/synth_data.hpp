#pragma once

// Long-tail datasets with two feature views and a conditioning context
// column: synthetic generation with Zipf-skewed class counts, and the CSV
// schema shared with externally produced feature tables.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "ltc/matrix.hpp"

namespace ltc {

enum class Split : std::uint8_t { train, valid, test };

std::string to_string(Split split);
Split parse_split(const std::string& text);

struct LongTailDataset {
  std::size_t view_a_dims = 0;  // columns a_0..a_{m-1}
  std::size_t view_b_dims = 0;  // columns b_0..b_{n-1}
  Matrix features;              // rows x (view_a_dims + view_b_dims), view A first
  std::vector<std::int64_t> row_ids;
  std::vector<std::size_t> contexts;
  std::vector<std::size_t> relations;
  std::vector<Split> splits;

  std::size_t num_rows() const noexcept { return relations.size(); }
  std::size_t num_contexts() const;
  std::size_t num_relations() const;
  std::vector<std::size_t> rows_in(Split split) const;
  std::vector<std::size_t> train_counts() const;
  // Relations whose training count is below the threshold, ascending.
  std::vector<std::size_t> rare_set(int rare_threshold) const;
  std::vector<std::string> header() const;

  bool operator==(const LongTailDataset&) const = default;
};

struct GeneratorConfig {
  std::size_t num_contexts = 10;
  std::size_t relations_per_context = 8;
  double zipf_exponent = 2.0;
  std::size_t total_samples = 20000;
  std::size_t view_a_dims = 8;
  std::size_t view_b_dims = 4;
  std::size_t noise_dims = 8;  // appended to view A
  double cluster_sigma = 1.0;
  double view_b_informative = 0.5;
  int rare_threshold = 10;
  std::uint64_t seed = 7;

  void validate() const;
  bool operator==(const GeneratorConfig&) const = default;
};

// Side of the hypercube blob means are drawn from, centred at the origin.
inline constexpr double kBlobCubeSide = 6.0;

// Normalized rank^-s weights for ranks 1..n.
std::vector<double> zipf_weights(std::size_t n, double exponent);
// Largest-remainder rounding of total * weights; ties go to the lower rank.
std::vector<std::size_t> allocate_counts(std::size_t total, const std::vector<double>& weights);
// Smallest total giving every (context, relation) pair at least one sample.
std::size_t min_total_samples(const GeneratorConfig& config);
// Total that gives the least frequent pair about `min_per_relation` samples.
std::size_t sized_total_samples(const GeneratorConfig& config, double min_per_relation);

// View-A blob centres, one row per global relation id (context * relations_per_context + r).
Matrix view_a_blob_means(const GeneratorConfig& config);
LongTailDataset generate_longtail(const GeneratorConfig& config);

void write_dataset(const LongTailDataset& dataset, std::ostream& out);
void write_dataset(const LongTailDataset& dataset, const std::filesystem::path& path);
LongTailDataset read_dataset(std::istream& in);
LongTailDataset read_dataset(const std::filesystem::path& path);

void to_json(nlohmann::json& j, const GeneratorConfig& config);
void from_json(const nlohmann::json& j, GeneratorConfig& config);

}  // namespace ltc
