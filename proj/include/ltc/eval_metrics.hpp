#pragma once

// Non-interpolated average precision, Full / Rare / Non-Rare mAP reports,
// and model footprint fields carried alongside them.

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "ltc/boost.hpp"
#include "ltc/matrix.hpp"

namespace ltc {

// Mean precision at the ranks of the positives, ranking by descending score
// with ties broken by ascending index. Empty when there are no positives.
std::optional<double> average_precision(std::span<const double> scores, std::span<const std::uint8_t> positives);

// Mean AP (fraction, not percent) over the columns of `scores` that have at
// least one positive among `labels`. Empty when no column has one.
std::optional<double> mean_average_precision(const Matrix& scores, std::span<const std::size_t> labels);

struct RelationAp {
  std::size_t relation = 0;
  std::size_t positives = 0;
  bool rare = false;
  std::optional<double> ap;  // absent when the relation has no positive row
};

struct MetricsReport {
  std::vector<RelationAp> per_relation;
  // Percentages; absent when the corresponding set has no scored relation.
  std::optional<double> map_full;
  std::optional<double> map_rare;
  std::optional<double> map_nonrare;
  std::size_t scored_full = 0;
  std::size_t scored_rare = 0;
  std::size_t scored_nonrare = 0;
  // Rare relations with no positive row in the evaluated set.
  std::vector<std::size_t> excluded_rare;
  Footprint footprint;
  double runtime_seconds = 0.0;
};

// `scores` is rows x relations; `labels[i]` is the true relation of row i.
MetricsReport build_report(const Matrix& scores, std::span<const std::size_t> labels,
                           std::span<const std::size_t> rare_set, const Footprint& footprint);

nlohmann::json report_json(const MetricsReport& report, bool include_runtime);
// Aligned Full / Rare / Non-Rare table with parameter and op counts.
void write_report_table(std::ostream& out, const std::string& label, const MetricsReport& report);
void write_report_table_header(std::ostream& out);
std::string format_percent(const std::optional<double>& value);

}  // namespace ltc
