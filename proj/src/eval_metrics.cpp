#include "ltc/eval_metrics.hpp"

#include <algorithm>
#include <cstdio>
#include <numeric>
#include <ostream>

#include <nlohmann/json.hpp>

#include "ltc/error.hpp"

namespace ltc {

std::optional<double> average_precision(std::span<const double> scores, std::span<const std::uint8_t> positives) {
  if (scores.size() != positives.size()) throw ShapeError("scores and positives differ in length");
  const std::size_t total_pos =
      static_cast<std::size_t>(std::count_if(positives.begin(), positives.end(), [](std::uint8_t p) { return p != 0; }));
  if (total_pos == 0) return std::nullopt;

  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });

  double sum = 0.0;
  std::size_t hits = 0;
  for (std::size_t rank = 0; rank < order.size(); ++rank) {
    if (!positives[order[rank]]) continue;
    ++hits;
    sum += static_cast<double>(hits) / static_cast<double>(rank + 1);
    if (hits == total_pos) break;
  }
  return sum / static_cast<double>(total_pos);
}

namespace {

std::vector<std::optional<double>> per_column_ap(const Matrix& scores, std::span<const std::size_t> labels) {
  if (scores.rows() != labels.size()) throw ShapeError("score table rows and labels differ in length");
  std::vector<std::optional<double>> out(scores.cols());
  std::vector<double> column(scores.rows());
  std::vector<std::uint8_t> pos(scores.rows());
  for (std::size_t c = 0; c < scores.cols(); ++c) {
    bool any = false;
    for (std::size_t r = 0; r < scores.rows(); ++r) {
      pos[r] = labels[r] == c;
      any = any || pos[r];
    }
    if (!any) continue;
    for (std::size_t r = 0; r < scores.rows(); ++r) column[r] = scores(r, c);
    out[c] = average_precision(column, pos);
  }
  return out;
}

}  // namespace

std::optional<double> mean_average_precision(const Matrix& scores, std::span<const std::size_t> labels) {
  double sum = 0.0;
  std::size_t count = 0;
  for (const auto& ap : per_column_ap(scores, labels)) {
    if (!ap) continue;
    sum += *ap;
    ++count;
  }
  if (count == 0) return std::nullopt;
  return sum / static_cast<double>(count);
}

MetricsReport build_report(const Matrix& scores, std::span<const std::size_t> labels,
                           std::span<const std::size_t> rare_set, const Footprint& footprint) {
  for (std::size_t label : labels) {
    if (label >= scores.cols()) throw ShapeError("label " + std::to_string(label) + " has no score column");
  }
  MetricsReport report;
  report.footprint = footprint;
  const auto aps = per_column_ap(scores, labels);
  std::vector<std::size_t> positives(scores.cols(), 0);
  for (std::size_t label : labels) ++positives[label];

  double sum_full = 0.0, sum_rare = 0.0, sum_nonrare = 0.0;
  for (std::size_t c = 0; c < scores.cols(); ++c) {
    RelationAp entry;
    entry.relation = c;
    entry.positives = positives[c];
    entry.rare = std::find(rare_set.begin(), rare_set.end(), c) != rare_set.end();
    entry.ap = aps[c];
    if (entry.ap) {
      sum_full += *entry.ap;
      ++report.scored_full;
      if (entry.rare) {
        sum_rare += *entry.ap;
        ++report.scored_rare;
      } else {
        sum_nonrare += *entry.ap;
        ++report.scored_nonrare;
      }
    } else if (entry.rare) {
      report.excluded_rare.push_back(c);
    }
    report.per_relation.push_back(entry);
  }
  auto pct = [](double sum, std::size_t n) -> std::optional<double> {
    if (n == 0) return std::nullopt;
    return 100.0 * sum / static_cast<double>(n);
  };
  report.map_full = pct(sum_full, report.scored_full);
  report.map_rare = pct(sum_rare, report.scored_rare);
  report.map_nonrare = pct(sum_nonrare, report.scored_nonrare);
  return report;
}

nlohmann::json report_json(const MetricsReport& r, bool include_runtime) {
  auto opt = [](const std::optional<double>& v) { return v ? nlohmann::json(*v) : nlohmann::json(nullptr); };
  nlohmann::json per = nlohmann::json::array();
  for (const auto& e : r.per_relation) {
    per.push_back({{"relation", e.relation}, {"positives", e.positives}, {"rare", e.rare}, {"ap", opt(e.ap)}});
  }
  nlohmann::json j = {{"mAP_full", opt(r.map_full)},
                      {"mAP_rare", opt(r.map_rare)},
                      {"mAP_nonrare", opt(r.map_nonrare)},
                      {"scored_full", r.scored_full},
                      {"scored_rare", r.scored_rare},
                      {"scored_nonrare", r.scored_nonrare},
                      {"rare_undefined", !r.map_rare.has_value()},
                      {"excluded_rare", r.excluded_rare},
                      {"param_count", r.footprint.param_count},
                      {"ops_per_query", r.footprint.ops_per_query},
                      {"per_relation", std::move(per)}};
  if (include_runtime) j["runtime_seconds"] = r.runtime_seconds;
  return j;
}

std::string format_percent(const std::optional<double>& value) {
  if (!value) return "n/a";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4f", *value);
  return buf;
}

void write_report_table_header(std::ostream& out) {
  char buf[160];
  std::snprintf(buf, sizeof buf, "%-28s %10s %10s %10s %14s %12s\n", "Model", "Full", "Rare", "Non-Rare", "Params",
                "Ops/query");
  out << buf;
}

void write_report_table(std::ostream& out, const std::string& label, const MetricsReport& r) {
  char buf[200];
  std::snprintf(buf, sizeof buf, "%-28s %10s %10s %10s %14zu %12zu\n", label.c_str(), format_percent(r.map_full).c_str(),
                format_percent(r.map_rare).c_str(), format_percent(r.map_nonrare).c_str(), r.footprint.param_count,
                r.footprint.ops_per_query);
  out << buf;
}

}  // namespace ltc
