#include "ltc/synth_data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>
#include <string_view>

#include <nlohmann/json.hpp>

#include "ltc/error.hpp"
#include "ltc/format.hpp"
#include "ltc/rng.hpp"

namespace ltc {

std::string to_string(Split split) {
  switch (split) {
    case Split::train: return "train";
    case Split::valid: return "valid";
    case Split::test: return "test";
  }
  return "unknown";
}

Split parse_split(const std::string& text) {
  if (text == "train") return Split::train;
  if (text == "valid") return Split::valid;
  if (text == "test") return Split::test;
  throw ParseError("unknown split '" + text + "'");
}

std::size_t LongTailDataset::num_contexts() const {
  return contexts.empty() ? 0 : *std::max_element(contexts.begin(), contexts.end()) + 1;
}

std::size_t LongTailDataset::num_relations() const {
  return relations.empty() ? 0 : *std::max_element(relations.begin(), relations.end()) + 1;
}

std::vector<std::size_t> LongTailDataset::rows_in(Split split) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < splits.size(); ++i) {
    if (splits[i] == split) out.push_back(i);
  }
  return out;
}

std::vector<std::size_t> LongTailDataset::train_counts() const {
  std::vector<std::size_t> counts(num_relations(), 0);
  for (std::size_t i = 0; i < relations.size(); ++i) {
    if (splits[i] == Split::train) ++counts[relations[i]];
  }
  return counts;
}

std::vector<std::size_t> LongTailDataset::rare_set(int rare_threshold) const {
  std::vector<std::size_t> out;
  const auto counts = train_counts();
  for (std::size_t r = 0; r < counts.size(); ++r) {
    if (counts[r] < static_cast<std::size_t>(std::max(rare_threshold, 0))) out.push_back(r);
  }
  return out;
}

std::vector<std::string> LongTailDataset::header() const {
  std::vector<std::string> cols{"row_id", "split", "context", "relation"};
  for (std::size_t i = 0; i < view_a_dims; ++i) cols.push_back("a_" + std::to_string(i));
  for (std::size_t i = 0; i < view_b_dims; ++i) cols.push_back("b_" + std::to_string(i));
  return cols;
}

void GeneratorConfig::validate() const {
  if (num_contexts < 1) throw DomainError("num_contexts must be >= 1");
  if (relations_per_context < 2 || relations_per_context > 16) {
    throw DomainError("relations_per_context must lie in [2, 16]");
  }
  if (!(zipf_exponent >= 0.0)) throw DomainError("zipf_exponent must be >= 0");
  if (view_a_dims < 1) throw DomainError("view_a_dims must be >= 1");
  if (view_b_dims < 1) throw DomainError("view_b_dims must be >= 1");
  if (!(cluster_sigma > 0.0)) throw DomainError("cluster_sigma must be > 0");
  if (!(view_b_informative >= 0.0 && view_b_informative <= 1.0)) {
    throw DomainError("view_b_informative must lie in [0, 1]");
  }
  if (rare_threshold < 0) throw DomainError("rare_threshold must be >= 0");
}

std::vector<double> zipf_weights(std::size_t n, double exponent) {
  std::vector<double> w(n);
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    w[i] = std::pow(static_cast<double>(i + 1), -exponent);
    total += w[i];
  }
  for (double& x : w) x /= total;
  return w;
}

std::vector<std::size_t> allocate_counts(std::size_t total, const std::vector<double>& weights) {
  std::vector<std::size_t> counts(weights.size());
  std::vector<double> remainder(weights.size());
  std::size_t assigned = 0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    const double exact = static_cast<double>(total) * weights[i];
    counts[i] = static_cast<std::size_t>(std::floor(exact));
    remainder[i] = exact - static_cast<double>(counts[i]);
    assigned += counts[i];
  }
  std::vector<std::size_t> order(weights.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return remainder[a] > remainder[b]; });
  for (std::size_t i = 0; assigned < total && i < order.size(); ++i, ++assigned) ++counts[order[i]];
  return counts;
}

std::size_t min_total_samples(const GeneratorConfig& config) {
  const auto w = zipf_weights(config.num_contexts * config.relations_per_context, config.zipf_exponent);
  const double w_min = w.back();
  auto required = static_cast<std::size_t>(std::ceil(1.0 / w_min));
  while (std::floor(static_cast<double>(required) * w_min) < 1.0) ++required;
  return required;
}

std::size_t sized_total_samples(const GeneratorConfig& config, double min_per_relation) {
  const auto w = zipf_weights(config.num_contexts * config.relations_per_context, config.zipf_exponent);
  return std::max(min_total_samples(config), static_cast<std::size_t>(std::ceil(min_per_relation / w.back())));
}

namespace {

struct SplitSizes {
  std::size_t train, valid, test;
};

// 70/10/20 with at least one training row; a relation with two or more rows
// always contributes a test row.
SplitSizes split_sizes(std::size_t n) {
  if (n <= 1) return {n, 0, 0};
  const auto round_half_up = [](double x) { return static_cast<std::size_t>(std::floor(x + 0.5)); };
  const std::size_t test = std::max<std::size_t>(1, round_half_up(0.2 * static_cast<double>(n)));
  std::size_t valid = round_half_up(0.1 * static_cast<double>(n));
  if (test + valid >= n) valid = 0;
  return {n - test - valid, valid, test};
}

struct BlobLayout {
  std::vector<std::size_t> rank_of;  // frequency rank of each (context, relation) pair
  std::vector<bool> b_informative;
  Matrix mean_a;
  Matrix mean_b;
};

// Consumes the leading draws of the generator stream.
BlobLayout draw_layout(const GeneratorConfig& config, Rng& rng) {
  const std::size_t pairs = config.num_contexts * config.relations_per_context;
  BlobLayout out;
  out.rank_of.resize(pairs);
  std::iota(out.rank_of.begin(), out.rank_of.end(), std::size_t{0});
  rng.shuffle(out.rank_of.begin(), out.rank_of.end());

  std::vector<std::size_t> b_order(pairs);
  std::iota(b_order.begin(), b_order.end(), std::size_t{0});
  rng.shuffle(b_order.begin(), b_order.end());
  const auto informative_count =
      static_cast<std::size_t>(std::floor(config.view_b_informative * static_cast<double>(pairs) + 0.5));
  out.b_informative.assign(pairs, false);
  for (std::size_t i = 0; i < informative_count; ++i) out.b_informative[b_order[i]] = true;

  const double half = 0.5 * kBlobCubeSide;
  out.mean_a = Matrix(pairs, config.view_a_dims);
  out.mean_b = Matrix(pairs, config.view_b_dims);
  for (std::size_t g = 0; g < pairs; ++g) {
    for (double& v : out.mean_a.row(g)) v = rng.uniform(-half, half);
    if (out.b_informative[g]) {
      for (double& v : out.mean_b.row(g)) v = rng.uniform(-half, half);
    }
  }
  return out;
}

}  // namespace

Matrix view_a_blob_means(const GeneratorConfig& config) {
  config.validate();
  Rng rng(config.seed);
  return draw_layout(config, rng).mean_a;
}

LongTailDataset generate_longtail(const GeneratorConfig& config) {
  config.validate();
  const std::size_t pairs = config.num_contexts * config.relations_per_context;
  const std::size_t required = min_total_samples(config);
  if (config.total_samples < required) {
    throw DomainError("total_samples " + std::to_string(config.total_samples) +
                      " leaves some relation without samples; minimum is " + std::to_string(required));
  }

  Rng rng(config.seed);
  const BlobLayout layout = draw_layout(config, rng);
  const auto& [rank_of, b_informative, mean_a, mean_b] = layout;
  const auto by_rank = allocate_counts(config.total_samples, zipf_weights(pairs, config.zipf_exponent));

  const std::size_t a_cols = config.view_a_dims + config.noise_dims;
  const std::size_t cols = a_cols + config.view_b_dims;
  std::vector<double> values;
  values.reserve(config.total_samples * cols);
  std::vector<std::size_t> relation_of;
  relation_of.reserve(config.total_samples);
  for (std::size_t g = 0; g < pairs; ++g) {
    for (std::size_t j = 0; j < by_rank[rank_of[g]]; ++j) {
      for (std::size_t d = 0; d < config.view_a_dims; ++d) values.push_back(mean_a(g, d) + config.cluster_sigma * rng.normal());
      for (std::size_t d = 0; d < config.noise_dims; ++d) values.push_back(rng.normal());
      for (std::size_t d = 0; d < config.view_b_dims; ++d) {
        values.push_back(b_informative[g] ? mean_b(g, d) + config.cluster_sigma * rng.normal() : rng.normal());
      }
      relation_of.push_back(g);
    }
  }

  const std::size_t n = relation_of.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  rng.shuffle(order.begin(), order.end());

  LongTailDataset ds;
  ds.view_a_dims = a_cols;
  ds.view_b_dims = config.view_b_dims;
  ds.features = Matrix(n, cols);
  ds.row_ids.resize(n);
  ds.contexts.resize(n);
  ds.relations.resize(n);
  ds.splits.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t src = order[i];
    std::copy_n(values.begin() + static_cast<std::ptrdiff_t>(src * cols), cols, ds.features.row(i).begin());
    ds.row_ids[i] = static_cast<std::int64_t>(i);
    ds.relations[i] = relation_of[src];
    ds.contexts[i] = relation_of[src] / config.relations_per_context;
  }

  std::vector<std::size_t> totals(pairs, 0);
  for (std::size_t r : ds.relations) ++totals[r];
  std::vector<std::size_t> seen(pairs, 0);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t r = ds.relations[i];
    const SplitSizes sizes = split_sizes(totals[r]);
    const std::size_t k = seen[r]++;
    ds.splits[i] = k < sizes.train ? Split::train : (k < sizes.train + sizes.valid ? Split::valid : Split::test);
  }
  return ds;
}

void write_dataset(const LongTailDataset& ds, std::ostream& out) {
  const auto header = ds.header();
  for (std::size_t i = 0; i < header.size(); ++i) out << (i ? "," : "") << header[i];
  out << '\n';
  for (std::size_t r = 0; r < ds.num_rows(); ++r) {
    out << ds.row_ids[r] << ',' << to_string(ds.splits[r]) << ',' << ds.contexts[r] << ',' << ds.relations[r];
    for (double v : ds.features.row(r)) out << ',' << format_double(v);
    out << '\n';
  }
}

void write_dataset(const LongTailDataset& ds, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open '" + path.string() + "' for writing");
  write_dataset(ds, out);
  if (!out) throw Error("failed writing '" + path.string() + "'");
}

namespace {

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    std::string_view field = line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start);
    while (!field.empty() && (field.front() == ' ' || field.front() == '\t')) field.remove_prefix(1);
    while (!field.empty() && (field.back() == ' ' || field.back() == '\t')) field.remove_suffix(1);
    fields.push_back(field);
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return fields;
}

template <class Int>
Int parse_int(std::string_view text, std::size_t line, const std::string& column) {
  Int value{};
  const auto [end, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc{} || end != text.data() + text.size()) {
    throw ParseError("column '" + column + "': '" + std::string(text) + "' is not a valid integer", line);
  }
  return value;
}

}  // namespace

LongTailDataset read_dataset(std::istream& in) {
  std::string line;
  std::size_t line_no = 1;
  if (!std::getline(in, line)) throw ParseError("empty dataset file: missing header", 1);
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const auto header = split_fields(line);

  const std::vector<std::string> required{"row_id", "split", "context", "relation"};
  for (std::size_t i = 0; i < required.size(); ++i) {
    if (i >= header.size() || header[i] != required[i]) {
      throw ParseError("missing column '" + required[i] + "' (expected at position " + std::to_string(i) + ")", 1);
    }
  }
  LongTailDataset ds;
  std::size_t col = required.size();
  while (col < header.size() && header[col] == "a_" + std::to_string(ds.view_a_dims)) {
    ++ds.view_a_dims;
    ++col;
  }
  while (col < header.size() && header[col] == "b_" + std::to_string(ds.view_b_dims)) {
    ++ds.view_b_dims;
    ++col;
  }
  if (ds.view_a_dims == 0) throw ParseError("missing column 'a_0'", 1);
  if (ds.view_b_dims == 0) throw ParseError("missing column 'b_0'", 1);
  if (col != header.size()) {
    throw ParseError("unexpected column '" + std::string(header[col]) + "' at position " + std::to_string(col), 1);
  }

  const std::size_t cols = ds.view_a_dims + ds.view_b_dims;
  std::vector<double> values;
  const auto names = ds.header();
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto fields = split_fields(line);
    if (fields.size() != header.size()) {
      throw ParseError("expected " + std::to_string(header.size()) + " fields, found " + std::to_string(fields.size()),
                       line_no);
    }
    ds.row_ids.push_back(parse_int<std::int64_t>(fields[0], line_no, "row_id"));
    try {
      ds.splits.push_back(parse_split(std::string(fields[1])));
    } catch (const ParseError& e) {
      throw ParseError(std::string(e.what()), line_no);
    }
    ds.contexts.push_back(parse_int<std::size_t>(fields[2], line_no, "context"));
    ds.relations.push_back(parse_int<std::size_t>(fields[3], line_no, "relation"));
    for (std::size_t c = 0; c < cols; ++c) {
      double v = 0.0;
      if (!parse_double(fields[4 + c], v) || !std::isfinite(v)) {
        throw ParseError("column '" + names[4 + c] + "': '" + std::string(fields[4 + c]) + "' is not a finite number",
                         line_no);
      }
      values.push_back(v);
    }
  }
  ds.features = Matrix(ds.row_ids.size(), cols, std::move(values));
  return ds;
}

LongTailDataset read_dataset(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open dataset '" + path.string() + "'");
  return read_dataset(in);
}

void to_json(nlohmann::json& j, const GeneratorConfig& c) {
  j = {{"num_contexts", c.num_contexts},
       {"relations_per_context", c.relations_per_context},
       {"zipf_exponent", c.zipf_exponent},
       {"total_samples", c.total_samples},
       {"view_a_dims", c.view_a_dims},
       {"view_b_dims", c.view_b_dims},
       {"noise_dims", c.noise_dims},
       {"cluster_sigma", c.cluster_sigma},
       {"view_b_informative", c.view_b_informative},
       {"rare_threshold", c.rare_threshold},
       {"seed", c.seed}};
}

void from_json(const nlohmann::json& j, GeneratorConfig& c) {
  c.num_contexts = j.at("num_contexts").get<std::size_t>();
  c.relations_per_context = j.at("relations_per_context").get<std::size_t>();
  c.zipf_exponent = j.at("zipf_exponent").get<double>();
  c.total_samples = j.at("total_samples").get<std::size_t>();
  c.view_a_dims = j.at("view_a_dims").get<std::size_t>();
  c.view_b_dims = j.at("view_b_dims").get<std::size_t>();
  c.noise_dims = j.at("noise_dims").get<std::size_t>();
  c.cluster_sigma = j.at("cluster_sigma").get<double>();
  c.view_b_informative = j.at("view_b_informative").get<double>();
  c.rare_threshold = j.at("rare_threshold").get<int>();
  c.seed = j.at("seed").get<std::uint64_t>();
}

}  // namespace ltc
