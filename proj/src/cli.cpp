#include "ltc/cli.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <set>
#include <chrono>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "ltc/cond_pipeline.hpp"
#include "ltc/eval_metrics.hpp"
#include "ltc/format.hpp"
#include "ltc/synth_data.hpp"

namespace ltc {

namespace {

constexpr const char* kModelFormat = "ltc-model/1";

struct KeySpec {
  std::string name;
  std::string default_value;
  std::string help;
};

const std::vector<KeySpec>& generate_keys() {
  static const std::vector<KeySpec> keys{
      {"contexts", "10", "number of context classes"},
      {"relations_per_context", "8", "relations per context, 2..16"},
      {"zipf", "2.0", "Zipf exponent of the (context, relation) frequencies"},
      {"samples", "20000", "total number of rows"},
      {"view_a_dims", "8", "informative view-A dimensions"},
      {"view_b_dims", "4", "view-B dimensions"},
      {"noise_dims", "8", "pure-noise dimensions appended to view A"},
      {"sigma", "1.0", "blob standard deviation"},
      {"view_b_informative", "0.5", "fraction of relations with signal in view B"},
      {"rare_threshold", "10", "training count below which a relation is rare"},
  };
  return keys;
}

const std::vector<KeySpec>& pipeline_keys() {
  static const std::vector<KeySpec> keys{
      {"scheme", "hybrid", "label coding: one_hot, binary, hamming, hybrid"},
      {"preset", "paper-large", "boosting preset: paper-large (700x5) or paper-small (300x3)"},
      {"rounds", "", "boosting rounds (overrides the preset)"},
      {"depth", "", "tree depth (overrides the preset)"},
      {"learning_rate", "0.1", "boosting learning rate"},
      {"l2_lambda", "1", "L2 regularization of leaf weights"},
      {"min_child_hessian", "1", "minimum hessian sum per child"},
      {"base_score", "0.5", "initial probability"},
      {"rare_threshold", "10", "training count below which a relation is rare"},
      {"hamming_data_bits", "4", "data bits of the Hamming section"},
      {"feature_selection", "on", "discriminant feature selection on/off"},
      {"selection", "top_k", "top_k, elbow or all"},
      {"select_k", "1000", "features kept per bit under top_k"},
      {"loss", "focal", "partition loss: entropy or focal"},
      {"focal_alpha", "1.0", "focal loss alpha"},
      {"focal_gamma", "2.0", "focal loss gamma"},
      {"num_thresholds", "32", "candidate partition points per feature"},
      {"shrinkage", "0.05", "LDA covariance shrinkage"},
      {"uniform_priors", "off", "LDA uniform class priors on/off"},
      {"aggregator", "lda", "bit aggregation: lda or product"},
      {"lda_floor", "1e-6", "absolute floor on the LDA covariance diagonal (with shrinkage > 0)"},
      {"two_query", "on", "fuse the clustered view-B query on/off"},
      {"k_clusters", "8", "k-means clusters over view B"},
      {"kmeans_max_iters", "100", "k-means iteration cap"},
  };
  return keys;
}

// Keys that only locate inputs/outputs or size thread pools; they are kept
// out of embedded provenance so artifacts depend only on content.
bool is_location_key(const std::string& key) {
  return key == "out" || key == "threads" || key == "config" || key == "data" || key == "model";
}

struct CommandSpec {
  std::string name;
  std::string help;
  std::vector<KeySpec> keys;
};

std::vector<CommandSpec> command_specs() {
  const KeySpec seed{"seed", "7", "random seed"};
  const KeySpec threads{"threads", "0", "worker threads (0 = all cores)"};
  std::vector<CommandSpec> specs;

  CommandSpec gen{"generate", "generate a synthetic long-tail dataset (CSV + JSON sidecar)", {}};
  gen.keys.push_back({"out", "", "output CSV path"});
  gen.keys.insert(gen.keys.end(), generate_keys().begin(), generate_keys().end());
  gen.keys.push_back(seed);
  specs.push_back(gen);

  CommandSpec train{"train", "train a conditional model bundle", {}};
  train.keys = {{"data", "", "dataset CSV"}, {"out", "", "output model JSON"}};
  train.keys.insert(train.keys.end(), pipeline_keys().begin(), pipeline_keys().end());
  train.keys.push_back(seed);
  train.keys.push_back(threads);
  specs.push_back(train);

  CommandSpec eval{"eval", "evaluate a model bundle on a dataset split", {}};
  eval.keys = {{"model", "", "model JSON"},
               {"data", "", "dataset CSV"},
               {"out", "", "report path prefix (writes .json, .txt, .scores.csv, .runtime.json)"},
               {"split", "test", "split to evaluate: train, valid or test"},
               threads};
  specs.push_back(eval);

  CommandSpec ablate{"ablate", "train and evaluate a grid of schemes and module switches", {}};
  ablate.keys = {{"data", "", "dataset CSV"},
                 {"out", "", "output directory"},
                 {"schemes", "one_hot,binary,hamming,hybrid", "coding schemes to compare"},
                 {"fs_grid", "on,off", "feature selection settings"},
                 {"two_query_grid", "on,off", "two-query settings"},
                 {"ablate_selection", "elbow", "selection mode used by feature-selection-on cells"},
                 {"split", "test", "split to evaluate"}};
  ablate.keys.insert(ablate.keys.end(), pipeline_keys().begin(), pipeline_keys().end());
  ablate.keys.push_back(seed);
  ablate.keys.push_back(threads);
  specs.push_back(ablate);

  CommandSpec inspect{"inspect", "print DFT rankings (from --data) or codebooks (from --model)", {}};
  inspect.keys = {{"data", "", "dataset CSV"},
                  {"model", "", "model JSON"},
                  {"context", "0", "context id to rank features for"},
                  {"bit", "", "single bit to rank (default: all bits)"},
                  {"out", "", "write the CSV here instead of stdout"}};
  for (const auto& k : pipeline_keys()) {
    if (k.name == "scheme" || k.name == "rare_threshold" || k.name == "hamming_data_bits" || k.name == "loss" ||
        k.name == "focal_alpha" || k.name == "focal_gamma" || k.name == "num_thresholds" || k.name == "selection" ||
        k.name == "select_k") {
      inspect.keys.push_back(k);
    }
  }
  specs.push_back(inspect);
  return specs;
}

std::string trim(std::string s) {
  const auto not_space = [](unsigned char c) { return !std::isspace(c); };
  s.erase(s.begin(), std::find_if(s.begin(), s.end(), not_space));
  s.erase(std::find_if(s.rbegin(), s.rend(), not_space).base(), s.end());
  return s;
}

// ---- typed access to resolved settings ----

const std::string& value_of(const RunConfig& cfg, const std::string& key) {
  const auto it = cfg.find(key);
  if (it == cfg.end()) throw UsageError("missing setting '" + key + "'");
  return it->second;
}

const std::string& required(const RunConfig& cfg, const std::string& key) {
  const std::string& v = value_of(cfg, key);
  if (v.empty()) throw UsageError("missing required --" + key);
  return v;
}

long long get_int(const RunConfig& cfg, const std::string& key, long long lo, long long hi) {
  const std::string& v = value_of(cfg, key);
  long long out = 0;
  const auto [end, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc{} || end != v.data() + v.size()) {
    throw UsageError("invalid value for '" + key + "': '" + v + "' is not an integer");
  }
  if (out < lo || out > hi) {
    throw UsageError("invalid value for '" + key + "': " + v + " outside [" + std::to_string(lo) + ", " +
                     std::to_string(hi) + "]");
  }
  return out;
}

double get_double(const RunConfig& cfg, const std::string& key) {
  const std::string& v = value_of(cfg, key);
  double out = 0.0;
  if (!parse_double(v, out) || !std::isfinite(out)) {
    throw UsageError("invalid value for '" + key + "': '" + v + "' is not a number");
  }
  return out;
}

bool get_switch(const RunConfig& cfg, const std::string& key) {
  const std::string& v = value_of(cfg, key);
  if (v == "on" || v == "true" || v == "1") return true;
  if (v == "off" || v == "false" || v == "0") return false;
  throw UsageError("invalid value for '" + key + "': '" + v + "' (expected on/off)");
}

std::vector<std::string> split_list(const std::string& v) {
  std::vector<std::string> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

unsigned thread_count(const RunConfig& cfg) {
  const auto n = static_cast<unsigned>(get_int(cfg, "threads", 0, 1024));
  return n == 0 ? std::max(1u, std::thread::hardware_concurrency()) : n;
}

template <class Fn>
auto as_usage(const std::string& key, Fn&& fn) {
  try {
    return fn();
  } catch (const LookupError& e) {
    throw UsageError("invalid value for '" + key + "': " + e.what());
  } catch (const DomainError& e) {
    throw UsageError("invalid value for '" + key + "': " + e.what());
  }
}

GeneratorConfig generator_config(const RunConfig& cfg) {
  GeneratorConfig g;
  g.num_contexts = static_cast<std::size_t>(get_int(cfg, "contexts", 1, 1 << 20));
  g.relations_per_context = static_cast<std::size_t>(get_int(cfg, "relations_per_context", 2, 16));
  g.zipf_exponent = get_double(cfg, "zipf");
  g.total_samples = static_cast<std::size_t>(get_int(cfg, "samples", 1, 1LL << 40));
  g.view_a_dims = static_cast<std::size_t>(get_int(cfg, "view_a_dims", 1, 1 << 20));
  g.view_b_dims = static_cast<std::size_t>(get_int(cfg, "view_b_dims", 1, 1 << 20));
  g.noise_dims = static_cast<std::size_t>(get_int(cfg, "noise_dims", 0, 1 << 20));
  g.cluster_sigma = get_double(cfg, "sigma");
  g.view_b_informative = get_double(cfg, "view_b_informative");
  g.rare_threshold = static_cast<int>(get_int(cfg, "rare_threshold", 0, 1 << 30));
  g.seed = static_cast<std::uint64_t>(get_int(cfg, "seed", 0, std::numeric_limits<long long>::max()));
  if (g.zipf_exponent < 0) throw UsageError("invalid value for 'zipf': must be >= 0");
  if (!(g.cluster_sigma > 0)) throw UsageError("invalid value for 'sigma': must be > 0");
  if (g.view_b_informative < 0 || g.view_b_informative > 1) {
    throw UsageError("invalid value for 'view_b_informative': must lie in [0, 1]");
  }
  return g;
}

PipelineConfig pipeline_config(const RunConfig& cfg) {
  PipelineConfig p;
  p.scheme = as_usage("scheme", [&] { return parse_scheme(value_of(cfg, "scheme")); });
  p.boost = as_usage("preset", [&] { return BoostConfig::preset(value_of(cfg, "preset")); });
  if (!value_of(cfg, "rounds").empty()) p.boost.num_rounds = static_cast<int>(get_int(cfg, "rounds", 1, 100000));
  if (!value_of(cfg, "depth").empty()) p.boost.max_depth = static_cast<int>(get_int(cfg, "depth", 1, 30));
  p.boost.learning_rate = get_double(cfg, "learning_rate");
  p.boost.l2_lambda = get_double(cfg, "l2_lambda");
  p.boost.min_child_hessian = get_double(cfg, "min_child_hessian");
  p.boost.base_score = get_double(cfg, "base_score");
  as_usage("learning_rate", [&] {
    p.boost.validate();
    return 0;
  });
  p.rare_threshold = static_cast<int>(get_int(cfg, "rare_threshold", 0, 1 << 30));
  p.hamming_data_bits = static_cast<int>(get_int(cfg, "hamming_data_bits", 1, 11));
  p.feature_selection = get_switch(cfg, "feature_selection");
  const std::string& sel = value_of(cfg, "selection");
  if (sel == "top_k") {
    p.selection = Selection::top(static_cast<std::size_t>(get_int(cfg, "select_k", 1, 1LL << 40)));
  } else if (sel == "elbow") {
    p.selection = Selection::elbow();
  } else if (sel == "all") {
    p.selection = Selection::everything();
  } else {
    throw UsageError("invalid value for 'selection': '" + sel + "' (expected top_k, elbow or all)");
  }
  const std::string& loss = value_of(cfg, "loss");
  if (loss != "entropy" && loss != "focal") throw UsageError("invalid value for 'loss': '" + loss + "'");
  p.dft.loss_kind = loss == "entropy" ? PartitionLossKind::entropy : PartitionLossKind::focal;
  p.dft.focal_alpha = get_double(cfg, "focal_alpha");
  p.dft.focal_gamma = get_double(cfg, "focal_gamma");
  p.dft.num_thresholds = static_cast<int>(get_int(cfg, "num_thresholds", 2, 1 << 20));
  as_usage("focal_gamma", [&] {
    p.dft.validate();
    return 0;
  });
  p.lda.shrinkage = get_double(cfg, "shrinkage");
  if (p.lda.shrinkage < 0 || p.lda.shrinkage > 1) throw UsageError("invalid value for 'shrinkage': must lie in [0, 1]");
  p.lda.uniform_priors = get_switch(cfg, "uniform_priors");
  p.aggregator = as_usage("aggregator", [&] { return parse_aggregator(value_of(cfg, "aggregator")); });
  p.lda.diagonal_floor = get_double(cfg, "lda_floor");
  if (!(p.lda.diagonal_floor > 0)) throw UsageError("invalid value for 'lda_floor': must be positive");
  p.two_query = get_switch(cfg, "two_query");
  p.k_clusters = static_cast<std::size_t>(get_int(cfg, "k_clusters", 1, 1 << 20));
  p.kmeans_max_iters = static_cast<int>(get_int(cfg, "kmeans_max_iters", 1, 1 << 20));
  p.seed = static_cast<std::uint64_t>(get_int(cfg, "seed", 0, std::numeric_limits<long long>::max()));
  return p;
}

nlohmann::json provenance_config(const RunConfig& cfg) {
  nlohmann::json j = nlohmann::json::object();
  for (const auto& [k, v] : cfg) {
    if (!is_location_key(k)) j[k] = v;
  }
  return j;
}

std::string schema_hash(const LongTailDataset& ds) {
  std::string joined;
  for (const auto& col : ds.header()) joined += col + ",";
  return sha256_hex(joined);
}

struct LoadedData {
  LongTailDataset dataset;
  std::string sha256;
  nlohmann::json generator;  // sidecar contents, or null
};

LoadedData load_data(const std::string& path) {
  LoadedData out;
  const std::string bytes = read_file(path);
  out.sha256 = sha256_hex(bytes);
  std::istringstream in(bytes);
  out.dataset = read_dataset(in);
  const std::filesystem::path sidecar = path + ".json";
  if (std::filesystem::exists(sidecar)) {
    try {
      out.generator = nlohmann::json::parse(read_file(sidecar));
    } catch (const nlohmann::json::exception& e) {
      throw ParseError("sidecar '" + sidecar.string() + "': " + e.what());
    }
  }
  return out;
}

void write_training_log(std::ostream& log, const ConditionalModel& model) {
  auto write_sub = [&](const std::string& kind, const Submodel& sub) {
    log << kind << ' ' << sub.id << ": relations=" << sub.relations.size();
    if (sub.degenerate) {
      log << " degenerate\n";
      return;
    }
    log << " scheme=" << to_string(sub.codebook.scheme) << " codeword_length=" << sub.codebook.codeword_length
        << " rare=" << sub.codebook.rare_class_ids.size() << (sub.codebook.degraded ? " degraded_to_one_hot" : "")
        << '\n';
    for (std::size_t b = 0; b < sub.bits.size(); ++b) {
      const BitModel& bit = sub.bits[b];
      log << "  bit " << b << ": rows=" << bit.train_rows << (bit.rare_section ? " rare_section" : "")
          << " selected_features=" << bit.classifier.selected_features.size();
      if (!bit.ranking.empty()) {
        log << " best_feature=" << bit.ranking.front().feature_index
            << " best_dft_loss=" << format_double(bit.ranking.front().loss);
      }
      log << " rounds=" << bit.classifier.rounds_completed << (bit.classifier.constant ? " constant" : "")
          << " final_logloss=" << format_double(bit.classifier.final_train_logloss()) << '\n';
      log << "    logloss:";
      for (double l : bit.classifier.train_logloss) log << ' ' << format_double(l);
      log << '\n';
    }
  };
  log << "alpha=" << format_double(model.alpha) << " beta=" << format_double(model.beta)
      << (model.fusion_defaulted ? " fusion_defaulted" : "") << '\n';
  for (const auto& sub : model.contexts) write_sub("context", sub);
  for (const auto& c : model.clusters) write_sub("cluster", c.model);
}

nlohmann::json model_bundle(const ConditionalModel& model, const RunConfig& cfg, const LoadedData& data) {
  return {{"format", kModelFormat},
          {"provenance",
           {{"command", "train"},
            {"config", provenance_config(cfg)},
            {"data_sha256", data.sha256},
            {"generator", data.generator}}},
          {"schema_sha256", schema_hash(data.dataset)},
          {"model", model}};
}

MetricsReport evaluate(const ConditionalModel& model, const LongTailDataset& ds, Split split, unsigned threads,
                       std::string* scores_csv = nullptr) {
  const auto rows = ds.rows_in(split);
  std::vector<std::size_t> labels;
  labels.reserve(rows.size());
  for (std::size_t r : rows) {
    if (ds.relations[r] >= model.num_relations) {
      throw ParseError("row " + std::to_string(ds.row_ids[r]) + " has relation " + std::to_string(ds.relations[r]) +
                       " unknown to the model");
    }
    labels.push_back(ds.relations[r]);
  }
  const Matrix scores = predict_table(model, ds, rows, threads);
  if (scores_csv) {
    constexpr std::size_t kTop = 5;
    std::ostringstream csv;
    csv << "row_id";
    for (std::size_t k = 1; k <= kTop; ++k) csv << ",relation_" << k << ",score_" << k;
    csv << '\n';
    std::vector<std::size_t> order(scores.cols());
    for (std::size_t i = 0; i < rows.size(); ++i) {
      const auto row = scores.row(i);
      std::iota(order.begin(), order.end(), std::size_t{0});
      const std::size_t top = std::min(kTop, order.size());
      std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(top), order.end(),
                        [&](std::size_t a, std::size_t b) { return row[a] > row[b] || (row[a] == row[b] && a < b); });
      csv << ds.row_ids[rows[i]];
      for (std::size_t k = 0; k < top; ++k) csv << ',' << order[k] << ',' << format_double(row[order[k]]);
      csv << '\n';
    }
    *scores_csv = csv.str();
  }
  return build_report(scores, labels, model.rare_relations, model_footprint(model));
}

// ---- commands ----

int cmd_generate(const RunConfig& cfg, std::ostream& out) {
  const std::string path = required(cfg, "out");
  const GeneratorConfig g = generator_config(cfg);
  LongTailDataset ds;
  try {
    ds = generate_longtail(g);
  } catch (const DomainError& e) {
    throw UsageError(e.what());
  }
  std::ostringstream csv;
  write_dataset(ds, csv);
  const std::string bytes = csv.str();
  write_file_atomic(path, bytes);
  const nlohmann::json sidecar = {{"command", "generate"},
                                  {"config", provenance_config(cfg)},
                                  {"generator", g},
                                  {"rows", ds.num_rows()},
                                  {"relations", ds.num_relations()},
                                  {"rare_relations", ds.rare_set(g.rare_threshold)},
                                  {"data_sha256", sha256_hex(bytes)}};
  write_file_atomic(path + ".json", sidecar.dump(2) + "\n");
  out << "wrote " << ds.num_rows() << " rows (" << ds.num_relations() << " relations, "
      << ds.rare_set(g.rare_threshold).size() << " rare) to " << path << '\n';
  return kExitOk;
}

int cmd_train(const RunConfig& cfg, std::ostream& out) {
  const std::string data_path = required(cfg, "data");
  const std::string out_path = required(cfg, "out");
  PipelineConfig pc = pipeline_config(cfg);
  pc.threads = thread_count(cfg);
  const LoadedData data = load_data(data_path);
  const ConditionalModel model = train_pipeline(data.dataset, default_view_spec(data.dataset), pc);
  write_file_atomic(out_path, model_bundle(model, cfg, data).dump() + "\n");
  std::ostringstream log;
  write_training_log(log, model);
  write_file_atomic(out_path + ".log", log.str());
  const Footprint fp = model_footprint(model);
  out << "trained " << model.contexts.size() << " context and " << model.clusters.size()
      << " cluster submodels; alpha=" << format_double(model.alpha) << " params=" << fp.param_count
      << " ops/query=" << fp.ops_per_query << "; wrote " << out_path << '\n';
  return kExitOk;
}

ConditionalModel load_model_bundle(const std::string& path, nlohmann::json& bundle) {
  try {
    bundle = nlohmann::json::parse(read_file(path));
    if (bundle.at("format").get<std::string>() != kModelFormat) throw ParseError("unsupported model format");
    return bundle.at("model").get<ConditionalModel>();
  } catch (const nlohmann::json::exception& e) {
    throw ParseError("model '" + path + "': " + e.what());
  }
}

int cmd_eval(const RunConfig& cfg, std::ostream& out) {
  const auto start = std::chrono::steady_clock::now();
  const std::string model_path = required(cfg, "model");
  const std::string data_path = required(cfg, "data");
  const std::string prefix = required(cfg, "out");
  const Split split = as_usage("split", [&] {
    try {
      return parse_split(value_of(cfg, "split"));
    } catch (const ParseError& e) {
      throw LookupError(e.what());
    }
  });
  const unsigned threads = thread_count(cfg);

  nlohmann::json bundle;
  const ConditionalModel model = load_model_bundle(model_path, bundle);
  const LoadedData data = load_data(data_path);
  const std::string expected = bundle.at("schema_sha256").get<std::string>();
  if (schema_hash(data.dataset) != expected) {
    throw ParseError("schema hash mismatch: dataset columns differ from the model's training schema");
  }
  std::string scores_csv;
  MetricsReport report = evaluate(model, data.dataset, split, threads, &scores_csv);
  report.runtime_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  const nlohmann::json doc = {{"provenance",
                               {{"command", "eval"},
                                {"config", provenance_config(cfg)},
                                {"model_sha256", sha256_hex(read_file(model_path))},
                                {"data_sha256", data.sha256},
                                {"train_config", bundle.at("provenance").at("config")}}},
                              {"split", to_string(split)},
                              {"report", report_json(report, false)}};
  std::ostringstream table;
  table << "# split=" << to_string(split) << " data_sha256=" << data.sha256 << '\n';
  write_report_table_header(table);
  write_report_table(table, to_string(model.config.scheme), report);
  write_file_atomic(prefix + ".json", doc.dump(2) + "\n");
  write_file_atomic(prefix + ".txt", table.str());
  write_file_atomic(prefix + ".scores.csv", scores_csv);
  write_file_atomic(prefix + ".runtime.json",
                    nlohmann::json{{"runtime_seconds", report.runtime_seconds}}.dump(2) + "\n");
  out << table.str();
  return kExitOk;
}

struct AblationCell {
  CodingScheme scheme;
  bool fs;
  bool two_query;
  MetricsReport report;
  std::size_t storage_bits = 0;
};

std::string cell_name(const AblationCell& c) {
  return to_string(c.scheme) + (c.fs ? "_fs" : "_nofs") + (c.two_query ? "_twoquery" : "_onequery");
}

int cmd_ablate(const RunConfig& cfg, std::ostream& out) {
  const std::string data_path = required(cfg, "data");
  const std::filesystem::path out_dir = required(cfg, "out");
  PipelineConfig base = pipeline_config(cfg);
  base.threads = thread_count(cfg);
  const Split split = as_usage("split", [&] {
    try {
      return parse_split(value_of(cfg, "split"));
    } catch (const ParseError& e) {
      throw LookupError(e.what());
    }
  });

  std::vector<CodingScheme> schemes;
  for (const auto& s : split_list(value_of(cfg, "schemes"))) {
    schemes.push_back(as_usage("schemes", [&] { return parse_scheme(s); }));
  }
  auto switches = [&](const std::string& key) {
    std::vector<bool> v;
    for (const auto& s : split_list(value_of(cfg, key))) {
      if (s == "on") {
        v.push_back(true);
      } else if (s == "off") {
        v.push_back(false);
      } else {
        throw UsageError("invalid value for '" + key + "': unknown grid entry '" + s + "'");
      }
    }
    if (v.empty()) throw UsageError("invalid value for '" + key + "': empty grid");
    return v;
  };
  const auto fs_grid = switches("fs_grid");
  const auto tq_grid = switches("two_query_grid");
  if (schemes.empty()) throw UsageError("invalid value for 'schemes': empty grid");
  const std::string& ablate_sel = value_of(cfg, "ablate_selection");
  Selection fs_selection = base.selection;
  if (ablate_sel == "elbow") {
    fs_selection = Selection::elbow();
  } else if (ablate_sel == "top_k") {
    fs_selection = base.selection;
  } else {
    throw UsageError("invalid value for 'ablate_selection': '" + ablate_sel + "'");
  }

  const LoadedData data = load_data(data_path);
  const ViewSpec view = default_view_spec(data.dataset);
  std::filesystem::create_directories(out_dir);

  std::vector<AblationCell> cells;
  for (CodingScheme scheme : schemes) {
    for (bool fs : fs_grid) {
      for (bool tq : tq_grid) {
        PipelineConfig pc = base;
        pc.scheme = scheme;
        pc.feature_selection = fs;
        pc.selection = fs_selection;
        pc.two_query = tq;
        AblationCell cell{scheme, fs, tq, {}, 0};
        const ConditionalModel model = train_pipeline(data.dataset, view, pc);
        cell.report = evaluate(model, data.dataset, split, pc.threads);
        cell.storage_bits = codeword_storage_bits(model);
        const nlohmann::json doc = {{"provenance",
                                     {{"command", "ablate"},
                                      {"config", provenance_config(cfg)},
                                      {"data_sha256", data.sha256}}},
                                    {"cell", {{"scheme", to_string(scheme)}, {"feature_selection", fs}, {"two_query", tq}}},
                                    {"pipeline_config", pc},
                                    {"alpha", model.alpha},
                                    {"codeword_storage_bits", cell.storage_bits},
                                    {"report", report_json(cell.report, false)}};
        write_file_atomic(out_dir / ("cell_" + cell_name(cell) + ".json"), doc.dump(2) + "\n");
        cells.push_back(std::move(cell));
      }
    }
  }

  std::ostringstream table;
  std::ostringstream csv;
  table << "# data_sha256=" << data.sha256 << " split=" << to_string(split) << '\n';
  char buf[256];
  std::snprintf(buf, sizeof buf, "%-10s %-4s %-5s %10s %10s %10s %10s %14s %12s\n", "Scheme", "FS", "2Q", "Full", "Rare",
                "Non-Rare", "CodeBits", "Params", "Ops/query");
  table << buf;
  csv << "scheme,feature_selection,two_query,map_full,map_rare,map_nonrare,codeword_storage_bits,param_count,"
         "ops_per_query\n";
  for (const auto& c : cells) {
    std::snprintf(buf, sizeof buf, "%-10s %-4s %-5s %10s %10s %10s %10zu %14zu %12zu\n", to_string(c.scheme).c_str(),
                  c.fs ? "on" : "off", c.two_query ? "on" : "off", format_percent(c.report.map_full).c_str(),
                  format_percent(c.report.map_rare).c_str(), format_percent(c.report.map_nonrare).c_str(),
                  c.storage_bits, c.report.footprint.param_count, c.report.footprint.ops_per_query);
    table << buf;
    csv << to_string(c.scheme) << ',' << (c.fs ? "on" : "off") << ',' << (c.two_query ? "on" : "off") << ','
        << format_percent(c.report.map_full) << ',' << format_percent(c.report.map_rare) << ','
        << format_percent(c.report.map_nonrare) << ',' << c.storage_bits << ',' << c.report.footprint.param_count
        << ',' << c.report.footprint.ops_per_query << '\n';
  }

  // Per-relation AP of each scheme's first grid cell, with hybrid deltas.
  std::map<CodingScheme, const AblationCell*> primary;
  for (const auto& c : cells) {
    if (c.fs == fs_grid.front() && c.two_query == tq_grid.front() && !primary.count(c.scheme)) primary[c.scheme] = &c;
  }
  const auto ap_of = [&](CodingScheme s, std::size_t rel) -> std::optional<double> {
    const auto it = primary.find(s);
    if (it == primary.end()) return std::nullopt;
    return it->second->report.per_relation.at(rel).ap;
  };
  const auto fmt = [](const std::optional<double>& v) { return v ? format_double(*v) : std::string(); };
  std::ostringstream deltas;
  deltas << "relation,rare,positives,ap_one_hot,ap_binary,ap_hamming,ap_hybrid,delta_hybrid_one_hot,"
            "delta_hybrid_hamming\n";
  const auto& per = cells.front().report.per_relation;
  for (std::size_t rel = 0; rel < per.size(); ++rel) {
    const auto oh = ap_of(CodingScheme::one_hot, rel);
    const auto hm = ap_of(CodingScheme::hamming, rel);
    const auto hy = ap_of(CodingScheme::hybrid, rel);
    deltas << rel << ',' << (per[rel].rare ? 1 : 0) << ',' << per[rel].positives << ',' << fmt(oh) << ','
           << fmt(ap_of(CodingScheme::binary, rel)) << ',' << fmt(hm) << ',' << fmt(hy) << ','
           << (hy && oh ? format_double(*hy - *oh) : "") << ',' << (hy && hm ? format_double(*hy - *hm) : "")
           << '\n';
  }

  const nlohmann::json summary = {{"provenance",
                                   {{"command", "ablate"}, {"config", provenance_config(cfg)}, {"data_sha256", data.sha256}}},
                                  {"table_csv", "ablation.csv"},
                                  {"relation_deltas_csv", "relation_deltas.csv"}};
  write_file_atomic(out_dir / "ablation.txt", table.str());
  write_file_atomic(out_dir / "ablation.csv", csv.str());
  write_file_atomic(out_dir / "relation_deltas.csv", deltas.str());
  write_file_atomic(out_dir / "ablation.json", summary.dump(2) + "\n");
  out << table.str();
  return kExitOk;
}

int cmd_inspect(const RunConfig& cfg, std::ostream& out) {
  const std::string& model_path = value_of(cfg, "model");
  const std::string& data_path = value_of(cfg, "data");
  if (model_path.empty() == data_path.empty()) throw UsageError("inspect needs exactly one of --model or --data");
  std::ostringstream text;

  if (!model_path.empty()) {
    nlohmann::json bundle;
    const ConditionalModel model = load_model_bundle(model_path, bundle);
    auto dump_sub = [&](const std::string& kind, const Submodel& sub) {
      text << kind << ' ' << sub.id << " relations=[";
      for (std::size_t i = 0; i < sub.relations.size(); ++i) text << (i ? "," : "") << sub.relations[i];
      text << "]";
      if (sub.degenerate) {
        text << " degenerate\n";
        return;
      }
      const auto& cb = sub.codebook;
      text << " scheme=" << to_string(cb.scheme) << " length=" << cb.codeword_length
           << " min_distance=" << min_pairwise_distance(cb.codewords) << '\n';
      for (std::size_t c = 0; c < cb.num_classes; ++c) {
        text << "  " << sub.relations[c] << (cb.is_rare(c) ? "*" : " ") << ' ' << bits_to_string(cb.codewords[c])
             << '\n';
      }
    };
    for (const auto& sub : model.contexts) dump_sub("context", sub);
    for (const auto& c : model.clusters) dump_sub("cluster", c.model);
  } else {
    PipelineConfig pc;
    pc.scheme = as_usage("scheme", [&] { return parse_scheme(value_of(cfg, "scheme")); });
    pc.rare_threshold = static_cast<int>(get_int(cfg, "rare_threshold", 0, 1 << 30));
    pc.hamming_data_bits = static_cast<int>(get_int(cfg, "hamming_data_bits", 1, 11));
    const std::string& loss = value_of(cfg, "loss");
    if (loss != "entropy" && loss != "focal") throw UsageError("invalid value for 'loss': '" + loss + "'");
    pc.dft.loss_kind = loss == "entropy" ? PartitionLossKind::entropy : PartitionLossKind::focal;
    pc.dft.focal_alpha = get_double(cfg, "focal_alpha");
    pc.dft.focal_gamma = get_double(cfg, "focal_gamma");
    pc.dft.num_thresholds = static_cast<int>(get_int(cfg, "num_thresholds", 2, 1 << 20));
    const std::string& sel = value_of(cfg, "selection");
    pc.selection = sel == "elbow" ? Selection::elbow()
                   : sel == "all" ? Selection::everything()
                                  : Selection::top(static_cast<std::size_t>(get_int(cfg, "select_k", 1, 1LL << 40)));

    const LoadedData data = load_data(data_path);
    const auto& ds = data.dataset;
    const auto context = static_cast<std::size_t>(get_int(cfg, "context", 0, 1LL << 40));
    std::vector<std::size_t> rows;
    std::map<std::size_t, std::size_t> counts;
    for (std::size_t r : ds.rows_in(Split::train)) {
      if (ds.contexts[r] != context) continue;
      rows.push_back(r);
      ++counts[ds.relations[r]];
    }
    if (counts.size() < 2) throw UsageError("context " + std::to_string(context) + " has fewer than 2 relations");
    std::vector<std::size_t> relations, class_counts;
    for (const auto& [rel, n] : counts) {
      relations.push_back(rel);
      class_counts.push_back(n);
    }
    const HybridCodebook cb = build_codebook(class_counts, pc.rare_threshold, pc.scheme, {pc.hamming_data_bits});
    const ViewSpec view = default_view_spec(ds);
    std::vector<std::size_t> bits;
    if (value_of(cfg, "bit").empty()) {
      for (std::size_t b = 0; b < cb.codeword_length; ++b) bits.push_back(b);
    } else {
      bits.push_back(static_cast<std::size_t>(get_int(cfg, "bit", 0, static_cast<long long>(cb.codeword_length) - 1)));
    }
    text << "bit,rank,feature_index,threshold,loss,selected\n";
    for (std::size_t b : bits) {
      std::vector<std::size_t> sub_rows;
      std::vector<std::uint8_t> labels;
      const bool rare_section = cb.scheme == CodingScheme::hybrid && cb.rare_bit_range.contains(b);
      for (std::size_t r : rows) {
        const auto local = static_cast<std::size_t>(
            std::lower_bound(relations.begin(), relations.end(), ds.relations[r]) - relations.begin());
        if (rare_section && !cb.is_rare(local)) continue;
        sub_rows.push_back(r);
        labels.push_back(cb.codewords[local][b]);
      }
      if (sub_rows.size() < 2) continue;
      DftRanking ranking = rank_features(ds.features.gather(sub_rows, view.view_a_columns), labels, pc.dft);
      ranking.selected_indices = select_features(ranking, pc.selection);
      std::ostringstream one;
      write_ranking_csv(one, ranking);
      std::string line;
      std::istringstream lines(one.str());
      std::getline(lines, line);  // header
      while (std::getline(lines, line)) text << b << ',' << line << '\n';
    }
  }

  const std::string& out_path = value_of(cfg, "out");
  if (out_path.empty()) {
    out << text.str();
  } else {
    write_file_atomic(out_path, text.str());
    out << "wrote " << out_path << '\n';
  }
  return kExitOk;
}

}  // namespace

RunConfig parse_run_config(std::istream& in) {
  RunConfig cfg;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw UsageError("config line " + std::to_string(line_no) + ": expected key=value");
    const std::string key = trim(line.substr(0, eq));
    if (key.empty()) throw UsageError("config line " + std::to_string(line_no) + ": empty key");
    cfg[key] = trim(line.substr(eq + 1));
  }
  return cfg;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open config file '" + path.string() + "'");
  return parse_run_config(in);
}

std::string format_run_config(const RunConfig& config) {
  std::string out;
  for (const auto& [k, v] : config) out += k + "=" + v + "\n";
  return out;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file_atomic(const std::filesystem::path& path, const std::string& bytes) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot open '" + tmp.string() + "' for writing");
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw Error("failed writing '" + tmp.string() + "'");
  }
  std::filesystem::rename(tmp, path);
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Long-tail relation classification with error-correcting label codes"};
  app.require_subcommand(1);
  const auto specs = command_specs();
  // Storage for flag values, keyed by command then setting.
  std::map<std::string, std::map<std::string, std::string>> values;
  std::map<std::string, std::map<std::string, CLI::Option*>> options;
  std::map<std::string, std::string> config_paths;
  std::map<std::string, CLI::App*> subs;
  for (const auto& spec : specs) {
    CLI::App* sub = app.add_subcommand(spec.name, spec.help);
    subs[spec.name] = sub;
    sub->add_option("--config", config_paths[spec.name], "key=value config file");
    for (const auto& key : spec.keys) {
      std::string help = key.help;
      if (!key.default_value.empty()) help += " [" + key.default_value + "]";
      options[spec.name][key.name] = sub->add_option("--" + key.name, values[spec.name][key.name], help);
    }
  }

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "usage error: " << e.what() << '\n';
    for (const auto& [name, sub] : subs) {
      if (sub->parsed()) {
        err << sub->help();
        return kExitUsage;
      }
    }
    err << app.help();
    return kExitUsage;
  }

  const CommandSpec* spec = nullptr;
  for (const auto& s : specs) {
    if (subs[s.name]->parsed()) spec = &s;
  }

  try {
    RunConfig cfg;
    for (const auto& key : spec->keys) cfg[key.name] = key.default_value;
    if (!config_paths[spec->name].empty()) {
      std::set<std::string> known;
      for (const auto& s : specs) {
        for (const auto& k : s.keys) known.insert(k.name);
      }
      for (const auto& [k, v] : load_run_config(config_paths[spec->name])) {
        if (!known.count(k)) throw UsageError("config file: unknown key '" + k + "'");
        if (cfg.count(k)) cfg[k] = v;
      }
    }
    for (const auto& key : spec->keys) {
      if (options[spec->name][key.name]->count() > 0) cfg[key.name] = values[spec->name][key.name];
    }

    if (spec->name == "generate") return cmd_generate(cfg, out);
    if (spec->name == "train") return cmd_train(cfg, out);
    if (spec->name == "eval") return cmd_eval(cfg, out);
    if (spec->name == "ablate") return cmd_ablate(cfg, out);
    return cmd_inspect(cfg, out);
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const ParseError& e) {
    err << "data error: " << e.what() << '\n';
    return kExitData;
  } catch (const ShapeError& e) {
    err << "data error: " << e.what() << '\n';
    return kExitData;
  } catch (const DomainError& e) {
    err << "data error: " << e.what() << '\n';
    return kExitData;
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << '\n';
    return kExitInternal;
  }
}

int run_cli(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return run_cli(args, std::cout, std::cerr);
}

}  // namespace ltc
