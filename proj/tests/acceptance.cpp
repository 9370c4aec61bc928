// Acceptance runner: one PASS/FAIL line per criterion.
//
//   acceptance [--dir PATH] [N ...]
//
// With no numbers every criterion runs. The exit status is 0 only when every
// failure is listed as a known gap (see kKnownGaps); any other FAIL exits 1.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <iostream>
#include <map>
#include <numbers>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ltc/boost.hpp"
#include "ltc/cli.hpp"
#include "ltc/eval_metrics.hpp"
#include "ltc/feature_select.hpp"
#include "ltc/kmeans.hpp"
#include "ltc/label_codec.hpp"
#include "ltc/lda.hpp"
#include "ltc/rng.hpp"
#include "ltc/synth_data.hpp"

#include "oracles.hpp"

using namespace ltc;
using namespace oracle;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

// Regression baseline for the standard long-tail fixture, recorded by the
// pre-build pilot (paper-small preset, feature selection on, two-query on).
constexpr double kPilotHybridRare = 32.5002;
constexpr double kPilotBinaryRare = 21.2012;
constexpr double kBaselineTolerance = 1e-4;  // the table prints 4 decimals

// Easy fixture: blob centres are drawn from a cube of side 6, which puts the
// closest same-context pair at 2.03 for seed 7; sigma 0.3 keeps 6 sigma below that.
constexpr double kEasySigma = 0.3;
// LDA variance floor for the easy run. With near-noiseless blobs the in-sample
// bit probabilities sit at 0/1, the pooled covariance collapses to the default
// floor and posteriors underflow to exact zeros, which ties AP rankings.
constexpr const char* kEasyLdaFloor = "1e-2";

struct Outcome {
  bool pass = false;
  std::string detail;
  // Names of failing sub-checks; a FAIL is tolerated by the exit status only
  // when all of them are known gaps.
  std::vector<std::string> failed;
};

// Sub-checks that are red for a documented structural reason (README, "Known gaps").
const std::set<std::string> kKnownGaps = {"8.params"};

fs::path g_dir;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

struct CliRun {
  int code;
  std::string err;
};

CliRun cli(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  const int code = run_cli(args, out, err);
  return {code, err.str()};
}

void require_ok(const CliRun& r, const std::string& what) {
  if (r.code != 0) throw std::runtime_error(what + " exited " + std::to_string(r.code) + ": " + r.err);
}

// Collects sub-check results into an Outcome.
struct Checks {
  Outcome out;
  std::vector<std::string> parts;
  void add(const std::string& name, bool ok, const std::string& text) {
    parts.push_back(text + (ok ? "" : " [no]"));
    if (!ok) out.failed.push_back(name);
  }
  Outcome done() {
    out.pass = out.failed.empty();
    for (std::size_t i = 0; i < parts.size(); ++i) out.detail += (i ? "; " : "") + parts[i];
    return out;
  }
};

Outcome hamming_k4() {
  const auto t0 = Clock::now();
  const auto spec = build_hamming(4);
  std::vector<BitVector> words;
  std::size_t corrected = 0, cases = 0;
  for (int v = 0; v < 16; ++v) {
    const auto d = data_word(v, 4);
    const auto word = hamming_encode(spec, d);
    words.push_back(word);
    for (std::size_t pos = 0; pos < word.size(); ++pos) {
      auto bad = word;
      bad[pos] ^= 1;
      ++cases;
      corrected += hamming_decode(spec, bad).data == d;
    }
  }
  const int dmin = brute_min_distance(words);
  const double secs = seconds_since(t0);
  Checks c;
  c.add("1.codewords", words.size() == 16, std::to_string(words.size()) + " codewords");
  c.add("1.distance", dmin >= 3, "min pairwise distance " + std::to_string(dmin));
  c.add("1.flips", cases == 112 && corrected == 112, std::to_string(corrected) + "/" + std::to_string(cases) + " flips corrected");
  c.add("1.time", secs < 1.0, fmt("%.4f s", secs));
  return c.done();
}

Outcome coding_examples() {
  const auto binary = build_codebook(std::vector<std::size_t>{50, 50, 50, 50}, 10, CodingScheme::binary);
  std::string bin;
  for (const auto& w : binary.codewords) bin += (bin.empty() ? "" : ",") + bits_to_string(w);
  const auto parity = parity_extend(binary.codewords);
  std::string par;
  for (const auto& w : parity) par += (par.empty() ? "" : ",") + bits_to_string(w);
  const int dmin = brute_min_distance(parity);
  Checks c;
  c.add("2.binary", bin == "00,01,10,11", "binary {" + bin + "}");
  c.add("2.parity", par == "000,011,101,110", "parity {" + par + "}");
  c.add("2.distance", dmin == 2, "parity min distance " + std::to_string(dmin));
  return c.done();
}

Outcome dft_oracle() {
  Rng rng(4242);
  int exact = 0;
  for (int trial = 0; trial < 100; ++trial) {
    DftConfig cfg;
    cfg.num_thresholds = 32;
    cfg.loss_kind = trial % 2 ? PartitionLossKind::entropy : PartitionLossKind::focal;
    const std::size_t n = 2 + rng.below(63);
    std::vector<double> v(n);
    std::vector<std::uint8_t> y(n);
    const bool discrete = trial % 3 == 0;
    for (std::size_t i = 0; i < n; ++i) {
      v[i] = discrete ? static_cast<double>(rng.below(5)) : rng.normal();
      y[i] = rng.uniform() < 0.4;
    }
    if (v == std::vector<double>(n, v[0])) v[0] += 1.0;
    const auto got = dft_score_feature(v, y, cfg);
    const auto want = brute_force(v, y, cfg);
    exact += want.any && got.loss == want.loss && got.threshold == want.threshold;
  }
  const double ent = std::abs(partition_entropy(50, 50) - std::numbers::ln2);
  const double foc = std::abs(focal_term(0.5, 1.0, 2.0, 1e-6) - 0.25 * std::numbers::ln2);
  Checks c;
  c.add("3.oracle", exact == 100, std::to_string(exact) + "/100 fixtures exact");
  c.add("3.entropy", ent <= 1e-12, "|H(50/50) - ln2| = " + fmt("%.1e", ent));
  c.add("3.focal", foc <= 1e-12, "|focal - ln2/4| = " + fmt("%.1e", foc));
  return c.done();
}

Outcome boosting() {
  const auto f = xor_fixture(200, 11);
  BoostConfig cfg;
  cfg.num_rounds = 100;
  cfg.max_depth = 3;
  cfg.learning_rate = 0.1;
  const double acc = accuracy(train_bit_classifier(f.x, f.y, cfg), f);

  int monotone = 0;
  for (std::uint64_t seed = 100; seed < 120; ++seed) {
    const auto r = random_fixture(seed);
    BoostConfig rc;
    rc.num_rounds = 60;
    rc.max_depth = 3;
    const auto model = train_bit_classifier(r.x, r.y, rc);
    bool ok = !model.train_logloss.empty();
    for (std::size_t i = 1; i < model.train_logloss.size(); ++i) ok = ok && model.train_logloss[i] <= model.train_logloss[i - 1];
    monotone += ok;
  }

  int identical = 0;
  const int perm_trials = 5;
  for (int t = 0; t < perm_trials; ++t) {
    const auto r = t == 0 ? xor_fixture(200, 12) : random_fixture(200 + t);
    BoostConfig pc;
    pc.num_rounds = 50;
    pc.max_depth = 4;
    const auto a = train_bit_classifier(r.x, r.y, pc);
    std::vector<std::size_t> perm(r.y.size()), cols(r.x.cols());
    for (std::size_t i = 0; i < perm.size(); ++i) perm[i] = i;
    for (std::size_t j = 0; j < cols.size(); ++j) cols[j] = j;
    Rng rng(300 + t);
    rng.shuffle(perm.begin(), perm.end());
    std::vector<std::uint8_t> py(perm.size());
    for (std::size_t i = 0; i < perm.size(); ++i) py[i] = r.y[perm[i]];
    const auto b = train_bit_classifier(r.x.gather(perm, cols), py, pc);
    bool same = true;
    for (std::size_t i = 0; i < r.y.size(); ++i) same = same && predict_bit_prob(a, r.x.row(i)) == predict_bit_prob(b, r.x.row(i));
    identical += same;
  }
  Checks c;
  c.add("4.xor", acc == 1.0, "XOR train accuracy " + fmt("%.4f", acc));
  c.add("4.logloss", monotone == 20, std::to_string(monotone) + "/20 logloss non-increasing");
  c.add("4.permutation", identical == perm_trials,
        std::to_string(identical) + "/" + std::to_string(perm_trials) + " permutations bit-identical");
  return c.done();
}

Outcome lda_closed_form() {
  double worst = 0.0;
  for (std::uint64_t seed = 50; seed < 60; ++seed) {
    const std::size_t d = 2 + seed % 4, classes = 2 + seed % 3;
    const auto f = random_fixture(seed, 40 + 10 * (seed % 5), d, classes);
    LdaConfig cfg;
    cfg.shrinkage = 0.05 * static_cast<double>(seed % 4);
    if (cfg.shrinkage == 0.0) cfg.shrinkage = 0.3;
    const auto model = fit_lda(f.x, f.y, classes, cfg);
    const auto want = oracle_discriminants(f, classes, cfg.shrinkage, f.x);
    for (std::size_t q = 0; q < f.x.rows(); ++q) {
      const auto got = lda_discriminants(model, f.x.row(q));
      for (std::size_t k = 0; k < classes; ++k) worst = std::max(worst, std::abs(got[k] - want[q][k]));
    }
  }
  double drift = 0.0;
  for (std::uint64_t seed = 60; seed < 65; ++seed) {
    const auto f = random_fixture(seed, 90, 4, 3);
    Rng rng(seed);
    Matrix moved = f.x;
    std::vector<double> offset(4);
    for (auto& o : offset) o = rng.uniform(-20.0, 20.0);
    for (std::size_t i = 0; i < moved.rows(); ++i) {
      for (std::size_t k = 0; k < 4; ++k) moved(i, k) += offset[k];
    }
    const auto a = fit_lda(f.x, f.y, 3);
    const auto b = fit_lda(moved, f.y, 3);
    for (std::size_t i = 0; i < f.x.rows(); ++i) {
      const auto sa = lda_class_scores(a, f.x.row(i));
      const auto sb = lda_class_scores(b, moved.row(i));
      for (std::size_t k = 0; k < 3; ++k) drift = std::max(drift, std::abs(sa[k] - sb[k]));
    }
  }
  Checks c;
  c.add("5.closed_form", worst <= 1e-9, "max |discriminant - closed form| " + fmt("%.1e", worst));
  c.add("5.translation", drift <= 1e-9, "max translation drift " + fmt("%.1e", drift));
  return c.done();
}

Outcome kmeans_objective() {
  int ok = 0;
  std::size_t steps = 0;
  for (std::uint64_t seed = 500; seed < 520; ++seed) {
    const auto x = random_points(seed, 200 + 20 * (seed % 7), 2 + seed % 4, 3 + seed % 5);
    const auto res = kmeans(x, 2 + seed % 6, seed);
    bool mono = !res.objective_history.empty();
    for (std::size_t i = 1; i < res.objective_history.size(); ++i) {
      mono = mono && res.objective_history[i] <= res.objective_history[i - 1];
    }
    steps += res.objective_history.size();
    ok += mono;
  }
  Checks c;
  c.add("6.objective", ok == 20, std::to_string(ok) + "/20 fixtures non-increasing over " + std::to_string(steps) + " steps");
  return c.done();
}

double min_within_context_separation(const GeneratorConfig& g) {
  const Matrix means = view_a_blob_means(g);
  double best = INFINITY;
  for (std::size_t ctx = 0; ctx < g.num_contexts; ++ctx) {
    for (std::size_t i = 0; i < g.relations_per_context; ++i) {
      for (std::size_t j = i + 1; j < g.relations_per_context; ++j) {
        const std::size_t a = ctx * g.relations_per_context + i, b = ctx * g.relations_per_context + j;
        best = std::min(best, std::sqrt(squared_distance(means.row(a), means.row(b))));
      }
    }
  }
  return best;
}

nlohmann::json load_json(const fs::path& p) { return nlohmann::json::parse(read_file(p)); }

Outcome easy_fixture() {
  GeneratorConfig g;
  g.cluster_sigma = kEasySigma;
  const double sep = min_within_context_separation(g);
  const fs::path dir = g_dir / "easy";
  fs::create_directories(dir);
  const std::string data = (dir / "easy.csv").string();
  const auto t0 = Clock::now();
  require_ok(cli({"generate", "--out", data, "--seed", "7", "--sigma", fmt("%g", kEasySigma), "--samples",
                  std::to_string(g.total_samples)}),
             "generate");
  require_ok(cli({"train", "--data", data, "--out", (dir / "model.json").string(), "--scheme", "hybrid", "--preset",
                  "paper-small", "--lda_floor", kEasyLdaFloor, "--threads", "8"}),
             "train");
  require_ok(cli({"eval", "--model", (dir / "model.json").string(), "--data", data, "--out", (dir / "report").string(),
                  "--threads", "8"}),
             "eval");
  const double secs = seconds_since(t0);
  const auto report = load_json(dir / "report.json").at("report");
  const double full = report.at("mAP_full").get<double>();
  Checks c;
  c.add("7.separation", 6.0 * kEasySigma <= sep, "6 sigma = " + fmt("%.2f", 6 * kEasySigma) + " <= min blob gap " + fmt("%.4f", sep));
  c.add("7.map", full >= 95.0, "hybrid mAP_full " + fmt("%.4f", full) + " (rare " +
                                   fmt("%.4f", report.at("mAP_rare").get<double>()) + ")");
  c.add("7.time", secs <= 120.0, "generate+train+eval " + fmt("%.1f s", secs));
  return c.done();
}

std::vector<std::vector<std::string>> read_csv_rows(const fs::path& p) {
  std::vector<std::vector<std::string>> rows;
  std::istringstream in(read_file(p));
  std::string line;
  while (std::getline(in, line)) {
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    rows.push_back(cells);
  }
  return rows;
}

Outcome standard_ablation() {
  GeneratorConfig g;
  g.num_contexts = 4;
  g.relations_per_context = 16;
  g.zipf_exponent = 2.0;
  g.seed = 7;
  g.total_samples = sized_total_samples(g, 3.0);
  const fs::path dir = g_dir / "standard";
  fs::create_directories(dir);
  const std::string data = (dir / "standard.csv").string();
  require_ok(cli({"generate", "--out", data, "--contexts", "4", "--relations_per_context", "16", "--zipf", "2",
                  "--samples", std::to_string(g.total_samples), "--seed", "7"}),
             "generate");
  const auto ds = read_dataset(fs::path(data));
  const double rare_frac =
      static_cast<double>(ds.rare_set(g.rare_threshold).size()) / static_cast<double>(ds.num_relations());
  require_ok(cli({"ablate", "--data", data, "--out", (dir / "ablation").string(), "--preset", "paper-small",
                  "--fs_grid", "on", "--two_query_grid", "on", "--ablate_selection", "top_k", "--threads", "8"}),
             "ablate");

  const auto rows = read_csv_rows(dir / "ablation" / "ablation.csv");
  const auto& head = rows.at(0);
  auto col = [&](const std::string& name) {
    return static_cast<std::size_t>(std::find(head.begin(), head.end(), name) - head.begin());
  };
  struct Row {
    double rare = 0;
    double storage = 0, params = 0;
  };
  std::map<std::string, Row> by_scheme;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto& cells = rows[r];
    by_scheme[cells.at(col("scheme"))] = {std::stod(cells.at(col("map_rare"))), std::stod(cells.at(col("codeword_storage_bits"))),
                                          std::stod(cells.at(col("param_count")))};
  }
  const bool four = rows.size() == 5 && by_scheme.size() == 4 && by_scheme.count("one_hot") && by_scheme.count("binary") &&
                    by_scheme.count("hamming") && by_scheme.count("hybrid");
  Checks c;
  c.add("8.fixture", rare_frac >= 0.25, std::to_string(ds.num_relations()) + " relations, " + fmt("%.0f%% rare", 100 * rare_frac));
  c.add("8.rows", four, std::to_string(rows.size() - 1) + " scheme rows");
  if (!four) return c.done();
  const Row& h = by_scheme["hybrid"];
  const Row& o = by_scheme["one_hot"];
  const Row& b = by_scheme["binary"];
  c.add("8.storage", h.storage < o.storage, "storage bits hybrid " + fmt("%.0f", h.storage) + " < one_hot " + fmt("%.0f", o.storage));
  c.add("8.params", h.params < o.params, "params hybrid " + fmt("%.0f", h.params) + " < one_hot " + fmt("%.0f", o.params));
  c.add("8.rare", h.rare >= b.rare, "mAP_rare hybrid " + fmt("%.4f", h.rare) + " >= binary " + fmt("%.4f", b.rare));
  const bool locked =
      std::abs(h.rare - kPilotHybridRare) <= kBaselineTolerance && std::abs(b.rare - kPilotBinaryRare) <= kBaselineTolerance;
  c.add("8.baseline", locked, "pilot baseline reproduced (" + fmt("%.4f", kPilotHybridRare) + " / " + fmt("%.4f", kPilotBinaryRare) + ")");
  return c.done();
}

Outcome determinism() {
  const fs::path dir = g_dir / "determinism";
  fs::create_directories(dir);
  std::vector<std::string> files;
  for (const char* tag : {"a", "b"}) {
    const std::string t = tag;
    const std::string data = (dir / (t + ".csv")).string();
    require_ok(cli({"generate", "--out", data, "--seed", "11"}), "generate");
    // Different thread counts: results must not depend on scheduling.
    require_ok(cli({"train", "--data", data, "--out", (dir / (t + ".model.json")).string(), "--preset", "paper-small",
                    "--rounds", "60", "--threads", t == "a" ? "1" : "8"}),
               "train");
    require_ok(cli({"eval", "--model", (dir / (t + ".model.json")).string(), "--data", data, "--out",
                    (dir / (t + ".report")).string(), "--threads", t == "a" ? "8" : "1"}),
               "eval");
  }
  Checks c;
  for (const char* ext : {".csv", ".model.json", ".report.json", ".report.txt", ".report.scores.csv"}) {
    const std::string a = read_file(dir / (std::string("a") + ext));
    const std::string b = read_file(dir / (std::string("b") + ext));
    c.add(std::string("9") + ext, a == b && !a.empty(), std::string(ext + 1) + (a == b ? " identical" : " differs"));
  }
  return c.done();
}

Outcome ap_oracle() {
  Rng rng(777);
  int exact = 0;
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 1 + rng.below(60);
    std::vector<double> s(n);
    std::vector<std::uint8_t> p(n);
    for (std::size_t i = 0; i < n; ++i) {
      s[i] = trial % 2 ? static_cast<double>(rng.below(5)) : rng.uniform();
      p[i] = rng.uniform() < 0.3;
    }
    p[rng.below(n)] = 1;
    exact += *average_precision(s, p) == brute_ap(s, p);
  }
  Checks c;
  c.add("10.oracle", exact == 200, std::to_string(exact) + "/200 fixtures exact");
  return c.done();
}

struct Criterion {
  int id;
  const char* name;
  std::function<Outcome()> run;
};

}  // namespace

int main(int argc, char** argv) {
  g_dir = fs::path(LTC_ACCEPT_TMP);
  std::set<int> only;
  for (int i = 1; i < argc; ++i) {
    const std::string a = argv[i];
    if (a == "--dir" && i + 1 < argc) {
      g_dir = argv[++i];
    } else {
      only.insert(std::stoi(a));
    }
  }
  fs::create_directories(g_dir);

  const std::vector<Criterion> all = {
      {1, "hamming k=4 distance and single-flip decoding", hamming_k4},
      {2, "binary and parity coding examples", coding_examples},
      {3, "DFT oracle, entropy and focal values", dft_oracle},
      {4, "boosting XOR, logloss, permutation", boosting},
      {5, "LDA closed form and translation invariance", lda_closed_form},
      {6, "KMeans objective", kmeans_objective},
      {7, "easy fixture end to end", easy_fixture},
      {8, "ablation on the standard long-tail fixture", standard_ablation},
      {9, "determinism of data, bundles and reports", determinism},
      {10, "AP oracle", ap_oracle},
  };

  int unexpected = 0;
  for (const auto& c : all) {
    if (!only.empty() && !only.count(c.id)) continue;
    const auto t0 = Clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what(), {std::to_string(c.id) + ".error"}};
    }
    bool tolerated = !o.pass;
    for (const auto& f : o.failed) tolerated = tolerated && kKnownGaps.count(f);
    if (!o.pass && !tolerated) ++unexpected;
    std::cout << (o.pass ? "PASS" : "FAIL") << "  [" << c.id << "] " << c.name << ": " << o.detail
              << (tolerated ? "  (known gap)" : "") << fmt("  (%.1f s)", seconds_since(t0)) << std::endl;
  }
  std::cout << (unexpected ? "unexpected failures: " + std::to_string(unexpected) : std::string("no unexpected failures"))
            << std::endl;
  return unexpected ? 1 : 0;
}
