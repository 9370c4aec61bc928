#include "ltc/label_codec.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <nlohmann/json.hpp>

#include "ltc/error.hpp"

namespace ltc {

namespace {

bool is_power_of_two(int x) { return x > 0 && (x & (x - 1)) == 0; }

// Smallest b with 2^b >= count.
int bits_needed(std::size_t count) {
  int b = 0;
  while ((std::size_t{1} << b) < count) ++b;
  return b;
}

BitVector word_bits(std::size_t word, int width) {
  BitVector bits(static_cast<std::size_t>(width));
  for (int i = 0; i < width; ++i) bits[i] = static_cast<std::uint8_t>((word >> (width - 1 - i)) & 1u);
  return bits;
}

double log_prob(double q, std::uint8_t bit) { return bit ? std::log(q) : std::log1p(-q); }

// exp-normalize in place; an all -inf vector becomes uniform.
void normalize_log(std::vector<double>& v) {
  const double mx = *std::max_element(v.begin(), v.end());
  if (!std::isfinite(mx)) {
    std::fill(v.begin(), v.end(), 1.0 / static_cast<double>(v.size()));
    return;
  }
  double total = 0.0;
  for (double& x : v) {
    x = std::exp(x - mx);
    total += x;
  }
  for (double& x : v) x /= total;
}

}  // namespace

HammingCodeSpec build_hamming(int data_bits) {
  if (data_bits < 1 || data_bits > 11) {
    throw BoundsError("hamming data bits must be in [1, 11], got " + std::to_string(data_bits));
  }
  HammingCodeSpec spec;
  spec.data_bits = data_bits;
  int r = 1;
  while ((1 << r) < data_bits + r + 1) ++r;
  spec.parity_bits = r;
  spec.total_bits = data_bits + r;

  for (int pos = 1; pos <= spec.total_bits; ++pos) {
    (is_power_of_two(pos) ? spec.parity_positions : spec.data_positions).push_back(pos);
  }

  const auto n = static_cast<std::size_t>(spec.total_bits);
  spec.parity_check.assign(static_cast<std::size_t>(r), BitVector(n, 0));
  for (int j = 0; j < r; ++j) {
    for (int pos = 1; pos <= spec.total_bits; ++pos) {
      spec.parity_check[j][pos - 1] = static_cast<std::uint8_t>((pos >> j) & 1);
    }
  }

  spec.generator.reserve(static_cast<std::size_t>(data_bits));
  for (int i = 0; i < data_bits; ++i) {
    BitVector unit(static_cast<std::size_t>(data_bits), 0);
    unit[i] = 1;
    spec.generator.push_back(hamming_encode(spec, unit));
  }
  return spec;
}

BitVector hamming_encode(const HammingCodeSpec& spec, std::span<const std::uint8_t> data) {
  if (data.size() != static_cast<std::size_t>(spec.data_bits)) {
    throw ShapeError("hamming_encode expects " + std::to_string(spec.data_bits) + " data bits, got " +
                     std::to_string(data.size()));
  }
  BitVector word(static_cast<std::size_t>(spec.total_bits), 0);
  for (std::size_t i = 0; i < data.size(); ++i) word[spec.data_positions[i] - 1] = data[i] & 1u;
  for (int pos : spec.parity_positions) {
    std::uint8_t parity = 0;
    for (int p = 1; p <= spec.total_bits; ++p) {
      if (p != pos && (p & pos)) parity ^= word[p - 1];
    }
    word[pos - 1] = parity;
  }
  return word;
}

HammingDecodeResult hamming_decode(const HammingCodeSpec& spec, std::span<const std::uint8_t> received) {
  if (received.size() != static_cast<std::size_t>(spec.total_bits)) {
    throw ShapeError("hamming_decode expects " + std::to_string(spec.total_bits) + " bits, got " +
                     std::to_string(received.size()));
  }
  BitVector word(received.begin(), received.end());
  int syndrome = 0;
  for (std::size_t j = 0; j < spec.parity_check.size(); ++j) {
    std::uint8_t s = 0;
    for (std::size_t i = 0; i < word.size(); ++i) s ^= spec.parity_check[j][i] & word[i];
    syndrome |= s << j;
  }
  HammingDecodeResult result;
  // Syndromes beyond n only arise in shortened codes from multi-bit errors;
  // they are left uncorrected.
  if (syndrome >= 1 && syndrome <= spec.total_bits) {
    word[syndrome - 1] ^= 1u;
    result.corrected_position = syndrome;
  }
  result.data.reserve(static_cast<std::size_t>(spec.data_bits));
  for (int pos : spec.data_positions) result.data.push_back(word[pos - 1]);
  return result;
}

std::string to_string(CodingScheme scheme) {
  switch (scheme) {
    case CodingScheme::one_hot: return "one_hot";
    case CodingScheme::binary: return "binary";
    case CodingScheme::hamming: return "hamming";
    case CodingScheme::hybrid: return "hybrid";
  }
  return "unknown";
}

CodingScheme parse_scheme(const std::string& name) {
  if (name == "one_hot" || name == "onehot" || name == "one-hot") return CodingScheme::one_hot;
  if (name == "binary") return CodingScheme::binary;
  if (name == "hamming") return CodingScheme::hamming;
  if (name == "hybrid") return CodingScheme::hybrid;
  throw LookupError("unknown coding scheme '" + name + "'");
}

bool HybridCodebook::is_rare(std::size_t class_id) const {
  return std::binary_search(rare_class_ids.begin(), rare_class_ids.end(), class_id);
}

HybridCodebook build_codebook(std::span<const std::size_t> class_counts, int rare_threshold,
                              CodingScheme scheme, const CodebookOptions& options) {
  const std::size_t num_classes = class_counts.size();
  if (num_classes < 2) throw DomainError("a codebook needs at least 2 classes");
  if (rare_threshold < 0) throw DomainError("rare_threshold must be non-negative");

  HybridCodebook cb;
  cb.scheme = scheme;
  cb.requested_scheme = scheme;
  cb.rare_threshold = rare_threshold;
  cb.num_classes = num_classes;
  for (std::size_t c = 0; c < num_classes; ++c) {
    if (class_counts[c] < static_cast<std::size_t>(rare_threshold)) cb.rare_class_ids.push_back(c);
  }

  if (scheme == CodingScheme::hybrid && cb.rare_class_ids.empty()) {
    cb.scheme = CodingScheme::one_hot;
    cb.degraded = true;
  }

  switch (cb.scheme) {
    case CodingScheme::one_hot: {
      cb.codeword_length = num_classes;
      for (std::size_t c = 0; c < num_classes; ++c) {
        BitVector w(num_classes, 0);
        w[c] = 1;
        cb.codewords.push_back(std::move(w));
      }
      break;
    }
    case CodingScheme::binary: {
      const int width = std::max(1, bits_needed(num_classes));
      cb.codeword_length = static_cast<std::size_t>(width);
      for (std::size_t c = 0; c < num_classes; ++c) cb.codewords.push_back(word_bits(c, width));
      break;
    }
    case CodingScheme::hamming: {
      const int k = std::max(options.hamming_data_bits, bits_needed(num_classes));
      cb.hamming = build_hamming(k);
      cb.codeword_length = static_cast<std::size_t>(cb.hamming->total_bits);
      for (std::size_t c = 0; c < num_classes; ++c) {
        cb.codewords.push_back(hamming_encode(*cb.hamming, word_bits(c, k)));
      }
      break;
    }
    case CodingScheme::hybrid: {
      std::vector<std::size_t> frequent;
      for (std::size_t c = 0; c < num_classes; ++c) {
        if (!cb.is_rare(c)) frequent.push_back(c);
      }
      std::vector<std::size_t> rare_order = cb.rare_class_ids;
      std::stable_sort(rare_order.begin(), rare_order.end(), [&](std::size_t a, std::size_t b) {
        return class_counts[a] > class_counts[b];
      });

      const int k = std::max(options.hamming_data_bits, bits_needed(rare_order.size()));
      cb.hamming = build_hamming(k);
      const std::size_t super_bit = frequent.size();
      cb.super_class_bit = super_bit;
      cb.rare_bit_range = {super_bit + 1, super_bit + 1 + static_cast<std::size_t>(cb.hamming->total_bits)};
      cb.codeword_length = cb.rare_bit_range.end;
      cb.codewords.assign(num_classes, BitVector(cb.codeword_length, 0));

      for (std::size_t i = 0; i < frequent.size(); ++i) cb.codewords[frequent[i]][i] = 1;
      for (std::size_t word = 0; word < rare_order.size(); ++word) {
        auto& w = cb.codewords[rare_order[word]];
        w[super_bit] = 1;
        const BitVector code = hamming_encode(*cb.hamming, word_bits(word, k));
        std::copy(code.begin(), code.end(), w.begin() + static_cast<std::ptrdiff_t>(cb.rare_bit_range.begin));
      }
      break;
    }
  }
  return cb;
}

const BitVector& encode_label(const HybridCodebook& codebook, std::size_t class_id) {
  if (class_id >= codebook.num_classes) {
    throw LookupError("class " + std::to_string(class_id) + " not in codebook of " +
                      std::to_string(codebook.num_classes) + " classes");
  }
  return codebook.codewords[class_id];
}

std::vector<double> decode_soft(const HybridCodebook& codebook, std::span<const double> bit_probs) {
  if (bit_probs.size() != codebook.codeword_length) {
    throw ShapeError("decode_soft expects " + std::to_string(codebook.codeword_length) + " probabilities, got " +
                     std::to_string(bit_probs.size()));
  }
  for (double q : bit_probs) {
    if (!(q >= 0.0 && q <= 1.0)) throw DomainError("bit probability outside [0, 1]");
  }

  std::vector<double> scores(codebook.num_classes, 0.0);
  if (codebook.scheme != CodingScheme::hybrid) {
    for (std::size_t c = 0; c < codebook.num_classes; ++c) {
      const auto& w = codebook.codewords[c];
      double ll = 0.0;
      for (std::size_t i = 0; i < w.size(); ++i) ll += log_prob(bit_probs[i], w[i]);
      scores[c] = ll;
    }
    normalize_log(scores);
    return scores;
  }

  const std::size_t section_end = *codebook.super_class_bit + 1;
  const BitRange rare = codebook.rare_bit_range;
  std::vector<double> rare_ll;
  rare_ll.reserve(codebook.rare_class_ids.size());
  for (std::size_t c = 0; c < codebook.num_classes; ++c) {
    const auto& w = codebook.codewords[c];
    double ll = 0.0;
    for (std::size_t i = 0; i < section_end; ++i) ll += log_prob(bit_probs[i], w[i]);
    scores[c] = ll;
  }
  for (std::size_t c : codebook.rare_class_ids) {
    const auto& w = codebook.codewords[c];
    double ll = 0.0;
    for (std::size_t i = rare.begin; i < rare.end; ++i) ll += log_prob(bit_probs[i], w[i]);
    rare_ll.push_back(ll);
  }
  normalize_log(rare_ll);
  for (std::size_t r = 0; r < rare_ll.size(); ++r) scores[codebook.rare_class_ids[r]] += std::log(rare_ll[r]);
  normalize_log(scores);
  return scores;
}

std::size_t hamming_distance(std::span<const std::uint8_t> a, std::span<const std::uint8_t> b) {
  if (a.size() != b.size()) throw ShapeError("hamming_distance on words of different length");
  std::size_t d = 0;
  for (std::size_t i = 0; i < a.size(); ++i) d += (a[i] != b[i]);
  return d;
}

std::size_t decode_hard(const HybridCodebook& codebook, std::span<const std::uint8_t> bits) {
  std::size_t best = 0;
  std::size_t best_distance = std::numeric_limits<std::size_t>::max();
  for (std::size_t c = 0; c < codebook.num_classes; ++c) {
    const std::size_t d = hamming_distance(codebook.codewords[c], bits);
    if (d < best_distance) {
      best_distance = d;
      best = c;
    }
  }
  return best;
}

std::vector<BitVector> parity_extend(std::span<const BitVector> codewords) {
  std::vector<BitVector> out;
  out.reserve(codewords.size());
  for (const auto& word : codewords) {
    BitVector extended = word;
    std::uint8_t parity = 0;
    for (auto b : word) parity ^= b;
    extended.push_back(parity);
    out.push_back(std::move(extended));
  }
  return out;
}

std::size_t min_pairwise_distance(std::span<const BitVector> codewords) {
  if (codewords.size() < 2) throw DomainError("min_pairwise_distance needs at least 2 codewords");
  std::size_t best = std::numeric_limits<std::size_t>::max();
  for (std::size_t i = 0; i < codewords.size(); ++i) {
    for (std::size_t j = i + 1; j < codewords.size(); ++j) {
      best = std::min(best, hamming_distance(codewords[i], codewords[j]));
    }
  }
  return best;
}

std::string bits_to_string(std::span<const std::uint8_t> bits) {
  std::string s;
  s.reserve(bits.size());
  for (auto b : bits) s.push_back(b ? '1' : '0');
  return s;
}

BitVector bits_from_string(const std::string& text) {
  BitVector bits;
  bits.reserve(text.size());
  for (char ch : text) {
    if (ch != '0' && ch != '1') throw ParseError("codeword '" + text + "' is not a 0/1 string");
    bits.push_back(static_cast<std::uint8_t>(ch - '0'));
  }
  return bits;
}

void to_json(nlohmann::json& j, const HammingCodeSpec& spec) {
  j = {{"data_bits", spec.data_bits},
       {"parity_bits", spec.parity_bits},
       {"total_bits", spec.total_bits},
       {"data_positions", spec.data_positions},
       {"parity_positions", spec.parity_positions}};
}

void from_json(const nlohmann::json& j, HammingCodeSpec& spec) {
  spec = build_hamming(j.at("data_bits").get<int>());
  if (j.at("parity_bits").get<int>() != spec.parity_bits || j.at("total_bits").get<int>() != spec.total_bits ||
      j.at("data_positions").get<std::vector<int>>() != spec.data_positions ||
      j.at("parity_positions").get<std::vector<int>>() != spec.parity_positions) {
    throw ParseError("hamming layout does not match the standard power-of-two parity layout");
  }
}

void to_json(nlohmann::json& j, const HybridCodebook& cb) {
  std::vector<std::string> words;
  words.reserve(cb.codewords.size());
  for (const auto& w : cb.codewords) words.push_back(bits_to_string(w));
  j = {{"scheme", to_string(cb.scheme)},
       {"requested_scheme", to_string(cb.requested_scheme)},
       {"degraded", cb.degraded},
       {"rare_threshold", cb.rare_threshold},
       {"num_classes", cb.num_classes},
       {"codeword_length", cb.codeword_length},
       {"codewords", words},
       {"rare_class_ids", cb.rare_class_ids}};
  if (cb.super_class_bit) {
    j["super_class_bit"] = *cb.super_class_bit;
    j["rare_bit_range"] = {cb.rare_bit_range.begin, cb.rare_bit_range.end};
  } else {
    j["super_class_bit"] = nullptr;
    j["rare_bit_range"] = nullptr;
  }
  j["hamming"] = cb.hamming ? nlohmann::json(*cb.hamming) : nlohmann::json(nullptr);
}

void from_json(const nlohmann::json& j, HybridCodebook& cb) {
  cb = HybridCodebook{};
  cb.scheme = parse_scheme(j.at("scheme").get<std::string>());
  cb.requested_scheme = parse_scheme(j.at("requested_scheme").get<std::string>());
  cb.degraded = j.at("degraded").get<bool>();
  cb.rare_threshold = j.at("rare_threshold").get<int>();
  cb.num_classes = j.at("num_classes").get<std::size_t>();
  cb.codeword_length = j.at("codeword_length").get<std::size_t>();
  for (const auto& w : j.at("codewords")) {
    cb.codewords.push_back(bits_from_string(w.get<std::string>()));
    if (cb.codewords.back().size() != cb.codeword_length) throw ParseError("codeword length mismatch");
  }
  if (cb.codewords.size() != cb.num_classes) throw ParseError("codeword count does not match num_classes");
  cb.rare_class_ids = j.at("rare_class_ids").get<std::vector<std::size_t>>();
  if (!j.at("super_class_bit").is_null()) {
    cb.super_class_bit = j.at("super_class_bit").get<std::size_t>();
    const auto range = j.at("rare_bit_range");
    cb.rare_bit_range = {range.at(0).get<std::size_t>(), range.at(1).get<std::size_t>()};
  }
  if (!j.at("hamming").is_null()) cb.hamming = j.at("hamming").get<HammingCodeSpec>();
}

}  // namespace ltc
