#pragma once

// Label coding schemes for multi-class problems decomposed into binary bit
// classifiers: one-hot, plain binary, Hamming single-error-correcting codes,
// and the hybrid scheme (one-hot for frequent classes plus a super-class
// whose rare members carry Hamming codewords).

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

namespace ltc {

using BitVector = std::vector<std::uint8_t>;

// Binary Hamming code with parity bits at the power-of-two positions
// (1-indexed) of the codeword. Shortened codes are used when k is not of
// the form 2^r - r - 1.
struct HammingCodeSpec {
  int data_bits = 0;    // k
  int parity_bits = 0;  // r
  int total_bits = 0;   // n = k + r
  std::vector<BitVector> generator;     // k x n
  std::vector<BitVector> parity_check;  // r x n
  std::vector<int> data_positions;      // 1-indexed codeword position of data bit i
  std::vector<int> parity_positions;    // 1-indexed codeword position of parity bit j

  bool operator==(const HammingCodeSpec&) const = default;
};

struct HammingDecodeResult {
  BitVector data;
  // 1-indexed codeword position that was flipped back, if any.
  std::optional<int> corrected_position;
};

HammingCodeSpec build_hamming(int data_bits);
BitVector hamming_encode(const HammingCodeSpec& spec, std::span<const std::uint8_t> data);
// Syndrome decoding. Words at distance >= 2 from every codeword decode to
// whatever codeword the syndrome points at, without signalling an error.
HammingDecodeResult hamming_decode(const HammingCodeSpec& spec, std::span<const std::uint8_t> received);

enum class CodingScheme { one_hot, binary, hamming, hybrid };

std::string to_string(CodingScheme scheme);
CodingScheme parse_scheme(const std::string& name);

struct BitRange {
  std::size_t begin = 0;
  std::size_t end = 0;
  std::size_t size() const noexcept { return end - begin; }
  bool contains(std::size_t i) const noexcept { return i >= begin && i < end; }
  bool operator==(const BitRange&) const = default;
};

struct CodebookOptions {
  // Data bits of the Hamming section; grown automatically when there are
  // more classes to code than 2^k.
  int hamming_data_bits = 4;
};

struct HybridCodebook {
  CodingScheme scheme = CodingScheme::one_hot;
  // Scheme requested by the caller; differs from `scheme` when a hybrid
  // request degraded to one-hot because no class was rare.
  CodingScheme requested_scheme = CodingScheme::one_hot;
  bool degraded = false;
  int rare_threshold = 0;
  std::size_t num_classes = 0;
  std::size_t codeword_length = 0;
  std::vector<BitVector> codewords;
  std::vector<std::size_t> rare_class_ids;  // ascending
  // Hybrid only.
  std::optional<std::size_t> super_class_bit;
  BitRange rare_bit_range;
  std::optional<HammingCodeSpec> hamming;

  bool is_rare(std::size_t class_id) const;
  bool operator==(const HybridCodebook&) const = default;
};

HybridCodebook build_codebook(std::span<const std::size_t> class_counts, int rare_threshold,
                              CodingScheme scheme, const CodebookOptions& options = {});

const BitVector& encode_label(const HybridCodebook& codebook, std::size_t class_id);

// Per-class likelihood of the bit probabilities under each codeword,
// normalized to sum to one. Hybrid codebooks factorize rare classes as
// P(one-hot section) * P(rare codeword | super-class).
std::vector<double> decode_soft(const HybridCodebook& codebook, std::span<const double> bit_probs);

// Class whose codeword is nearest in Hamming distance; ties go to the lowest id.
std::size_t decode_hard(const HybridCodebook& codebook, std::span<const std::uint8_t> bits);

std::size_t hamming_distance(std::span<const std::uint8_t> a, std::span<const std::uint8_t> b);
// Appends an even-parity bit to each codeword: {00,01,10,11} -> {000,011,101,110}.
std::vector<BitVector> parity_extend(std::span<const BitVector> codewords);

std::size_t min_pairwise_distance(std::span<const BitVector> codewords);

std::string bits_to_string(std::span<const std::uint8_t> bits);
BitVector bits_from_string(const std::string& text);

void to_json(nlohmann::json& j, const HammingCodeSpec& spec);
void from_json(const nlohmann::json& j, HammingCodeSpec& spec);
void to_json(nlohmann::json& j, const HybridCodebook& codebook);
void from_json(const nlohmann::json& j, HybridCodebook& codebook);

}  // namespace ltc
