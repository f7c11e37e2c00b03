#pragma once

// Constant-composition distribution matcher built on exact multiset-permutation
// ranking. Every k-bit input word maps to the lexicographically k-th sequence
// among all arrangements of the composition, so the matcher has no
// implementation rate loss beyond k = floor(log2(#sequences)).

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

#include "pcslab/errors.hpp"
#include "pcslab/shaping.hpp"

namespace pcslab {

using BigInt = boost::multiprecision::cpp_int;

/// One bit per element, values 0/1, most significant bit first.
using BitVector = std::vector<std::uint8_t>;

/// n! / prod(counts_i!) computed exactly.
inline BigInt multinomial(const std::vector<std::size_t>& counts) {
  BigInt result = 1;
  std::size_t placed = 0;
  for (std::size_t c : counts) {
    // Multiply by binom(placed + c, c) one factor at a time; each partial
    // product is itself a binomial coefficient, so the division is exact.
    for (std::size_t j = 1; j <= c; ++j) {
      result *= placed + j;
      result /= j;
    }
    placed += c;
  }
  return result;
}

/// Number of bits needed to write `x`, i.e. floor(log2 x) + 1 for x > 0.
inline std::size_t bit_length(const BigInt& x) {
  return x == 0 ? 0 : static_cast<std::size_t>(boost::multiprecision::msb(x)) + 1;
}

inline BigInt bits_to_integer(const BitVector& bits) {
  BigInt value = 0;
  if (bits.empty()) return value;
  boost::multiprecision::import_bits(value, bits.begin(), bits.end(), 1, true);
  return value;
}

inline BitVector integer_to_bits(const BigInt& value, std::size_t width) {
  BitVector bits(width, 0);
  BigInt v = value;
  for (std::size_t i = 0; i < width && v != 0; ++i) {
    bits[width - 1 - i] = static_cast<std::uint8_t>(boost::multiprecision::bit_test(v, 0));
    v >>= 1;
  }
  return bits;
}

class CcdmCodec {
 public:
  explicit CcdmCodec(Composition composition)
      : composition_(std::move(composition)), num_sequences_(multinomial(composition_.counts())) {
    // 2^k <= num_sequences < 2^(k+1)
    k_ = bit_length(num_sequences_) - 1;
  }

  const Composition& composition() const { return composition_; }
  const AmplitudeAlphabet& alphabet() const { return composition_.alphabet(); }
  const BigInt& num_sequences() const { return num_sequences_; }
  std::size_t k() const { return k_; }
  std::size_t n() const { return composition_.n(); }
  double rate() const { return static_cast<double>(k_) / static_cast<double>(n()); }

  /// log2(num_sequences) / n, the rate of an ideal (non-integer-k) matcher.
  double log2_sequences_per_symbol() const {
    const std::size_t bits = bit_length(num_sequences_);
    // Keep the top 64 bits for the mantissa; the rest becomes an exponent.
    const std::size_t shift = bits > 64 ? bits - 64 : 0;
    const double top = static_cast<BigInt>(num_sequences_ >> shift).convert_to<double>();
    return (std::log2(top) + static_cast<double>(shift)) / static_cast<double>(n());
  }

  /// Lexicographic unranking: the (integer value of bits)-th constant-composition sequence.
  AmplitudeSequence match(const BitVector& bits) const {
    if (bits.size() != k_)
      throw ContractError("match expects " + std::to_string(k_) + " bits, got " +
                          std::to_string(bits.size()));
    BigInt rank = bits_to_integer(bits);
    return unrank(rank);
  }

  /// Lexicographic ranking; inverse of match over its image.
  BitVector dematch(const AmplitudeSequence& seq) const {
    if (seq.size() != n())
      throw ContractError("dematch expects " + std::to_string(n()) + " amplitudes, got " +
                          std::to_string(seq.size()));
    if (Composition::count_levels(seq, composition_.size()) != composition_.counts())
      throw CompositionError("sequence composition differs from codec composition");
    BigInt r = rank(seq);
    if (bit_length(r) > k_) throw OutOfImageError("sequence rank is not below 2^k");
    return integer_to_bits(r, k_);
  }

  /// Unrank an arbitrary integer in [0, num_sequences).
  AmplitudeSequence unrank(BigInt rank) const {
    if (rank < 0 || rank >= num_sequences_) throw ContractError("rank out of range");
    std::vector<std::size_t> remaining = composition_.counts();
    std::size_t left = n();
    BigInt total = num_sequences_;
    BigInt branch;
    AmplitudeSequence out(left);
    for (std::size_t pos = 0; pos < out.size(); ++pos, --left) {
      std::size_t chosen = remaining.size();
      for (std::size_t level = 0; level < remaining.size(); ++level) {
        if (remaining[level] == 0) continue;
        if (remaining[level] == left) {  // only this level is left
          chosen = level;
          break;
        }
        // Sequences starting with `level`: total * c_level / left, always an integer.
        branch = total;
        branch *= remaining[level];
        branch /= left;
        if (rank < branch) {
          chosen = level;
          total.swap(branch);
          break;
        }
        rank -= branch;
      }
      out[pos] = static_cast<LevelIndex>(chosen);
      --remaining[chosen];
    }
    return out;
  }

  /// Lexicographic rank of a sequence with this codec's composition.
  BigInt rank(const AmplitudeSequence& seq) const {
    std::vector<std::size_t> remaining = composition_.counts();
    std::size_t left = n();
    BigInt total = num_sequences_;
    BigInt r = 0;
    BigInt branch;
    for (std::size_t pos = 0; pos < seq.size(); ++pos, --left) {
      const std::size_t s = seq[pos];
      for (std::size_t level = 0; level < s; ++level) {
        if (remaining[level] == 0) continue;
        branch = total;
        branch *= remaining[level];
        branch /= left;
        r += branch;
      }
      total *= remaining[s];
      total /= left;
      --remaining[s];
    }
    return r;
  }

 private:
  Composition composition_;
  BigInt num_sequences_;
  std::size_t k_ = 0;
};

inline CcdmCodec build_ccdm(Composition composition) { return CcdmCodec(std::move(composition)); }

/// H(target) - k/n in bits per amplitude, measured against the target distribution.
inline double rate_loss(const CcdmCodec& codec, const AmplitudeDistribution& target) {
  if (!(codec.alphabet() == target.alphabet()))
    throw ContractError("codec and distribution use different alphabets");
  return entropy(target) - codec.rate();
}

/// H(C/n) - k/n, the loss against the realized composition.
inline double realized_rate_loss(const CcdmCodec& codec) {
  return entropy(codec.composition().as_distribution()) - codec.rate();
}

}  // namespace pcslab
