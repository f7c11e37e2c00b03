#pragma once

// Amplitude alphabets, target distributions and block compositions.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <string>
#include <utility>
#include <vector>

#include "pcslab/errors.hpp"

namespace pcslab {

/// Index of an amplitude level within its alphabet. Amplitude sequences are
/// stored as level indices, not as real amplitudes.
using LevelIndex = std::uint16_t;
using AmplitudeSequence = std::vector<LevelIndex>;

class AmplitudeAlphabet {
 public:
  explicit AmplitudeAlphabet(std::vector<double> levels) : levels_(std::move(levels)) {
    if (levels_.empty()) throw ContractError("amplitude alphabet must not be empty");
    if (levels_.size() > 0xFFFF) throw ContractError("amplitude alphabet too large");
    for (std::size_t i = 0; i < levels_.size(); ++i) {
      if (!(levels_[i] > 0.0)) throw ContractError("amplitude levels must be positive");
      if (i > 0 && !(levels_[i] > levels_[i - 1]))
        throw ContractError("amplitude levels must be strictly increasing");
    }
  }

  /// Odd-integer levels {1, 3, ..., 2m-1}; the per-quadrature amplitudes of a square QAM.
  static AmplitudeAlphabet odd_integers(std::size_t count) {
    std::vector<double> levels(count);
    for (std::size_t i = 0; i < count; ++i) levels[i] = static_cast<double>(2 * i + 1);
    return AmplitudeAlphabet(std::move(levels));
  }

  std::size_t size() const { return levels_.size(); }
  double operator[](std::size_t i) const { return levels_[i]; }
  const std::vector<double>& levels() const { return levels_; }

  /// Greek display name (alpha, beta, ...) for the first few levels, "a<i>" beyond.
  static std::string display_name(std::size_t i) {
    static const char* names[] = {"α", "β", "γ", "δ", "ε", "ζ", "η", "θ"};
    return i < 8 ? names[i] : "a" + std::to_string(i);
  }

  friend bool operator==(const AmplitudeAlphabet&, const AmplitudeAlphabet&) = default;

 private:
  std::vector<double> levels_;
};

class AmplitudeDistribution {
 public:
  AmplitudeDistribution(AmplitudeAlphabet alphabet, std::vector<double> probs)
      : alphabet_(std::move(alphabet)), probs_(std::move(probs)) {
    if (probs_.size() != alphabet_.size())
      throw ContractError("distribution size does not match alphabet size");
    double sum = 0.0;
    for (double p : probs_) {
      if (!(p >= 0.0)) throw ContractError("probabilities must be non-negative");
      sum += p;
    }
    if (std::abs(sum - 1.0) > 1e-12) throw ContractError("probabilities must sum to one");
  }

  static AmplitudeDistribution uniform(AmplitudeAlphabet alphabet) {
    const auto m = alphabet.size();
    return {std::move(alphabet), std::vector<double>(m, 1.0 / static_cast<double>(m))};
  }

  const AmplitudeAlphabet& alphabet() const { return alphabet_; }
  const std::vector<double>& probs() const { return probs_; }
  double operator[](std::size_t i) const { return probs_[i]; }
  std::size_t size() const { return probs_.size(); }

  /// E[A^2] and E[A^4] of the amplitude.
  double second_moment() const { return moment(2); }
  double fourth_moment() const { return moment(4); }

 private:
  double moment(int order) const {
    double m = 0.0;
    for (std::size_t i = 0; i < probs_.size(); ++i) m += probs_[i] * std::pow(alphabet_[i], order);
    return m;
  }

  AmplitudeAlphabet alphabet_;
  std::vector<double> probs_;
};

/// Per-level occurrence counts of one constant-composition block.
class Composition {
 public:
  Composition(AmplitudeAlphabet alphabet, std::vector<std::size_t> counts)
      : alphabet_(std::move(alphabet)), counts_(std::move(counts)) {
    if (counts_.size() != alphabet_.size())
      throw ContractError("composition size does not match alphabet size");
    n_ = std::accumulate(counts_.begin(), counts_.end(), std::size_t{0});
    if (n_ < 1) throw ContractError("composition must contain at least one symbol");
  }

  const AmplitudeAlphabet& alphabet() const { return alphabet_; }
  const std::vector<std::size_t>& counts() const { return counts_; }
  std::size_t operator[](std::size_t i) const { return counts_[i]; }
  std::size_t n() const { return n_; }
  std::size_t size() const { return counts_.size(); }

  /// The realized distribution C/n.
  AmplitudeDistribution as_distribution() const {
    std::vector<double> probs(counts_.size());
    for (std::size_t i = 0; i < counts_.size(); ++i)
      probs[i] = static_cast<double>(counts_[i]) / static_cast<double>(n_);
    // C/n can miss unit sum by a few ulps; renormalize on the largest entry.
    const double sum = std::accumulate(probs.begin(), probs.end(), 0.0);
    auto largest = std::max_element(probs.begin(), probs.end());
    *largest += 1.0 - sum;
    return {alphabet_, std::move(probs)};
  }

  /// Counts of `seq` over this composition's alphabet.
  static std::vector<std::size_t> count_levels(const AmplitudeSequence& seq, std::size_t alphabet_size) {
    std::vector<std::size_t> counts(alphabet_size, 0);
    for (auto s : seq) {
      if (s >= alphabet_size) throw ContractError("amplitude level index out of range");
      ++counts[s];
    }
    return counts;
  }

  friend bool operator==(const Composition&, const Composition&) = default;

 private:
  AmplitudeAlphabet alphabet_;
  std::vector<std::size_t> counts_;
  std::size_t n_ = 0;
};

/// Shannon entropy in bits, with 0 log 0 = 0.
inline double entropy(const std::vector<double>& probs) {
  double h = 0.0;
  for (double p : probs)
    if (p > 0.0) h -= p * std::log2(p);
  return h;
}

inline double entropy(const AmplitudeDistribution& dist) { return entropy(dist.probs()); }

namespace detail {

inline std::vector<double> boltzmann_probs(const AmplitudeAlphabet& alphabet, double nu) {
  // Exponents are taken relative to the smallest level so the largest weight is exactly 1.
  const double base = alphabet[0] * alphabet[0];
  std::vector<double> w(alphabet.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) {
    w[i] = std::exp(-nu * (alphabet[i] * alphabet[i] - base));
    sum += w[i];
  }
  for (double& x : w) x /= sum;
  return w;
}

}  // namespace detail

struct MaxwellBoltzmann {
  AmplitudeDistribution distribution;
  double nu;
};

/// Maxwell-Boltzmann amplitude distribution p_i ~ exp(-nu * level_i^2) whose entropy
/// equals `target_entropy` (bits). nu is found by bisection on [0, 100].
inline MaxwellBoltzmann mb_distribution_solve(const AmplitudeAlphabet& alphabet, double target_entropy,
                                              double tolerance = 1e-9, int max_iterations = 200) {
  const double h_max = std::log2(static_cast<double>(alphabet.size()));
  if (!(target_entropy > 0.0) || target_entropy > h_max)
    throw DomainError("target entropy " + std::to_string(target_entropy) + " outside (0, " +
                      std::to_string(h_max) + "]");
  if (h_max - target_entropy <= tolerance) return {AmplitudeDistribution::uniform(alphabet), 0.0};

  double lo = 0.0;
  double hi = 100.0;
  if (entropy(detail::boltzmann_probs(alphabet, hi)) > target_entropy)
    throw NumericError("target entropy not reachable with nu <= 100");
  for (int it = 0; it < max_iterations; ++it) {
    const double mid = 0.5 * (lo + hi);
    auto probs = detail::boltzmann_probs(alphabet, mid);
    const double h = entropy(probs);
    if (std::abs(h - target_entropy) <= tolerance) {
      AmplitudeDistribution dist(alphabet, std::move(probs));
      return {std::move(dist), mid};
    }
    // Entropy decreases monotonically in nu.
    if (h > target_entropy)
      lo = mid;
    else
      hi = mid;
  }
  throw NumericError("Maxwell-Boltzmann bisection did not converge");
}

inline AmplitudeDistribution mb_distribution(const AmplitudeAlphabet& alphabet, double target_entropy) {
  return mb_distribution_solve(alphabet, target_entropy).distribution;
}

/// Largest-remainder rounding of n * p_i; ties go to the lowest level index.
inline Composition quantize_composition(const AmplitudeDistribution& dist, std::size_t n) {
  if (n < 1) throw ContractError("block length must be at least 1");
  const auto m = dist.size();
  std::vector<std::size_t> counts(m);
  std::vector<std::pair<long long, std::size_t>> remainders(m);
  std::size_t assigned = 0;
  for (std::size_t i = 0; i < m; ++i) {
    const double exact = static_cast<double>(n) * dist[i];
    // Round away representation noise so that 3.0000000000000004 floors to 3.
    const double snapped = std::round(exact * 1e9) / 1e9;
    const double whole = std::floor(snapped);
    counts[i] = static_cast<std::size_t>(whole);
    assigned += counts[i];
    remainders[i] = {std::llround((snapped - whole) * 1e9), i};
  }
  std::stable_sort(remainders.begin(), remainders.end(),
                   [](const auto& a, const auto& b) { return a.first > b.first; });
  for (std::size_t j = 0; assigned < n; ++j, ++assigned) ++counts[remainders[j % m].second];
  return {dist.alphabet(), std::move(counts)};
}

}  // namespace pcslab
