#pragma once

// Statistics of the temporal arrangement of amplitudes: runs of identical
// levels, neighbour repetition, and how far short windows stray from the
// block composition.

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <cstddef>
#include <map>
#include <vector>

#include "pcslab/errors.hpp"
#include "pcslab/shaping.hpp"

namespace pcslab {

/// histogram[level][run_length] = number of maximal runs of that length.
using RunLengthHistogram = std::vector<std::map<std::size_t, std::size_t>>;

inline RunLengthHistogram run_length_stats(const AmplitudeSequence& seq, std::size_t alphabet_size = 0) {
  if (seq.empty()) throw ContractError("run-length statistics need a non-empty sequence");
  const std::size_t levels =
      std::max<std::size_t>(alphabet_size, static_cast<std::size_t>(*std::max_element(seq.begin(), seq.end())) + 1);
  RunLengthHistogram hist(levels);
  std::size_t start = 0;
  for (std::size_t i = 1; i <= seq.size(); ++i) {
    if (i == seq.size() || seq[i] != seq[start]) {
      ++hist[seq[start]][i - start];
      start = i;
    }
  }
  return hist;
}

/// Fraction of neighbouring positions holding the same level.
inline double adjacent_pair_rate(const AmplitudeSequence& seq) {
  if (seq.size() < 2) throw ContractError("adjacent pair rate needs at least two amplitudes");
  std::size_t same = 0;
  for (std::size_t i = 0; i + 1 < seq.size(); ++i) same += seq[i] == seq[i + 1];
  return static_cast<double>(same) / static_cast<double>(seq.size() - 1);
}

struct WindowDeviation {
  double max = 0.0;
  double mean = 0.0;
  std::size_t windows = 0;
};

/// L1 distance between each window's empirical level distribution and `target`,
/// for windows starting at 0, stride, 2*stride, ... that fit in the sequence.
inline WindowDeviation windowed_composition_deviation(const AmplitudeSequence& seq, const std::vector<double>& target,
                                                      std::size_t window, std::size_t stride) {
  if (window == 0 || stride == 0) throw ContractError("window and stride must be positive");
  if (window > seq.size()) throw ContractError("window longer than sequence");
  std::vector<std::size_t> counts(target.size(), 0);
  auto bump = [&](LevelIndex s, long delta) {
    if (s >= counts.size()) throw ContractError("amplitude level outside target alphabet");
    counts[s] = static_cast<std::size_t>(static_cast<long>(counts[s]) + delta);
  };
  WindowDeviation out;
  double sum = 0.0;
  std::size_t filled_to = 0;  // counts cover seq[filled_from, filled_to)
  std::size_t filled_from = 0;
  for (std::size_t start = 0; start + window <= seq.size(); start += stride) {
    if (start >= filled_to) {
      std::fill(counts.begin(), counts.end(), 0);
      filled_from = filled_to = start;
    }
    while (filled_from < start) bump(seq[filled_from++], -1);
    while (filled_to < start + window) bump(seq[filled_to++], +1);
    double l1 = 0.0;
    for (std::size_t i = 0; i < target.size(); ++i)
      l1 += std::abs(static_cast<double>(counts[i]) / static_cast<double>(window) - target[i]);
    out.max = std::max(out.max, l1);
    sum += l1;
    ++out.windows;
  }
  out.mean = sum / static_cast<double>(out.windows);
  return out;
}

/// Same as above with the target given as an integer composition C, compared exactly
/// (a window whose counts are window/n * C has deviation exactly 0).
inline WindowDeviation windowed_composition_deviation(const AmplitudeSequence& seq, const Composition& target,
                                                      std::size_t window, std::size_t stride) {
  if (window == 0 || stride == 0) throw ContractError("window and stride must be positive");
  if (window > seq.size()) throw ContractError("window longer than sequence");
  const auto n = static_cast<long long>(target.n());
  const auto w = static_cast<long long>(window);
  WindowDeviation out;
  double sum = 0.0;
  std::vector<long long> counts(target.size());
  for (std::size_t start = 0; start + window <= seq.size(); start += stride) {
    std::fill(counts.begin(), counts.end(), 0);
    for (std::size_t i = start; i < start + window; ++i) {
      if (seq[i] >= counts.size()) throw ContractError("amplitude level outside target alphabet");
      ++counts[seq[i]];
    }
    long long scaled = 0;
    for (std::size_t i = 0; i < counts.size(); ++i)
      scaled += std::llabs(counts[i] * n - static_cast<long long>(target[i]) * w);
    const double l1 = static_cast<double>(scaled) / static_cast<double>(w * n);
    out.max = std::max(out.max, l1);
    sum += l1;
    ++out.windows;
  }
  out.mean = sum / static_cast<double>(out.windows);
  return out;
}

}  // namespace pcslab
