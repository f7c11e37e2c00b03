#pragma once

#include <complex>
#include <cstdint>
#include <initializer_list>
#include <random>
#include <vector>

#include "pcslab/ccdm.hpp"

namespace pcslab {

/// Engine for one named stream of a seeded experiment. Distinct (seed, stream...)
/// tuples give statistically independent engines; identical tuples replay exactly.
inline std::mt19937_64 seeded_engine(std::initializer_list<std::uint64_t> key) {
  std::vector<std::uint32_t> words;
  for (auto k : key) {
    words.push_back(static_cast<std::uint32_t>(k));
    words.push_back(static_cast<std::uint32_t>(k >> 32));
  }
  std::seed_seq seq(words.begin(), words.end());
  return std::mt19937_64(seq);
}

/// Uniform i.i.d. bits drawn 64 at a time.
class BitSource {
 public:
  explicit BitSource(std::mt19937_64 engine) : engine_(std::move(engine)) {}
  explicit BitSource(std::uint64_t seed) : engine_(seeded_engine({seed})) {}

  std::uint8_t next() {
    if (available_ == 0) {
      word_ = engine_();
      available_ = 64;
    }
    --available_;
    return static_cast<std::uint8_t>((word_ >> available_) & 1u);
  }

  BitVector draw(std::size_t count) {
    BitVector bits(count);
    for (auto& b : bits) b = next();
    return bits;
  }

 private:
  std::mt19937_64 engine_;
  std::uint64_t word_ = 0;
  int available_ = 0;
};

/// Circular complex Gaussian samples with E|z|^2 = variance.
class GaussianSource {
 public:
  explicit GaussianSource(std::mt19937_64 engine) : engine_(std::move(engine)) {}
  explicit GaussianSource(std::uint64_t seed) : engine_(seeded_engine({seed})) {}

  std::complex<double> complex(double variance) {
    const double sigma = std::sqrt(variance / 2.0);
    const double re = normal_(engine_);
    const double im = normal_(engine_);
    return {sigma * re, sigma * im};
  }

  double real() { return normal_(engine_); }

 private:
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

}  // namespace pcslab
