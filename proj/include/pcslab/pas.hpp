#pragma once

// Probabilistic amplitude shaping: DM output blocks concatenated into a compound
// amplitude stream, paired into (I, Q) magnitudes and given uniform sign bits.

#include <bit>
#include <cmath>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <iomanip>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "pcslab/ccdm.hpp"
#include "pcslab/errors.hpp"
#include "pcslab/random.hpp"
#include "pcslab/shaping.hpp"

namespace pcslab {

using cplx = std::complex<double>;

/// Square M-QAM as a product of two sign/amplitude PAMs with binary-reflected Gray labels.
/// A per-quadrature label is [sign bit | Gray(amplitude index)], sign 0 -> +, 1 -> -,
/// and the symbol label is [I label | Q label].
class QamConstellation {
 public:
  explicit QamConstellation(std::size_t order = 64)
      : order_(order), alphabet_(AmplitudeAlphabet::odd_integers(side_of(order) / 2)) {
    double mean_sq = 0.0;
    for (double a : alphabet_.levels()) mean_sq += a * a;
    mean_sq /= static_cast<double>(alphabet_.size());
    scale_ = 1.0 / std::sqrt(2.0 * mean_sq);
  }

  std::size_t order() const { return order_; }
  std::size_t bits_per_symbol() const { return static_cast<std::size_t>(std::countr_zero(order_)); }
  std::size_t bits_per_quadrature() const { return bits_per_symbol() / 2; }
  const AmplitudeAlphabet& amplitude_alphabet() const { return alphabet_; }

  /// Factor applied to integer coordinates so that uniform signaling has unit power.
  double scale() const { return scale_; }

  double coordinate(LevelIndex amplitude, std::uint8_t sign) const {
    const double a = alphabet_[amplitude] * scale_;
    return sign ? -a : a;
  }

  cplx point(LevelIndex amp_i, std::uint8_t sign_i, LevelIndex amp_q, std::uint8_t sign_q) const {
    return {coordinate(amp_i, sign_i), coordinate(amp_q, sign_q)};
  }

  std::uint32_t quadrature_label(LevelIndex amplitude, std::uint8_t sign) const {
    const std::uint32_t gray = amplitude ^ (amplitude >> 1u);
    return (static_cast<std::uint32_t>(sign) << (bits_per_quadrature() - 1)) | gray;
  }

  std::uint32_t label(LevelIndex amp_i, std::uint8_t sign_i, LevelIndex amp_q, std::uint8_t sign_q) const {
    return (quadrature_label(amp_i, sign_i) << bits_per_quadrature()) | quadrature_label(amp_q, sign_q);
  }

  /// Inverse of quadrature_label.
  std::pair<LevelIndex, std::uint8_t> split_quadrature_label(std::uint32_t label) const {
    const auto m = bits_per_quadrature();
    const auto sign = static_cast<std::uint8_t>((label >> (m - 1)) & 1u);
    std::uint32_t gray = label & ((1u << (m - 1)) - 1u);
    std::uint32_t index = 0;
    for (; gray; gray >>= 1) index ^= gray;
    return {static_cast<LevelIndex>(index), sign};
  }

  cplx point_of_label(std::uint32_t label) const {
    const auto m = bits_per_quadrature();
    auto [ai, si] = split_quadrature_label(label >> m);
    auto [aq, sq] = split_quadrature_label(label & ((1u << m) - 1u));
    return point(ai, si, aq, sq);
  }

  /// Nearest amplitude index and sign for one received coordinate.
  std::pair<LevelIndex, std::uint8_t> slice(double coordinate) const {
    const double mag = std::abs(coordinate) / scale_;
    std::size_t best = 0;
    for (std::size_t i = 1; i < alphabet_.size(); ++i)
      if (std::abs(alphabet_[i] - mag) < std::abs(alphabet_[best] - mag)) best = i;
    return {static_cast<LevelIndex>(best), static_cast<std::uint8_t>(coordinate < 0.0)};
  }

 private:
  static std::size_t side_of(std::size_t order) {
    if (order < 4 || !std::has_single_bit(order) || std::countr_zero(order) % 2 != 0)
      throw ContractError("QAM order must be a power of 4, got " + std::to_string(order));
    return std::size_t{1} << (std::countr_zero(order) / 2);
  }

  std::size_t order_;
  AmplitudeAlphabet alphabet_;
  double scale_ = 1.0;
};

/// Compound amplitude stream with its block structure, sign bits and mapped symbols.
/// block_length == 0 marks an unstructured (i.i.d.) stream with no block boundaries.
struct ShapedFrame {
  AmplitudeSequence amplitudes;
  std::size_t block_length = 0;
  std::size_t num_blocks = 0;
  BitVector signs;
  std::vector<cplx> symbols;
  std::vector<std::size_t> boundaries;

  /// Block index of amplitude i, or -1 for unstructured streams.
  long long block_of(std::size_t i) const {
    return block_length == 0 ? -1 : static_cast<long long>(i / block_length);
  }
};

/// num_blocks independent k-bit words from `data`, each matched to n amplitudes and concatenated.
inline ShapedFrame generate_compound_sequence(const CcdmCodec& codec, std::size_t num_blocks, BitSource& data) {
  ShapedFrame frame;
  frame.block_length = codec.n();
  frame.num_blocks = num_blocks;
  frame.amplitudes.reserve(codec.n() * num_blocks);
  frame.boundaries.reserve(num_blocks);
  for (std::size_t b = 0; b < num_blocks; ++b) {
    frame.boundaries.push_back(frame.amplitudes.size());
    const auto block = codec.match(data.draw(codec.k()));
    frame.amplitudes.insert(frame.amplitudes.end(), block.begin(), block.end());
  }
  return frame;
}

/// Amplitudes drawn i.i.d. from `dist`; the usual shaping emulation without a matcher.
inline ShapedFrame generate_iid_sequence(const AmplitudeDistribution& dist, std::size_t length,
                                         std::mt19937_64& engine) {
  ShapedFrame frame;
  std::discrete_distribution<int> pick(dist.probs().begin(), dist.probs().end());
  frame.amplitudes.resize(length);
  for (auto& a : frame.amplitudes) a = static_cast<LevelIndex>(pick(engine));
  return frame;
}

/// Pairs consecutive amplitudes into (I, Q) magnitudes and applies signs.
inline ShapedFrame pas_assemble(ShapedFrame frame, BitVector signs, const QamConstellation& qam) {
  if (signs.size() != frame.amplitudes.size())
    throw ContractError("sign count " + std::to_string(signs.size()) + " differs from amplitude count " +
                        std::to_string(frame.amplitudes.size()));
  if (frame.amplitudes.size() % 2 != 0) throw ContractError("amplitude count must be even");
  for (auto a : frame.amplitudes)
    if (a >= qam.amplitude_alphabet().size()) throw ContractError("amplitude level outside constellation");
  frame.signs = std::move(signs);
  frame.symbols.resize(frame.amplitudes.size() / 2);
  for (std::size_t s = 0; s < frame.symbols.size(); ++s)
    frame.symbols[s] = qam.point(frame.amplitudes[2 * s], frame.signs[2 * s], frame.amplitudes[2 * s + 1],
                                 frame.signs[2 * s + 1]);
  return frame;
}

struct DemappedStream {
  AmplitudeSequence amplitudes;
  BitVector signs;
};

/// Hard-decision inverse of pas_assemble.
inline DemappedStream pas_demap(const std::vector<cplx>& symbols, const QamConstellation& qam) {
  DemappedStream out;
  out.amplitudes.reserve(2 * symbols.size());
  out.signs.reserve(2 * symbols.size());
  for (const auto& z : symbols) {
    for (double c : {z.real(), z.imag()}) {
      auto [a, s] = qam.slice(c);
      out.amplitudes.push_back(a);
      out.signs.push_back(s);
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Frame CSV: index,amplitude_level,sign,symbol_re,symbol_im,block_id
// One row per amplitude; the symbol columns repeat the 2D symbol the amplitude
// belongs to (even index -> I, odd index -> Q). block_id is -1 for unstructured streams.

inline void write_frame_csv(std::ostream& os, const ShapedFrame& frame, const QamConstellation& qam) {
  os << "index,amplitude_level,sign,symbol_re,symbol_im,block_id\n";
  std::ostringstream line;
  line << std::setprecision(17);
  for (std::size_t i = 0; i < frame.amplitudes.size(); ++i) {
    line.str({});
    const cplx sym = i / 2 < frame.symbols.size() ? frame.symbols[i / 2] : cplx{};
    const int sign = i < frame.signs.size() ? frame.signs[i] : 0;
    line << i << ',' << qam.amplitude_alphabet()[frame.amplitudes[i]] << ',' << sign << ',' << sym.real() << ','
         << sym.imag() << ',' << frame.block_of(i) << '\n';
    os << line.str();
  }
}

struct FrameCsvRow {
  std::size_t index;
  double amplitude;
  int sign;
  cplx symbol;
  long long block_id;
};

inline std::vector<FrameCsvRow> read_frame_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line) || line != "index,amplitude_level,sign,symbol_re,symbol_im,block_id")
    throw ContractError("frame CSV: unexpected header");
  std::vector<FrameCsvRow> rows;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    FrameCsvRow r{};
    char c1, c2, c3, c4, c5;
    double re, im;
    if (!(ls >> r.index >> c1 >> r.amplitude >> c2 >> r.sign >> c3 >> re >> c4 >> im >> c5 >> r.block_id) ||
        c1 != ',' || c2 != ',' || c3 != ',' || c4 != ',' || c5 != ',')
      throw ContractError("frame CSV: malformed row " + std::to_string(rows.size() + 1));
    r.symbol = {re, im};
    rows.push_back(r);
  }
  return rows;
}

}  // namespace pcslab
