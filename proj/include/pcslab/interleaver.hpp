#pragma once

// Span-wise symbol interleavers and the de-interleave/re-interleave chain that
// keeps the transmit order intact.

#include <cstddef>
#include <cstdint>
#include <limits>
#include <numeric>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "pcslab/errors.hpp"
#include "pcslab/pas.hpp"

namespace pcslab {

struct InterleaverSpec {
  enum class Kind { identity, block, permutation };

  Kind kind = Kind::identity;
  std::size_t span = 1;
  std::size_t rows = 1;
  std::size_t cols = 1;
  std::uint64_t seed = 0;

  static InterleaverSpec identity(std::size_t span = 1) { return {Kind::identity, span, 1, span, 0}; }

  /// Write row-wise into a rows x cols array, read column-wise.
  static InterleaverSpec block(std::size_t rows, std::size_t cols) {
    if (rows == 0 || cols == 0) throw ContractError("block interleaver needs non-zero dimensions");
    return {Kind::block, rows * cols, rows, cols, 0};
  }

  /// Uniformly random permutation of each span, fixed by the seed.
  static InterleaverSpec permutation(std::uint64_t seed, std::size_t span) {
    if (span == 0) throw ContractError("permutation interleaver needs a non-zero span");
    return {Kind::permutation, span, 1, span, seed};
  }

  /// out[i] = in[order[i]] within each span.
  std::vector<std::size_t> order() const {
    std::vector<std::size_t> idx(span);
    switch (kind) {
      case Kind::identity:
        std::iota(idx.begin(), idx.end(), std::size_t{0});
        break;
      case Kind::block:
        for (std::size_t i = 0; i < span; ++i) idx[i] = (i % rows) * cols + i / rows;
        break;
      case Kind::permutation: {
        std::iota(idx.begin(), idx.end(), std::size_t{0});
        // Fisher-Yates with rejection sampling, so the permutation depends only on the seed.
        std::mt19937_64 engine(seed);
        for (std::size_t i = span - 1; i > 0; --i) {
          const std::uint64_t bound = i + 1;
          const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                                      std::numeric_limits<std::uint64_t>::max() % bound;
          std::uint64_t r;
          do r = engine();
          while (r >= limit);
          std::swap(idx[i], idx[r % bound]);
        }
        break;
      }
    }
    return idx;
  }

  std::string describe() const {
    switch (kind) {
      case Kind::identity:
        return "identity";
      case Kind::block:
        return "block:" + std::to_string(rows) + ":" + std::to_string(cols);
      case Kind::permutation:
        return "permutation:" + std::to_string(seed) + ":" + std::to_string(span);
    }
    return {};
  }
};

namespace detail {

template <class T>
std::vector<T> apply_spanwise(std::span<const T> in, const InterleaverSpec& spec, bool inverse) {
  if (spec.span == 0 || in.size() % spec.span != 0)
    throw ContractError("length " + std::to_string(in.size()) + " is not a multiple of interleaver span " +
                        std::to_string(spec.span));
  if (spec.kind == InterleaverSpec::Kind::identity) return {in.begin(), in.end()};
  const auto order = spec.order();
  std::vector<T> out(in.size());
  for (std::size_t base = 0; base < in.size(); base += spec.span)
    for (std::size_t i = 0; i < spec.span; ++i) {
      if (inverse)
        out[base + order[i]] = in[base + i];
      else
        out[base + i] = in[base + order[i]];
    }
  return out;
}

}  // namespace detail

template <class T>
std::vector<T> interleave(std::span<const T> in, const InterleaverSpec& spec) {
  return detail::apply_spanwise(in, spec, false);
}

template <class T>
std::vector<T> deinterleave(std::span<const T> in, const InterleaverSpec& spec) {
  return detail::apply_spanwise(in, spec, true);
}

template <class T>
std::vector<T> interleave(const std::vector<T>& in, const InterleaverSpec& spec) {
  return interleave(std::span<const T>(in), spec);
}

template <class T>
std::vector<T> deinterleave(const std::vector<T>& in, const InterleaverSpec& spec) {
  return deinterleave(std::span<const T>(in), spec);
}

/// Transmit path with the interleaver undone right after (stubbed) inner FEC encoding:
/// interleave, encode (identity), de-interleave. The emitted stream is the PAS stream itself.
inline std::vector<cplx> structure_preserving_chain(const ShapedFrame& frame, const InterleaverSpec& spec) {
  auto interleaved = interleave(frame.symbols, spec);
  auto emitted = deinterleave(interleaved, spec);
  if (emitted != frame.symbols) throw std::logic_error("interleaver pair is not an identity");
  return emitted;
}

}  // namespace pcslab
