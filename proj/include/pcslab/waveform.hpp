#pragma once

// Sampled complex baseband of a WDM comb with root-raised-cosine pulses.
//
// Units used throughout the fiber code: time in ps, frequency in GHz,
// angular frequency in rad/ps, distance in km, power in W.

#include <bit>
#include <cmath>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <fstream>
#include <numbers>
#include <string>
#include <vector>

#include "pcslab/errors.hpp"
#include "pcslab/fft.hpp"

namespace pcslab {

using cplx = std::complex<double>;

inline double dbm_to_watt(double dbm) { return 1e-3 * std::pow(10.0, dbm / 10.0); }
inline double watt_to_dbm(double w) { return 10.0 * std::log10(w / 1e-3); }

/// Equally spaced channels centred on 0 Hz; channel i sits at (i - (count-1)/2) * spacing.
struct ChannelPlan {
  std::size_t count = 3;
  double spacing_ghz = 50.0;

  double offset_ghz(std::size_t channel) const {
    return (static_cast<double>(channel) - 0.5 * static_cast<double>(count - 1)) * spacing_ghz;
  }
  std::size_t center_index() const { return count / 2; }

  /// Occupied span from the lowest to the highest channel at symbol-rate width.
  double total_bandwidth_ghz(double symbol_rate_gbd) const {
    return static_cast<double>(count - 1) * spacing_ghz + symbol_rate_gbd;
  }
};

struct GridParams {
  double symbol_rate_gbd = 32.0;
  double roll_off = 0.1;
  ChannelPlan channels;
  std::size_t samples_per_symbol = 0;  // 0 selects the smallest sufficient power of two
};

/// Smallest power-of-two oversampling (at least 2) with
/// sample_rate >= total bandwidth * (1 + roll-off).
inline std::size_t auto_samples_per_symbol(const GridParams& p) {
  const double needed = p.channels.total_bandwidth_ghz(p.symbol_rate_gbd) * (1.0 + p.roll_off);
  std::size_t sps = 2;
  while (static_cast<double>(sps) * p.symbol_rate_gbd < needed) sps *= 2;
  return sps;
}

struct WaveformGrid {
  CVec samples;
  double symbol_rate_gbd = 32.0;
  std::size_t samples_per_symbol = 2;
  double roll_off = 0.1;
  ChannelPlan channels;
  std::size_t num_symbols = 0;
  /// Amplitude factor applied to each channel's unit-scale RRC waveform.
  std::vector<double> channel_gain;
  /// Frequency shift of each channel, in FFT bins of the full grid.
  std::vector<long long> channel_bin;

  double sample_rate_ghz() const { return symbol_rate_gbd * static_cast<double>(samples_per_symbol); }
  std::size_t size() const { return samples.size(); }
  double bin_spacing_ghz() const { return sample_rate_ghz() / static_cast<double>(samples.size()); }

  double mean_power() const {
    double p = 0.0;
    for (const auto& z : samples) p += std::norm(z);
    return samples.empty() ? 0.0 : p / static_cast<double>(samples.size());
  }

  /// Angular frequency (rad/ps) of FFT bin k.
  double omega(std::size_t k) const {
    const double f_ghz = static_cast<double>(Fft::signed_bin(k, samples.size())) * bin_spacing_ghz();
    return 2.0 * std::numbers::pi * f_ghz * 1e-3;
  }
};

/// Root-raised-cosine amplitude response, normalized to 1 at DC so that its
/// square is a Nyquist raised cosine.
inline double rrc_response(double f_ghz, double symbol_rate_gbd, double roll_off) {
  const double af = std::abs(f_ghz);
  const double lo = 0.5 * (1.0 - roll_off) * symbol_rate_gbd;
  const double hi = 0.5 * (1.0 + roll_off) * symbol_rate_gbd;
  if (af <= lo) return 1.0;
  if (af > hi) return 0.0;
  const double x = std::numbers::pi / (roll_off * symbol_rate_gbd) * (af - lo);
  return std::sqrt(0.5 * (1.0 + std::cos(x)));
}

/// RRC pulse shaping of every channel, frequency shift onto the WDM grid and
/// summation. Each channel's mean power is set to `launch_power_w` exactly.
inline WaveformGrid rrc_modulate(const std::vector<std::vector<cplx>>& streams, const GridParams& params,
                                 double launch_power_w) {
  if (streams.size() != params.channels.count)
    throw ContractError("expected " + std::to_string(params.channels.count) + " symbol streams");
  if (streams.empty() || streams.front().empty()) throw ContractError("no symbols to modulate");
  const std::size_t n = streams.front().size();
  for (const auto& s : streams)
    if (s.size() != n) throw ContractError("all channels must carry the same number of symbols");
  if (!(params.roll_off > 0.0 && params.roll_off <= 1.0)) throw ConfigError("roll-off must lie in (0, 1]");
  if (!(params.symbol_rate_gbd > 0.0)) throw ConfigError("symbol rate must be positive");

  WaveformGrid grid;
  grid.symbol_rate_gbd = params.symbol_rate_gbd;
  grid.roll_off = params.roll_off;
  grid.channels = params.channels;
  grid.num_symbols = n;
  grid.samples_per_symbol = params.samples_per_symbol ? params.samples_per_symbol : auto_samples_per_symbol(params);
  if (grid.samples_per_symbol < 2) throw ConfigError("at least two samples per symbol are required");

  const double fs = grid.sample_rate_ghz();
  const double needed = params.channels.total_bandwidth_ghz(params.symbol_rate_gbd) * (1.0 + params.roll_off);
  if (fs < needed)
    throw ConfigError("sample rate " + std::to_string(fs) + " GHz cannot hold the channel plan (needs " +
                      std::to_string(needed) + " GHz)");

  const std::size_t total = n * grid.samples_per_symbol;
  grid.samples.assign(total, cplx{});
  const double df = fs / static_cast<double>(total);

  std::vector<double> response(total);
  for (std::size_t b = 0; b < total; ++b)
    response[b] = rrc_response(static_cast<double>(Fft::signed_bin(b, total)) * df, grid.symbol_rate_gbd, grid.roll_off);

  const auto& fft_sym = Fft::of(n);
  CVec spectrum(total);
  CVec sym(n);
  for (std::size_t c = 0; c < streams.size(); ++c) {
    std::copy(streams[c].begin(), streams[c].end(), sym.begin());
    fft_sym.forward(sym);
    // Zero-stuffed upsampling replicates the symbol spectrum sps times.
    double energy = 0.0;
    for (std::size_t b = 0; b < total; ++b) {
      spectrum[b] = sym[b % n] * response[b];
      energy += std::norm(spectrum[b]);
    }
    const double mean_power = energy / (static_cast<double>(total) * static_cast<double>(total));
    if (!(mean_power > 0.0)) throw ContractError("channel " + std::to_string(c) + " has zero power");
    const double gain = std::sqrt(launch_power_w / mean_power);
    const long long shift = std::llround(params.channels.offset_ghz(c) / df);
    const auto tl = static_cast<long long>(total);
    for (std::size_t b = 0; b < total; ++b) {
      const auto dst = static_cast<std::size_t>(((static_cast<long long>(b) + shift) % tl + tl) % tl);
      grid.samples[dst] += gain * spectrum[b];
    }
    grid.channel_gain.push_back(gain);
    grid.channel_bin.push_back(shift);
  }
  Fft::of(total).inverse(grid.samples);
  return grid;
}

/// Power spectrum |X_k|^2 of the grid, in FFT bin order.
inline std::vector<double> power_spectrum(const WaveformGrid& grid) {
  CVec x = grid.samples;
  Fft::of(x.size()).forward(x);
  std::vector<double> p(x.size());
  for (std::size_t k = 0; k < x.size(); ++k) p[k] = std::norm(x[k]);
  return p;
}

// ---------------------------------------------------------------------------
// Waveform dump ("SFL1"): little-endian, 64-byte header followed by `length`
// interleaved float64 (re, im) pairs.
//   bytes  0..3   magic "SFL1"
//   bytes  4..7   uint32 header size (64)
//   bytes  8..15  float64 sample rate in GHz
//   bytes 16..23  uint64 length (complex samples)
//   bytes 24..31  float64 symbol rate in GBd
//   bytes 32..39  uint64 samples per symbol
//   bytes 40..63  zero

namespace detail {

template <class T>
void put_le(std::ostream& os, T value) {
  static_assert(std::endian::native == std::endian::little, "waveform dump assumes a little-endian host");
  os.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <class T>
T get_le(std::istream& is) {
  T value{};
  is.read(reinterpret_cast<char*>(&value), sizeof(T));
  return value;
}

}  // namespace detail

inline void write_waveform_dump(const std::string& path, const WaveformGrid& grid) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot open " + path + " for writing");
  os.write("SFL1", 4);
  detail::put_le<std::uint32_t>(os, 64);
  detail::put_le<double>(os, grid.sample_rate_ghz());
  detail::put_le<std::uint64_t>(os, grid.samples.size());
  detail::put_le<double>(os, grid.symbol_rate_gbd);
  detail::put_le<std::uint64_t>(os, grid.samples_per_symbol);
  const char pad[24] = {};
  os.write(pad, sizeof pad);
  for (const auto& z : grid.samples) {
    detail::put_le<double>(os, z.real());
    detail::put_le<double>(os, z.imag());
  }
  if (!os) throw std::runtime_error("write failed for " + path);
}

struct WaveformDump {
  double sample_rate_ghz = 0.0;
  double symbol_rate_gbd = 0.0;
  std::size_t samples_per_symbol = 0;
  std::vector<cplx> samples;
};

inline WaveformDump read_waveform_dump(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open " + path);
  char magic[4];
  is.read(magic, 4);
  if (!is || std::string(magic, 4) != "SFL1") throw ContractError(path + ": not an SFL1 waveform dump");
  const auto header = detail::get_le<std::uint32_t>(is);
  WaveformDump dump;
  dump.sample_rate_ghz = detail::get_le<double>(is);
  const auto length = detail::get_le<std::uint64_t>(is);
  dump.symbol_rate_gbd = detail::get_le<double>(is);
  dump.samples_per_symbol = detail::get_le<std::uint64_t>(is);
  is.seekg(header, std::ios::beg);
  dump.samples.resize(length);
  for (auto& z : dump.samples) {
    const double re = detail::get_le<double>(is);
    const double im = detail::get_le<double>(is);
    z = {re, im};
  }
  if (!is) throw ContractError(path + ": truncated waveform dump");
  return dump;
}

}  // namespace pcslab
