#pragma once

// Coherent receiver for one WDM channel and data-aided SNR estimation.

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "pcslab/errors.hpp"
#include "pcslab/fft.hpp"
#include "pcslab/fiber.hpp"
#include "pcslab/waveform.hpp"

namespace pcslab {

struct SnrEstimate {
  double snr_db = 0.0;
  double noise_power = 0.0;
  cplx scaling{1.0, 0.0};
  std::size_t samples = 0;
  /// False when fewer than 1000 symbols entered the estimate.
  bool reliable = false;
};

inline constexpr double kSnrCapDb = 60.0;
inline constexpr std::size_t kMinReliableSamples = 1000;

/// Least-squares complex scaling h = <rx, tx> / <tx, tx>, then
/// SNR = sum |h tx|^2 / sum |rx - h tx|^2, capped at 60 dB.
inline SnrEstimate estimate_snr(std::span<const cplx> tx, std::span<const cplx> rx) {
  if (tx.size() != rx.size()) throw ContractError("transmitted and received lengths differ");
  if (tx.empty()) throw ContractError("no symbols to estimate SNR from");
  cplx cross{};
  double tx_energy = 0.0;
  for (std::size_t i = 0; i < tx.size(); ++i) {
    cross += std::conj(tx[i]) * rx[i];
    tx_energy += std::norm(tx[i]);
  }
  if (!(tx_energy > 0.0)) throw ContractError("transmit symbols carry zero power");
  SnrEstimate est;
  est.scaling = cross / tx_energy;
  est.samples = tx.size();
  est.reliable = tx.size() >= kMinReliableSamples;
  double signal = 0.0, noise = 0.0;
  for (std::size_t i = 0; i < tx.size(); ++i) {
    const cplx fitted = est.scaling * tx[i];
    signal += std::norm(fitted);
    noise += std::norm(rx[i] - fitted);
  }
  est.noise_power = noise / static_cast<double>(tx.size());
  const double snr = noise > 0.0 ? signal / noise : std::numeric_limits<double>::infinity();
  est.snr_db = std::min(kSnrCapDb, 10.0 * std::log10(snr));
  return est;
}

inline SnrEstimate estimate_snr(const std::vector<cplx>& tx, const std::vector<cplx>& rx) {
  return estimate_snr(std::span<const cplx>(tx), std::span<const cplx>(rx));
}

/// Channel selection, full chromatic-dispersion compensation over the link,
/// matched RRC filtering and symbol-spaced sampling at the known timing phase.
/// Output symbols are divided by the transmitter's channel gain; when `reference`
/// is given, the remaining common complex scaling is removed by least squares.
inline std::vector<cplx> rx_dsp(const WaveformGrid& wave, const FiberLinkConfig& link, std::size_t channel,
                                std::optional<std::span<const cplx>> reference = std::nullopt) {
  if (channel >= wave.channels.count || channel >= wave.channel_bin.size())
    throw ContractError("unknown channel index " + std::to_string(channel));
  const std::size_t total = wave.size();
  const std::size_t n = wave.num_symbols;

  CVec spectrum = wave.samples;
  Fft::of(total).forward(spectrum);

  // Inverse dispersion over the full length, applied before the frequency shift
  // so every channel sees its exact transfer function (group delay included).
  const double cd = -0.5 * link.beta2_ps2_per_km() * link.total_length_km();
  for (std::size_t k = 0; k < total; ++k) {
    const double w = wave.omega(k);
    spectrum[k] *= std::polar(1.0, cd * w * w);
  }

  // Shift the channel to baseband, matched-filter, and fold the spectrum onto
  // n bins (decimation by sps in the frequency domain).
  const auto tl = static_cast<long long>(total);
  const long long shift = wave.channel_bin[channel];
  const double df = wave.bin_spacing_ghz();
  CVec folded(n, cplx{});
  for (std::size_t b = 0; b < total; ++b) {
    const double h = rrc_response(static_cast<double>(Fft::signed_bin(b, total)) * df, wave.symbol_rate_gbd,
                                  wave.roll_off);
    if (h == 0.0) continue;
    const auto src = static_cast<std::size_t>(((static_cast<long long>(b) + shift) % tl + tl) % tl);
    folded[b % n] += spectrum[src] * h;
  }
  Fft::of(n).inverse(folded);

  // Matched filtering of an RRC pulse yields a Nyquist pulse with unit gain at
  // the sampling instants, so only the transmitter gain remains.
  const double norm = 1.0 / wave.channel_gain[channel];
  std::vector<cplx> symbols(n);
  for (std::size_t k = 0; k < n; ++k) symbols[k] = folded[k] * norm;

  if (reference) {
    const auto est = estimate_snr(*reference, std::span<const cplx>(symbols));
    for (auto& z : symbols) z /= est.scaling;
  }
  return symbols;
}

}  // namespace pcslab
