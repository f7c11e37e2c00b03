#pragma once

// Scalar nonlinear Schroedinger propagation over amplified spans:
//
//   du/dz = -(alpha/2) u - j (beta2/2) d2u/dt2 + j gamma |u|^2 u
//
// integrated with the symmetric split-step Fourier method. Steps are either
// uniform or spaced so that each carries the same effective length (and thus the
// same nonlinear phase) within a span.
// Each span ends in an amplifier that restores the span loss and adds ASE.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <numbers>
#include <string>
#include <vector>

#include "pcslab/errors.hpp"
#include "pcslab/fft.hpp"
#include "pcslab/random.hpp"
#include "pcslab/waveform.hpp"

namespace pcslab {

inline constexpr double kPlanck = 6.62607015e-34;       // J s
inline constexpr double kSpeedOfLight = 299792458.0;     // m/s

enum class StepRule { uniform, nonlinear_phase };

struct FiberLinkConfig {
  double span_length_km = 80.0;
  std::size_t num_spans = 4;
  double attenuation_db_per_km = 0.2;
  double dispersion_ps_per_nm_km = 17.0;
  double wavelength_nm = 1550.0;
  double gamma_per_w_km = 1.3;
  double step_size_km = 0.1;
  double noise_figure_db = 5.0;
  double launch_power_dbm = 2.0;
  bool linear_mode = false;
  bool amplified = true;
  /// uniform: steps of step_size_km. nonlinear_phase: the same number of steps per
  /// span, shortest at the span input where the power is highest.
  StepRule step_rule = StepRule::uniform;

  /// beta2 = -D lambda^2 / (2 pi c), in ps^2/km.
  double beta2_ps2_per_km() const {
    const double c_nm_per_ps = kSpeedOfLight * 1e9 / 1e12;
    return -dispersion_ps_per_nm_km * wavelength_nm * wavelength_nm / (2.0 * std::numbers::pi * c_nm_per_ps);
  }

  /// Power attenuation coefficient in 1/km.
  double alpha_per_km() const { return attenuation_db_per_km * std::log(10.0) / 10.0; }

  double effective_gamma() const { return linear_mode ? 0.0 : gamma_per_w_km; }

  double span_gain() const { return std::pow(10.0, attenuation_db_per_km * span_length_km / 10.0); }

  double carrier_frequency_hz() const { return kSpeedOfLight / (wavelength_nm * 1e-9); }

  /// One-sided ASE power spectral density of one amplifier, W/Hz (single polarization).
  double ase_psd_w_per_hz() const {
    const double nf = std::pow(10.0, noise_figure_db / 10.0);
    return (span_gain() - 1.0) * kPlanck * carrier_frequency_hz() * nf / 2.0;
  }

  double total_length_km() const { return span_length_km * static_cast<double>(num_spans); }

  std::size_t steps_per_span() const {
    return static_cast<std::size_t>(std::ceil(span_length_km / step_size_km - 1e-9));
  }

  /// Step lengths within one span, in propagation order.
  std::vector<double> span_steps() const {
    const std::size_t k = steps_per_span();
    std::vector<double> steps(k, span_length_km / static_cast<double>(k));
    const double a = alpha_per_km();
    if (step_rule == StepRule::uniform || a == 0.0) return steps;
    // Boundary j solves L_eff(z_j) = (j / k) L_eff(span), L_eff(z) = (1 - exp(-a z)) / a.
    const double total = 1.0 - std::exp(-a * span_length_km);
    double prev = 0.0;
    for (std::size_t j = 1; j <= k; ++j) {
      const double z = j == k ? span_length_km
                              : -std::log(1.0 - static_cast<double>(j) / static_cast<double>(k) * total) / a;
      steps[j - 1] = z - prev;
      prev = z;
    }
    return steps;
  }

  void validate() const {
    if (!(span_length_km > 0.0)) throw ConfigError("span length must be positive");
    if (!(step_size_km > 0.0)) throw ConfigError("step size must be positive");
    if (step_size_km > span_length_km) throw ConfigError("step size exceeds span length");
    if (!(attenuation_db_per_km >= 0.0)) throw ConfigError("attenuation must be non-negative");
    if (!(noise_figure_db >= 0.0)) throw ConfigError("noise figure must be non-negative");
    if (!(wavelength_nm > 0.0)) throw ConfigError("wavelength must be positive");
    if (!(gamma_per_w_km >= 0.0)) throw ConfigError("nonlinear coefficient must be non-negative");
    if (!std::isfinite(dispersion_ps_per_nm_km)) throw ConfigError("dispersion must be finite");
  }
};

namespace detail {

/// exp(j beta2 w^2 dz / 2 - alpha dz / 2) on every bin: dispersion and field loss over dz.
inline CVec linear_operator(const WaveformGrid& grid, const FiberLinkConfig& link, double dz) {
  const double beta2 = link.beta2_ps2_per_km();
  const double loss = std::exp(-0.5 * link.alpha_per_km() * dz);
  CVec op(grid.size());
  for (std::size_t k = 0; k < op.size(); ++k) {
    const double w = grid.omega(k);
    op[k] = loss * std::polar(1.0, 0.5 * beta2 * w * w * dz);
  }
  return op;
}

inline void multiply(CVec& x, const CVec& op) {
  for (std::size_t k = 0; k < x.size(); ++k) x[k] *= op[k];
}

inline void kerr_step(CVec& u, double gamma_dz) {
  for (auto& z : u) {
    const double phi = gamma_dz * std::norm(z);
    z *= cplx(std::cos(phi), std::sin(phi));
  }
}

}  // namespace detail

inline constexpr std::size_t kMaxCachedStepOperators = 128;

/// Propagates `wave` through link.num_spans spans. `ase` may be null to switch
/// amplifier noise off; amplifiers are skipped entirely when link.amplified is false.
inline WaveformGrid ssfm_propagate(WaveformGrid wave, const FiberLinkConfig& link, GaussianSource* ase) {
  link.validate();
  if (link.num_spans == 0) return wave;
  const auto& fft = Fft::of(wave.size());
  auto& u = wave.samples;

  const auto steps = link.span_steps();
  const double gamma = link.effective_gamma();
  const bool linear = gamma == 0.0;
  const bool uniform = std::all_of(steps.begin(), steps.end(), [&](double h) { return h == steps.front(); });

  // Uniform steps reuse two precomputed operators. Non-uniform steps keep one
  // operator per merged step when that fits in memory, else rebuild each from
  // the dispersion phase per unit length.
  const CVec whole_span = linear ? detail::linear_operator(wave, link, link.span_length_km) : CVec{};
  const bool cached = !linear && uniform;
  const CVec half_step = cached ? detail::linear_operator(wave, link, 0.5 * steps.front()) : CVec{};
  const CVec full_step = cached ? detail::linear_operator(wave, link, steps.front()) : CVec{};
  std::vector<double> merged;  // linear step lengths, steps.size() + 1 of them
  std::vector<CVec> per_step;
  std::vector<double> phase_per_km;
  if (!linear && !uniform) {
    merged.push_back(0.5 * steps.front());
    for (std::size_t s = 0; s + 1 < steps.size(); ++s) merged.push_back(0.5 * (steps[s] + steps[s + 1]));
    merged.push_back(0.5 * steps.back());
    if (merged.size() <= kMaxCachedStepOperators) {
      for (double dz : merged) per_step.push_back(detail::linear_operator(wave, link, dz));
    } else {
      phase_per_km.resize(wave.size());
      for (std::size_t k = 0; k < wave.size(); ++k) {
        const double w = wave.omega(k);
        phase_per_km[k] = 0.5 * link.beta2_ps2_per_km() * w * w;
      }
    }
  }
  // Linear step number `index` (0 .. steps.size()).
  auto apply_linear = [&](std::size_t index) {
    if (cached) {
      detail::multiply(u, index == 0 || index == steps.size() ? half_step : full_step);
    } else if (!per_step.empty()) {
      detail::multiply(u, per_step[index]);
    } else {
      const double dz = merged[index];
      const double loss = std::exp(-0.5 * link.alpha_per_km() * dz);
      for (std::size_t k = 0; k < u.size(); ++k) {
        const double phi = phase_per_km[k] * dz;
        u[k] *= cplx(loss * std::cos(phi), loss * std::sin(phi));
      }
    }
  };

  // The Kerr step sees the power at the step midpoint; over the step the power
  // varies as exp(-alpha s), s in [-h/2, h/2], which integrates to 2 sinh(alpha h / 2) / alpha.
  std::vector<double> nonlinear_length(steps.size());
  const double a = link.alpha_per_km();
  for (std::size_t s = 0; s < steps.size(); ++s)
    nonlinear_length[s] = a > 0.0 ? 2.0 * std::sinh(0.5 * a * steps[s]) / a : steps[s];

  const double amp_field_gain = std::sqrt(link.span_gain());
  const double ase_variance = link.ase_psd_w_per_hz() * wave.sample_rate_ghz() * 1e9;

  for (std::size_t span = 0; span < link.num_spans; ++span) {
    fft.forward(u);
    if (linear) {
      // Loss and dispersion commute; the whole span is one diagonal operator.
      detail::multiply(u, whole_span);
    } else {
      apply_linear(0);
      for (std::size_t s = 0; s < steps.size(); ++s) {
        fft.inverse(u);
        detail::kerr_step(u, gamma * nonlinear_length[s]);
        fft.forward(u);
        // Adjacent half steps merge into one linear step.
        apply_linear(s + 1);
      }
    }
    fft.inverse(u);

    if (link.amplified) {
      for (auto& z : u) z *= amp_field_gain;
      if (ase)
        for (auto& z : u) z += ase->complex(ase_variance);
    }
  }
  return wave;
}

/// ASE-only SNR of one channel after matched filtering: P / (N_spans * S_ASE * R_s).
inline double analytic_ase_snr(const FiberLinkConfig& link, double symbol_rate_gbd) {
  const double noise = static_cast<double>(link.num_spans) * link.ase_psd_w_per_hz() * symbol_rate_gbd * 1e9;
  return dbm_to_watt(link.launch_power_dbm) / noise;
}

}  // namespace pcslab
