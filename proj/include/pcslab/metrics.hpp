#pragma once

// Figures of merit: fourth-moment ratio of a constellation, bit-metric
// decoding rate (GMI) on an AWGN auxiliary channel, and the finite-length
// rate AIR_n = GMI - 2 * rate loss.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <random>
#include <span>
#include <vector>

#include "pcslab/errors.hpp"
#include "pcslab/pas.hpp"
#include "pcslab/random.hpp"
#include "pcslab/shaping.hpp"

namespace pcslab {

/// E[|X|^4] / E[|X|^2]^2 for the 2D constellation whose quadratures carry
/// i.i.d. amplitudes from `dist` with uniform signs. Exact sum over all points.
inline double moment_ratio(const QamConstellation& qam, const AmplitudeDistribution& dist) {
  if (!(dist.alphabet() == qam.amplitude_alphabet()))
    throw ContractError("distribution alphabet differs from the constellation's amplitudes");
  double m2 = 0.0, m4 = 0.0;
  const auto m = dist.size();
  for (LevelIndex ai = 0; ai < m; ++ai)
    for (LevelIndex aq = 0; aq < m; ++aq)
      for (std::uint8_t si : {0, 1})
        for (std::uint8_t sq : {0, 1}) {
          const double p = dist[ai] * dist[aq] / 4.0;
          const double e = std::norm(qam.point(ai, si, aq, sq));
          m2 += p * e;
          m4 += p * e * e;
        }
  if (!(m2 > 0.0)) throw ContractError("constellation has zero power");
  return m4 / (m2 * m2);
}

/// Sample moment ratio of observed symbols.
inline double moment_ratio(std::span<const cplx> symbols) {
  double m2 = 0.0, m4 = 0.0;
  for (const auto& z : symbols) {
    const double e = std::norm(z);
    m2 += e;
    m4 += e * e;
  }
  if (symbols.empty() || !(m2 > 0.0)) throw ContractError("symbols have zero power");
  const double n = static_cast<double>(symbols.size());
  return (m4 / n) / ((m2 / n) * (m2 / n));
}

inline double moment_ratio(const std::vector<cplx>& symbols) { return moment_ratio(std::span<const cplx>(symbols)); }

/// Mean symbol energy of the shaped constellation.
inline double symbol_energy(const QamConstellation& qam, const AmplitudeDistribution& dist) {
  return 2.0 * qam.scale() * qam.scale() * dist.second_moment();
}

inline constexpr std::size_t kMinGmiSamples = 10'000;

/// Monte-Carlo bit-metric decoding rate in bits per 2D symbol:
///   GMI = H(X) - sum_i E[ log2( sum_x q(x,Y) P(x) / sum_{x : b_i(x) = B_i} q(x,Y) P(x) ) ]
/// with q the Gaussian metric at the true noise variance and P the shaped priors.
/// Clipped below at 0.
inline double gmi_monte_carlo(const QamConstellation& qam, const AmplitudeDistribution& dist, double snr_db,
                              std::size_t num_samples, std::uint64_t seed) {
  if (std::isnan(snr_db)) throw ContractError("SNR is NaN");
  if (num_samples < kMinGmiSamples) throw ContractError("GMI needs at least 10^4 samples");
  if (!(dist.alphabet() == qam.amplitude_alphabet()))
    throw ContractError("distribution alphabet differs from the constellation's amplitudes");

  const double es = symbol_energy(qam, dist);
  const double sigma2 = es / std::pow(10.0, snr_db / 10.0);  // complex noise variance
  const double sigma_dim = std::sqrt(sigma2 / 2.0);
  const std::size_t bits = qam.bits_per_quadrature();

  // One quadrature is a 2m-PAM: coordinate, label and log prior per point.
  struct PamPoint {
    double x;
    std::uint32_t label;
    double log_prior;
  };
  std::vector<PamPoint> pam;
  for (LevelIndex a = 0; a < dist.size(); ++a)
    for (std::uint8_t s : {0, 1})
      if (dist[a] > 0.0)
        pam.push_back({qam.coordinate(a, s), qam.quadrature_label(a, s), std::log(dist[a] / 2.0)});

  double pam_entropy = 0.0;
  for (const auto& p : pam) pam_entropy -= std::exp(p.log_prior) * p.log_prior / std::log(2.0);

  auto engine = seeded_engine({seed, 0x474d49});
  std::discrete_distribution<int> pick(dist.probs().begin(), dist.probs().end());
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> metric(pam.size());
  std::vector<double> match(bits);

  double penalty = 0.0;  // accumulated sum over bits of log2(all / matching)
  for (std::size_t n = 0; n < num_samples; ++n) {
    for (int dim = 0; dim < 2; ++dim) {
      const auto a = static_cast<LevelIndex>(pick(engine));
      const auto s = static_cast<std::uint8_t>(engine() & 1u);
      const std::uint32_t tx_label = qam.quadrature_label(a, s);
      const double y = qam.coordinate(a, s) + sigma_dim * normal(engine);

      double peak = -std::numeric_limits<double>::infinity();
      for (std::size_t j = 0; j < pam.size(); ++j) {
        const double d = y - pam[j].x;
        metric[j] = pam[j].log_prior - d * d / sigma2;
        peak = std::max(peak, metric[j]);
      }
      double all = 0.0;
      std::fill(match.begin(), match.end(), 0.0);
      for (std::size_t j = 0; j < pam.size(); ++j) {
        const double w = std::exp(metric[j] - peak);
        all += w;
        const std::uint32_t agree = ~(pam[j].label ^ tx_label);
        for (std::size_t i = 0; i < bits; ++i)
          if ((agree >> i) & 1u) match[i] += w;
      }
      for (std::size_t i = 0; i < bits; ++i) penalty += std::log2(all / match[i]);
    }
  }
  const double gmi = 2.0 * pam_entropy - penalty / static_cast<double>(num_samples);
  return std::max(0.0, gmi);
}

struct AirResult {
  std::size_t n = 0;
  double rate_loss = 0.0;   // bits per amplitude
  double snr_eff_db = 0.0;
  double gmi = 0.0;         // bits per 2D symbol
  double air_n = 0.0;       // bits per 2D symbol
};

/// AIR_n = GMI - 2 * rate loss: two shaped amplitudes per 2D symbol.
inline double air_n(double gmi, double rate_loss) {
  if (!(gmi >= 0.0)) throw ContractError("GMI must be non-negative");
  if (!(rate_loss >= 0.0)) throw ContractError("rate loss must be non-negative");
  return gmi - 2.0 * rate_loss;
}

inline AirResult make_air_result(std::size_t n, double rate_loss, double snr_eff_db, double gmi) {
  return {n, rate_loss, snr_eff_db, gmi, air_n(gmi, rate_loss)};
}

}  // namespace pcslab
