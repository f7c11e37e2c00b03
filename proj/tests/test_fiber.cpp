#include <gtest/gtest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>

#include "pcslab/fiber.hpp"
#include "pcslab/pas.hpp"
#include "pcslab/receiver.hpp"
#include "pcslab/waveform.hpp"

using namespace pcslab;

namespace {

std::vector<cplx> random_qam(std::size_t count, std::uint64_t seed, std::size_t order = 64) {
  QamConstellation qam(order);
  std::mt19937_64 engine(seed);
  auto frame = generate_iid_sequence(AmplitudeDistribution::uniform(qam.amplitude_alphabet()), 2 * count, engine);
  BitSource signs(seed + 1);
  return pas_assemble(frame, signs.draw(2 * count), qam).symbols;
}

std::vector<std::vector<cplx>> random_channels(std::size_t channels, std::size_t count, std::uint64_t seed) {
  std::vector<std::vector<cplx>> out;
  for (std::size_t c = 0; c < channels; ++c) out.push_back(random_qam(count, seed * 31 + c));
  return out;
}

GridParams single_channel() {
  GridParams p;
  p.channels.count = 1;
  return p;
}

double rms_error(const std::vector<cplx>& a, const std::vector<cplx>& b) {
  double e = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) e += std::norm(a[i] - b[i]);
  return std::sqrt(e / static_cast<double>(a.size()));
}

double energy(const CVec& x) {
  double e = 0.0;
  for (const auto& z : x) e += std::norm(z);
  return e;
}

FiberLinkConfig lossless_link() {
  FiberLinkConfig link;
  link.attenuation_db_per_km = 0.0;
  link.num_spans = 1;
  link.amplified = false;
  return link;
}

}  // namespace

TEST(FiberLinkConfig, DerivedCoefficients) {
  FiberLinkConfig link;
  EXPECT_NEAR(link.beta2_ps2_per_km(), -21.6826, 1e-3);
  EXPECT_NEAR(link.alpha_per_km(), 0.0460517, 1e-6);
  EXPECT_NEAR(10.0 * std::log10(link.span_gain()), 16.0, 1e-12);
  EXPECT_EQ(link.steps_per_span(), 800u);
  link.step_size_km = 100.0;
  EXPECT_THROW(link.validate(), ConfigError);
}

TEST(RrcModulate, AutoOversampling) {
  GridParams three;
  EXPECT_EQ(auto_samples_per_symbol(three), 8u);  // (2 * 50 + 32) * 1.1 = 145.2 GHz > 128 GHz
  EXPECT_EQ(auto_samples_per_symbol(single_channel()), 2u);
}

TEST(RrcModulate, SetsLaunchPower) {
  const double p = dbm_to_watt(2.0);
  auto grid = rrc_modulate({random_qam(4096, 1)}, single_channel(), p);
  EXPECT_NEAR(watt_to_dbm(grid.mean_power()), 2.0, 0.05);
  EXPECT_NEAR(grid.mean_power() / p, 1.0, 1e-12);

  GridParams three;
  auto wdm = rrc_modulate(random_channels(3, 4096, 2), three, p);
  EXPECT_NEAR(wdm.mean_power() / (3.0 * p), 1.0, 0.01);
}

TEST(RrcModulate, MirroredChannelsGiveSymmetricSpectrum) {
  GridParams two;
  two.channels = {2, 50.0};
  two.samples_per_symbol = 8;
  auto symbols = random_qam(2048, 3);
  auto grid = rrc_modulate({symbols, symbols}, two, 1e-3);
  ASSERT_EQ(grid.channel_bin[0], -grid.channel_bin[1]);
  auto p = power_spectrum(grid);
  const std::size_t total = p.size();
  double lower = 0.0, upper = 0.0;
  for (std::size_t k = 0; k < total; ++k) (Fft::signed_bin(k, total) < 0 ? lower : upper) += p[k];
  EXPECT_NEAR(lower / upper, 1.0, 1e-3);
  // Identical channels: the spectrum around -25 GHz is the one around +25 GHz.
  const double peak = *std::max_element(p.begin(), p.end());
  const long long off = grid.channel_bin[1];
  for (long long d = -off + 1; d < off; d += 7) {
    const auto up = static_cast<std::size_t>((off + d + static_cast<long long>(total)) % static_cast<long long>(total));
    const auto dn = static_cast<std::size_t>((-off + d + static_cast<long long>(total)) % static_cast<long long>(total));
    ASSERT_NEAR(p[up], p[dn], 1e-9 * peak);
  }

  // Real-valued symbols: the magnitude spectrum is exactly mirror-symmetric.
  std::vector<cplx> bpsk(2048);
  for (std::size_t i = 0; i < bpsk.size(); ++i) bpsk[i] = symbols[i].real() > 0 ? 1.0 : -1.0;
  auto real_grid = rrc_modulate({bpsk, bpsk}, two, 1e-3);
  auto q = power_spectrum(real_grid);
  const double q_peak = *std::max_element(q.begin(), q.end());
  for (std::size_t k = 1; k < total; ++k) ASSERT_NEAR(q[k], q[total - k], 1e-9 * q_peak);
}

TEST(RrcModulate, BandwidthOverflowIsConfigError) {
  GridParams three;
  three.samples_per_symbol = 4;
  EXPECT_THROW(rrc_modulate(random_channels(3, 256, 1), three, 1e-3), ConfigError);
  EXPECT_THROW(rrc_modulate(random_channels(2, 256, 1), three, 1e-3), ContractError);
}

TEST(RxDsp, MatchedFilterRecoversSymbols) {
  auto tx = random_qam(4096, 4);
  auto grid = rrc_modulate({tx}, single_channel(), 1e-3);
  FiberLinkConfig back_to_back;
  back_to_back.num_spans = 0;
  auto rx = rx_dsp(grid, back_to_back, 0);
  EXPECT_LE(rms_error(rx, tx), 1e-6);
}

TEST(RxDsp, BackToBackWdmRecoversEveryChannel) {
  GridParams three;
  auto tx = random_channels(3, 2048, 5);
  auto grid = rrc_modulate(tx, three, dbm_to_watt(2.0));
  FiberLinkConfig back_to_back;
  back_to_back.num_spans = 0;
  for (std::size_t c = 0; c < 3; ++c) EXPECT_LE(rms_error(rx_dsp(grid, back_to_back, c), tx[c]), 1e-6) << c;
  EXPECT_THROW(rx_dsp(grid, back_to_back, 3), ContractError);
}

TEST(RxDsp, CompensatesDispersionOfLinearLink) {
  GridParams three;
  auto tx = random_channels(3, 2048, 6);
  auto grid = rrc_modulate(tx, three, 1e-3);
  FiberLinkConfig link;
  link.linear_mode = true;
  auto out = ssfm_propagate(grid, link, nullptr);
  for (std::size_t c = 0; c < 3; ++c) EXPECT_LE(rms_error(rx_dsp(out, link, c), tx[c]), 1e-6) << c;
}

TEST(Ssfm, DispersionOnlyConservesEnergyAndSpectrum) {
  GridParams three;
  auto grid = rrc_modulate(random_channels(3, 1024, 7), three, 1e-3);
  auto link = lossless_link();
  link.gamma_per_w_km = 0.0;
  link.step_size_km = 1.0;
  auto out = ssfm_propagate(grid, link, nullptr);
  EXPECT_NEAR(energy(out.samples) / energy(grid.samples), 1.0, 1e-9);
  auto before = power_spectrum(grid);
  auto after = power_spectrum(out);
  const double peak = *std::max_element(before.begin(), before.end());
  for (std::size_t k = 0; k < before.size(); ++k) ASSERT_NEAR(after[k], before[k], 1e-9 * peak);
  // Dispersion did act: the time-domain waveform changed.
  double moved = 0.0;
  for (std::size_t i = 0; i < grid.size(); ++i) moved += std::norm(out.samples[i] - grid.samples[i]);
  EXPECT_GT(moved / energy(grid.samples), 0.1);
}

TEST(Ssfm, PureSelfPhaseModulationMatchesClosedForm) {
  auto grid = rrc_modulate({random_qam(1024, 8)}, single_channel(), dbm_to_watt(10.0));
  auto link = lossless_link();
  link.dispersion_ps_per_nm_km = 0.0;
  link.step_size_km = 0.5;
  auto out = ssfm_propagate(grid, link, nullptr);
  double worst = 0.0;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const cplx u = grid.samples[i];
    const cplx expected = u * std::polar(1.0, link.gamma_per_w_km * std::norm(u) * link.span_length_km);
    ASSERT_NEAR(std::abs(out.samples[i]), std::abs(u), 1e-9 * std::abs(u) + 1e-15);
    worst = std::max(worst, std::abs(out.samples[i] - expected) / std::abs(u));
  }
  EXPECT_LE(worst, 1e-6);
  // The nonlinear phase is far from negligible at this power.
  EXPECT_GT(link.gamma_per_w_km * dbm_to_watt(10.0) * link.span_length_km, 0.5);
}

TEST(Ssfm, AttenuationLaw) {
  auto grid = rrc_modulate({random_qam(1024, 9)}, single_channel(), 1e-3);
  FiberLinkConfig link;
  link.num_spans = 1;
  link.gamma_per_w_km = 0.0;
  link.amplified = false;
  link.step_size_km = 0.5;
  auto out = ssfm_propagate(grid, link, nullptr);
  EXPECT_NEAR(out.mean_power() / (grid.mean_power() * std::pow(10.0, -0.2 * 80.0 / 10.0)), 1.0, 1e-9);

  // Same answer through the stepped (nonlinear-path) integrator with gamma -> tiny.
  link.gamma_per_w_km = 1e-300;
  auto stepped = ssfm_propagate(grid, link, nullptr);
  EXPECT_NEAR(stepped.mean_power() / out.mean_power(), 1.0, 1e-9);
}

TEST(StepRule, NonlinearPhaseStepsCarryEqualEffectiveLength) {
  FiberLinkConfig link;
  link.step_size_km = 4.0;
  link.step_rule = StepRule::nonlinear_phase;
  const auto steps = link.span_steps();
  ASSERT_EQ(steps.size(), 20u);
  const double a = 0.2 * std::log(10.0) / 10.0;
  auto leff = [&](double z) { return (1.0 - std::exp(-a * z)) / a; };
  double z = 0.0, sum = 0.0;
  const double share = leff(80.0) / 20.0;
  for (std::size_t i = 0; i < steps.size(); ++i) {
    if (i > 0) EXPECT_GT(steps[i], steps[i - 1]);
    EXPECT_NEAR(leff(z + steps[i]) - leff(z), share, 1e-9);
    z += steps[i];
    sum += steps[i];
  }
  EXPECT_NEAR(sum, 80.0, 1e-9);

  link.step_rule = StepRule::uniform;
  for (double h : link.span_steps()) EXPECT_DOUBLE_EQ(h, 4.0);
  // Without loss both rules coincide.
  link.step_rule = StepRule::nonlinear_phase;
  link.attenuation_db_per_km = 0.0;
  for (double h : link.span_steps()) EXPECT_DOUBLE_EQ(h, 4.0);
}

// Lossy SPM without dispersion: u(L) = u(0) exp(-alpha L / 2) exp(j gamma |u(0)|^2 L_eff).
double lossy_spm_error(StepRule rule, double step_km) {
  auto grid = rrc_modulate({random_qam(1024, 21)}, single_channel(), dbm_to_watt(8.0));
  FiberLinkConfig link;
  link.num_spans = 1;
  link.amplified = false;
  link.dispersion_ps_per_nm_km = 0.0;
  link.step_size_km = step_km;
  link.step_rule = rule;
  const auto out = ssfm_propagate(grid, link, nullptr);
  const double a = link.alpha_per_km();
  const double leff = (1.0 - std::exp(-a * 80.0)) / a;
  double worst = 0.0;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const cplx u = grid.samples[i];
    const cplx expected = u * std::exp(-a * 40.0) * std::polar(1.0, link.gamma_per_w_km * std::norm(u) * leff);
    worst = std::max(worst, std::abs(out.samples[i] - expected) / std::abs(expected));
  }
  return worst;
}

TEST(StepRule, LossySpmMatchesClosedFormForEveryRule) {
  EXPECT_LT(lossy_spm_error(StepRule::uniform, 4.0), 1e-6);
  EXPECT_LT(lossy_spm_error(StepRule::nonlinear_phase, 4.0), 1e-6);  // cached operators
  EXPECT_LT(lossy_spm_error(StepRule::nonlinear_phase, 0.5), 1e-6);  // operators rebuilt per step
}

// With dispersion and loss there is no closed form; compare received centre-channel
// symbols against a fine uniform-step run. Uniform steps of a few km put the
// spurious four-wave-mixing resonance (beta2 w^2 h = 2 pi) inside the WDM band;
// equal-nonlinear-phase steps are aperiodic and avoid it.
TEST(StepRule, NonlinearPhaseStepsAvoidCoarseStepResonance) {
  GridParams three;
  auto grid = rrc_modulate(random_channels(3, 4096, 22), three, dbm_to_watt(6.0));
  FiberLinkConfig link;
  link.num_spans = 1;
  link.amplified = false;
  link.step_size_km = 0.05;
  const auto reference = rx_dsp(ssfm_propagate(grid, link, nullptr), link, 1);
  auto accuracy_db = [&](StepRule rule, double step) {
    link.step_rule = rule;
    link.step_size_km = step;
    return estimate_snr(reference, rx_dsp(ssfm_propagate(grid, link, nullptr), link, 1)).snr_db;
  };
  const double uniform4 = accuracy_db(StepRule::uniform, 4.0);
  const double shaped4 = accuracy_db(StepRule::nonlinear_phase, 4.0);
  const double shaped2 = accuracy_db(StepRule::nonlinear_phase, 2.0);
  EXPECT_GT(shaped4, uniform4 + 3.0);
  EXPECT_GT(shaped2, accuracy_db(StepRule::uniform, 2.0) + 3.0);
  EXPECT_GT(shaped2, shaped4 + 3.0);
}

TEST(Ssfm, AmplifierRestoresSpanLoss) {
  auto grid = rrc_modulate({random_qam(1024, 10)}, single_channel(), 1e-3);
  FiberLinkConfig link;
  link.linear_mode = true;
  link.num_spans = 3;
  auto out = ssfm_propagate(grid, link, nullptr);
  EXPECT_NEAR(out.mean_power() / grid.mean_power(), 1.0, 1e-9);
}

TEST(Ssfm, DeterministicReplay) {
  GridParams three;
  auto grid = rrc_modulate(random_channels(3, 512, 11), three, dbm_to_watt(2.0));
  FiberLinkConfig link;
  link.num_spans = 2;
  link.step_size_km = 2.0;
  GaussianSource a(seeded_engine({5, 1})), b(seeded_engine({5, 1}));
  auto x = ssfm_propagate(grid, link, &a);
  auto y = ssfm_propagate(grid, link, &b);
  EXPECT_TRUE(std::equal(x.samples.begin(), x.samples.end(), y.samples.begin()));
}

TEST(EstimateSnr, Examples) {
  auto tx = random_qam(2000, 12);
  EXPECT_EQ(estimate_snr(tx, tx).snr_db, 60.0);
  auto doubled = tx;
  for (auto& z : doubled) z *= 2.0;
  auto est = estimate_snr(tx, doubled);
  EXPECT_EQ(est.snr_db, 60.0);
  EXPECT_NEAR(std::abs(est.scaling - cplx(2.0, 0.0)), 0.0, 1e-12);
  EXPECT_TRUE(est.reliable);

  std::vector<cplx> zeros(2000);
  EXPECT_THROW(estimate_snr(zeros, tx), ContractError);
  EXPECT_THROW(estimate_snr(std::vector<cplx>(tx.begin(), tx.end() - 1), tx), ContractError);
  std::vector<cplx> short_tx(tx.begin(), tx.begin() + 100);
  EXPECT_FALSE(estimate_snr(short_tx, short_tx).reliable);
}

TEST(EstimateSnr, InjectedGaussianNoise) {
  auto tx = random_qam(100'000, 13);
  for (double snr_db : {5.0, 15.0, 25.0}) {
    const double sigma2 = std::pow(10.0, -snr_db / 10.0);  // unit-power constellation
    GaussianSource noise(static_cast<std::uint64_t>(snr_db));
    auto rx = tx;
    const cplx rotation = std::polar(0.7, 0.3);
    for (auto& z : rx) z = rotation * z + noise.complex(sigma2 * 0.49);
    // Signal power after scaling is 0.49; noise was scaled to keep P / sigma^2 fixed.
    EXPECT_NEAR(estimate_snr(tx, rx).snr_db, snr_db, 0.1) << snr_db;
  }
}

TEST(RxDsp, LinearAseMatchesAnalyticSnr) {
  GridParams three;
  auto tx = random_channels(3, 8192, 14);
  FiberLinkConfig link;
  link.linear_mode = true;
  for (double power_dbm : {-4.0, 2.0}) {
    link.launch_power_dbm = power_dbm;
    auto grid = rrc_modulate(tx, three, dbm_to_watt(power_dbm));
    GaussianSource ase(seeded_engine({14, static_cast<std::uint64_t>(power_dbm + 10)}));
    auto out = ssfm_propagate(grid, link, &ase);
    auto rx = rx_dsp(out, link, three.channels.center_index());
    const double measured = estimate_snr(tx[1], rx).snr_db;
    const double analytic = 10.0 * std::log10(analytic_ase_snr(link, three.symbol_rate_gbd));
    EXPECT_NEAR(measured, analytic, 0.3) << power_dbm;
  }
}

TEST(RxDsp, NonlinearityLowersSnrAtHighPower) {
  GridParams three;
  auto tx = random_channels(3, 2048, 15);
  FiberLinkConfig link;
  link.num_spans = 2;
  link.step_size_km = 0.5;
  link.launch_power_dbm = 8.0;
  auto grid = rrc_modulate(tx, three, dbm_to_watt(link.launch_power_dbm));
  auto run = [&](bool linear) {
    auto l = link;
    l.linear_mode = linear;
    GaussianSource ase(seeded_engine({15}));
    auto out = ssfm_propagate(grid, l, &ase);
    return estimate_snr(tx[1], rx_dsp(out, l, 1)).snr_db;
  };
  const double linear = run(true);
  const double nonlinear = run(false);
  EXPECT_LT(nonlinear, linear - 1.0);
}

TEST(WaveformDump, RoundTrip) {
  auto grid = rrc_modulate({random_qam(256, 16)}, single_channel(), 1e-3);
  const auto path = (std::filesystem::temp_directory_path() / "pcslab_dump_test.sfl").string();
  write_waveform_dump(path, grid);
  EXPECT_EQ(std::filesystem::file_size(path), 64 + 16 * grid.size());
  auto dump = read_waveform_dump(path);
  EXPECT_EQ(dump.sample_rate_ghz, grid.sample_rate_ghz());
  EXPECT_EQ(dump.samples_per_symbol, grid.samples_per_symbol);
  ASSERT_EQ(dump.samples.size(), grid.size());
  EXPECT_TRUE(std::equal(dump.samples.begin(), dump.samples.end(), grid.samples.begin()));
  std::remove(path.c_str());
}
