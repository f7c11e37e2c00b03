#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "pcslab/metrics.hpp"

using namespace pcslab;

namespace {

const QamConstellation kQam64(64);
const QamConstellation kQam16(16);

AmplitudeDistribution uniform64() { return AmplitudeDistribution::uniform(kQam64.amplitude_alphabet()); }

}  // namespace

TEST(MomentRatio, UniformQamClosedForm) {
  // Uniform square M-QAM: 1.38095 for 64QAM, 1.32 for 16QAM.
  EXPECT_NEAR(moment_ratio(kQam64, uniform64()), 1.380952, 1e-6);
  EXPECT_NEAR(moment_ratio(kQam16, AmplitudeDistribution::uniform(kQam16.amplitude_alphabet())), 1.32, 1e-12);
}

TEST(MomentRatio, QpskIsOne) {
  const QamConstellation qpsk(4);
  EXPECT_NEAR(moment_ratio(qpsk, AmplitudeDistribution::uniform(qpsk.amplitude_alphabet())), 1.0, 1e-12);
  std::vector<cplx> syms{{1, 1}, {-1, 1}, {1, -1}, {-1, -1}};
  EXPECT_NEAR(moment_ratio(syms), 1.0, 1e-12);
}

TEST(MomentRatio, GaussianSamplesApproachTwo) {
  std::mt19937_64 eng(7);
  std::normal_distribution<double> g(0.0, 1.0);
  std::vector<cplx> syms(1'000'000);
  for (auto& z : syms) z = {g(eng), g(eng)};
  EXPECT_NEAR(moment_ratio(syms), 2.0, 0.02);
}

TEST(MomentRatio, ShapingRaisesKurtosis) {
  const auto alph = kQam64.amplitude_alphabet();
  const double uni = moment_ratio(kQam64, uniform64());
  double prev = uni;
  for (double h : {1.9, 1.75, 1.5}) {
    const double r = moment_ratio(kQam64, mb_distribution(alph, h));
    EXPECT_GT(r, prev) << h;
    EXPECT_LT(r, 2.0);
    prev = r;
  }
}

TEST(MomentRatio, EmpiricalMatchesExact) {
  const auto dist = mb_distribution(kQam64.amplitude_alphabet(), 1.75);
  auto eng = seeded_engine({3});
  BitSource bits(9);
  const auto frame = pas_assemble(generate_iid_sequence(dist, 400'000, eng), bits.draw(400'000), kQam64);
  EXPECT_NEAR(moment_ratio(frame.symbols), moment_ratio(kQam64, dist), 0.01);
  EXPECT_THROW(moment_ratio(std::vector<cplx>{}), ContractError);
}

TEST(Gmi, MatchesQuadratureOracleFor16Qam) {
  const auto dist = AmplitudeDistribution::uniform(kQam16.amplitude_alphabet());
  for (double snr : {0.0, 10.0, 20.0}) {
    const double ref = oracle::gmi_16qam_quadrature(snr);
    const double mc = gmi_monte_carlo(kQam16, dist, snr, 200'000, 11);
    EXPECT_NEAR(mc, ref, 0.02) << "snr " << snr << " oracle " << ref;
  }
}

TEST(Gmi, HighAndLowSnrLimits) {
  EXPECT_GE(gmi_monte_carlo(kQam64, uniform64(), 40.0, 100'000, 1), 5.99);
  EXPECT_LE(gmi_monte_carlo(kQam64, uniform64(), -20.0, 100'000, 1), 0.05);
}

TEST(Gmi, MonotoneInSnrWithCommonSeed) {
  const auto dist = mb_distribution(kQam64.amplitude_alphabet(), 1.75);
  double prev = -1.0;
  for (double snr = 4.0; snr <= 24.0; snr += 4.0) {
    const double g = gmi_monte_carlo(kQam64, dist, snr, 100'000, 5);
    EXPECT_GT(g, prev) << snr;
    prev = g;
  }
}

TEST(Gmi, BoundedBySourceEntropy) {
  for (double h : {1.5, 1.75, 2.0}) {
    const auto dist = h < 2.0 ? mb_distribution(kQam64.amplitude_alphabet(), h) : uniform64();
    const double bound = 2.0 * (entropy(dist) + 1.0);
    for (double snr : {10.0, 20.0, 35.0})
      EXPECT_LE(gmi_monte_carlo(kQam64, dist, snr, 50'000, 2), bound + 0.01);
  }
}

TEST(Gmi, ShapingGainAtModerateSnr) {
  const auto shaped = mb_distribution(kQam64.amplitude_alphabet(), 1.75);
  const double gs = gmi_monte_carlo(kQam64, shaped, 14.0, 200'000, 4);
  const double gu = gmi_monte_carlo(kQam64, uniform64(), 14.0, 200'000, 4);
  EXPECT_GT(gs, gu);
}

TEST(Gmi, Contracts) {
  EXPECT_THROW(gmi_monte_carlo(kQam64, uniform64(), std::nan(""), 100'000, 1), ContractError);
  EXPECT_THROW(gmi_monte_carlo(kQam64, uniform64(), 10.0, 9'999, 1), ContractError);
  EXPECT_THROW(gmi_monte_carlo(kQam16, uniform64(), 10.0, 10'000, 1), ContractError);
}

TEST(Gmi, DeterministicForSeed) {
  const double a = gmi_monte_carlo(kQam64, uniform64(), 12.0, 20'000, 99);
  const double b = gmi_monte_carlo(kQam64, uniform64(), 12.0, 20'000, 99);
  EXPECT_EQ(a, b);
}

TEST(AirN, SubtractsTwiceRateLoss) {
  EXPECT_NEAR(air_n(5.5, 0.54644), 4.40712, 1e-12);
  EXPECT_DOUBLE_EQ(air_n(3.0, 0.0), 3.0);
  EXPECT_THROW(air_n(-0.1, 0.0), ContractError);
  EXPECT_THROW(air_n(1.0, -0.1), ContractError);
  const auto r = make_air_result(100, 0.1, 15.0, 4.0);
  EXPECT_EQ(r.n, 100u);
  EXPECT_NEAR(r.air_n, 3.8, 1e-12);
}
