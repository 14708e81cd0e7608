#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "spdekit/common.h"
#include "spdekit/controllability.h"
#include "spdekit/spectral.h"

namespace spdekit {
namespace {

OperatorSpec Heat(double gamma = 0.0, double length = 1.0) {
  OperatorSpec s;
  s.gamma = gamma;
  s.length = length;
  return s;
}

OperatorSpec Wave(double alpha, double gamma, double length = 1.0) {
  OperatorSpec s;
  s.family = Family::kDampedWave;
  s.alpha = alpha;
  s.gamma = gamma;
  s.length = length;
  return s;
}

// Composite Simpson rule, independent of the library quadrature.
double Simpson(const std::function<double(double)>& f, double a, double b,
               int n = 20000) {
  const double h = (b - a) / n;
  double s = f(a) + f(b);
  for (int i = 1; i < n; ++i) s += (i % 2 ? 4.0 : 2.0) * f(a + i * h);
  return s * h / 3.0;
}

TEST(Gramian, HeatModeMatchesQuadrature) {
  // mu = 4 is the second mode on (0, pi).
  const Spectrum blocks = BuildSpectrum(Heat(0.0, M_PI), 2);
  const double q = Gramian(blocks, 0.0, 0.5)[1].Q(0, 0);
  const double oracle =
      Simpson([](double s) { return std::exp(-8.0 * s); }, 0.0, 0.5);
  EXPECT_NEAR(q, oracle, 1e-12);
  EXPECT_NEAR(q, (1.0 - std::exp(-4.0)) / 8.0, 1e-15);
  EXPECT_NEAR(q, 0.122710, 1e-6);
}

TEST(Gramian, DampedBlockMatchesQuadrature) {
  const Spectrum blocks = BuildSpectrum(Wave(0.6, 0.1), 3);
  const SpectralBlock& b = blocks[2];
  const Eigen::Vector2d g = InputVector(b, 0.1);
  const double t = 0.8;
  Eigen::Matrix2d oracle;
  for (int i = 0; i < 2; ++i) {
    for (int j = 0; j < 2; ++j) {
      oracle(i, j) = Simpson(
          [&](double s) {
            const Eigen::Vector2d v = BlockExp(b, s) * g;
            return v(i) * v(j);
          },
          0.0, t, 4000);
    }
  }
  EXPECT_LE((Gramian(blocks, 0.1, t)[2].Q - oracle).norm(), 1e-10 * oracle.norm());
}

TEST(Gramian, EigenvaluesShrinkToZeroWithTime) {
  const Spectrum blocks = BuildSpectrum(Wave(7.0 / 12.0, 0.0), 4);
  for (size_t k = 0; k < blocks.size(); ++k) {
    double prev = INFINITY;
    for (double t : {1.0, 0.5, 0.1, 0.01, 0.001}) {
      const double e = Gramian(blocks, 0.0, t)[k].min_eigenvalue;
      EXPECT_LT(e, prev);
      EXPECT_GT(e, 0.0);
      prev = e;
    }
    EXPECT_LT(prev, 1e-7);
  }
}

TEST(Gramian, GrowsInLoewnerOrder) {
  const Spectrum blocks = BuildSpectrum(Wave(0.45, 0.2), 6);
  for (size_t k = 0; k < blocks.size(); ++k) {
    const Eigen::Matrix2d d =
        Gramian(blocks, 0.2, 1.0)[k].Q - Gramian(blocks, 0.2, 0.5)[k].Q;
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es(d);
    EXPECT_GE(es.eigenvalues()(0), -1e-14);
  }
}

TEST(Gamma, HeatPerModeClosedForm) {
  const double gamma = 0.4;
  const Spectrum blocks = BuildSpectrum(Heat(gamma), 12);
  const double t = 0.05;
  const GammaProfile p = GammaNorm(Gramian(blocks, gamma, t));
  for (size_t k = 0; k < blocks.size(); ++k) {
    const double mu = blocks[k].base.mu;
    const double q = std::pow(mu, -gamma) * -std::expm1(-2.0 * mu * t) / (2.0 * mu);
    EXPECT_NEAR(p.per_block[k], std::exp(-t * mu) / std::sqrt(q),
                1e-10 * p.per_block[k]);
  }
}

TEST(Gamma, HeatNonincreasingInTime) {
  const Spectrum blocks = BuildSpectrum(Heat(0.3), 30);
  std::vector<double> prev;
  for (double t = 0.001; t < 2.0; t *= 1.5) {
    const GammaProfile p = GammaNorm(Gramian(blocks, 0.3, t));
    if (!prev.empty()) {
      for (size_t k = 0; k < blocks.size(); ++k) {
        EXPECT_LE(p.per_block[k], prev[k] * (1.0 + 1e-12));
      }
    }
    prev = p.per_block;
  }
}

TEST(Gamma, HeatSmallTimeExponent) {
  for (double gamma : {0.0, 0.5}) {
    const Spectrum blocks = BuildSpectrum(Heat(gamma), 400);
    std::vector<double> t, g;
    for (double s = 1e-4; s <= 1e-2; s *= 1.5) {
      t.push_back(s);
      g.push_back(GammaAt(blocks, gamma, s));
    }
    const double expected = -(0.5 + gamma / 2.0);
    EXPECT_NEAR(FitLogLog(t, g).slope, expected, 0.05 * std::abs(expected));
  }
}

TEST(MinimalEnergy, ZeroStateNeedsNoEnergy) {
  const Spectrum blocks = BuildSpectrum(Wave(0.6, 0.0), 5);
  const SpectralField h = SpectralField::Zeros(blocks, Chart::kPhysical);
  EXPECT_EQ(MinimalEnergy(Gramian(blocks, 0.0, 1.0), blocks, h), 0.0);
}

TEST(MinimalEnergy, SingleHeatModeClosedForm) {
  const Spectrum blocks = BuildSpectrum(Heat(0.2), 3);
  SpectralField h = SpectralField::Zeros(blocks, Chart::kPhysical);
  h.coeffs(2) = -1.7;
  const double t = 0.3, mu = blocks[2].base.mu;
  const double q = std::pow(mu, -0.2) * -std::expm1(-2.0 * mu * t) / (2.0 * mu);
  EXPECT_NEAR(MinimalEnergy(Gramian(blocks, 0.2, t), blocks, h),
              std::exp(-t * mu) * 1.7 / std::sqrt(q), 1e-10);
}

TEST(Control, ZeroStateGivesZeroControl) {
  const OperatorSpec spec = Wave(0.6, 0.0);
  const Spectrum blocks = BuildSpectrum(spec, 4);
  const SpectralField h = SpectralField::Zeros(blocks, Chart::kPhysical);
  const ControlSignal u = SynthesizeControl(blocks, spec, h, 1.0);
  EXPECT_EQ(u.energy, 0.0);
  for (const Eigen::VectorXd& v : u.values) EXPECT_EQ(v.norm(), 0.0);
}

TEST(Control, SteersSingleBlockToRest) {
  const OperatorSpec spec = Wave(0.5, 0.0, M_PI / 2);  // mu_1 = 4
  const Spectrum blocks = BuildSpectrum(spec, 1);
  ASSERT_NEAR(blocks[0].base.mu, 4.0, 1e-12);
  // Phi+ + Phi- is real for a complex pair.
  SpectralField h = SpectralField::Zeros(blocks, Chart::kEigen);
  h.set_pair(0, Eigen::Vector2cd(1.0, 1.0));
  const SpectralField hp = ToChart(blocks, h, Chart::kPhysical);
  const ControlSignal u = SynthesizeControl(blocks, spec, hp, 1.0, 2);
  const SteeringResult y = VerifySteering(blocks, spec, u, hp, 4096);
  EXPECT_LE(y.terminal_norm, 1e-6 * FieldNorm(blocks, hp));
}

TEST(Control, ZeroInputLeavesFreeDecay) {
  const Spectrum blocks = BuildSpectrum(Wave(0.6, 0.0), 3);
  Eigen::VectorXd h(6);
  h << 1.0, 0.5, -0.3, 0.2, 0.0, 1.0;
  const Eigen::VectorXd y = ControlledTerminalState(
      blocks, 0.0, h, 0.7, [](double) { return Eigen::VectorXd::Zero(3); }, 4,
      16);
  Eigen::VectorXd free(6);
  for (int k = 0; k < 3; ++k) {
    free.segment(2 * k, 2) = BlockExp(blocks[k], 0.7) * h.segment(2 * k, 2);
  }
  EXPECT_LE((y - free).norm(), 1e-14);
}

TEST(Control, QuadratureConvergesAtLeastSecondOrder) {
  const OperatorSpec spec = Wave(0.6, 0.0);
  const Spectrum blocks = BuildSpectrum(spec, 3);
  Eigen::VectorXd x(6);
  x << 1.0, 0.0, -0.5, 0.3, 0.2, -0.1;
  const SpectralField h = SpectralField::FromReal(blocks, x);
  const ControlSignal u = SynthesizeControl(blocks, spec, h, 1.0);
  double prev = VerifySteering(blocks, spec, u, h, 4).terminal_norm;
  for (int nodes = 8; nodes <= 32; nodes *= 2) {
    const double r = VerifySteering(blocks, spec, u, h, nodes).terminal_norm;
    if (prev < 1e-12) break;
    EXPECT_LE(r, prev / 4.0) << nodes;
    prev = r;
  }
}

TEST(Control, GramianEnergyBelowExplicitEnergy) {
  const OperatorSpec spec = Wave(0.55, 0.05);
  const Spectrum blocks = BuildSpectrum(spec, 6);
  const auto g = Gramian(blocks, spec.gamma, 1.0);
  std::mt19937_64 rng(7);
  std::normal_distribution<double> n01;
  for (int s = 0; s < 100; ++s) {
    Eigen::VectorXd x(12);
    for (int i = 0; i < 12; ++i) x(i) = n01(rng);
    const SpectralField h = SpectralField::FromReal(blocks, x);
    const ControlSignal u = SynthesizeControl(blocks, spec, h, 1.0);
    EXPECT_LT(MinimalEnergy(g, blocks, h), u.energy);
  }
}

TEST(Control, DegreeBelowThresholdRejected) {
  const OperatorSpec spec = Wave(0.7, 0.4);
  const Spectrum blocks = BuildSpectrum(spec, 2);
  const SpectralField h = SpectralField::Zeros(blocks, Chart::kPhysical);
  const double m = ControlDegreeThreshold(0.7, 0.4);
  ASSERT_GE(m, 1.0);
  try {
    SynthesizeControl(blocks, spec, h, 1.0, static_cast<int>(std::floor(m)));
    FAIL() << "expected DegreeTooSmall";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kDegreeTooSmall);
  }
}

}  // namespace
}  // namespace spdekit
