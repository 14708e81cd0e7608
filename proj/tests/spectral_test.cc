#include <cmath>
#include <complex>

#include <gtest/gtest.h>

#include "spdekit/common.h"
#include "spdekit/spectral.h"

namespace spdekit {
namespace {

OperatorSpec Wave(double alpha, double rho = 1.0, double length = M_PI) {
  OperatorSpec s;
  s.family = Family::kDampedWave;
  s.alpha = alpha;
  s.rho = rho;
  s.length = length;
  return s;
}

// Roots of z^2 + b z + c by the textbook formula.
std::pair<cplx, cplx> QuadraticRoots(double b, double c) {
  const cplx d = std::sqrt(cplx(b * b - 4.0 * c));
  return {(-b + d) / 2.0, (-b - d) / 2.0};
}

TEST(Spectrum, DampedPairMatchesQuadraticFormula) {
  // mu = 4 is the second Dirichlet mode on (0, pi).
  const Spectrum blocks = BuildSpectrum(Wave(7.0 / 12.0), 2);
  const SpectralBlock& b = blocks[1];
  ASSERT_DOUBLE_EQ(b.base.mu, 4.0);
  const double damp = std::pow(4.0, 7.0 / 12.0);
  const auto [p, m] = QuadraticRoots(damp, 4.0);
  EXPECT_NEAR(std::abs(b.lambda_plus - p), 0.0, 1e-12);
  EXPECT_NEAR(std::abs(b.lambda_minus - m), 0.0, 1e-12);
  EXPECT_NEAR(b.lambda_plus.real(), -1.1224, 1e-4);
  EXPECT_NEAR(b.lambda_plus.imag(), 1.6553, 1e-4);
  EXPECT_NEAR(std::abs(b.lambda_plus + b.lambda_minus + damp), 0.0, 1e-12);
  EXPECT_NEAR(std::abs(b.lambda_plus * b.lambda_minus - 4.0), 0.0, 1e-12);
}

TEST(Spectrum, SumAndProductIdentitiesOverManyBlocks) {
  for (double alpha : {0.3, 0.5, 0.6}) {
    const OperatorSpec spec = Wave(alpha, 1.0, 1.0);
    for (const SpectralBlock& b : BuildSpectrum(spec, 500)) {
      const double mu = b.base.mu;
      const double damp = spec.rho * std::pow(mu, alpha);
      EXPECT_LE(std::abs(b.lambda_plus + b.lambda_minus + damp), 1e-10 * damp);
      EXPECT_LE(std::abs(b.lambda_plus * b.lambda_minus - mu), 1e-10 * mu);
    }
  }
}

TEST(Spectrum, CoincidingEigenvaluesAreRejected) {
  // rho^2 = 4 mu^{1 - 2 alpha} = 4 at mu = 1 whatever alpha is.
  for (double alpha : {0.2, 0.5, 0.7}) {
    try {
      BuildSpectrum(Wave(alpha, 2.0), 1);
      FAIL() << "expected DegenerateMode";
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::kDegenerateMode);
    }
  }
}

TEST(Spectrum, HeatEigenvaluesAreMinusMuToBeta) {
  OperatorSpec s;
  s.beta = 0.75;
  for (const SpectralBlock& b : BuildSpectrum(s, 20)) {
    EXPECT_DOUBLE_EQ(b.lambda_plus.real(), -std::pow(b.base.mu, 0.75));
  }
}

TEST(Spectrum, ModesAreOrthonormalOnTheSquare) {
  OperatorSpec s;
  s.m = 2;
  const std::vector<BaseMode> modes = EnumerateModes(s, 6);
  // Midpoint rule on a fine grid integrates products of sines exactly
  // enough.
  const int N = 200;
  for (int a = 0; a < 6; ++a) {
    for (int b = 0; b < 6; ++b) {
      double sum = 0.0;
      for (int i = 0; i < N; ++i) {
        for (int j = 0; j < N; ++j) {
          const double xi[2] = {(i + 0.5) / N, (j + 0.5) / N};
          sum += ModeFunction(s, modes[a], xi) * ModeFunction(s, modes[b], xi);
        }
      }
      EXPECT_NEAR(sum / (N * N), a == b ? 1.0 : 0.0, 1e-10);
    }
  }
}

class SemigroupTest : public ::testing::Test {
 protected:
  Spectrum blocks = BuildSpectrum(Wave(7.0 / 12.0), 3);
};

TEST_F(SemigroupTest, TimeZeroIsIdentity) {
  Eigen::VectorXd x = Eigen::VectorXd::LinSpaced(6, -1.0, 2.0);
  const SpectralField f = SpectralField::FromReal(blocks, x);
  const Eigen::VectorXd y = RealPhysical(blocks, SemigroupApply(blocks, 0.0, f));
  EXPECT_LE((y - x).norm(), 1e-14);
}

TEST_F(SemigroupTest, EigenvectorEvolvesByItsEigenvalue) {
  SpectralField phi = SpectralField::Zeros(blocks, Chart::kEigen);
  phi.set_pair(1, Eigen::Vector2cd(1.0, 0.0));
  const SpectralField y = SemigroupApply(blocks, 0.7, phi);
  const cplx expect = std::exp(0.7 * blocks[1].lambda_plus);
  EXPECT_NEAR(std::abs(y.pair(1)(0) - expect), 0.0, 1e-14);
  EXPECT_NEAR(std::abs(y.pair(1)(1)), 0.0, 1e-14);
}

TEST_F(SemigroupTest, BlockExpMatchesMatrixExponentialSeries) {
  const SpectralBlock& b = blocks[2];
  const double t = 0.3;
  // Taylor series of the real 2x2 generator as the oracle.
  Eigen::Matrix2d term = Eigen::Matrix2d::Identity(), sum = term;
  for (int k = 1; k < 80; ++k) {
    term = term * b.generator * (t / k);
    sum += term;
  }
  EXPECT_LE((BlockExp(b, t) - sum).norm(), 1e-12);
}

TEST(Semigroup, HeatScalar) {
  OperatorSpec s;
  s.length = M_PI;
  const Spectrum blocks = BuildSpectrum(s, 2);  // mu = 1, 4
  Eigen::VectorXd x(2);
  x << 0.0, 1.0;
  const Eigen::VectorXd y = RealPhysical(
      blocks, SemigroupApply(blocks, 1.0, SpectralField::FromReal(blocks, x)));
  EXPECT_NEAR(y(1), std::exp(-4.0), 1e-15);
  EXPECT_NEAR(y(1), 0.0183156, 1e-7);
}

TEST_F(SemigroupTest, FirstPowerIsMinusGenerator) {
  SpectralField phi = SpectralField::Zeros(blocks, Chart::kEigen);
  phi.set_pair(0, Eigen::Vector2cd(1.0, 0.0));
  const SpectralField p = FractionalPowerApply(blocks, 1.0, phi);
  const SpectralField a = GeneratorApply(blocks, phi);
  EXPECT_NEAR(std::abs(p.pair(0)(0) + a.pair(0)(0)), 0.0, 1e-13);
  EXPECT_NEAR(std::abs(p.pair(0)(0) + blocks[0].lambda_plus), 0.0, 1e-13);
}

TEST_F(SemigroupTest, HalfPowerTwiceIsFirstPower) {
  Eigen::VectorXd x(6);
  x << 1.0, -0.5, 0.25, 2.0, -1.0, 0.3;
  const SpectralField f = SpectralField::FromReal(blocks, x);
  const SpectralField half =
      FractionalPowerApply(blocks, 0.5, FractionalPowerApply(blocks, 0.5, f));
  const SpectralField one = FractionalPowerApply(blocks, 1.0, f);
  EXPECT_LE((half.coeffs - one.coeffs).norm(), 1e-12 * one.coeffs.norm());
}

TEST(Semigroup, LambdaPowerOnDoubledFrequencies) {
  // On (0, pi / 2) the Dirichlet modes are sin(2 n xi) with mu = 4 n^2.
  const Spectrum blocks = BuildSpectrum(Wave(7.0 / 12.0, 1.0, M_PI / 2), 5);
  for (int n = 1; n <= 5; ++n) {
    const double mu = blocks[n - 1].base.mu;
    EXPECT_NEAR(mu, 4.0 * n * n, 1e-12);
    EXPECT_NEAR(std::pow(mu, 7.0 / 12.0),
                std::pow(4.0, 7.0 / 12.0) * std::pow(n, 7.0 / 6.0), 1e-11);
  }
}

TEST_F(SemigroupTest, ResolventInvertsShiftedGenerator) {
  Eigen::VectorXd x(6);
  x << 0.3, 1.0, -2.0, 0.1, 0.7, -0.4;
  const SpectralField f = SpectralField::FromReal(blocks, x);
  for (cplx lam : {cplx(0.5, 0.0), cplx(-0.2, 3.0), cplx(2.0, -1.0)}) {
    const SpectralField r = ResolventApply(blocks, lam, f);
    const SpectralField ar = GeneratorApply(blocks, r);
    const Eigen::VectorXcd back = lam * r.coeffs - ar.coeffs;
    EXPECT_LE((back - f.coeffs).norm(), 1e-10 * f.coeffs.norm());
  }
}

TEST_F(SemigroupTest, ResolventOnEigenvectorAtRealPoint) {
  OperatorSpec s;
  const Spectrum heat = BuildSpectrum(s, 1);
  SpectralField f = SpectralField::Zeros(heat, Chart::kPhysical);
  f.coeffs(0) = 2.0;
  const SpectralField r = ResolventApply(heat, 1.0, f);
  EXPECT_NEAR(std::abs(r.coeffs(0) - 2.0 / (1.0 - heat[0].lambda_plus)), 0.0,
              1e-15);
}

TEST_F(SemigroupTest, ResolventAtEigenvalueThrows) {
  const SpectralField f = SpectralField::Zeros(blocks, Chart::kPhysical);
  try {
    ResolventApply(blocks, blocks[0].lambda_plus, f);
    FAIL() << "expected SpectrumHit";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kSpectrumHit);
  }
}

TEST(Asymptotics, SlopesFollowTheRegime) {
  const AsymptoticReport hi = FitAsymptotics(Wave(0.6, 1.0, 1.0),
                                             BuildSpectrum(Wave(0.6, 1.0, 1.0), 200));
  EXPECT_NEAR(hi.slopes[1], 0.6, 0.03);
  EXPECT_NEAR(hi.slopes[0], 0.4, 0.03);
  const AsymptoticReport lo = FitAsymptotics(Wave(0.3, 1.0, 1.0),
                                             BuildSpectrum(Wave(0.3, 1.0, 1.0), 200));
  EXPECT_NEAR(lo.slopes[0], 0.5, 0.03);
  EXPECT_NEAR(lo.slopes[1], 0.5, 0.03);
  OperatorSpec heat;
  const AsymptoticReport h = FitAsymptotics(heat, BuildSpectrum(heat, 200));
  EXPECT_NEAR(h.slopes[0], 1.0, 1e-12);
}

TEST(Asymptotics, TooFewBlocks) {
  OperatorSpec heat;
  EXPECT_THROW(FitAsymptotics(heat, BuildSpectrum(heat, 10)), Error);
}

TEST(Chart, PhysicalEigenRoundTrip) {
  const Spectrum blocks = BuildSpectrum(Wave(0.4, 1.0, 1.0), 8);
  Eigen::VectorXd x = Eigen::VectorXd::LinSpaced(16, -3.0, 3.0);
  const SpectralField f = SpectralField::FromReal(blocks, x);
  const SpectralField e = ToChart(blocks, f, Chart::kEigen);
  EXPECT_LE((RealPhysical(blocks, ToChart(blocks, e, Chart::kPhysical)) - x).norm(),
            1e-12);
}

}  // namespace
}  // namespace spdekit
