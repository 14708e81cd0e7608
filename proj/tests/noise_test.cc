#include <cmath>

#include <gtest/gtest.h>

#include "spdekit/common.h"
#include "spdekit/controllability.h"
#include "spdekit/noise.h"

namespace spdekit {
namespace {

OperatorSpec Heat(int m, double gamma) {
  OperatorSpec s;
  s.m = m;
  s.gamma = gamma;
  return s;
}

OperatorSpec Wave(double alpha, double gamma = 0.0) {
  OperatorSpec s;
  s.family = Family::kDampedWave;
  s.alpha = alpha;
  s.gamma = gamma;
  return s;
}

TEST(Trace, HeatLineConverges) {
  const TraceReport r = WeightedTraceTest(Heat(1, 0.0), 1.0, 2048);
  EXPECT_TRUE(r.analytic_convergent);
  EXPECT_DOUBLE_EQ(r.analytic_index, 0.5);
  EXPECT_TRUE(r.numeric_convergent);
  EXPECT_LT(r.scans[r.best].tail_fraction, 0.01);
}

TEST(Trace, HeatCubeDiverges) {
  const TraceReport r = WeightedTraceTest(Heat(3, 0.0), 1.0, 2048);
  EXPECT_FALSE(r.analytic_convergent);
  EXPECT_DOUBLE_EQ(r.analytic_index, 1.5);
  EXPECT_FALSE(r.numeric_convergent);
  for (const TraceScan& s : r.scans) EXPECT_GE(s.ratio, 1.0);
}

TEST(Trace, SmoothNoiseConvergesFast) {
  const TraceReport r = WeightedTraceTest(Heat(3, 10.0), 1.0, 512);
  EXPECT_TRUE(r.numeric_convergent);
  EXPECT_TRUE(r.analytic_convergent);
  EXPECT_LT(r.scans[r.best].tail_fraction, 1e-10);
}

TEST(Trace, ClosedFormTermMatchesQuadrature) {
  const Spectrum blocks = BuildSpectrum(Wave(0.6, 0.1), 3);
  const SpectralBlock& b = blocks[2];
  const double eta = 0.4, T = 1.0;
  const Eigen::Vector2d g = InputVector(b, 0.1);
  // s = u^{1/(1 - eta)} removes the endpoint singularity.
  const double p = 1.0 / (1.0 - eta);
  const double oracle = CompositeGaussLegendre(
      [&](double u) {
        const double s = std::pow(u, p);
        const double ds = p * std::pow(u, p - 1.0);
        return std::pow(s, -eta) * (BlockExp(b, s) * g).squaredNorm() * ds;
      },
      0.0, std::pow(T, 1.0 - eta), 64, 32);
  EXPECT_NEAR(WeightedTraceTerm(b, 0.1, eta, T), oracle, 1e-10 * oracle);
}

TEST(Convolution, HeatVarianceMatchesGramian) {
  const Spectrum blocks = BuildSpectrum(Heat(1, 0.0), 1);
  const auto est = SampleConvolutionCovariance(blocks, 0.0, 1.0, 4, 100000, 11);
  const double q = Gramian(blocks, 0.0, 1.0)[0].Q(0, 0);
  EXPECT_NEAR(est[0].exact(0, 0), q, 1e-15);
  EXPECT_LE(std::abs(est[0].mean_product(0, 0) - q),
            3.0 * est[0].stderr_product(0, 0));
}

TEST(Convolution, DampedCovarianceMatchesGramian) {
  const Spectrum blocks = BuildSpectrum(Wave(7.0 / 12.0), 2);
  const auto est = SampleConvolutionCovariance(blocks, 0.0, 1.0, 8, 100000, 5);
  for (int k = 0; k < 2; ++k) {
    const Eigen::Matrix2d q = Gramian(blocks, 0.0, 1.0)[k].Q;
    for (int i = 0; i < 2; ++i) {
      for (int j = 0; j < 2; ++j) {
        EXPECT_LE(std::abs(est[k].mean_product(i, j) - q(i, j)),
                  3.0 * est[k].stderr_product(i, j))
            << k << i << j;
      }
    }
  }
}

TEST(Convolution, ResultsIndependentOfWorkerCount) {
  const Spectrum blocks = BuildSpectrum(Wave(0.6), 3);
  const auto a = SampleConvolutionCovariance(blocks, 0.0, 1.0, 4, 500, 3, 1);
  const auto b = SampleConvolutionCovariance(blocks, 0.0, 1.0, 4, 500, 3, 3);
  for (size_t k = 0; k < a.size(); ++k) {
    EXPECT_EQ(a[k].mean_product, b[k].mean_product);
  }
}

TEST(NoisePath, AddressableAndReproducible) {
  const NoisePath p(42, 0.01, 100, 3), q(42, 0.01, 100, 3), r(43, 0.01, 100, 3);
  EXPECT_EQ(p.Normals(17, 5), q.Normals(17, 5));
  EXPECT_NE(p.Normals(17, 5), r.Normals(17, 5));
  EXPECT_EQ(NoiseChecksum(p, 8), NoiseChecksum(q, 8));
  EXPECT_NE(NoiseChecksum(p, 8), NoiseChecksum(r, 8));
  EXPECT_DOUBLE_EQ(p.Increment(3, 2)(0), 0.1 * p.Normals(3, 2)(0));
}

TEST(NoisePath, NormalsHaveUnitMoments) {
  const NoisePath p(9, 1.0, 20000);
  double s1 = 0.0, s2 = 0.0;
  const int n = 20000;
  for (int k = 0; k < n; ++k) {
    const Eigen::Vector2d z = p.Normals(k, 0);
    s1 += z(0) + z(1);
    s2 += z.squaredNorm();
  }
  EXPECT_NEAR(s1 / (2 * n), 0.0, 4.0 / std::sqrt(2.0 * n));
  EXPECT_NEAR(s2 / (2 * n), 1.0, 4.0 * std::sqrt(2.0 / (2.0 * n)));
}

TEST(HolderSeries, ZeroDriftSumsToZero) {
  const OperatorSpec spec = Wave(0.6);
  const Spectrum blocks = BuildSpectrum(spec, 64);
  const SeriesReport r = HolderSeries(blocks, spec, std::vector<double>(64, 0.0),
                                      HolderForm::kDampedReduced);
  EXPECT_EQ(r.partial.back(), 0.0);
  EXPECT_TRUE(r.convergent);
}

TEST(HolderSeries, PSeriesVerdicts) {
  // mu_n = (n pi)^2 so the reduced terms are (n pi)^{-2 alpha}.
  const OperatorSpec conv = Wave(0.6), div = Wave(0.5);
  const Spectrum bc = BuildSpectrum(conv, 2048), bd = BuildSpectrum(div, 2048);
  const std::vector<double> ones(2048, 1.0);
  const SeriesReport c = HolderSeries(bc, conv, ones, HolderForm::kDampedReduced);
  const SeriesReport d = HolderSeries(bd, div, ones, HolderForm::kDampedReduced);
  EXPECT_TRUE(c.convergent);
  EXPECT_NEAR(c.ratio, std::pow(2.0, -0.2), 0.01);
  EXPECT_FALSE(d.convergent);
  EXPECT_NEAR(d.ratio, 1.0, 0.01);
}

TEST(DyadicVerdict, Ratios) {
  double ratio = 0.0;
  EXPECT_TRUE(DyadicVerdict(1.0, 1.5, 1.75, &ratio));
  EXPECT_DOUBLE_EQ(ratio, 0.5);
  EXPECT_FALSE(DyadicVerdict(1.0, 2.0, 3.0, &ratio));
  EXPECT_DOUBLE_EQ(ratio, 1.0);
}

}  // namespace
}  // namespace spdekit
