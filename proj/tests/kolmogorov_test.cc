#include <cmath>

#include <gtest/gtest.h>

#include "spdekit/common.h"
#include "spdekit/controllability.h"
#include "spdekit/kolmogorov.h"

namespace spdekit {
namespace {

OperatorSpec Wave(double alpha) {
  OperatorSpec s;
  s.family = Family::kDampedWave;
  s.alpha = alpha;
  return s;
}

// Closed-form K_t for one heat mode with gamma = 0.
double HeatKernelConstant(double mu, double theta, double t) {
  const double e = std::exp(-mu * t);
  const double g = e / std::sqrt(-std::expm1(-2.0 * mu * t) / (2.0 * mu));
  return 1.0 + std::pow(e, theta) * std::pow(g, 1.0 - theta) +
         std::pow(2.0, (1.0 - theta) / 2.0) * std::pow(e, theta) *
             std::pow(g, 2.0 - theta);
}

class OuTest : public ::testing::Test {
 protected:
  Spectrum blocks = BuildSpectrum(Wave(0.6), 1);
  OUKernel kernel = OUKernel::Build(blocks, 0.0, 0.3, 16, 4);
  Eigen::VectorXd x = (Eigen::VectorXd(2) << 0.4, -1.1).finished();
};

TEST_F(OuTest, MomentsAreExact) {
  const VectorFunction one = [](const Eigen::VectorXd&) {
    return Eigen::VectorXd::Constant(1, 2.5);
  };
  const VectorFunction id = [](const Eigen::VectorXd& y) { return y; };
  const VectorFunction sq = [](const Eigen::VectorXd& y) {
    return Eigen::VectorXd::Constant(1, y.squaredNorm());
  };
  EXPECT_NEAR(OuApply(kernel, one, x)(0), 2.5, 1e-10);
  const Eigen::VectorXd mean = BlockExp(blocks[0], 0.3) * x;
  EXPECT_LE((OuApply(kernel, id, x) - mean).norm(), 1e-10);
  const double tr = Gramian(blocks, 0.0, 0.3)[0].Q.trace();
  EXPECT_NEAR(OuApply(kernel, sq, x)(0), mean.squaredNorm() + tr, 1e-10);
}

TEST_F(OuTest, GradientMatchesFiniteDifferences) {
  const VectorFunction phi = [](const Eigen::VectorXd& y) {
    return Eigen::VectorXd::Constant(1, std::sin(y(0)) * std::cos(0.5 * y(1)));
  };
  const OuDerivatives d = OuGradient(kernel, phi, x);
  const double h = 1e-5;
  for (int i = 0; i < 2; ++i) {
    Eigen::VectorXd e = Eigen::VectorXd::Zero(2);
    e(i) = h;
    const double fd = (OuApply(kernel, phi, x + e)(0) - OuApply(kernel, phi, x - e)(0)) /
                      (2.0 * h);
    EXPECT_NEAR(d.gradient(0, i), fd, 1e-6) << i;
  }
  EXPECT_NEAR(d.value(0), OuApply(kernel, phi, x)(0), 1e-14);
}

TEST_F(OuTest, GradientWithinGammaBound) {
  const VectorFunction phi = [](const Eigen::VectorXd& y) {
    return Eigen::VectorXd::Constant(1, std::tanh(3.0 * y(0) - y(1)));
  };
  const DerivativeBounds b = BoundedFunctionBounds(kernel, 1.0);
  EXPECT_NEAR(b.gradient, GammaAt(blocks, 0.0, 0.3), 1e-10 * b.gradient);
  for (double s : {-2.0, 0.0, 1.0}) {
    const OuDerivatives d = OuGradient(kernel, phi, s * x);
    EXPECT_LE(d.gradient_norm, b.gradient);
    EXPECT_LE(d.hessian_norm, b.hessian);
  }
}

TEST(OuKernel, RejectsLowQuadratureOrder) {
  const Spectrum blocks = BuildSpectrum(OperatorSpec{}, 1);
  try {
    OUKernel::Build(blocks, 0.0, 0.5, 2, 4);
    FAIL() << "expected QuadratureDegreeTooLow";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kQuadratureDegreeTooLow);
  }
}

TEST(Constants, KernelConstantClosedForm) {
  const Spectrum blocks = BuildSpectrum(OperatorSpec{}, 1);
  const double mu = blocks[0].base.mu;
  for (double t : {1e-4, 0.01, 0.3, 1.0}) {
    const double k = HeatKernelConstant(mu, 0.75, t);
    EXPECT_NEAR(KernelConstant(blocks, 0.0, 0.75, t), k, 1e-12 * k);
  }
}

TEST(Constants, IntegralMatchesQuadrature) {
  const Spectrum blocks = BuildSpectrum(OperatorSpec{}, 1);
  const double mu = blocks[0].base.mu, theta = 0.75, T = 0.5;
  // t = u^8 turns the t^{-5/8} endpoint into a smooth integrand.
  const int n = 20000;
  const double a = std::pow(T, 0.125), h = a / n;
  auto f = [&](double u) {
    if (u == 0.0) return 0.0;
    return HeatKernelConstant(mu, theta, std::pow(u, 8)) * 8.0 * std::pow(u, 7);
  };
  double s = f(0.0) + f(a);
  for (int i = 1; i < n; ++i) s += (i % 2 ? 4.0 : 2.0) * f(i * h);
  const double oracle = s * h / 3.0;
  const ConstantsLedger c = ComputeConstants(blocks, 0.0, T, theta, 0.0);
  EXPECT_NEAR(c.C_T, oracle, 1e-6 * oracle);
  EXPECT_DOUBLE_EQ(c.M_T, c.C_T);
  EXPECT_NEAR(c.endpoint_exponent, (2.0 - theta) / 2.0, 0.02);
}

TEST(Constants, MonotoneAsHorizonShrinks) {
  const Spectrum blocks = BuildSpectrum(OperatorSpec{}, 2);
  double prev = INFINITY;
  for (double T : {1.0, 0.5, 0.25, 0.1, 0.05, 0.01}) {
    const ConstantsLedger c = ComputeConstants(blocks, 0.0, T, 0.75, 0.7);
    EXPECT_LT(c.M_T, prev) << T;
    EXPECT_NEAR(c.M_T, c.C_T * std::exp(0.7 * c.C_T), 1e-12 * c.M_T);
    prev = c.M_T;
  }
}

TEST(Constants, DampedIntegralDiverges) {
  const Spectrum blocks = BuildSpectrum(Wave(7.0 / 12.0), 1);
  try {
    ComputeConstants(blocks, 0.0, 1.0, 0.75, 0.0);
    FAIL() << "expected DivergentGammaIntegral";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kDivergentGammaIntegral);
  }
}

class BackwardTest : public ::testing::Test {
 protected:
  Spectrum blocks = BuildSpectrum(OperatorSpec{}, 1);
  KolmogorovOptions Options() const {
    KolmogorovOptions o;
    o.time_steps = 16;
    o.points = 16;
    o.gh_order = 16;
    return o;
  }
};

TEST_F(BackwardTest, ZeroDataGivesZero) {
  const VectorFunction n = [](const Eigen::VectorXd& x) {
    return Eigen::VectorXd::Constant(1, std::tanh(x(0)));
  };
  const VectorFunction zero = [](const Eigen::VectorXd& x) {
    return Eigen::VectorXd::Zero(x.size()).eval();
  };
  KolmogorovReport rep;
  const KolmogorovField U = SolveBackward(blocks, 0.0, n, zero, 1.0, Options(), &rep);
  for (size_t ti = 0; ti < U.times().size(); ++ti) {
    EXPECT_EQ(U.nodal(static_cast<int>(ti)).norm(), 0.0);
  }
}

TEST_F(BackwardTest, ConstantDataIntegratesLinearlyInTime) {
  const VectorFunction zero = [](const Eigen::VectorXd& x) {
    return Eigen::VectorXd::Zero(x.size()).eval();
  };
  const VectorFunction c = [](const Eigen::VectorXd&) {
    return Eigen::VectorXd::Constant(1, 0.7);
  };
  KolmogorovReport rep;
  const KolmogorovField U = SolveBackward(blocks, 0.0, zero, c, 1.0, Options(), &rep);
  for (double t : {0.0, 0.25, 0.5, 1.0}) {
    for (double x : {-3.0, 0.1, 2.0}) {
      EXPECT_NEAR(U.Value(t, Eigen::VectorXd::Constant(1, x))(0), 0.7 * (1.0 - t),
                  1e-10);
    }
  }
  EXPECT_THROW(U.Value(0.3, Eigen::VectorXd::Zero(1)), Error);
}

TEST_F(BackwardTest, ContractionRatiosWithinBound) {
  const VectorFunction n = [](const Eigen::VectorXd& x) {
    return Eigen::VectorXd::Constant(1, 0.5 * std::tanh(x(0) / 0.5));
  };
  const VectorFunction m = [&](const Eigen::VectorXd& x) { return (-n(x)).eval(); };
  KolmogorovOptions o = Options();
  o.n_holder = 1.0;
  o.m_holder = 1.0;
  KolmogorovReport rep;
  SolveBackward(blocks, 0.0, n, m, 1.0, o, &rep);
  EXPECT_LT(rep.contraction_bound, 1.0);
  ASSERT_GE(rep.ratios.size(), 3u);
  for (double r : rep.ratios) EXPECT_LE(r, rep.contraction_bound);
  EXPECT_LT(rep.residual, 1e-7);
  EXPECT_LE(rep.sup_c2, 1.05 * rep.c2_bound);
}

TEST(Chebyshev, InterpolatesSmoothFunction) {
  const MappedChebyshev c(1, 32, 2.0);
  Eigen::MatrixXd f(32, 1);
  for (int a = 0; a < 32; ++a) f(a, 0) = std::exp(-c.Node(a).squaredNorm());
  for (double x : {-1.3, 0.0, 0.77}) {
    const Eigen::VectorXd p = Eigen::VectorXd::Constant(1, x);
    EXPECT_NEAR(c.Value(f, p)(0), std::exp(-x * x), 1e-6);
  }
}

}  // namespace
}  // namespace spdekit
