#include <cmath>

#include <gtest/gtest.h>

#include "spdekit/common.h"
#include "spdekit/controllability.h"
#include "spdekit/drift.h"
#include "spdekit/kolmogorov.h"
#include "spdekit/simulator.h"

namespace spdekit {
namespace {

OperatorSpec Wave(double alpha) {
  OperatorSpec s;
  s.family = Family::kDampedWave;
  s.alpha = alpha;
  return s;
}

DriftSpec Tanh(double r) {
  DriftSpec d;
  d.kind = DriftKind::kTanh;
  d.r = r;
  d.g.modes = {1.0};
  d.h.modes = {1.0};
  return d;
}

TEST(Simulate, NoiselessLinearIsSemigroup) {
  const Spectrum blocks = BuildSpectrum(Wave(0.6), 4);
  const Drift drift(DriftSpec{}, Wave(0.6), blocks);
  const SimGrid grid{1.0, 20};
  const MildIntegrator integ(blocks, 0.0, grid.dt());
  const Eigen::VectorXd x0 = Eigen::VectorXd::LinSpaced(8, 1.0, -1.0);
  const Trajectory tr = SimulateMild(drift, integ, grid, x0, nullptr);
  ASSERT_EQ(tr.x.size(), 21u);
  for (int k = 0; k <= 20; k += 5) {
    Eigen::VectorXd expect(8);
    for (int j = 0; j < 4; ++j) {
      expect.segment(2 * j, 2) = BlockExp(blocks[j], tr.t[k]) * x0.segment(2 * j, 2);
    }
    EXPECT_LE((tr.x[k] - expect).norm(), 1e-13) << k;
  }
}

TEST(Simulate, DriftFreeMarginalMatchesGramian) {
  OperatorSpec op;
  op.gamma = 0.2;
  const Spectrum blocks = BuildSpectrum(op, 2);
  const Drift drift(DriftSpec{}, op, blocks);
  const SimGrid grid{0.5, 4};
  const MildIntegrator integ(blocks, op.gamma, grid.dt());
  const auto g = Gramian(blocks, op.gamma, 0.5);
  const int samples = 20000;
  Eigen::Vector2d sum = Eigen::Vector2d::Zero(), sum2 = Eigen::Vector2d::Zero();
  Eigen::Vector2d sum4 = Eigen::Vector2d::Zero();
  for (int s = 0; s < samples; ++s) {
    const NoisePath path(21, grid.dt(), grid.steps, s);
    const Eigen::VectorXd x =
        SimulateMild(drift, integ, grid, Eigen::VectorXd::Zero(2), &path).x.back();
    for (int k = 0; k < 2; ++k) {
      sum(k) += x(k);
      sum2(k) += x(k) * x(k);
      sum4(k) += std::pow(x(k), 4);
    }
  }
  for (int k = 0; k < 2; ++k) {
    const double var = sum2(k) / samples;
    const double se = std::sqrt((sum4(k) / samples - var * var) / samples);
    EXPECT_LE(std::abs(var - g[k].Q(0, 0)), 3.0 * se) << k;
  }
}

TEST(Simulate, EulerAndPicardAgreeToFirstOrder) {
  OperatorSpec op;
  const Spectrum blocks = BuildSpectrum(op, 4);
  const Drift drift(Tanh(0.3), op, blocks);
  Eigen::VectorXd x0 = Eigen::VectorXd::Zero(4);
  x0(0) = 1.0;
  std::vector<double> dt, gap;
  for (int steps : {32, 64, 128, 256}) {
    const MildIntegrator integ(blocks, 0.0, 1.0 / steps);
    const SimGrid euler{1.0, steps};
    SimGrid picard{1.0, steps, SimScheme::kPicard};
    picard.picard_tolerance = 1e-13;
    const Trajectory a = SimulateMild(drift, integ, euler, x0, nullptr);
    const Trajectory b = SimulateMild(drift, integ, picard, x0, nullptr);
    double sup = 0.0;
    for (size_t k = 0; k < a.x.size(); ++k) sup = std::max(sup, (a.x[k] - b.x[k]).norm());
    dt.push_back(1.0 / steps);
    gap.push_back(sup);
  }
  EXPECT_NEAR(FitLogLog(dt, gap).slope, 1.0, 0.2);
}

TEST(Simulate, PicardReportsNonConvergence) {
  OperatorSpec op;
  const Spectrum blocks = BuildSpectrum(op, 2);
  const Drift drift(Tanh(0.3), op, blocks);
  const MildIntegrator integ(blocks, 0.0, 0.1);
  SimGrid grid{1.0, 10, SimScheme::kPicard};
  grid.picard_iterations = 1;
  grid.picard_tolerance = 1e-30;
  try {
    SimulateMild(drift, integ, grid, Eigen::VectorXd::Ones(2), nullptr);
    FAIL() << "expected PicardNoConvergence";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kPicardNoConvergence);
  }
}

TEST(Trajectory, SquaredDistanceIsTrapezoid) {
  Trajectory a, b;
  const int K = 1000;
  for (int k = 0; k <= K; ++k) {
    a.t.push_back(static_cast<double>(k) / K);
    b.t.push_back(a.t.back());
    a.x.push_back(Eigen::VectorXd::Constant(1, a.t.back()));
    b.x.push_back(Eigen::VectorXd::Zero(1));
  }
  // Trapezoid error for t^2 on [0, 1] is h^2 / 6.
  EXPECT_NEAR(Trajectory::SquaredDistance(a, b), 1.0 / 3.0 + 1e-6 / 6.0, 1e-14);
}

TEST(Uniqueness, ZeroDriftGivesZeroGap) {
  OperatorSpec op;
  UniquenessOptions opt;
  opt.ladder = {8, 16};
  opt.samples = 4;
  Eigen::VectorXd x0 = Eigen::VectorXd::Zero(8);
  x0(0) = 1.0;
  const DecayReport r = UniquenessExperiment(op, DriftSpec{}, 8, x0, opt);
  ASSERT_EQ(r.levels.size(), 2u);
  for (const LadderLevel& l : r.levels) {
    EXPECT_LT(l.mean, 1e-28);
    EXPECT_TRUE(l.noise_shared);
  }
}

TEST(Counterexample, CandidateResiduals) {
  EXPECT_EQ(CounterexampleResidual(Candidate{{0.0}, {8}, {2}}).residual, 0.0);
  EXPECT_LT(CounterexampleResidual(Candidate{{1.0}, {8}, {2}}).residual, 1e-10);
  EXPECT_GT(CounterexampleResidual(Candidate{{1.0}, {7}, {2}}).residual, 1.0);
  try {
    CounterexampleResidual(Candidate{{1.0, 1.0}, {8, 8}, {1, 2}});
    FAIL() << "expected UnsupportedCandidate";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kUnsupportedCandidate);
  }
}

TEST(Counterexample, SeparationConstant) {
  EXPECT_NEAR(CounterexampleSeparation(), M_PI / 34.0, 1e-15);
  const Spectrum blocks = BuildSpectrum(CounterexampleOperator(), 4);
  const Eigen::VectorXd x = CounterexampleState(blocks, 1.0, 8, 1.0);
  // At tau = 1: displacement sqrt(mu) ||sin 2 xi|| with mu = 4, velocity
  // 8 ||sin 2 xi||.
  EXPECT_NEAR(x.norm(), std::sqrt(68.0) * std::sqrt(M_PI / 2.0), 1e-12);
}

TEST(Galerkin, FullTruncationHasNoGap) {
  OperatorSpec op;
  DriftSpec d = Tanh(0.5);
  GalerkinOptions opt;
  opt.steps = 16;
  opt.samples = 4;
  Eigen::VectorXd x0 = Eigen::VectorXd::Zero(6);
  x0(0) = 1.0;
  const GalerkinReport r = GalerkinConvergence(op, d, {2, 6}, 6, x0, opt);
  ASSERT_EQ(r.levels.size(), 2u);
  EXPECT_GT(r.levels[0].gap, 0.0);
  EXPECT_LT(r.levels[1].gap, 1e-28);
  EXPECT_LT(r.levels[1].hat_gap, 1e-28);
}

TEST(ItoTanaka, ZeroDriftCollapsesToMildFormula) {
  OperatorSpec op;
  const Spectrum blocks = BuildSpectrum(op, 1);
  const Drift drift(DriftSpec{}, op, blocks);
  const VectorFunction zero = [](const Eigen::VectorXd& x) {
    return Eigen::VectorXd::Zero(x.size()).eval();
  };
  KolmogorovOptions ko;
  ko.time_steps = 16;
  ko.points = 12;
  ko.gh_order = 12;
  KolmogorovReport rep;
  const KolmogorovField U = SolveBackward(blocks, 0.0, zero, zero, 1.0, ko, &rep);
  ItoTanakaOptions opt;
  opt.ladder = {8, 16};
  opt.samples = 8;
  const ItoTanakaReport r =
      ItoTanakaResidual(drift, blocks, 0.0, U, Eigen::VectorXd::Ones(1), opt);
  for (const ItoTanakaLevel& l : r.levels) EXPECT_LT(l.max, 1e-10);
}

TEST(ItoTanaka, GridMustContainLadder) {
  OperatorSpec op;
  const Spectrum blocks = BuildSpectrum(op, 1);
  const Drift drift(DriftSpec{}, op, blocks);
  const VectorFunction zero = [](const Eigen::VectorXd& x) {
    return Eigen::VectorXd::Zero(x.size()).eval();
  };
  KolmogorovOptions ko;
  ko.time_steps = 8;
  ko.points = 8;
  ko.gh_order = 8;
  KolmogorovReport rep;
  const KolmogorovField U = SolveBackward(blocks, 0.0, zero, zero, 1.0, ko, &rep);
  ItoTanakaOptions opt;
  opt.ladder = {16};
  opt.samples = 2;
  try {
    ItoTanakaResidual(drift, blocks, 0.0, U, Eigen::VectorXd::Ones(1), opt);
    FAIL() << "expected MissingKolmogorovSolution";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kMissingKolmogorovSolution);
  }
}

}  // namespace
}  // namespace spdekit
