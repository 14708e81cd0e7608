#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "spdekit/drift.h"
#include "spdekit/kolmogorov.h"
#include "spdekit/noise.h"
#include "spdekit/spectral.h"

namespace spdekit {

enum class SimScheme {
  // X_{k+1} = e^{dt A} X_k + Theta(dt) B(X_k) + xi_k.
  kExponentialEuler,
  // Fixed point of the exponential trapezoid rule over the whole grid,
  // iterated from an initial trajectory.
  kPicard,
};

struct SimGrid {
  double T = 1.0;
  int steps = 64;
  SimScheme scheme = SimScheme::kExponentialEuler;
  int picard_iterations = 200;
  double picard_tolerance = 1e-12;

  double dt() const { return T / steps; }
  void Validate() const;
};

struct Trajectory {
  std::vector<double> t;
  std::vector<Eigen::VectorXd> x;  // physical state per grid time

  // Trapezoid rule for int_0^T ||x(t) - y(t)||^2 dt on a shared grid.
  static double SquaredDistance(const Trajectory& a, const Trajectory& b);
};

struct SimStats {
  int picard_iterations = 0;
  double picard_update = 0.0;  // last L2 grid-norm update
  uint64_t noise_digest = 0;   // FNV-1a of every innovation consumed
};

// Per-block propagators of one step: e^{hA}, Theta = int_0^h e^{sA} ds,
// Theta2 = h phi_2(hA) with phi_2(z) = (e^z - 1 - z) / z^2, and the exact
// Gaussian innovation of the stochastic convolution.
class MildIntegrator {
 public:
  MildIntegrator(const Spectrum& blocks, double gamma, double dt);

  const Spectrum& blocks() const { return stepper_.blocks; }
  int state_size() const { return stepper_.state_size(); }
  double dt() const { return stepper_.dt; }

  Eigen::VectorXd Propagate(const Eigen::VectorXd& x) const;
  Eigen::VectorXd Theta(const Eigen::VectorXd& b) const;
  Eigen::VectorXd Theta1(const Eigen::VectorXd& b) const;  // Theta - Theta2
  Eigen::VectorXd Theta2(const Eigen::VectorXd& b) const;
  Eigen::VectorXd Innovation(const NoisePath& path, int step) const {
    return stepper_.Innovation(path, step);
  }

 private:
  Eigen::VectorXd Apply(const std::vector<Eigen::Matrix2d>& m,
                        const Eigen::VectorXd& x) const;

  ConvolutionStepper stepper_;
  std::vector<Eigen::Matrix2d> theta_, theta1_, theta2_;
};

// Truncated mild solution on the grid. `path` may be null for the
// noiseless equation. For the Picard scheme `guess` is the starting
// trajectory (default: constant x0). Throws PicardNoConvergence.
Trajectory SimulateMild(const Drift& drift, const MildIntegrator& integrator,
                        const SimGrid& grid, const Eigen::VectorXd& x0,
                        const NoisePath* path,
                        const Trajectory* guess = nullptr,
                        SimStats* stats = nullptr);

// ---------------------------------------------------------------------------
// Experiments.

struct LadderLevel {
  int steps = 0;
  double dt = 0.0;
  double mean = 0.0;    // mean over samples of the squared L2(0, T) gap
  double std_error = 0.0;
  bool noise_shared = true;  // paired runs consumed identical innovations
};

struct DecayReport {
  std::vector<LadderLevel> levels;
  double order = 0.0;  // slope of log mean against log dt
  bool monotone = false;
  bool admissible = false;  // admissibility verdict of the configuration
  std::string note;         // "inadmissible - exploratory" when not covered
};

struct UniquenessOptions {
  double T = 1.0;
  std::vector<int> ladder = {64, 128, 256, 512};
  int samples = 256;
  uint64_t seed = 1;
  int threads = 1;
  bool noise = true;
  int picard_iterations = 200;
  double picard_tolerance = 1e-12;
};

// Exponential Euler against Picard on the same noise; D(dt) is the mean of
// int_0^T ||X_1 - X_2||^2.
DecayReport UniquenessExperiment(const OperatorSpec& spec,
                                 const DriftSpec& drift, int n,
                                 const Eigen::VectorXd& x0,
                                 const UniquenessOptions& options);

// The noiseless counterexample: Picard started from the two reference
// solutions y = 0 and y = tau^8 sin(2 xi), on the standard configuration
// (damped wave, alpha = 7/12, rho = 1, side pi, n = 4 blocks).
OperatorSpec CounterexampleOperator();
DecayReport CounterexampleUniqueness(const std::vector<int>& ladder,
                                     int picard_iterations = 1000,
                                     double picard_tolerance = 1e-12);
// Physical state of tau^p sin(2 xi) scaled by c, on n blocks.
Eigen::VectorXd CounterexampleState(const Spectrum& blocks, double c, int p,
                                    double tau);
// int_0^1 tau^16 dt ||sin 2 xi||^2 = pi / 34.
double CounterexampleSeparation();

struct GalerkinLevel {
  int n = 0;
  double gap = 0.0;  // X_n = P_n X_N
  double gap_stderr = 0.0;
  double hat_gap = 0.0;  // X^_n with drift on its own path
  double hat_gap_stderr = 0.0;
};

struct GalerkinReport {
  int reference = 0;
  std::vector<GalerkinLevel> levels;
  bool monotone = false;      // both gaps nonincreasing within 2 std_error
  bool hat_within_2x = false;
};

struct GalerkinOptions {
  double T = 1.0;
  int steps = 128;
  int samples = 64;
  uint64_t seed = 1;
  int threads = 1;
};

GalerkinReport GalerkinConvergence(const OperatorSpec& spec,
                                   const DriftSpec& drift,
                                   const std::vector<int>& ladder,
                                   int reference,
                                   const Eigen::VectorXd& x0_modes,
                                   const GalerkinOptions& options);

// ---------------------------------------------------------------------------
// Closed-form counterexample candidates and their residual.

// y(tau, xi) = sum_i coef_i tau^{power_i} sin(mode_i xi).
struct Candidate {
  std::vector<double> coef;
  std::vector<int> power;
  std::vector<int> mode;
};

struct CandidateResidual {
  double residual = 0.0;  // grid L2 over [0, 1] x [0, pi]
  std::vector<double> t;
  std::vector<double> per_time;  // L2 in xi at each t
};

// Residual of y_tt - y_xixi + Lambda^{7/12} y_tau - c(xi, y). Throws
// UnsupportedCandidate unless all terms share one sine mode.
CandidateResidual CounterexampleResidual(const Candidate& y, int tau_points = 101,
                                         int xi_points = 201);

// ---------------------------------------------------------------------------
// Ito-Tanaka identity along simulated paths.

struct ItoTanakaLevel {
  int steps = 0;
  double dt = 0.0;
  double mean = 0.0;  // mean over samples of max_k ||LHS - RHS||
  double max = 0.0;
  double std_error = 0.0;
};

struct ItoTanakaReport {
  std::vector<ItoTanakaLevel> levels;
  double order = 0.0;
  std::vector<double> t;         // grid of the finest level
  std::vector<double> residual;  // mean residual per time, finest level
};

struct ItoTanakaOptions {
  double T = 1.0;
  std::vector<int> ladder = {32, 64, 128, 256};
  int samples = 64;
  uint64_t seed = 1;
  int threads = 1;
};

// The solution U of the backward equation with N = B and M = -B must live on
// a time grid that contains every ladder grid (MissingKolmogorovSolution
// otherwise). Paths use X_{k+1} = e^{dt A}(X_k + B(X_k) dt + G dW_k).
ItoTanakaReport ItoTanakaResidual(const Drift& drift, const Spectrum& blocks,
                                  double gamma, const KolmogorovField& U,
                                  const Eigen::VectorXd& x0,
                                  const ItoTanakaOptions& options);

}  // namespace spdekit
