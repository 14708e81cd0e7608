#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "spdekit/spectral.h"

namespace spdekit {

struct NoiseSpec {
  double gamma = 0.0;
  double eta = 0.5;
  int truncation = 2048;
  uint64_t seed = 0;

  void Validate() const;
};

// Standard Gaussian increments addressed by (seed, sample, mode, step). Two
// normals per mode and step; heat blocks use the first one only.
class NoisePath {
 public:
  NoisePath(uint64_t seed, double dt, int steps, int sample = 0)
      : seed_(seed), dt_(dt), steps_(steps), sample_(sample) {}

  uint64_t seed() const { return seed_; }
  double dt() const { return dt_; }
  int steps() const { return steps_; }
  int sample() const { return sample_; }

  Eigen::Vector2d Normals(int step, int mode) const;
  // Brownian increment over one step, scaled by sqrt(dt).
  Eigen::Vector2d Increment(int step, int mode) const {
    return std::sqrt(dt_) * Normals(step, mode);
  }

 private:
  uint64_t seed_;
  double dt_;
  int steps_;
  int sample_;
};

// FNV-1a digest of every normal a path hands out for the first `modes`
// modes, used to confirm that paired runs saw the same noise.
uint64_t NoiseChecksum(const NoisePath& path, int modes);

// ---------------------------------------------------------------------------
// Weighted trace condition.

struct TraceScan {
  double eta = 0.0;
  std::vector<double> partial;  // S_1, ..., S_N
  double ratio = 0.0;           // (S_N - S_N/2) / (S_N/2 - S_N/4)
  double tail_fraction = 0.0;   // (S_N - S_N/2) / S_N
  bool convergent = false;
};

struct TraceReport {
  int truncation = 0;
  double T = 0.0;
  std::vector<TraceScan> scans;  // one per eta
  int best = 0;                  // scan with the smallest ratio
  bool numeric_convergent = false;
  bool analytic_convergent = false;
  double analytic_index = 0.0;  // the quantity compared with 1
};

// int_0^T s^{-eta} ||e^{sA} G u_k||^2 ds for one block, in closed form.
double WeightedTraceTerm(const SpectralBlock& block, double gamma, double eta,
                         double T);

// Partial sums for one eta.
TraceScan WeightedTraceScan(const Spectrum& blocks, double gamma, double eta,
                            double T);

// Scans the given etas (default 0.1, ..., 0.9) and compares with the
// analytic criterion of the family.
TraceReport WeightedTraceTest(const OperatorSpec& spec, double T, int truncation,
                              std::vector<double> etas = {});

// Heat: (m - 2 gamma) / (2 beta) < 1. Damped: delta (2 gamma + alpha) > 1
// with Lambda eigenvalues growing like k^delta. Returns the index and writes
// the verdict.
double AnalyticTraceIndex(const OperatorSpec& spec, bool* convergent);

// Convergence verdict from three dyadic partial sums.
bool DyadicVerdict(double s_quarter, double s_half, double s_full,
                   double* ratio);

// ---------------------------------------------------------------------------
// Exact stochastic convolution sampling.

struct ConvolutionStepper {
  Spectrum blocks;
  double dt = 0.0;
  double gamma = 0.0;
  std::vector<Eigen::Matrix2d> transition;  // e^{dt A} per block
  std::vector<Eigen::Matrix2d> factor;      // L L^T = Q_dt per block

  ConvolutionStepper(const Spectrum& blocks, double gamma, double dt);
  int state_size() const;

  // x <- e^{dt A} x + L xi with xi drawn from the path at `step`.
  void Step(const NoisePath& path, int step, Eigen::VectorXd* x) const;
  // Noise part of one step alone.
  Eigen::VectorXd Innovation(const NoisePath& path, int step) const;
};

struct CovarianceEstimate {
  int k = 0;
  int dim = 1;
  Eigen::Matrix2d mean_product = Eigen::Matrix2d::Zero();
  Eigen::Matrix2d stderr_product = Eigen::Matrix2d::Zero();
  Eigen::Matrix2d exact = Eigen::Matrix2d::Zero();
  double max_zscore = 0.0;
};

// Monte Carlo estimate of Cov W_A(T) per block from `samples` exact paths of
// `steps` steps each. Samples are reduced in index order.
std::vector<CovarianceEstimate> SampleConvolutionCovariance(
    const Spectrum& blocks, double gamma, double T, int steps, int samples,
    uint64_t seed, int threads = 1);

// ---------------------------------------------------------------------------
// Hoelder series condition.

enum class HolderForm {
  kHeat,         // sum ||B_n||^2 / mu^beta
  kDampedFull,   // sum ||C_n||^2 ||e||^2 (|l+|^2/|Re l+| + chi^2 |l-|^2/|Re l-|)
  kDampedReduced,  // sum mu^{-alpha} ||C_n||^2
};

struct SeriesReport {
  std::vector<double> partial;
  double ratio = 0.0;
  double tail_fraction = 0.0;
  bool convergent = false;
};

// `norms` are the per-mode Hoelder norms, one per block.
SeriesReport HolderSeries(const Spectrum& blocks, const OperatorSpec& spec,
                          const std::vector<double>& norms, HolderForm form);

}  // namespace spdekit
