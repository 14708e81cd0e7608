#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "spdekit/spectral.h"

namespace spdekit {

// Piecewise-constant forcing: samples[j] (physical chart, complex allowed)
// holds on [j h, (j + 1) h) with h = T / samples.size().
struct ForcingPath {
  double T = 1.0;
  std::vector<Eigen::VectorXcd> samples;

  double dt() const { return T / static_cast<double>(samples.size()); }
};

// Standard normal coefficients, independent across samples and modes.
ForcingPath RandomForcing(const Spectrum& blocks, double T, int samples,
                          uint64_t seed);

struct ResolventScanOptions {
  int points = 512;  // logarithmic in eta over [eta_min, eta_max]
  double eta_min = 1e-2;
  double eta_max = 1e6;
  bool witnesses = true;  // append zeta + i |Im lambda+_k| per block
};

struct ResolventWitness {
  int k = 0;
  double mu = 0.0;
  cplx z;
  double norm = 0.0;  // ||A R(z_k, A) Phi+_k|| = |lambda+ / (z_k - lambda+)|
};

struct ResolventScan {
  double zeta = 0.0;
  std::vector<double> eta;      // ascending, witnesses merged in
  std::vector<double> ar_norm;  // max over blocks of ||A R(zeta + i eta)||
  std::vector<double> r_norm;   // max over blocks of ||R(zeta + i eta)||
  double sup_ar = 0.0;
  double sup_r = 0.0;
  std::vector<double> block_sup_ar;  // per block, over the whole line
  std::vector<ResolventWitness> witnesses;
  double witness_slope = 0.0;  // log-log slope of the witness norms in mu
};

// ||R|| and ||A R|| on the line Re z = zeta, block by block from the closed
// form 2x2 resolvent. Conjugate symmetry covers eta < 0. Throws OutOfRange
// unless zeta exceeds every Re lambda, SpectrumHit when a scan point lands
// on an eigenvalue.
ResolventScan ScanResolventLine(const Spectrum& blocks, double zeta,
                                const ResolventScanOptions& options = {});

struct MaxRegOptions {
  // Abscissa of the resolvent line; empty picks 0 when the spectrum is in
  // the open left half-plane and max Re lambda + 1 otherwise.
  std::optional<double> zeta;
  ResolventScanOptions scan;
};

struct MaxRegReport {
  double ratio = 0.0;  // ||A g||_{L2(0,T)} / ||f||_{L2(0,T)}
  double norm_f = 0.0;
  double norm_ag = 0.0;
  double zeta = 0.0;
  double c1 = 0.0;  // sup ||R|| on the line
  double c2 = 0.0;  // sup ||A R|| on the line
  double bound = 0.0;  // 2 pi (c1 + c2) e^{2 |zeta| T}
};

// g(t) = int_0^t e^{(t - s) A} f(s) ds, exact between samples. ||f|| is the
// exact norm of the step function, ||A g|| the trapezoid rule on the sample
// grid. Throws GridTooCoarse for fewer than two samples.
MaxRegReport MaxRegRatio(const Spectrum& blocks, const ForcingPath& f,
                         const MaxRegOptions& options = {});

// A g at the grid times t_0 = 0, ..., t_K = T.
std::vector<Eigen::VectorXcd> ConvolutionGenerator(const Spectrum& blocks,
                                                   const ForcingPath& f);

}  // namespace spdekit
