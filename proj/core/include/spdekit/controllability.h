#pragma once

#include <functional>
#include <vector>

#include <Eigen/Dense>

#include "spdekit/spectral.h"

namespace spdekit {

// Controllability Gramian of one block over [0, t] in physical coordinates.
// One-dimensional blocks use the (0, 0) entry only.
struct GramianBlock {
  int k = 0;
  int dim = 1;
  double t = 0.0;
  Eigen::Matrix2d Q = Eigen::Matrix2d::Zero();
  Eigen::Matrix2d Qinv_sqrt = Eigen::Matrix2d::Zero();
  double gamma_block = 0.0;
  double min_eigenvalue = 0.0;
  double condition = 1.0;
};

// Q = int_0^t e^{sA} g g^T e^{sA^T} ds for the block, without any checks.
Eigen::Matrix2d BlockGramian(const SpectralBlock& block, double gamma, double t);

// Throws SingularGramian(k) when the smallest eigenvalue is below 1e-300.
std::vector<GramianBlock> Gramian(const Spectrum& blocks, double gamma,
                                  double t);

struct GammaProfile {
  double gamma = 0.0;  // Gamma_{t,n}
  int argmax = 0;
  std::vector<double> per_block;
};

GammaProfile GammaNorm(const std::vector<GramianBlock>& gramian);

// Gamma_{t,n} straight from the spectrum.
double GammaAt(const Spectrum& blocks, double gamma, double t);

// Integral over (0, T] of a positive function with a possible power-law
// singularity at 0. The exponent p is fitted on [s0 / 10, s0] with
// s0 = T * 1e-6; the part below s0 is integrated after s = s0 v^{1/(1-p)},
// and p >= 1 is reported divergent.
struct SingularIntegral {
  double value = 0.0;
  bool divergent = false;
  double endpoint_exponent = 0.0;  // f(s) ~ s^{-p} near 0
  double endpoint_part = 0.0;
};

SingularIntegral IntegrateFromZero(const std::function<double(double)>& f,
                                   double T, int panels_per_decade = 6,
                                   int order = 32);

// int_0^T Gamma_{s,n}^{2 - theta} ds.
SingularIntegral GammaPowerIntegral(const Spectrum& blocks, double gamma,
                                    double theta, double T);

// || Q_{t,n}^{-1/2} e^{tA_n} h ||.
double MinimalEnergy(const std::vector<GramianBlock>& gramian,
                     const Spectrum& blocks, const SpectralField& h);

struct ControlProfile {
  int degree = 1;       // m in Phi_t(tau) = c tau^m (t - tau)
  double c_bar = 0.0;   // normalizes int_0^t Phi_t = 1
};

// Explicit steering control u = K1 psi + K2 psi', psi = -Phi_t e^{tau A} h.
struct ControlSignal {
  double t = 0.0;
  ControlProfile profile;
  std::vector<double> grid;
  std::vector<Eigen::VectorXd> values;  // one input coefficient per block
  double energy = 0.0;                  // L2(0, t; U) norm
  double energy_quadrature_error = 0.0;

  Eigen::VectorXd h;  // physical initial state
  std::vector<Eigen::Vector2d> k1, k2;

  Eigen::VectorXd Evaluate(const Spectrum& blocks, double tau) const;
};

// Smallest admissible m (strict inequality) for the profile exponent.
double ControlDegreeThreshold(double alpha, double gamma);
int DefaultControlDegree(double alpha, double gamma);

// Energy exponent of the explicit control as stated for each alpha range.
double PredictedEnergyExponent(double alpha, double gamma);

ControlSignal SynthesizeControl(const Spectrum& blocks,
                                const OperatorSpec& spec,
                                const SpectralField& h, double t,
                                int degree = 0, int samples = 257);

struct SteeringResult {
  double terminal_norm = 0.0;
  double error_estimate = 0.0;  // |Y_N - Y_{N/2}|
  int nodes = 0;
};

// Y(t) = e^{tA}h + int_0^t e^{(t-s)A} G u(s) ds by composite Gauss-Legendre.
// Throws GridTooCoarse when the error estimate exceeds `tolerance`.
SteeringResult VerifySteering(const Spectrum& blocks, const OperatorSpec& spec,
                              const ControlSignal& u, const SpectralField& h,
                              int nodes = 4096, double tolerance = -1.0);

// Same integral with the control replaced by an arbitrary function of time.
Eigen::VectorXd ControlledTerminalState(
    const Spectrum& blocks, double gamma, const Eigen::VectorXd& h, double t,
    const std::function<Eigen::VectorXd(double)>& u, int panels, int order);

}  // namespace spdekit
