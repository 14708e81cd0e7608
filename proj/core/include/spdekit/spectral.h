#pragma once

#include <array>
#include <ostream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "spdekit/numerics.h"

namespace spdekit {

enum class Family { kHeat, kDampedWave, kDampedBeam };
enum class Boundary { kDirichlet, kPeriodic };
enum class Chart { kPhysical, kEigen };

const char* FamilyName(Family family);
Family ParseFamily(const std::string& name);
const char* BoundaryName(Boundary bc);
Boundary ParseBoundary(const std::string& name);

// Heat: dX = -(-Delta)^beta X dt + B dt + (-Delta)^{-gamma/2} dW.
// Damped: y'' + Lambda y + rho Lambda^alpha y' = C + Lambda^{-gamma} W', with
// Lambda = -Delta (wave) or Delta^2 (beam).
struct OperatorSpec {
  Family family = Family::kHeat;
  int m = 1;
  double alpha = 0.5;
  double rho = 1.0;
  double beta = 1.0;
  double gamma = 0.0;
  Boundary bc = Boundary::kDirichlet;
  // Side of the cube domain. Zero selects 1 for Dirichlet and 2 pi for
  // periodic conditions.
  double length = 0.0;

  bool damped() const { return family != Family::kHeat; }
  double side() const;
  void Validate() const;
};

struct BaseMode {
  int index = 0;
  double mu = 0.0;         // eigenvalue of Lambda
  double laplace = 0.0;    // eigenvalue of -Delta for this lattice vector
  double base_norm = 1.0;  // ||e_k||, 1 for the heat family
  std::array<int, 3> lattice{{0, 0, 0}};
  int parity = 0;  // periodic only: 0 cosine, 1 sine
  int multiplicity = 1;
};

// The n smallest eigenvalues of -Delta on the cube, ascending, ties broken
// lexicographically on the lattice vector. base_norm is left at 1.
std::vector<BaseMode> EnumerateModes(const OperatorSpec& spec, int n);

// L2-normalized eigenfunction of the mode at the point xi (m coordinates).
double ModeFunction(const OperatorSpec& spec, const BaseMode& mode,
                    const double* xi);

// One invariant subspace of A. Physical coordinates are taken with respect to
// an orthonormal basis of the block: the scalar mode coefficient for heat,
// (y, v) with A = [[0, mu^{1/2}], [-mu^{1/2}, -rho mu^alpha]] for damped.
// Eigen coordinates are the coefficients on Phi+ and Phi-.
struct SpectralBlock {
  BaseMode base;
  Family family = Family::kHeat;
  int dim = 1;
  cplx lambda_plus;
  cplx lambda_minus;
  double chi = 1.0;
  cplx b_plus;
  cplx b_minus;
  Eigen::Matrix2cd to_eigen = Eigen::Matrix2cd::Identity();
  Eigen::Matrix2cd to_phys = Eigen::Matrix2cd::Identity();
  Eigen::Matrix2d generator = Eigen::Matrix2d::Zero();

  cplx eigenvalue(int i) const { return i == 0 ? lambda_plus : lambda_minus; }
};

using Spectrum = std::vector<SpectralBlock>;

Spectrum BuildSpectrum(const OperatorSpec& spec, int n);

// Noise input vector of the block in physical coordinates.
Eigen::Vector2d InputVector(const SpectralBlock& block, double gamma);

// f(A) restricted to the block, in physical coordinates.
template <typename F>
Eigen::Matrix2cd BlockFunction(const SpectralBlock& block, F f) {
  Eigen::Matrix2cd out = Eigen::Matrix2cd::Zero();
  if (block.dim == 1) {
    out(0, 0) = f(block.lambda_plus);
    return out;
  }
  Eigen::Matrix2cd d = Eigen::Matrix2cd::Zero();
  d(0, 0) = f(block.lambda_plus);
  d(1, 1) = f(block.lambda_minus);
  return block.to_phys * d * block.to_eigen;
}

// e^{tA} and the integral of e^{sA} over [0, t] on the block, real physical.
Eigen::Matrix2d BlockExp(const SpectralBlock& block, double t);
Eigen::Matrix2d BlockExpIntegral(const SpectralBlock& block, double t);

struct SpectralField {
  int n = 0;
  int dim = 1;
  Chart chart = Chart::kPhysical;
  Eigen::VectorXcd coeffs;

  static SpectralField Zeros(const Spectrum& blocks, Chart chart);
  static SpectralField FromReal(const Spectrum& blocks,
                                const Eigen::VectorXd& physical);

  Eigen::Vector2cd pair(int k) const;
  void set_pair(int k, const Eigen::Vector2cd& v);
};

void CheckCompatible(const Spectrum& blocks, const SpectralField& x);
SpectralField ToChart(const Spectrum& blocks, const SpectralField& x,
                      Chart chart);

// Physical coordinates of a field that should be real. Throws
// SpectrumMismatch if the imaginary part exceeds 1e-12 relative.
Eigen::VectorXd RealPhysical(const Spectrum& blocks, const SpectralField& x);

// H norm (the physical chart is orthonormal).
double FieldNorm(const Spectrum& blocks, const SpectralField& x);

SpectralField SemigroupApply(const Spectrum& blocks, double t,
                             const SpectralField& x);
SpectralField FractionalPowerApply(const Spectrum& blocks, double theta,
                                   const SpectralField& x);
SpectralField ResolventApply(const Spectrum& blocks, cplx lambda,
                             const SpectralField& x);
SpectralField GeneratorApply(const Spectrum& blocks, const SpectralField& x);

// Orthogonal projection on the first n blocks (the field keeps its length).
SpectralField Truncate(const SpectralField& x, int n);

struct AsymptoticReport {
  int fitted_blocks = 0;
  // |lambda+|, |lambda-|, chi, ||e|| against mu.
  std::array<double, 4> slopes{};
  std::array<double, 4> predicted{};
};

AsymptoticReport FitAsymptotics(const OperatorSpec& spec,
                                const Spectrum& blocks);

void WriteSpectrumRows(std::ostream& os, const Spectrum& blocks);

}  // namespace spdekit
