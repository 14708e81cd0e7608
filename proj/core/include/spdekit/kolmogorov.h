#pragma once

#include <functional>
#include <vector>

#include <Eigen/Dense>

#include "spdekit/spectral.h"

namespace spdekit {

using VectorFunction = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;

// Gaussian transition of the truncated OU process over time t:
// mean e^{tA} x, covariance Q_t, evaluated with a tensor Gauss-Hermite rule.
struct OUKernel {
  int dim = 0;
  double t = 0.0;
  int order = 0;
  Eigen::MatrixXd mean_map;    // e^{tA}
  Eigen::MatrixXd covariance;  // Q_t
  Eigen::MatrixXd sqrt_cov;    // symmetric Q_t^{1/2}
  Eigen::MatrixXd whitening;   // Q_t^{-1/2} e^{tA}
  double gamma = 0.0;          // ||Q_t^{-1/2} e^{tA}||
  double exp_norm = 0.0;       // ||e^{tA}||
  std::vector<Eigen::VectorXd> points;  // tensor nodes z
  std::vector<double> weights;

  // Throws QuadratureDegreeTooLow when `exact_degree` exceeds 2 order - 1.
  static OUKernel Build(const Spectrum& blocks, double gamma, double t,
                        int order = 16, int exact_degree = 2);
};

// Dense generator and input of the truncated system in physical coordinates.
Eigen::MatrixXd DenseGenerator(const Spectrum& blocks);
Eigen::MatrixXd DenseExp(const Spectrum& blocks, double t);
Eigen::MatrixXd DenseGramian(const Spectrum& blocks, double gamma, double t);

// R(t) phi (x) = sum_q w_q phi(e^{tA} x + Q_t^{1/2} z_q).
Eigen::VectorXd OuApply(const OUKernel& kernel, const VectorFunction& phi,
                        const Eigen::VectorXd& x);

struct OuDerivatives {
  Eigen::VectorXd value;
  Eigen::MatrixXd gradient;              // rows: components of phi
  std::vector<Eigen::MatrixXd> hessian;  // one d x d matrix per component
  double gradient_norm = 0.0;            // operator norm
  double hessian_norm = 0.0;             // bilinear norm upper estimate
};

// Derivatives of R(t) phi by Gaussian integration by parts,
// D R phi(x) h = E[phi(Y) <Q^{-1/2} e^{tA} h, Z>], which needs no
// derivative of phi and keeps the Gamma_t bounds exact on the rule.
OuDerivatives OuGradient(const OUKernel& kernel, const VectorFunction& phi,
                         const Eigen::VectorXd& x);

struct DerivativeBounds {
  double gradient = 0.0;
  double hessian = 0.0;
};
// Gamma_t ||phi||_inf and sqrt(2) Gamma_t^2 ||phi||_inf.
DerivativeBounds BoundedFunctionBounds(const OUKernel& kernel, double sup_norm);
// ||e^{tA}||^theta Gamma_t^{1-theta} ||phi||_theta and
// 2^{(1-theta)/2} ||e^{tA}||^theta Gamma_t^{2-theta} ||phi||_theta.
DerivativeBounds HolderFunctionBounds(const OUKernel& kernel, double theta,
                                      double holder_norm);

// ---------------------------------------------------------------------------
// Constants of the Schauder estimate.

struct ConstantsLedger {
  double T = 0.0;
  double theta = 0.0;
  double C_T = 0.0;  // int_0^T K_t dt
  double M_T = 0.0;  // C_T exp(C_T ||B||)
  std::vector<double> t;
  std::vector<double> K;  // profile on t
  double endpoint_exponent = 0.0;
};

// K_t = 1 + ||e^{tA}||^theta Gamma_t^{1-theta}
//         + 2^{(1-theta)/2} ||e^{tA}||^theta Gamma_t^{2-theta}.
double KernelConstant(const Spectrum& blocks, double gamma, double theta,
                      double t);

// Throws DivergentGammaIntegral when K is not integrable at 0.
ConstantsLedger ComputeConstants(const Spectrum& blocks, double gamma,
                                 double T, double theta, double drift_norm,
                                 int profile_points = 64);

// int_0^T e^{-w s} K_s ds.
double WeightedKernelIntegral(const Spectrum& blocks, double gamma,
                              double theta, double T, double weight);

// ---------------------------------------------------------------------------
// Backward Kolmogorov integral equation
//   U(t, x) = int_t^T R(r - t) (DU(r, .) N + M)(x) dr.

// Tensor Chebyshev interpolant on R^d through the map
// x = c u / sqrt(1 - u^2), u in (-1, 1), on first-kind Chebyshev points.
class MappedChebyshev {
 public:
  MappedChebyshev() = default;
  MappedChebyshev(int dim, int points, double scale);

  int dim() const { return dim_; }
  int points() const { return p_; }
  int size() const { return size_; }
  double scale() const { return c_; }

  // Node a in state coordinates.
  Eigen::VectorXd Node(int a) const;

  // Interpolation weights of every node at x, plus first and second
  // derivatives along each axis.
  struct Stencil {
    std::vector<Eigen::VectorXd> value;  // per axis, length p
    std::vector<Eigen::VectorXd> first;
    std::vector<Eigen::VectorXd> second;
  };
  Stencil At(const Eigen::VectorXd& x) const;

  // Value, gradient and Hessian of the interpolant with node values
  // `f` (size x k) at x.
  Eigen::VectorXd Value(const Eigen::MatrixXd& f, const Eigen::VectorXd& x) const;
  void Evaluate(const Eigen::MatrixXd& f, const Eigen::VectorXd& x,
                Eigen::VectorXd* value, Eigen::MatrixXd* gradient,
                std::vector<Eigen::MatrixXd>* hessian) const;

  // Row vector of basis weights at x (size entries).
  Eigen::RowVectorXd Weights(const Eigen::VectorXd& x) const;

  // Gradient (size x k per axis) and Hessian at the nodes themselves.
  std::vector<Eigen::MatrixXd> NodeGradient(const Eigen::MatrixXd& f) const;
  std::vector<Eigen::MatrixXd> NodeHessian(const Eigen::MatrixXd& f) const;

 private:
  Eigen::MatrixXd AxisApply(const Eigen::MatrixXd& f, const Eigen::MatrixXd& D,
                            int axis) const;

  int dim_ = 0;
  int p_ = 0;
  int size_ = 0;
  double c_ = 1.0;
  Eigen::VectorXd u_;       // nodes in (-1, 1)
  Eigen::VectorXd bary_;    // barycentric weights
  Eigen::MatrixXd d1_, d2_;  // derivative matrices in u
};

struct KolmogorovOptions {
  int time_steps = 64;
  int points = 24;        // interpolation points per dimension
  // Scale c of the coordinate map. Zero picks 4 sqrt(lambda_max(Q_T)); the
  // interpolant resolves features of width about c best.
  double scale = 0.0;
  int gh_order = 24;      // Gauss-Hermite nodes per dimension
  double tolerance = 1e-8;
  int max_iterations = 200;
  double gamma_max = 1e8;
  double theta = 0.75;
  double n_holder = 0.0;  // ||N||_{C^theta}
  double m_holder = 0.0;  // ||M||_{C^theta}
  int residual_points = 16;          // off-grid sample points
  double residual_tolerance = -1.0;  // <= 0 disables the check (grid nodes)
  int threads = 1;
};

struct KolmogorovReport {
  double weight = 0.0;            // gamma of the weighted norm
  double contraction_bound = 0.0;  // ||N|| int_0^T e^{-gamma s} K_s ds
  std::vector<double> distances;   // successive weighted C^2 distances
  std::vector<double> ratios;
  int iterations = 0;
  // Plug-back residual max |V(U) - U| at sampled grid nodes, and the same at
  // points between nodes, where it also carries the interpolation error.
  double residual = 0.0;
  double offgrid_residual = 0.0;
  double sup_c2 = 0.0;    // max over t of the nodal C^2 norm
  double c2_bound = 0.0;  // M_T ||M||_{C^theta}
  ConstantsLedger constants;
};

class KolmogorovField {
 public:
  double T() const { return times_.back(); }
  const std::vector<double>& times() const { return times_; }
  int dim() const { return interp_.dim(); }
  const MappedChebyshev& interpolant() const { return interp_; }
  const Eigen::MatrixXd& nodal(int ti) const { return values_[ti]; }

  // Index of a grid time, or -1 if t is not on the grid.
  int TimeIndex(double t) const;
  // U(t, x); t must be a grid time (MissingKolmogorovSolution otherwise).
  Eigen::VectorXd Value(double t, const Eigen::VectorXd& x) const;
  // DU(t, x) as a d x d matrix (row i: gradient of component i).
  Eigen::MatrixXd Jacobian(double t, const Eigen::VectorXd& x) const;
  // Nodal sup of |U| + |DU| + |D^2 U| at one time.
  double C2Norm(int ti) const;

 private:
  friend KolmogorovField SolveBackward(const Spectrum&, double,
                                       const VectorFunction&,
                                       const VectorFunction&, double,
                                       const KolmogorovOptions&,
                                       KolmogorovReport*);
  std::vector<double> times_;
  MappedChebyshev interp_;
  std::vector<Eigen::MatrixXd> values_;  // per time: size x d
};

// Throws ContractionFailure if no weight up to gamma_max gives a factor
// below one, PicardNoConvergence after max_iterations, ResidualTooLarge when
// the residual check is enabled and fails.
KolmogorovField SolveBackward(const Spectrum& blocks, double gamma,
                              const VectorFunction& N, const VectorFunction& M,
                              double T, const KolmogorovOptions& options,
                              KolmogorovReport* report);

}  // namespace spdekit
