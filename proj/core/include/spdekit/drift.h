#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "spdekit/spectral.h"

namespace spdekit {

enum class DriftKind {
  kZero,
  // B(f) = g * int h phi(f), phi(s) = sgn(s) min(|s|, r)^{1/theta}.
  kClamp,
  // B(f) = g * r tanh(<h, f> / r). Smooth and Lipschitz.
  kTanh,
  // c(xi, y) of the one-dimensional damped wave counterexample.
  kCounterexample,
};

const char* DriftKindName(DriftKind kind);
DriftKind ParseDriftKind(const std::string& name);

// constant + sum_k modes[k] e_k, with e_k the L2-normalized base modes.
struct SpatialFunction {
  double constant = 0.0;
  std::vector<double> modes;
};

// For damped families the clamp and tanh kinds act on the displacement and
// enter the velocity equation only, B = (0, C).
struct DriftSpec {
  DriftKind kind = DriftKind::kZero;
  double theta = 0.75;
  double r = 1.0;
  SpatialFunction g;
  SpatialFunction h;

  void Validate() const;
};

// Smooth bump: 1 on (-2, 2), 0 outside (-3, 3).
double CounterexampleCutoff(double y);
double CounterexampleNonlinearity(double xi, double y);

// Hoelder constant of s -> sgn(s) min(|s|, r)^{1/theta} of order theta.
double ClampHolderConstant(double theta, double r);
// Hoelder constant of s -> r tanh(s / r) of order theta.
double TanhHolderConstant(double theta, double r);

class Drift {
 public:
  Drift(const DriftSpec& spec, const OperatorSpec& op, const Spectrum& blocks);

  const DriftSpec& spec() const { return spec_; }
  int state_size() const { return n_ * dim_; }
  int block_count() const { return n_; }
  int dim() const { return dim_; }
  bool is_zero() const { return spec_.kind == DriftKind::kZero; }

  // Physical state in, physical drift out (P_n B(x)).
  Eigen::VectorXd Apply(const Eigen::VectorXd& x) const;
  SpectralField Apply(const SpectralField& x) const;

  // The scalar functional J with B = g J (clamp and tanh kinds).
  double Functional(const Eigen::VectorXd& x) const;

  // Node values of the function the drift acts on: f for heat, the
  // displacement for damped families.
  Eigen::VectorXd FieldValues(const Eigen::VectorXd& x) const;
  // Node values of P_n B(x) (for damped families, its velocity component).
  Eigen::VectorXd OutputValues(const Eigen::VectorXd& x) const;

  // Projection of g on the base modes, one entry per block.
  const Eigen::VectorXd& g_modes() const { return g_modes_; }

  // Pointwise bound sup_xi |P_n B(x)(xi)|: sup|P_n g| sup|h| r^{1/theta} vol
  // for the clamp kind. Infinity when no bound is known.
  double PointwiseBound() const;
  // Bound on ||B(x)||_H.
  double SupBound() const;
  // Analytic bound on the theta-Hoelder seminorm as a map H -> H. Infinity
  // when no bound is known.
  double HolderBound() const;
  // Supremum of |J| (clamp and tanh kinds).
  double FunctionalBound() const;

  const std::vector<double>& nodes() const { return nodes_; }  // m per node
  const std::vector<double>& weights() const { return weights_; }
  int node_count() const { return static_cast<int>(weights_.size()); }

 private:
  DriftSpec spec_;
  OperatorSpec op_;
  int n_ = 0;
  int dim_ = 1;
  std::vector<double> nodes_;
  std::vector<double> weights_;
  Eigen::MatrixXd basis_;     // node x mode values of e_k
  Eigen::VectorXd to_field_;  // per-mode factor from state to field values
  Eigen::VectorXd g_modes_;
  Eigen::VectorXd h_modes_;
  Eigen::VectorXd h_nodes_;
  double volume_ = 1.0;
  double mu_min_ = 1.0;
};

struct HolderEstimate {
  double seminorm = 0.0;  // max ratio found
  double bound = 0.0;     // analytic bound, infinity if unknown
  int pairs = 0;
};

// max ||B(x) - B(y)||_H / ||x - y||_H^theta over random pairs. A lower
// bound on the true seminorm.
HolderEstimate EstimateHolderSeminorm(const Drift& drift, int pairs,
                                      uint64_t seed);

// Empirical ||<B, e_n>||_{C^theta} per block: |g_n| (sup|J| + [J]_theta) for
// the functional kinds, direct sampling otherwise.
std::vector<double> PerModeHolderNorms(const Drift& drift, int pairs,
                                       uint64_t seed);

}  // namespace spdekit
