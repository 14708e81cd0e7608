#include "spdekit/controllability.h"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/Eigenvalues>

#include "spdekit/common.h"

namespace spdekit {

namespace {

// Taylor form of the Gramian, used while t ||A|| is small so that the
// ill-conditioned short-time block is not formed by cancellation.
Eigen::Matrix2d GramianSeries(const Eigen::Matrix2d& A, const Eigen::Vector2d& g,
                              double t) {
  std::vector<Eigen::Vector2d> w;
  w.push_back(g);
  const double g0 = g.norm();
  for (int j = 1; j < 60; ++j) {
    w.push_back(A * w.back() * (t / j));
    if (w.back().norm() < 1e-18 * g0) break;
  }
  Eigen::Matrix2d Q = Eigen::Matrix2d::Zero();
  for (size_t j = 0; j < w.size(); ++j) {
    for (size_t l = 0; l < w.size(); ++l) {
      Q += w[j] * w[l].transpose() / static_cast<double>(j + l + 1);
    }
  }
  return t * Q;
}

}  // namespace

Eigen::Matrix2d BlockGramian(const SpectralBlock& block, double gamma,
                             double t) {
  const Eigen::Vector2d g = InputVector(block, gamma);
  Eigen::Matrix2d Q = Eigen::Matrix2d::Zero();
  if (block.dim == 1) {
    const double l = block.lambda_plus.real();
    const double x = 2.0 * l * t;
    const double integral = std::abs(x) < 1e-10 ? t : std::expm1(x) / (2.0 * l);
    Q(0, 0) = g(0) * g(0) * integral;
    return Q;
  }
  if (t * block.generator.norm() <= 0.5) {
    return GramianSeries(block.generator, g, t);
  }
  const Eigen::Vector2cd c = block.to_eigen * g.cast<cplx>();
  Eigen::Matrix2cd M;
  for (int i = 0; i < 2; ++i) {
    for (int j = 0; j < 2; ++j) {
      const cplx z = block.eigenvalue(i) + std::conj(block.eigenvalue(j));
      M(i, j) = c(i) * std::conj(c(j)) * ExpIntegral(z, t);
    }
  }
  Q = (block.to_phys * M * block.to_phys.adjoint()).real();
  return 0.5 * (Q + Q.transpose());
}

std::vector<GramianBlock> Gramian(const Spectrum& blocks, double gamma,
                                  double t) {
  if (!(t > 0)) Throw(ErrorCode::kOutOfRange, "Gramian horizon must be > 0");
  std::vector<GramianBlock> out(blocks.size());
  for (size_t k = 0; k < blocks.size(); ++k) {
    const SpectralBlock& b = blocks[k];
    GramianBlock& gb = out[k];
    gb.k = static_cast<int>(k);
    gb.dim = b.dim;
    gb.t = t;
    gb.Q = BlockGramian(b, gamma, t);
    const Eigen::Matrix2d E = BlockExp(b, t);
    if (b.dim == 1) {
      const double q = gb.Q(0, 0);
      gb.min_eigenvalue = q;
      if (!(q >= 1e-300)) {
        Throw(ErrorCode::kSingularGramian,
              "block " + std::to_string(k + 1) + ": q = " + std::to_string(q));
      }
      gb.Qinv_sqrt(0, 0) = 1.0 / std::sqrt(q);
      gb.gamma_block = E(0, 0) * gb.Qinv_sqrt(0, 0);
      continue;
    }
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es(gb.Q);
    const Eigen::Vector2d ev = es.eigenvalues();
    gb.min_eigenvalue = ev(0);
    if (!(ev(0) >= 1e-300)) {
      Throw(ErrorCode::kSingularGramian,
            "block " + std::to_string(k + 1) +
                ": smallest Gramian eigenvalue " + std::to_string(ev(0)));
    }
    gb.condition = ev(1) / ev(0);
    const Eigen::Matrix2d V = es.eigenvectors();
    gb.Qinv_sqrt = V * ev.cwiseSqrt().cwiseInverse().asDiagonal() * V.transpose();
    Eigen::JacobiSVD<Eigen::Matrix2d> svd(gb.Qinv_sqrt * E);
    gb.gamma_block = svd.singularValues()(0);
  }
  return out;
}

GammaProfile GammaNorm(const std::vector<GramianBlock>& gramian) {
  GammaProfile p;
  p.per_block.reserve(gramian.size());
  for (size_t k = 0; k < gramian.size(); ++k) {
    p.per_block.push_back(gramian[k].gamma_block);
    if (gramian[k].gamma_block > p.gamma) {
      p.gamma = gramian[k].gamma_block;
      p.argmax = static_cast<int>(k);
    }
  }
  return p;
}

double GammaAt(const Spectrum& blocks, double gamma, double t) {
  return GammaNorm(Gramian(blocks, gamma, t)).gamma;
}

SingularIntegral IntegrateFromZero(const std::function<double(double)>& f,
                                   double T, int panels_per_decade, int order) {
  SingularIntegral out;
  const double s0 = T * 1e-6;
  const double f0 = f(s0);
  const double f1 = f(s0 / 10.0);
  const double fm = f(s0 / std::sqrt(10.0));
  // Slope over the last decade, averaged over its two halves.
  const double p = 0.5 * (std::log10(f1 / fm) + std::log10(fm / f0)) / 0.5;
  out.endpoint_exponent = p;
  if (f0 > 0 && p >= 1.0 - 1e-6) {
    out.divergent = true;
    out.value = std::numeric_limits<double>::infinity();
    return out;
  }
  // On (0, s0] substitute s = s0 v^q with q = 1 / (1 - p): a pure power law
  // becomes constant in v, and lower-order terms stay smooth.
  const double q = 1.0 / (1.0 - std::max(p, 0.0));
  const QuadratureRule head = CompositeGaussLegendreRule(0.0, 1.0, 1, order);
  KahanSum near;
  for (size_t i = 0; i < head.nodes.size(); ++i) {
    const double v = head.nodes[i];
    near.Add(head.weights[i] * f(s0 * std::pow(v, q)) * s0 * q * std::pow(v, q - 1.0));
  }
  out.endpoint_part = near.value();
  // Main part in u = log s.
  const double u0 = std::log(s0), u1 = std::log(T);
  const int panels =
      std::max(1, static_cast<int>(std::ceil((u1 - u0) / std::log(10.0) *
                                             panels_per_decade)));
  const QuadratureRule rule = CompositeGaussLegendreRule(u0, u1, panels, order);
  KahanSum sum;
  for (size_t i = 0; i < rule.nodes.size(); ++i) {
    const double s = std::exp(rule.nodes[i]);
    sum.Add(rule.weights[i] * f(s) * s);
  }
  out.value = sum.value() + out.endpoint_part;
  return out;
}

SingularIntegral GammaPowerIntegral(const Spectrum& blocks, double gamma,
                                    double theta, double T) {
  return IntegrateFromZero(
      [&](double s) { return std::pow(GammaAt(blocks, gamma, s), 2.0 - theta); },
      T);
}

double MinimalEnergy(const std::vector<GramianBlock>& gramian,
                     const Spectrum& blocks, const SpectralField& h) {
  CheckCompatible(blocks, h);
  if (gramian.size() != blocks.size()) {
    Throw(ErrorCode::kSpectrumMismatch, "Gramian and spectrum differ in size");
  }
  const Eigen::VectorXd x = RealPhysical(blocks, h);
  KahanSum sum;
  for (size_t k = 0; k < blocks.size(); ++k) {
    const int d = blocks[k].dim;
    const Eigen::Matrix2d E = BlockExp(blocks[k], gramian[k].t);
    Eigen::Vector2d hk = Eigen::Vector2d::Zero();
    hk.head(d) = x.segment(k * d, d);
    const Eigen::Vector2d v = gramian[k].Qinv_sqrt * (E * hk);
    sum.Add(v.squaredNorm());
  }
  return std::sqrt(sum.value());
}

double ControlDegreeThreshold(double alpha, double gamma) {
  if (alpha >= 0.5) return (gamma + alpha - 0.5) / (1.0 - alpha) - 0.5;
  return 2.0 * gamma - 0.5;
}

int DefaultControlDegree(double alpha, double gamma) {
  const double x = ControlDegreeThreshold(alpha, gamma);
  const int smallest = std::max(1, static_cast<int>(std::floor(x)) + 1);
  return smallest + 1;
}

double PredictedEnergyExponent(double alpha, double gamma) {
  if (alpha >= 0.5) return -(0.5 + (gamma + alpha - 0.5) / (1.0 - alpha));
  return -(0.5 + 2.0 * gamma);
}

Eigen::VectorXd ControlSignal::Evaluate(const Spectrum& blocks,
                                        double tau) const {
  const int n = static_cast<int>(blocks.size());
  Eigen::VectorXd u = Eigen::VectorXd::Zero(n);
  if (tau <= 0 || tau >= t) return u;
  const int m = profile.degree;
  const double phi = profile.c_bar * std::pow(tau, m) * (t - tau);
  const double dphi = profile.c_bar * (m * std::pow(tau, m - 1) * (t - tau) -
                                       std::pow(tau, m));
  for (int k = 0; k < n; ++k) {
    const Eigen::Vector2d hk = h.segment(2 * k, 2);
    const Eigen::Vector2d w = BlockExp(blocks[k], tau) * hk;
    const Eigen::Vector2d psi = -phi * w;
    const Eigen::Vector2d dpsi = -dphi * w - phi * (blocks[k].generator * w);
    u(k) = k1[k].dot(psi) + k2[k].dot(dpsi);
  }
  return u;
}

ControlSignal SynthesizeControl(const Spectrum& blocks,
                                const OperatorSpec& spec,
                                const SpectralField& h, double t, int degree,
                                int samples) {
  if (!spec.damped()) {
    Throw(ErrorCode::kRangeViolation, "explicit control needs a damped family");
  }
  if (!(spec.alpha >= 0 && spec.alpha < 1) || spec.gamma < 0 ||
      (spec.alpha > 0.5 && spec.gamma >= 0.5)) {
    Throw(ErrorCode::kRangeViolation,
          "alpha = " + std::to_string(spec.alpha) +
              ", gamma = " + std::to_string(spec.gamma) +
              " outside the ranges of the explicit control");
  }
  if (!(t > 0)) Throw(ErrorCode::kOutOfRange, "horizon must be > 0");
  const double threshold = ControlDegreeThreshold(spec.alpha, spec.gamma);
  if (degree == 0) degree = DefaultControlDegree(spec.alpha, spec.gamma);
  if (degree < 1 || !(degree > threshold)) {
    Throw(ErrorCode::kDegreeTooSmall,
          "degree " + std::to_string(degree) + " must exceed " +
              std::to_string(threshold) + " and be at least 1");
  }
  CheckCompatible(blocks, h);

  ControlSignal u;
  u.t = t;
  u.profile.degree = degree;
  u.profile.c_bar = (degree + 1.0) * (degree + 2.0) / std::pow(t, degree + 2);
  u.h = RealPhysical(blocks, h);
  for (const SpectralBlock& b : blocks) {
    const double mu = b.base.mu;
    u.k1.emplace_back(spec.rho * std::pow(mu, spec.alpha - 0.5 + spec.gamma),
                      std::pow(mu, spec.gamma));
    u.k2.emplace_back(std::pow(mu, -0.5 + spec.gamma), 0.0);
  }
  samples = std::max(samples, 2);
  for (int i = 0; i < samples; ++i) {
    const double tau = t * i / (samples - 1);
    u.grid.push_back(tau);
    u.values.push_back(u.Evaluate(blocks, tau));
  }
  auto energy2 = [&](int panels) {
    const QuadratureRule rule = CompositeGaussLegendreRule(0, t, panels, 64);
    KahanSum sum;
    for (size_t i = 0; i < rule.nodes.size(); ++i) {
      sum.Add(rule.weights[i] * u.Evaluate(blocks, rule.nodes[i]).squaredNorm());
    }
    return sum.value();
  };
  const double fine = energy2(64);
  const double coarse = energy2(32);
  u.energy = std::sqrt(fine);
  u.energy_quadrature_error = std::abs(std::sqrt(fine) - std::sqrt(coarse));
  return u;
}

Eigen::VectorXd ControlledTerminalState(
    const Spectrum& blocks, double gamma, const Eigen::VectorXd& h, double t,
    const std::function<Eigen::VectorXd(double)>& u, int panels, int order) {
  const int n = static_cast<int>(blocks.size());
  const int d = blocks.empty() ? 1 : blocks.front().dim;
  std::vector<Eigen::Vector2d> g(n);
  Eigen::VectorXd y = Eigen::VectorXd::Zero(n * d);
  for (int k = 0; k < n; ++k) {
    g[k] = InputVector(blocks[k], gamma);
    Eigen::Vector2d hk = Eigen::Vector2d::Zero();
    hk.head(d) = h.segment(k * d, d);
    y.segment(k * d, d) = (BlockExp(blocks[k], t) * hk).head(d);
  }
  const QuadratureRule rule = CompositeGaussLegendreRule(0, t, panels, order);
  for (size_t i = 0; i < rule.nodes.size(); ++i) {
    const double s = rule.nodes[i];
    const Eigen::VectorXd us = u(s);
    for (int k = 0; k < n; ++k) {
      const Eigen::Vector2d v =
          BlockExp(blocks[k], t - s) * g[k] * (rule.weights[i] * us(k));
      y.segment(k * d, d) += v.head(d);
    }
  }
  return y;
}

SteeringResult VerifySteering(const Spectrum& blocks, const OperatorSpec& spec,
                              const ControlSignal& u, const SpectralField& h,
                              int nodes, double tolerance) {
  CheckCompatible(blocks, h);
  if (u.k1.size() != blocks.size()) {
    Throw(ErrorCode::kSpectrumMismatch, "control built on another spectrum");
  }
  const Eigen::VectorXd x = RealPhysical(blocks, h);
  auto eval = [&](double s) { return u.Evaluate(blocks, s); };
  int order = std::min(64, nodes);
  int panels = std::max(1, nodes / order);
  const Eigen::VectorXd fine =
      ControlledTerminalState(blocks, spec.gamma, x, u.t, eval, panels, order);
  Eigen::VectorXd coarse;
  if (panels >= 2) {
    coarse = ControlledTerminalState(blocks, spec.gamma, x, u.t, eval,
                                     panels / 2, order);
  } else {
    coarse = ControlledTerminalState(blocks, spec.gamma, x, u.t, eval, 1,
                                     std::max(1, order / 2));
  }
  SteeringResult r;
  r.nodes = panels * order;
  r.terminal_norm = fine.norm();
  r.error_estimate = (fine - coarse).norm();
  if (tolerance > 0 && r.error_estimate > tolerance) {
    Throw(ErrorCode::kGridTooCoarse,
          "steering quadrature error estimate " +
              std::to_string(r.error_estimate) + " exceeds " +
              std::to_string(tolerance));
  }
  return r;
}

}  // namespace spdekit
