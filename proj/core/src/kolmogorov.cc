#include "spdekit/kolmogorov.h"

#include <algorithm>
#include <cmath>

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include "spdekit/common.h"
#include "spdekit/controllability.h"
#include "spdekit/rng.h"

namespace spdekit {

namespace {

int StateDim(const Spectrum& blocks) {
  return blocks.empty() ? 0 : static_cast<int>(blocks.size()) * blocks[0].dim;
}

double SpectralNorm(const Eigen::MatrixXd& m) {
  if (m.size() == 0) return 0.0;
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(m);
  return svd.singularValues()(0);
}

Eigen::MatrixXd SymmetricSqrt(const Eigen::MatrixXd& q, bool inverse) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(q);
  Eigen::VectorXd ev = es.eigenvalues();
  if (inverse && !(ev.minCoeff() > 1e-300)) {
    Throw(ErrorCode::kSingularGramian, "covariance is singular");
  }
  for (int i = 0; i < ev.size(); ++i) {
    ev(i) = std::sqrt(std::max(ev(i), 0.0));
    if (inverse) ev(i) = 1.0 / ev(i);
  }
  return es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
}

// Bilinear norm estimate of a family of symmetric matrices, exact for one.
double HessianNorm(const std::vector<Eigen::MatrixXd>& h) {
  if (h.size() == 1) return SpectralNorm(h[0]);
  double s = 0.0;
  for (const auto& m : h) {
    const double v = SpectralNorm(m);
    s += v * v;
  }
  return std::sqrt(s);
}

}  // namespace

Eigen::MatrixXd DenseGenerator(const Spectrum& blocks) {
  const int n = StateDim(blocks);
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(n, n);
  for (size_t k = 0; k < blocks.size(); ++k) {
    const int d = blocks[k].dim;
    A.block(k * d, k * d, d, d) = blocks[k].generator.topLeftCorner(d, d);
  }
  return A;
}

Eigen::MatrixXd DenseExp(const Spectrum& blocks, double t) {
  const int n = StateDim(blocks);
  Eigen::MatrixXd E = Eigen::MatrixXd::Zero(n, n);
  for (size_t k = 0; k < blocks.size(); ++k) {
    const int d = blocks[k].dim;
    E.block(k * d, k * d, d, d) = BlockExp(blocks[k], t).topLeftCorner(d, d);
  }
  return E;
}

Eigen::MatrixXd DenseGramian(const Spectrum& blocks, double gamma, double t) {
  const int n = StateDim(blocks);
  Eigen::MatrixXd Q = Eigen::MatrixXd::Zero(n, n);
  for (size_t k = 0; k < blocks.size(); ++k) {
    const int d = blocks[k].dim;
    Q.block(k * d, k * d, d, d) =
        BlockGramian(blocks[k], gamma, t).topLeftCorner(d, d);
  }
  return Q;
}

OUKernel OUKernel::Build(const Spectrum& blocks, double gamma, double t,
                         int order, int exact_degree) {
  if (!(t > 0)) Throw(ErrorCode::kOutOfRange, "OU kernel needs t > 0");
  if (exact_degree > 2 * order - 1) {
    Throw(ErrorCode::kQuadratureDegreeTooLow,
          "a " + std::to_string(order) + "-point rule is exact to degree " +
              std::to_string(2 * order - 1) + ", requested " +
              std::to_string(exact_degree));
  }
  OUKernel k;
  k.dim = StateDim(blocks);
  k.t = t;
  k.order = order;
  k.mean_map = DenseExp(blocks, t);
  k.covariance = DenseGramian(blocks, gamma, t);
  k.sqrt_cov = SymmetricSqrt(k.covariance, false);
  k.whitening = SymmetricSqrt(k.covariance, true) * k.mean_map;
  k.gamma = SpectralNorm(k.whitening);
  k.exp_norm = SpectralNorm(k.mean_map);
  const QuadratureRule gh = GaussHermiteProbabilist(order);
  int total = 1;
  for (int d = 0; d < k.dim; ++d) total *= order;
  k.points.reserve(total);
  k.weights.reserve(total);
  for (int i = 0; i < total; ++i) {
    Eigen::VectorXd z(k.dim);
    double w = 1.0;
    int rest = i;
    for (int d = 0; d < k.dim; ++d) {
      const int j = rest % order;
      rest /= order;
      z(d) = gh.nodes[j];
      w *= gh.weights[j];
    }
    k.points.push_back(z);
    k.weights.push_back(w);
  }
  return k;
}

Eigen::VectorXd OuApply(const OUKernel& kernel, const VectorFunction& phi,
                        const Eigen::VectorXd& x) {
  const Eigen::VectorXd m = kernel.mean_map * x;
  Eigen::VectorXd sum;
  for (size_t q = 0; q < kernel.points.size(); ++q) {
    const Eigen::VectorXd v = phi(m + kernel.sqrt_cov * kernel.points[q]);
    if (q == 0) sum = Eigen::VectorXd::Zero(v.size());
    sum += kernel.weights[q] * v;
  }
  return sum;
}

OuDerivatives OuGradient(const OUKernel& kernel, const VectorFunction& phi,
                         const Eigen::VectorXd& x) {
  const int d = kernel.dim;
  const Eigen::VectorXd m = kernel.mean_map * x;
  const Eigen::MatrixXd& W = kernel.whitening;
  const Eigen::MatrixXd WtW = W.transpose() * W;
  OuDerivatives out;
  for (size_t q = 0; q < kernel.points.size(); ++q) {
    const Eigen::VectorXd& z = kernel.points[q];
    const Eigen::VectorXd v = phi(m + kernel.sqrt_cov * z);
    const double w = kernel.weights[q];
    if (q == 0) {
      out.value = Eigen::VectorXd::Zero(v.size());
      out.gradient = Eigen::MatrixXd::Zero(v.size(), d);
      out.hessian.assign(v.size(), Eigen::MatrixXd::Zero(d, d));
    }
    const Eigen::VectorXd wz = W.transpose() * z;
    const Eigen::MatrixXd second = wz * wz.transpose() - WtW;
    out.value += w * v;
    out.gradient += w * v * wz.transpose();
    for (int i = 0; i < v.size(); ++i) out.hessian[i] += (w * v(i)) * second;
  }
  out.gradient_norm = SpectralNorm(out.gradient);
  out.hessian_norm = HessianNorm(out.hessian);
  return out;
}

DerivativeBounds BoundedFunctionBounds(const OUKernel& kernel,
                                       double sup_norm) {
  return {kernel.gamma * sup_norm,
          std::sqrt(2.0) * kernel.gamma * kernel.gamma * sup_norm};
}

DerivativeBounds HolderFunctionBounds(const OUKernel& kernel, double theta,
                                      double holder_norm) {
  const double e = std::pow(kernel.exp_norm, theta);
  return {e * std::pow(kernel.gamma, 1.0 - theta) * holder_norm,
          std::pow(2.0, 0.5 * (1.0 - theta)) * e *
              std::pow(kernel.gamma, 2.0 - theta) * holder_norm};
}

double KernelConstant(const Spectrum& blocks, double gamma, double theta,
                      double t) {
  const double g = GammaAt(blocks, gamma, t);
  double e = 0.0;
  for (const SpectralBlock& b : blocks) {
    const int d = b.dim;
    e = std::max(e, SpectralNorm(BlockExp(b, t).topLeftCorner(d, d)));
  }
  const double et = std::pow(e, theta);
  return 1.0 + et * std::pow(g, 1.0 - theta) +
         std::pow(2.0, 0.5 * (1.0 - theta)) * et * std::pow(g, 2.0 - theta);
}

double WeightedKernelIntegral(const Spectrum& blocks, double gamma,
                              double theta, double T, double weight) {
  const SingularIntegral I = IntegrateFromZero(
      [&](double s) {
        return std::exp(-weight * s) * KernelConstant(blocks, gamma, theta, s);
      },
      T);
  if (I.divergent) {
    Throw(ErrorCode::kDivergentGammaIntegral,
          "K_s ~ s^{-" + std::to_string(I.endpoint_exponent) +
              "} is not integrable at 0");
  }
  return I.value;
}

ConstantsLedger ComputeConstants(const Spectrum& blocks, double gamma,
                                 double T, double theta, double drift_norm,
                                 int profile_points) {
  ConstantsLedger c;
  c.T = T;
  c.theta = theta;
  const SingularIntegral I = IntegrateFromZero(
      [&](double s) { return KernelConstant(blocks, gamma, theta, s); }, T);
  c.endpoint_exponent = I.endpoint_exponent;
  if (I.divergent) {
    Throw(ErrorCode::kDivergentGammaIntegral,
          "K_t ~ t^{-" + std::to_string(I.endpoint_exponent) +
              "} is not integrable at 0");
  }
  c.C_T = I.value;
  c.M_T = c.C_T * std::exp(c.C_T * drift_norm);
  for (int i = 1; i <= profile_points; ++i) {
    const double t = T * i / profile_points;
    c.t.push_back(t);
    c.K.push_back(KernelConstant(blocks, gamma, theta, t));
  }
  return c;
}

// ---------------------------------------------------------------------------

MappedChebyshev::MappedChebyshev(int dim, int points, double scale)
    : dim_(dim), p_(points), c_(scale) {
  if (dim < 1 || points < 2 || !(scale > 0)) {
    Throw(ErrorCode::kOutOfRange, "bad interpolation grid");
  }
  size_ = 1;
  for (int d = 0; d < dim; ++d) size_ *= p_;
  u_.resize(p_);
  bary_.resize(p_);
  for (int i = 0; i < p_; ++i) {
    const double a = M_PI * (2.0 * i + 1.0) / (2.0 * p_);
    u_(i) = -std::cos(a);
    bary_(i) = (i % 2 == 0 ? 1.0 : -1.0) * std::sin(a);
  }
  d1_ = Eigen::MatrixXd::Zero(p_, p_);
  for (int i = 0; i < p_; ++i) {
    double diag = 0.0;
    for (int j = 0; j < p_; ++j) {
      if (i == j) continue;
      d1_(i, j) = (bary_(j) / bary_(i)) / (u_(i) - u_(j));
      diag -= d1_(i, j);
    }
    d1_(i, i) = diag;
  }
  d2_ = d1_ * d1_;
}

Eigen::VectorXd MappedChebyshev::Node(int a) const {
  Eigen::VectorXd x(dim_);
  for (int d = 0; d < dim_; ++d) {
    const double u = u_(a % p_);
    a /= p_;
    x(d) = c_ * u / std::sqrt(1.0 - u * u);
  }
  return x;
}

MappedChebyshev::Stencil MappedChebyshev::At(const Eigen::VectorXd& x) const {
  Stencil s;
  for (int d = 0; d < dim_; ++d) {
    const double r = std::sqrt(x(d) * x(d) + c_ * c_);
    const double u = x(d) / r;
    const double du = c_ * c_ / (r * r * r);
    const double ddu = -3.0 * x(d) * c_ * c_ / (r * r * r * r * r);
    Eigen::VectorXd l(p_), l1(p_), l2(p_);
    int hit = -1;
    for (int i = 0; i < p_; ++i) {
      if (std::abs(u - u_(i)) < 1e-15) hit = i;
    }
    if (hit >= 0) {
      l.setZero();
      l(hit) = 1.0;
      l1 = d1_.row(hit).transpose();
      l2 = d2_.row(hit).transpose();
    } else {
      Eigen::VectorXd sv(p_), s1(p_), s2(p_);
      for (int i = 0; i < p_; ++i) {
        const double inv = 1.0 / (u - u_(i));
        sv(i) = bary_(i) * inv;
        s1(i) = -sv(i) * inv;
        s2(i) = 2.0 * sv(i) * inv * inv;
      }
      const double S = sv.sum(), S1 = s1.sum(), S2 = s2.sum();
      l = sv / S;
      l1 = (s1 * S - sv * S1) / (S * S);
      l2 = (s2 * S - sv * S2) / (S * S) - 2.0 * l1 * S1 / S;
    }
    s.value.push_back(l);
    s.first.push_back(l1 * du);
    s.second.push_back(l2 * du * du + l1 * ddu);
  }
  return s;
}

Eigen::RowVectorXd MappedChebyshev::Weights(const Eigen::VectorXd& x) const {
  const Stencil s = At(x);
  Eigen::RowVectorXd w(size_);
  for (int a = 0; a < size_; ++a) {
    double v = 1.0;
    int rest = a;
    for (int d = 0; d < dim_; ++d) {
      v *= s.value[d](rest % p_);
      rest /= p_;
    }
    w(a) = v;
  }
  return w;
}

Eigen::VectorXd MappedChebyshev::Value(const Eigen::MatrixXd& f,
                                       const Eigen::VectorXd& x) const {
  return (Weights(x) * f).transpose();
}

void MappedChebyshev::Evaluate(const Eigen::MatrixXd& f,
                               const Eigen::VectorXd& x,
                               Eigen::VectorXd* value,
                               Eigen::MatrixXd* gradient,
                               std::vector<Eigen::MatrixXd>* hessian) const {
  const Stencil s = At(x);
  const int k = static_cast<int>(f.cols());
  // Basis products with derivative orders (o_1, ..., o_d), o in {0, 1, 2}.
  auto product = [&](const std::vector<int>& order) {
    Eigen::RowVectorXd w(size_);
    for (int a = 0; a < size_; ++a) {
      double v = 1.0;
      int rest = a;
      for (int d = 0; d < dim_; ++d) {
        const int i = rest % p_;
        rest /= p_;
        v *= order[d] == 0 ? s.value[d](i)
                           : (order[d] == 1 ? s.first[d](i) : s.second[d](i));
      }
      w(a) = v;
    }
    return w;
  };
  std::vector<int> order(dim_, 0);
  if (value) *value = (product(order) * f).transpose();
  if (gradient) {
    gradient->resize(k, dim_);
    for (int e = 0; e < dim_; ++e) {
      std::fill(order.begin(), order.end(), 0);
      order[e] = 1;
      gradient->col(e) = (product(order) * f).transpose();
    }
  }
  if (hessian) {
    hessian->assign(k, Eigen::MatrixXd::Zero(dim_, dim_));
    for (int e = 0; e < dim_; ++e) {
      for (int g = e; g < dim_; ++g) {
        std::fill(order.begin(), order.end(), 0);
        order[e] += 1;
        order[g] += 1;
        const Eigen::RowVectorXd h = product(order) * f;
        for (int i = 0; i < k; ++i) {
          (*hessian)[i](e, g) = (*hessian)[i](g, e) = h(i);
        }
      }
    }
  }
}

Eigen::MatrixXd MappedChebyshev::AxisApply(const Eigen::MatrixXd& f,
                                           const Eigen::MatrixXd& D,
                                           int axis) const {
  int stride = 1;
  for (int d = 0; d < axis; ++d) stride *= p_;
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(f.rows(), f.cols());
  for (int a = 0; a < size_; ++a) {
    const int i = (a / stride) % p_;
    const int base = a - i * stride;
    for (int j = 0; j < p_; ++j) out.row(a) += D(i, j) * f.row(base + j * stride);
  }
  return out;
}

std::vector<Eigen::MatrixXd> MappedChebyshev::NodeGradient(
    const Eigen::MatrixXd& f) const {
  std::vector<Eigen::MatrixXd> g;
  for (int e = 0; e < dim_; ++e) {
    Eigen::MatrixXd du = AxisApply(f, d1_, e);
    for (int a = 0; a < size_; ++a) {
      const double x = Node(a)(e);
      const double r = std::sqrt(x * x + c_ * c_);
      du.row(a) *= c_ * c_ / (r * r * r);
    }
    g.push_back(du);
  }
  return g;
}

std::vector<Eigen::MatrixXd> MappedChebyshev::NodeHessian(
    const Eigen::MatrixXd& f) const {
  std::vector<Eigen::MatrixXd> h(dim_ * dim_);
  std::vector<Eigen::MatrixXd> first;
  for (int e = 0; e < dim_; ++e) first.push_back(AxisApply(f, d1_, e));
  Eigen::MatrixXd du(size_, dim_), ddu(size_, dim_);
  for (int a = 0; a < size_; ++a) {
    const Eigen::VectorXd x = Node(a);
    for (int e = 0; e < dim_; ++e) {
      const double r = std::sqrt(x(e) * x(e) + c_ * c_);
      du(a, e) = c_ * c_ / (r * r * r);
      ddu(a, e) = -3.0 * x(e) * c_ * c_ / (r * r * r * r * r);
    }
  }
  for (int e = 0; e < dim_; ++e) {
    for (int g = e; g < dim_; ++g) {
      Eigen::MatrixXd m;
      if (e == g) {
        m = AxisApply(f, d2_, e);
        for (int a = 0; a < size_; ++a) {
          m.row(a) = m.row(a) * du(a, e) * du(a, e) + first[e].row(a) * ddu(a, e);
        }
      } else {
        m = AxisApply(first[e], d1_, g);
        for (int a = 0; a < size_; ++a) m.row(a) *= du(a, e) * du(a, g);
      }
      h[e * dim_ + g] = m;
      h[g * dim_ + e] = m;
    }
  }
  return h;
}

// ---------------------------------------------------------------------------

int KolmogorovField::TimeIndex(double t) const {
  const double T = times_.back();
  const int K = static_cast<int>(times_.size()) - 1;
  const double x = t / T * K;
  const int i = static_cast<int>(std::lround(x));
  if (i < 0 || i > K || std::abs(times_[i] - t) > 1e-12 * std::max(1.0, T)) {
    return -1;
  }
  return i;
}

Eigen::VectorXd KolmogorovField::Value(double t, const Eigen::VectorXd& x) const {
  const int i = TimeIndex(t);
  if (i < 0) {
    Throw(ErrorCode::kMissingKolmogorovSolution,
          "time " + std::to_string(t) + " is not on the Kolmogorov grid");
  }
  return interp_.Value(values_[i], x);
}

Eigen::MatrixXd KolmogorovField::Jacobian(double t,
                                          const Eigen::VectorXd& x) const {
  const int i = TimeIndex(t);
  if (i < 0) {
    Throw(ErrorCode::kMissingKolmogorovSolution,
          "time " + std::to_string(t) + " is not on the Kolmogorov grid");
  }
  Eigen::MatrixXd g;
  interp_.Evaluate(values_[i], x, nullptr, &g, nullptr);
  return g;
}

namespace {

double NodalC2(const MappedChebyshev& interp, const Eigen::MatrixXd& f) {
  const int d = interp.dim();
  const std::vector<Eigen::MatrixXd> g = interp.NodeGradient(f);
  const std::vector<Eigen::MatrixXd> h = interp.NodeHessian(f);
  double v0 = 0, v1 = 0, v2 = 0;
  for (int a = 0; a < interp.size(); ++a) {
    v0 = std::max(v0, f.row(a).norm());
    Eigen::MatrixXd jac(f.cols(), d);
    for (int e = 0; e < d; ++e) jac.col(e) = g[e].row(a).transpose();
    v1 = std::max(v1, SpectralNorm(jac));
    std::vector<Eigen::MatrixXd> hess(f.cols(), Eigen::MatrixXd(d, d));
    for (int i = 0; i < f.cols(); ++i) {
      for (int e = 0; e < d; ++e) {
        for (int q = 0; q < d; ++q) hess[i](e, q) = h[e * d + q](a, i);
      }
    }
    v2 = std::max(v2, HessianNorm(hess));
  }
  return v0 + v1 + v2;
}

}  // namespace

double KolmogorovField::C2Norm(int ti) const {
  return NodalC2(interp_, values_[ti]);
}

KolmogorovField SolveBackward(const Spectrum& blocks, double gamma,
                              const VectorFunction& N, const VectorFunction& M,
                              double T, const KolmogorovOptions& opt,
                              KolmogorovReport* report) {
  const int d = StateDim(blocks);
  if (d < 1 || d > 4) {
    Throw(ErrorCode::kOutOfRange, "state dimension must lie in [1, 4]");
  }
  if (!(T > 0) || opt.time_steps < 1) {
    Throw(ErrorCode::kOutOfRange, "need T > 0 and at least one time step");
  }
  KolmogorovReport local;
  KolmogorovReport& rep = report ? *report : local;
  rep = KolmogorovReport();

  const int K = opt.time_steps;
  const double dt = T / K;
  const Eigen::MatrixXd QT = DenseGramian(blocks, gamma, T);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(QT);
  const double scale = opt.scale > 0
                           ? opt.scale
                           : 4.0 * std::sqrt(es.eigenvalues().maxCoeff());

  KolmogorovField field;
  field.interp_ = MappedChebyshev(d, opt.points, scale);
  const MappedChebyshev& I = field.interp_;
  const int S = I.size();
  for (int i = 0; i <= K; ++i) field.times_.push_back(dt * i);

  // Weight of the norm, doubled from 1 until the Volterra map contracts.
  rep.constants = ComputeConstants(blocks, gamma, T, opt.theta, opt.n_holder);
  rep.c2_bound = rep.constants.M_T * opt.m_holder;
  double weight = 1.0;
  double factor =
      opt.n_holder * WeightedKernelIntegral(blocks, gamma, opt.theta, T, weight);
  while (factor >= 1.0 && weight < opt.gamma_max) {
    weight *= 2.0;
    factor = opt.n_holder *
             WeightedKernelIntegral(blocks, gamma, opt.theta, T, weight);
  }
  if (factor >= 1.0) {
    Throw(ErrorCode::kContractionFailure,
          "no weight up to " + std::to_string(opt.gamma_max) +
              " makes the Volterra map contract");
  }
  rep.weight = weight;
  rep.contraction_bound = factor;

  // Node values of R(s dt) F from node values of F, s = 1..K.
  std::vector<Eigen::MatrixXd> P(K + 1);
  {
    std::vector<int> lags(K);
    for (int s = 1; s <= K; ++s) lags[s - 1] = s;
    ParallelFor(K, opt.threads, [&](int idx) {
      const int s = lags[idx];
      const OUKernel ker = OUKernel::Build(blocks, gamma, s * dt, opt.gh_order);
      Eigen::MatrixXd m = Eigen::MatrixXd::Zero(S, S);
      for (int a = 0; a < S; ++a) {
        const Eigen::VectorXd mean = ker.mean_map * I.Node(a);
        for (size_t q = 0; q < ker.points.size(); ++q) {
          m.row(a) += ker.weights[q] *
                      I.Weights(mean + ker.sqrt_cov * ker.points[q]);
        }
      }
      P[s] = m;
    });
  }

  Eigen::MatrixXd Nn(S, d), Mn(S, d);
  for (int a = 0; a < S; ++a) {
    const Eigen::VectorXd x = I.Node(a);
    Nn.row(a) = N(x).transpose();
    Mn.row(a) = M(x).transpose();
  }

  auto trapezoid = [&](int i, int j) {
    return (j == i || j == K) ? 0.5 * dt : dt;
  };

  field.values_.assign(K + 1, Eigen::MatrixXd::Zero(S, d));
  std::vector<Eigen::MatrixXd>& U = field.values_;
  // One application of the discretized Volterra map on node values.
  auto apply = [&](const std::vector<Eigen::MatrixXd>& u) {
    std::vector<Eigen::MatrixXd> F(K + 1);
    for (int j = 0; j <= K; ++j) {
      const std::vector<Eigen::MatrixXd> g = I.NodeGradient(u[j]);
      Eigen::MatrixXd f = Mn;
      for (int e = 0; e < d; ++e) {
        f += (g[e].array().colwise() * Nn.col(e).array()).matrix();
      }
      F[j] = f;
    }
    std::vector<Eigen::MatrixXd> out(K + 1, Eigen::MatrixXd::Zero(S, d));
    ParallelFor(K, opt.threads, [&](int i) {
      Eigen::MatrixXd acc = trapezoid(i, i) * F[i];
      for (int j = i + 1; j <= K; ++j) acc += trapezoid(i, j) * (P[j - i] * F[j]);
      out[i] = acc;
    });
    return out;
  };
  int it = 0;
  double prev = 0.0;
  for (; it < opt.max_iterations; ++it) {
    std::vector<Eigen::MatrixXd> next = apply(U);
    double dist = 0.0;
    for (int i = 0; i <= K; ++i) {
      dist = std::max(dist, std::exp(weight * field.times_[i]) *
                                NodalC2(I, next[i] - U[i]));
    }
    U.swap(next);
    rep.distances.push_back(dist);
    if (it > 0 && prev > 0) rep.ratios.push_back(dist / prev);
    prev = dist;
    if (dist < opt.tolerance) break;
  }
  rep.iterations = it + 1;
  if (it == opt.max_iterations) {
    Throw(ErrorCode::kPicardNoConvergence,
          "Picard iteration stalled after " + std::to_string(opt.max_iterations) +
              " sweeps");
  }
  for (int i = 0; i <= K; ++i) rep.sup_c2 = std::max(rep.sup_c2, field.C2Norm(i));

  // Plug the solution back in. On the nodes this uses the same quadrature
  // as the iteration; between nodes the integrand is the interpolant itself.
  {
    const std::vector<Eigen::MatrixXd> again = apply(U);
    for (int i = 0; i <= K; ++i) {
      rep.residual = std::max(
          rep.residual, (again[i] - U[i]).rowwise().norm().maxCoeff());
    }
  }
  if (opt.residual_points > 0) {
    std::vector<OUKernel> kernels;
    kernels.reserve(K);
    for (int s = 1; s <= K; ++s) {
      kernels.push_back(OUKernel::Build(blocks, gamma, s * dt, opt.gh_order));
    }
    const int checks[] = {0, K / 4, K / 2, (3 * K) / 4};
    auto integrand = [&](int j, const Eigen::VectorXd& y) {
      Eigen::MatrixXd jac;
      I.Evaluate(U[j], y, nullptr, &jac, nullptr);
      return Eigen::VectorXd(jac * N(y) + M(y));
    };
    std::vector<double> worst(opt.residual_points, 0.0);
    ParallelFor(opt.residual_points, opt.threads, [&](int p) {
      Eigen::VectorXd x(d);
      for (int e = 0; e < d; ++e) {
        const auto z = KeyedNormalPair(0x5eedull, static_cast<uint32_t>(p),
                                       static_cast<uint32_t>(e), 3u);
        x(e) = 0.5 * scale * z[0];
      }
      for (int i : checks) {
        Eigen::VectorXd v = trapezoid(i, i) * integrand(i, x);
        for (int j = i + 1; j <= K; ++j) {
          const OUKernel& ker = kernels[j - i - 1];
          const Eigen::VectorXd mean = ker.mean_map * x;
          Eigen::VectorXd r = Eigen::VectorXd::Zero(d);
          for (size_t q = 0; q < ker.points.size(); ++q) {
            r += ker.weights[q] *
                 integrand(j, mean + ker.sqrt_cov * ker.points[q]);
          }
          v += trapezoid(i, j) * r;
        }
        worst[p] = std::max(worst[p], (v - I.Value(U[i], x)).norm());
      }
    });
    rep.offgrid_residual = *std::max_element(worst.begin(), worst.end());
  }
  if (opt.residual_tolerance > 0 && rep.residual > opt.residual_tolerance) {
    Throw(ErrorCode::kResidualTooLarge,
          "integral equation residual " + std::to_string(rep.residual));
  }
  return field;
}

}  // namespace spdekit
