#include "spdekit/numerics.h"

#include <cmath>
#include <map>
#include <mutex>

#include <Eigen/Eigenvalues>

#include "spdekit/common.h"

namespace spdekit {

namespace {

// Returns P_n(x) and P_{n-1}(x) by the three-term recurrence.
void LegendrePair(int n, double x, double* pn, double* pn1) {
  double p0 = 1.0, p1 = x;
  for (int k = 2; k <= n; ++k) {
    const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
    p0 = p1;
    p1 = p2;
  }
  *pn = p1;
  *pn1 = p0;
}

QuadratureRule ComputeGaussLegendre(int n) {
  QuadratureRule rule;
  rule.nodes.resize(n);
  rule.weights.resize(n);
  for (int i = 0; i < n; ++i) {
    // Tricomi initial guess, then Newton on P_n.
    double x = std::cos(M_PI * (i + 0.75) / (n + 0.5));
    double pn = 0, pn1 = 0, dp = 1;
    for (int it = 0; it < 100; ++it) {
      LegendrePair(n, x, &pn, &pn1);
      dp = n * (x * pn - pn1) / (x * x - 1.0);
      const double dx = pn / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    LegendrePair(n, x, &pn, &pn1);
    dp = n * (x * pn - pn1) / (x * x - 1.0);
    rule.nodes[n - 1 - i] = x;
    rule.weights[n - 1 - i] = 2.0 / ((1.0 - x * x) * dp * dp);
  }
  return rule;
}

}  // namespace

QuadratureRule GaussLegendre(int n) {
  if (n < 1) Throw(ErrorCode::kOutOfRange, "Gauss-Legendre order must be >= 1");
  static std::mutex mu;
  static std::map<int, QuadratureRule> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto it = cache.find(n);
  if (it != cache.end()) return it->second;
  QuadratureRule rule = ComputeGaussLegendre(n);
  cache.emplace(n, rule);
  return rule;
}

QuadratureRule GaussHermiteProbabilist(int n) {
  if (n < 1) Throw(ErrorCode::kOutOfRange, "Gauss-Hermite order must be >= 1");
  // Golub-Welsch on the Jacobi matrix of the probabilists' Hermite
  // polynomials: zero diagonal, off-diagonal sqrt(k).
  Eigen::MatrixXd J = Eigen::MatrixXd::Zero(n, n);
  for (int k = 1; k < n; ++k) {
    J(k, k - 1) = J(k - 1, k) = std::sqrt(static_cast<double>(k));
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(J);
  QuadratureRule rule;
  rule.nodes.resize(n);
  rule.weights.resize(n);
  for (int i = 0; i < n; ++i) {
    rule.nodes[i] = es.eigenvalues()(i);
    const double v = es.eigenvectors()(0, i);
    rule.weights[i] = v * v;
  }
  // Symmetrize to remove eigen-solver asymmetry in the last bits.
  for (int i = 0; i < n / 2; ++i) {
    const double x = 0.5 * (rule.nodes[n - 1 - i] - rule.nodes[i]);
    const double w = 0.5 * (rule.weights[n - 1 - i] + rule.weights[i]);
    rule.nodes[i] = -x;
    rule.nodes[n - 1 - i] = x;
    rule.weights[i] = rule.weights[n - 1 - i] = w;
  }
  if (n % 2 == 1) rule.nodes[n / 2] = 0.0;
  double total = 0;
  for (double w : rule.weights) total += w;
  for (double& w : rule.weights) w /= total;
  return rule;
}

QuadratureRule CompositeGaussLegendreRule(double a, double b, int panels,
                                          int order) {
  const QuadratureRule base = GaussLegendre(order);
  QuadratureRule rule;
  rule.nodes.reserve(static_cast<size_t>(panels) * order);
  rule.weights.reserve(static_cast<size_t>(panels) * order);
  const double h = (b - a) / panels;
  for (int p = 0; p < panels; ++p) {
    const double lo = a + p * h;
    for (int i = 0; i < order; ++i) {
      rule.nodes.push_back(lo + 0.5 * h * (base.nodes[i] + 1.0));
      rule.weights.push_back(0.5 * h * base.weights[i]);
    }
  }
  return rule;
}

double CompositeGaussLegendre(const std::function<double(double)>& f, double a,
                              double b, int panels, int order) {
  const QuadratureRule rule = CompositeGaussLegendreRule(a, b, panels, order);
  KahanSum sum;
  for (size_t i = 0; i < rule.nodes.size(); ++i) {
    sum.Add(rule.weights[i] * f(rule.nodes[i]));
  }
  return sum.value();
}

cplx Expm1(cplx w) {
  const double x = w.real(), y = w.imag();
  const double s = std::sin(0.5 * y);
  const double re = std::expm1(x) * std::cos(y) - 2.0 * s * s;
  const double im = std::exp(x) * std::sin(y);
  return {re, im};
}

cplx ExpIntegral(cplx z, double t) {
  const cplx w = z * t;
  if (std::abs(w) < 1e-4) {
    return t * (1.0 + w / 2.0 + w * w / 6.0 + w * w * w / 24.0);
  }
  return Expm1(w) / z;
}

cplx LowerIncompleteGamma(double a, cplx w) {
  if (a <= 0) Throw(ErrorCode::kOutOfRange, "incomplete gamma needs a > 0");
  if (w == cplx(0.0)) return 0.0;
  const double aw = std::abs(w);
  if (aw < 12.0) {
    // gamma(a, w) = w^a e^{-w} sum_k w^k / (a (a+1) ... (a+k)).
    cplx term = 1.0 / a;
    cplx sum = term;
    for (int k = 1; k < 500; ++k) {
      term *= w / (a + k);
      sum += term;
      if (std::abs(term) < 1e-17 * std::abs(sum)) break;
    }
    return std::exp(a * std::log(w) - w) * sum;
  }
  // Upper function by modified Lentz on the Legendre continued fraction.
  const double tiny = 1e-300;
  cplx b = w + 1.0 - a;
  cplx c = 1.0 / tiny;
  cplx d = 1.0 / b;
  cplx h = d;
  for (int i = 1; i < 2000; ++i) {
    const double an = -i * (i - a);
    b += 2.0;
    d = an * d + b;
    if (std::abs(d) < tiny) d = tiny;
    c = b + an / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const cplx del = d * c;
    h *= del;
    if (std::abs(del - 1.0) < 2e-16) break;
  }
  const cplx upper = std::exp(a * std::log(w) - w) * h;
  return std::tgamma(a) - upper;
}

cplx WeightedExpIntegral(cplx z, double eta, double T) {
  if (eta == 0.0) return ExpIntegral(z, T);
  const double a = 1.0 - eta;
  if (std::abs(z) * T < 1e-8) {
    // e^{zs} ~ 1 + z s over the whole interval.
    return std::pow(T, a) / a + z * std::pow(T, a + 1.0) / (a + 1.0);
  }
  const cplx mz = -z;
  return std::exp(-a * std::log(mz)) * LowerIncompleteGamma(a, mz * T);
}

std::vector<double> ChebyshevLobatto(int n) {
  std::vector<double> x(n);
  if (n == 1) {
    x[0] = 0.0;
    return x;
  }
  for (int i = 0; i < n; ++i) {
    x[i] = -std::cos(M_PI * i / (n - 1));
  }
  return x;
}

}  // namespace spdekit
