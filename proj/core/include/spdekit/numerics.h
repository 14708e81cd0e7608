#pragma once

#include <complex>
#include <functional>
#include <vector>

namespace spdekit {

using cplx = std::complex<double>;

struct QuadratureRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

// Gauss-Legendre rule on [-1, 1].
QuadratureRule GaussLegendre(int n);

// Gauss-Hermite rule for the standard normal density: sum w_i f(z_i)
// approximates E[f(Z)], Z ~ N(0, 1). Weights sum to one.
QuadratureRule GaussHermiteProbabilist(int n);

// Composite Gauss-Legendre over [a, b] with `panels` equal panels.
double CompositeGaussLegendre(const std::function<double(double)>& f, double a,
                              double b, int panels, int order = 64);

// Nodes and weights of the composite rule above, for callers that evaluate
// vector-valued integrands.
QuadratureRule CompositeGaussLegendreRule(double a, double b, int panels,
                                          int order = 64);

// e^w - 1 without cancellation for small |w|.
cplx Expm1(cplx w);

// (e^{z t} - 1) / z, with the z -> 0 limit t.
cplx ExpIntegral(cplx z, double t);

// Lower incomplete gamma function gamma(a, w) for real a > 0 and complex w
// off the negative real axis, principal branch.
cplx LowerIncompleteGamma(double a, cplx w);

// Integral over [0, T] of s^{-eta} e^{z s} ds for Re z < 0 (or z = 0) and
// eta in [0, 1).
cplx WeightedExpIntegral(cplx z, double eta, double T);

// Chebyshev points of the second kind (extrema) on [-1, 1], ascending.
std::vector<double> ChebyshevLobatto(int n);

}  // namespace spdekit
