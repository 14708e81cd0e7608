#include "spdekit/spectral.h"

#include <algorithm>
#include <cmath>
#include <map>
#include <tuple>

#include "spdekit/common.h"

namespace spdekit {

const char* FamilyName(Family family) {
  switch (family) {
    case Family::kHeat: return "heat";
    case Family::kDampedWave: return "damped_wave";
    case Family::kDampedBeam: return "damped_beam";
  }
  return "?";
}

Family ParseFamily(const std::string& name) {
  if (name == "heat") return Family::kHeat;
  if (name == "damped_wave" || name == "wave") return Family::kDampedWave;
  if (name == "damped_beam" || name == "beam") return Family::kDampedBeam;
  Throw(ErrorCode::kInvalidSpec, "unknown family '" + name + "'");
}

const char* BoundaryName(Boundary bc) {
  return bc == Boundary::kDirichlet ? "dirichlet" : "periodic";
}

Boundary ParseBoundary(const std::string& name) {
  if (name == "dirichlet") return Boundary::kDirichlet;
  if (name == "periodic") return Boundary::kPeriodic;
  Throw(ErrorCode::kInvalidSpec, "unknown boundary condition '" + name + "'");
}

double OperatorSpec::side() const {
  if (length > 0) return length;
  return bc == Boundary::kDirichlet ? 1.0 : 2.0 * M_PI;
}

void OperatorSpec::Validate() const {
  if (m < 1 || m > 3) Throw(ErrorCode::kInvalidSpec, "m must be 1, 2 or 3");
  if (!(gamma >= 0)) Throw(ErrorCode::kInvalidSpec, "gamma must be >= 0");
  if (length < 0) Throw(ErrorCode::kInvalidSpec, "length must be positive");
  if (damped()) {
    if (!(rho > 0)) Throw(ErrorCode::kInvalidSpec, "rho must be > 0");
    if (!(alpha >= 0 && alpha < 1)) {
      Throw(ErrorCode::kInvalidSpec, "alpha must lie in [0, 1)");
    }
  } else if (!(beta > 0)) {
    Throw(ErrorCode::kInvalidSpec, "beta must be > 0");
  }
}

std::vector<BaseMode> EnumerateModes(const OperatorSpec& spec, int n) {
  if (n < 1) Throw(ErrorCode::kInvalidSpec, "truncation must be >= 1");
  const int m = spec.m;
  const bool periodic = spec.bc == Boundary::kPeriodic;
  const double L = spec.side();
  const double scale =
      periodic ? (2 * M_PI / L) * (2 * M_PI / L) : (M_PI / L) * (M_PI / L);

  using Key = std::tuple<int, std::array<int, 3>, int>;
  std::vector<Key> keys;
  int radius = 2;
  while (true) {
    keys.clear();
    const int r2 = radius * radius;
    const int lo = periodic ? -radius : 1;
    std::array<int, 3> j{{0, 0, 0}};
    std::array<int, 3> hi{{0, 0, 0}};
    std::array<int, 3> start{{0, 0, 0}};
    for (int d = 0; d < 3; ++d) {
      start[d] = d < m ? lo : 0;
      hi[d] = d < m ? radius : 0;
    }
    for (j[0] = start[0]; j[0] <= hi[0]; ++j[0]) {
      for (j[1] = start[1]; j[1] <= hi[1]; ++j[1]) {
        for (j[2] = start[2]; j[2] <= hi[2]; ++j[2]) {
          const int s = j[0] * j[0] + j[1] * j[1] + j[2] * j[2];
          if (s == 0 || s > r2) continue;
          if (periodic) {
            // Half lattice: first nonzero component positive.
            int first = 0;
            for (int d = 0; d < m; ++d) {
              if (j[d] != 0) {
                first = j[d];
                break;
              }
            }
            if (first < 0) continue;
            keys.emplace_back(s, j, 0);
            keys.emplace_back(s, j, 1);
          } else {
            keys.emplace_back(s, j, 0);
          }
        }
      }
    }
    if (static_cast<int>(keys.size()) >= n) break;
    radius *= 2;
  }
  std::sort(keys.begin(), keys.end());
  std::map<int, int> shell;
  for (const auto& k : keys) ++shell[std::get<0>(k)];

  std::vector<BaseMode> modes(n);
  for (int i = 0; i < n; ++i) {
    const auto& [s, j, parity] = keys[i];
    BaseMode& mode = modes[i];
    mode.index = i;
    mode.laplace = scale * s;
    mode.mu = spec.family == Family::kDampedBeam ? mode.laplace * mode.laplace
                                                 : mode.laplace;
    mode.lattice = j;
    mode.parity = parity;
    mode.multiplicity = shell[s];
  }
  return modes;
}

double ModeFunction(const OperatorSpec& spec, const BaseMode& mode,
                    const double* xi) {
  const double L = spec.side();
  if (spec.bc == Boundary::kDirichlet) {
    double v = 1.0;
    const double c = std::sqrt(2.0 / L);
    for (int d = 0; d < spec.m; ++d) {
      v *= c * std::sin(mode.lattice[d] * M_PI * xi[d] / L);
    }
    return v;
  }
  double phase = 0.0;
  for (int d = 0; d < spec.m; ++d) {
    phase += mode.lattice[d] * xi[d];
  }
  phase *= 2 * M_PI / L;
  const double c = std::sqrt(2.0 / std::pow(L, spec.m));
  return c * (mode.parity == 0 ? std::cos(phase) : std::sin(phase));
}

namespace {

SpectralBlock HeatBlock(const OperatorSpec& spec, const BaseMode& mode) {
  SpectralBlock b;
  b.base = mode;
  b.family = Family::kHeat;
  b.dim = 1;
  const double lam = -std::pow(mode.mu, spec.beta);
  b.lambda_plus = b.lambda_minus = lam;
  b.b_plus = b.b_minus = 1.0;
  b.generator(0, 0) = lam;
  return b;
}

SpectralBlock DampedBlock(const OperatorSpec& spec, const BaseMode& mode) {
  const double mu = mode.mu;
  const double rho = spec.rho;
  const double damp = rho * std::pow(mu, spec.alpha);
  const double crit = 4.0 * std::pow(mu, 1.0 - 2.0 * spec.alpha);
  if (std::abs(rho * rho - crit) <= 1e-12 * std::max(rho * rho, crit)) {
    Throw(ErrorCode::kDegenerateMode,
          "mode " + std::to_string(mode.index + 1) +
              ": rho^2 = 4 mu^{1-2 alpha}, eigenvalues coincide");
  }
  SpectralBlock b;
  b.base = mode;
  b.family = spec.family;
  b.dim = 2;
  const double disc = damp * damp - 4.0 * mu;
  if (disc > 0) {
    // Real pair; form the large root first and use the product identity
    // to avoid cancellation in the small one.
    const double lm = -0.5 * (damp + std::sqrt(disc));
    b.lambda_minus = lm;
    b.lambda_plus = mu / lm;
  } else {
    const double im = 0.5 * std::sqrt(-disc);
    b.lambda_plus = cplx(-0.5 * damp, im);
    b.lambda_minus = cplx(-0.5 * damp, -im);
  }
  const double np = mu + std::norm(b.lambda_plus);
  const double nm = mu + std::norm(b.lambda_minus);
  const double e = 1.0 / std::sqrt(np);
  b.base.base_norm = e;
  b.chi = std::sqrt(np / nm);
  b.b_plus = 1.0 / (e * (b.lambda_plus - b.lambda_minus));
  b.b_minus = -b.b_plus / b.chi;
  const double s = std::sqrt(mu);
  b.to_phys(0, 0) = e * s;
  b.to_phys(1, 0) = e * b.lambda_plus;
  b.to_phys(0, 1) = b.chi * e * s;
  b.to_phys(1, 1) = b.chi * e * b.lambda_minus;
  const cplx det = e * e * b.chi * s * (b.lambda_minus - b.lambda_plus);
  b.to_eigen(0, 0) = b.chi * e * b.lambda_minus / det;
  b.to_eigen(0, 1) = -b.chi * e * s / det;
  b.to_eigen(1, 0) = -e * b.lambda_plus / det;
  b.to_eigen(1, 1) = e * s / det;
  b.generator << 0.0, s, -s, -damp;
  return b;
}

}  // namespace

Spectrum BuildSpectrum(const OperatorSpec& spec, int n) {
  spec.Validate();
  const std::vector<BaseMode> modes = EnumerateModes(spec, n);
  Spectrum blocks;
  blocks.reserve(n);
  for (const BaseMode& mode : modes) {
    blocks.push_back(spec.damped() ? DampedBlock(spec, mode)
                                   : HeatBlock(spec, mode));
  }
  return blocks;
}

Eigen::Vector2d InputVector(const SpectralBlock& block, double gamma) {
  if (block.dim == 1) {
    return Eigen::Vector2d(std::pow(block.base.mu, -0.5 * gamma), 0.0);
  }
  return Eigen::Vector2d(0.0, std::pow(block.base.mu, -gamma));
}

Eigen::Matrix2d BlockExp(const SpectralBlock& block, double t) {
  if (block.dim == 1) {
    Eigen::Matrix2d out = Eigen::Matrix2d::Zero();
    out(0, 0) = std::exp(block.lambda_plus.real() * t);
    return out;
  }
  return BlockFunction(block, [t](cplx z) { return std::exp(z * t); }).real();
}

Eigen::Matrix2d BlockExpIntegral(const SpectralBlock& block, double t) {
  if (block.dim == 1) {
    Eigen::Matrix2d out = Eigen::Matrix2d::Zero();
    const double l = block.lambda_plus.real();
    out(0, 0) = std::abs(l * t) < 1e-8 ? t : std::expm1(l * t) / l;
    return out;
  }
  return BlockFunction(block, [t](cplx z) { return ExpIntegral(z, t); }).real();
}

SpectralField SpectralField::Zeros(const Spectrum& blocks, Chart chart) {
  SpectralField f;
  f.n = static_cast<int>(blocks.size());
  f.dim = blocks.empty() ? 1 : blocks.front().dim;
  f.chart = chart;
  f.coeffs = Eigen::VectorXcd::Zero(f.n * f.dim);
  return f;
}

SpectralField SpectralField::FromReal(const Spectrum& blocks,
                                      const Eigen::VectorXd& physical) {
  SpectralField f = Zeros(blocks, Chart::kPhysical);
  if (physical.size() != f.coeffs.size()) {
    Throw(ErrorCode::kSpectrumMismatch, "state length does not match spectrum");
  }
  f.coeffs = physical.cast<cplx>();
  return f;
}

Eigen::Vector2cd SpectralField::pair(int k) const {
  Eigen::Vector2cd v = Eigen::Vector2cd::Zero();
  for (int i = 0; i < dim; ++i) v(i) = coeffs(k * dim + i);
  return v;
}

void SpectralField::set_pair(int k, const Eigen::Vector2cd& v) {
  for (int i = 0; i < dim; ++i) coeffs(k * dim + i) = v(i);
}

void CheckCompatible(const Spectrum& blocks, const SpectralField& x) {
  const int dim = blocks.empty() ? 1 : blocks.front().dim;
  if (x.n != static_cast<int>(blocks.size()) || x.dim != dim ||
      x.coeffs.size() != x.n * x.dim) {
    Throw(ErrorCode::kSpectrumMismatch,
          "field has " + std::to_string(x.n) + " blocks of dim " +
              std::to_string(x.dim) + ", spectrum has " +
              std::to_string(blocks.size()) + " of dim " + std::to_string(dim));
  }
}

SpectralField ToChart(const Spectrum& blocks, const SpectralField& x,
                      Chart chart) {
  CheckCompatible(blocks, x);
  if (x.chart == chart || x.dim == 1) {
    SpectralField y = x;
    y.chart = chart;
    return y;
  }
  SpectralField y = x;
  y.chart = chart;
  for (int k = 0; k < x.n; ++k) {
    const Eigen::Matrix2cd& M =
        chart == Chart::kEigen ? blocks[k].to_eigen : blocks[k].to_phys;
    y.set_pair(k, M * x.pair(k));
  }
  return y;
}

Eigen::VectorXd RealPhysical(const Spectrum& blocks, const SpectralField& x) {
  const SpectralField p = ToChart(blocks, x, Chart::kPhysical);
  const double scale = p.coeffs.norm();
  const double imag = p.coeffs.imag().norm();
  if (imag > 1e-12 * std::max(scale, 1e-300) && imag > 1e-300) {
    Throw(ErrorCode::kSpectrumMismatch,
          "physical reconstruction is not real (relative imaginary part " +
              std::to_string(imag / scale) + ")");
  }
  return p.coeffs.real();
}

double FieldNorm(const Spectrum& blocks, const SpectralField& x) {
  return ToChart(blocks, x, Chart::kPhysical).coeffs.norm();
}

namespace {

template <typename F>
SpectralField DiagonalApply(const Spectrum& blocks, const SpectralField& x,
                            F f) {
  SpectralField e = ToChart(blocks, x, Chart::kEigen);
  for (int k = 0; k < e.n; ++k) {
    for (int i = 0; i < e.dim; ++i) {
      e.coeffs(k * e.dim + i) *= f(blocks[k].eigenvalue(i), k);
    }
  }
  return ToChart(blocks, e, x.chart);
}

}  // namespace

SpectralField SemigroupApply(const Spectrum& blocks, double t,
                             const SpectralField& x) {
  if (t < 0) Throw(ErrorCode::kOutOfRange, "semigroup time must be >= 0");
  return DiagonalApply(blocks, x, [t](cplx l, int) { return std::exp(l * t); });
}

SpectralField FractionalPowerApply(const Spectrum& blocks, double theta,
                                   const SpectralField& x) {
  if (!(theta > 0)) Throw(ErrorCode::kOutOfRange, "power must be > 0");
  return DiagonalApply(blocks, x,
                       [theta](cplx l, int) { return std::pow(-l, theta); });
}

SpectralField ResolventApply(const Spectrum& blocks, cplx lambda,
                             const SpectralField& x) {
  for (size_t k = 0; k < blocks.size(); ++k) {
    for (int i = 0; i < blocks[k].dim; ++i) {
      if (std::abs(lambda - blocks[k].eigenvalue(i)) <= 1e-12) {
        Throw(ErrorCode::kSpectrumHit,
              "lambda is an eigenvalue of block " + std::to_string(k + 1));
      }
    }
  }
  return DiagonalApply(blocks, x,
                       [lambda](cplx l, int) { return 1.0 / (lambda - l); });
}

SpectralField GeneratorApply(const Spectrum& blocks, const SpectralField& x) {
  return DiagonalApply(blocks, x, [](cplx l, int) { return l; });
}

SpectralField Truncate(const SpectralField& x, int n) {
  SpectralField y = x;
  for (int k = n; k < x.n; ++k) {
    y.set_pair(k, Eigen::Vector2cd::Zero());
  }
  return y;
}

AsymptoticReport FitAsymptotics(const OperatorSpec& spec,
                                const Spectrum& blocks) {
  if (blocks.size() < 50) {
    Throw(ErrorCode::kInsufficientModes,
          "asymptotic fit needs at least 50 blocks, got " +
              std::to_string(blocks.size()));
  }
  AsymptoticReport report;
  // Last decile only: for alpha > 1/2 the correction to the leading power
  // is of relative size mu^{1 - 2 alpha}, which decays slowly.
  const size_t start = blocks.size() - std::max<size_t>(10, blocks.size() / 10);
  std::vector<double> mu;
  std::array<std::vector<double>, 4> v;
  for (size_t k = start; k < blocks.size(); ++k) {
    const SpectralBlock& b = blocks[k];
    mu.push_back(b.base.mu);
    v[0].push_back(std::abs(b.lambda_plus));
    v[1].push_back(std::abs(b.lambda_minus));
    v[2].push_back(b.chi);
    v[3].push_back(b.base.base_norm);
  }
  report.fitted_blocks = static_cast<int>(mu.size());
  for (int i = 0; i < 4; ++i) report.slopes[i] = FitLogLog(mu, v[i]).slope;
  if (!spec.damped()) {
    report.predicted = {spec.beta, spec.beta, 0.0, 0.0};
  } else if (spec.alpha > 0.5) {
    report.predicted = {1.0 - spec.alpha, spec.alpha, 0.5 - spec.alpha, -0.5};
  } else {
    report.predicted = {0.5, 0.5, 0.0, -0.5};
  }
  return report;
}

void WriteSpectrumRows(std::ostream& os, const Spectrum& blocks) {
  os << "k,mu,re_lp,im_lp,re_lm,im_lm,chi,b_plus_re,b_plus_im,b_minus_re,"
        "b_minus_im\n";
  os.precision(17);
  for (const SpectralBlock& b : blocks) {
    os << b.base.index + 1 << ',' << b.base.mu << ',' << b.lambda_plus.real()
       << ',' << b.lambda_plus.imag() << ',' << b.lambda_minus.real() << ','
       << b.lambda_minus.imag() << ',' << b.chi << ',' << b.b_plus.real() << ','
       << b.b_plus.imag() << ',' << b.b_minus.real() << ','
       << b.b_minus.imag() << '\n';
  }
}

}  // namespace spdekit
