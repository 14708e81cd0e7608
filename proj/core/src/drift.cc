#include "spdekit/drift.h"

#include <algorithm>
#include <cmath>
#include <limits>

#include <boost/math/tools/minima.hpp>

#include "spdekit/common.h"
#include "spdekit/rng.h"

namespace spdekit {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double Clamp(double s, double r, double theta) {
  const double a = std::min(std::abs(s), r);
  const double v = std::pow(a, 1.0 / theta);
  return s < 0 ? -v : v;
}

int NodesPerDimension(int m) {
  switch (m) {
    case 1: return 512;
    case 2: return 64;
    default: return 32;
  }
}

}  // namespace

const char* DriftKindName(DriftKind kind) {
  switch (kind) {
    case DriftKind::kZero: return "zero";
    case DriftKind::kClamp: return "b_r";
    case DriftKind::kTanh: return "tanh";
    case DriftKind::kCounterexample: return "counterexample";
  }
  return "zero";
}

DriftKind ParseDriftKind(const std::string& name) {
  if (name == "zero") return DriftKind::kZero;
  if (name == "b_r" || name == "clamp" || name == "structure") {
    return DriftKind::kClamp;
  }
  if (name == "tanh") return DriftKind::kTanh;
  if (name == "counterexample") return DriftKind::kCounterexample;
  Throw(ErrorCode::kInvalidSpec, "unknown drift kind '" + name + "'");
}

void DriftSpec::Validate() const {
  if (kind == DriftKind::kZero) return;
  if (!(theta > 0 && theta < 1)) {
    Throw(ErrorCode::kInvalidSpec, "drift theta must lie in (0, 1)");
  }
  if ((kind == DriftKind::kClamp || kind == DriftKind::kTanh) && !(r > 0)) {
    Throw(ErrorCode::kInvalidSpec, "drift r must be > 0");
  }
  auto finite = [](const SpatialFunction& f) {
    if (!std::isfinite(f.constant)) return false;
    for (double c : f.modes) {
      if (!std::isfinite(c)) return false;
    }
    return true;
  };
  if (!finite(g) || !finite(h)) {
    Throw(ErrorCode::kInvalidSpec, "drift g and h must be finite");
  }
}

double CounterexampleCutoff(double y) {
  const double a = std::abs(y);
  if (a <= 2.0) return 1.0;
  if (a >= 3.0) return 0.0;
  auto psi = [](double t) { return t > 0 ? std::exp(-1.0 / t) : 0.0; };
  const double s = a - 2.0;
  return psi(1.0 - s) / (psi(1.0 - s) + psi(s));
}

double CounterexampleNonlinearity(double xi, double y) {
  const double s = std::sin(2.0 * xi);
  const double sg = s > 0 ? 1.0 : (s < 0 ? -1.0 : 0.0);
  const double as = std::abs(s);
  const double ay = std::abs(y);
  const double t1 = 56.0 * sg * std::pow(as * ay * ay * ay, 0.25);
  const double t2 = 8.0 * std::pow(4.0, 7.0 / 12.0) * sg *
                    std::pow(std::sqrt(as) * std::pow(ay, 3.5), 0.25);
  return CounterexampleCutoff(y) * (t1 + t2 + 4.0 * y);
}

double ClampHolderConstant(double theta, double r) {
  // Attained at the pair (-r, r).
  return std::pow(2.0, 1.0 - theta) * std::pow(r, 1.0 / theta - theta);
}

double TanhHolderConstant(double theta, double r) {
  // sup |tanh(a) - tanh(b)| / |a - b|^theta is attained symmetrically,
  // 2 tanh(u) / (2u)^theta; maximize over u in log coordinates.
  auto neg = [theta](double lu) {
    const double u = std::exp(lu);
    return -std::tanh(u) / std::pow(u, theta);
  };
  const auto best =
      boost::math::tools::brent_find_minima(neg, -20.0, 20.0, 52);
  const double unit = -2.0 * best.second / std::pow(2.0, theta);
  return unit * std::pow(r, 1.0 - theta);
}

Drift::Drift(const DriftSpec& spec, const OperatorSpec& op,
             const Spectrum& blocks)
    : spec_(spec), op_(op) {
  spec_.Validate();
  op_.Validate();
  n_ = static_cast<int>(blocks.size());
  dim_ = blocks.empty() ? 1 : blocks[0].dim;
  if (spec_.kind == DriftKind::kCounterexample &&
      (op_.family != Family::kDampedWave || op_.m != 1)) {
    Throw(ErrorCode::kInvalidSpec,
          "the counterexample drift needs the one-dimensional damped wave");
  }
  const int m = op_.m;
  const double L = op_.side();
  volume_ = std::pow(L, m);
  mu_min_ = n_ > 0 ? blocks[0].base.mu : 1.0;
  for (const SpectralBlock& b : blocks) mu_min_ = std::min(mu_min_, b.base.mu);

  // Trapezoid nodes per axis; exact for the trigonometric products used here.
  const int q = NodesPerDimension(m);
  const bool periodic = op_.bc == Boundary::kPeriodic;
  std::vector<double> axis, axis_w;
  if (periodic) {
    for (int i = 0; i < q; ++i) {
      axis.push_back(L * i / q);
      axis_w.push_back(L / q);
    }
  } else {
    for (int i = 0; i <= q; ++i) {
      axis.push_back(L * i / q);
      axis_w.push_back((i == 0 || i == q) ? 0.5 * L / q : L / q);
    }
  }
  const int a = static_cast<int>(axis.size());
  int total = 1;
  for (int d = 0; d < m; ++d) total *= a;
  nodes_.resize(static_cast<size_t>(total) * m);
  weights_.resize(total);
  for (int i = 0; i < total; ++i) {
    int rest = i;
    double w = 1.0;
    for (int d = 0; d < m; ++d) {
      const int j = rest % a;
      rest /= a;
      nodes_[static_cast<size_t>(i) * m + d] = axis[j];
      w *= axis_w[j];
    }
    weights_[i] = w;
  }

  if (spec_.kind == DriftKind::kZero) return;

  const int extra = static_cast<int>(
      std::max(spec_.g.modes.size(), spec_.h.modes.size()));
  const int count = std::max(n_, extra);
  const std::vector<BaseMode> modes = EnumerateModes(op_, std::max(count, 1));
  Eigen::MatrixXd all(total, count);
  for (int i = 0; i < total; ++i) {
    for (int k = 0; k < count; ++k) {
      all(i, k) = ModeFunction(op_, modes[k], &nodes_[static_cast<size_t>(i) * m]);
    }
  }
  basis_ = all.leftCols(n_);
  to_field_ = Eigen::VectorXd::Ones(n_);
  if (dim_ == 2) {
    for (int k = 0; k < n_; ++k) to_field_(k) = 1.0 / std::sqrt(blocks[k].base.mu);
  }

  const Eigen::Map<const Eigen::VectorXd> w(weights_.data(), total);
  auto nodal = [&](const SpatialFunction& f) {
    Eigen::VectorXd v = Eigen::VectorXd::Constant(total, f.constant);
    for (size_t k = 0; k < f.modes.size(); ++k) v += f.modes[k] * all.col(k);
    return v;
  };
  const Eigen::VectorXd g_nodes = nodal(spec_.g);
  h_nodes_ = nodal(spec_.h);
  g_modes_ = basis_.transpose() * w.cwiseProduct(g_nodes);
  h_modes_ = basis_.transpose() * w.cwiseProduct(h_nodes_);
}

Eigen::VectorXd Drift::FieldValues(const Eigen::VectorXd& x) const {
  if (x.size() != state_size()) {
    Throw(ErrorCode::kSpectrumMismatch, "drift state has the wrong size");
  }
  Eigen::VectorXd coeff(n_);
  for (int k = 0; k < n_; ++k) coeff(k) = to_field_(k) * x(k * dim_);
  return basis_ * coeff;
}

double Drift::Functional(const Eigen::VectorXd& x) const {
  switch (spec_.kind) {
    case DriftKind::kClamp: {
      const Eigen::VectorXd f = FieldValues(x);
      KahanSum sum;
      for (int i = 0; i < f.size(); ++i) {
        sum.Add(weights_[i] * h_nodes_(i) * Clamp(f(i), spec_.r, spec_.theta));
      }
      return sum.value();
    }
    case DriftKind::kTanh: {
      double s = 0.0;
      for (int k = 0; k < n_; ++k) s += h_modes_(k) * to_field_(k) * x(k * dim_);
      return spec_.r * std::tanh(s / spec_.r);
    }
    default:
      return 0.0;
  }
}

Eigen::VectorXd Drift::Apply(const Eigen::VectorXd& x) const {
  Eigen::VectorXd out = Eigen::VectorXd::Zero(state_size());
  if (x.size() != state_size()) {
    Throw(ErrorCode::kSpectrumMismatch, "drift state has the wrong size");
  }
  const int slot = dim_ == 2 ? 1 : 0;
  switch (spec_.kind) {
    case DriftKind::kZero:
      return out;
    case DriftKind::kClamp:
    case DriftKind::kTanh: {
      const double J = Functional(x);
      for (int k = 0; k < n_; ++k) out(k * dim_ + slot) = g_modes_(k) * J;
      return out;
    }
    case DriftKind::kCounterexample: {
      const Eigen::VectorXd y = FieldValues(x);
      Eigen::VectorXd c(y.size());
      for (int i = 0; i < y.size(); ++i) {
        c(i) = weights_[i] * CounterexampleNonlinearity(nodes_[i], y(i));
      }
      const Eigen::VectorXd proj = basis_.transpose() * c;
      for (int k = 0; k < n_; ++k) out(k * dim_ + slot) = proj(k);
      return out;
    }
  }
  return out;
}

SpectralField Drift::Apply(const SpectralField& x) const {
  if (x.chart != Chart::kPhysical) {
    Throw(ErrorCode::kSpectrumMismatch, "drift expects physical coordinates");
  }
  Eigen::VectorXd real = x.coeffs.real();
  SpectralField out = x;
  out.coeffs = Apply(real).cast<cplx>();
  return out;
}

Eigen::VectorXd Drift::OutputValues(const Eigen::VectorXd& x) const {
  const Eigen::VectorXd b = Apply(x);
  Eigen::VectorXd coeff(n_);
  const int slot = dim_ == 2 ? 1 : 0;
  for (int k = 0; k < n_; ++k) coeff(k) = b(k * dim_ + slot);
  if (basis_.cols() == 0) return Eigen::VectorXd::Zero(node_count());
  return basis_ * coeff;
}

double Drift::FunctionalBound() const {
  switch (spec_.kind) {
    case DriftKind::kClamp: {
      double l1 = 0.0;
      for (int i = 0; i < h_nodes_.size(); ++i) {
        l1 += weights_[i] * std::abs(h_nodes_(i));
      }
      return l1 * std::pow(spec_.r, 1.0 / spec_.theta);
    }
    case DriftKind::kTanh:
      return spec_.r;
    case DriftKind::kZero:
      return 0.0;
    default:
      return kInf;
  }
}

double Drift::PointwiseBound() const {
  if (spec_.kind == DriftKind::kZero) return 0.0;
  if (spec_.kind == DriftKind::kCounterexample) return kInf;
  const Eigen::VectorXd g = basis_ * g_modes_;
  return g.cwiseAbs().maxCoeff() * FunctionalBound();
}

double Drift::SupBound() const {
  if (spec_.kind == DriftKind::kZero) return 0.0;
  if (spec_.kind == DriftKind::kCounterexample) return kInf;
  return g_modes_.norm() * FunctionalBound();
}

double Drift::HolderBound() const {
  const double field_scale =
      dim_ == 2 ? std::pow(mu_min_, -0.5 * spec_.theta) : 1.0;
  switch (spec_.kind) {
    case DriftKind::kZero:
      return 0.0;
    case DriftKind::kClamp: {
      double h2 = 0.0;
      for (int i = 0; i < h_nodes_.size(); ++i) {
        h2 += weights_[i] * h_nodes_(i) * h_nodes_(i);
      }
      return g_modes_.norm() * std::sqrt(h2) *
             ClampHolderConstant(spec_.theta, spec_.r) *
             std::pow(volume_, 0.5 * (1.0 - spec_.theta)) * field_scale;
    }
    case DriftKind::kTanh:
      return g_modes_.norm() * TanhHolderConstant(spec_.theta, spec_.r) *
             std::pow(h_modes_.norm(), spec_.theta) * field_scale;
    default:
      return kInf;
  }
}

namespace {

// Random pair (x, y) for probing Hoelder quotients at many scales.
void RandomPair(uint64_t seed, int index, int size, Eigen::VectorXd* x,
                Eigen::VectorXd* y) {
  const uint32_t i = static_cast<uint32_t>(index);
  const double s1 = std::pow(10.0, -1.0 + 2.0 * KeyedUniform(seed, i, 0, 0));
  const double s2 = std::pow(10.0, -4.0 + 4.0 * KeyedUniform(seed, i, 1, 0));
  x->resize(size);
  y->resize(size);
  for (int k = 0; k < size; ++k) {
    const auto z = KeyedNormalPair(seed, i, static_cast<uint32_t>(k), 7u);
    (*x)(k) = s1 * z[0];
    (*y)(k) = (*x)(k) + s2 * z[1];
  }
}

}  // namespace

HolderEstimate EstimateHolderSeminorm(const Drift& drift, int pairs,
                                      uint64_t seed) {
  HolderEstimate est;
  est.bound = drift.HolderBound();
  est.pairs = pairs;
  if (drift.is_zero()) return est;
  const double theta = drift.spec().theta;
  Eigen::VectorXd x, y;
  for (int p = 0; p < pairs; ++p) {
    RandomPair(seed, p, drift.state_size(), &x, &y);
    const double d = (x - y).norm();
    if (d == 0) continue;
    const double q = (drift.Apply(x) - drift.Apply(y)).norm() / std::pow(d, theta);
    est.seminorm = std::max(est.seminorm, q);
  }
  return est;
}

std::vector<double> PerModeHolderNorms(const Drift& drift, int pairs,
                                       uint64_t seed) {
  const int size = drift.state_size();
  const int dim = drift.dim();
  const int n = drift.block_count();
  std::vector<double> out(n, 0.0);
  if (drift.is_zero()) return out;
  const double theta = drift.spec().theta;
  const DriftKind kind = drift.spec().kind;
  Eigen::VectorXd x, y;
  if (kind == DriftKind::kClamp || kind == DriftKind::kTanh) {
    double semi = 0.0;
    for (int p = 0; p < pairs; ++p) {
      RandomPair(seed, p, size, &x, &y);
      const double d = (x - y).norm();
      if (d == 0) continue;
      semi = std::max(semi, std::abs(drift.Functional(x) - drift.Functional(y)) /
                                std::pow(d, theta));
    }
    const double total = drift.FunctionalBound() + semi;
    for (int k = 0; k < n; ++k) out[k] = std::abs(drift.g_modes()(k)) * total;
    return out;
  }
  std::vector<double> sup(n, 0.0), semi(n, 0.0);
  const int slot = dim == 2 ? 1 : 0;
  for (int p = 0; p < pairs; ++p) {
    RandomPair(seed, p, size, &x, &y);
    const Eigen::VectorXd bx = drift.Apply(x);
    const Eigen::VectorXd by = drift.Apply(y);
    const double d = std::pow((x - y).norm(), theta);
    for (int k = 0; k < n; ++k) {
      const double a = bx(k * dim + slot), b = by(k * dim + slot);
      sup[k] = std::max({sup[k], std::abs(a), std::abs(b)});
      if (d > 0) semi[k] = std::max(semi[k], std::abs(a - b) / d);
    }
  }
  for (int k = 0; k < n; ++k) out[k] = sup[k] + semi[k];
  return out;
}

}  // namespace spdekit
