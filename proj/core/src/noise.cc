#include "spdekit/noise.h"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>

#include <Eigen/Eigenvalues>

#include "spdekit/common.h"
#include "spdekit/controllability.h"
#include "spdekit/rng.h"

namespace spdekit {

void NoiseSpec::Validate() const {
  if (!(gamma >= 0)) Throw(ErrorCode::kInvalidSpec, "noise gamma must be >= 0");
  if (!(eta > 0 && eta < 1)) {
    Throw(ErrorCode::kInvalidSpec, "eta must lie in (0, 1)");
  }
  if (truncation < 1) Throw(ErrorCode::kInvalidSpec, "truncation must be >= 1");
}

Eigen::Vector2d NoisePath::Normals(int step, int mode) const {
  const auto z = KeyedNormalPair(seed_, static_cast<uint32_t>(step),
                                 static_cast<uint32_t>(mode),
                                 static_cast<uint32_t>(sample_));
  return {z[0], z[1]};
}

uint64_t NoiseChecksum(const NoisePath& path, int modes) {
  // FNV-1a over the raw bits, step-major.
  uint64_t h = 1469598103934665603ull;
  for (int s = 0; s < path.steps(); ++s) {
    for (int k = 0; k < modes; ++k) {
      const Eigen::Vector2d z = path.Normals(s, k);
      for (int i = 0; i < 2; ++i) {
        uint64_t bits;
        std::memcpy(&bits, &z(i), sizeof(bits));
        for (int b = 0; b < 8; ++b) {
          h ^= (bits >> (8 * b)) & 0xff;
          h *= 1099511628211ull;
        }
      }
    }
  }
  return h;
}

double WeightedTraceTerm(const SpectralBlock& block, double gamma, double eta,
                         double T) {
  const Eigen::Vector2d g = InputVector(block, gamma);
  if (block.dim == 1) {
    return g(0) * g(0) *
           WeightedExpIntegral(2.0 * block.lambda_plus, eta, T).real();
  }
  const Eigen::Vector2cd c = block.to_eigen * g.cast<cplx>();
  cplx sum = 0.0;
  for (int i = 0; i < 2; ++i) {
    for (int j = 0; j < 2; ++j) {
      const cplx gram = block.to_phys.col(j).dot(block.to_phys.col(i));
      const cplx z = block.eigenvalue(i) + std::conj(block.eigenvalue(j));
      sum += c(i) * std::conj(c(j)) * gram * WeightedExpIntegral(z, eta, T);
    }
  }
  return sum.real();
}

bool DyadicVerdict(double s_quarter, double s_half, double s_full,
                   double* ratio) {
  const double num = s_full - s_half;
  const double den = s_half - s_quarter;
  double r;
  if (num <= 0 && den <= 0) {
    r = 0.0;
  } else if (den <= 0) {
    r = std::numeric_limits<double>::infinity();
  } else {
    r = num / den;
  }
  if (ratio) *ratio = r;
  return r < 0.98;
}

namespace {

void FinishSeries(const std::vector<double>& partial, double* ratio,
                  double* tail, bool* convergent) {
  const size_t n = partial.size();
  if (n < 4) {
    *ratio = 0;
    *tail = 0;
    *convergent = true;
    return;
  }
  const double sf = partial[n - 1];
  const double sh = partial[n / 2 - 1];
  const double sq = partial[n / 4 - 1];
  *convergent = DyadicVerdict(sq, sh, sf, ratio);
  *tail = sf != 0 ? (sf - sh) / sf : 0.0;
}

}  // namespace

TraceScan WeightedTraceScan(const Spectrum& blocks, double gamma, double eta,
                            double T) {
  TraceScan scan;
  scan.eta = eta;
  scan.partial.reserve(blocks.size());
  KahanSum sum;
  for (const SpectralBlock& b : blocks) {
    sum.Add(WeightedTraceTerm(b, gamma, eta, T));
    scan.partial.push_back(sum.value());
  }
  FinishSeries(scan.partial, &scan.ratio, &scan.tail_fraction,
               &scan.convergent);
  return scan;
}

double AnalyticTraceIndex(const OperatorSpec& spec, bool* convergent) {
  double index;
  bool ok;
  if (spec.family == Family::kHeat) {
    index = (spec.m - 2.0 * spec.gamma) / (2.0 * spec.beta);
    ok = index < 1.0;
  } else {
    const double delta =
        (spec.family == Family::kDampedWave ? 2.0 : 4.0) / spec.m;
    index = delta * (2.0 * spec.gamma + spec.alpha);
    ok = index > 1.0;
  }
  if (convergent) *convergent = ok;
  return index;
}

TraceReport WeightedTraceTest(const OperatorSpec& spec, double T,
                              int truncation, std::vector<double> etas) {
  if (!(T > 0)) Throw(ErrorCode::kOutOfRange, "T must be > 0");
  if (etas.empty()) {
    for (int i = 1; i <= 9; ++i) etas.push_back(0.1 * i);
  }
  const Spectrum blocks = BuildSpectrum(spec, truncation);
  TraceReport report;
  report.truncation = truncation;
  report.T = T;
  for (double eta : etas) {
    report.scans.push_back(WeightedTraceScan(blocks, spec.gamma, eta, T));
  }
  for (size_t i = 0; i < report.scans.size(); ++i) {
    if (report.scans[i].ratio < report.scans[report.best].ratio) {
      report.best = static_cast<int>(i);
    }
    report.numeric_convergent |= report.scans[i].convergent;
  }
  report.analytic_index =
      AnalyticTraceIndex(spec, &report.analytic_convergent);
  return report;
}

ConvolutionStepper::ConvolutionStepper(const Spectrum& b, double g, double h)
    : blocks(b), dt(h), gamma(g) {
  if (!(dt > 0)) Throw(ErrorCode::kOutOfRange, "dt must be > 0");
  for (const SpectralBlock& block : blocks) {
    transition.push_back(BlockExp(block, dt));
    const Eigen::Matrix2d Q = BlockGramian(block, gamma, dt);
    Eigen::Matrix2d L = Eigen::Matrix2d::Zero();
    if (block.dim == 1) {
      if (!(Q(0, 0) > 0)) {
        Throw(ErrorCode::kSingularGramian, "zero step covariance");
      }
      L(0, 0) = std::sqrt(Q(0, 0));
    } else {
      // Symmetric square root; tolerates the near-rank-one blocks that
      // appear for short steps at large mu.
      Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es(Q);
      if (!(es.eigenvalues()(1) > 0)) {
        Throw(ErrorCode::kSingularGramian, "zero step covariance");
      }
      const Eigen::Vector2d ev = es.eigenvalues().cwiseMax(0.0);
      L = es.eigenvectors() * ev.cwiseSqrt().asDiagonal() *
          es.eigenvectors().transpose();
    }
    factor.push_back(L);
  }
}

int ConvolutionStepper::state_size() const {
  return blocks.empty() ? 0
                        : static_cast<int>(blocks.size()) * blocks[0].dim;
}

Eigen::VectorXd ConvolutionStepper::Innovation(const NoisePath& path,
                                               int step) const {
  const int d = blocks.empty() ? 1 : blocks[0].dim;
  Eigen::VectorXd out(state_size());
  for (size_t k = 0; k < blocks.size(); ++k) {
    const Eigen::Vector2d z = path.Normals(step, static_cast<int>(k));
    if (d == 1) {
      out(k) = factor[k](0, 0) * z(0);
    } else {
      out.segment<2>(2 * k) = factor[k] * z;
    }
  }
  return out;
}

void ConvolutionStepper::Step(const NoisePath& path, int step,
                              Eigen::VectorXd* x) const {
  const int d = blocks.empty() ? 1 : blocks[0].dim;
  for (size_t k = 0; k < blocks.size(); ++k) {
    const Eigen::Vector2d z = path.Normals(step, static_cast<int>(k));
    if (d == 1) {
      (*x)(k) = transition[k](0, 0) * (*x)(k) + factor[k](0, 0) * z(0);
    } else {
      const Eigen::Vector2d y = x->segment<2>(2 * k);
      x->segment<2>(2 * k) = transition[k] * y + factor[k] * z;
    }
  }
}

std::vector<CovarianceEstimate> SampleConvolutionCovariance(
    const Spectrum& blocks, double gamma, double T, int steps, int samples,
    uint64_t seed, int threads) {
  if (steps < 1 || samples < 2) {
    Throw(ErrorCode::kOutOfRange, "need steps >= 1 and samples >= 2");
  }
  const ConvolutionStepper stepper(blocks, gamma, T / steps);
  const int n = static_cast<int>(blocks.size());
  const int d = blocks.empty() ? 1 : blocks[0].dim;
  // Fixed chunking keeps the reduction order independent of `threads`.
  const int chunks = std::min(samples, 64);
  struct Acc {
    std::vector<KahanSum> first, second;  // per block, 4 entries each
  };
  std::vector<Acc> acc(chunks);
  ParallelFor(chunks, threads, [&](int c) {
    Acc& a = acc[c];
    a.first.assign(4 * n, KahanSum());
    a.second.assign(4 * n, KahanSum());
    const int lo = static_cast<int>(static_cast<int64_t>(samples) * c / chunks);
    const int hi =
        static_cast<int>(static_cast<int64_t>(samples) * (c + 1) / chunks);
    Eigen::VectorXd x(stepper.state_size());
    for (int s = lo; s < hi; ++s) {
      NoisePath path(seed, T / steps, steps, s);
      x.setZero();
      for (int i = 0; i < steps; ++i) stepper.Step(path, i, &x);
      for (int k = 0; k < n; ++k) {
        for (int i = 0; i < d; ++i) {
          for (int j = 0; j < d; ++j) {
            const double p = x(k * d + i) * x(k * d + j);
            a.first[4 * k + 2 * i + j].Add(p);
            a.second[4 * k + 2 * i + j].Add(p * p);
          }
        }
      }
    }
  });
  std::vector<CovarianceEstimate> out(n);
  for (int k = 0; k < n; ++k) {
    CovarianceEstimate& e = out[k];
    e.k = k;
    e.dim = d;
    e.exact = BlockGramian(blocks[k], gamma, T);
    for (int i = 0; i < d; ++i) {
      for (int j = 0; j < d; ++j) {
        KahanSum s1, s2;
        for (int c = 0; c < chunks; ++c) {
          s1.Add(acc[c].first[4 * k + 2 * i + j].value());
          s2.Add(acc[c].second[4 * k + 2 * i + j].value());
        }
        const double mean = s1.value() / samples;
        const double var =
            std::max(0.0, s2.value() / samples - mean * mean) *
            samples / (samples - 1.0);
        e.mean_product(i, j) = mean;
        e.stderr_product(i, j) = std::sqrt(var / samples);
        const double z =
            std::abs(mean - e.exact(i, j)) / e.stderr_product(i, j);
        e.max_zscore = std::max(e.max_zscore, z);
      }
    }
  }
  return out;
}

SeriesReport HolderSeries(const Spectrum& blocks, const OperatorSpec& spec,
                          const std::vector<double>& norms, HolderForm form) {
  if (norms.size() < blocks.size()) {
    Throw(ErrorCode::kSpectrumMismatch, "one Hoelder norm per block needed");
  }
  SeriesReport r;
  KahanSum sum;
  for (size_t k = 0; k < blocks.size(); ++k) {
    const SpectralBlock& b = blocks[k];
    const double c2 = norms[k] * norms[k];
    double term = 0.0;
    switch (form) {
      case HolderForm::kHeat:
        term = c2 / std::pow(b.base.mu, spec.beta);
        break;
      case HolderForm::kDampedReduced:
        term = c2 * std::pow(b.base.mu, -spec.alpha);
        break;
      case HolderForm::kDampedFull: {
        const double lp = std::abs(b.lambda_plus);
        const double lm = std::abs(b.lambda_minus);
        const double e2 = b.base.base_norm * b.base.base_norm;
        term = c2 * e2 *
               (lp * lp / std::abs(b.lambda_plus.real()) +
                b.chi * b.chi * lm * lm / std::abs(b.lambda_minus.real()));
        break;
      }
    }
    sum.Add(term);
    r.partial.push_back(sum.value());
  }
  FinishSeries(r.partial, &r.ratio, &r.tail_fraction, &r.convergent);
  return r;
}

}  // namespace spdekit
