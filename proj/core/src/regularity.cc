#include "spdekit/regularity.h"

#include <algorithm>
#include <cmath>
#include <limits>

#include "spdekit/common.h"
#include "spdekit/rng.h"

namespace spdekit {

namespace {

int BlockDim(const Spectrum& blocks) {
  if (blocks.empty()) Throw(ErrorCode::kInvalidSpec, "empty spectrum");
  return blocks.front().dim;
}

// Largest singular value of the leading d x d part, closed form.
double Norm2(const Eigen::Matrix2cd& m, int d) {
  if (d == 1) return std::abs(m(0, 0));
  const double fro = m.squaredNorm();
  const double det = std::abs(m.determinant());
  const double disc = std::max(0.0, fro * fro - 4.0 * det * det);
  return std::sqrt(0.5 * (fro + std::sqrt(disc)));
}

double MaxRealPart(const Spectrum& blocks) {
  double out = -std::numeric_limits<double>::infinity();
  for (const SpectralBlock& b : blocks) {
    out = std::max(out, b.lambda_plus.real());
    if (b.dim == 2) out = std::max(out, b.lambda_minus.real());
  }
  return out;
}

struct LinePoint {
  double r = 0.0;
  double ar = 0.0;
};

LinePoint EvaluateBlock(const SpectralBlock& b, cplx z) {
  for (int i = 0; i < b.dim; ++i) {
    const cplx lam = b.eigenvalue(i);
    if (std::abs(z - lam) <= 1e-12 * (1.0 + std::abs(lam))) {
      Throw(ErrorCode::kSpectrumHit, "scan point on the spectrum");
    }
  }
  const Eigen::Matrix2cd r =
      BlockFunction(b, [z](cplx lam) { return 1.0 / (z - lam); });
  const Eigen::Matrix2cd ar =
      BlockFunction(b, [z](cplx lam) { return lam / (z - lam); });
  return {Norm2(r, b.dim), Norm2(ar, b.dim)};
}

}  // namespace

ForcingPath RandomForcing(const Spectrum& blocks, double T, int samples,
                          uint64_t seed) {
  const int d = BlockDim(blocks);
  const int size = d * static_cast<int>(blocks.size());
  ForcingPath f;
  f.T = T;
  f.samples.assign(samples, Eigen::VectorXcd::Zero(size));
  for (int j = 0; j < samples; ++j) {
    for (int i = 0; i < size; i += 2) {
      const auto z = KeyedNormalPair(seed, static_cast<uint32_t>(j),
                                     static_cast<uint32_t>(i / 2), 0);
      f.samples[j](i) = z[0];
      if (i + 1 < size) f.samples[j](i + 1) = z[1];
    }
  }
  return f;
}

ResolventScan ScanResolventLine(const Spectrum& blocks, double zeta,
                                const ResolventScanOptions& options) {
  BlockDim(blocks);
  if (!(zeta > MaxRealPart(blocks))) {
    Throw(ErrorCode::kOutOfRange,
          "the line Re z = " + std::to_string(zeta) +
              " is not right of the spectrum");
  }
  if (options.points < 2 || !(options.eta_min > 0.0) ||
      !(options.eta_max > options.eta_min)) {
    Throw(ErrorCode::kOutOfRange, "bad eta grid");
  }
  ResolventScan s;
  s.zeta = zeta;
  const double l0 = std::log(options.eta_min);
  const double l1 = std::log(options.eta_max);
  for (int i = 0; i < options.points; ++i) {
    s.eta.push_back(std::exp(l0 + (l1 - l0) * i / (options.points - 1)));
  }
  s.eta.push_back(0.0);
  if (options.witnesses) {
    for (const SpectralBlock& b : blocks) {
      s.eta.push_back(std::abs(b.lambda_plus.imag()));
    }
  }
  std::sort(s.eta.begin(), s.eta.end());
  s.eta.erase(std::unique(s.eta.begin(), s.eta.end()), s.eta.end());

  const int nb = static_cast<int>(blocks.size());
  const int ne = static_cast<int>(s.eta.size());
  // Row per block so the max over blocks is reduced in a fixed order.
  std::vector<std::vector<LinePoint>> grid(nb);
  ParallelFor(nb, DefaultThreadCount(), [&](int k) {
    grid[k].resize(ne);
    for (int e = 0; e < ne; ++e) {
      grid[k][e] = EvaluateBlock(blocks[k], cplx(zeta, s.eta[e]));
    }
  });
  s.ar_norm.assign(ne, 0.0);
  s.r_norm.assign(ne, 0.0);
  s.block_sup_ar.assign(nb, 0.0);
  for (int k = 0; k < nb; ++k) {
    for (int e = 0; e < ne; ++e) {
      s.ar_norm[e] = std::max(s.ar_norm[e], grid[k][e].ar);
      s.r_norm[e] = std::max(s.r_norm[e], grid[k][e].r);
      s.block_sup_ar[k] = std::max(s.block_sup_ar[k], grid[k][e].ar);
    }
  }
  s.sup_ar = *std::max_element(s.ar_norm.begin(), s.ar_norm.end());
  s.sup_r = *std::max_element(s.r_norm.begin(), s.r_norm.end());

  if (options.witnesses) {
    std::vector<double> mu, norm;
    for (int k = 0; k < nb; ++k) {
      const SpectralBlock& b = blocks[k];
      ResolventWitness w;
      w.k = k;
      w.mu = b.base.mu;
      w.z = cplx(zeta, std::abs(b.lambda_plus.imag()));
      w.norm = std::abs(b.lambda_plus / (w.z - b.lambda_plus));
      s.witnesses.push_back(w);
      mu.push_back(w.mu);
      norm.push_back(w.norm);
    }
    if (nb >= 2) s.witness_slope = FitLogLog(mu, norm).slope;
  }
  return s;
}

std::vector<Eigen::VectorXcd> ConvolutionGenerator(const Spectrum& blocks,
                                                   const ForcingPath& f) {
  const int d = BlockDim(blocks);
  const int nb = static_cast<int>(blocks.size());
  const int K = static_cast<int>(f.samples.size());
  if (K < 2) Throw(ErrorCode::kGridTooCoarse, "need at least two samples");
  if (!(f.T > 0.0)) Throw(ErrorCode::kOutOfRange, "T must be positive");
  for (const Eigen::VectorXcd& v : f.samples) {
    if (v.size() != d * nb) {
      Throw(ErrorCode::kSpectrumMismatch, "forcing does not match spectrum");
    }
  }
  const double h = f.dt();
  std::vector<Eigen::VectorXcd> out(K + 1, Eigen::VectorXcd::Zero(d * nb));
  ParallelFor(nb, DefaultThreadCount(), [&](int k) {
    const SpectralBlock& b = blocks[k];
    // g_{j+1} = e^{hA} g_j + Theta(h) f_j, then A g. Working with A g
    // directly: A Theta = e^{hA} - I.
    const Eigen::Matrix2cd E = BlockFunction(b, [h](cplx z) {
      return std::exp(h * z);
    });
    const Eigen::Matrix2cd AT = BlockFunction(b, [h](cplx z) {
      return z.imag() == 0.0 ? cplx(std::expm1(h * z.real()))
                             : std::exp(h * z) - 1.0;
    });
    Eigen::Vector2cd ag = Eigen::Vector2cd::Zero();
    for (int j = 0; j < K; ++j) {
      Eigen::Vector2cd fj = Eigen::Vector2cd::Zero();
      fj.head(d) = f.samples[j].segment(k * d, d);
      ag = E * ag + AT * fj;
      out[j + 1].segment(k * d, d) = ag.head(d);
    }
  });
  return out;
}

MaxRegReport MaxRegRatio(const Spectrum& blocks, const ForcingPath& f,
                         const MaxRegOptions& options) {
  const std::vector<Eigen::VectorXcd> ag = ConvolutionGenerator(blocks, f);
  MaxRegReport r;
  const double h = f.dt();
  const int K = static_cast<int>(f.samples.size());
  KahanSum sf, sg;
  for (int j = 0; j < K; ++j) sf.Add(h * f.samples[j].squaredNorm());
  for (int j = 0; j <= K; ++j) {
    const double w = (j == 0 || j == K) ? 0.5 * h : h;
    sg.Add(w * ag[j].squaredNorm());
  }
  r.norm_f = std::sqrt(sf.value());
  r.norm_ag = std::sqrt(sg.value());
  r.ratio = r.norm_f > 0.0 ? r.norm_ag / r.norm_f : 0.0;

  const double top = MaxRealPart(blocks);
  r.zeta = options.zeta ? *options.zeta : (top < 0.0 ? 0.0 : top + 1.0);
  const ResolventScan scan = ScanResolventLine(blocks, r.zeta, options.scan);
  r.c1 = scan.sup_r;
  r.c2 = scan.sup_ar;
  r.bound = 2.0 * M_PI * (r.c1 + r.c2) * std::exp(2.0 * std::abs(r.zeta) * f.T);
  return r;
}

}  // namespace spdekit
