#include "spdekit/simulator.h"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <memory>

#include "spdekit/admissibility.h"
#include "spdekit/common.h"
#include "spdekit/rng.h"

namespace spdekit {

void SimGrid::Validate() const {
  if (!(T > 0) || steps < 1) {
    Throw(ErrorCode::kOutOfRange, "grid needs T > 0 and steps >= 1");
  }
  if (scheme == SimScheme::kPicard &&
      (!(picard_tolerance > 0) || picard_iterations < 1)) {
    Throw(ErrorCode::kOutOfRange, "Picard needs a positive tolerance");
  }
}

double Trajectory::SquaredDistance(const Trajectory& a, const Trajectory& b) {
  if (a.x.size() != b.x.size() || a.x.size() < 2) {
    Throw(ErrorCode::kSpectrumMismatch, "trajectories on different grids");
  }
  KahanSum s;
  for (size_t k = 0; k + 1 < a.x.size(); ++k) {
    const double h = a.t[k + 1] - a.t[k];
    s.Add(0.5 * h * ((a.x[k] - b.x[k]).squaredNorm() +
                     (a.x[k + 1] - b.x[k + 1]).squaredNorm()));
  }
  return s.value();
}

namespace {

// phi_2(z) = (e^z - 1 - z) / z^2, by its series near 0.
cplx Phi2(cplx z) {
  if (std::abs(z) < 0.5) {
    cplx term = 0.5, sum = 0.5;
    for (int k = 1; k < 30; ++k) {
      term *= z / static_cast<double>(k + 2);
      sum += term;
      if (std::abs(term) < 1e-18 * std::abs(sum)) break;
    }
    return sum;
  }
  return (Expm1(z) - z) / (z * z);
}

void Digest(uint64_t* h, const Eigen::VectorXd& v) {
  for (int i = 0; i < v.size(); ++i) {
    uint64_t bits;
    const double x = v(i);
    std::memcpy(&bits, &x, sizeof(bits));
    for (int b = 0; b < 8; ++b) {
      *h ^= (bits >> (8 * b)) & 0xffu;
      *h *= 0x100000001b3ull;
    }
  }
}

struct Moments {
  double mean = 0.0;
  double std_error = 0.0;
};

Moments Reduce(const std::vector<double>& v) {
  KahanSum s, s2;
  for (double x : v) s.Add(x);
  const double n = static_cast<double>(v.size());
  const double mean = s.value() / n;
  for (double x : v) s2.Add((x - mean) * (x - mean));
  const double var = v.size() > 1 ? s2.value() / (n - 1) : 0.0;
  return {mean, std::sqrt(var / n)};
}

}  // namespace

MildIntegrator::MildIntegrator(const Spectrum& blocks, double gamma, double dt)
    : stepper_(blocks, gamma, dt) {
  for (const SpectralBlock& b : blocks) {
    const Eigen::Matrix2d th = BlockExpIntegral(b, dt);
    const Eigen::Matrix2d th2 =
        BlockFunction(b, [dt](cplx l) { return dt * Phi2(l * dt); }).real();
    theta_.push_back(th);
    theta2_.push_back(th2);
    theta1_.push_back(th - th2);
  }
}

Eigen::VectorXd MildIntegrator::Apply(const std::vector<Eigen::Matrix2d>& m,
                                      const Eigen::VectorXd& x) const {
  if (x.size() != state_size()) {
    Throw(ErrorCode::kSpectrumMismatch, "state has the wrong size");
  }
  const int d = blocks().empty() ? 1 : blocks()[0].dim;
  Eigen::VectorXd out(x.size());
  for (size_t k = 0; k < m.size(); ++k) {
    if (d == 1) {
      out(k) = m[k](0, 0) * x(k);
    } else {
      out.segment<2>(2 * k) = m[k] * x.segment<2>(2 * k);
    }
  }
  return out;
}

Eigen::VectorXd MildIntegrator::Propagate(const Eigen::VectorXd& x) const {
  return Apply(stepper_.transition, x);
}
Eigen::VectorXd MildIntegrator::Theta(const Eigen::VectorXd& b) const {
  return Apply(theta_, b);
}
Eigen::VectorXd MildIntegrator::Theta1(const Eigen::VectorXd& b) const {
  return Apply(theta1_, b);
}
Eigen::VectorXd MildIntegrator::Theta2(const Eigen::VectorXd& b) const {
  return Apply(theta2_, b);
}

Trajectory SimulateMild(const Drift& drift, const MildIntegrator& integrator,
                        const SimGrid& grid, const Eigen::VectorXd& x0,
                        const NoisePath* path, const Trajectory* guess,
                        SimStats* stats) {
  grid.Validate();
  const int n = integrator.state_size();
  if (x0.size() != n || drift.state_size() != n) {
    Throw(ErrorCode::kSpectrumMismatch,
          "drift, integrator and initial state disagree on the block set");
  }
  if (std::abs(integrator.dt() - grid.dt()) > 1e-14 * grid.dt()) {
    Throw(ErrorCode::kSpectrumMismatch, "integrator step differs from grid");
  }
  const int K = grid.steps;
  SimStats local;
  SimStats& st = stats ? *stats : local;
  st = SimStats();
  st.noise_digest = 0xcbf29ce484222325ull;

  std::vector<Eigen::VectorXd> xi(K, Eigen::VectorXd::Zero(n));
  if (path) {
    for (int k = 0; k < K; ++k) {
      xi[k] = integrator.Innovation(*path, k);
      Digest(&st.noise_digest, xi[k]);
    }
  }
  Trajectory out;
  out.t.resize(K + 1);
  for (int k = 0; k <= K; ++k) out.t[k] = grid.T * k / K;

  auto drift_at = [&](const Eigen::VectorXd& x) {
    return drift.is_zero() ? Eigen::VectorXd::Zero(n).eval() : drift.Apply(x);
  };

  if (grid.scheme == SimScheme::kExponentialEuler) {
    out.x.resize(K + 1);
    out.x[0] = x0;
    for (int k = 0; k < K; ++k) {
      out.x[k + 1] = integrator.Propagate(out.x[k]) +
                     integrator.Theta(drift_at(out.x[k])) + xi[k];
    }
    return out;
  }

  std::vector<Eigen::VectorXd> X;
  if (guess) {
    if (static_cast<int>(guess->x.size()) != K + 1) {
      Throw(ErrorCode::kSpectrumMismatch, "Picard guess on a different grid");
    }
    X = guess->x;
  } else {
    X.assign(K + 1, x0);
  }
  X[0] = x0;
  std::vector<Eigen::VectorXd> B(K + 1);
  for (int it = 1; it <= grid.picard_iterations; ++it) {
    for (int k = 0; k <= K; ++k) B[k] = drift_at(X[k]);
    KahanSum update;
    Eigen::VectorXd y = x0;
    for (int k = 0; k < K; ++k) {
      y = integrator.Propagate(y) + integrator.Theta1(B[k]) +
          integrator.Theta2(B[k + 1]) + xi[k];
      update.Add((y - X[k + 1]).squaredNorm());
      X[k + 1] = y;
    }
    st.picard_iterations = it;
    st.picard_update = std::sqrt(grid.dt() * update.value());
    if (st.picard_update < grid.picard_tolerance) {
      out.x = std::move(X);
      return out;
    }
  }
  Throw(ErrorCode::kPicardNoConvergence,
        "Picard update " + std::to_string(st.picard_update) + " after " +
            std::to_string(grid.picard_iterations) + " iterations");
}

// ---------------------------------------------------------------------------

namespace {

bool Monotone(const std::vector<double>& mean, const std::vector<double>& se,
              double slack_se) {
  for (size_t i = 1; i < mean.size(); ++i) {
    const double tol = slack_se * std::hypot(se[i], se[i - 1]);
    if (mean[i] > mean[i - 1] + tol) return false;
  }
  return true;
}

void FinishDecay(DecayReport* r) {
  std::vector<double> dt, mean, se;
  for (const LadderLevel& l : r->levels) {
    dt.push_back(l.dt);
    mean.push_back(l.mean);
    se.push_back(0.0);
  }
  r->order = FitLogLog(dt, mean).slope;
  r->monotone = Monotone(mean, se, 0.0);
}

}  // namespace

DecayReport UniquenessExperiment(const OperatorSpec& spec,
                                 const DriftSpec& drift_spec, int n,
                                 const Eigen::VectorXd& x0,
                                 const UniquenessOptions& opt) {
  if (opt.samples < 2 || opt.ladder.empty()) {
    Throw(ErrorCode::kOutOfRange, "need a ladder and at least two samples");
  }
  const Spectrum blocks = BuildSpectrum(spec, n);
  const Drift drift(drift_spec, spec, blocks);
  DecayReport report;
  const AdmissibilityReport adm = CheckAdmissibility(spec, drift_spec);
  report.admissible = adm.admissible;
  if (!adm.admissible) report.note = "inadmissible - exploratory";

  for (int steps : opt.ladder) {
    SimGrid euler{opt.T, steps, SimScheme::kExponentialEuler};
    SimGrid picard{opt.T, steps, SimScheme::kPicard, opt.picard_iterations,
                   opt.picard_tolerance};
    const MildIntegrator integ(blocks, spec.gamma, euler.dt());
    std::vector<double> gap(opt.samples);
    std::vector<char> shared(opt.samples, 1);
    ParallelFor(opt.samples, opt.threads, [&](int s) {
      const NoisePath path(opt.seed, euler.dt(), steps, s);
      const NoisePath* p = opt.noise ? &path : nullptr;
      SimStats a, b;
      const Trajectory x1 = SimulateMild(drift, integ, euler, x0, p, nullptr, &a);
      const Trajectory x2 = SimulateMild(drift, integ, picard, x0, p, nullptr, &b);
      gap[s] = Trajectory::SquaredDistance(x1, x2);
      shared[s] = a.noise_digest == b.noise_digest;
    });
    const Moments m = Reduce(gap);
    LadderLevel level;
    level.steps = steps;
    level.dt = euler.dt();
    level.mean = m.mean;
    level.std_error = m.std_error;
    level.noise_shared =
        std::all_of(shared.begin(), shared.end(), [](char c) { return c; });
    report.levels.push_back(level);
  }
  FinishDecay(&report);
  return report;
}

OperatorSpec CounterexampleOperator() {
  OperatorSpec op;
  op.family = Family::kDampedWave;
  op.m = 1;
  op.alpha = 7.0 / 12.0;
  op.rho = 1.0;
  op.gamma = 0.0;
  op.bc = Boundary::kDirichlet;
  op.length = M_PI;
  return op;
}

Eigen::VectorXd CounterexampleState(const Spectrum& blocks, double c, int p,
                                    double tau) {
  // y = c tau^p sin(2 xi) = c tau^p sqrt(pi/2) e_2 with e_2 normalized, and
  // the displacement slot stores mu^{1/2} times the mode coefficient.
  if (blocks.size() < 2 || blocks[1].dim != 2) {
    Throw(ErrorCode::kSpectrumMismatch, "need at least two damped blocks");
  }
  const double norm = std::sqrt(M_PI / 2.0);
  const double root_mu = std::sqrt(blocks[1].base.mu);
  Eigen::VectorXd x = Eigen::VectorXd::Zero(2 * blocks.size());
  x(2) = root_mu * c * std::pow(tau, p) * norm;
  x(3) = p == 0 ? 0.0 : c * p * std::pow(tau, p - 1) * norm;
  return x;
}

double CounterexampleSeparation() { return M_PI / 34.0; }

DecayReport CounterexampleUniqueness(const std::vector<int>& ladder,
                                     int picard_iterations,
                                     double picard_tolerance) {
  const OperatorSpec op = CounterexampleOperator();
  const Spectrum blocks = BuildSpectrum(op, 4);
  DriftSpec ds;
  ds.kind = DriftKind::kCounterexample;
  ds.theta = 0.75;
  const Drift drift(ds, op, blocks);
  DecayReport report;
  const AdmissibilityReport adm = CheckAdmissibility(op, ds);
  report.admissible = adm.admissible;
  report.note = "noise off: outside every uniqueness statement";
  const Eigen::VectorXd x0 = Eigen::VectorXd::Zero(8);
  for (int steps : ladder) {
    SimGrid grid{1.0, steps, SimScheme::kPicard, picard_iterations,
                 picard_tolerance};
    const MildIntegrator integ(blocks, 0.0, grid.dt());
    Trajectory g0, g1;
    for (int k = 0; k <= steps; ++k) {
      const double t = grid.T * k / steps;
      g0.t.push_back(t);
      g1.t.push_back(t);
      g0.x.push_back(x0);
      g1.x.push_back(CounterexampleState(blocks, 1.0, 8, t));
    }
    const Trajectory a = SimulateMild(drift, integ, grid, x0, nullptr, &g0);
    const Trajectory b = SimulateMild(drift, integ, grid, x0, nullptr, &g1);
    LadderLevel level;
    level.steps = steps;
    level.dt = grid.dt();
    level.mean = Trajectory::SquaredDistance(a, b);
    report.levels.push_back(level);
  }
  FinishDecay(&report);
  return report;
}

// ---------------------------------------------------------------------------

GalerkinReport GalerkinConvergence(const OperatorSpec& spec,
                                   const DriftSpec& drift_spec,
                                   const std::vector<int>& ladder,
                                   int reference,
                                   const Eigen::VectorXd& x0_modes,
                                   const GalerkinOptions& opt) {
  for (int n : ladder) {
    if (n < 1 || n > reference) {
      Throw(ErrorCode::kInsufficientModes,
            "ladder entries must lie in [1, reference]");
    }
  }
  const Spectrum ref_blocks = BuildSpectrum(spec, reference);
  const int d = ref_blocks[0].dim;
  if (x0_modes.size() != reference * d) {
    Throw(ErrorCode::kSpectrumMismatch, "initial state needs reference blocks");
  }
  const Drift ref_drift(drift_spec, spec, ref_blocks);
  const SimGrid grid{opt.T, opt.steps, SimScheme::kExponentialEuler};
  const MildIntegrator ref_integ(ref_blocks, spec.gamma, grid.dt());

  struct Level {
    int n;
    Spectrum blocks;
    std::unique_ptr<Drift> drift;
    std::unique_ptr<MildIntegrator> integ;
  };
  std::vector<Level> levels;
  for (int n : ladder) {
    Level l;
    l.n = n;
    l.blocks = BuildSpectrum(spec, n);
    l.drift = std::make_unique<Drift>(drift_spec, spec, l.blocks);
    l.integ = std::make_unique<MildIntegrator>(l.blocks, spec.gamma, grid.dt());
    levels.push_back(std::move(l));
  }

  const int L = static_cast<int>(ladder.size());
  std::vector<std::vector<double>> gap(L, std::vector<double>(opt.samples));
  std::vector<std::vector<double>> hat(L, std::vector<double>(opt.samples));
  ParallelFor(opt.samples, opt.threads, [&](int s) {
    const NoisePath path(opt.seed, grid.dt(), grid.steps, s);
    const Trajectory X = SimulateMild(ref_drift, ref_integ, grid, x0_modes, &path);
    for (int i = 0; i < L; ++i) {
      const int size = levels[i].n * d;
      Trajectory proj = X, own;
      for (auto& x : proj.x) x.tail(x.size() - size).setZero();
      gap[i][s] = Trajectory::SquaredDistance(proj, X);
      own = SimulateMild(*levels[i].drift, *levels[i].integ, grid,
                         x0_modes.head(size), &path);
      for (auto& x : own.x) {
        Eigen::VectorXd padded = Eigen::VectorXd::Zero(X.x[0].size());
        padded.head(size) = x;
        x = padded;
      }
      hat[i][s] = Trajectory::SquaredDistance(own, X);
    }
  });

  GalerkinReport r;
  r.reference = reference;
  std::vector<double> gm, gs, hm, hs;
  r.hat_within_2x = true;
  for (int i = 0; i < L; ++i) {
    const Moments a = Reduce(gap[i]);
    const Moments b = Reduce(hat[i]);
    r.levels.push_back({ladder[i], a.mean, a.std_error, b.mean, b.std_error});
    gm.push_back(a.mean);
    gs.push_back(a.std_error);
    hm.push_back(b.mean);
    hs.push_back(b.std_error);
    if (b.mean > 2.0 * a.mean + 2.0 * b.std_error) r.hat_within_2x = false;
  }
  r.monotone = Monotone(gm, gs, 2.0) && Monotone(hm, hs, 2.0);
  return r;
}

// ---------------------------------------------------------------------------

CandidateResidual CounterexampleResidual(const Candidate& y, int tau_points,
                                         int xi_points) {
  if (y.coef.size() != y.power.size() || y.coef.size() != y.mode.size()) {
    Throw(ErrorCode::kUnsupportedCandidate, "ragged candidate");
  }
  int j = y.mode.empty() ? 2 : y.mode[0];
  for (int m : y.mode) {
    if (m != j) {
      Throw(ErrorCode::kUnsupportedCandidate,
            "candidate spans more than one sine mode");
    }
  }
  if (j < 1) Throw(ErrorCode::kUnsupportedCandidate, "mode must be >= 1");
  for (int p : y.power) {
    if (p < 0) Throw(ErrorCode::kUnsupportedCandidate, "negative power");
  }
  // a(tau) and its derivatives.
  auto amp = [&](double tau, int order) {
    double s = 0.0;
    for (size_t i = 0; i < y.coef.size(); ++i) {
      const int p = y.power[i];
      if (p < order) continue;
      double c = y.coef[i];
      for (int q = 0; q < order; ++q) c *= p - q;
      s += c * std::pow(tau, p - order);
    }
    return s;
  };
  const double jj = static_cast<double>(j);
  const double damping = std::pow(jj, 7.0 / 6.0);
  CandidateResidual out;
  KahanSum total;
  const double dtau = 1.0 / (tau_points - 1);
  const double dxi = M_PI / (xi_points - 1);
  for (int a = 0; a < tau_points; ++a) {
    const double tau = a * dtau;
    const double A = amp(tau, 0), A1 = amp(tau, 1), A2 = amp(tau, 2);
    const double linear = A2 + damping * A1 + jj * jj * A;
    KahanSum row;
    for (int b = 0; b < xi_points; ++b) {
      const double xi = b * dxi;
      const double s = std::sin(jj * xi);
      const double r = linear * s - CounterexampleNonlinearity(xi, A * s);
      const double w = (b == 0 || b == xi_points - 1) ? 0.5 * dxi : dxi;
      row.Add(w * r * r);
    }
    out.t.push_back(tau);
    out.per_time.push_back(std::sqrt(row.value()));
    const double w = (a == 0 || a == tau_points - 1) ? 0.5 * dtau : dtau;
    total.Add(w * row.value());
  }
  out.residual = std::sqrt(total.value());
  return out;
}

// ---------------------------------------------------------------------------

ItoTanakaReport ItoTanakaResidual(const Drift& drift, const Spectrum& blocks,
                                  double gamma, const KolmogorovField& U,
                                  const Eigen::VectorXd& x0,
                                  const ItoTanakaOptions& opt) {
  const int n = drift.state_size();
  const int d = blocks.empty() ? 1 : blocks[0].dim;
  if (U.dim() != n || x0.size() != n) {
    Throw(ErrorCode::kSpectrumMismatch,
          "Kolmogorov solution and drift disagree on the state dimension");
  }
  if (std::abs(U.T() - opt.T) > 1e-12 * opt.T) {
    Throw(ErrorCode::kMissingKolmogorovSolution,
          "Kolmogorov solution has a different horizon");
  }
  Eigen::MatrixXd G = Eigen::MatrixXd::Zero(n, static_cast<int>(blocks.size()));
  for (size_t k = 0; k < blocks.size(); ++k) {
    G.block(k * d, k, d, 1) = InputVector(blocks[k], gamma).head(d);
  }
  ItoTanakaReport report;
  for (int steps : opt.ladder) {
    const double dt = opt.T / steps;
    for (int k = 0; k <= steps; ++k) {
      if (U.TimeIndex(opt.T * k / steps) < 0) {
        Throw(ErrorCode::kMissingKolmogorovSolution,
              "grid time " + std::to_string(opt.T * k / steps) +
                  " is not on the Kolmogorov grid");
      }
    }
    const MildIntegrator integ(blocks, gamma, dt);
    const bool last = steps == opt.ladder.back();
    std::vector<double> worst(opt.samples);
    std::vector<std::vector<double>> per_time(
        last ? opt.samples : 0, std::vector<double>(steps + 1));
    ParallelFor(opt.samples, opt.threads, [&](int s) {
      const NoisePath path(opt.seed, dt, steps, s);
      Eigen::VectorXd X = x0;
      Eigen::VectorXd P = x0 - U.Value(0.0, x0);
      Eigen::VectorXd S1 = Eigen::VectorXd::Zero(n);  // A int e^{(t-s)A} U
      Eigen::VectorXd S2 = Eigen::VectorXd::Zero(n);  // int e^{(t-s)A} DU G dW
      Eigen::VectorXd S3 = Eigen::VectorXd::Zero(n);  // W_A
      double w = 0.0;
      for (int k = 0; k <= steps; ++k) {
        const double t = opt.T * k / steps;
        const Eigen::VectorXd Uk = U.Value(t, X);
        const Eigen::VectorXd rhs = P + Uk + S1 - S2 + S3;
        const double r = (X - rhs).norm();
        w = std::max(w, r);
        if (last) per_time[s][k] = r;
        if (k == steps) break;
        Eigen::VectorXd dW(blocks.size());
        for (size_t b = 0; b < blocks.size(); ++b) {
          dW(b) = path.Increment(k, static_cast<int>(b))(0);
        }
        const Eigen::VectorXd noise = G * dW;
        const Eigen::VectorXd mart = U.Jacobian(t, X) * noise;
        const Eigen::VectorXd B = drift.Apply(X);
        X = integ.Propagate(X + B * dt + noise);
        P = integ.Propagate(P);
        S1 = integ.Propagate(S1) + integ.Propagate(Uk) - Uk;
        S2 = integ.Propagate(S2 + mart);
        S3 = integ.Propagate(S3 + noise);
      }
      worst[s] = w;
    });
    const Moments m = Reduce(worst);
    ItoTanakaLevel level;
    level.steps = steps;
    level.dt = dt;
    level.mean = m.mean;
    level.std_error = m.std_error;
    level.max = *std::max_element(worst.begin(), worst.end());
    report.levels.push_back(level);
    if (last) {
      report.t.resize(steps + 1);
      report.residual.assign(steps + 1, 0.0);
      for (int k = 0; k <= steps; ++k) {
        report.t[k] = opt.T * k / steps;
        KahanSum acc;
        for (int s = 0; s < opt.samples; ++s) acc.Add(per_time[s][k]);
        report.residual[k] = acc.value() / opt.samples;
      }
    }
  }
  std::vector<double> dt, mean;
  for (const ItoTanakaLevel& l : report.levels) {
    dt.push_back(l.dt);
    mean.push_back(l.mean);
  }
  report.order = report.levels.size() > 1 ? FitLogLog(dt, mean).slope : 0.0;
  return report;
}

}  // namespace spdekit
