#include "commands.h"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <map>

#include <Eigen/Core>
#include <boost/version.hpp>

#include "io.h"
#include "spdekit/controllability.h"
#include "spdekit/drift.h"
#include "spdekit/kolmogorov.h"
#include "spdekit/noise.h"
#include "spdekit/regularity.h"
#include "spdekit/rng.h"
#include "spdekit/simulator.h"
#include "spdekit/spectral.h"

namespace spdekit::cli {

using nlohmann::json;

int ExitCodeFor(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidSpec:
    case ErrorCode::kConfigInvalid:
    case ErrorCode::kOutOfRange:
    case ErrorCode::kInsufficientModes:
    case ErrorCode::kSpectrumMismatch:
    case ErrorCode::kUnsupportedCandidate:
    case ErrorCode::kMissingKolmogorovSolution:
    case ErrorCode::kDegreeTooSmall:
    case ErrorCode::kRangeViolation:
      return kExitConfig;
    default:
      return kExitNumeric;
  }
}

json AdmissibilityJson(const AdmissibilityReport& report) {
  json j;
  j["admissible"] = report.admissible;
  j["covering"] = report.covering;
  j["clamp_convention"] = report.clamp_convention;
  json list = json::array();
  for (const StatementVerdict& s : report.statements) {
    json c = json::array();
    for (const Condition& k : s.conditions) {
      c.push_back({{"name", k.name}, {"holds", k.holds}, {"detail", k.detail}});
    }
    list.push_back({{"statement", s.statement},
                    {"applicable", s.applicable},
                    {"admissible", s.admissible},
                    {"binding", s.binding},
                    {"conditions", c}});
  }
  j["statements"] = list;
  return j;
}

namespace {

struct Context {
  const ExperimentConfig& c;
  std::string hash;
  std::string command;
  std::vector<std::string> files;
  json report;

  std::string Path(const std::string& suffix, const std::string& ext) {
    std::string p = c.out + "/" + command + (suffix.empty() ? "" : "_" + suffix) +
                    "." + ext;
    files.push_back(p);
    return p;
  }
  CsvWriter Csv(const std::string& suffix, const std::vector<std::string>& cols) {
    return CsvWriter(Path(suffix, "csv"), hash, cols);
  }
};

Eigen::VectorXd InitialState(const ExperimentConfig& c, int n, int dim) {
  Eigen::VectorXd x = Eigen::VectorXd::Zero(n * dim);
  for (int i = 0; i < static_cast<int>(c.x0.size()) && i < x.size(); ++i) {
    x(i) = c.x0[i];
  }
  return x;
}

double HolderNorm(const Drift& d) { return d.SupBound() + d.HolderBound(); }

json DecayJson(const DecayReport& r) {
  return {{"order", r.order},
          {"monotone", r.monotone},
          {"admissible", r.admissible},
          {"note", r.note}};
}

void WriteDecay(Context* ctx, const std::string& suffix, const DecayReport& r) {
  CsvWriter w = ctx->Csv(suffix, {"steps", "dt", "mean", "std_error",
                                  "noise_shared"});
  for (const LadderLevel& l : r.levels) {
    w.Row({l.steps, l.dt, l.mean, l.std_error, l.noise_shared});
  }
}

void Spectrum_(Context* ctx) {
  const Spectrum blocks = BuildSpectrum(ctx->c.op, ctx->c.n);
  CsvWriter w = ctx->Csv("", {"k", "mu", "re_lambda_plus", "im_lambda_plus",
                              "re_lambda_minus", "im_lambda_minus", "chi",
                              "base_norm"});
  for (const SpectralBlock& b : blocks) {
    w.Row({b.base.index + 1, b.base.mu, b.lambda_plus.real(),
           b.lambda_plus.imag(), b.lambda_minus.real(), b.lambda_minus.imag(),
           b.chi, b.base.base_norm});
  }
  // The power-law fit needs a long enough tail of the spectrum.
  if (blocks.size() < 50) return;
  const AsymptoticReport a = FitAsymptotics(ctx->c.op, blocks);
  ctx->report["asymptotics"] = {{"fitted_blocks", a.fitted_blocks},
                                {"slopes", a.slopes},
                                {"predicted", a.predicted}};
}

void Gramian_(Context* ctx) {
  const ExperimentConfig& c = ctx->c;
  const Spectrum blocks = BuildSpectrum(c.op, c.n);
  const std::vector<GramianBlock> g = Gramian(blocks, c.op.gamma, c.grid.T);
  CsvWriter w = ctx->Csv("", {"k", "mu", "t", "q00", "q01", "q11",
                              "min_eigenvalue", "condition", "gamma_block"});
  for (const GramianBlock& b : g) {
    w.Row({b.k + 1, blocks[b.k].base.mu, b.t, b.Q(0, 0), b.Q(0, 1), b.Q(1, 1),
           b.min_eigenvalue, b.condition, b.gamma_block});
  }
  const GammaProfile p = GammaNorm(g);
  ctx->report["gamma_t"] = p.gamma;
  ctx->report["argmax"] = p.argmax + 1;
  const SingularIntegral s =
      GammaPowerIntegral(blocks, c.op.gamma, c.drift.theta, c.grid.T);
  ctx->report["gamma_power_integral"] = {
      {"value", s.value},
      {"divergent", s.divergent},
      {"endpoint_exponent", s.endpoint_exponent}};
}

void Control_(Context* ctx) {
  const ExperimentConfig& c = ctx->c;
  const Spectrum blocks = BuildSpectrum(c.op, c.n);
  const std::vector<GramianBlock> g = Gramian(blocks, c.op.gamma, c.control_t);
  const int d = blocks[0].dim;
  CsvWriter w = ctx->Csv("", {"sample", "explicit_energy", "minimal_energy",
                              "terminal_ratio", "quadrature_error"});
  int degree = 0;
  double worst = 0.0;
  bool ordered = true;
  for (int s = 0; s < c.samples; ++s) {
    Eigen::VectorXd h(blocks.size() * d);
    for (int i = 0; i < h.size(); ++i) {
      h(i) = KeyedNormalPair(c.seed, 0, static_cast<uint32_t>(i),
                             static_cast<uint32_t>(s))[0];
    }
    h /= h.norm();
    const SpectralField hf = SpectralField::FromReal(blocks, h);
    const ControlSignal u =
        SynthesizeControl(blocks, c.op, hf, c.control_t, c.control_degree);
    const SteeringResult y = VerifySteering(blocks, c.op, u, hf);
    const double emin = MinimalEnergy(g, blocks, hf);
    degree = u.profile.degree;
    worst = std::max(worst, y.terminal_norm);
    ordered = ordered && emin <= u.energy * (1.0 + 1e-9);
    w.Row({s, u.energy, emin, y.terminal_norm, u.energy_quadrature_error});
  }
  ctx->report["degree"] = degree;
  ctx->report["max_terminal_ratio"] = worst;
  ctx->report["minimal_below_explicit"] = ordered;
  ctx->report["predicted_energy_exponent"] =
      PredictedEnergyExponent(c.op.alpha, c.op.gamma);
}

void Trace_(Context* ctx) {
  const ExperimentConfig& c = ctx->c;
  const TraceReport r = WeightedTraceTest(c.op, c.grid.T, c.noise_truncation);
  CsvWriter w = ctx->Csv("", {"eta", "k", "partial_sum"});
  for (const TraceScan& s : r.scans) {
    const int N = static_cast<int>(s.partial.size());
    for (int k = 1; k <= N; k *= 2) w.Row({s.eta, k, s.partial[k - 1]});
    if ((N & (N - 1)) != 0) w.Row({s.eta, N, s.partial.back()});
  }
  json scans = json::array();
  for (const TraceScan& s : r.scans) {
    scans.push_back({{"eta", s.eta},
                     {"ratio", s.ratio},
                     {"tail_fraction", s.tail_fraction},
                     {"convergent", s.convergent}});
  }
  ctx->report["scans"] = scans;
  ctx->report["numeric_convergent"] = r.numeric_convergent;
  ctx->report["analytic_convergent"] = r.analytic_convergent;
  ctx->report["analytic_index"] = r.analytic_index;
}

void Convolution_(Context* ctx) {
  const ExperimentConfig& c = ctx->c;
  const Spectrum blocks = BuildSpectrum(c.op, c.n);
  const auto est = SampleConvolutionCovariance(
      blocks, c.op.gamma, c.grid.T, c.grid.steps, c.samples, c.seed, c.threads);
  CsvWriter w = ctx->Csv("", {"k", "i", "j", "mean", "std_error", "exact",
                              "zscore"});
  double zmax = 0.0;
  for (const CovarianceEstimate& e : est) {
    for (int i = 0; i < e.dim; ++i) {
      for (int j = i; j < e.dim; ++j) {
        const double se = e.stderr_product(i, j);
        const double z = se > 0 ? std::abs(e.mean_product(i, j) - e.exact(i, j)) / se
                                : 0.0;
        w.Row({e.k + 1, i, j, e.mean_product(i, j), se, e.exact(i, j), z});
      }
    }
    zmax = std::max(zmax, e.max_zscore);
  }
  ctx->report["max_zscore"] = zmax;
}

void Simulate_(Context* ctx) {
  const ExperimentConfig& c = ctx->c;
  const Spectrum blocks = BuildSpectrum(c.op, c.n);
  const Drift drift(c.drift, c.op, blocks);
  const SimGrid grid{c.grid.T, c.grid.steps};
  const MildIntegrator integ(blocks, c.op.gamma, grid.dt());
  const NoisePath path(c.seed, grid.dt(), grid.steps);
  SimStats stats;
  const Trajectory x = SimulateMild(drift, integ, grid,
                                    InitialState(c, c.n, blocks[0].dim), &path,
                                    nullptr, &stats);
  std::vector<std::string> cols = {"t"};
  for (int i = 0; i < x.x[0].size(); ++i) cols.push_back("x" + std::to_string(i));
  CsvWriter w = ctx->Csv("", cols);
  for (size_t k = 0; k < x.t.size(); ++k) {
    std::vector<CsvWriter::Cell> row = {x.t[k]};
    for (int i = 0; i < x.x[k].size(); ++i) row.emplace_back(x.x[k](i));
    w.Row(row);
  }
  char digest[17];
  std::snprintf(digest, sizeof(digest), "%016llx",
                static_cast<unsigned long long>(stats.noise_digest));
  ctx->report["noise_digest"] = digest;
}

void Uniqueness_(Context* ctx) {
  const ExperimentConfig& c = ctx->c;
  const Spectrum blocks = BuildSpectrum(c.op, c.n);
  UniquenessOptions o;
  o.T = c.grid.T;
  o.ladder = c.grid.ladder;
  o.samples = c.samples;
  o.seed = c.seed;
  o.threads = c.threads;
  const DecayReport r = UniquenessExperiment(
      c.op, c.drift, c.n, InitialState(c, c.n, blocks[0].dim), o);
  WriteDecay(ctx, "", r);
  ctx->report.update(DecayJson(r));
}

void Galerkin_(Context* ctx) {
  const ExperimentConfig& c = ctx->c;
  const int N = c.galerkin_reference;
  const int d = c.op.damped() ? 2 : 1;
  GalerkinOptions o;
  o.T = c.grid.T;
  o.steps = c.grid.steps;
  o.samples = c.samples;
  o.seed = c.seed;
  o.threads = c.threads;
  const GalerkinReport r = GalerkinConvergence(
      c.op, c.drift, c.galerkin_ladder, N, InitialState(c, N, d), o);
  CsvWriter w = ctx->Csv("", {"n", "gap", "gap_std_error", "hat_gap",
                              "hat_gap_std_error"});
  for (const GalerkinLevel& l : r.levels) {
    w.Row({l.n, l.gap, l.gap_stderr, l.hat_gap, l.hat_gap_stderr});
  }
  ctx->report["reference"] = r.reference;
  ctx->report["monotone"] = r.monotone;
  ctx->report["hat_within_2x"] = r.hat_within_2x;
}

void Counterexample_(Context* ctx) {
  const ExperimentConfig& c = ctx->c;
  struct Named {
    std::string name;
    Candidate y;
  };
  const std::vector<Named> refs = {{"zero", {{0.0}, {0}, {2}}},
                                   {"tau8_sin2", {{1.0}, {8}, {2}}}};
  CsvWriter w = ctx->Csv("", {"candidate", "t", "residual"});
  double worst = 0.0;
  json cand = json::object();
  for (const Named& r : refs) {
    const CandidateResidual res = CounterexampleResidual(r.y);
    for (size_t i = 0; i < res.t.size(); ++i) {
      w.Row({r.name, res.t[i], res.per_time[i]});
    }
    worst = std::max(worst, res.residual);
    cand[r.name] = res.residual;
  }
  // A perturbed candidate that is not a solution, as a control.
  cand["tau7_sin2"] = CounterexampleResidual({{1.0}, {7}, {2}}).residual;
  ctx->report["residuals"] = cand;
  ctx->report["max_reference_residual"] = worst;
  const DecayReport d = CounterexampleUniqueness(c.grid.ladder);
  WriteDecay(ctx, "decay", d);
  ctx->report["decay"] = DecayJson(d);
  ctx->report["separation"] = CounterexampleSeparation();
}

struct KolmogorovSetup {
  Spectrum blocks;
  std::unique_ptr<Drift> drift;
  KolmogorovOptions options;
};

KolmogorovSetup SetupKolmogorov(const ExperimentConfig& c) {
  KolmogorovSetup s;
  s.blocks = BuildSpectrum(c.op, c.kolmogorov.modes);
  s.drift = std::make_unique<Drift>(c.drift, c.op, s.blocks);
  const double norm = HolderNorm(*s.drift);
  if (!std::isfinite(norm)) {
    Throw(ErrorCode::kRangeViolation, "drift has no finite Hoelder norm bound");
  }
  KolmogorovOptions& o = s.options;
  o.time_steps = c.kolmogorov.time_steps;
  o.points = c.kolmogorov.points;
  o.gh_order = c.kolmogorov.gh_order;
  o.scale = c.kolmogorov.scale;
  o.tolerance = c.kolmogorov.tolerance;
  o.max_iterations = c.kolmogorov.max_iterations;
  o.theta = c.drift.theta;
  o.n_holder = norm;
  o.m_holder = norm;
  o.threads = c.threads;
  return s;
}

KolmogorovField SolveFor(const KolmogorovSetup& s, double gamma, double T,
                         KolmogorovReport* report) {
  const Drift* drift = s.drift.get();
  const VectorFunction N = [drift](const Eigen::VectorXd& x) {
    return drift->Apply(x);
  };
  const VectorFunction M = [drift](const Eigen::VectorXd& x) {
    return Eigen::VectorXd(-drift->Apply(x));
  };
  return SolveBackward(s.blocks, gamma, N, M, T, s.options, report);
}

json KolmogorovJson(const KolmogorovReport& r) {
  return {{"weight", r.weight},
          {"contraction_bound", r.contraction_bound},
          {"iterations", r.iterations},
          {"residual", r.residual},
          {"offgrid_residual", r.offgrid_residual},
          {"sup_c2", r.sup_c2},
          {"c2_bound", r.c2_bound},
          {"C_T", r.constants.C_T},
          {"M_T", r.constants.M_T}};
}

void Kolmogorov_(Context* ctx) {
  const ExperimentConfig& c = ctx->c;
  const KolmogorovSetup s = SetupKolmogorov(c);
  KolmogorovReport r;
  SolveFor(s, c.op.gamma, c.grid.T, &r);
  CsvWriter w = ctx->Csv("", {"iteration", "distance", "ratio"});
  for (size_t i = 0; i < r.distances.size(); ++i) {
    w.Row({static_cast<int>(i + 1), r.distances[i],
           i == 0 ? std::nan("") : r.ratios[i - 1]});
  }
  ctx->report.update(KolmogorovJson(r));
}

void ItoTanaka_(Context* ctx) {
  const ExperimentConfig& c = ctx->c;
  const KolmogorovSetup s = SetupKolmogorov(c);
  KolmogorovReport kr;
  const KolmogorovField U = SolveFor(s, c.op.gamma, c.grid.T, &kr);
  ItoTanakaOptions o;
  o.T = c.grid.T;
  o.ladder = c.grid.ladder;
  o.samples = c.samples;
  o.seed = c.seed;
  o.threads = c.threads;
  const ItoTanakaReport r = ItoTanakaResidual(
      *s.drift, s.blocks, c.op.gamma, U,
      InitialState(c, c.kolmogorov.modes, s.blocks[0].dim), o);
  CsvWriter w = ctx->Csv("", {"steps", "dt", "mean", "max", "std_error"});
  for (const ItoTanakaLevel& l : r.levels) {
    w.Row({l.steps, l.dt, l.mean, l.max, l.std_error});
  }
  CsvWriter t = ctx->Csv("profile", {"t", "residual"});
  for (size_t i = 0; i < r.t.size(); ++i) t.Row({r.t[i], r.residual[i]});
  ctx->report["order"] = r.order;
  ctx->report["kolmogorov"] = KolmogorovJson(kr);
}

void MaxReg_(Context* ctx) {
  const ExperimentConfig& c = ctx->c;
  const Spectrum blocks = BuildSpectrum(c.op, c.n);
  MaxRegOptions o;
  o.zeta = c.zeta;
  CsvWriter w = ctx->Csv("", {"sample", "ratio"});
  MaxRegReport last;
  double hi = 0.0, lo = INFINITY;
  for (int s = 0; s < c.samples; ++s) {
    const ForcingPath f =
        RandomForcing(blocks, c.grid.T, c.forcing_samples, c.seed + s);
    last = MaxRegRatio(blocks, f, o);
    hi = std::max(hi, last.ratio);
    lo = std::min(lo, last.ratio);
    w.Row({s, last.ratio});
  }
  ctx->report["max_ratio"] = hi;
  ctx->report["min_ratio"] = lo;
  ctx->report["zeta"] = last.zeta;
  ctx->report["c1"] = last.c1;
  ctx->report["c2"] = last.c2;
  ctx->report["bound"] = last.bound;
}

void Resolvent_(Context* ctx) {
  const ExperimentConfig& c = ctx->c;
  const Spectrum blocks = BuildSpectrum(c.op, c.n);
  double zeta = 0.0;
  if (c.zeta) {
    zeta = *c.zeta;
  } else {
    double top = -INFINITY;
    for (const SpectralBlock& b : blocks) {
      top = std::max({top, b.lambda_plus.real(),
                      b.dim == 2 ? b.lambda_minus.real() : -INFINITY});
    }
    zeta = top < 0.0 ? 0.0 : top + 1.0;
  }
  const ResolventScan s = ScanResolventLine(blocks, zeta);
  CsvWriter w = ctx->Csv("", {"eta", "norm"});
  for (size_t i = 0; i < s.eta.size(); ++i) w.Row({s.eta[i], s.ar_norm[i]});
  CsvWriter v = ctx->Csv("witness", {"k", "mu", "witness_norm"});
  for (const ResolventWitness& x : s.witnesses) v.Row({x.k + 1, x.mu, x.norm});
  ctx->report["zeta"] = zeta;
  ctx->report["sup_ar"] = s.sup_ar;
  ctx->report["sup_r"] = s.sup_r;
  ctx->report["witness_slope"] = s.witness_slope;
}

void Admissible_(Context* ctx) {
  const AdmissibilityReport r = CheckAdmissibility(ctx->c.op, ctx->c.drift);
  CsvWriter w = ctx->Csv("", {"statement", "applicable", "admissible",
                              "condition", "holds", "detail"});
  for (const StatementVerdict& s : r.statements) {
    for (const Condition& k : s.conditions) {
      w.Row({s.statement, s.applicable, s.admissible, k.name, k.holds,
             k.detail});
    }
  }
  ctx->report = AdmissibilityJson(r);
}

using Handler = std::function<void(Context*)>;

const std::map<std::string, Handler>& Handlers() {
  static const std::map<std::string, Handler> h = {
      {"spectrum", Spectrum_},         {"gramian", Gramian_},
      {"control", Control_},           {"trace", Trace_},
      {"convolution", Convolution_},   {"simulate", Simulate_},
      {"uniqueness", Uniqueness_},     {"galerkin", Galerkin_},
      {"counterexample", Counterexample_}, {"itotanaka", ItoTanaka_},
      {"kolmogorov", Kolmogorov_},     {"maxreg", MaxReg_},
      {"resolvent", Resolvent_},       {"admissible", Admissible_},
  };
  return h;
}

json Versions() {
  return {{"spdekit", "0.1.0"},
          {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." +
                        std::to_string(EIGEN_MAJOR_VERSION) + "." +
                        std::to_string(EIGEN_MINOR_VERSION)},
          {"boost", std::to_string(BOOST_VERSION / 100000) + "." +
                        std::to_string(BOOST_VERSION / 100 % 1000)},
          {"compiler", __VERSION__}};
}

}  // namespace

const std::vector<std::string>& CommandNames() {
  static const std::vector<std::string> names = {
      "spectrum",   "gramian",        "control",   "trace",
      "convolution", "simulate",      "uniqueness", "galerkin",
      "counterexample", "itotanaka",  "kolmogorov", "maxreg",
      "resolvent",  "admissible"};
  return names;
}

RunResult Run(const std::string& command, const ExperimentConfig& config) {
  RunResult result;
  const auto it = Handlers().find(command);
  if (it == Handlers().end()) {
    result.exit_code = kExitConfig;
    result.message = "unknown command '" + command + "'";
    return result;
  }
  const auto start = std::chrono::steady_clock::now();
  Context ctx{config, ConfigHash(config), command, {}, json::object()};
  json manifest;
  manifest["command"] = command;
  manifest["config_hash"] = ctx.hash;
  manifest["config"] = ToJson(config);
  manifest["seed"] = config.seed;
  manifest["statement"] = config.statement;
  manifest["versions"] = Versions();
  try {
    EnsureDirectory(config.out);
    AdmissibilityReport adm;
    try {
      adm = CheckAdmissibility(config.op, config.drift);
      manifest["admissibility"] = AdmissibilityJson(adm);
    } catch (const Error& e) {
      manifest["admissibility"] = {{"error", e.what()}};
    }
    if (!config.statement.empty()) {
      const StatementVerdict* s = adm.Find(config.statement);
      if (s == nullptr) {
        Throw(ErrorCode::kConfigInvalid,
              "statement: unknown '" + config.statement + "'");
      }
      if (!s->applicable || !s->admissible) {
        result.exit_code = kExitInadmissible;
        result.message = "configuration is not covered by '" +
                         config.statement + "' (" + s->binding + ")";
      }
    }
    if (result.exit_code == kExitOk) {
      it->second(&ctx);
      WriteJson(ctx.Path("", "json"), ctx.report);
    }
  } catch (const Error& e) {
    result.exit_code = ExitCodeFor(e.code());
    result.message = e.what();
  } catch (const std::exception& e) {
    result.exit_code = kExitNumeric;
    result.message = e.what();
  }
  manifest["exit_code"] = result.exit_code;
  manifest["message"] = result.message;
  manifest["files"] = ctx.files;
  manifest["wall_time_seconds"] =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
          .count();
  try {
    const std::string path = config.out + "/" + command + ".manifest.json";
    WriteJson(path, manifest);
    ctx.files.push_back(path);
  } catch (const Error& e) {
    if (result.exit_code == kExitOk) {
      result.exit_code = kExitConfig;
      result.message = e.what();
    }
  }
  result.files = ctx.files;
  return result;
}

}  // namespace spdekit::cli
