#include "config.h"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "spdekit/common.h"

namespace spdekit::cli {

using nlohmann::json;

namespace {

[[noreturn]] void Invalid(const std::string& path, const std::string& reason) {
  Throw(ErrorCode::kConfigInvalid, path + ": " + reason);
}

// Reads an object and complains about keys nobody asked for, which is
// where typos in hand-edited configs end up.
class Reader {
 public:
  Reader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) Invalid(path_, "expected an object");
  }
  ~Reader() noexcept(false) {
    if (std::uncaught_exceptions() > 0) return;
    for (auto it = j_.begin(); it != j_.end(); ++it) {
      if (!seen_.count(it.key())) Invalid(Path(it.key()), "unknown key");
    }
  }

  std::string Path(const std::string& key) const {
    return path_.empty() ? key : path_ + "." + key;
  }

  bool Has(const std::string& key) {
    seen_.insert(key);
    return j_.contains(key) && !j_.at(key).is_null();
  }

  const json& Sub(const std::string& key) {
    seen_.insert(key);
    return j_.at(key);
  }

  template <typename T>
  void Get(const std::string& key, T* out) {
    if (!Has(key)) return;
    const json& v = j_.at(key);
    try {
      if constexpr (std::is_same_v<T, double>) {
        if (!v.is_number()) Invalid(Path(key), "expected a number");
        *out = v.get<double>();
        if (!std::isfinite(*out)) Invalid(Path(key), "not finite");
      } else if constexpr (std::is_integral_v<T>) {
        if (!v.is_number_integer() && !v.is_number_unsigned()) {
          Invalid(Path(key), "expected an integer");
        }
        *out = v.get<T>();
      } else {
        *out = v.get<T>();
      }
    } catch (const json::exception& e) {
      Invalid(Path(key), e.what());
    }
  }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

SpatialFunction ReadFunction(const json& j, const std::string& path) {
  SpatialFunction f;
  Reader r(j, path);
  r.Get("constant", &f.constant);
  r.Get("modes", &f.modes);
  return f;
}

json WriteFunction(const SpatialFunction& f) {
  return {{"constant", f.constant}, {"modes", f.modes}};
}

}  // namespace

void ExperimentConfig::Validate() const {
  op.Validate();
  drift.Validate();
  if (n < 1) Invalid("operator.n", "must be positive");
  if (threads < 1) Invalid("threads", "must be positive");
  if (!(grid.T > 0.0)) Invalid("grid.T", "must be positive");
  if (grid.steps < 1) Invalid("grid.steps", "must be positive");
  for (int s : grid.ladder) {
    if (s < 1) Invalid("grid.ladder", "levels must be positive");
  }
  if (samples < 1) Invalid("samples", "must be positive");
  if (static_cast<int>(x0.size()) > n * (op.damped() ? 2 : 1)) {
    Invalid("x0", "longer than the truncated state");
  }
  if (kolmogorov.modes < 1 || kolmogorov.modes > 3) {
    Invalid("kolmogorov.modes", "the tensor grid supports 1 to 3 modes");
  }
  if (kolmogorov.points < 2) Invalid("kolmogorov.points", "need at least 2");
  if (kolmogorov.time_steps < 1) Invalid("kolmogorov.time_steps", "must be positive");
  if (forcing_samples < 2) Invalid("regularity.forcing_samples", "need at least 2");
  if (!(control_t > 0.0)) Invalid("control.t", "must be positive");
  if (galerkin_reference < 1) Invalid("galerkin.reference", "must be positive");
  for (int g : galerkin_ladder) {
    if (g < 1 || g > galerkin_reference) {
      Invalid("galerkin.ladder", "levels must lie in [1, reference]");
    }
  }
}

ExperimentConfig FromJson(const json& j) {
  ExperimentConfig c;
  Reader top(j, "");
  top.Get("preset", &c.preset);
  top.Get("statement", &c.statement);
  if (!top.Has("seed")) Invalid("seed", "required");
  top.Get("seed", &c.seed);
  top.Get("threads", &c.threads);
  top.Get("out", &c.out);
  if (top.Has("operator")) {
    Reader r(top.Sub("operator"), "operator");
    std::string family = FamilyName(c.op.family), bc = BoundaryName(c.op.bc);
    r.Get("family", &family);
    r.Get("bc", &bc);
    try {
      c.op.family = ParseFamily(family);
      c.op.bc = ParseBoundary(bc);
    } catch (const Error& e) {
      Invalid("operator", e.what());
    }
    r.Get("m", &c.op.m);
    r.Get("alpha", &c.op.alpha);
    r.Get("rho", &c.op.rho);
    r.Get("beta", &c.op.beta);
    r.Get("gamma", &c.op.gamma);
    r.Get("length", &c.op.length);
    r.Get("n", &c.n);
  }
  if (top.Has("drift")) {
    Reader r(top.Sub("drift"), "drift");
    std::string kind = DriftKindName(c.drift.kind);
    r.Get("kind", &kind);
    try {
      c.drift.kind = ParseDriftKind(kind);
    } catch (const Error& e) {
      Invalid("drift.kind", e.what());
    }
    r.Get("theta", &c.drift.theta);
    r.Get("r", &c.drift.r);
    if (r.Has("g")) c.drift.g = ReadFunction(r.Sub("g"), "drift.g");
    if (r.Has("h")) c.drift.h = ReadFunction(r.Sub("h"), "drift.h");
  }
  if (top.Has("noise")) {
    Reader r(top.Sub("noise"), "noise");
    r.Get("eta", &c.noise_eta);
    r.Get("truncation", &c.noise_truncation);
  }
  if (top.Has("grid")) {
    Reader r(top.Sub("grid"), "grid");
    r.Get("T", &c.grid.T);
    r.Get("steps", &c.grid.steps);
    r.Get("ladder", &c.grid.ladder);
  }
  top.Get("samples", &c.samples);
  top.Get("x0", &c.x0);
  if (top.Has("kolmogorov")) {
    Reader r(top.Sub("kolmogorov"), "kolmogorov");
    r.Get("modes", &c.kolmogorov.modes);
    r.Get("time_steps", &c.kolmogorov.time_steps);
    r.Get("points", &c.kolmogorov.points);
    r.Get("gh_order", &c.kolmogorov.gh_order);
    r.Get("scale", &c.kolmogorov.scale);
    r.Get("tolerance", &c.kolmogorov.tolerance);
    r.Get("max_iterations", &c.kolmogorov.max_iterations);
  }
  if (top.Has("regularity")) {
    Reader r(top.Sub("regularity"), "regularity");
    if (r.Has("zeta")) {
      double z = 0.0;
      r.Get("zeta", &z);
      c.zeta = z;
    }
    r.Get("forcing_samples", &c.forcing_samples);
  }
  if (top.Has("control")) {
    Reader r(top.Sub("control"), "control");
    r.Get("t", &c.control_t);
    r.Get("degree", &c.control_degree);
  }
  if (top.Has("galerkin")) {
    Reader r(top.Sub("galerkin"), "galerkin");
    r.Get("reference", &c.galerkin_reference);
    r.Get("ladder", &c.galerkin_ladder);
  }
  try {
    c.Validate();
  } catch (const Error& e) {
    if (e.code() == ErrorCode::kConfigInvalid) throw;
    Invalid("config", e.what());
  }
  return c;
}

json ToJson(const ExperimentConfig& c) {
  json j;
  j["preset"] = c.preset;
  j["statement"] = c.statement;
  j["seed"] = c.seed;
  j["threads"] = c.threads;
  j["out"] = c.out;
  j["operator"] = {{"family", FamilyName(c.op.family)},
                   {"bc", BoundaryName(c.op.bc)},
                   {"m", c.op.m},
                   {"alpha", c.op.alpha},
                   {"rho", c.op.rho},
                   {"beta", c.op.beta},
                   {"gamma", c.op.gamma},
                   {"length", c.op.length},
                   {"n", c.n}};
  j["drift"] = {{"kind", DriftKindName(c.drift.kind)},
                {"theta", c.drift.theta},
                {"r", c.drift.r},
                {"g", WriteFunction(c.drift.g)},
                {"h", WriteFunction(c.drift.h)}};
  j["noise"] = {{"eta", c.noise_eta}, {"truncation", c.noise_truncation}};
  j["grid"] = {{"T", c.grid.T}, {"steps", c.grid.steps},
               {"ladder", c.grid.ladder}};
  j["samples"] = c.samples;
  j["x0"] = c.x0;
  j["kolmogorov"] = {{"modes", c.kolmogorov.modes},
                     {"time_steps", c.kolmogorov.time_steps},
                     {"points", c.kolmogorov.points},
                     {"gh_order", c.kolmogorov.gh_order},
                     {"scale", c.kolmogorov.scale},
                     {"tolerance", c.kolmogorov.tolerance},
                     {"max_iterations", c.kolmogorov.max_iterations}};
  j["regularity"] = {{"zeta", c.zeta ? json(*c.zeta) : json(nullptr)},
                     {"forcing_samples", c.forcing_samples}};
  j["control"] = {{"t", c.control_t}, {"degree", c.control_degree}};
  j["galerkin"] = {{"reference", c.galerkin_reference},
                   {"ladder", c.galerkin_ladder}};
  return j;
}

ExperimentConfig LoadConfig(const std::string& path) {
  std::ifstream in(path);
  if (!in) Invalid(path, "cannot open");
  json j;
  try {
    j = json::parse(in, nullptr, true, /*ignore_comments=*/true);
  } catch (const json::parse_error& e) {
    Invalid(path, e.what());
  }
  return FromJson(j);
}

std::vector<std::string> PresetNames() {
  return {"heat-m1", "heat-m2", "heat-m3", "damped-wave-1d",
          "beam-m1", "beam-m2", "beam-m3", "counterexample"};
}

ExperimentConfig Preset(const std::string& name) {
  ExperimentConfig c;
  c.preset = name;
  c.seed = 1;
  c.drift.kind = DriftKind::kClamp;
  c.drift.theta = 0.75;
  c.drift.g.modes = {1.0};
  c.drift.h.modes = {1.0};
  c.x0 = {1.0};
  if (name.rfind("heat-m", 0) == 0 && name.size() == 7) {
    c.op.family = Family::kHeat;
    c.op.m = name[6] - '0';
    c.statement = "heat-laplacian";
    c.n = 64;
    // Fine enough that every uniqueness ladder grid is a subgrid.
    c.kolmogorov.time_steps = 512;
    c.samples = 256;
    switch (c.op.m) {
      case 1: c.op.gamma = 0.0; break;
      case 2: c.op.gamma = 0.25; break;
      case 3:
        c.op.gamma = 0.5625;
        c.drift.theta = 0.8;
        c.n = 27;
        c.galerkin_reference = 27;
        c.galerkin_ladder = {4, 8, 16};
        break;
      default: Invalid("preset", "unknown preset '" + name + "'");
    }
  } else if (name == "damped-wave-1d") {
    c.op.family = Family::kDampedWave;
    c.op.alpha = 7.0 / 12.0;
    c.op.gamma = 0.0;
    c.statement = "damped-wave-1d";
    c.n = 32;
  } else if (name.rfind("beam-m", 0) == 0 && name.size() == 7) {
    c.op.family = Family::kDampedBeam;
    c.op.m = name[6] - '0';
    c.op.alpha = 0.5;
    c.statement = "damped-beam";
    c.n = 32;
    switch (c.op.m) {
      case 1: c.op.gamma = 0.0; break;
      case 2: c.op.gamma = 0.125; break;
      case 3:
        c.op.gamma = 0.1875;
        c.drift.theta = 0.9;
        c.n = 27;
        c.galerkin_reference = 27;
        c.galerkin_ladder = {4, 8, 16};
        break;
      default: Invalid("preset", "unknown preset '" + name + "'");
    }
  } else if (name == "counterexample") {
    c.op.family = Family::kDampedWave;
    c.op.alpha = 7.0 / 12.0;
    c.op.rho = 1.0;
    c.op.length = M_PI;
    c.n = 4;
    c.drift = DriftSpec{};
    c.drift.kind = DriftKind::kCounterexample;
    c.x0.clear();
    c.grid.ladder = {64, 128, 256};
    c.samples = 1;
  } else {
    Invalid("preset", "unknown preset '" + name + "'");
  }
  if (c.op.damped()) c.galerkin_reference = std::min(c.galerkin_reference, 32);
  c.Validate();
  return c;
}

std::string ConfigHash(const ExperimentConfig& c) {
  json j = ToJson(c);
  // Where output goes and how many workers run it do not change results.
  j.erase("out");
  j.erase("threads");
  const std::string text = j.dump();
  uint64_t h = 1469598103934665603ull;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 1099511628211ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace spdekit::cli
