#include "spdekit/admissibility.h"

#include <algorithm>
#include <cmath>
#include <limits>

#include "spdekit/common.h"

namespace spdekit {

Rational ToRational(double x) {
  if (!std::isfinite(x)) Throw(ErrorCode::kOutOfRange, "non-finite parameter");
  // Continued fraction convergents until the fraction rounds back to x.
  const int64_t kMaxDen = 1000000;
  int64_t p0 = 0, q0 = 1, p1 = 1, q1 = 0;
  double r = x;
  for (int i = 0; i < 64; ++i) {
    const double a = std::floor(r);
    if (std::abs(a) > 1e12) break;
    const int64_t ai = static_cast<int64_t>(a);
    const int64_t p2 = ai * p1 + p0, q2 = ai * q1 + q0;
    if (q2 > kMaxDen) break;
    p0 = p1; q0 = q1; p1 = p2; q1 = q2;
    if (static_cast<double>(p1) / static_cast<double>(q1) == x) break;
    const double frac = r - a;
    if (frac == 0.0) break;
    r = 1.0 / frac;
  }
  if (static_cast<double>(p1) / static_cast<double>(q1) != x) {
    Throw(ErrorCode::kOutOfRange,
          "parameter " + std::to_string(x) +
              " has no fraction with denominator <= 1e6");
  }
  return Rational(p1, q1);
}

Rational ParseRational(const std::string& text) {
  const auto slash = text.find('/');
  try {
    if (slash != std::string::npos) {
      return Rational(std::stoll(text.substr(0, slash)),
                      std::stoll(text.substr(slash + 1)));
    }
    const auto dot = text.find('.');
    if (dot == std::string::npos) return Rational(std::stoll(text));
    const std::string whole = text.substr(0, dot);
    const std::string frac = text.substr(dot + 1);
    if (frac.size() > 15) return ToRational(std::stod(text));
    int64_t den = 1;
    for (size_t i = 0; i < frac.size(); ++i) den *= 10;
    const bool negative = !whole.empty() && whole[0] == '-';
    const int64_t w = whole.empty() || whole == "-" ? 0 : std::stoll(whole);
    const int64_t f = frac.empty() ? 0 : std::stoll(frac);
    return Rational(w) + Rational(negative ? -f : f, den);
  } catch (const std::logic_error&) {
    Throw(ErrorCode::kConfigInvalid, "not a number: '" + text + "'");
  }
}

std::string FormatRational(const Rational& r) {
  if (r.denominator() == 1) return std::to_string(r.numerator());
  return std::to_string(r.numerator()) + "/" + std::to_string(r.denominator());
}

const StatementVerdict* AdmissibilityReport::Find(
    const std::string& statement) const {
  for (const StatementVerdict& s : statements) {
    if (s.statement == statement) return &s;
  }
  return nullptr;
}

Rational ThetaThreshold(const Rational& alpha, const Rational& gamma) {
  if (alpha < Rational(1, 2) || alpha >= Rational(1)) {
    Throw(ErrorCode::kOutOfRange, "theta threshold needs alpha in [1/2, 1)");
  }
  const Rational s = 2 * gamma + alpha;
  if (s <= Rational(0)) Throw(ErrorCode::kOutOfRange, "need 2 gamma + alpha > 0");
  const Rational t = Rational(2) - (Rational(2) - 2 * alpha) / s;
  if (t < Rational(0)) return Rational(0);
  // Above 1 no theta in (0, 1) qualifies; report 1 as the (excluded) bound.
  return std::min(t, Rational(1));
}

double ThetaThreshold(double alpha, double gamma) {
  if (!(alpha >= 0.5 && alpha < 1.0)) {
    Throw(ErrorCode::kOutOfRange, "theta threshold needs alpha in [1/2, 1)");
  }
  const double s = 2.0 * gamma + alpha;
  if (!(s > 0.0)) Throw(ErrorCode::kOutOfRange, "need 2 gamma + alpha > 0");
  return std::clamp(2.0 - (2.0 - 2.0 * alpha) / s, 0.0, 1.0);
}

namespace {

std::string F(const Rational& r) { return FormatRational(r); }

class Builder {
 public:
  explicit Builder(std::string name) { v_.statement = std::move(name); }

  // lhs < rhs (strict) or lhs <= rhs.
  void Require(const std::string& name, const Rational& lhs,
               const Rational& rhs, bool strict) {
    const bool holds = strict ? lhs < rhs : lhs <= rhs;
    Add(name, holds,
        F(lhs) + (strict ? " < " : " <= ") + F(rhs),
        boost::rational_cast<double>(rhs - lhs));
  }

  void Flag(const std::string& name, bool holds, const std::string& detail) {
    Add(name, holds, detail, holds ? std::numeric_limits<double>::infinity()
                                   : -1.0);
  }

  StatementVerdict Finish(bool applicable) {
    v_.applicable = applicable;
    v_.admissible = applicable;
    double tight = std::numeric_limits<double>::infinity();
    for (size_t i = 0; i < v_.conditions.size(); ++i) {
      if (!v_.conditions[i].holds) {
        v_.admissible = false;
        v_.binding = v_.conditions[i].name;
        break;
      }
      if (slack_[i] < tight) {
        tight = slack_[i];
        v_.binding = v_.conditions[i].name;
      }
    }
    return v_;
  }

 private:
  void Add(const std::string& name, bool holds, const std::string& detail,
           double slack) {
    v_.conditions.push_back({name, holds, detail});
    slack_.push_back(slack);
  }

  StatementVerdict v_;
  std::vector<double> slack_;
};

// Growth exponent delta of the Lambda eigenvalues, mu_k ~ k^delta.
Rational GrowthExponent(const OperatorSpec& spec) {
  const Rational two_over_m(2, spec.m);
  return spec.family == Family::kDampedBeam ? 2 * two_over_m : two_over_m;
}

void DampedRanges(Builder* b, const Rational& alpha, const Rational& gamma,
                  const Rational& theta, const Rational& alpha_max) {
  b->Require("alpha >= 1/2", Rational(1, 2), alpha, false);
  b->Require("alpha < " + F(alpha_max), alpha, alpha_max, true);
  b->Require("gamma >= 0", Rational(0), gamma, false);
  b->Require("gamma < 1 - 3 alpha / 2", gamma, Rational(1) - 3 * alpha / 2,
             true);
  if (alpha >= Rational(1, 2) && alpha < Rational(1) && 2 * gamma + alpha > Rational(0)) {
    const Rational s = 2 * gamma + alpha;
    const Rational raw = Rational(2) - (Rational(2) - 2 * alpha) / s;
    b->Require("theta > 2 - (2 - 2 alpha) / (2 gamma + alpha)", raw, theta,
               true);
  } else {
    b->Flag("theta > 2 - (2 - 2 alpha) / (2 gamma + alpha)", false,
            "threshold undefined outside alpha in [1/2, 1)");
  }
  b->Require("theta < 1", theta, Rational(1), true);
}

StatementVerdict DampedGeneral(const OperatorSpec& spec, const Rational& a,
                               const Rational& g, const Rational& th) {
  Builder b("damped-general");
  DampedRanges(&b, a, g, th, Rational(2, 3));
  const Rational delta = GrowthExponent(spec);
  const bool trace = 2 * g * delta > Rational(1);
  const bool spacing = delta * (2 * g + a) > Rational(1);
  b.Flag("Lambda^{-2 gamma} trace class or delta > 1 / (2 gamma + alpha)",
         trace || spacing,
         "2 gamma delta = " + F(2 * g * delta) + ", delta (2 gamma + alpha) = " +
             F(delta * (2 * g + a)) + " (need > 1)");
  return b.Finish(spec.damped());
}

StatementVerdict DampedWave1d(const OperatorSpec& spec, const Rational& a,
                              const Rational& g, const Rational& th) {
  Builder b("damped-wave-1d");
  DampedRanges(&b, a, g, th, Rational(2, 3));
  b.Require("gamma > 1/4 - alpha / 2", Rational(1, 4) - a / 2, g, true);
  return b.Finish(spec.family == Family::kDampedWave && spec.m == 1 &&
                  spec.bc == Boundary::kDirichlet);
}

StatementVerdict DampedBeam(const OperatorSpec& spec, const Rational& a,
                            const Rational& g, const Rational& th) {
  Builder b("damped-beam");
  const Rational m(spec.m);
  DampedRanges(&b, a, g, th, std::min(Rational(2, 3), Rational(1) - m / 8));
  b.Require("gamma > m / 8 - alpha / 2", m / 8 - a / 2, g, true);
  return b.Finish(spec.family == Family::kDampedBeam && spec.m >= 1 &&
                  spec.m <= 3 && spec.bc == Boundary::kDirichlet);
}

StatementVerdict HeatLaplacian(const OperatorSpec& spec, const Rational& beta,
                               const Rational& g, const Rational& th) {
  Builder b("heat-laplacian");
  const Rational upper = th / (Rational(2) - th);
  b.Require("theta > 0", Rational(0), th, true);
  b.Require("theta < 1", th, Rational(1), true);
  switch (spec.m) {
    case 1:
      b.Require("gamma >= 0", Rational(0), g, false);
      break;
    case 2:
      b.Require("gamma > 0", Rational(0), g, true);
      break;
    default:
      b.Require("gamma > 1/2", Rational(1, 2), g, true);
      b.Require("theta > 2/3", Rational(2, 3), th, true);
      break;
  }
  b.Require("gamma < theta / (2 - theta)", g, upper, true);
  b.Flag("beta = 1", beta == Rational(1), "beta = " + F(beta));
  return b.Finish(spec.family == Family::kHeat && spec.m >= 1 && spec.m <= 3);
}

StatementVerdict HeatFractional(const OperatorSpec& spec, const Rational& beta,
                                const Rational& g, const Rational& th) {
  Builder b("heat-fractional");
  const Rational m(spec.m);
  b.Require("gamma > (m - 2 beta) / 2", (m - 2 * beta) / 2, g, true);
  b.Require("gamma < beta theta / (2 - theta)", g,
            beta * th / (Rational(2) - th), true);
  b.Require("theta < 1", th, Rational(1), true);
  return b.Finish(spec.family == Family::kHeat);
}

// B = G C with U = H. Heat only; the drift's output profile g must lie in
// the range of (-Delta)^{-gamma/2}, which finitely many modes always do.
StatementVerdict Structure(const OperatorSpec& spec, const DriftSpec& drift,
                           const Rational& g) {
  Builder b("structure-condition");
  const bool finite_profile = drift.g.constant == 0.0 || g == Rational(0);
  b.Flag("B = G C with C bounded and Hoelder", finite_profile,
         finite_profile ? "output profile in the range of G"
                        : "constant profile g is not in the range of G");
  return b.Finish(spec.family == Family::kHeat);
}

}  // namespace

AdmissibilityReport CheckAdmissibility(const OperatorSpec& spec,
                                       const DriftSpec& drift) {
  const Rational alpha = ToRational(spec.alpha);
  const Rational gamma = ToRational(spec.gamma);
  const Rational beta = ToRational(spec.beta);
  const Rational theta = ToRational(drift.theta);
  AdmissibilityReport r;
  r.statements.push_back(DampedGeneral(spec, alpha, gamma, theta));
  r.statements.push_back(DampedWave1d(spec, alpha, gamma, theta));
  r.statements.push_back(DampedBeam(spec, alpha, gamma, theta));
  r.statements.push_back(HeatLaplacian(spec, beta, gamma, theta));
  r.statements.push_back(HeatFractional(spec, beta, gamma, theta));
  r.statements.push_back(Structure(spec, drift, gamma));
  // The specific statements come first in the search; the general damped
  // one also needs the Hoelder series, checked numerically elsewhere.
  const char* order[] = {"damped-wave-1d", "damped-beam", "heat-laplacian",
                         "heat-fractional", "damped-general"};
  for (const char* name : order) {
    const StatementVerdict* s = r.Find(name);
    if (s->applicable && s->admissible) {
      r.admissible = true;
      r.covering = name;
      break;
    }
  }
  r.clamp_convention = drift.kind == DriftKind::kClamp;
  return r;
}

}  // namespace spdekit
