#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <boost/rational.hpp>

#include "spdekit/drift.h"
#include "spdekit/spectral.h"

namespace spdekit {

using Rational = boost::rational<int64_t>;

// Nearest fraction with denominator at most 10^6 that reproduces x to
// double precision, so 7/12 typed as 0.58333... is recovered exactly.
Rational ToRational(double x);
// "7/12", "0.75" or "3" without going through binary floating point.
Rational ParseRational(const std::string& text);
std::string FormatRational(const Rational& r);

// One inequality of a parameter range, e.g. "gamma < 1 - 3 alpha / 2".
struct Condition {
  std::string name;
  bool holds = false;
  std::string detail;  // the inequality with numbers substituted
};

struct StatementVerdict {
  std::string statement;
  bool applicable = false;  // the operator family matches the statement
  bool admissible = false;
  std::vector<Condition> conditions;
  // First violated condition, or the tightest one when all hold.
  std::string binding;
};

struct AdmissibilityReport {
  std::vector<StatementVerdict> statements;
  bool admissible = false;  // some applicable statement covers the run
  std::string covering;     // name of that statement
  bool clamp_convention = false;  // the drift uses the odd clamp extension

  const StatementVerdict* Find(const std::string& statement) const;
};

// Evaluates every parameter-range statement with exact rational arithmetic.
AdmissibilityReport CheckAdmissibility(const OperatorSpec& spec,
                                       const DriftSpec& drift);

// 2 - (2 - 2 alpha) / (2 gamma + alpha), clipped to [0, 1). Throws
// OutOfRange unless alpha in [1/2, 1) and 2 gamma + alpha > 0.
Rational ThetaThreshold(const Rational& alpha, const Rational& gamma);
double ThetaThreshold(double alpha, double gamma);

}  // namespace spdekit
