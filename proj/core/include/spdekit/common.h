#pragma once

#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

namespace spdekit {

enum class ErrorCode {
  kInvalidSpec,
  kDegenerateMode,
  kSpectrumMismatch,
  kSpectrumHit,
  kInsufficientModes,
  kSingularGramian,
  kDegreeTooSmall,
  kRangeViolation,
  kGridTooCoarse,
  kPicardNoConvergence,
  kUnsupportedCandidate,
  kMissingKolmogorovSolution,
  kQuadratureDegreeTooLow,
  kContractionFailure,
  kResidualTooLarge,
  kDivergentGammaIntegral,
  kOutOfRange,
  kConfigInvalid,
};

const char* ErrorCodeName(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what);
  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] void Throw(ErrorCode code, const std::string& what);

// Compensated accumulator. Adding the same values in the same order always
// gives the same bits, which is what the parallel reductions rely on.
class KahanSum {
 public:
  void Add(double x) {
    const double y = x - c_;
    const double t = s_ + y;
    c_ = (t - s_) - y;
    s_ = t;
  }
  double value() const { return s_; }

 private:
  double s_ = 0.0;
  double c_ = 0.0;
};

struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;
};

// Ordinary least squares y = slope * x + intercept.
LineFit FitLine(const std::vector<double>& x, const std::vector<double>& y);

// Fit of log(y) against log(x); entries with non-positive values are skipped.
LineFit FitLogLog(const std::vector<double>& x, const std::vector<double>& y);

// Runs fn(i) for i in [0, n) on up to `threads` workers. Work is split into
// contiguous chunks, so callers that write results into per-index slots and
// reduce afterwards get results that do not depend on the worker count.
void ParallelFor(int n, int threads, const std::function<void(int)>& fn);

int DefaultThreadCount();

}  // namespace spdekit
