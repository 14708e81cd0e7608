#include "spdekit/common.h"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <thread>

namespace spdekit {

const char* ErrorCodeName(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidSpec: return "InvalidSpec";
    case ErrorCode::kDegenerateMode: return "DegenerateMode";
    case ErrorCode::kSpectrumMismatch: return "SpectrumMismatch";
    case ErrorCode::kSpectrumHit: return "SpectrumHit";
    case ErrorCode::kInsufficientModes: return "InsufficientModes";
    case ErrorCode::kSingularGramian: return "SingularGramian";
    case ErrorCode::kDegreeTooSmall: return "DegreeTooSmall";
    case ErrorCode::kRangeViolation: return "RangeViolation";
    case ErrorCode::kGridTooCoarse: return "GridTooCoarse";
    case ErrorCode::kPicardNoConvergence: return "PicardNoConvergence";
    case ErrorCode::kUnsupportedCandidate: return "UnsupportedCandidate";
    case ErrorCode::kMissingKolmogorovSolution:
      return "MissingKolmogorovSolution";
    case ErrorCode::kQuadratureDegreeTooLow: return "QuadratureDegreeTooLow";
    case ErrorCode::kContractionFailure: return "ContractionFailure";
    case ErrorCode::kResidualTooLarge: return "ResidualTooLarge";
    case ErrorCode::kDivergentGammaIntegral: return "DivergentGammaIntegral";
    case ErrorCode::kOutOfRange: return "OutOfRange";
    case ErrorCode::kConfigInvalid: return "ConfigInvalid";
  }
  return "Unknown";
}

Error::Error(ErrorCode code, const std::string& what)
    : std::runtime_error(std::string(ErrorCodeName(code)) + ": " + what),
      code_(code) {}

void Throw(ErrorCode code, const std::string& what) { throw Error(code, what); }

LineFit FitLine(const std::vector<double>& x, const std::vector<double>& y) {
  LineFit fit;
  const size_t n = std::min(x.size(), y.size());
  if (n < 2) return fit;
  double mx = 0, my = 0;
  for (size_t i = 0; i < n; ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0, sxy = 0, syy = 0;
  for (size_t i = 0; i < n; ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx == 0) return fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  fit.r2 = syy > 0 ? (sxy * sxy) / (sxx * syy) : 1.0;
  return fit;
}

LineFit FitLogLog(const std::vector<double>& x, const std::vector<double>& y) {
  std::vector<double> lx, ly;
  for (size_t i = 0; i < std::min(x.size(), y.size()); ++i) {
    if (x[i] > 0 && y[i] > 0) {
      lx.push_back(std::log(x[i]));
      ly.push_back(std::log(y[i]));
    }
  }
  return FitLine(lx, ly);
}

void ParallelFor(int n, int threads, const std::function<void(int)>& fn) {
  if (threads <= 1 || n <= 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  threads = std::min(threads, n);
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errors(threads);
  pool.reserve(threads);
  for (int w = 0; w < threads; ++w) {
    const int lo = static_cast<int>(static_cast<long long>(n) * w / threads);
    const int hi = static_cast<int>(static_cast<long long>(n) * (w + 1) / threads);
    pool.emplace_back([lo, hi, &fn, &err = errors[w]] {
      try {
        for (int i = lo; i < hi; ++i) fn(i);
      } catch (...) {
        err = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  // Lowest chunk first, so the error reported does not depend on timing.
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

int DefaultThreadCount() {
  if (const char* env = std::getenv("SPDEKIT_THREADS")) {
    const int v = std::atoi(env);
    if (v > 0) return v;
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

}  // namespace spdekit
