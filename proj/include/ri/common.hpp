#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace ri {

// Error taxonomy shared by all modules. Each condition that callers are
// expected to handle gets its own code so tests can match on it.
enum class errc {
  invalid_input,
  degenerate_scale,
  degenerate_capacity,
  region_too_large,
  support_mismatch,
  configuration_too_rare,
  window_exhausted,
  invalid_bias,
  isolated_site,
  window_too_small,
  non_convergence,
  broken_path,
  no_crossing_path,
  excess_censoring,
  config_invalid,
  io_error,
};

class Error : public std::runtime_error {
 public:
  Error(errc code, const std::string& what) : std::runtime_error(what), code_(code) {}
  errc code() const { return code_; }

 private:
  errc code_;
};

[[noreturn]] inline void fail(errc code, const std::string& what) { throw Error(code, what); }

// Compensated accumulator. Monte Carlo merges happen in a fixed block order,
// so the summed result does not depend on the worker count.
class KahanSum {
 public:
  void add(double x) {
    double y = x - c_;
    double t = s_ + y;
    c_ = (t - s_) - y;
    s_ = t;
  }
  double value() const { return s_; }

 private:
  double s_ = 0.0;
  double c_ = 0.0;
};

// Count/sum/sumsq triple for a stream of bounded scores.
struct MeanStat {
  uint64_t n = 0;
  double sum = 0.0;
  double sumsq = 0.0;

  void add(double x) {
    ++n;
    sum += x;
    sumsq += x * x;
  }
  void merge(const MeanStat& o) {
    n += o.n;
    sum += o.sum;
    sumsq += o.sumsq;
  }
  double mean() const { return n ? sum / double(n) : 0.0; }
  double stderr_of_mean() const {
    if (n < 2) return 0.0;
    double m = mean();
    double var = (sumsq - double(n) * m * m) / double(n - 1);
    if (var < 0) var = 0;
    return std::sqrt(var / double(n));
  }
};

}  // namespace ri
