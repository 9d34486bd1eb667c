#pragma once

#include <cmath>
#include <cstdint>

#include "ri/common.hpp"

namespace ri {

// Philox4x32-10 block cipher. Counter-based: the k-th block of a stream is a
// pure function of (master_seed, stream_index, k), so any replica can be
// generated on any worker and streams never overlap.
struct Philox4x32 {
  static constexpr uint32_t kMul0 = 0xD2511F53u;
  static constexpr uint32_t kMul1 = 0xCD9E8D57u;
  static constexpr uint32_t kWeyl0 = 0x9E3779B9u;
  static constexpr uint32_t kWeyl1 = 0xBB67AE85u;

  static inline void round(uint32_t c[4], uint32_t k0, uint32_t k1) {
    uint64_t p0 = uint64_t(kMul0) * c[0];
    uint64_t p1 = uint64_t(kMul1) * c[2];
    uint32_t hi0 = uint32_t(p0 >> 32), lo0 = uint32_t(p0);
    uint32_t hi1 = uint32_t(p1 >> 32), lo1 = uint32_t(p1);
    uint32_t n0 = hi1 ^ c[1] ^ k0;
    uint32_t n1 = lo1;
    uint32_t n2 = hi0 ^ c[3] ^ k1;
    uint32_t n3 = lo0;
    c[0] = n0;
    c[1] = n1;
    c[2] = n2;
    c[3] = n3;
  }

  static inline void block(uint64_t ctr, uint64_t stream, uint64_t seed, uint32_t out[4]) {
    uint32_t c[4] = {uint32_t(ctr), uint32_t(ctr >> 32), uint32_t(stream), uint32_t(stream >> 32)};
    uint32_t k0 = uint32_t(seed), k1 = uint32_t(seed >> 32);
    for (int r = 0; r < 10; ++r) {
      round(c, k0, k1);
      k0 += kWeyl0;
      k1 += kWeyl1;
    }
    out[0] = c[0];
    out[1] = c[1];
    out[2] = c[2];
    out[3] = c[3];
  }
};

// One independent random stream, identified by (master_seed, stream_index).
class RngStream {
 public:
  RngStream() : RngStream(0, 0) {}
  RngStream(uint64_t master_seed, uint64_t stream_index)
      : seed_(master_seed), stream_(stream_index) {}

  uint64_t master_seed() const { return seed_; }
  uint64_t stream_index() const { return stream_; }

  inline uint32_t u32() {
    if (pos_ == 4) refill();
    return buf_[pos_++];
  }

  inline uint64_t u64() {
    uint64_t lo = u32();
    uint64_t hi = u32();
    return lo | (hi << 32);
  }

  // Uniform on the open interval (0,1); never returns 0 or 1, safe for logs.
  inline double uniform() { return (double(u64() >> 11) + 0.5) * 0x1.0p-53; }

  // Uniform integer in [0, n), exact (Lemire rejection, no modulo bias).
  inline uint32_t below(uint32_t n) {
    uint64_t m = uint64_t(u32()) * n;
    uint32_t lo = uint32_t(m);
    if (lo < n) {
      uint32_t thresh = uint32_t(-int32_t(n)) % n;
      while (lo < thresh) {
        m = uint64_t(u32()) * n;
        lo = uint32_t(m);
      }
    }
    return uint32_t(m >> 32);
  }

  inline bool coin() { return (u32() & 1u) != 0; }

 private:
  void refill() {
    Philox4x32::block(ctr_++, stream_, seed_, buf_);
    pos_ = 0;
  }

  uint64_t seed_;
  uint64_t stream_;
  uint64_t ctr_ = 0;
  uint32_t buf_[4] = {0, 0, 0, 0};
  int pos_ = 4;
};

namespace detail {

// Stirling-series correction ln k! - ((k+1/2) ln(k+1) - (k+1) + ln sqrt(2*pi)),
// exact table for small k, asymptotic series otherwise.
inline double binom_fc(int64_t k) {
  static const double table[10] = {
      0.08106146679532726, 0.04134069595540929, 0.02767792568499834, 0.02079067210376509,
      0.01664469118982119, 0.01387612882307075, 0.01189670994589177, 0.01041126526197209,
      0.009255462182712733, 0.008330563433362871};
  if (k < 10) return table[k];
  double kp = double(k) + 1.0;
  double r = 1.0 / kp;
  double r2 = r * r;
  return (0.08333333333333333 - (0.002777777777777778 - 0.0007936507936507937 * r2) * r2) * r;
}

}  // namespace detail

// Exact binomial sampling. Inversion by geometric skips when n*p is small,
// transformed rejection (BTRS) otherwise. n must fit in a double exactly.
inline int64_t sample_binomial(RngStream& rng, int64_t n, double p) {
  if (n <= 0 || p <= 0.0) return 0;
  if (p >= 1.0) return n;
  if (p > 0.5) return n - sample_binomial(rng, n, 1.0 - p);

  double np = double(n) * p;
  if (np < 10.0) {
    // Count successes by skipping over failure runs.
    double lq = std::log1p(-p);
    int64_t k = -1;
    int64_t pos = -1;
    while (true) {
      pos += int64_t(std::floor(std::log(rng.uniform()) / lq)) + 1;
      if (pos >= n) break;
      ++k;
    }
    return k + 1;
  }

  // BTRS (Hormann). Requires p <= 1/2 and n*p >= 10.
  double nd = double(n);
  double spq = std::sqrt(np * (1.0 - p));
  double b = 1.15 + 2.53 * spq;
  double a = -0.0873 + 0.0248 * b + 0.01 * p;
  double c = np + 0.5;
  double vr = 0.92 - 4.2 / b;
  double r = p / (1.0 - p);
  double alpha = (2.83 + 5.1 / b) * spq;
  double m = std::floor((nd + 1.0) * p);
  double lpq = std::log(r);
  double h = detail::binom_fc(int64_t(m)) + detail::binom_fc(n - int64_t(m));

  while (true) {
    double u = rng.uniform() - 0.5;
    double v = rng.uniform();
    double us = 0.5 - std::fabs(u);
    double kd = std::floor((2.0 * a / us + b) * u + c);
    if (kd < 0.0 || kd > nd) continue;
    if (us >= 0.07 && v <= vr) return int64_t(kd);
    v = std::log(v * alpha / (a / (us * us) + b));
    double ub = (m + 0.5) * std::log((m + 1.0) / (r * (nd - m + 1.0))) +
                (nd + 1.0) * std::log((nd - m + 1.0) / (nd - kd + 1.0)) +
                (kd + 0.5) * std::log(r * (nd - kd + 1.0) / (kd + 1.0)) + h -
                detail::binom_fc(int64_t(kd)) - detail::binom_fc(n - int64_t(kd));
    (void)lpq;
    if (v <= ub) return int64_t(kd);
  }
}

// Poisson sampling, exact. Inversion for small mean, via binomial splitting
// for large mean (Poisson(lam) == limit of Bin(n, lam/n); we instead use the
// standard PTRS-style rejection).
inline int64_t sample_poisson(RngStream& rng, double lam) {
  if (lam <= 0.0) return 0;
  if (lam < 30.0) {
    double l = std::exp(-lam);
    int64_t k = 0;
    double prod = rng.uniform();
    while (prod > l) {
      ++k;
      prod *= rng.uniform();
    }
    return k;
  }
  // Transformed rejection (Hormann PTRS).
  double slam = std::sqrt(lam);
  double loglam = std::log(lam);
  double b = 0.931 + 2.53 * slam;
  double a = -0.059 + 0.02483 * b;
  double invalpha = 1.1239 + 1.1328 / (b - 3.4);
  double vr = 0.9277 - 3.6224 / (b - 2.0);
  while (true) {
    double u = rng.uniform() - 0.5;
    double v = rng.uniform();
    double us = 0.5 - std::fabs(u);
    double kd = std::floor((2.0 * a / us + b) * u + lam + 0.43);
    if (us >= 0.07 && v <= vr) return int64_t(kd);
    if (kd < 0.0 || (us < 0.013 && v > us)) continue;
    if (std::log(v) + std::log(invalpha) - std::log(a / (us * us) + b) <=
        kd * loglam - lam - std::lgamma(kd + 1.0)) {
      return int64_t(kd);
    }
  }
}

// Poisson conditioned on being >= 1, by inversion on the shifted law.
inline int64_t sample_poisson_positive(RngStream& rng, double lam) {
  if (lam > 30.0) {
    // Conditioning is a no-op in double precision at this size.
    int64_t k = sample_poisson(rng, lam);
    return k > 0 ? k : 1;
  }
  double u = rng.uniform() * (-std::expm1(-lam));
  double term = std::exp(-lam) * lam;  // P[K=1]
  int64_t k = 1;
  double cum = term;
  while (u > cum && k < 1000) {
    ++k;
    term *= lam / double(k);
    cum += term;
  }
  return k;
}

}  // namespace ri
