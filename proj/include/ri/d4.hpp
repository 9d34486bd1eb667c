#pragma once

#include <cstdint>
#include <vector>

#include "ri/kernels.hpp"
#include "ri/rng.hpp"

namespace ri::d4 {

struct Site4 {
  int64_t x[4] = {0, 0, 0, 0};
  friend bool operator==(const Site4&, const Site4&) = default;
};

inline Site4 neighbor4(const Site4& s, int dir) {
  Site4 t = s;
  t.x[dir >> 1] += (dir & 1) ? -1 : 1;
  return t;
}

struct Bounds4 {
  Site4 lo, hi;
  bool contains(const Site4& s) const {
    for (int i = 0; i < 4; ++i)
      if (s.x[i] < lo.x[i] || s.x[i] > hi.x[i]) return false;
    return true;
  }
  int64_t dist_inf(const Site4& s) const {
    int64_t m = 0;
    for (int i = 0; i < 4; ++i) {
      if (s.x[i] < lo.x[i]) m = std::max(m, lo.x[i] - s.x[i]);
      if (s.x[i] > hi.x[i]) m = std::max(m, s.x[i] - hi.x[i]);
    }
    return m;
  }
  int64_t volume() const {
    int64_t v = 1;
    for (int i = 0; i < 4; ++i) v *= hi.x[i] - lo.x[i] + 1;
    return v;
  }
};

class Bitset4D {
 public:
  void reset(const Bounds4& b);
  void clear() { std::fill(words_.begin(), words_.end(), 0); }
  uint64_t index(const Site4& s) const {
    uint64_t i = 0;
    for (int k = 0; k < 4; ++k) i = i * uint64_t(ext_[k]) + uint64_t(s.x[k] - box_.lo.x[k]);
    return i;
  }
  bool test(const Site4& s) const {
    if (!box_.contains(s)) return false;
    uint64_t i = index(s);
    return (words_[i >> 6] >> (i & 63)) & 1u;
  }
  void set_index(uint64_t i) { words_[i >> 6] |= uint64_t(1) << (i & 63); }
  const Bounds4& box() const { return box_; }

 private:
  Bounds4 box_{};
  int64_t ext_[4] = {1, 1, 1, 1};
  std::vector<uint64_t> words_;
};

// Simplified straight-segment trap: occupied segment of length
// floor(eps1 ln n) in the drift direction, with the tip surrounded by a
// vacant l-infinity shell of radius ~ sqrt(eps2 ln n) (open at the segment).
struct TrapShape4 {
  Site4 base, tip;
  int64_t segment_length = 0;
  int64_t shell_radius = 0;
  std::vector<Site4> segment;
  std::vector<Site4> shell;  // must be vacant
};

TrapShape4 make_trap_shape(const Site4& x, double eps1, double eps2, int64_t n);
bool detect_trap4(const Bitset4D& occ, const TrapShape4& shape);

struct D4Options {
  double eps1 = 1.0;
  double eps2 = 1.0;
  double u = 1.0;
  double beta = 4.0;
  int64_t n = 20;
  uint64_t detection_reps = 2000;
  uint64_t walk_reps = 4000;
  uint64_t walk_budget = 400000;
  uint64_t pilot_launches = 20000;
};

struct D4Report {
  int64_t segment_length = 0;
  int64_t shell_radius = 0;
  double detection_frequency = 0.0;
  double detection_stderr = 0.0;
  uint64_t detection_reps = 0;
  bool trap_found = false;
  double exit_quantiles[5] = {0, 0, 0, 0, 0};
  double sojourn_median = 0.0;
  double cap_window = 0.0;
};

D4Report d4_trap_mode(const D4Options& opt, uint64_t seed, const KernelConfig& cfg);

}  // namespace ri::d4
