#pragma once

#include <cmath>
#include <cstdint>
#include <functional>

namespace ri {

// Lattice point of Z^3. x1 is the drift direction.
struct Site {
  int64_t x1 = 0;
  int64_t x2 = 0;
  int64_t x3 = 0;

  friend bool operator==(const Site&, const Site&) = default;
  friend auto operator<=>(const Site&, const Site&) = default;

  Site operator+(const Site& o) const { return {x1 + o.x1, x2 + o.x2, x3 + o.x3}; }
  Site operator-(const Site& o) const { return {x1 - o.x1, x2 - o.x2, x3 - o.x3}; }
};

inline int64_t norm1(const Site& s) {
  return std::llabs(s.x1) + std::llabs(s.x2) + std::llabs(s.x3);
}
inline int64_t norm_inf(const Site& s) {
  int64_t a = std::llabs(s.x1), b = std::llabs(s.x2), c = std::llabs(s.x3);
  return std::max(a, std::max(b, c));
}
inline int64_t norm2_sq(const Site& s) { return s.x1 * s.x1 + s.x2 * s.x2 + s.x3 * s.x3; }
inline double norm2(const Site& s) { return std::sqrt(double(norm2_sq(s))); }

inline bool adjacent(const Site& a, const Site& b) { return norm2_sq(a - b) == 1; }

// Neighbor order is fixed: +e1, -e1, +e2, -e2, +e3, -e3. Walk samplers index
// into this table, so the order is part of the reproducibility contract.
inline Site neighbor(const Site& s, int dir) {
  switch (dir) {
    case 0: return {s.x1 + 1, s.x2, s.x3};
    case 1: return {s.x1 - 1, s.x2, s.x3};
    case 2: return {s.x1, s.x2 + 1, s.x3};
    case 3: return {s.x1, s.x2 - 1, s.x3};
    case 4: return {s.x1, s.x2, s.x3 + 1};
    default: return {s.x1, s.x2, s.x3 - 1};
  }
}

struct SiteHash {
  size_t operator()(const Site& s) const {
    uint64_t h = 0x9E3779B97F4A7C15ull;
    auto mix = [&h](uint64_t v) {
      h ^= v + 0x9E3779B97F4A7C15ull + (h << 6) + (h >> 2);
      h *= 0xFF51AFD7ED558CCDull;
      h ^= h >> 33;
    };
    mix(uint64_t(s.x1));
    mix(uint64_t(s.x2));
    mix(uint64_t(s.x3));
    return size_t(h);
  }
};

}  // namespace ri
