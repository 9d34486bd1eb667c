#pragma once

#include <string>
#include <vector>

#include "ri/common.hpp"
#include "ri/site.hpp"

namespace ri {

// Near-field table of the simple-random-walk Green's function g(0,x) on Z^3,
// generated by quadrature of the Bessel-product integral
//   g(0,x) = int_0^inf e^{-s} I_{x1}(s/3) I_{x2}(s/3) I_{x3}(s/3) ds,
// exact lattice symmetry by construction. Outside the table radius the
// asymptotic 3/(2 pi |x|) is used.
class GreenTable {
 public:
  static constexpr int64_t kDefaultRadius = 20;

  static GreenTable generate(int64_t radius = kDefaultRadius);
  static GreenTable load(const std::string& path);
  void save(const std::string& path) const;

  int64_t radius() const { return radius_; }

  bool in_table(const Site& d) const { return norm2_sq(d) <= radius_ * radius_; }

  // Table value; d must satisfy ||d|| <= radius.
  double at(const Site& d) const {
    int64_t side = 2 * radius_ + 1;
    int64_t i = (d.x1 + radius_) * side * side + (d.x2 + radius_) * side + (d.x3 + radius_);
    return cube_[size_t(i)];
  }

  // g(0,d) with far-field fallback.
  double g(const Site& d) const {
    if (in_table(d)) return at(d);
    return kFarCoeff / norm2(d);
  }

  static constexpr double kFarCoeff = 3.0 / (2.0 * 3.14159265358979323846);

 private:
  int64_t radius_ = 0;
  std::vector<double> cube_;
};

// Process-wide table (generated on first use).
const GreenTable& green_table();

inline double green_function(const Site& x, const Site& y) { return green_table().g(y - x); }

// Escape probability of the origin = 1/g(0,0); equals cap({0}).
double cap_single_site();

// Certified envelope g(0,d) <= kGHat / (1 + ||d||) for ||d|| >= kGHatMinDist
// (validated against the table and the asymptotic in the test suite).
constexpr double kGHat = 0.51;
constexpr double kGHatMinDist = 17.0;

// Exponentially scaled modified Bessel functions e^{-z} I_k(z), k = 0..kmax,
// by backward recurrence with the e^z normalization. Exposed for tests.
std::vector<double> scaled_bessel_i(double z, int kmax);

}  // namespace ri
