#pragma once

#include <string>
#include <vector>

#include "ri/kernels.hpp"
#include "ri/region.hpp"
#include "ri/srw.hpp"

namespace ri {

struct HarmonicProfile {
  Region region;
  std::vector<Site> sites;
  std::vector<double> estimate;   // escape probability per site
  std::vector<double> stderr_;    // per-site standard error
  double capacity = 0.0;          // sum of estimates
  double capacity_stderr = 0.0;   // quadrature-propagated
  double eps_ret = 0.0;
  uint64_t replicas_per_site = 0;
  uint64_t seed = 0;
  bool symmetrized = false;
};

struct HarmonicOptions {
  uint64_t replicas_per_site = 100000;
  double eps_ret = 1e-4;
  uint64_t max_sites = 100000;
  bool symmetrize = true;
};

HarmonicProfile harmonic_measure(const Region& a, uint64_t seed, uint64_t stream_base,
                                 const HarmonicOptions& opt, const KernelConfig& cfg);

struct NormalizedMeasure {
  std::vector<Site> sites;
  std::vector<double> prob;           // sums to exactly 1
  double pre_normalization_sum = 0.0;
};

NormalizedMeasure normalized_harmonic_measure(const HarmonicProfile& p);

struct TestFunction {
  std::vector<Site> support;
  std::vector<double> values;  // nonnegative
};

struct VariationalBound {
  bool is_feasible = false;
  double bound = 0.0;      // sum of phi over the support
  double min_slack = 0.0;  // min_x sum_y g(x,y) phi(y) - 1
};

// Feasibility certificate for the capacity variational principle: phi is
// admissible iff sum_y g(x,y) phi(y) >= 1 for every x in Q, in which case
// sum(phi) upper-bounds cap(Q) up to Green-table precision.
VariationalBound variational_upper_bound(const Region& q, const TestFunction& phi,
                                         const KernelConfig& cfg);

struct QuiverScanRow {
  int64_t n = 0;
  int64_t quiver_sites = 0;
  double cap_mc = 0.0;
  double cap_stderr = 0.0;
  double cap_bound = 0.0;   // best constant test function
  double phi_const = 0.0;
  bool mc_below_bound = false;  // cap_mc <= cap_bound + 3 sigma
};

std::vector<QuiverScanRow> quiver_capacity_scan(const Rational& m,
                                                const std::vector<int64_t>& n_list, uint64_t seed,
                                                const HarmonicOptions& opt,
                                                const KernelConfig& cfg);

// Lattice symmetries of a finite site set: signed coordinate permutations
// combined with the translation that maps the set onto itself.
struct LatticeSymmetry {
  int perm[3];
  int sign[3];
  Site shift;
  Site apply(const Site& s) const {
    int64_t v[3] = {s.x1, s.x2, s.x3};
    return Site{sign[0] * v[perm[0]] + shift.x1, sign[1] * v[perm[1]] + shift.x2,
                sign[2] * v[perm[2]] + shift.x3};
  }
};

std::vector<LatticeSymmetry> detect_symmetries(const std::vector<Site>& sites);

// Profile CSV: header carries region descriptor, seed and replica count;
// columns site_x1, site_x2, site_x3, e_estimate, e_stderr.
void write_profile_csv(const HarmonicProfile& p, const std::string& path);

}  // namespace ri
