#pragma once

#include <unordered_set>
#include <vector>

#include "ri/green.hpp"
#include "ri/kernels.hpp"
#include "ri/region.hpp"
#include "ri/rng.hpp"
#include "ri/site.hpp"

namespace ri {

// Certified-return-bound stopping: a replica is scored "escaped" once the
// walk is at distance d from the target set with ghat * cap_ub / (1+d) below
// eps_ret, so the estimator bias is at most eps_ret. A small share of the
// budget is reserved for the far-field leap approximation (see plan_leap).
struct TruncationRule {
  double eps_ret = 1e-4;
};

constexpr double kLeapBiasShare = 0.02;  // of eps_ret
constexpr int64_t kLeapMinClearance = 44;
constexpr double kMinStopRadius = 64.0;

struct HittingRecord {
  Site start{};
  bool hit = false;
  Site hit_site{};
  uint64_t steps = 0;
  bool censored = false;   // stopping rule fired before a hit
  uint64_t leaps = 0;
  double leap_bias = 0.0;  // accumulated leap-approximation bound
};

// Far-field block move: n_steps of SRW taken at once, exact in law, valid
// while the walk provably (up to eps) cannot touch anything within the
// stated l-infinity clearance.
struct LeapPlan {
  int64_t steps = 0;
  double eps = 0.0;
};
LeapPlan plan_leap(int64_t clearance);
Site leap_displacement(RngStream& rng, int64_t n_steps);

// Upper bound on cap(A) used by the stopping rule: |A| * cap({0}), improved
// for large regions by the enclosing-ball envelope (validated in tests).
double cap_upper_bound_for_region(const Region& a);
double cap_upper_bound_sites(uint64_t count);

inline double stop_radius(double cap_ub, double eps_ret) {
  double r = kGHat * cap_ub / (0.98 * eps_ret) - 1.0;
  return std::max(r, kMinStopRadius);
}

// Small explicit target set with O(1) membership, for hot walk loops.
class SiteSetTarget {
 public:
  SiteSetTarget() = default;
  explicit SiteSetTarget(const std::vector<Site>& sites);
  explicit SiteSetTarget(const Region& r) : SiteSetTarget(r.members()) {}

  bool contains(const Site& s) const { return box_.contains(s) && set_.count(s) > 0; }
  const Bounds& bbox() const { return box_; }
  uint64_t size() const { return set_.size(); }
  double cap_ub() const { return cap_ub_; }

 private:
  std::unordered_set<Site, SiteHash> set_;
  Bounds box_{{0, 0, 0}, {-1, -1, -1}};
  double cap_ub_ = 0.0;
};

// First-hitting walk with the k >= 1 convention: the start site counts as
// hit only if the walk steps into the target again.
HittingRecord run_until_hit(const Site& start, const SiteSetTarget& target, RngStream& rng,
                            const TruncationRule& rule);
HittingRecord run_until_hit(const Site& start, const Region& targets, RngStream& rng,
                            const TruncationRule& rule);

struct EscapeEstimate {
  double estimate = 0.0;
  double stderr_ = 0.0;
  double bias_bound = 0.0;
  uint64_t replicas = 0;
};

// Monte Carlo escape probability P_x[T_A = infinity] for x in A.
EscapeEstimate escape_probability(const Site& x, const SiteSetTarget& a, double eps_ret,
                                  uint64_t seed, uint64_t stream_base, uint64_t reps,
                                  const KernelConfig& cfg);
EscapeEstimate escape_probability(const Site& x, const Region& a, double eps_ret, uint64_t seed,
                                  uint64_t stream_base, uint64_t reps, const KernelConfig& cfg);

struct SternResult {
  double estimate = 0.0;
  double stderr_ = 0.0;
  uint64_t conditioned_replicas = 0;
};

// E[T_a | T_a < T_0] for the 1-d SRW started at 1; exact value (a^2-1)/3.
SternResult stern_conditional_mean(int64_t a, uint64_t seed, uint64_t stream_base, uint64_t reps,
                                   const KernelConfig& cfg);

struct LoopEventResult {
  double estimate = 0.0;
  double stderr_ = 0.0;
  double straight_factor = 0.0;   // 6^{-2 floor((3/M) ln n)}, analytic
  double quiver_leg = 0.0;        // simulated middle-leg probability
  double quiver_leg_stderr = 0.0;
};

// Probability of the loop event: straight run to the mouth, excursion to the
// tip and back strictly inside the quiver, straight run back. The two
// straight legs enter analytically; only the quiver leg is simulated.
LoopEventResult loop_event_probability(const Site& x, const Rational& m, int64_t n, uint64_t seed,
                                       uint64_t stream_base, uint64_t reps,
                                       const KernelConfig& cfg);

// Shared walk loop: single steps near the target, leaps in the far field,
// certified stop at distance r_star. VisitFn is called for every position
// the walk occupies inside the target's bounding box (including the start).
template <class TargetLike, class HitFn>
HittingRecord walk_certified(const Site& start, const TargetLike& target, double cap_ub,
                             double eps_ret, RngStream& rng, HitFn&& on_inside) {
  HittingRecord rec;
  rec.start = start;
  const Bounds& box = target.bbox();
  const double r_star = stop_radius(cap_ub, eps_ret);
  const double r_star_sq = r_star * r_star;
  const double leap_budget = kLeapBiasShare * eps_ret;
  Site s = start;
  while (true) {
    int64_t clearance = box.dist_inf(s);
    if (clearance >= kLeapMinClearance) {
      // certified stop check (Euclidean distance to the bounding box)
      auto gap = [](int64_t v, int64_t a, int64_t b) {
        return v < a ? double(a - v) : (v > b ? double(v - b) : 0.0);
      };
      double g1 = gap(s.x1, box.lo.x1, box.hi.x1);
      double g2 = gap(s.x2, box.lo.x2, box.hi.x2);
      double g3 = gap(s.x3, box.lo.x3, box.hi.x3);
      if (g1 * g1 + g2 * g2 + g3 * g3 >= r_star_sq) {
        rec.censored = true;
        return rec;
      }
      LeapPlan plan = plan_leap(clearance);
      if (plan.steps > 0 && rec.leap_bias + plan.eps <= leap_budget) {
        s = s + leap_displacement(rng, plan.steps);
        rec.steps += uint64_t(plan.steps);
        rec.leap_bias += plan.eps;
        ++rec.leaps;
        continue;
      }
    }
    s = neighbor(s, int(rng.below(6)));
    ++rec.steps;
    if (box.contains(s)) {
      if (on_inside(s, rec)) return rec;
    }
  }
}

}  // namespace ri
