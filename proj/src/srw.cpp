#include "ri/srw.hpp"

#include <algorithm>
#include <cmath>

namespace ri {

LeapPlan plan_leap(int64_t clearance) {
  // Contact probability during the block is bounded by
  //   3 P[Bin(N,1/3) > ntil] + 12 exp(-m^2 / (2 ntil)),
  // reflection plus Hoeffding per coordinate, Bernstein for the step counts.
  // Constants below keep the bound under ~3e-10 per leap.
  double m = double(clearance - 1);
  double w = m * m / 49.6;  // admissible ntil
  double n = 3.0 * w;
  for (int it = 0; it < 3; ++it) {
    double t = 8.03 + 3.27 * std::sqrt(std::max(n, 0.0));
    n = 3.0 * (w - t - 1.0);
  }
  if (!(n >= 16.0)) return {0, 0.0};
  LeapPlan plan;
  plan.steps = int64_t(n);
  double nd = double(plan.steps);
  double t = 8.03 + 3.27 * std::sqrt(nd);
  double ntil = nd / 3.0 + t;
  double bern = t * t / (2.0 * (2.0 * nd / 9.0 + t / 3.0));
  plan.eps = 3.0 * std::exp(-bern) + 12.0 * std::exp(-m * m / (2.0 * ntil));
  return plan;
}

Site leap_displacement(RngStream& rng, int64_t n_steps) {
  int64_t n1 = sample_binomial(rng, n_steps, 1.0 / 3.0);
  int64_t n2 = sample_binomial(rng, n_steps - n1, 0.5);
  int64_t n3 = n_steps - n1 - n2;
  Site d;
  d.x1 = 2 * sample_binomial(rng, n1, 0.5) - n1;
  d.x2 = 2 * sample_binomial(rng, n2, 0.5) - n2;
  d.x3 = 2 * sample_binomial(rng, n3, 0.5) - n3;
  return d;
}

double cap_upper_bound_sites(uint64_t count) {
  return double(count) * (cap_single_site() + 1e-9);
}

double cap_upper_bound_for_region(const Region& a) {
  Bounds b = a.bbox();
  double hx = 0.5 * double(b.hi.x1 - b.lo.x1);
  double hy = 0.5 * double(b.hi.x2 - b.lo.x2);
  double hz = 0.5 * double(b.hi.x3 - b.lo.x3);
  double r_circ = std::sqrt(hx * hx + hy * hy + hz * hz) + 1.0;
  // Enclosing-ball envelope cap(B_R) <= 3R + 20 (validated empirically at
  // small R against the Monte Carlo capacity; the true slope is ~2.09).
  double ball_env = 3.0 * r_circ + 20.0;
  double crude = cap_upper_bound_sites(uint64_t(a.size()));
  return std::min(crude, ball_env);
}

SiteSetTarget::SiteSetTarget(const std::vector<Site>& sites) {
  if (sites.empty()) fail(errc::invalid_input, "empty target set");
  set_.insert(sites.begin(), sites.end());
  box_ = Bounds{sites.front(), sites.front()};
  for (const Site& s : sites) {
    box_.lo.x1 = std::min(box_.lo.x1, s.x1);
    box_.lo.x2 = std::min(box_.lo.x2, s.x2);
    box_.lo.x3 = std::min(box_.lo.x3, s.x3);
    box_.hi.x1 = std::max(box_.hi.x1, s.x1);
    box_.hi.x2 = std::max(box_.hi.x2, s.x2);
    box_.hi.x3 = std::max(box_.hi.x3, s.x3);
  }
  cap_ub_ = cap_upper_bound_sites(set_.size());
}

HittingRecord run_until_hit(const Site& start, const SiteSetTarget& target, RngStream& rng,
                            const TruncationRule& rule) {
  return walk_certified(start, target, target.cap_ub(), rule.eps_ret, rng,
                        [&](const Site& s, HittingRecord& rec) {
                          if (target.contains(s)) {
                            rec.hit = true;
                            rec.hit_site = s;
                            return true;
                          }
                          return false;
                        });
}

namespace {

struct RegionTarget {
  const Region& region;
  Bounds box;
  const Bounds& bbox() const { return box; }
};

}  // namespace

HittingRecord run_until_hit(const Site& start, const Region& targets, RngStream& rng,
                            const TruncationRule& rule) {
  RegionTarget t{targets, targets.bbox()};
  double cap_ub = cap_upper_bound_for_region(targets);
  return walk_certified(start, t, cap_ub, rule.eps_ret, rng,
                        [&](const Site& s, HittingRecord& rec) {
                          if (targets.contains(s)) {
                            rec.hit = true;
                            rec.hit_site = s;
                            return true;
                          }
                          return false;
                        });
}

EscapeEstimate escape_probability(const Site& x, const SiteSetTarget& a, double eps_ret,
                                  uint64_t seed, uint64_t stream_base, uint64_t reps,
                                  const KernelConfig& cfg) {
  if (!a.contains(x)) fail(errc::invalid_input, "escape_probability: x not in A");
  if (!(eps_ret > 0.0 && eps_ret <= 0.01))
    fail(errc::invalid_input, "escape_probability: eps_ret outside (0, 0.01]");
  MeanStat st = mc_mean(reps, cfg, [&](uint64_t i) {
    RngStream rng(seed, stream_base + i);
    HittingRecord rec = run_until_hit(x, a, rng, TruncationRule{eps_ret});
    return rec.hit ? 0.0 : 1.0;
  });
  EscapeEstimate e;
  e.estimate = st.mean();
  e.stderr_ = st.stderr_of_mean();
  e.bias_bound = eps_ret;
  e.replicas = reps;
  return e;
}

EscapeEstimate escape_probability(const Site& x, const Region& a, double eps_ret, uint64_t seed,
                                  uint64_t stream_base, uint64_t reps, const KernelConfig& cfg) {
  return escape_probability(x, SiteSetTarget(a), eps_ret, seed, stream_base, reps, cfg);
}

SternResult stern_conditional_mean(int64_t a, uint64_t seed, uint64_t stream_base, uint64_t reps,
                                   const KernelConfig& cfg) {
  if (a < 2) fail(errc::invalid_input, "stern_conditional_mean: a must be >= 2");
  // Each replica is one *conditioned* outcome: excursions from 1 that hit 0
  // before a are discarded and redrawn within the replica.
  MeanStat st = mc_mean(reps, cfg, [&](uint64_t i) {
    RngStream rng(seed, stream_base + i);
    while (true) {
      int64_t pos = 1;
      uint64_t t = 0;
      while (pos != 0 && pos != a) {
        pos += rng.coin() ? 1 : -1;
        ++t;
      }
      if (pos == a) return double(t);
    }
  });
  SternResult r;
  r.estimate = st.mean();
  r.stderr_ = st.stderr_of_mean();
  r.conditioned_replicas = st.n;
  return r;
}

LoopEventResult loop_event_probability(const Site& x, const Rational& m, int64_t n, uint64_t seed,
                                       uint64_t stream_base, uint64_t reps,
                                       const KernelConfig& cfg) {
  if (reps < 10000) fail(errc::invalid_input, "loop_event_probability: reps must be >= 1e4");
  TrapAnchors anchors = trap_anchors(x, m, n);
  QuiverRegion q(anchors.mouth, m, n);
  const Site mouth = anchors.mouth;
  const Site tip = anchors.tip;
  const Site base = q.base;
  const int64_t len = q.len, rad = q.rad;

  auto in_cyl = [&](const Site& s) {
    int64_t d1 = s.x1 - base.x1;
    if (d1 < 0 || d1 > len) return false;
    return std::llabs(s.x2 - base.x2) <= rad && std::llabs(s.x3 - base.x3) <= rad;
  };
  auto on_shell = [&](const Site& s) {
    int64_t d1 = s.x1 - base.x1;
    int64_t t = std::max(std::llabs(s.x2 - base.x2), std::llabs(s.x3 - base.x3));
    return d1 == 0 || d1 == len || t == rad;
  };

  MeanStat st = mc_mean(reps, cfg, [&](uint64_t i) {
    RngStream rng(seed, stream_base + i);
    Site s = mouth;
    bool reached_tip = false;
    while (true) {
      s = neighbor(s, int(rng.below(6)));
      if (!in_cyl(s)) return 0.0;  // left the cylinder: quiver re-entry elsewhere
      if (s == tip) {
        reached_tip = true;
        continue;
      }
      if (on_shell(s)) {
        if (s == mouth) return reached_tip ? 1.0 : 0.0;
        return 0.0;
      }
    }
  });

  LoopEventResult r;
  int64_t seg = floor_inv_m_3ln_n(m, n);
  r.straight_factor = std::pow(6.0, -2.0 * double(seg));
  r.quiver_leg = st.mean();
  r.quiver_leg_stderr = st.stderr_of_mean();
  r.estimate = r.straight_factor * r.quiver_leg;
  r.stderr_ = r.straight_factor * r.quiver_leg_stderr;
  return r;
}

}  // namespace ri
