#include "ri/d4.hpp"

#include <algorithm>
#include <cmath>

#include "ri/common.hpp"

namespace ri::d4 {

void Bitset4D::reset(const Bounds4& b) {
  box_ = b;
  for (int i = 0; i < 4; ++i) ext_[i] = b.hi.x[i] - b.lo.x[i] + 1;
  words_.assign((uint64_t(b.volume()) + 63) / 64, 0);
}

TrapShape4 make_trap_shape(const Site4& x, double eps1, double eps2, int64_t n) {
  if (n < 3) fail(errc::degenerate_scale, "d4 trap: n too small");
  double ln_n = std::log(double(n));
  TrapShape4 t;
  t.base = x;
  t.segment_length = std::max<int64_t>(1, int64_t(std::floor(eps1 * ln_n)));
  t.shell_radius = std::max<int64_t>(1, int64_t(std::floor(std::sqrt(eps2 * ln_n))));
  for (int64_t j = 0; j <= t.segment_length; ++j) {
    Site4 s = x;
    s.x[0] += j;
    t.segment.push_back(s);
  }
  t.tip = t.segment.back();
  int64_t r = t.shell_radius;
  for (int64_t a = -r; a <= r; ++a)
    for (int64_t b = -r; b <= r; ++b)
      for (int64_t c = -r; c <= r; ++c)
        for (int64_t d = -r; d <= r; ++d) {
          if (std::max(std::max(std::llabs(a), std::llabs(b)),
                       std::max(std::llabs(c), std::llabs(d))) == 0)
            continue;
          Site4 s = t.tip;
          s.x[0] += a;
          s.x[1] += b;
          s.x[2] += c;
          s.x[3] += d;
          bool on_segment = false;
          for (const Site4& seg : t.segment) on_segment |= (seg == s);
          if (!on_segment) t.shell.push_back(s);
        }
  return t;
}

bool detect_trap4(const Bitset4D& occ, const TrapShape4& shape) {
  for (const Site4& s : shape.segment)
    if (!occ.test(s)) return false;
  for (const Site4& s : shape.shell)
    if (occ.test(s)) return false;
  return true;
}

namespace {

constexpr double kG4Far = 2.0 / (3.14159265358979323846 * 3.14159265358979323846);
constexpr double kG4Hat = 1.3;  // g4(0,d) <= kG4Hat/(1+|d|)^2 envelope

struct LeapPlan4 {
  int64_t steps = 0;
};

// Same reflection/Bernstein construction as in three dimensions, with four
// coordinates sharing the steps.
LeapPlan4 plan_leap4(int64_t clearance) {
  double m = double(clearance - 1);
  double w = m * m / 49.6;
  double n = 4.0 * w;
  for (int it = 0; it < 3; ++it) {
    double t = 8.3 + 3.0 * std::sqrt(std::max(n, 0.0));
    n = 4.0 * (w - t - 1.0);
  }
  if (!(n >= 16.0)) return {0};
  return {int64_t(n)};
}

Site4 leap_displacement4(RngStream& rng, int64_t n_steps) {
  int64_t n1 = sample_binomial(rng, n_steps, 0.25);
  int64_t rest = n_steps - n1;
  int64_t n2 = sample_binomial(rng, rest, 1.0 / 3.0);
  rest -= n2;
  int64_t n3 = sample_binomial(rng, rest, 0.5);
  int64_t n4 = rest - n3;
  Site4 d;
  int64_t ns[4] = {n1, n2, n3, n4};
  for (int i = 0; i < 4; ++i) d.x[i] = 2 * sample_binomial(rng, ns[i], 0.5) - ns[i];
  return d;
}

// Walks until certain escape (distance bound cap_ub*kG4Hat/(1+d)^2 < eps) or
// first window visit; calls visit(site) inside the window.
template <typename VisitFn>
bool walk4(const Bounds4& box, Site4 s, double cap_ub, double eps, RngStream& rng,
           VisitFn&& visit, bool record_start) {
  double r_star_sq = kG4Hat * cap_ub / (0.98 * eps);
  r_star_sq = std::max(r_star_sq, 64.0 * 64.0);
  bool first = true;
  bool hit_any = false;
  while (true) {
    if (box.contains(s)) {
      if (record_start || !first) {
        hit_any = true;
        if (!visit(s)) return true;
      }
      int dir = int(rng.below(8));
      s = neighbor4(s, dir);
      first = false;
      continue;
    }
    int64_t clearance = box.dist_inf(s);
    if (clearance >= 44) {
      double d2 = 0.0;
      for (int i = 0; i < 4; ++i) {
        double g = s.x[i] < box.lo.x[i] ? double(box.lo.x[i] - s.x[i])
                                        : (s.x[i] > box.hi.x[i] ? double(s.x[i] - box.hi.x[i])
                                                                : 0.0);
        d2 += g * g;
      }
      if (d2 >= r_star_sq) return hit_any;
      LeapPlan4 plan = plan_leap4(clearance);
      if (plan.steps > 0) {
        Site4 d = leap_displacement4(rng, plan.steps);
        for (int i = 0; i < 4; ++i) s.x[i] += d.x[i];
        first = false;
        continue;
      }
    }
    s = neighbor4(s, int(rng.below(8)));
    first = false;
  }
}

}  // namespace

D4Report d4_trap_mode(const D4Options& opt, uint64_t seed, const KernelConfig& cfg) {
  if (!(opt.beta > 1.0)) fail(errc::invalid_bias, "d4_trap_mode: beta must exceed 1");
  TrapShape4 shape = make_trap_shape(Site4{}, opt.eps1, opt.eps2, opt.n);
  D4Report rep;
  rep.segment_length = shape.segment_length;
  rep.shell_radius = shape.shell_radius;

  int64_t margin = 3;
  Bounds4 box;
  box.lo = Site4{{-margin, -(shape.shell_radius + margin), -(shape.shell_radius + margin),
                  -(shape.shell_radius + margin)}};
  box.hi = Site4{{shape.segment_length + shape.shell_radius + margin,
                  shape.shell_radius + margin, shape.shell_radius + margin,
                  shape.shell_radius + margin}};
  double cap_ub = double(box.volume());  // cap({x}) <= 1 per site in d4

  // Pilot: entry law and capacity from far-shell hitting.
  Site4 center;
  double hw[4];
  for (int i = 0; i < 4; ++i) {
    center.x[i] = (box.lo.x[i] + box.hi.x[i]) / 2;
    hw[i] = 0.5 * double(box.hi.x[i] - box.lo.x[i]);
  }
  double r_circ = std::sqrt(hw[0] * hw[0] + hw[1] * hw[1] + hw[2] * hw[2] + hw[3] * hw[3]) + 1.0;
  double shell = std::max(16.0 * r_circ, r_circ + 60.0);

  std::vector<Site4> entries;
  MeanStat cap_stat;
  for (uint64_t i = 0; i < opt.pilot_launches; ++i) {
    RngStream rng(seed, (uint64_t(1) << 40) + i);
    double g[4];
    double n2;
    do {
      n2 = 0.0;
      for (double& v : g) {
        v = 2.0 * rng.uniform() - 1.0;
        n2 += v * v;
      }
    } while (n2 < 1e-12 || n2 > 1.0);
    double inv = shell / std::sqrt(n2);
    Site4 z = center;
    for (int k = 0; k < 4; ++k) z.x[k] += int64_t(std::lround(g[k] * inv));
    Site4 entry;
    bool hit = walk4(box, z, cap_ub, 1e-3, rng,
                     [&](const Site4& s) {
                       entry = s;
                       return false;  // stop at first visit
                     },
                     true);
    if (hit) {
      entries.push_back(entry);
      double d2 = 0.0;
      for (int k = 0; k < 4; ++k) {
        double dd = double(z.x[k] - center.x[k]);
        d2 += dd * dd;
      }
      cap_stat.add(d2 / kG4Far);
    } else {
      cap_stat.add(0.0);
    }
  }
  if (entries.size() < 100) fail(errc::invalid_input, "d4 pilot collected too few entries");
  rep.cap_window = cap_stat.mean();

  // Detection frequency across fresh samples; remember the first trap.
  Bitset4D occ;
  occ.reset(box);
  Bitset4D trap_occ;
  bool have_trap = false;
  MeanStat freq;
  for (uint64_t i = 0; i < opt.detection_reps; ++i) {
    RngStream rng(seed, (uint64_t(1) << 41) + i);
    occ.clear();
    int64_t ntraj = sample_poisson(rng, opt.u * rep.cap_window);
    for (int64_t t = 0; t < ntraj; ++t) {
      Site4 entry = entries[rng.below(uint32_t(entries.size()))];
      walk4(box, entry, cap_ub, 1e-3, rng,
            [&](const Site4& s) {
              occ.set_index(occ.index(s));
              return true;  // keep walking
            },
            true);
    }
    bool found = detect_trap4(occ, shape);
    freq.add(found ? 1.0 : 0.0);
    if (found && !have_trap) {
      trap_occ = occ;
      have_trap = true;
    }
  }
  rep.detection_frequency = freq.mean();
  rep.detection_stderr = freq.stderr_of_mean();
  rep.detection_reps = opt.detection_reps;
  rep.trap_found = have_trap;
  if (!have_trap) return rep;

  // Sojourn walks from the segment base in the first trapped environment.
  std::vector<double> exits(opt.walk_reps);
  for (uint64_t i = 0; i < opt.walk_reps; ++i) {
    RngStream rng(seed, (uint64_t(1) << 42) + i);
    Site4 s = shape.base;
    uint64_t steps = 0;
    while (steps < opt.walk_budget) {
      bool edge = false;
      for (int k = 0; k < 4; ++k)
        edge |= (s.x[k] == box.lo.x[k] || s.x[k] == box.hi.x[k]);
      if (edge) break;
      double w[8];
      Site4 nb[8];
      double total = 0.0;
      for (int d = 0; d < 8; ++d) {
        nb[d] = neighbor4(s, d);
        double wd = trap_occ.test(nb[d]) ? (d == 0 ? opt.beta : 1.0) : 0.0;
        w[d] = wd;
        total += wd;
      }
      if (total <= 0.0) fail(errc::isolated_site, "d4 walk: isolated site");
      double v = rng.uniform() * total;
      int pick = 7;
      for (int d = 0; d < 7; ++d) {
        v -= w[d];
        if (v < 0.0) {
          pick = d;
          break;
        }
      }
      s = nb[pick];
      ++steps;
    }
    exits[i] = double(steps);
  }
  double qs[5] = {0.10, 0.25, 0.50, 0.75, 0.90};
  for (int i = 0; i < 5; ++i) {
    size_t k = size_t(qs[i] * double(exits.size() - 1));
    std::nth_element(exits.begin(), exits.begin() + int64_t(k), exits.end());
    rep.exit_quantiles[i] = exits[k];
  }
  rep.sojourn_median = rep.exit_quantiles[2];
  (void)cfg;
  return rep;
}

}  // namespace ri::d4
