#include "ri/environ.hpp"

#include <algorithm>
#include <cmath>
#include <deque>

namespace ri {

WindowView make_window_view(const Region& window) {
  WindowView v;
  v.box = window.bbox();
  v.region = &window;
  if (std::holds_alternative<BoxRegion>(window.raw()) ||
      std::holds_alternative<CylinderRegion>(window.raw())) {
    v.kind = 0;
  } else if (const auto* b = std::get_if<BallRegion>(&window.raw())) {
    v.kind = 1;
    v.ball_center = b->center;
    v.ball_rsq = b->radius * b->radius;
  }
  return v;
}

Environment build_environment(const InterlacementSample& sample, double beta) {
  if (!(beta > 1.0)) fail(errc::invalid_bias, "build_environment: beta must exceed 1");
  Environment e;
  e.occ = &sample.occupancy;
  e.window_region = &sample.window;
  e.window = make_window_view(sample.window);
  e.beta = beta;
  e.log_beta = std::log(beta);
  return e;
}

Environment build_environment_raw(const Bitset3D& occ, const Region& window, double beta) {
  if (!(beta > 1.0)) fail(errc::invalid_bias, "build_environment: beta must exceed 1");
  Environment e;
  e.occ = &occ;
  e.window_region = &window;
  e.window = make_window_view(window);
  e.beta = beta;
  e.log_beta = std::log(beta);
  return e;
}

Site quenched_step(const Environment& env, const Site& x, RngStream& rng) {
  // Relative weights with beta^{x.e1} cancelled: +e1 edge carries beta, all
  // other occupied edges carry 1.
  Site nb[6];
  double w[6];
  double total = 0.0;
  for (int d = 0; d < 6; ++d) {
    nb[d] = neighbor(x, d);
    double wd = env.occupied(nb[d]) ? (d == 0 ? env.beta : 1.0) : 0.0;
    w[d] = wd;
    total += wd;
  }
  if (total <= 0.0) fail(errc::isolated_site, "quenched_step: site has no occupied neighbour");
  double v = rng.uniform() * total;
  for (int d = 0; d < 5; ++d) {
    v -= w[d];
    if (v < 0.0) return nb[d];
  }
  return nb[5];
}

std::optional<double> log_conductance(const Environment& env, const Site& x, const Site& y) {
  if (!adjacent(x, y) || !env.occupied(x) || !env.occupied(y)) return std::nullopt;
  return double(std::max(x.x1, y.x1)) * env.log_beta;
}

double log_pi(const Environment& env, const Site& x) {
  double acc = 0.0;
  bool any = false;
  for (int d = 0; d < 6; ++d) {
    Site y = neighbor(x, d);
    if (!env.occupied(y)) continue;
    any = true;
    acc += (d == 0) ? env.beta : 1.0;  // relative to beta^{x.e1}
  }
  if (!any) fail(errc::isolated_site, "log_pi: isolated site");
  return double(x.x1) * env.log_beta + std::log(acc);
}

NamedStop stop_from_region(const std::string& name, const Region& r) {
  return NamedStop{name, [r](const Site& s) { return r.contains(s); }};
}

bool cone_minus_contains(const ConeRegion& c, const Site& s) {
  if (s.x1 != -c.n) return false;
  int64_t lim = c.m.num * (c.n - s.x1);
  return std::llabs(s.x2) * c.m.den <= lim && std::llabs(s.x3) * c.m.den <= lim;
}

bool cone_plus_contains(const ConeRegion& c, const Site& s) {
  if (s.x1 <= -c.n || s.x1 > c.n) return false;
  int64_t lim = c.m.num * (c.n - s.x1);
  int64_t t = std::max(std::llabs(s.x2), std::llabs(s.x3));
  if (t * c.m.den > lim) return false;
  // on the rim, or exposed toward the narrowing end
  if (t * c.m.den > lim - c.m.num) return true;  // transversal neighbour leaves
  if (s.x1 == c.n) return true;
  int64_t lim_next = c.m.num * (c.n - s.x1 - 1);
  return t * c.m.den > lim_next;
}

WalkRecord run_walk(const Environment& env, const Site& start,
                    const std::vector<NamedStop>& stops, const WalkOptions& opt, RngStream& rng) {
  if (!env.occupied(start)) fail(errc::invalid_input, "run_walk: start not occupied");
  WalkRecord rec;
  rec.start = start;
  std::vector<char> hit_seen(stops.size(), 0);
  Site s = start;
  size_t next_cp = 0;
  while (true) {
    if (opt.budget && rec.steps >= opt.budget) {
      rec.censored = true;
      rec.stop_reason = "budget";
      break;
    }
    if (opt.stop_at_window_boundary && env.window.on_inner_boundary(s)) {
      rec.censored = true;
      rec.stop_reason = "window";
      break;
    }
    s = quenched_step(env, s, rng);
    ++rec.steps;
    while (next_cp < opt.checkpoint_steps.size() && rec.steps >= opt.checkpoint_steps[next_cp]) {
      rec.checkpoints.emplace_back(opt.checkpoint_steps[next_cp], s);
      ++next_cp;
    }
    bool stopped = false;
    for (size_t i = 0; i < stops.size(); ++i) {
      if (!hit_seen[i] && stops[i].contains(s)) {
        hit_seen[i] = 1;
        rec.hit_times.emplace_back(stops[i].name, rec.steps);
        if (!stopped) {
          rec.stop_reason = stops[i].name;
          stopped = true;
        }
      }
    }
    if (stopped) break;
  }
  rec.end = s;
  return rec;
}

ConeExitResult cone_exit_experiment(const Rational& m, int64_t n, double u, double beta,
                                    uint64_t seed, uint64_t reps, const KernelConfig& cfg) {
  Region window = Region::cone(m, n + 1);
  SampleOptions sopt;
  sopt.condition_on_origin = true;
  InterlaceSampler sampler(window, u, sopt, seed, uint64_t(1) << 40, cfg);
  ConeRegion cone{m, n};

  uint64_t block = 256;
  uint64_t nblocks = (reps + block - 1) / block;
  struct Tally {
    uint64_t minus = 0, plus = 0, cens = 0;
  };
  std::vector<Tally> partial(nblocks);
#pragma omp parallel if (cfg.mode == RunMode::OpenMP)
  {
    InterlacementSample sample;
#pragma omp for schedule(dynamic, 1)
    for (int64_t b = 0; b < int64_t(nblocks); ++b) {
      Tally t;
      uint64_t lo = uint64_t(b) * block, hi = std::min(reps, lo + block);
      for (uint64_t i = lo; i < hi; ++i) {
        RngStream rng(seed, (uint64_t(1) << 41) + i);
        sampler.draw_into(rng, sample);
        Environment env = build_environment(sample, beta);
        std::vector<NamedStop> stops;
        stops.push_back(
            NamedStop{"minus", [&cone](const Site& s) { return cone_minus_contains(cone, s); }});
        stops.push_back(
            NamedStop{"plus", [&cone](const Site& s) { return cone_plus_contains(cone, s); }});
        WalkOptions wopt;
        wopt.budget = uint64_t(200) * uint64_t(n) * uint64_t(n) * uint64_t(n) + 200000;
        WalkRecord rec = run_walk(env, Site{0, 0, 0}, stops, wopt, rng);
        if (rec.stop_reason == "minus")
          ++t.minus;
        else if (rec.stop_reason == "plus")
          ++t.plus;
        else
          ++t.cens;
      }
      partial[size_t(b)] = t;
    }
  }
  Tally sum;
  for (const Tally& t : partial) {
    sum.minus += t.minus;
    sum.plus += t.plus;
    sum.cens += t.cens;
  }
  ConeExitResult r;
  r.reps = reps;
  r.p_minus = double(sum.minus) / double(reps);
  r.p_plus = double(sum.plus) / double(reps);
  r.p_censored = double(sum.cens) / double(reps);
  r.p_minus_stderr = std::sqrt(std::max(r.p_minus * (1 - r.p_minus), 1.0 / double(reps)) /
                               double(reps));
  return r;
}

TrapReport detect_trap(const InterlacementSample& sample, const Site& x, const Rational& m,
                       int64_t n) {
  TrapReport rep;
  rep.anchors = trap_anchors(x, m, n);
  QuiverRegion q(rep.anchors.mouth, m, n);
  Region quiver(q);
  WindowView wv = make_window_view(sample.window);
  bool inside = true;
  quiver.for_each_member([&](const Site& s) { inside = inside && wv.contains(s); });
  for (const Site& s : rep.anchors.segment) inside = inside && wv.contains(s);
  if (!inside) fail(errc::window_too_small, "detect_trap: quiver or segment leaves the window");

  const Site mouth = rep.anchors.mouth;
  const Site tip = rep.anchors.tip;

  rep.t1 = sample.occupied(mouth);
  quiver.for_each_member([&](const Site& s) {
    if (s == mouth) return;
    if (sample.occupied(s)) rep.t1 = false;
  });
  rep.t2 = true;
  for (const Site& s : rep.anchors.segment) rep.t2 = rep.t2 && sample.occupied(s);
  rep.t3 = sample.occupied(tip);
  rep.is_trap = rep.t1 && rep.t2 && rep.t3;

  if (rep.is_trap) {
    // Component of the tip in occupancy minus the mouth; verify it stays
    // strictly inside the quiver cylinder.
    rep.component_inside_quiver = true;
    std::unordered_set<Site, SiteHash> seen;
    std::deque<Site> fringe;
    seen.insert(tip);
    fringe.push_back(tip);
    auto interior = [&](const Site& s) {
      int64_t d1 = s.x1 - q.base.x1;
      if (d1 <= 0 || d1 >= q.len) return false;
      return std::max(std::llabs(s.x2 - q.base.x2), std::llabs(s.x3 - q.base.x3)) < q.rad;
    };
    while (!fringe.empty()) {
      Site v = fringe.front();
      fringe.pop_front();
      rep.tip_component.push_back(v);
      if (!interior(v)) rep.component_inside_quiver = false;
      for (int d = 0; d < 6; ++d) {
        Site w = neighbor(v, d);
        if (w == mouth) {
          rep.mouth_adjacent = true;
          continue;
        }
        if (!sample.occupied(w) || seen.count(w)) continue;
        // the shell is vacant under T1, so the search cannot leave the
        // cylinder; the interior check above guards the invariant anyway
        seen.insert(w);
        fringe.push_back(w);
      }
    }
    std::sort(rep.tip_component.begin(), rep.tip_component.end());
  }
  return rep;
}

TrapSearchResult trap_search(const InterlacementSample& sample, const Rational& m_cone,
                             int64_t n_cone, const Rational& m_trap, int64_t n_trap,
                             bool exhaustive) {
  TrapSearchResult out;
  auto [minus, plus] = cone_boundaries(m_cone, n_cone);
  std::sort(plus.begin(), plus.end());
  for (const Site& x : plus) {
    ++out.scanned;
    TrapReport rep = detect_trap(sample, x, m_trap, n_trap);
    if (rep.is_trap) {
      ++out.trap_count;
      if (!out.found) {
        out.found = true;
        out.at = x;
        out.report = rep;
        if (!exhaustive) return out;
      }
    }
  }
  return out;
}

WeightedGraph trap_network(const Environment& env, const TrapReport& trap) {
  WeightedGraph g;
  std::unordered_set<Site, SiteHash> verts(trap.tip_component.begin(),
                                           trap.tip_component.end());
  verts.insert(trap.anchors.mouth);
  for (const Site& s : verts) g.add_vertex(s);
  for (const Site& s : verts) {
    for (int d = 0; d < 6; ++d) {
      Site y = neighbor(s, d);
      if (!verts.count(y) || !(s < y)) continue;
      g.add_edge(s, y, double(std::max(s.x1, y.x1)) * env.log_beta);
    }
  }
  return g;
}

WeightedGraph environment_graph(const Environment& env, const Region& domain) {
  WeightedGraph g;
  domain.for_each_member([&](const Site& s) {
    if (!env.occupied(s)) return;
    for (int d = 0; d < 6; ++d) {
      Site y = neighbor(s, d);
      if (!(s < y) || !env.occupied(y) || !domain.contains(y)) continue;
      g.add_edge(s, y, double(std::max(s.x1, y.x1)) * env.log_beta);
    }
  });
  return g;
}

namespace {

double quantile(std::vector<double>& v, double q) {
  if (v.empty()) return 0.0;
  size_t k = size_t(q * double(v.size() - 1));
  std::nth_element(v.begin(), v.begin() + int64_t(k), v.end());
  return v[k];
}

}  // namespace

SojournReport trap_sojourn_experiment(const Rational& m, int64_t n, double u, double beta,
                                      uint64_t seed, const SojournOptions& opt,
                                      const KernelConfig& cfg) {
  TrapAnchors anchors = trap_anchors(Site{0, 0, 0}, m, n);
  QuiverRegion q(anchors.mouth, m, n);
  // Window: cylinder comfortably containing segment + quiver.
  Region window = Region::cylinder(Site{0, 0, 0}, 4, q.base.x1 + q.len + 4, q.rad + 4);

  SampleOptions sopt;
  InterlaceSampler sampler(window, u, sopt, seed, uint64_t(1) << 40, cfg);

  SojournReport rep;
  InterlacementSample sample;
  bool found = false;
  for (uint64_t i = 0; i < opt.max_environments; ++i) {
    RngStream rng(seed, (uint64_t(1) << 41) + i);
    sampler.draw_into(rng, sample);
    ++rep.environments_tried;
    TrapReport t = detect_trap(sample, Site{0, 0, 0}, m, n);
    if (t.is_trap && t.mouth_adjacent) {
      rep.trap = t;
      found = true;
      break;
    }
  }
  if (!found)
    fail(errc::configuration_too_rare, "trap_sojourn_experiment: no trap found within budget");

  Environment env = build_environment(sample, beta);
  const Site base{0, 0, 0};
  const Site mouth = rep.trap.anchors.mouth;
  const Site tip = rep.trap.anchors.tip;
  int64_t seg_len = int64_t(rep.trap.anchors.segment.size()) - 1;

  // Reversibility prediction from the finite trap network.
  WeightedGraph g = trap_network(env, rep.trap);
  double p_mouth_tip = escape_probability_formula(g, mouth, tip);
  double lpi_mouth = log_pi(env, mouth);
  double lpi_tip = log_pi(env, tip);
  rep.reversibility_prediction = std::exp(lpi_mouth - lpi_tip) * p_mouth_tip;

  // Walks from the trap base until the window boundary.
  uint64_t reps = opt.walk_reps;
  std::vector<double> exit_times(reps);
  MeanStat reach, straight, returns;
  for (uint64_t i = 0; i < reps; ++i) {
    RngStream rng(seed, (uint64_t(1) << 42) + i);
    Site s = base;
    uint64_t steps = 0;
    bool straight_so_far = true, straight_ok = seg_len > 0;
    bool reached_tip = false;
    uint64_t tip_visits = 0;
    while (steps < opt.budget_per_walk) {
      if (env.window.on_inner_boundary(s)) break;
      s = quenched_step(env, s, rng);
      ++steps;
      if (straight_so_far && steps <= uint64_t(seg_len)) {
        if (s.x1 != base.x1 + int64_t(steps) || s.x2 != base.x2 || s.x3 != base.x3)
          straight_so_far = false;
        else if (int64_t(steps) == seg_len)
          straight_ok = straight_so_far;
      }
      if (s == tip) {
        reached_tip = true;
        ++tip_visits;
      }
    }
    exit_times[i] = double(steps);
    reach.add(reached_tip ? 1.0 : 0.0);
    if (seg_len > 0) straight.add(straight_ok && straight_so_far ? 1.0 : 0.0);
    returns.add(tip_visits > 0 ? double(tip_visits - 1) : 0.0);
  }
  rep.walk_reps = reps;
  double qs[5] = {0.10, 0.25, 0.50, 0.75, 0.90};
  for (int i = 0; i < 5; ++i) rep.exit_quantiles[i] = quantile(exit_times, qs[i]);
  rep.p_reach_tip = reach.mean();
  rep.p_reach_tip_stderr = reach.stderr_of_mean();
  rep.mean_tip_returns = returns.mean();
  rep.geometric_parameter = 1.0 / (1.0 + returns.mean());
  rep.p_straight_descent = straight.mean();
  rep.p_straight_descent_stderr = straight.stderr_of_mean();

  // Direct MC of P_tip[T_mouth < T_tip] on the trap network.
  MeanStat tm;
  for (uint64_t i = 0; i < std::min<uint64_t>(reps, 100000); ++i) {
    RngStream rng(seed, (uint64_t(1) << 43) + i);
    Site s = tip;
    while (true) {
      // restricted to the trap network: the shell is vacant except the
      // mouth, so the environment walk from the tip is already confined
      s = quenched_step(env, s, rng);
      if (s == mouth) {
        tm.add(1.0);
        break;
      }
      if (s == tip) {
        tm.add(0.0);
        break;
      }
    }
  }
  rep.p_tip_to_mouth_mc = tm.mean();
  rep.p_tip_to_mouth_stderr = tm.stderr_of_mean();
  return rep;
}

ExitInequalityResult exit_inequality_check(const Rational& m, int64_t n, double u, double beta,
                                           uint64_t seed, uint64_t stream, uint64_t walk_reps,
                                           const KernelConfig& cfg) {
  Region window = Region::cone(m, n + 1);
  SampleOptions sopt;
  sopt.condition_on_origin = true;
  InterlaceSampler sampler(window, u, sopt, seed, stream + (uint64_t(1) << 40), cfg);
  RngStream rng(seed, stream);
  InterlacementSample sample = sampler.draw(rng);
  Environment env = build_environment(sample, beta);
  ConeRegion cone{m, n};

  // Conductance side: restrict to the cone, terminals {0} and the faces.
  WeightedGraph g = environment_graph(env, Region::cone(m, n));
  std::vector<Site> minus_sites, all_bdry;
  for_each_cone_boundary(cone, [&](const Site& s, bool is_minus) {
    if (!env.occupied(s)) return;
    if (g.vertex_id(s) < 0) return;
    all_bdry.push_back(s);
    if (is_minus) minus_sites.push_back(s);
  });
  ExitInequalityResult out;
  double c_minus = 0.0, c_all = 0.0;
  if (g.vertex_id(Site{0, 0, 0}) >= 0 && !all_bdry.empty()) {
    if (!minus_sites.empty()) {
      WeightedGraph g1 = g;
      g1.set_source({Site{0, 0, 0}});
      g1.set_sink(minus_sites);
      c_minus = effective_conductance(g1).effective_conductance;
    }
    WeightedGraph g2 = g;
    g2.set_source({Site{0, 0, 0}});
    g2.set_sink(all_bdry);
    c_all = effective_conductance(g2).effective_conductance;
  }
  out.ratio = c_all > 0.0 ? c_minus / c_all : 0.0;

  // Walk side on the same environment.
  MeanStat st = mc_mean(walk_reps, cfg, [&](uint64_t i) {
    RngStream wrng(seed, stream + (uint64_t(1) << 41) + i);
    Site s{0, 0, 0};
    uint64_t budget = uint64_t(400) * uint64_t(n) * uint64_t(n) * uint64_t(n) + 100000;
    for (uint64_t k = 0; k < budget; ++k) {
      s = quenched_step(env, s, wrng);
      if (cone_minus_contains(cone, s)) return 1.0;
      if (cone_plus_contains(cone, s)) return 0.0;
    }
    return 0.0;  // stuck in a finite component: never exits
  });
  out.p_minus = st.mean();
  out.p_minus_stderr = st.stderr_of_mean();
  out.holds = out.p_minus <= out.ratio + 3.0 * out.p_minus_stderr;
  return out;
}

std::vector<TransienceProxyRow> transience_proxy(double u, double beta,
                                                 const std::vector<int64_t>& levels,
                                                 uint64_t reps, uint64_t seed,
                                                 const KernelConfig& cfg) {
  int64_t max_level = *std::max_element(levels.begin(), levels.end());
  Region window = Region::k_region(10, max_level + 20);
  SampleOptions sopt;
  sopt.condition_on_origin = true;
  InterlaceSampler sampler(window, u, sopt, seed, uint64_t(1) << 40, cfg);

  std::vector<TransienceProxyRow> rows;
  uint64_t stream_base = uint64_t(1) << 41;
  for (int64_t level : levels) {
    uint64_t block = 256;
    uint64_t nblocks = (reps + block - 1) / block;
    std::vector<MeanStat> partial(nblocks);
#pragma omp parallel if (cfg.mode == RunMode::OpenMP)
    {
      InterlacementSample sample;
#pragma omp for schedule(dynamic, 1)
      for (int64_t b = 0; b < int64_t(nblocks); ++b) {
        MeanStat st;
        uint64_t lo = uint64_t(b) * block, hi = std::min(reps, lo + block);
        for (uint64_t i = lo; i < hi; ++i) {
          RngStream rng(seed, stream_base + i);
          sampler.draw_into(rng, sample);
          Environment env = build_environment(sample, beta);
          Site s{0, 0, 0};
          uint64_t budget = 3000000;
          bool reached = false, returned = false;
          for (uint64_t k = 0; k < budget; ++k) {
            if (env.window.on_inner_boundary(s)) break;
            s = quenched_step(env, s, rng);
            if (!reached && s.x1 >= level) reached = true;
            if (reached && s == Site{0, 0, 0}) {
              returned = true;
              break;
            }
          }
          st.add(returned ? 1.0 : 0.0);
        }
        partial[size_t(b)] = st;
      }
    }
    MeanStat st;
    for (const MeanStat& p : partial) st.merge(p);
    TransienceProxyRow row;
    row.level = level;
    row.return_fraction = st.mean();
    row.stderr_ = st.stderr_of_mean();
    rows.push_back(row);
    stream_base += reps + 1000;
  }
  (void)cfg;
  return rows;
}

}  // namespace ri
