#include "ri/interlace.hpp"

#include <algorithm>
#include <bit>
#include <cinttypes>
#include <cstdio>
#include <cstring>
#include <deque>
#include <map>

#include "ri/csvio.hpp"
#include "ri/green.hpp"

namespace ri {

uint64_t Bitset3D::popcount() const {
  uint64_t n = 0;
  for (uint64_t w : words_) n += uint64_t(std::popcount(w));
  return n;
}

namespace {

constexpr Site kOrigin{0, 0, 0};

struct WindowShape {
  int kind;  // 0: window == bbox, 1: ball, 2: general
  Site ball_center;
  int64_t ball_rsq;
};

WindowShape classify_window(const Region& w) {
  WindowShape s{2, {}, 0};
  if (std::holds_alternative<BoxRegion>(w.raw()) ||
      std::holds_alternative<CylinderRegion>(w.raw())) {
    s.kind = 0;
  } else if (const auto* b = std::get_if<BallRegion>(&w.raw())) {
    s.kind = 1;
    s.ball_center = b->center;
    s.ball_rsq = b->radius * b->radius;
  }
  return s;
}

}  // namespace

InterlaceSampler::InterlaceSampler(const Region& window, double u, const SampleOptions& opt,
                                   uint64_t seed, uint64_t prep_stream_base,
                                   const KernelConfig& cfg)
    : window_(window), box_(window.bbox()), u_(u), opt_(opt) {
  if (!(u > 0.0)) fail(errc::invalid_input, "sample_interlacement: u must be positive");
  if (box_.volume() <= 0) fail(errc::invalid_input, "sample_interlacement: empty window");
  if (box_.volume() >= (int64_t(1) << 32))
    fail(errc::region_too_large, "sample_interlacement: window bounding box too large");
  WindowShape shape = classify_window(window);
  window_kind_ = shape.kind;
  ball_center_ = shape.ball_center;
  ball_rsq_ = shape.ball_rsq;
  cap_ub_ = cap_upper_bound_for_region(window);

  int64_t sites = window.size();
  if (uint64_t(sites) <= opt.exact_mode_max_sites) {
    mode_ = "exact-profile";
    HarmonicOptions hopt;
    hopt.replicas_per_site = opt.profile_replicas_per_site;
    hopt.eps_ret = opt.eps_ret;
    HarmonicProfile prof = harmonic_measure(window, seed, prep_stream_base, hopt, cfg);
    NormalizedMeasure nm = normalized_harmonic_measure(prof);
    entry_sites_ = nm.sites;
    entry_cdf_.resize(nm.prob.size());
    double acc = 0.0;
    for (size_t i = 0; i < nm.prob.size(); ++i) {
      acc += nm.prob[i];
      entry_cdf_[i] = acc;
    }
    entry_cdf_.back() = 1.0;
    cap_window_ = prof.capacity;
    cap_stderr_ = prof.capacity_stderr;
  } else {
    // Far-shell pilot: launch walks from a distant shell; conditioned on
    // hitting, the entry site is (approximately) harmonic-measure
    // distributed, and the Green-weighted hit indicator estimates cap.
    mode_ = "far-shell";
    double hx = 0.5 * double(box_.hi.x1 - box_.lo.x1);
    double hy = 0.5 * double(box_.hi.x2 - box_.lo.x2);
    double hz = 0.5 * double(box_.hi.x3 - box_.lo.x3);
    Site center{(box_.lo.x1 + box_.hi.x1) / 2, (box_.lo.x2 + box_.hi.x2) / 2,
                (box_.lo.x3 + box_.hi.x3) / 2};
    double r_circ = std::sqrt(hx * hx + hy * hy + hz * hz) + 1.0;
    double shell = std::max(opt.pilot_shell_factor * r_circ, r_circ + 80.0);

    uint64_t launches = opt.pilot_launches;
    uint64_t block = 1024;
    uint64_t nblocks = (launches + block - 1) / block;
    std::vector<std::vector<Site>> block_entries(nblocks);
    std::vector<MeanStat> block_stat(nblocks);
    KernelConfig pcfg = cfg;
    pcfg.block = block;
    run_blocks(launches, pcfg, [&](uint64_t b, uint64_t lo, uint64_t hi) {
      MeanStat st;
      for (uint64_t i = lo; i < hi; ++i) {
        RngStream rng(seed, prep_stream_base + i);
        // isotropic launch point on the shell
        double g1, g2, g3;
        do {
          double a = 2.0 * rng.uniform() - 1.0, b2 = 2.0 * rng.uniform() - 1.0;
          double c = 2.0 * rng.uniform() - 1.0;
          double n2 = a * a + b2 * b2 + c * c;
          if (n2 > 1e-12 && n2 <= 1.0) {
            double inv = 1.0 / std::sqrt(n2);
            g1 = a * inv;
            g2 = b2 * inv;
            g3 = c * inv;
            break;
          }
        } while (true);
        Site z{center.x1 + int64_t(std::lround(shell * g1)),
               center.x2 + int64_t(std::lround(shell * g2)),
               center.x3 + int64_t(std::lround(shell * g3))};
        struct BoxTarget {
          Bounds b;
          const Bounds& bbox() const { return b; }
        } tgt{box_};
        Site entry{};
        bool hit = false;
        walk_certified(z, tgt, cap_ub_, opt_.eps_ret, rng,
                       [&](const Site& s, HittingRecord&) {
                         if (window_.contains(s)) {
                           entry = s;
                           hit = true;
                           return true;
                         }
                         return false;
                       });
        if (hit) {
          block_entries[b].push_back(entry);
          double dist = norm2(z - center);
          st.add(dist / GreenTable::kFarCoeff);
        } else {
          st.add(0.0);
        }
      }
      block_stat[b] = st;
    });
    MeanStat total;
    for (uint64_t b = 0; b < nblocks; ++b) {
      total.merge(block_stat[b]);
      for (const Site& s : block_entries[b]) entry_sites_.push_back(s);
    }
    cap_window_ = total.mean();
    cap_stderr_ = total.stderr_of_mean();
    if (entry_sites_.size() < 200)
      fail(errc::invalid_input, "sample_interlacement: pilot collected too few entries");
  }
}

bool InterlaceSampler::run_trajectory_impl(RngStream& rng, const Site& entry, bool record_start,
                                           bool abort_on_origin, std::vector<uint32_t>& visits,
                                           double& leap_bias, const Bitset3D& bits) const {
  const Bounds& box = box_;
  const double r_star = stop_radius(cap_ub_, opt_.eps_ret);
  const double r_star_sq = r_star * r_star;
  Site s = entry;
  bool first = true;
  while (true) {
    if (box.contains(s)) {
      bool member;
      switch (window_kind_) {
        case 0: member = true; break;
        case 1: member = norm2_sq(s - ball_center_) < ball_rsq_; break;
        default: member = window_.contains(s); break;
      }
      if (member && (record_start || !first)) visits.push_back(uint32_t(bits.index(s)));
      if (abort_on_origin && !first && s == kOrigin) return true;
      s = neighbor(s, int(rng.below(6)));
      first = false;
      continue;
    }
    int64_t clearance = box.dist_inf(s);
    if (clearance >= kLeapMinClearance) {
      auto gap = [](int64_t v, int64_t a, int64_t b) {
        return v < a ? double(a - v) : (v > b ? double(v - b) : 0.0);
      };
      double g1 = gap(s.x1, box.lo.x1, box.hi.x1);
      double g2 = gap(s.x2, box.lo.x2, box.hi.x2);
      double g3 = gap(s.x3, box.lo.x3, box.hi.x3);
      if (g1 * g1 + g2 * g2 + g3 * g3 >= r_star_sq) return false;
      LeapPlan plan = plan_leap(clearance);
      if (plan.steps > 0) {
        s = s + leap_displacement(rng, plan.steps);
        leap_bias += plan.eps;
        first = false;
        continue;
      }
    }
    s = neighbor(s, int(rng.below(6)));
    first = false;
  }
}

Site InterlaceSampler::sample_entry(RngStream& rng) const {
  if (entry_cdf_.empty())
    return entry_sites_[rng.below(uint32_t(entry_sites_.size()))];
  double v = rng.uniform();
  size_t lo = 0, hi = entry_cdf_.size() - 1;
  while (lo < hi) {
    size_t mid = (lo + hi) / 2;
    if (entry_cdf_[mid] < v)
      lo = mid + 1;
    else
      hi = mid;
  }
  return entry_sites_[lo];
}

void InterlaceSampler::draw_into(RngStream& rng, InterlacementSample& out) const {
  draw_at(rng, out, u_, opt_.condition_on_origin);
}

void InterlaceSampler::draw_at(RngStream& rng, InterlacementSample& out, double u,
                               bool conditioned) const {
  out.window = window_;
  out.box = box_;
  out.u = u;
  out.seed = rng.master_seed();
  out.stream = rng.stream_index();
  out.conditioned_on_origin = conditioned;
  out.cap_window = cap_window_;
  out.sampler_mode = mode_;
  out.total_leap_bias = 0.0;
  out.trajectory_count = 0;
  out.traces.clear();
  out.local_time.clear();
  if (out.occupancy.box().lo == box_.lo && out.occupancy.box().hi == box_.hi)
    out.occupancy.clear();
  else
    out.occupancy.reset(box_);

  if (conditioned && !window_.contains(kOrigin))
    fail(errc::invalid_input, "conditioned sampling requires the origin inside the window");

  std::vector<uint32_t> visits;
  std::vector<uint32_t> side;

  auto commit = [&](const std::vector<uint32_t>& idxs) {
    for (uint32_t i : idxs) out.occupancy.set_index(i);
    if (opt_.record_local_times)
      for (uint32_t i : idxs) out.local_time[out.occupancy.site_of(i)]++;
    if (opt_.record_traces) {
      std::vector<Site> trace;
      trace.reserve(idxs.size());
      for (uint32_t i : idxs) trace.push_back(out.occupancy.site_of(i));
      out.traces.push_back(std::move(trace));
    }
    ++out.trajectory_count;
  };

  int64_t n = sample_poisson(rng, u * cap_window_);
  for (int64_t k = 0; k < n; ++k) {
    Site entry = sample_entry(rng);
    if (conditioned && entry == kOrigin) continue;  // thinned: trajectory hits 0
    visits.clear();
    double bias = 0.0;
    bool hit0 = run_trajectory_impl(rng, entry, true, conditioned, visits, bias, out.occupancy);
    out.total_leap_bias += bias;
    if (conditioned && hit0) continue;  // thinned
    commit(visits);
  }

  if (conditioned) {
    // Trajectories through the origin: Poisson(u cap({0})) conditioned >= 1,
    // each decomposed at its first visit to 0 into a free forward ray and a
    // backward ray conditioned never to return to 0.
    int64_t k0 = sample_poisson_positive(rng, u * cap_single_site());
    for (int64_t k = 0; k < k0; ++k) {
      side.clear();
      double bias = 0.0;
      // backward ray: rejection on returning to the origin
      while (true) {
        side.clear();
        bias = 0.0;
        bool returned =
            run_trajectory_impl(rng, kOrigin, false, true, side, bias, out.occupancy);
        if (!returned) break;
      }
      out.total_leap_bias += bias;
      visits.clear();
      double fbias = 0.0;
      run_trajectory_impl(rng, kOrigin, true, false, visits, fbias, out.occupancy);
      out.total_leap_bias += fbias;
      std::reverse(side.begin(), side.end());
      side.insert(side.end(), visits.begin(), visits.end());
      commit(side);
    }
  }
}

void InterlaceSampler::extend_at(RngStream& rng, InterlacementSample& out, double delta_u) const {
  if (!(delta_u >= 0.0)) fail(errc::invalid_input, "extend_at: negative increment");
  out.u += delta_u;
  std::vector<uint32_t> visits;
  int64_t n = sample_poisson(rng, delta_u * cap_window_);
  for (int64_t k = 0; k < n; ++k) {
    Site entry = sample_entry(rng);
    visits.clear();
    double bias = 0.0;
    run_trajectory_impl(rng, entry, true, false, visits, bias, out.occupancy);
    out.total_leap_bias += bias;
    for (uint32_t i : visits) out.occupancy.set_index(i);
    if (opt_.record_local_times)
      for (uint32_t i : visits) out.local_time[out.occupancy.site_of(i)]++;
    if (opt_.record_traces) {
      std::vector<Site> trace;
      for (uint32_t i : visits) trace.push_back(out.occupancy.site_of(i));
      out.traces.push_back(std::move(trace));
    }
    ++out.trajectory_count;
  }
}

InterlacementSample InterlaceSampler::draw(RngStream& rng) const {
  InterlacementSample s;
  draw_into(rng, s);
  return s;
}

InterlacementSample sample_interlacement(const Region& window, double u,
                                         const SampleOptions& opt, uint64_t seed,
                                         uint64_t stream, const KernelConfig& cfg) {
  InterlaceSampler sampler(window, u, opt, seed, stream + (uint64_t(1) << 40), cfg);
  RngStream rng(seed, stream);
  return sampler.draw(rng);
}

VacantCheckResult vacant_probability_check(const Region& a, double u, uint64_t seed,
                                           uint64_t reps, const KernelConfig& cfg,
                                           uint64_t cap_replicas_per_site,
                                           uint64_t window_replicas_per_site) {
  if (reps < 10000) fail(errc::invalid_input, "vacant_probability_check: reps must be >= 1e4");
  std::vector<Site> a_sites = a.members();
  if (a_sites.empty()) fail(errc::invalid_input, "vacant_probability_check: empty A");

  // Capacity of A itself, full precision.
  HarmonicOptions hopt;
  hopt.replicas_per_site = cap_replicas_per_site;
  HarmonicProfile prof = harmonic_measure(a, seed, 1, hopt, cfg);

  // Window: every site within distance 2 of A's bounding box (strictly
  // contains the 1-neighbourhood of A).
  Bounds wb = a.bbox().inflated(2);
  std::vector<Site> wsites;
  for (int64_t i = wb.lo.x1; i <= wb.hi.x1; ++i)
    for (int64_t j = wb.lo.x2; j <= wb.hi.x2; ++j)
      for (int64_t k = wb.lo.x3; k <= wb.hi.x3; ++k) wsites.push_back(Site{i, j, k});
  Region window = Region::explicit_set(wsites);

  SampleOptions sopt;
  sopt.profile_replicas_per_site = window_replicas_per_site;
  uint64_t prep_base = uint64_t(1) << 41;
  InterlaceSampler sampler(window, u, sopt, seed, prep_base, cfg);

  InterlacementSample scratch;
  std::vector<MeanStat> partial((reps + cfg.block - 1) / (cfg.block ? cfg.block : 4096));
  uint64_t block = cfg.block ? cfg.block : 4096;
  uint64_t sample_base = uint64_t(1) << 42;
#pragma omp parallel if (cfg.mode == RunMode::OpenMP)
  {
    InterlacementSample local;
#pragma omp for schedule(dynamic, 1)
    for (int64_t b = 0; b < int64_t(partial.size()); ++b) {
      MeanStat st;
      uint64_t lo = uint64_t(b) * block, hi = std::min(reps, lo + block);
      for (uint64_t i = lo; i < hi; ++i) {
        RngStream rng(seed, sample_base + i);
        sampler.draw_into(rng, local);
        bool vacant = true;
        for (const Site& s : a_sites)
          if (local.occupied(s)) {
            vacant = false;
            break;
          }
        st.add(vacant ? 1.0 : 0.0);
      }
      partial[size_t(b)] = st;
    }
  }
  (void)scratch;
  MeanStat st;
  for (const MeanStat& p : partial) st.merge(p);

  VacantCheckResult r;
  r.reps = reps;
  r.empirical = st.mean();
  r.empirical_stderr = st.stderr_of_mean();
  r.cap_mc = prof.capacity;
  r.cap_stderr = prof.capacity_stderr;
  r.analytic = std::exp(-u * prof.capacity);
  r.analytic_stderr = u * r.analytic * prof.capacity_stderr;
  double denom = std::sqrt(r.empirical_stderr * r.empirical_stderr +
                           r.analytic_stderr * r.analytic_stderr);
  r.z_score = denom > 0.0 ? (r.empirical - r.analytic) / denom : 0.0;
  return r;
}

void validate_loop(const Region& window, const LoopSpec& loop) {
  if (loop.path.size() < 3 || loop.path.front() != loop.x0 || loop.path.back() != loop.x0)
    fail(errc::invalid_input, "loop must start and end at x0 with m >= 2");
  std::unordered_set<Site, SiteHash> bdry;
  window.for_each_boundary([&](const Site& s) { bdry.insert(s); });
  for (size_t i = 0; i < loop.path.size(); ++i) {
    if (!window.contains(loop.path[i]))
      fail(errc::invalid_input, "loop leaves the window");
    if (bdry.count(loop.path[i]))
      fail(errc::invalid_input, "loop touches the window boundary");
    if (i + 1 < loop.path.size() && !adjacent(loop.path[i], loop.path[i + 1]))
      fail(errc::invalid_input, "loop has a non-adjacent step");
  }
}

LoopCheckResult loop_insertion_check(const Region& window, double u, const LoopSpec& loop,
                                     uint64_t seed, uint64_t reps, const KernelConfig& cfg) {
  std::vector<Site> wsites = window.members();
  if (wsites.size() > 30)
    fail(errc::invalid_input, "loop_insertion_check: window must have at most 30 sites");
  validate_loop(window, loop);
  std::sort(wsites.begin(), wsites.end());
  std::unordered_map<Site, size_t, SiteHash> at;
  for (size_t i = 0; i < wsites.size(); ++i) at[wsites[i]] = i;
  size_t x0_idx = at.at(loop.x0);

  std::vector<uint32_t> ell(wsites.size(), 0);
  for (size_t k = 1; k < loop.path.size(); ++k) ell[at.at(loop.path[k])]++;
  int64_t m = loop.m();

  SampleOptions sopt;
  sopt.record_local_times = true;
  InterlaceSampler sampler(window, u, sopt, seed, uint64_t(1) << 41, cfg);

  auto counts_of = [&](const InterlacementSample& s, std::vector<uint32_t>& out) {
    out.assign(wsites.size(), 0);
    for (const auto& kv : s.local_time) out[at.at(kv.first)] = kv.second;
  };

  // Phase 1: find the modal local-time configuration with eta(x0) = 1.
  uint64_t phase1 = std::max<uint64_t>(reps / 10, 20000);
  std::map<std::vector<uint32_t>, uint64_t> hist;
  {
    InterlacementSample s;
    std::vector<uint32_t> counts;
    for (uint64_t i = 0; i < phase1; ++i) {
      RngStream rng(seed, (uint64_t(1) << 42) + i);
      sampler.draw_into(rng, s);
      counts_of(s, counts);
      if (counts[x0_idx] == 1) hist[counts]++;
    }
  }
  if (hist.empty())
    fail(errc::configuration_too_rare, "no configuration with eta(x0)=1 observed");
  std::vector<uint32_t> eta;
  uint64_t best = 0;
  for (const auto& kv : hist)
    if (kv.second > best) {
      best = kv.second;
      eta = kv.first;
    }
  std::vector<uint32_t> eta_plus(eta);
  for (size_t i = 0; i < ell.size(); ++i) eta_plus[i] += ell[i];

  // Phase 2: fresh samples, count both configurations.
  uint64_t block = cfg.block ? cfg.block : 4096;
  uint64_t nblocks = (reps + block - 1) / block;
  std::vector<std::pair<uint64_t, uint64_t>> partial(nblocks, {0, 0});
  uint64_t base = (uint64_t(1) << 42) + phase1;
#pragma omp parallel if (cfg.mode == RunMode::OpenMP)
  {
    InterlacementSample s;
    std::vector<uint32_t> counts;
#pragma omp for schedule(dynamic, 1)
    for (int64_t b = 0; b < int64_t(nblocks); ++b) {
      uint64_t c_eta = 0, c_plus = 0;
      uint64_t lo = uint64_t(b) * block, hi = std::min(reps, lo + block);
      for (uint64_t i = lo; i < hi; ++i) {
        RngStream rng(seed, base + i);
        sampler.draw_into(rng, s);
        counts_of(s, counts);
        if (counts == eta)
          ++c_eta;
        else if (counts == eta_plus)
          ++c_plus;
      }
      partial[size_t(b)] = {c_eta, c_plus};
    }
  }
  uint64_t c_eta = 0, c_plus = 0;
  for (auto& p : partial) {
    c_eta += p.first;
    c_plus += p.second;
  }

  LoopCheckResult r;
  r.eta = eta;
  r.eta_count = c_eta;
  r.lhs_count = c_plus;
  double n = double(reps);
  double p_eta = double(c_eta) / n;
  double p_plus = double(c_plus) / n;
  if (c_eta < 25)
    fail(errc::configuration_too_rare,
         "modal configuration too rare: " + std::to_string(c_eta) + " hits");
  double se_eta = std::sqrt(p_eta * (1.0 - p_eta) / n);
  double se_plus = std::sqrt(std::max(p_plus * (1.0 - p_plus), 1.0 / n) / n);
  double factor = std::pow(6.0, -double(m));
  r.lhs = p_plus;
  r.rhs = factor * p_eta;
  r.lhs_stderr = se_plus;
  r.rhs_stderr = factor * se_eta;
  double comb = std::sqrt(se_plus * se_plus + factor * factor * se_eta * se_eta);
  r.pass = r.lhs >= r.rhs - 3.0 * comb;
  return r;
}

ChemicalDistanceResult chemical_distance_check(double u, uint64_t ray_count, uint64_t seed,
                                               const KernelConfig& cfg, int64_t window_length,
                                               int64_t window_width) {
  if (u < 0.25) fail(errc::invalid_input, "chemical_distance_check: u must be >= 0.25");
  Region window = Region::cylinder(Site{0, 0, 0}, 2, window_length, window_width);
  SampleOptions sopt;
  InterlaceSampler sampler(window, u, sopt, seed, uint64_t(1) << 41, cfg);
  RngStream rng(seed, 0);
  InterlacementSample s = sampler.draw(rng);

  std::vector<int64_t> ks;
  for (int64_t k = 0; k <= window_length; ++k)
    if (s.occupied(Site{k, 0, 0})) ks.push_back(k);
  if (ks.size() < ray_count + 1)
    fail(errc::window_exhausted, "ray exits the window after " + std::to_string(ks.size()) +
                                     " occupied sites, need " + std::to_string(ray_count + 1));

  ChemicalDistanceResult out;
  const Bitset3D& occ = s.occupancy;
  Bounds box = occ.box();
  auto bfs = [&](const Site& from, const Site& to) -> int64_t {
    std::unordered_map<Site, int64_t, SiteHash> dist;
    std::deque<Site> q;
    dist[from] = 0;
    q.push_back(from);
    while (!q.empty()) {
      Site v = q.front();
      q.pop_front();
      int64_t d = dist[v];
      if (v == to) return d;
      for (int dd = 0; dd < 6; ++dd) {
        Site w = neighbor(v, dd);
        if (!box.contains(w) || !occ.test(w) || dist.count(w)) continue;
        dist[w] = d + 1;
        q.push_back(w);
      }
    }
    return -1;  // disconnected within the window
  };

  KahanSum mean;
  for (uint64_t i = 0; i + 1 <= ray_count; ++i) {
    ChemicalDistanceRow row;
    row.k_from = ks[i];
    row.k_to = ks[i + 1];
    row.gap = row.k_to - row.k_from;
    row.graph_distance = bfs(Site{row.k_from, 0, 0}, Site{row.k_to, 0, 0});
    mean.add(double(row.gap));
    out.rows.push_back(row);
  }
  out.mean_gap = mean.value() / double(out.rows.size());
  (void)cfg;
  return out;
}

std::pair<InterlacementSample, InterlacementSample> sample_coupled(
    const Region& window, double u1, double u2, const SampleOptions& opt, uint64_t seed,
    uint64_t stream, const KernelConfig& cfg) {
  if (!(u1 <= u2)) fail(errc::invalid_input, "sample_coupled: u1 must be <= u2");
  SampleOptions o = opt;
  o.condition_on_origin = false;
  InterlaceSampler sampler(window, u1, o, seed, stream + (uint64_t(1) << 40), cfg);
  RngStream rng(seed, stream);
  InterlacementSample s1;
  sampler.draw_at(rng, s1, u1, false);
  InterlacementSample s2 = s1;
  sampler.extend_at(rng, s2, u2 - u1);
  return {std::move(s1), std::move(s2)};
}

namespace {

void put_varint(std::FILE* f, uint64_t v) {
  while (v >= 0x80) {
    std::fputc(int(v & 0x7F) | 0x80, f);
    v >>= 7;
  }
  std::fputc(int(v), f);
}

uint64_t get_varint(std::FILE* f) {
  uint64_t v = 0;
  int shift = 0;
  while (true) {
    int c = std::fgetc(f);
    if (c == EOF) fail(errc::io_error, "truncated varint");
    v |= uint64_t(c & 0x7F) << shift;
    if (!(c & 0x80)) return v;
    shift += 7;
  }
}

uint64_t zigzag(int64_t v) { return (uint64_t(v) << 1) ^ uint64_t(v >> 63); }
int64_t unzigzag(uint64_t v) { return int64_t(v >> 1) ^ -int64_t(v & 1); }

}  // namespace

void save_sample(const InterlacementSample& s, const std::string& path) {
  if (s.traces.empty() && s.trajectory_count > 0)
    fail(errc::io_error, "save_sample: sample was drawn without trace recording");
  std::FILE* f = std::fopen(path.c_str(), "wb");
  if (!f) fail(errc::io_error, "cannot open for write: " + path);
  std::fprintf(f, "RIWALK-SAMPLE-1\nwindow %s\nu %s\nseed %" PRIu64 "\nstream %" PRIu64
                  "\ntrajectories %" PRIu64 "\n",
               s.window.descriptor().c_str(), format_double(s.u).c_str(), s.seed, s.stream,
               s.trajectory_count);
  for (const auto& trace : s.traces) {
    put_varint(f, trace.size());
    Site prev{0, 0, 0};
    for (const Site& v : trace) {
      put_varint(f, zigzag(v.x1 - prev.x1));
      put_varint(f, zigzag(v.x2 - prev.x2));
      put_varint(f, zigzag(v.x3 - prev.x3));
      prev = v;
    }
  }
  std::fclose(f);
}

InterlacementSample load_sample(const std::string& path) {
  std::FILE* f = std::fopen(path.c_str(), "rb");
  if (!f) fail(errc::io_error, "cannot open: " + path);
  char line[512];
  if (!std::fgets(line, sizeof(line), f) || std::strncmp(line, "RIWALK-SAMPLE-1", 15) != 0) {
    std::fclose(f);
    fail(errc::io_error, "bad sample header");
  }
  InterlacementSample s;
  char wdesc[400];
  if (!std::fgets(line, sizeof(line), f) || std::sscanf(line, "window %399[^\n]", wdesc) != 1)
    fail(errc::io_error, "bad window line");
  s.window = Region::parse(wdesc);
  double u;
  if (!std::fgets(line, sizeof(line), f) || std::sscanf(line, "u %lf", &u) != 1)
    fail(errc::io_error, "bad u line");
  s.u = u;
  if (!std::fgets(line, sizeof(line), f) || std::sscanf(line, "seed %" SCNu64, &s.seed) != 1)
    fail(errc::io_error, "bad seed line");
  if (!std::fgets(line, sizeof(line), f) || std::sscanf(line, "stream %" SCNu64, &s.stream) != 1)
    fail(errc::io_error, "bad stream line");
  uint64_t ntr = 0;
  if (!std::fgets(line, sizeof(line), f) ||
      std::sscanf(line, "trajectories %" SCNu64, &ntr) != 1)
    fail(errc::io_error, "bad trajectory count line");
  s.box = s.window.bbox();
  s.occupancy.reset(s.box);
  s.trajectory_count = ntr;
  for (uint64_t t = 0; t < ntr; ++t) {
    uint64_t len = get_varint(f);
    std::vector<Site> trace;
    trace.reserve(len);
    Site prev{0, 0, 0};
    for (uint64_t i = 0; i < len; ++i) {
      Site v;
      v.x1 = prev.x1 + unzigzag(get_varint(f));
      v.x2 = prev.x2 + unzigzag(get_varint(f));
      v.x3 = prev.x3 + unzigzag(get_varint(f));
      prev = v;
      s.occupancy.set(v);
      s.local_time[v]++;
      trace.push_back(v);
    }
    s.traces.push_back(std::move(trace));
  }
  std::fclose(f);
  return s;
}

void export_sample_csv(const InterlacementSample& s, const std::string& path) {
  CsvWriter w(path);
  w.comment("window=" + s.window.descriptor() + " u=" + format_double(s.u) +
            " seed=" + std::to_string(s.seed) + " stream=" + std::to_string(s.stream) +
            " trajectories=" + std::to_string(s.trajectory_count) + " mode=" + s.sampler_mode);
  w.header({"site_x1", "site_x2", "site_x3", "occupied", "local_time"});
  Bounds b = s.occupancy.box();
  for (int64_t i = b.lo.x1; i <= b.hi.x1; ++i)
    for (int64_t j = b.lo.x2; j <= b.hi.x2; ++j)
      for (int64_t k = b.lo.x3; k <= b.hi.x3; ++k) {
        Site x{i, j, k};
        if (!s.occupancy.test(x)) continue;
        auto it = s.local_time.find(x);
        uint64_t lt = it == s.local_time.end() ? 0 : it->second;
        w.cell(i).cell(j).cell(k).cell(int64_t(1)).cell(lt).endrow();
      }
}

}  // namespace ri
