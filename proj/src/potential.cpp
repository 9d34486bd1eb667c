#include "ri/potential.hpp"

#include <algorithm>
#include <cstdio>
#include <unordered_map>

#include "ri/csvio.hpp"
#include "ri/green.hpp"

namespace ri {

std::vector<LatticeSymmetry> detect_symmetries(const std::vector<Site>& sites) {
  std::vector<LatticeSymmetry> group;
  if (sites.empty()) return group;
  std::unordered_set<Site, SiteHash> index(sites.begin(), sites.end());
  int64_t count = int64_t(sites.size());
  Site sum{0, 0, 0};
  for (const Site& s : sites) sum = sum + s;

  int perms[6][3] = {{0, 1, 2}, {0, 2, 1}, {1, 0, 2}, {1, 2, 0}, {2, 0, 1}, {2, 1, 0}};
  for (auto& perm : perms) {
    for (int sbits = 0; sbits < 8; ++sbits) {
      LatticeSymmetry sym;
      sym.perm[0] = perm[0];
      sym.perm[1] = perm[1];
      sym.perm[2] = perm[2];
      sym.sign[0] = (sbits & 1) ? -1 : 1;
      sym.sign[1] = (sbits & 2) ? -1 : 1;
      sym.sign[2] = (sbits & 4) ? -1 : 1;
      sym.shift = Site{0, 0, 0};
      // The only candidate translation maps the coordinate sum onto itself.
      int64_t v[3] = {sum.x1, sum.x2, sum.x3};
      Site image{sym.sign[0] * v[sym.perm[0]], sym.sign[1] * v[sym.perm[1]],
                 sym.sign[2] * v[sym.perm[2]]};
      Site t = sum - image;
      if (t.x1 % count || t.x2 % count || t.x3 % count) continue;
      sym.shift = Site{t.x1 / count, t.x2 / count, t.x3 / count};
      bool ok = true;
      for (const Site& s : sites) {
        if (!index.count(sym.apply(s))) {
          ok = false;
          break;
        }
      }
      if (ok) group.push_back(sym);
    }
  }
  return group;
}

namespace {

void symmetrize_profile(HarmonicProfile& p) {
  auto group = detect_symmetries(p.sites);
  if (group.size() <= 1) return;
  std::unordered_map<Site, size_t, SiteHash> at;
  at.reserve(p.sites.size());
  for (size_t i = 0; i < p.sites.size(); ++i) at[p.sites[i]] = i;
  std::vector<bool> done(p.sites.size(), false);
  for (size_t i = 0; i < p.sites.size(); ++i) {
    if (done[i]) continue;
    std::vector<size_t> orbit;
    for (const auto& g : group) {
      size_t j = at.at(g.apply(p.sites[i]));
      if (!done[j]) {
        done[j] = true;
        orbit.push_back(j);
      }
    }
    double mean = 0.0, var = 0.0;
    for (size_t j : orbit) mean += p.estimate[j];
    mean /= double(orbit.size());
    for (size_t j : orbit) var += p.stderr_[j] * p.stderr_[j];
    double se = std::sqrt(var) / double(orbit.size());
    for (size_t j : orbit) {
      p.estimate[j] = mean;
      p.stderr_[j] = se;
    }
  }
  p.symmetrized = true;
}

}  // namespace

HarmonicProfile harmonic_measure(const Region& a, uint64_t seed, uint64_t stream_base,
                                 const HarmonicOptions& opt, const KernelConfig& cfg) {
  HarmonicProfile p;
  p.region = a;
  p.sites = a.members();
  if (p.sites.empty()) fail(errc::invalid_input, "harmonic_measure: empty region");
  if (p.sites.size() > opt.max_sites)
    fail(errc::region_too_large, "harmonic_measure: region has " +
                                     std::to_string(p.sites.size()) + " sites, max " +
                                     std::to_string(opt.max_sites));
  std::sort(p.sites.begin(), p.sites.end());
  p.eps_ret = opt.eps_ret;
  p.replicas_per_site = opt.replicas_per_site;
  p.seed = seed;

  SiteSetTarget target(p.sites);
  p.estimate.resize(p.sites.size());
  p.stderr_.resize(p.sites.size());
  for (size_t i = 0; i < p.sites.size(); ++i) {
    EscapeEstimate e =
        escape_probability(p.sites[i], target, opt.eps_ret, seed,
                           stream_base + uint64_t(i) * opt.replicas_per_site,
                           opt.replicas_per_site, cfg);
    p.estimate[i] = e.estimate;
    p.stderr_[i] = e.stderr_;
  }
  if (opt.symmetrize) symmetrize_profile(p);

  KahanSum cap;
  double var = 0.0;
  for (size_t i = 0; i < p.sites.size(); ++i) {
    cap.add(p.estimate[i]);
    var += p.stderr_[i] * p.stderr_[i];
  }
  p.capacity = cap.value();
  p.capacity_stderr = std::sqrt(var);
  return p;
}

NormalizedMeasure normalized_harmonic_measure(const HarmonicProfile& p) {
  if (p.capacity <= 3.0 * p.capacity_stderr || p.capacity <= 0.0)
    fail(errc::degenerate_capacity, "normalized_harmonic_measure: capacity estimate " +
                                        std::to_string(p.capacity) + " not above noise");
  NormalizedMeasure m;
  m.sites = p.sites;
  m.pre_normalization_sum = p.capacity;
  m.prob.resize(p.sites.size());
  double total = 0.0;
  size_t largest = 0;
  for (size_t i = 0; i < p.sites.size(); ++i) {
    m.prob[i] = p.estimate[i] / p.capacity;
    total += m.prob[i];
    if (m.prob[i] > m.prob[largest]) largest = i;
  }
  m.prob[largest] += 1.0 - total;  // absorb the rounding residual
  return m;
}

VariationalBound variational_upper_bound(const Region& q, const TestFunction& phi,
                                         const KernelConfig& cfg) {
  std::vector<Site> members = q.members();
  std::unordered_set<Site, SiteHash> index(members.begin(), members.end());
  if (phi.support.size() != phi.values.size())
    fail(errc::support_mismatch, "variational_upper_bound: support/value size mismatch");
  for (size_t i = 0; i < phi.support.size(); ++i) {
    if (!index.count(phi.support[i]))
      fail(errc::support_mismatch, "variational_upper_bound: phi supported off Q");
    if (phi.values[i] < 0.0)
      fail(errc::support_mismatch, "variational_upper_bound: phi must be nonnegative");
  }

  const GreenTable& gt = green_table();
  uint64_t nrows = members.size();
  uint64_t block = 256;
  uint64_t nblocks = (nrows + block - 1) / block;
  std::vector<double> block_min(nblocks, 1e300);
  KernelConfig rows_cfg = cfg;
  rows_cfg.block = block;
  run_blocks(nrows, rows_cfg, [&](uint64_t b, uint64_t lo, uint64_t hi) {
    double local = 1e300;
    for (uint64_t r = lo; r < hi; ++r) {
      KahanSum row;
      for (size_t j = 0; j < phi.support.size(); ++j)
        row.add(gt.g(phi.support[j] - members[r]) * phi.values[j]);
      local = std::min(local, row.value());
    }
    block_min[b] = local;
  });
  double min_row = 1e300;
  for (double v : block_min) min_row = std::min(min_row, v);

  VariationalBound out;
  KahanSum total;
  for (double v : phi.values) total.add(v);
  out.bound = total.value();
  out.min_slack = min_row - 1.0;
  out.is_feasible = out.min_slack >= 0.0;
  return out;
}

std::vector<QuiverScanRow> quiver_capacity_scan(const Rational& m,
                                                const std::vector<int64_t>& n_list, uint64_t seed,
                                                const HarmonicOptions& opt,
                                                const KernelConfig& cfg) {
  std::vector<QuiverScanRow> rows;
  uint64_t stream_base = 0;
  for (int64_t n : n_list) {
    Region q = Region::quiver(Site{0, 0, 0}, m, n);
    QuiverScanRow row;
    row.n = n;
    row.quiver_sites = q.size();

    HarmonicProfile prof = harmonic_measure(q, seed, stream_base, opt, cfg);
    stream_base += uint64_t(row.quiver_sites) * opt.replicas_per_site + 1000;
    row.cap_mc = prof.capacity;
    row.cap_stderr = prof.capacity_stderr;

    // Best constant test function: c = 1/min_x sum_y g(x,y), feasible with
    // zero slack at the minimizing row.
    std::vector<Site> members = q.members();
    TestFunction ones{members, std::vector<double>(members.size(), 1.0)};
    VariationalBound unit = variational_upper_bound(q, ones, cfg);
    double c = (1.0 + 1e-12) / (unit.min_slack + 1.0);
    row.phi_const = c;
    row.cap_bound = c * double(members.size());
    row.mc_below_bound = row.cap_mc <= row.cap_bound + 3.0 * row.cap_stderr;
    rows.push_back(row);
  }
  return rows;
}

void write_profile_csv(const HarmonicProfile& p, const std::string& path) {
  CsvWriter w(path);
  w.comment("region=" + p.region.descriptor() + " seed=" + std::to_string(p.seed) +
            " replicas_per_site=" + std::to_string(p.replicas_per_site) +
            " eps_ret=" + format_double(p.eps_ret) +
            " symmetrized=" + (p.symmetrized ? std::string("1") : std::string("0")));
  w.header({"site_x1", "site_x2", "site_x3", "e_estimate", "e_stderr"});
  for (size_t i = 0; i < p.sites.size(); ++i) {
    w.cell(p.sites[i].x1).cell(p.sites[i].x2).cell(p.sites[i].x3);
    w.cell(p.estimate[i]).cell(p.stderr_[i]).endrow();
  }
}

}  // namespace ri
