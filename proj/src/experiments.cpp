#include "ri/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "ri/csvio.hpp"
#include "ri/d4.hpp"
#include "ri/green.hpp"

namespace ri {

void write_metadata(const std::string& path, const json& meta) {
  std::ofstream f(path, std::ios::binary);
  if (!f) fail(errc::io_error, "cannot open for write: " + path);
  f << meta.dump(2) << "\n";
}

namespace {

json kernel_meta(const RunContext& ctx) {
  return json{{"seed", ctx.seed},
              {"threads", ctx.kernel.threads},
              {"mode", ctx.kernel.mode == RunMode::Serial ? "serial" : "openmp"},
              {"format", ctx.format}};
}

std::string out_path(const RunContext& ctx, const std::string& stem, const std::string& ext) {
  return ctx.out_dir + "/" + stem + ext;
}

}  // namespace

ExponentFit exponent_experiment(const ExponentOptions& opt, uint64_t seed,
                                const KernelConfig& cfg) {
  ExponentFit fit;
  fit.grid = opt.grid;
  if (fit.grid.empty())
    for (int k = 10; k <= 18; ++k) fit.grid.push_back(uint64_t(1) << k);
  const size_t npts = fit.grid.size();
  fit.replicas = opt.reps;

  SampleOptions sopt;
  sopt.condition_on_origin = true;
  InterlaceSampler sampler(opt.window, opt.u, sopt, seed, uint64_t(1) << 40, cfg);

  uint64_t block = 8;
  uint64_t nblocks = (opt.reps + block - 1) / block;
  std::vector<std::vector<MeanStat>> partial(nblocks, std::vector<MeanStat>(npts));
  std::vector<uint64_t> censored(nblocks, 0);
#pragma omp parallel if (cfg.mode == RunMode::OpenMP)
  {
    InterlacementSample sample;
#pragma omp for schedule(dynamic, 1)
    for (int64_t b = 0; b < int64_t(nblocks); ++b) {
      std::vector<MeanStat> st(npts);
      uint64_t cens = 0;
      uint64_t lo = uint64_t(b) * block, hi = std::min(opt.reps, lo + block);
      for (uint64_t i = lo; i < hi; ++i) {
        RngStream rng(seed, (uint64_t(1) << 41) + i);
        sampler.draw_into(rng, sample);
        Environment env = build_environment(sample, opt.beta);
        WalkOptions wopt;
        wopt.budget = fit.grid.back();
        wopt.checkpoint_steps.assign(fit.grid.begin(), fit.grid.end());
        WalkRecord rec = run_walk(env, Site{0, 0, 0}, {}, wopt, rng);
        if (rec.censored && rec.stop_reason == "window") {
          ++cens;
          continue;
        }
        for (size_t k = 0; k < npts; ++k) {
          double d = norm2(rec.checkpoints[k].second);
          st[k].add(std::log(std::max(d, 1.0)));
        }
      }
      partial[size_t(b)] = std::move(st);
      censored[size_t(b)] = cens;
    }
  }
  std::vector<MeanStat> agg(npts);
  uint64_t cens_total = 0;
  for (uint64_t b = 0; b < nblocks; ++b) {
    for (size_t k = 0; k < npts; ++k) agg[k].merge(partial[b][k]);
    cens_total += censored[b];
  }
  fit.censored_fraction = double(cens_total) / double(opt.reps);
  if (fit.censored_fraction > opt.max_censoring)
    fail(errc::excess_censoring,
         "exponent_experiment: censored fraction " + format_double(fit.censored_fraction) +
             " exceeds " + format_double(opt.max_censoring));

  fit.mean_log_disp.resize(npts);
  fit.stderr_.resize(npts);
  for (size_t k = 0; k < npts; ++k) {
    fit.mean_log_disp[k] = agg[k].mean();
    fit.stderr_[k] = agg[k].stderr_of_mean();
  }

  // Weighted least squares on sliding windows of ln(mean disp) vs ln(step).
  size_t w = std::max<size_t>(opt.slope_window, 2);
  for (size_t lo = 0; lo + w <= npts; ++lo) {
    size_t hi = lo + w - 1;
    double sw = 0, swx = 0, swy = 0;
    for (size_t k = lo; k <= hi; ++k) {
      double se = std::max(fit.stderr_[k], 1e-9);
      double wt = 1.0 / (se * se);
      double x = std::log(double(fit.grid[k]));
      sw += wt;
      swx += wt * x;
      swy += wt * fit.mean_log_disp[k];
    }
    double xbar = swx / sw, ybar = swy / sw;
    double sxx = 0, sxy = 0;
    for (size_t k = lo; k <= hi; ++k) {
      double se = std::max(fit.stderr_[k], 1e-9);
      double wt = 1.0 / (se * se);
      double x = std::log(double(fit.grid[k]));
      sxx += wt * (x - xbar) * (x - xbar);
      sxy += wt * (x - xbar) * (fit.mean_log_disp[k] - ybar);
    }
    ExponentFit::WindowSlope ws;
    ws.lo = lo;
    ws.hi = hi;
    ws.slope = sxy / sxx;
    ws.slope_stderr = std::sqrt(1.0 / sxx);
    fit.windows.push_back(ws);
  }
  if (!fit.windows.empty()) {
    fit.early_slope = fit.windows.front().slope;
    fit.early_stderr = fit.windows.front().slope_stderr;
    fit.late_slope = fit.windows.back().slope;
    fit.late_stderr = fit.windows.back().slope_stderr;
  }
  return fit;
}

PhiNResult phi_n_experiment(double u, double beta, const Rational& m, int64_t n, uint64_t seed,
                            uint64_t reps, const KernelConfig& cfg) {
  int64_t root = int64_t(std::llround(std::cbrt(double(n))));
  if (root * root * root != n)
    fail(errc::config_invalid, "phi_n_experiment: n must be a perfect cube");
  int64_t cones = root * root;  // n^{2/3}
  std::vector<ConeRegion> shells;
  for (int64_t i = 1; i <= cones; ++i) shells.push_back(ConeRegion{m, i * root});

  Region window = Region::cone(m, n + 1);
  SampleOptions sopt;
  sopt.condition_on_origin = true;
  InterlaceSampler sampler(window, u, sopt, seed, uint64_t(1) << 40, cfg);

  PhiNResult out;
  out.n = n;
  out.reps = reps;
  uint64_t block = 64;
  uint64_t nblocks = (reps + block - 1) / block;
  struct Part {
    uint64_t fail = 0, cens = 0;
    std::vector<std::pair<uint64_t, int64_t>> failures;
  };
  std::vector<Part> partial(nblocks);
#pragma omp parallel if (cfg.mode == RunMode::OpenMP)
  {
    InterlacementSample sample;
#pragma omp for schedule(dynamic, 1)
    for (int64_t b = 0; b < int64_t(nblocks); ++b) {
      Part part;
      uint64_t lo = uint64_t(b) * block, hi = std::min(reps, lo + block);
      for (uint64_t i = lo; i < hi; ++i) {
        RngStream rng(seed, (uint64_t(1) << 41) + i);
        sampler.draw_into(rng, sample);
        Environment env = build_environment(sample, beta);
        Site s{0, 0, 0};
        size_t next = 0;  // smallest unresolved shell
        uint64_t budget = uint64_t(500) * uint64_t(n) * uint64_t(n) + 500000;
        int64_t failed_at = -1;
        uint64_t steps = 0;
        while (next < shells.size() && steps < budget) {
          s = quenched_step(env, s, rng);
          ++steps;
          for (size_t k = next; k < shells.size(); ++k) {
            if (cone_minus_contains(shells[k], s)) {
              failed_at = int64_t(k + 1);
              break;
            }
            if (cone_plus_contains(shells[k], s)) {
              if (k == next) ++next;
              // hitting an outer positive face resolves inner shells too
              while (next <= k && next < shells.size()) ++next;
              if (k >= next) next = k + 1;
              continue;
            }
            break;  // not on shell k's boundary; larger shells unreachable yet
          }
          if (failed_at >= 0) break;
        }
        if (failed_at >= 0) {
          ++part.fail;
          part.failures.emplace_back(i, failed_at);
        } else if (next < shells.size()) {
          ++part.cens;
        }
      }
      partial[size_t(b)] = std::move(part);
    }
  }
  uint64_t fails = 0;
  for (Part& p : partial) {
    fails += p.fail;
    out.censored += p.cens;
    for (auto& f : p.failures) out.failures.push_back(f);
  }
  out.failure_fraction = double(fails) / double(reps);
  out.stderr_ = std::sqrt(
      std::max(out.failure_fraction * (1 - out.failure_fraction), 1.0 / double(reps)) /
      double(reps));
  return out;
}

std::string run_sample_experiment(const RunContext& ctx, const Region& window, double u,
                                  bool condition_origin, bool record_traces) {
  SampleOptions sopt;
  sopt.record_traces = record_traces;
  sopt.record_local_times = record_traces;
  sopt.condition_on_origin = condition_origin;
  InterlaceSampler sampler(window, u, sopt, ctx.seed, uint64_t(1) << 40, ctx.kernel);
  RngStream rng(ctx.seed, 0);
  InterlacementSample s = sampler.draw(rng);
  std::string csv = out_path(ctx, "sample", ".csv");
  export_sample_csv(s, csv);
  if (record_traces) save_sample(s, out_path(ctx, "sample", ".bin"));
  json meta = kernel_meta(ctx);
  meta["experiment"] = "sample";
  meta["window"] = window.descriptor();
  meta["u"] = u;
  meta["conditioned"] = condition_origin;
  meta["trajectories"] = s.trajectory_count;
  meta["cap_window"] = sampler.cap_window();
  meta["cap_window_stderr"] = sampler.cap_window_stderr();
  meta["sampler_mode"] = sampler.mode();
  meta["total_leap_bias"] = s.total_leap_bias;
  write_metadata(out_path(ctx, "sample", ".meta.json"), meta);
  return csv;
}

std::string run_capacity_experiment(const RunContext& ctx, const Region& a,
                                    uint64_t reps_per_site, double eps_ret) {
  HarmonicOptions opt;
  opt.replicas_per_site = reps_per_site;
  opt.eps_ret = eps_ret;
  HarmonicProfile p = harmonic_measure(a, ctx.seed, 1, opt, ctx.kernel);
  std::string csv = out_path(ctx, "capacity", ".csv");
  write_profile_csv(p, csv);
  json meta = kernel_meta(ctx);
  meta["experiment"] = "capacity";
  meta["region"] = a.descriptor();
  meta["replicas_per_site"] = reps_per_site;
  meta["eps_ret"] = eps_ret;
  meta["capacity"] = p.capacity;
  meta["capacity_stderr"] = p.capacity_stderr;
  meta["symmetrized"] = p.symmetrized;
  write_metadata(out_path(ctx, "capacity", ".meta.json"), meta);
  return csv;
}

std::string run_vacant_experiment(const RunContext& ctx, const Region& a, double u,
                                  uint64_t reps) {
  VacantCheckResult r = vacant_probability_check(a, u, ctx.seed, reps, ctx.kernel);
  std::string csv = out_path(ctx, "vacant", ".csv");
  {
    CsvWriter w(csv);
    w.comment("A=" + a.descriptor() + " u=" + format_double(u) +
              " seed=" + std::to_string(ctx.seed) + " reps=" + std::to_string(reps));
    w.header({"empirical", "empirical_stderr", "analytic", "analytic_stderr", "cap_mc",
              "cap_stderr", "z"});
    w.cell(r.empirical).cell(r.empirical_stderr).cell(r.analytic).cell(r.analytic_stderr);
    w.cell(r.cap_mc).cell(r.cap_stderr).cell(r.z_score).endrow();
  }
  json meta = kernel_meta(ctx);
  meta["experiment"] = "vacant";
  meta["A"] = a.descriptor();
  meta["u"] = u;
  meta["reps"] = reps;
  meta["z"] = r.z_score;
  write_metadata(out_path(ctx, "vacant", ".meta.json"), meta);
  return csv;
}

std::string run_walk_experiment(const RunContext& ctx, const Region& window, double u,
                                double beta, uint64_t reps, uint64_t budget,
                                const std::vector<std::pair<std::string, Region>>& stops) {
  SampleOptions sopt;
  sopt.condition_on_origin = true;
  InterlaceSampler sampler(window, u, sopt, ctx.seed, uint64_t(1) << 40, ctx.kernel);
  std::vector<NamedStop> named;
  for (const auto& [name, region] : stops) named.push_back(stop_from_region(name, region));

  std::string csv = out_path(ctx, "walk", ".csv");
  CsvWriter w(csv);
  w.comment("window=" + window.descriptor() + " u=" + format_double(u) +
            " beta=" + format_double(beta) + " seed=" + std::to_string(ctx.seed));
  std::vector<std::string> cols = {"replica", "steps",  "stop_reason",
                                   "end_x1",  "end_x2", "end_x3"};
  for (const auto& [name, region] : stops) cols.push_back("hit_" + name);
  w.header(cols);

  InterlacementSample sample;
  for (uint64_t i = 0; i < reps; ++i) {
    RngStream rng(ctx.seed, (uint64_t(1) << 41) + i);
    sampler.draw_into(rng, sample);
    Environment env = build_environment(sample, beta);
    WalkOptions wopt;
    wopt.budget = budget;
    WalkRecord rec = run_walk(env, Site{0, 0, 0}, named, wopt, rng);
    w.cell(i).cell(rec.steps).cell(rec.stop_reason.empty() ? "none" : rec.stop_reason);
    w.cell(rec.end.x1).cell(rec.end.x2).cell(rec.end.x3);
    for (const auto& [name, region] : stops) {
      int64_t t = -1;
      for (const auto& [hit_name, step] : rec.hit_times)
        if (hit_name == name) t = int64_t(step);
      w.cell(t);
    }
    w.endrow();
  }
  w.close();
  json meta = kernel_meta(ctx);
  meta["experiment"] = "walk";
  meta["window"] = window.descriptor();
  meta["u"] = u;
  meta["beta"] = beta;
  meta["reps"] = reps;
  meta["budget"] = budget;
  write_metadata(out_path(ctx, "walk", ".meta.json"), meta);
  return csv;
}

std::string run_cone_exit_experiment(const RunContext& ctx, const Rational& m, int64_t n,
                                     double u, double beta, uint64_t reps) {
  ConeExitResult r = cone_exit_experiment(m, n, u, beta, ctx.seed, reps, ctx.kernel);
  std::string csv = out_path(ctx, "cone_exit", ".csv");
  {
    CsvWriter w(csv);
    w.comment("M=" + m.str() + " n=" + std::to_string(n) + " u=" + format_double(u) +
              " beta=" + format_double(beta) + " seed=" + std::to_string(ctx.seed));
    w.header({"p_minus", "p_minus_stderr", "p_plus", "p_censored", "reps"});
    w.cell(r.p_minus).cell(r.p_minus_stderr).cell(r.p_plus).cell(r.p_censored).cell(r.reps);
    w.endrow();
  }
  json meta = kernel_meta(ctx);
  meta["experiment"] = "cone-exit";
  meta["M"] = m.str();
  meta["n"] = n;
  meta["u"] = u;
  meta["beta"] = beta;
  meta["reps"] = reps;
  write_metadata(out_path(ctx, "cone_exit", ".meta.json"), meta);
  return csv;
}

std::string run_traps_experiment(const RunContext& ctx, const Rational& m, int64_t n, double u,
                                 uint64_t reps, bool exhaustive) {
  TrapAnchors anchors = trap_anchors(Site{0, 0, 0}, m, n);
  QuiverRegion q(anchors.mouth, m, n);
  Region window = Region::cylinder(Site{0, 0, 0}, 4, q.base.x1 + q.len + 4, q.rad + 4);
  SampleOptions sopt;
  InterlaceSampler sampler(window, u, sopt, ctx.seed, uint64_t(1) << 40, ctx.kernel);

  std::string csv = out_path(ctx, "traps", ".csv");
  CsvWriter w(csv);
  w.comment("M=" + m.str() + " n=" + std::to_string(n) + " u=" + format_double(u) +
            " seed=" + std::to_string(ctx.seed) +
            (anchors.warning.empty() ? "" : " warning=" + anchors.warning));
  w.header({"replica", "t1", "t2", "t3", "is_trap"});
  uint64_t found = 0;
  InterlacementSample sample;
  for (uint64_t i = 0; i < reps; ++i) {
    RngStream rng(ctx.seed, (uint64_t(1) << 41) + i);
    sampler.draw_into(rng, sample);
    TrapReport rep = detect_trap(sample, Site{0, 0, 0}, m, n);
    found += rep.is_trap ? 1 : 0;
    w.cell(i).cell(rep.t1).cell(rep.t2).cell(rep.t3).cell(rep.is_trap).endrow();
    if (rep.is_trap && !exhaustive) break;
  }
  w.close();
  json meta = kernel_meta(ctx);
  meta["experiment"] = "traps";
  meta["M"] = m.str();
  meta["n"] = n;
  meta["u"] = u;
  meta["reps"] = reps;
  meta["exhaustive"] = exhaustive;
  meta["traps_found"] = found;
  if (!anchors.warning.empty()) meta["warning"] = anchors.warning;
  write_metadata(out_path(ctx, "traps", ".meta.json"), meta);
  return csv;
}

std::string run_sojourn_experiment(const RunContext& ctx, const Rational& m, int64_t n, double u,
                                   double beta, uint64_t walk_reps) {
  SojournOptions opt;
  opt.walk_reps = walk_reps;
  SojournReport r = trap_sojourn_experiment(m, n, u, beta, ctx.seed, opt, ctx.kernel);
  std::string csv = out_path(ctx, "sojourn", ".csv");
  {
    CsvWriter w(csv);
    w.comment("M=" + m.str() + " n=" + std::to_string(n) + " u=" + format_double(u) +
              " beta=" + format_double(beta) + " seed=" + std::to_string(ctx.seed));
    w.header({"q10", "q25", "q50", "q75", "q90", "p_reach_tip", "geometric_parameter",
              "reversibility_prediction", "p_tip_to_mouth_mc", "p_straight_descent",
              "environments_tried"});
    for (double qv : r.exit_quantiles) w.cell(qv);
    w.cell(r.p_reach_tip).cell(r.geometric_parameter).cell(r.reversibility_prediction);
    w.cell(r.p_tip_to_mouth_mc).cell(r.p_straight_descent).cell(r.environments_tried);
    w.endrow();
  }
  json meta = kernel_meta(ctx);
  meta["experiment"] = "sojourn";
  meta["M"] = m.str();
  meta["n"] = n;
  meta["u"] = u;
  meta["beta"] = beta;
  meta["walk_reps"] = walk_reps;
  write_metadata(out_path(ctx, "sojourn", ".meta.json"), meta);
  return csv;
}

std::string run_exponent_experiment(const RunContext& ctx, const ExponentOptions& opt) {
  ExponentFit fit = exponent_experiment(opt, ctx.seed, ctx.kernel);
  std::string csv = out_path(ctx, "exponent", ".csv");
  {
    CsvWriter w(csv);
    w.comment("u=" + format_double(opt.u) + " beta=" + format_double(opt.beta) + " window=" +
              opt.window.descriptor() + " reps=" + std::to_string(opt.reps) +
              " seed=" + std::to_string(ctx.seed));
    w.header({"step", "mean_log_disp", "stderr"});
    for (size_t k = 0; k < fit.grid.size(); ++k)
      w.cell(fit.grid[k]).cell(fit.mean_log_disp[k]).cell(fit.stderr_[k]).endrow();
  }
  std::string slopes = out_path(ctx, "exponent_slopes", ".csv");
  {
    CsvWriter w(slopes);
    w.header({"from_step", "to_step", "slope", "slope_stderr"});
    for (const auto& ws : fit.windows)
      w.cell(fit.grid[ws.lo]).cell(fit.grid[ws.hi]).cell(ws.slope).cell(ws.slope_stderr).endrow();
  }
  json meta = kernel_meta(ctx);
  meta["experiment"] = "exponent";
  meta["u"] = opt.u;
  meta["beta"] = opt.beta;
  meta["window"] = opt.window.descriptor();
  meta["reps"] = opt.reps;
  meta["censored_fraction"] = fit.censored_fraction;
  meta["early_slope"] = fit.early_slope;
  meta["late_slope"] = fit.late_slope;
  write_metadata(out_path(ctx, "exponent", ".meta.json"), meta);
  return csv;
}

std::string run_phi_n_experiment(const RunContext& ctx, double u, double beta, const Rational& m,
                                 int64_t n, uint64_t reps) {
  PhiNResult r = phi_n_experiment(u, beta, m, n, ctx.seed, reps, ctx.kernel);
  std::string csv = out_path(ctx, "phi_n", ".csv");
  {
    CsvWriter w(csv);
    w.comment("u=" + format_double(u) + " beta=" + format_double(beta) + " M=" + m.str() +
              " n=" + std::to_string(n) + " seed=" + std::to_string(ctx.seed));
    w.header({"n", "failure_fraction", "stderr", "reps", "censored"});
    w.cell(r.n).cell(r.failure_fraction).cell(r.stderr_).cell(r.reps).cell(r.censored).endrow();
  }
  json meta = kernel_meta(ctx);
  meta["experiment"] = "phi-n";
  meta["u"] = u;
  meta["beta"] = beta;
  meta["M"] = m.str();
  meta["n"] = n;
  meta["reps"] = reps;
  meta["failure_fraction"] = r.failure_fraction;
  write_metadata(out_path(ctx, "phi_n", ".meta.json"), meta);
  return csv;
}

std::string run_network_check_experiment(const RunContext& ctx, const std::string& graph_path) {
  std::string csv = out_path(ctx, "network_check", ".csv");
  CsvWriter w(csv);
  w.header({"check", "value", "expected", "pass"});

  {
    WeightedGraph g;
    g.add_edge(Site{0, 0, 0}, Site{1, 0, 0}, std::log(2.0));
    g.add_edge(Site{1, 0, 0}, Site{2, 0, 0}, std::log(3.0));
    g.set_source({Site{0, 0, 0}});
    g.set_sink({Site{2, 0, 0}});
    double c = effective_conductance(g).effective_conductance;
    w.cell("series_2_3").cell(c).cell(1.2).cell(std::fabs(c - 1.2) < 1e-9).endrow();
  }
  {
    WeightedGraph g;
    g.add_edge(Site{0, 0, 0}, Site{1, 0, 0}, std::log(2.0));
    g.add_edge(Site{0, 0, 0}, Site{1, 0, 0}, std::log(3.0));
    g.set_source({Site{0, 0, 0}});
    g.set_sink({Site{1, 0, 0}});
    double c = effective_conductance(g).effective_conductance;
    w.cell("parallel_2_3").cell(c).cell(5.0).cell(std::fabs(c - 5.0) < 1e-9).endrow();
  }
  if (!graph_path.empty()) {
    WeightedGraph g = WeightedGraph::load(graph_path);
    NetworkSolution sol = effective_conductance(g);
    w.cell("file_graph").cell(sol.effective_conductance).cell(0.0).cell(true).endrow();
  }
  w.close();
  json meta = kernel_meta(ctx);
  meta["experiment"] = "network-check";
  if (!graph_path.empty()) meta["graph"] = graph_path;
  write_metadata(out_path(ctx, "network_check", ".meta.json"), meta);
  return csv;
}

std::string run_d4_experiment(const RunContext& ctx, double eps1, double eps2, double u,
                              double beta, int64_t n, uint64_t reps) {
  d4::D4Options opt;
  opt.eps1 = eps1;
  opt.eps2 = eps2;
  opt.u = u;
  opt.beta = beta;
  opt.n = n;
  opt.detection_reps = reps;
  d4::D4Report r = d4::d4_trap_mode(opt, ctx.seed, ctx.kernel);
  std::string csv = out_path(ctx, "d4", ".csv");
  {
    CsvWriter w(csv);
    w.comment("eps1=" + format_double(eps1) + " eps2=" + format_double(eps2) +
              " u=" + format_double(u) + " beta=" + format_double(beta) +
              " n=" + std::to_string(n) + " seed=" + std::to_string(ctx.seed));
    w.header({"segment_length", "shell_radius", "detection_frequency", "detection_stderr",
              "trap_found", "q10", "q25", "q50", "q75", "q90"});
    w.cell(r.segment_length).cell(r.shell_radius).cell(r.detection_frequency);
    w.cell(r.detection_stderr).cell(r.trap_found);
    for (double qv : r.exit_quantiles) w.cell(qv);
    w.endrow();
  }
  json meta = kernel_meta(ctx);
  meta["experiment"] = "d4";
  meta["eps1"] = eps1;
  meta["eps2"] = eps2;
  meta["u"] = u;
  meta["beta"] = beta;
  meta["n"] = n;
  meta["reps"] = reps;
  write_metadata(out_path(ctx, "d4", ".meta.json"), meta);
  return csv;
}

}  // namespace ri
