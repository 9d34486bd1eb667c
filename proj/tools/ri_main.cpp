#include <cstdio>
#include <filesystem>
#include <string>

#include "CLI11.hpp"

#include "ri/experiments.hpp"
#include "ri/green.hpp"

namespace {

struct GlobalArgs {
  uint64_t seed = 0;
  std::string out = ".";
  int threads = 0;
  std::string format = "csv";
};

ri::RunContext make_context(const GlobalArgs& g, bool serial) {
  ri::RunContext ctx;
  ctx.seed = g.seed;
  ctx.out_dir = g.out;
  ctx.format = g.format;
  ctx.kernel.mode = (serial || g.threads == 1) ? ri::RunMode::Serial : ri::RunMode::OpenMP;
  ctx.kernel.threads = g.threads;
  std::filesystem::create_directories(g.out);
  return ctx;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"riwalk: biased random walk on random interlacements of Z^3"};
  app.set_config("--config");
  app.require_subcommand(1);

  GlobalArgs g;
  app.add_option("--seed", g.seed, "master seed (mandatory, no entropy defaults)")->required();
  app.add_option("--out", g.out, "output directory");
  app.add_option("--threads", g.threads, "worker threads (results do not depend on this)");
  app.add_option("--format", g.format, "csv|jsonl")->check(CLI::IsMember({"csv", "jsonl"}));
  bool serial = false;
  app.add_flag("--serial", serial, "run kernels on the serial reference scheduler");

  std::string region_text = "box 0 0 0 1";
  std::string window_text;
  std::string m_text = "10";
  double u = 1.0, beta = 4.0, eps_ret = 1e-4, eps1 = 1.0, eps2 = 1.0;
  int64_t n = 16;
  uint64_t reps = 100000, reps_per_site = 100000, budget = 1000000, walk_reps = 20000;
  bool condition = false, traces = false, exhaustive = false;
  std::string graph_path;
  std::string stops_text;
  uint64_t grid_lo = 10, grid_hi = 18;

  auto* c_green = app.add_subcommand("green-table", "regenerate the Green near-field table");
  std::string green_path = "green_table.bin";
  int64_t green_radius = 20;
  c_green->add_option("--path", green_path, "output path");
  c_green->add_option("--radius", green_radius, "table radius");

  auto* c_sample = app.add_subcommand("sample", "draw one interlacement sample");
  c_sample->add_option("--window", window_text, "window region")->required();
  c_sample->add_option("--u", u, "interlacement level");
  c_sample->add_flag("--conditioned", condition, "condition on 0 in I^u");
  c_sample->add_flag("--traces", traces, "record traces (enables binary export)");

  auto* c_cap = app.add_subcommand("capacity", "harmonic measure and capacity of a region");
  c_cap->add_option("--region", region_text, "target region")->required();
  c_cap->add_option("--replicas-per-site", reps_per_site, "escape replicas per site");
  c_cap->add_option("--eps-ret", eps_ret, "certified truncation bias");

  auto* c_vac = app.add_subcommand("vacant", "vacant-set probability identity check");
  c_vac->add_option("--region", region_text, "set A")->required();
  c_vac->add_option("--u", u, "interlacement level");
  c_vac->add_option("--reps", reps, "samples");

  auto* c_walk = app.add_subcommand("walk", "quenched walks with named stop regions");
  c_walk->add_option("--window", window_text, "window region")->required();
  c_walk->add_option("--u", u, "interlacement level");
  c_walk->add_option("--beta", beta, "bias");
  c_walk->add_option("--reps", reps, "walk replicas");
  c_walk->add_option("--budget", budget, "step budget");
  c_walk->add_option("--stops", stops_text, "semicolon-separated name=region list");

  auto* c_cone = app.add_subcommand("cone-exit", "cone exit probabilities");
  c_cone->add_option("--M", m_text, "cone aspect M");
  c_cone->add_option("--n", n, "cone scale");
  c_cone->add_option("--u", u, "interlacement level");
  c_cone->add_option("--beta", beta, "bias");
  c_cone->add_option("--reps", reps, "replicas");

  auto* c_traps = app.add_subcommand("traps", "trap detection frequency");
  c_traps->add_option("--M", m_text, "trap aspect M");
  c_traps->add_option("--n", n, "trap scale");
  c_traps->add_option("--u", u, "interlacement level");
  c_traps->add_option("--reps", reps, "environments");
  c_traps->add_flag("--exhaustive", exhaustive, "count all instead of first hit");

  auto* c_soj = app.add_subcommand("sojourn", "trap sojourn measurements");
  c_soj->add_option("--M", m_text, "trap aspect M");
  c_soj->add_option("--n", n, "trap scale");
  c_soj->add_option("--u", u, "interlacement level");
  c_soj->add_option("--beta", beta, "bias");
  c_soj->add_option("--walk-reps", walk_reps, "walks on the trapped environment");

  auto* c_exp = app.add_subcommand("exponent", "displacement exponent slopes");
  c_exp->add_option("--u", u, "interlacement level");
  c_exp->add_option("--beta", beta, "bias");
  c_exp->add_option("--window", window_text, "window region (default ball)");
  c_exp->add_option("--reps", reps, "replicas");
  c_exp->add_option("--grid-lo", grid_lo, "log2 of first grid point");
  c_exp->add_option("--grid-hi", grid_hi, "log2 of last grid point");

  auto* c_phi = app.add_subcommand("phi-n", "nested cone exit event");
  c_phi->add_option("--u", u, "interlacement level");
  c_phi->add_option("--beta", beta, "bias");
  c_phi->add_option("--M", m_text, "cone aspect M");
  c_phi->add_option("--n", n, "outer scale (perfect cube)");
  c_phi->add_option("--reps", reps, "replicas");

  auto* c_net = app.add_subcommand("network-check", "network solver exactness checks");
  c_net->add_option("--graph", graph_path, "optional edge-list file to solve");

  auto* c_d4 = app.add_subcommand("d4", "dimension-4 straight-segment trap mode");
  c_d4->add_option("--eps1", eps1, "segment length factor");
  c_d4->add_option("--eps2", eps2, "vacant shell factor");
  c_d4->add_option("--u", u, "interlacement level");
  c_d4->add_option("--beta", beta, "bias");
  c_d4->add_option("--n", n, "scale");
  c_d4->add_option("--reps", reps, "detection samples");

  CLI11_PARSE(app, argc, argv);

  try {
    ri::RunContext ctx = make_context(g, serial);
    if (ctx.kernel.threads > 0) omp_set_num_threads(ctx.kernel.threads);
    std::string out;
    if (app.got_subcommand(c_green)) {
      ri::GreenTable t = ri::GreenTable::generate(green_radius);
      t.save(ctx.out_dir + "/" + green_path);
      out = ctx.out_dir + "/" + green_path;
    } else if (app.got_subcommand(c_sample)) {
      out = run_sample_experiment(ctx, ri::Region::parse(window_text), u, condition, traces);
    } else if (app.got_subcommand(c_cap)) {
      out = run_capacity_experiment(ctx, ri::Region::parse(region_text), reps_per_site, eps_ret);
    } else if (app.got_subcommand(c_vac)) {
      out = run_vacant_experiment(ctx, ri::Region::parse(region_text), u, reps);
    } else if (app.got_subcommand(c_walk)) {
      std::vector<std::pair<std::string, ri::Region>> stops;
      std::string rest = stops_text;
      while (!rest.empty()) {
        auto semi = rest.find(';');
        std::string item = rest.substr(0, semi);
        rest = semi == std::string::npos ? "" : rest.substr(semi + 1);
        auto eq = item.find('=');
        if (eq == std::string::npos) ri::fail(ri::errc::config_invalid, "bad stop: " + item);
        stops.emplace_back(item.substr(0, eq), ri::Region::parse(item.substr(eq + 1)));
      }
      out = run_walk_experiment(ctx, ri::Region::parse(window_text), u, beta, reps, budget,
                                stops);
    } else if (app.got_subcommand(c_cone)) {
      out = run_cone_exit_experiment(ctx, ri::Rational::parse(m_text), n, u, beta, reps);
    } else if (app.got_subcommand(c_traps)) {
      out = run_traps_experiment(ctx, ri::Rational::parse(m_text), n, u, reps, exhaustive);
    } else if (app.got_subcommand(c_soj)) {
      out = run_sojourn_experiment(ctx, ri::Rational::parse(m_text), n, u, beta, walk_reps);
    } else if (app.got_subcommand(c_exp)) {
      ri::ExponentOptions opt;
      opt.u = u;
      opt.beta = beta;
      opt.reps = reps;
      for (uint64_t k = grid_lo; k <= grid_hi; ++k) opt.grid.push_back(uint64_t(1) << k);
      if (!window_text.empty()) opt.window = ri::Region::parse(window_text);
      out = run_exponent_experiment(ctx, opt);
    } else if (app.got_subcommand(c_phi)) {
      out = run_phi_n_experiment(ctx, u, beta, ri::Rational::parse(m_text), n, reps);
    } else if (app.got_subcommand(c_net)) {
      out = run_network_check_experiment(ctx, graph_path);
    } else if (app.got_subcommand(c_d4)) {
      out = run_d4_experiment(ctx, eps1, eps2, u, beta, n, reps);
    }
    std::printf("wrote %s\n", out.c_str());
    return 0;
  } catch (const ri::Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
}
