#pragma once

#include <string>
#include <vector>

#include "json.hpp"

#include "ri/environ.hpp"
#include "ri/interlace.hpp"
#include "ri/kernels.hpp"
#include "ri/potential.hpp"
#include "ri/region.hpp"

namespace ri {

using json = nlohmann::ordered_json;

struct RunContext {
  uint64_t seed = 0;
  std::string out_dir = ".";
  std::string format = "csv";  // csv | jsonl
  KernelConfig kernel;
};

void write_metadata(const std::string& path, const json& meta);

// Mean log-displacement curve over a dyadic step grid with sliding-window
// slopes. The desk-scale readout of the speed theorem is the slope trend.
struct ExponentFit {
  std::vector<uint64_t> grid;
  std::vector<double> mean_log_disp;
  std::vector<double> stderr_;
  struct WindowSlope {
    size_t lo = 0, hi = 0;  // grid index range [lo, hi]
    double slope = 0.0;
    double slope_stderr = 0.0;
  };
  std::vector<WindowSlope> windows;
  double early_slope = 0.0, early_stderr = 0.0;
  double late_slope = 0.0, late_stderr = 0.0;
  double censored_fraction = 0.0;
  uint64_t replicas = 0;
};

struct ExponentOptions {
  double u = 1.0;
  double beta = 4.0;
  Region window = Region::ball(Site{0, 0, 0}, 400);
  std::vector<uint64_t> grid;  // default 2^10 .. 2^18
  uint64_t reps = 200;
  double max_censoring = 0.01;
  size_t slope_window = 4;  // grid points per sliding window
};

ExponentFit exponent_experiment(const ExponentOptions& opt, uint64_t seed,
                                const KernelConfig& cfg);

struct PhiNResult {
  int64_t n = 0;
  double failure_fraction = 0.0;
  double stderr_ = 0.0;
  uint64_t reps = 0;
  uint64_t censored = 0;
  // per failed replica: index of the first cone whose negative face was hit
  std::vector<std::pair<uint64_t, int64_t>> failures;
};

PhiNResult phi_n_experiment(double u, double beta, const Rational& m, int64_t n, uint64_t seed,
                            uint64_t reps, const KernelConfig& cfg);

// CLI experiment drivers; each writes <name>.csv (or .jsonl) plus
// <name>.meta.json into ctx.out_dir and returns the artifact path.
std::string run_sample_experiment(const RunContext& ctx, const Region& window, double u,
                                  bool condition_origin, bool record_traces);
std::string run_capacity_experiment(const RunContext& ctx, const Region& a, uint64_t reps_per_site,
                                    double eps_ret);
std::string run_vacant_experiment(const RunContext& ctx, const Region& a, double u,
                                  uint64_t reps);
std::string run_walk_experiment(const RunContext& ctx, const Region& window, double u,
                                double beta, uint64_t reps, uint64_t budget,
                                const std::vector<std::pair<std::string, Region>>& stops);
std::string run_cone_exit_experiment(const RunContext& ctx, const Rational& m, int64_t n,
                                     double u, double beta, uint64_t reps);
std::string run_traps_experiment(const RunContext& ctx, const Rational& m, int64_t n, double u,
                                 uint64_t reps, bool exhaustive);
std::string run_sojourn_experiment(const RunContext& ctx, const Rational& m, int64_t n, double u,
                                   double beta, uint64_t walk_reps);
std::string run_exponent_experiment(const RunContext& ctx, const ExponentOptions& opt);
std::string run_phi_n_experiment(const RunContext& ctx, double u, double beta, const Rational& m,
                                 int64_t n, uint64_t reps);
std::string run_network_check_experiment(const RunContext& ctx, const std::string& graph_path);
std::string run_d4_experiment(const RunContext& ctx, double eps1, double eps2, double u,
                              double beta, int64_t n, uint64_t reps);

}  // namespace ri
