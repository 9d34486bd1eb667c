#pragma once

#include <memory>
#include <string>
#include <unordered_map>
#include <vector>

#include "ri/kernels.hpp"
#include "ri/potential.hpp"
#include "ri/region.hpp"
#include "ri/rng.hpp"
#include "ri/srw.hpp"

namespace ri {

// Dense bit mask over a bounding box; occupancy storage for samples.
class Bitset3D {
 public:
  Bitset3D() = default;
  explicit Bitset3D(const Bounds& box) { reset(box); }

  void reset(const Bounds& box) {
    box_ = box;
    sy_ = box.hi.x3 - box.lo.x3 + 1;
    sx_ = (box.hi.x2 - box.lo.x2 + 1) * sy_;
    uint64_t vol = uint64_t(box.volume());
    words_.assign((vol + 63) / 64, 0);
  }
  void clear() { std::fill(words_.begin(), words_.end(), 0); }

  uint64_t index(const Site& s) const {
    return uint64_t((s.x1 - box_.lo.x1) * sx_ + (s.x2 - box_.lo.x2) * sy_ + (s.x3 - box_.lo.x3));
  }
  bool test(const Site& s) const {
    if (!box_.contains(s)) return false;
    uint64_t i = index(s);
    return (words_[i >> 6] >> (i & 63)) & 1u;
  }
  bool test_index(uint64_t i) const { return (words_[i >> 6] >> (i & 63)) & 1u; }
  void set_index(uint64_t i) { words_[i >> 6] |= (uint64_t(1) << (i & 63)); }
  void set(const Site& s) { set_index(index(s)); }
  Site site_of(uint64_t i) const {
    int64_t x1 = box_.lo.x1 + int64_t(i) / sx_;
    int64_t r = int64_t(i) % sx_;
    return Site{x1, box_.lo.x2 + r / sy_, box_.lo.x3 + r % sy_};
  }
  const Bounds& box() const { return box_; }
  uint64_t popcount() const;

 private:
  Bounds box_{{0, 0, 0}, {-1, -1, -1}};
  int64_t sx_ = 1, sy_ = 1;
  std::vector<uint64_t> words_;
};

struct InterlacementSample {
  Region window;
  Bounds box;
  double u = 0.0;
  uint64_t seed = 0;
  uint64_t stream = 0;
  uint64_t trajectory_count = 0;
  Bitset3D occupancy;
  std::vector<std::vector<Site>> traces;                    // if recorded
  std::unordered_map<Site, uint32_t, SiteHash> local_time;  // if recorded
  bool conditioned_on_origin = false;
  double cap_window = 0.0;        // Poisson rate / u
  double total_leap_bias = 0.0;
  std::string sampler_mode;

  bool occupied(const Site& s) const { return occupancy.test(s); }
};

struct SampleOptions {
  bool record_traces = false;
  bool record_local_times = false;
  bool condition_on_origin = false;
  double eps_ret = 1e-4;
  // Exact mode: per-site harmonic profile of the window (small windows).
  // Far-shell mode: pilot hitting experiment for entry law and capacity.
  uint64_t pilot_launches = 20000;
  double pilot_shell_factor = 16.0;
  uint64_t profile_replicas_per_site = 4000;
  uint64_t exact_mode_max_sites = 4000;
};

// Prepared sampler: profile or pilot computed once, then draws are cheap and
// independent across streams.
class InterlaceSampler {
 public:
  InterlaceSampler(const Region& window, double u, const SampleOptions& opt, uint64_t seed,
                   uint64_t prep_stream_base, const KernelConfig& cfg);

  // Draw into `out`, reusing its storage. Deterministic in rng's identity.
  void draw_into(RngStream& rng, InterlacementSample& out) const;
  InterlacementSample draw(RngStream& rng) const;
  // Draw at a different level / extend an existing sample (shared-randomness
  // monotone coupling in u).
  void draw_at(RngStream& rng, InterlacementSample& out, double u, bool conditioned) const;
  void extend_at(RngStream& rng, InterlacementSample& out, double delta_u) const;

  double cap_window() const { return cap_window_; }
  double cap_window_stderr() const { return cap_stderr_; }
  const std::string& mode() const { return mode_; }
  const Region& window() const { return window_; }

 private:
  bool run_trajectory_impl(RngStream& rng, const Site& entry, bool record_start,
                           bool abort_on_origin, std::vector<uint32_t>& visits,
                           double& leap_bias, const Bitset3D& bits) const;
  Site sample_entry(RngStream& rng) const;

  Region window_;
  Bounds box_;
  double u_;
  SampleOptions opt_;
  std::string mode_;
  double cap_window_ = 0.0;
  double cap_stderr_ = 0.0;
  double cap_ub_ = 0.0;  // for the truncation rule
  std::vector<Site> entry_sites_;
  std::vector<double> entry_cdf_;
  int window_kind_ = 2;  // 0: window == bbox, 1: ball, 2: general
  Site ball_center_{};
  int64_t ball_rsq_ = 0;
};

InterlacementSample sample_interlacement(const Region& window, double u,
                                         const SampleOptions& opt, uint64_t seed,
                                         uint64_t stream, const KernelConfig& cfg);

struct VacantCheckResult {
  double empirical = 0.0;
  double empirical_stderr = 0.0;
  double analytic = 0.0;
  double analytic_stderr = 0.0;
  double cap_mc = 0.0;
  double cap_stderr = 0.0;
  double z_score = 0.0;
  uint64_t reps = 0;
};

// Empirical P[A subset V^u] against exp(-u cap_MC(A)).
VacantCheckResult vacant_probability_check(const Region& a, double u, uint64_t seed,
                                           uint64_t reps, const KernelConfig& cfg,
                                           uint64_t cap_replicas_per_site = 100000,
                                           uint64_t window_replicas_per_site = 4000);

struct LoopSpec {
  Site x0;
  std::vector<Site> path;  // y_0 .. y_m with y_0 = y_m = x0
  int64_t m() const { return int64_t(path.size()) - 1; }
};

void validate_loop(const Region& window, const LoopSpec& loop);

struct LoopCheckResult {
  double lhs = 0.0;  // P[L^u = eta + ell]
  double rhs = 0.0;  // (2d)^{-m} P[L^u = eta]
  double lhs_stderr = 0.0;
  double rhs_stderr = 0.0;
  bool pass = false;
  uint64_t eta_count = 0;
  uint64_t lhs_count = 0;
  std::vector<uint32_t> eta;  // modal configuration with eta(x0) = 1
};

LoopCheckResult loop_insertion_check(const Region& window, double u, const LoopSpec& loop,
                                     uint64_t seed, uint64_t reps, const KernelConfig& cfg);

struct ChemicalDistanceRow {
  int64_t k_from = 0;
  int64_t k_to = 0;
  int64_t gap = 0;
  int64_t graph_distance = 0;  // within the sampled window
};

struct ChemicalDistanceResult {
  std::vector<ChemicalDistanceRow> rows;
  double mean_gap = 0.0;
};

ChemicalDistanceResult chemical_distance_check(double u, uint64_t ray_count, uint64_t seed,
                                               const KernelConfig& cfg, int64_t window_length,
                                               int64_t window_width);

// Shared-randomness monotone coupling: occupancy at u1 is contained in
// occupancy at u2 >= u1 by construction (extra trajectories only).
std::pair<InterlacementSample, InterlacementSample> sample_coupled(
    const Region& window, double u1, double u2, const SampleOptions& opt, uint64_t seed,
    uint64_t stream, const KernelConfig& cfg);

// Versioned binary trace format and CSV export.
void save_sample(const InterlacementSample& s, const std::string& path);
InterlacementSample load_sample(const std::string& path);
void export_sample_csv(const InterlacementSample& s, const std::string& path);

}  // namespace ri
