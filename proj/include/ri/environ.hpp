#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "ri/interlace.hpp"
#include "ri/network.hpp"
#include "ri/region.hpp"

namespace ri {

// Fast view of the window geometry for per-step boundary checks.
struct WindowView {
  Bounds box;
  int kind = 2;  // 0: window == bbox, 1: ball, 2: general
  Site ball_center{};
  int64_t ball_rsq = 0;
  const Region* region = nullptr;

  bool contains(const Site& s) const {
    if (!box.contains(s)) return false;
    switch (kind) {
      case 0: return true;
      case 1: return norm2_sq(s - ball_center) < ball_rsq;
      default: return region->contains(s);
    }
  }
  bool on_inner_boundary(const Site& s) const {
    for (int d = 0; d < 6; ++d)
      if (!contains(neighbor(s, d))) return true;
    return false;
  }
};

WindowView make_window_view(const Region& window);

// Conductance environment c(x,y) = beta^{max(x.e1, y.e1)} on occupied edges.
// Stepping works with the common factor beta^{x.e1} cancelled, so only the
// ratios {beta, 1} ever appear; absolute conductances are exposed in log
// space for network work.
struct Environment {
  const Bitset3D* occ = nullptr;
  const Region* window_region = nullptr;
  WindowView window;
  double beta = 2.0;
  double log_beta = 0.0;

  bool occupied(const Site& s) const { return occ->test(s); }
};

Environment build_environment(const InterlacementSample& sample, double beta);
Environment build_environment_raw(const Bitset3D& occ, const Region& window, double beta);

// One step of the quenched walk. IsolatedSite if no occupied neighbor.
Site quenched_step(const Environment& env, const Site& x, RngStream& rng);

// Log conductance of the edge (x,y), if present.
std::optional<double> log_conductance(const Environment& env, const Site& x, const Site& y);
// log pi(x) = log sum of incident conductances.
double log_pi(const Environment& env, const Site& x);

struct NamedStop {
  std::string name;
  std::function<bool(const Site&)> contains;
};

NamedStop stop_from_region(const std::string& name, const Region& r);
// Cone face predicates (closed form, no enumeration).
bool cone_minus_contains(const ConeRegion& c, const Site& s);
bool cone_plus_contains(const ConeRegion& c, const Site& s);

struct WalkRecord {
  Site start{};
  Site end{};
  uint64_t steps = 0;
  bool censored = false;          // budget or window exit
  std::string stop_reason;        // stop name, "budget", or "window"
  std::vector<std::pair<uint64_t, Site>> checkpoints;
  std::vector<std::pair<std::string, uint64_t>> hit_times;  // first hits, k >= 1
};

struct WalkOptions {
  uint64_t budget = 0;                      // 0 = unlimited
  std::vector<uint64_t> checkpoint_steps;   // ascending
  bool stop_at_window_boundary = true;
};

WalkRecord run_walk(const Environment& env, const Site& start,
                    const std::vector<NamedStop>& stops, const WalkOptions& opt, RngStream& rng);

struct ConeExitResult {
  double p_minus = 0.0;
  double p_minus_stderr = 0.0;
  double p_plus = 0.0;
  double p_censored = 0.0;
  uint64_t reps = 0;
};

// Averaged-measure cone exit probabilities: fresh environment per replica,
// conditioned on 0 in I^u.
ConeExitResult cone_exit_experiment(const Rational& m, int64_t n, double u, double beta,
                                    uint64_t seed, uint64_t reps, const KernelConfig& cfg);

struct TrapReport {
  TrapAnchors anchors;
  bool t1 = false;  // interlacement meets the quiver shell only at the mouth
  bool t2 = false;  // segment occupied
  bool t3 = false;  // tip occupied
  bool is_trap = false;
  std::vector<Site> tip_component;  // component of the tip in I minus {mouth}
  bool component_inside_quiver = false;
  bool mouth_adjacent = false;
};

TrapReport detect_trap(const InterlacementSample& sample, const Site& x, const Rational& m,
                       int64_t n);

// Scans x along the positive cone boundary in lexicographic order; returns
// the first trap, or counts all of them when exhaustive.
struct TrapSearchResult {
  bool found = false;
  Site at{};
  TrapReport report;
  uint64_t scanned = 0;
  uint64_t trap_count = 0;  // only filled when exhaustive
};
TrapSearchResult trap_search(const InterlacementSample& sample, const Rational& m_cone,
                             int64_t n_cone, const Rational& m_trap, int64_t n_trap,
                             bool exhaustive);

// Finite trap network: component of the tip in occupancy minus the mouth,
// plus the mouth, with the environment's conductances.
WeightedGraph trap_network(const Environment& env, const TrapReport& trap);

// Graph of the environment restricted to a domain region.
WeightedGraph environment_graph(const Environment& env, const Region& domain);

struct SojournReport {
  TrapReport trap;
  uint64_t environments_tried = 0;
  uint64_t walk_reps = 0;
  double exit_quantiles[5] = {0, 0, 0, 0, 0};  // 10/25/50/75/90%
  double p_reach_tip = 0.0;                    // before leaving the window
  double p_reach_tip_stderr = 0.0;
  double mean_tip_returns = 0.0;
  double geometric_parameter = 0.0;            // 1/(1+mean returns)
  double reversibility_prediction = 0.0;       // pi(mouth)/pi(tip) * P_mouth[T_tip < T_mouth]
  double p_tip_to_mouth_mc = 0.0;              // direct MC of P_tip[T_mouth < T_tip]
  double p_tip_to_mouth_stderr = 0.0;
  double p_straight_descent = 0.0;             // first segment steps all +e1
  double p_straight_descent_stderr = 0.0;
};

struct SojournOptions {
  uint64_t walk_reps = 20000;
  uint64_t max_environments = 2000000;
  uint64_t budget_per_walk = 2000000;
};

SojournReport trap_sojourn_experiment(const Rational& m, int64_t n, double u, double beta,
                                      uint64_t seed, const SojournOptions& opt,
                                      const KernelConfig& cfg);

struct ExitInequalityResult {
  double p_minus = 0.0;
  double p_minus_stderr = 0.0;
  double ratio = 0.0;  // C(0 <-> minus) / C(0 <-> full boundary)
  bool holds = false;  // p_minus <= ratio + 3 sigma
};

// Quenched check of the exit-probability inequality on one sampled
// environment (fresh environment per call).
ExitInequalityResult exit_inequality_check(const Rational& m, int64_t n, double u, double beta,
                                           uint64_t seed, uint64_t stream, uint64_t walk_reps,
                                           const KernelConfig& cfg);

// Fraction of walks returning to the origin after first reaching e1-level L.
struct TransienceProxyRow {
  int64_t level = 0;
  double return_fraction = 0.0;
  double stderr_ = 0.0;
};
std::vector<TransienceProxyRow> transience_proxy(double u, double beta,
                                                 const std::vector<int64_t>& levels,
                                                 uint64_t reps, uint64_t seed,
                                                 const KernelConfig& cfg);

}  // namespace ri
