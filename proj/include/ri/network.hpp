#pragma once

#include <functional>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "ri/common.hpp"
#include "ri/site.hpp"

namespace ri {

// Finite weighted graph for Dirichlet solves. Edge weights are carried in
// log space; conductances spanning beta^{+-n} are rescaled per component
// before solving (factor out the largest exponent, restore afterwards).
class WeightedGraph {
 public:
  struct Edge {
    int u, v;
    double log_w;
  };

  int add_vertex(const Site& s);
  int vertex_id(const Site& s) const;  // -1 if absent
  void add_edge(const Site& a, const Site& b, double log_w);
  void set_source(const std::vector<Site>& s);
  void set_sink(const std::vector<Site>& t);

  size_t vertex_count() const { return vertices_.size(); }
  const std::vector<Site>& vertices() const { return vertices_; }
  const std::vector<Edge>& edges() const { return edges_; }
  const std::vector<int>& source() const { return source_; }
  const std::vector<int>& sink() const { return sink_; }

  // log of pi(x) = sum of incident edge weights.
  double log_pi(const Site& s) const;

  void save(const std::string& path) const;
  static WeightedGraph load(const std::string& path);

 private:
  std::vector<Site> vertices_;
  std::unordered_map<Site, int, SiteHash> index_;
  std::vector<Edge> edges_;
  std::vector<int> source_, sink_;
};

struct NetworkSolution {
  std::vector<double> potential;      // per vertex; 1 on S, 0 on T
  double effective_conductance = 0.0;
  double log_conductance = 0.0;       // log of the same, safe for huge spans
  double residual_norm = 0.0;
  int iterations = 0;
  bool disconnected = false;
};

struct SolveOptions {
  double tol = 1e-10;
  int max_iterations = 0;  // 0 = automatic cap
};

// Dirichlet solve by diagonally preconditioned conjugate gradients on the
// source-grounded reduced system.
NetworkSolution effective_conductance(const WeightedGraph& g, const SolveOptions& opt = {});

// C(a<->b)/pi(a): probability that the walk restricted to g started at a
// reaches b before returning to a.
double escape_probability_formula(const WeightedGraph& g, const Site& a, const Site& b,
                                  const SolveOptions& opt = {});

struct RayleighModification {
  enum class Kind { RemoveEdge, MergeVertices } kind;
  size_t edge_index = 0;           // for RemoveEdge
  std::vector<Site> merge_set;     // for MergeVertices
};

struct RayleighResult {
  double before = 0.0;
  double after = 0.0;
  bool pass = false;
};

RayleighResult rayleigh_check(const WeightedGraph& g, const RayleighModification& mod,
                              const SolveOptions& opt = {});

// Series conductance of a path, (sum 1/c_i)^{-1}, evaluated in log space.
// log_weight(a, b) returns the log conductance of the edge or nothing if the
// edge is absent/zero (BrokenPath).
struct PathBound {
  double value = 0.0;
  double log_value = 0.0;
};
PathBound path_conductance_lower_bound(
    const std::vector<Site>& path,
    const std::function<std::optional<double>(const Site&, const Site&)>& log_weight);

// Truncated series sum_{k<=K} k^2 beta^{N-k+1} plus the closed-form tail of
// the full geometric-polynomial series.
struct SeriesBound {
  double bound = 0.0;
  bool finite = false;
};
SeriesBound resistance_series_bound(double beta, int64_t n_level, int64_t k_trunc);

}  // namespace ri
