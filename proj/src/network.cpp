#include "ri/network.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <queue>
#include <sstream>

#include "ri/csvio.hpp"

namespace ri {

int WeightedGraph::add_vertex(const Site& s) {
  auto it = index_.find(s);
  if (it != index_.end()) return it->second;
  int id = int(vertices_.size());
  vertices_.push_back(s);
  index_[s] = id;
  return id;
}

int WeightedGraph::vertex_id(const Site& s) const {
  auto it = index_.find(s);
  return it == index_.end() ? -1 : it->second;
}

void WeightedGraph::add_edge(const Site& a, const Site& b, double log_w) {
  if (a == b) return;
  int u = add_vertex(a), v = add_vertex(b);
  edges_.push_back(Edge{u, v, log_w});
}

void WeightedGraph::set_source(const std::vector<Site>& s) {
  source_.clear();
  for (const Site& x : s) source_.push_back(add_vertex(x));
}

void WeightedGraph::set_sink(const std::vector<Site>& t) {
  sink_.clear();
  for (const Site& x : t) sink_.push_back(add_vertex(x));
}

double WeightedGraph::log_pi(const Site& s) const {
  int id = vertex_id(s);
  if (id < 0) fail(errc::invalid_input, "log_pi: unknown vertex");
  double mx = -1e300;
  for (const Edge& e : edges_)
    if (e.u == id || e.v == id) mx = std::max(mx, e.log_w);
  if (mx == -1e300) return -1e300;
  double acc = 0.0;
  for (const Edge& e : edges_)
    if (e.u == id || e.v == id) acc += std::exp(e.log_w - mx);
  return mx + std::log(acc);
}

namespace {

struct Csr {
  std::vector<int> head;     // size n+1
  std::vector<int> adj;
  std::vector<double> w;
  std::vector<double> diag;  // pi per vertex
};

Csr build_csr(size_t n, const std::vector<WeightedGraph::Edge>& edges, double shift) {
  Csr c;
  c.head.assign(n + 1, 0);
  for (const auto& e : edges) {
    ++c.head[size_t(e.u) + 1];
    ++c.head[size_t(e.v) + 1];
  }
  for (size_t i = 0; i < n; ++i) c.head[i + 1] += c.head[i];
  c.adj.resize(size_t(c.head[n]));
  c.w.resize(size_t(c.head[n]));
  std::vector<int> cur(c.head.begin(), c.head.end() - 1);
  for (const auto& e : edges) {
    double wv = std::exp(e.log_w - shift);
    c.adj[size_t(cur[size_t(e.u)])] = e.v;
    c.w[size_t(cur[size_t(e.u)]++)] = wv;
    c.adj[size_t(cur[size_t(e.v)])] = e.u;
    c.w[size_t(cur[size_t(e.v)]++)] = wv;
  }
  c.diag.assign(n, 0.0);
  for (size_t i = 0; i < n; ++i)
    for (int k = c.head[i]; k < c.head[i + 1]; ++k) c.diag[i] += c.w[size_t(k)];
  return c;
}

}  // namespace

NetworkSolution effective_conductance(const WeightedGraph& g, const SolveOptions& opt) {
  size_t n = g.vertex_count();
  if (g.source().empty() || g.sink().empty())
    fail(errc::invalid_input, "effective_conductance: empty terminal set");
  std::vector<char> is_src(n, 0), is_snk(n, 0);
  for (int v : g.source()) is_src[size_t(v)] = 1;
  for (int v : g.sink()) {
    if (is_src[size_t(v)]) fail(errc::invalid_input, "terminal sets intersect");
    is_snk[size_t(v)] = 1;
  }

  NetworkSolution sol;
  sol.potential.assign(n, 0.0);
  for (int v : g.source()) sol.potential[size_t(v)] = 1.0;

  // Component of the source set.
  std::vector<char> in_comp(n, 0);
  {
    std::vector<std::vector<int>> nbr(n);
    for (const auto& e : g.edges()) {
      nbr[size_t(e.u)].push_back(e.v);
      nbr[size_t(e.v)].push_back(e.u);
    }
    std::queue<int> q;
    for (int v : g.source())
      if (!in_comp[size_t(v)]) {
        in_comp[size_t(v)] = 1;
        q.push(v);
      }
    while (!q.empty()) {
      int v = q.front();
      q.pop();
      for (int u : nbr[size_t(v)])
        if (!in_comp[size_t(u)]) {
          in_comp[size_t(u)] = 1;
          q.push(u);
        }
    }
  }
  bool touches_sink = false;
  for (int v : g.sink()) touches_sink |= in_comp[size_t(v)] != 0;
  if (!touches_sink) {
    sol.disconnected = true;
    sol.effective_conductance = 0.0;
    sol.log_conductance = -1e300;
    return sol;
  }

  // Rescale by the largest edge weight within the component.
  double shift = -1e300;
  for (const auto& e : g.edges())
    if (in_comp[size_t(e.u)]) shift = std::max(shift, e.log_w);
  std::vector<WeightedGraph::Edge> comp_edges;
  for (const auto& e : g.edges())
    if (in_comp[size_t(e.u)] && in_comp[size_t(e.v)]) comp_edges.push_back(e);
  Csr csr = build_csr(n, comp_edges, shift);

  // Unknowns: component vertices that are not terminals.
  std::vector<int> unknown;
  std::vector<int> slot(n, -1);
  for (size_t i = 0; i < n; ++i)
    if (in_comp[i] && !is_src[i] && !is_snk[i] && csr.diag[i] > 0.0) {
      slot[i] = int(unknown.size());
      unknown.push_back(int(i));
    }

  size_t m = unknown.size();
  std::vector<double> x(m, 0.0), b(m, 0.0);
  for (size_t r = 0; r < m; ++r) {
    int i = unknown[r];
    for (int k = csr.head[size_t(i)]; k < csr.head[size_t(i) + 1]; ++k)
      if (is_src[size_t(csr.adj[size_t(k)])]) b[r] += csr.w[size_t(k)];
  }

  auto apply = [&](const std::vector<double>& v, std::vector<double>& out) {
    for (size_t r = 0; r < m; ++r) {
      int i = unknown[r];
      double acc = csr.diag[size_t(i)] * v[r];
      for (int k = csr.head[size_t(i)]; k < csr.head[size_t(i) + 1]; ++k) {
        int j = csr.adj[size_t(k)];
        if (slot[size_t(j)] >= 0) acc -= csr.w[size_t(k)] * v[size_t(slot[size_t(j)])];
      }
      out[r] = acc;
    }
  };

  double bnorm = 0.0;
  for (double v : b) bnorm += v * v;
  bnorm = std::sqrt(bnorm);
  int cap = opt.max_iterations > 0 ? opt.max_iterations : int(40 * m + 2000);
  int iter = 0;
  if (m > 0 && bnorm > 0.0) {
    std::vector<double> r(b), z(m), p(m), ap(m);
    for (size_t i = 0; i < m; ++i) z[i] = r[i] / csr.diag[size_t(unknown[i])];
    p = z;
    double rz = 0.0;
    for (size_t i = 0; i < m; ++i) rz += r[i] * z[i];
    double target = opt.tol * bnorm;
    while (iter < cap) {
      double rn = 0.0;
      for (double v : r) rn += v * v;
      if (std::sqrt(rn) <= target) break;
      apply(p, ap);
      double pap = 0.0;
      for (size_t i = 0; i < m; ++i) pap += p[i] * ap[i];
      if (pap <= 0.0) break;
      double alpha = rz / pap;
      for (size_t i = 0; i < m; ++i) {
        x[i] += alpha * p[i];
        r[i] -= alpha * ap[i];
      }
      for (size_t i = 0; i < m; ++i) z[i] = r[i] / csr.diag[size_t(unknown[i])];
      double rz_new = 0.0;
      for (size_t i = 0; i < m; ++i) rz_new += r[i] * z[i];
      double beta = rz_new / rz;
      rz = rz_new;
      for (size_t i = 0; i < m; ++i) p[i] = z[i] + beta * p[i];
      ++iter;
    }
    double rn = 0.0;
    for (double v : r) rn += v * v;
    sol.residual_norm = std::sqrt(rn);
    if (sol.residual_norm > opt.tol * bnorm * 10.0 && iter >= cap)
      fail(errc::non_convergence, "effective_conductance: CG hit the iteration cap");
  }
  sol.iterations = iter;

  for (size_t r = 0; r < m; ++r) sol.potential[size_t(unknown[r])] = x[r];
  for (size_t i = 0; i < n; ++i)
    if (!in_comp[i]) sol.potential[i] = 0.0;

  // Current out of the source set under unit potential difference.
  double current = 0.0;
  for (int s : g.source()) {
    for (int k = csr.head[size_t(s)]; k < csr.head[size_t(s) + 1]; ++k) {
      int j = csr.adj[size_t(k)];
      if (is_src[size_t(j)]) continue;
      current += csr.w[size_t(k)] * (1.0 - sol.potential[size_t(j)]);
    }
  }
  if (current < 0.0) current = 0.0;
  sol.effective_conductance = current * std::exp(shift);
  sol.log_conductance = current > 0.0 ? std::log(current) + shift : -1e300;
  return sol;
}

double escape_probability_formula(const WeightedGraph& g, const Site& a, const Site& b,
                                  const SolveOptions& opt) {
  if (a == b) fail(errc::invalid_input, "escape_probability_formula: a == b");
  if (g.vertex_id(a) < 0 || g.vertex_id(b) < 0)
    fail(errc::invalid_input, "escape_probability_formula: vertex not in graph");
  WeightedGraph h = g;
  h.set_source({a});
  h.set_sink({b});
  NetworkSolution sol = effective_conductance(h, opt);
  if (sol.disconnected) return 0.0;
  double lp = g.log_pi(a);
  double v = std::exp(sol.log_conductance - lp);
  return std::min(v, 1.0);
}

RayleighResult rayleigh_check(const WeightedGraph& g, const RayleighModification& mod,
                              const SolveOptions& opt) {
  RayleighResult out;
  out.before = effective_conductance(g, opt).effective_conductance;

  WeightedGraph h;
  if (mod.kind == RayleighModification::Kind::RemoveEdge) {
    if (mod.edge_index >= g.edges().size())
      fail(errc::invalid_input, "rayleigh_check: edge index out of range");
    for (const Site& s : g.vertices()) h.add_vertex(s);
    for (size_t i = 0; i < g.edges().size(); ++i) {
      if (i == mod.edge_index) continue;
      const auto& e = g.edges()[i];
      h.add_edge(g.vertices()[size_t(e.u)], g.vertices()[size_t(e.v)], e.log_w);
    }
    std::vector<Site> s, t;
    for (int v : g.source()) s.push_back(g.vertices()[size_t(v)]);
    for (int v : g.sink()) t.push_back(g.vertices()[size_t(v)]);
    h.set_source(s);
    h.set_sink(t);
  } else {
    if (mod.merge_set.empty()) fail(errc::invalid_input, "rayleigh_check: empty merge set");
    std::unordered_map<Site, Site, SiteHash> rep;
    Site canon = mod.merge_set.front();
    for (const Site& s : mod.merge_set) rep[s] = canon;
    auto map = [&](const Site& s) {
      auto it = rep.find(s);
      return it == rep.end() ? s : it->second;
    };
    for (const auto& e : g.edges()) {
      Site a = map(g.vertices()[size_t(e.u)]);
      Site b = map(g.vertices()[size_t(e.v)]);
      if (a == b) continue;
      h.add_edge(a, b, e.log_w);
    }
    std::vector<Site> s, t;
    for (int v : g.source()) s.push_back(map(g.vertices()[size_t(v)]));
    for (int v : g.sink()) t.push_back(map(g.vertices()[size_t(v)]));
    std::sort(s.begin(), s.end());
    s.erase(std::unique(s.begin(), s.end()), s.end());
    std::sort(t.begin(), t.end());
    t.erase(std::unique(t.begin(), t.end()), t.end());
    h.set_source(s);
    h.set_sink(t);
  }
  out.after = effective_conductance(h, opt).effective_conductance;

  double tol = 1e-9 * std::max({out.before, out.after, 1.0});
  if (mod.kind == RayleighModification::Kind::RemoveEdge)
    out.pass = out.after <= out.before + tol;
  else
    out.pass = out.after >= out.before - tol;
  return out;
}

PathBound path_conductance_lower_bound(
    const std::vector<Site>& path,
    const std::function<std::optional<double>(const Site&, const Site&)>& log_weight) {
  if (path.size() < 2) fail(errc::invalid_input, "path_conductance_lower_bound: need >= 2 sites");
  // log sum of inverse conductances, stabilized by the largest term.
  std::vector<double> neg_logs;
  for (size_t i = 0; i + 1 < path.size(); ++i) {
    if (!adjacent(path[i], path[i + 1]))
      fail(errc::broken_path, "path_conductance_lower_bound: non-adjacent step");
    auto lw = log_weight(path[i], path[i + 1]);
    if (!lw.has_value()) fail(errc::broken_path, "path_conductance_lower_bound: missing edge");
    neg_logs.push_back(-*lw);
  }
  double mx = *std::max_element(neg_logs.begin(), neg_logs.end());
  double acc = 0.0;
  for (double v : neg_logs) acc += std::exp(v - mx);
  double log_resistance = mx + std::log(acc);
  PathBound out;
  out.log_value = -log_resistance;
  out.value = std::exp(out.log_value);
  return out;
}

SeriesBound resistance_series_bound(double beta, int64_t n_level, int64_t k_trunc) {
  SeriesBound out;
  out.finite = beta > 1.0;
  if (!out.finite) {
    out.bound = std::numeric_limits<double>::infinity();
    return out;
  }
  double x = 1.0 / beta;
  KahanSum partial;
  for (int64_t k = 0; k <= k_trunc; ++k)
    partial.add(double(k) * double(k) * std::pow(x, double(k)));
  double m = double(k_trunc + 1);
  double omx = 1.0 - x;
  double tail = std::pow(x, m) *
                (m * m / omx + (2.0 * m) * x / (omx * omx) + x * (1.0 + x) / (omx * omx * omx));
  out.bound = std::pow(beta, double(n_level) + 1.0) * (partial.value() + tail);
  return out;
}

void WeightedGraph::save(const std::string& path) const {
  std::FILE* f = std::fopen(path.c_str(), "wb");
  if (!f) fail(errc::io_error, "cannot open for write: " + path);
  for (int v : source_) {
    const Site& s = vertices_[size_t(v)];
    std::fprintf(f, "source %lld %lld %lld\n", (long long)s.x1, (long long)s.x2, (long long)s.x3);
  }
  for (int v : sink_) {
    const Site& s = vertices_[size_t(v)];
    std::fprintf(f, "sink %lld %lld %lld\n", (long long)s.x1, (long long)s.x2, (long long)s.x3);
  }
  for (const Edge& e : edges_) {
    const Site& a = vertices_[size_t(e.u)];
    const Site& b = vertices_[size_t(e.v)];
    std::fprintf(f, "%lld %lld %lld %lld %lld %lld %s\n", (long long)a.x1, (long long)a.x2,
                 (long long)a.x3, (long long)b.x1, (long long)b.x2, (long long)b.x3,
                 format_double(e.log_w).c_str());
  }
  std::fclose(f);
}

WeightedGraph WeightedGraph::load(const std::string& path) {
  std::FILE* f = std::fopen(path.c_str(), "rb");
  if (!f) fail(errc::io_error, "cannot open: " + path);
  WeightedGraph g;
  std::vector<Site> src, snk;
  char line[512];
  while (std::fgets(line, sizeof(line), f)) {
    if (line[0] == '#' || line[0] == '\n') continue;
    std::istringstream is(line);
    std::string first;
    is >> first;
    if (first == "source" || first == "sink") {
      Site s;
      if (!(is >> s.x1 >> s.x2 >> s.x3)) {
        std::fclose(f);
        fail(errc::io_error, "bad terminal line in " + path);
      }
      (first == "source" ? src : snk).push_back(s);
    } else {
      Site a, b;
      double lw;
      a.x1 = std::stoll(first);
      if (!(is >> a.x2 >> a.x3 >> b.x1 >> b.x2 >> b.x3 >> lw)) {
        std::fclose(f);
        fail(errc::io_error, "bad edge line in " + path);
      }
      g.add_edge(a, b, lw);
    }
  }
  std::fclose(f);
  g.set_source(src);
  g.set_sink(snk);
  return g;
}

}  // namespace ri
