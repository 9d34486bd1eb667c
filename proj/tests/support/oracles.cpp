#include "support/oracles.hpp"

#include <algorithm>
#include <cmath>

#include "ri/green.hpp"

namespace ri::oracle {

namespace {

// Partial-pivot Gaussian elimination; a is row-major n x n, b length n.
std::vector<double> solve_dense(std::vector<double> a, std::vector<double> b) {
  size_t n = b.size();
  for (size_t col = 0; col < n; ++col) {
    size_t piv = col;
    for (size_t r = col + 1; r < n; ++r)
      if (std::fabs(a[r * n + col]) > std::fabs(a[piv * n + col])) piv = r;
    if (piv != col) {
      for (size_t c = 0; c < n; ++c) std::swap(a[col * n + c], a[piv * n + c]);
      std::swap(b[col], b[piv]);
    }
    double d = a[col * n + col];
    if (d == 0.0) continue;
    for (size_t r = col + 1; r < n; ++r) {
      double f = a[r * n + col] / d;
      if (f == 0.0) continue;
      for (size_t c = col; c < n; ++c) a[r * n + c] -= f * a[col * n + c];
      b[r] -= f * b[col];
    }
  }
  std::vector<double> x(n, 0.0);
  for (size_t r = n; r-- > 0;) {
    double acc = b[r];
    for (size_t c = r + 1; c < n; ++c) acc -= a[r * n + c] * x[c];
    x[r] = a[r * n + r] != 0.0 ? acc / a[r * n + r] : 0.0;
  }
  return x;
}

}  // namespace

double dense_effective_conductance(const WeightedGraph& g) {
  size_t n = g.vertex_count();
  std::vector<char> is_src(n, 0), is_snk(n, 0);
  for (int v : g.source()) is_src[size_t(v)] = 1;
  for (int v : g.sink()) is_snk[size_t(v)] = 1;
  std::vector<int> slot(n, -1);
  std::vector<int> unknown;
  for (size_t i = 0; i < n; ++i)
    if (!is_src[i] && !is_snk[i]) {
      slot[i] = int(unknown.size());
      unknown.push_back(int(i));
    }
  size_t m = unknown.size();
  std::vector<double> lap(m * m, 0.0), rhs(m, 0.0);
  double shift = -1e300;
  for (const auto& e : g.edges()) shift = std::max(shift, e.log_w);
  auto weight = [&](const WeightedGraph::Edge& e) { return std::exp(e.log_w - shift); };
  for (const auto& e : g.edges()) {
    double w = weight(e);
    int iu = slot[size_t(e.u)], iv = slot[size_t(e.v)];
    if (iu >= 0) lap[size_t(iu) * m + size_t(iu)] += w;
    if (iv >= 0) lap[size_t(iv) * m + size_t(iv)] += w;
    if (iu >= 0 && iv >= 0) {
      lap[size_t(iu) * m + size_t(iv)] -= w;
      lap[size_t(iv) * m + size_t(iu)] -= w;
    }
    if (iu >= 0 && is_src[size_t(e.v)]) rhs[size_t(iu)] += w;
    if (iv >= 0 && is_src[size_t(e.u)]) rhs[size_t(iv)] += w;
  }
  std::vector<double> phi = solve_dense(lap, rhs);
  double current = 0.0;
  for (const auto& e : g.edges()) {
    bool us = is_src[size_t(e.u)], vs = is_src[size_t(e.v)];
    if (us == vs) continue;
    size_t other = us ? size_t(e.v) : size_t(e.u);
    double pot = is_snk[other] ? 0.0 : (slot[other] >= 0 ? phi[size_t(slot[other])] : 0.0);
    current += weight(e) * (1.0 - pot);
  }
  return current * std::exp(shift);
}

ExactCapacity exact_capacity(const std::vector<Site>& sites) {
  ExactCapacity out;
  out.sites = sites;
  std::sort(out.sites.begin(), out.sites.end());
  size_t n = out.sites.size();
  std::vector<double> a(n * n), b(n, 1.0);
  for (size_t i = 0; i < n; ++i)
    for (size_t j = 0; j < n; ++j) a[i * n + j] = green_function(out.sites[i], out.sites[j]);
  out.escape = solve_dense(std::move(a), std::move(b));
  for (double v : out.escape) out.capacity += v;
  return out;
}

double birth_death_mean_exit(int64_t length, double p_right, int64_t start) {
  // E_i = 1 + p E_{i+1} + (1-p) E_{i-1}, E_L = 0, reflecting at 0.
  size_t n = size_t(length);  // unknowns E_0 .. E_{L-1}
  std::vector<double> a(n * n, 0.0), b(n, 1.0);
  for (size_t i = 0; i < n; ++i) {
    a[i * n + i] = 1.0;
    if (i == 0) {
      if (n > 1) a[0 * n + 1] = -1.0;  // reflecting: moves right surely
    } else {
      if (i + 1 < n) a[i * n + (i + 1)] = -p_right;
      a[i * n + (i - 1)] = -(1.0 - p_right);
    }
  }
  std::vector<double> e = solve_dense(std::move(a), std::move(b));
  return e[size_t(start)];
}

std::vector<Site> brute_force_boundary(const Region& r) {
  std::vector<Site> out;
  Bounds b = r.bbox();
  for (int64_t i = b.lo.x1; i <= b.hi.x1; ++i)
    for (int64_t j = b.lo.x2; j <= b.hi.x2; ++j)
      for (int64_t k = b.lo.x3; k <= b.hi.x3; ++k) {
        Site s{i, j, k};
        if (!r.contains(s)) continue;
        for (int d = 0; d < 6; ++d)
          if (!r.contains(neighbor(s, d))) {
            out.push_back(s);
            break;
          }
      }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace ri::oracle
