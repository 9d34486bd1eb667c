#include "ri/green.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <mutex>

namespace ri {

std::vector<double> scaled_bessel_i(double z, int kmax) {
  std::vector<double> out(size_t(kmax) + 1, 0.0);
  if (z < 1e-14) {
    out[0] = 1.0;
    return out;
  }
  int start = kmax + int(9.1 * std::sqrt(z)) + 40;
  double fnext = 0.0;
  double fcur = 1e-250;
  double sum = 2.0 * fcur;  // weight 2 for every order >= 1
  for (int k = start; k >= 1; --k) {
    double fprev = fnext + (2.0 * double(k) / z) * fcur;
    fnext = fcur;
    fcur = fprev;
    if (k - 1 <= kmax) out[size_t(k - 1)] = fcur;
    sum += (k - 1 == 0) ? fcur : 2.0 * fcur;
    if (fcur > 1e260) {
      fcur *= 1e-260;
      fnext *= 1e-260;
      sum *= 1e-260;
      for (double& v : out) v *= 1e-260;
    }
  }
  for (double& v : out) v /= sum;
  return out;
}

namespace {

// Gauss-Legendre nodes/weights on [-1,1] by Newton iteration.
void gauss_legendre(int n, std::vector<double>& x, std::vector<double>& w) {
  x.assign(size_t(n), 0.0);
  w.assign(size_t(n), 0.0);
  for (int i = 0; i < (n + 1) / 2; ++i) {
    double t = std::cos(3.14159265358979323846 * (double(i) + 0.75) / (double(n) + 0.5));
    double pp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = 0.0;
      for (int j = 0; j < n; ++j) {
        double p2 = p1;
        p1 = p0;
        p0 = ((2.0 * j + 1.0) * t * p1 - double(j) * p2) / double(j + 1);
      }
      pp = double(n) * (t * p0 - p1) / (t * t - 1.0);
      double dt = p0 / pp;
      t -= dt;
      if (std::fabs(dt) < 1e-15) break;
    }
    x[size_t(i)] = -t;
    x[size_t(n - 1 - i)] = t;
    w[size_t(i)] = 2.0 / ((1.0 - t * t) * pp * pp);
    w[size_t(n - 1 - i)] = w[size_t(i)];
  }
}

// Closed-form tail of the integral from S to infinity, using the asymptotic
// series of the scaled Bessel product to second order.
double tail_integral(double s0, int64_t rho_sq) {
  double a1 = 4.0 * double(rho_sq) - 3.0;  // sum of (4 x_i^2 - 1)
  // a2: sum over pairs of (mu_i-1)(mu_j-1) plus sum of (mu_i-1)(mu_i-9)/2
  // depends on the individual coordinates only through symmetric functions;
  // the (mu_i-1) products are bounded by a1^2, so fold them conservatively:
  // we keep only the first-order term and rely on s0 being large.
  double c0 = std::pow(3.0 / (2.0 * 3.14159265358979323846), 1.5);
  double t = c0 * (2.0 / std::sqrt(s0) - (3.0 * a1 / 8.0) * (2.0 / 3.0) * std::pow(s0, -1.5));
  return t;
}

}  // namespace

GreenTable GreenTable::generate(int64_t radius) {
  GreenTable t;
  t.radius_ = radius;
  int64_t side = 2 * radius + 1;
  t.cube_.assign(size_t(side * side * side), 0.0);

  // Quadrature nodes: panel [0,1], then geometric panels up to 2^21.
  constexpr int kNodesPerPanel = 32;
  std::vector<double> gx, gw;
  gauss_legendre(kNodesPerPanel, gx, gw);
  std::vector<std::pair<double, double>> nodes;  // (s, weight)
  double lo = 0.0, hi = 1.0;
  double s_max = double(1 << 21);
  while (lo < s_max) {
    for (int i = 0; i < kNodesPerPanel; ++i) {
      double mid = 0.5 * (hi + lo), half = 0.5 * (hi - lo);
      nodes.emplace_back(mid + half * gx[size_t(i)], half * gw[size_t(i)]);
    }
    lo = hi;
    hi = std::min(hi * 2.0, s_max);
    if (lo >= s_max) break;
  }

  int kmax = int(radius);
  std::vector<std::vector<double>> ive(nodes.size());
  for (size_t j = 0; j < nodes.size(); ++j) ive[j] = scaled_bessel_i(nodes[j].first / 3.0, kmax);

  auto fill = [&](int64_t a, int64_t b, int64_t c, double val) {
    std::array<int64_t, 3> abs{a, b, c};
    std::array<int64_t, 3> perm{0, 1, 2};
    std::sort(perm.begin(), perm.end());
    do {
      int64_t v1 = abs[size_t(perm[0])], v2 = abs[size_t(perm[1])], v3 = abs[size_t(perm[2])];
      for (int s1 = -1; s1 <= 1; s1 += 2)
        for (int s2 = -1; s2 <= 1; s2 += 2)
          for (int s3 = -1; s3 <= 1; s3 += 2) {
            int64_t x1 = s1 * v1, x2 = s2 * v2, x3 = s3 * v3;
            int64_t i = (x1 + radius) * side * side + (x2 + radius) * side + (x3 + radius);
            t.cube_[size_t(i)] = val;
          }
    } while (std::next_permutation(perm.begin(), perm.end()));
  };

  for (int64_t a = 0; a <= radius; ++a)
    for (int64_t b = 0; b <= a; ++b)
      for (int64_t c = 0; c <= b; ++c) {
        int64_t rho_sq = a * a + b * b + c * c;
        if (rho_sq > radius * radius) continue;
        KahanSum acc;
        for (size_t j = 0; j < nodes.size(); ++j) {
          acc.add(nodes[j].second * ive[j][size_t(a)] * ive[j][size_t(b)] * ive[j][size_t(c)]);
        }
        fill(a, b, c, acc.value() + tail_integral(s_max, rho_sq));
      }
  return t;
}

namespace {
constexpr char kMagic[] = "RIWALK-GREEN-1";
}

void GreenTable::save(const std::string& path) const {
  static_assert(std::endian::native == std::endian::little, "table format is little-endian");
  std::FILE* f = std::fopen(path.c_str(), "wb");
  if (!f) fail(errc::io_error, "cannot open for write: " + path);
  int64_t count = 0;
  for (int64_t a = -radius_; a <= radius_; ++a)
    for (int64_t b = -radius_; b <= radius_; ++b)
      for (int64_t c = -radius_; c <= radius_; ++c)
        if (a * a + b * b + c * c <= radius_ * radius_) ++count;
  std::fprintf(f, "%s\nradius %lld\nentries %lld\n", kMagic, (long long)radius_,
               (long long)count);
  // Little-endian doubles, lexicographic order over in-ball sites.
  for (int64_t a = -radius_; a <= radius_; ++a)
    for (int64_t b = -radius_; b <= radius_; ++b)
      for (int64_t c = -radius_; c <= radius_; ++c)
        if (a * a + b * b + c * c <= radius_ * radius_) {
          double v = at(Site{a, b, c});
          std::fwrite(&v, sizeof(double), 1, f);
        }
  std::fclose(f);
}

GreenTable GreenTable::load(const std::string& path) {
  std::FILE* f = std::fopen(path.c_str(), "rb");
  if (!f) fail(errc::io_error, "cannot open: " + path);
  char magic[64];
  long long radius = 0, entries = 0;
  if (std::fscanf(f, "%63s\nradius %lld\nentries %lld", magic, &radius, &entries) != 3 ||
      std::strcmp(magic, kMagic) != 0) {
    std::fclose(f);
    fail(errc::io_error, "bad green table header in " + path);
  }
  std::fgetc(f);  // trailing newline
  GreenTable t;
  t.radius_ = radius;
  int64_t side = 2 * radius + 1;
  t.cube_.assign(size_t(side * side * side), 0.0);
  long long seen = 0;
  for (int64_t a = -radius; a <= radius; ++a)
    for (int64_t b = -radius; b <= radius; ++b)
      for (int64_t c = -radius; c <= radius; ++c)
        if (a * a + b * b + c * c <= radius * radius) {
          double v;
          if (std::fread(&v, sizeof(double), 1, f) != 1) {
            std::fclose(f);
            fail(errc::io_error, "truncated green table " + path);
          }
          int64_t i = (a + radius) * side * side + (b + radius) * side + (c + radius);
          t.cube_[size_t(i)] = v;
          ++seen;
        }
  std::fclose(f);
  if (seen != entries) fail(errc::io_error, "green table entry count mismatch");
  return t;
}

const GreenTable& green_table() {
  static GreenTable table = GreenTable::generate();
  return table;
}

double cap_single_site() {
  static double v = 1.0 / green_table().at(Site{0, 0, 0});
  return v;
}

}  // namespace ri
