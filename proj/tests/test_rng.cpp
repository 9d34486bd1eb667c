#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <map>

#include "ri/rng.hpp"

using namespace ri;

TEST_CASE("philox known answers") {
  uint32_t out[4];
  // Reference vectors for philox4x32-10.
  Philox4x32::block(0, 0, 0, out);
  CHECK(out[0] == 0x6627e8d5u);
  CHECK(out[1] == 0xe169c58du);
  CHECK(out[2] == 0xbc57ac4cu);
  CHECK(out[3] == 0x9b00dbd8u);

  Philox4x32::block(~uint64_t(0), ~uint64_t(0), ~uint64_t(0), out);
  CHECK(out[0] == 0x408f276du);
  CHECK(out[1] == 0x41c83b0eu);
  CHECK(out[2] == 0xa20bc7c6u);
  CHECK(out[3] == 0x6d5451fdu);
}

TEST_CASE("streams are reproducible and distinct") {
  RngStream a(42, 7), b(42, 7), c(42, 8);
  bool all_equal = true, any_equal_across = true;
  for (int i = 0; i < 1000; ++i) {
    uint64_t va = a.u64(), vb = b.u64(), vc = c.u64();
    all_equal = all_equal && (va == vb);
    any_equal_across = any_equal_across && (va == vc);
  }
  CHECK(all_equal);
  CHECK_FALSE(any_equal_across);
}

TEST_CASE("uniform moments") {
  RngStream rng(1, 0);
  double sum = 0, sumsq = 0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    double v = rng.uniform();
    CHECK(v > 0.0);
    CHECK(v < 1.0);
    sum += v;
    sumsq += v * v;
  }
  double mean = sum / n;
  double var = sumsq / n - mean * mean;
  CHECK(std::fabs(mean - 0.5) < 4.0 / std::sqrt(12.0 * n));
  CHECK(std::fabs(var - 1.0 / 12.0) < 0.002);
}

TEST_CASE("below is unbiased over small ranges") {
  RngStream rng(3, 0);
  int counts[6] = {0};
  const int n = 600000;
  for (int i = 0; i < n; ++i) counts[rng.below(6)]++;
  for (int d = 0; d < 6; ++d) {
    double p = double(counts[d]) / n;
    CHECK(std::fabs(p - 1.0 / 6.0) < 4.0 * std::sqrt((1.0 / 6.0) * (5.0 / 6.0) / n));
  }
}

TEST_CASE("stirling correction table matches lgamma") {
  for (int k = 0; k < 40; ++k) {
    double exact = std::lgamma(double(k) + 1.0) -
                   ((double(k) + 0.5) * std::log(double(k) + 1.0) - (double(k) + 1.0) +
                    0.5 * std::log(2.0 * 3.14159265358979323846));
    CHECK(detail::binom_fc(k) == doctest::Approx(exact).epsilon(1e-9));
  }
}

TEST_CASE("binomial sampler matches exact pmf (chi-square)") {
  struct Case {
    int64_t n;
    double p;
  } cases[] = {{40, 0.5}, {100, 0.3}, {1000, 0.5}, {50, 0.02}};
  for (const auto& c : cases) {
    RngStream rng(11, uint64_t(c.n));
    const int draws = 200000;
    std::map<int64_t, int> hist;
    for (int i = 0; i < draws; ++i) hist[sample_binomial(rng, c.n, c.p)]++;
    // exact pmf by recursion from the mode
    std::vector<double> pmf(size_t(c.n) + 1, 0.0);
    double logp0 = double(c.n) * std::log1p(-c.p);
    pmf[0] = std::exp(logp0);
    for (int64_t k = 1; k <= c.n; ++k)
      pmf[size_t(k)] =
          pmf[size_t(k - 1)] * (double(c.n - k + 1) / double(k)) * (c.p / (1.0 - c.p));
    double chi2 = 0.0;
    int dof = 0;
    for (int64_t k = 0; k <= c.n; ++k) {
      double expct = pmf[size_t(k)] * draws;
      if (expct < 10.0) continue;
      auto it = hist.find(k);
      double got = it == hist.end() ? 0.0 : double(it->second);
      chi2 += (got - expct) * (got - expct) / expct;
      ++dof;
    }
    // generous 5-sigma-ish bound for a chi-square with dof bins
    CHECK(chi2 < dof + 6.0 * std::sqrt(2.0 * dof) + 20.0);
  }
}

TEST_CASE("binomial moments at large n") {
  RngStream rng(13, 1);
  const int64_t n = int64_t(1) << 40;
  const double p = 1.0 / 3.0;
  const int draws = 20000;
  double sum = 0, sumsq = 0;
  for (int i = 0; i < draws; ++i) {
    double v = double(sample_binomial(rng, n, p));
    sum += v;
    sumsq += v * v;
  }
  double mean = sum / draws;
  double var = sumsq / draws - mean * mean;
  double m_true = double(n) * p;
  double v_true = double(n) * p * (1 - p);
  CHECK(std::fabs(mean - m_true) < 5.0 * std::sqrt(v_true / draws));
  CHECK(std::fabs(var / v_true - 1.0) < 0.05);
}

TEST_CASE("poisson sampler moments") {
  for (double lam : {0.3, 4.0, 50.0, 3000.0}) {
    RngStream rng(17, uint64_t(lam * 10));
    const int draws = 100000;
    double sum = 0, sumsq = 0;
    for (int i = 0; i < draws; ++i) {
      double v = double(sample_poisson(rng, lam));
      sum += v;
      sumsq += v * v;
    }
    double mean = sum / draws;
    double var = sumsq / draws - mean * mean;
    CHECK(std::fabs(mean - lam) < 5.0 * std::sqrt(lam / draws) + 1e-9);
    CHECK(std::fabs(var / lam - 1.0) < 0.06);
  }
}

TEST_CASE("positive poisson is at least one with the right mean") {
  double lam = 0.7;
  RngStream rng(19, 0);
  const int draws = 200000;
  double sum = 0;
  for (int i = 0; i < draws; ++i) {
    int64_t v = sample_poisson_positive(rng, lam);
    REQUIRE(v >= 1);
    sum += double(v);
  }
  double expected = lam / (1.0 - std::exp(-lam));
  CHECK(std::fabs(sum / draws - expected) < 0.01);
}
