#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>

#include "ri/region.hpp"
#include "ri/rng.hpp"
#include "support/oracles.hpp"

using namespace ri;

TEST_CASE("cone membership examples") {
  Region c10 = Region::cone(Rational{10, 1}, 5);
  CHECK(c10.contains(Site{5, 0, 0}));
  CHECK_FALSE(c10.contains(Site{-6, 0, 0}));
  Region c1 = Region::cone(Rational{1, 1}, 4);
  CHECK_FALSE(c1.contains(Site{2, 3, 0}));  // needs 3 <= 1*(4-2)
  CHECK(c1.contains(Site{2, 2, 0}));
}

TEST_CASE("cone boundaries: face example and partition") {
  auto [minus, plus] = cone_boundaries(Rational{1, 1}, 1);
  CHECK(minus.size() == 25);
  for (const Site& s : minus) {
    CHECK(s.x1 == -1);
    CHECK(std::llabs(s.x2) <= 2);
    CHECK(std::llabs(s.x3) <= 2);
  }
  // disjoint and the union is the inner boundary
  std::vector<Site> all(minus);
  all.insert(all.end(), plus.begin(), plus.end());
  std::sort(all.begin(), all.end());
  CHECK(std::adjacent_find(all.begin(), all.end()) == all.end());
  auto brute = oracle::brute_force_boundary(Region::cone(Rational{1, 1}, 1));
  CHECK(all == brute);
}

TEST_CASE("cone boundary matches brute force at M=10 n=8") {
  Region cone = Region::cone(Rational{10, 1}, 8);
  auto lazy = cone.boundary();
  std::sort(lazy.begin(), lazy.end());
  CHECK(lazy == oracle::brute_force_boundary(cone));
}

TEST_CASE("boundary enumeration equals brute force for every kind") {
  std::vector<Region> regions = {
      Region::box(Site{1, -2, 3}, 0),
      Region::box(Site{1, -2, 3}, 4),
      Region::ball(Site{0, 0, 0}, 1),
      Region::ball(Site{2, 1, 0}, 6),
      Region::cylinder(Site{0, 0, 0}, 2, 5, 3),
      Region::cylinder(Site{1, 1, 1}, 0, 7, 0),
      Region::cone(Rational{1, 2}, 6),
      Region::cone(Rational{5, 2}, 4),
      Region::k_region(3, 6),
      Region::k_region(1, 4),
      Region::quiver(Site{0, 0, 0}, Rational{3, 1}, 20),
      Region::explicit_set({Site{0, 0, 0}, Site{1, 0, 0}, Site{1, 1, 0}, Site{5, 5, 5}}),
  };
  for (const Region& r : regions) {
    CAPTURE(r.descriptor());
    auto lazy = r.boundary();
    std::sort(lazy.begin(), lazy.end());
    lazy.erase(std::unique(lazy.begin(), lazy.end()), lazy.end());
    CHECK(lazy == oracle::brute_force_boundary(r));
  }
}

TEST_CASE("member enumeration matches contains and size") {
  std::vector<Region> regions = {
      Region::ball(Site{0, 0, 0}, 5),
      Region::cone(Rational{3, 2}, 5),
      Region::k_region(2, 5),
      Region::quiver(Site{1, 0, 0}, Rational{3, 1}, 16),
  };
  for (const Region& r : regions) {
    CAPTURE(r.descriptor());
    auto members = r.members();
    std::sort(members.begin(), members.end());
    CHECK(std::adjacent_find(members.begin(), members.end()) == members.end());
    CHECK(int64_t(members.size()) == r.size());
    for (const Site& s : members) CHECK(r.contains(s));
    Bounds b = r.bbox();
    int64_t count = 0;
    for (int64_t i = b.lo.x1; i <= b.hi.x1; ++i)
      for (int64_t j = b.lo.x2; j <= b.hi.x2; ++j)
        for (int64_t k = b.lo.x3; k <= b.hi.x3; ++k)
          if (r.contains(Site{i, j, k})) ++count;
    CHECK(count == r.size());
  }
}

TEST_CASE("cone nesting") {
  RngStream rng(5, 0);
  for (int t = 0; t < 200; ++t) {
    Rational m{int64_t(1 + rng.below(20)), int64_t(1 + rng.below(4))};
    int64_t n1 = 1 + rng.below(10);
    int64_t n2 = n1 + rng.below(10);
    Site s{int64_t(rng.below(2 * uint32_t(n1) + 1)) - n1, int64_t(rng.below(40)) - 20,
           int64_t(rng.below(40)) - 20};
    if (Region::cone(m, n1).contains(s)) CHECK(Region::cone(m, n2).contains(s));
  }
}

TEST_CASE("quiver equals the boundary of its cylinder") {
  Rational m{10, 1};
  int64_t n = 150;
  QuiverRegion q(Site{2, 1, 0}, m, n);
  Region cyl = Region::cylinder(q.base, 0, q.len, q.rad);
  auto shell = cyl.boundary();
  std::sort(shell.begin(), shell.end());
  auto members = Region(q).members();
  std::sort(members.begin(), members.end());
  CHECK(shell == members);
}

TEST_CASE("quiver site count scaling") {
  // |Q| / (M (ln n)^{7/4}) stays within constants fixed at n = e^8.
  Rational m{10, 1};
  auto ratio = [&](int64_t n) {
    Region q = Region::quiver(Site{0, 0, 0}, m, n);
    return double(q.size()) / (m.value() * std::pow(std::log(double(n)), 1.75));
  };
  double r8 = ratio(2981);  // e^8
  CHECK(r8 > 0.5);
  CHECK(r8 < 12.0);
  for (int64_t n : {1000, 8000, 22000}) {
    CHECK(ratio(n) > 0.5 * r8);
    CHECK(ratio(n) < 2.0 * r8);
  }
}

TEST_CASE("trap anchors floor arithmetic example") {
  // ln n = 10 at M = 10: mouth at +3 e1, tip at +103 e1.
  int64_t n = 22026;  // floor(e^10)
  TrapAnchors t = trap_anchors(Site{0, 0, 0}, Rational{10, 1}, n);
  CHECK(t.mouth == Site{3, 0, 0});
  CHECK(t.tip == Site{103, 0, 0});
  CHECK(t.segment.size() == 4);
  CHECK(t.segment.front() == Site{0, 0, 0});
  CHECK(t.segment.back() == t.mouth);
  CHECK(t.warning.empty());
}

TEST_CASE("trap anchors invariants on random parameters") {
  RngStream rng(9, 0);
  for (int t = 0; t < 20; ++t) {
    Rational m{int64_t(3 + rng.below(18)), 1};
    int64_t n = 13 + int64_t(rng.below(30000));
    TrapAnchors a = trap_anchors(Site{int64_t(rng.below(9)) - 4, 0, 0}, m, n);
    QuiverRegion q(a.mouth, m, n);
    CHECK(Region(q).contains(a.mouth));
    // tip strictly inside the shell cylinder
    Site d = a.tip - q.base;
    CHECK(d.x1 > 0);
    CHECK(d.x1 < q.len);
    CHECK(std::max(std::llabs(d.x2), std::llabs(d.x3)) < q.rad);
    CHECK_FALSE(Region(q).contains(a.tip));
  }
}

TEST_CASE("degenerate scales are rejected") {
  CHECK_THROWS_AS(trap_anchors(Site{0, 0, 0}, Rational{10, 1}, 12), Error);
  CHECK_THROWS_AS(Region::quiver(Site{0, 0, 0}, Rational{10, 1}, 5), Error);
  try {
    trap_anchors(Site{0, 0, 0}, Rational{10, 1}, 3);
  } catch (const Error& e) {
    CHECK(e.code() == errc::degenerate_scale);
  }
}

TEST_CASE("m below ten warns") {
  TrapAnchors t = trap_anchors(Site{0, 0, 0}, Rational{3, 1}, 16);
  CHECK_FALSE(t.warning.empty());
}

TEST_CASE("region parse round trip") {
  for (const char* text :
       {"box 0 0 0 5", "ball 1 2 3 4", "cylinder 0 0 0 2 9 3", "cone 10 8", "cone 5/2 4",
        "kregion 3 12", "quiver 0 0 0 3 16", "explicit 0,0,0 1,0,0"}) {
    Region r = Region::parse(text);
    Region r2 = Region::parse(r.descriptor());
    CHECK(r2.descriptor() == r.descriptor());
    CHECK(r2.size() == r.size());
  }
  CHECK_THROWS_AS(Region::parse("hexagon 1 2"), Error);
}

TEST_CASE("bounds distance helper") {
  Bounds b{{0, 0, 0}, {4, 4, 4}};
  CHECK(b.dist_inf(Site{2, 2, 2}) == 0);
  CHECK(b.dist_inf(Site{-3, 2, 2}) == 3);
  CHECK(b.dist_inf(Site{7, -1, 10}) == 6);
}
