#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <unordered_set>
#include <variant>
#include <vector>

#include "ri/common.hpp"
#include "ri/site.hpp"

namespace ri {

// Positive rational, used for the cone/quiver aspect parameter M so that
// membership tests stay in integer arithmetic.
struct Rational {
  int64_t num = 1;
  int64_t den = 1;

  double value() const { return double(num) / double(den); }
  static Rational parse(const std::string& text);
  std::string str() const;
};

struct Bounds {
  Site lo;
  Site hi;
  bool contains(const Site& s) const {
    return s.x1 >= lo.x1 && s.x1 <= hi.x1 && s.x2 >= lo.x2 && s.x2 <= hi.x2 && s.x3 >= lo.x3 &&
           s.x3 <= hi.x3;
  }
  int64_t volume() const {
    return (hi.x1 - lo.x1 + 1) * (hi.x2 - lo.x2 + 1) * (hi.x3 - lo.x3 + 1);
  }
  // L-infinity distance from s to this box (0 if inside).
  int64_t dist_inf(const Site& s) const {
    auto gap = [](int64_t v, int64_t a, int64_t b) {
      if (v < a) return a - v;
      if (v > b) return v - b;
      return int64_t(0);
    };
    int64_t g1 = gap(s.x1, lo.x1, hi.x1);
    int64_t g2 = gap(s.x2, lo.x2, hi.x2);
    int64_t g3 = gap(s.x3, lo.x3, hi.x3);
    return std::max(g1, std::max(g2, g3));
  }
  Bounds inflated(int64_t m) const {
    return {{lo.x1 - m, lo.x2 - m, lo.x3 - m}, {hi.x1 + m, hi.x2 + m, hi.x3 + m}};
  }
};

// ln n with the scale clamp (n below 3 is treated as 3 so that ln n > 1).
double clamped_ln(int64_t n);
// floor(M ln n), floor((3/M) ln n), floor((ln n)^{3/4}); floors taken last.
int64_t floor_m_ln_n(const Rational& m, int64_t n);
int64_t floor_inv_m_3ln_n(const Rational& m, int64_t n);
int64_t floor_ln_n_34(int64_t n);

struct BoxRegion {
  Site center;
  int64_t radius = 0;  // |x_i - c_i| <= radius for all i
};

struct BallRegion {
  Site center;
  int64_t radius = 1;  // ||x - c|| < radius (Euclidean)
};

struct CylinderRegion {
  Site base;
  int64_t l1 = 0;  // -l1 <= (x-base).e1
  int64_t l2 = 0;  // (x-base).e1 <= l2
  int64_t l3 = 0;  // |(x-base).e_i| <= l3, i in {2,3}
};

struct ConeRegion {
  Rational m;
  int64_t n = 1;
};

struct KRegion {
  int64_t n = 1;
  int64_t span = 0;  // enumeration cap: (x.e1) <= span
};

// The quiver is the inner boundary of cyl_x(0, floor(M ln n)+1, floor((ln n)^{3/4})).
struct QuiverRegion {
  Site base;
  Rational m;
  int64_t n = 3;
  int64_t len = 0;  // floor(M ln n) + 1, derived
  int64_t rad = 0;  // floor((ln n)^{3/4}), derived

  QuiverRegion() = default;
  QuiverRegion(Site base_, Rational m_, int64_t n_);
};

struct ExplicitRegion {
  std::vector<Site> sites;  // sorted, unique
  std::shared_ptr<std::unordered_set<Site, SiteHash>> index;

  explicit ExplicitRegion(std::vector<Site> s);
  ExplicitRegion() = default;
};

class Region {
 public:
  using Variant =
      std::variant<BoxRegion, BallRegion, CylinderRegion, ConeRegion, KRegion, QuiverRegion,
                   ExplicitRegion>;

  Region() : v_(BoxRegion{}) {}
  Region(Variant v) : v_(std::move(v)) {}

  static Region box(Site center, int64_t radius) { return Region(BoxRegion{center, radius}); }
  static Region ball(Site center, int64_t radius) { return Region(BallRegion{center, radius}); }
  static Region cylinder(Site base, int64_t l1, int64_t l2, int64_t l3) {
    return Region(CylinderRegion{base, l1, l2, l3});
  }
  static Region cone(Rational m, int64_t n) { return Region(ConeRegion{m, n}); }
  static Region k_region(int64_t n, int64_t span) { return Region(KRegion{n, span}); }
  static Region quiver(Site base, Rational m, int64_t n) {
    return Region(QuiverRegion{base, m, n});
  }
  static Region explicit_set(std::vector<Site> sites) {
    return Region(ExplicitRegion{std::move(sites)});
  }

  bool contains(const Site& s) const;
  Bounds bbox() const;
  int64_t size() const;  // member count

  void for_each_member(const std::function<void(const Site&)>& fn) const;
  // Exact inner boundary: {x in V : exists y ~ x, y not in V}, enumerated
  // from the face structure, never by scanning the bounding box.
  void for_each_boundary(const std::function<void(const Site&)>& fn) const;

  std::vector<Site> members() const;
  std::vector<Site> boundary() const;

  std::string descriptor() const;
  static Region parse(const std::string& text);

  const Variant& raw() const { return v_; }

 private:
  Variant v_;
};

// Negative/positive cone boundary split. The negative boundary is the whole
// x.e1 = -n slab of the cone; the positive one is the rest of the inner
// boundary. The two parts are disjoint and cover the boundary.
void for_each_cone_boundary(const ConeRegion& c,
                            const std::function<void(const Site&, bool is_minus)>& fn);
std::pair<std::vector<Site>, std::vector<Site>> cone_boundaries(const Rational& m, int64_t n);

struct TrapAnchors {
  Site base;            // x
  Site mouth;           // x + floor((3/M) ln n) e1, on the quiver shell
  Site tip;             // mouth + floor(M ln n) e1, strictly inside the shell
  std::vector<Site> segment;  // x .. mouth inclusive
  std::string warning;  // non-empty if M is below the intended range
};

TrapAnchors trap_anchors(const Site& x, const Rational& m, int64_t n);

}  // namespace ri
