#include "ri/region.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <sstream>

namespace ri {

Rational Rational::parse(const std::string& text) {
  auto bad = [&] { fail(errc::config_invalid, "bad rational: " + text); };
  Rational r;
  auto slash = text.find('/');
  auto dot = text.find('.');
  try {
    if (slash != std::string::npos) {
      r.num = std::stoll(text.substr(0, slash));
      r.den = std::stoll(text.substr(slash + 1));
    } else if (dot != std::string::npos) {
      std::string frac = text.substr(dot + 1);
      if (frac.size() > 9) frac = frac.substr(0, 9);
      int64_t scale = 1;
      for (size_t i = 0; i < frac.size(); ++i) scale *= 10;
      r.num = std::stoll(text.substr(0, dot)) * scale + (frac.empty() ? 0 : std::stoll(frac));
      r.den = scale;
    } else {
      r.num = std::stoll(text);
      r.den = 1;
    }
  } catch (const std::exception&) {
    bad();
  }
  if (r.num <= 0 || r.den <= 0) bad();
  int64_t a = r.num, b = r.den;
  while (b) {
    int64_t t = a % b;
    a = b;
    b = t;
  }
  r.num /= a;
  r.den /= a;
  return r;
}

std::string Rational::str() const {
  if (den == 1) return std::to_string(num);
  return std::to_string(num) + "/" + std::to_string(den);
}

double clamped_ln(int64_t n) { return std::log(double(std::max<int64_t>(n, 3))); }

int64_t floor_m_ln_n(const Rational& m, int64_t n) {
  return int64_t(std::floor(m.value() * clamped_ln(n)));
}
int64_t floor_inv_m_3ln_n(const Rational& m, int64_t n) {
  return int64_t(std::floor(3.0 / m.value() * clamped_ln(n)));
}
int64_t floor_ln_n_34(int64_t n) {
  return int64_t(std::floor(std::pow(clamped_ln(n), 0.75)));
}

QuiverRegion::QuiverRegion(Site base_, Rational m_, int64_t n_) : base(base_), m(m_), n(n_) {
  len = floor_m_ln_n(m, n) + 1;
  rad = floor_ln_n_34(n);
  if (rad < 2 || len < 2) {
    fail(errc::degenerate_scale,
         "quiver degenerate at n=" + std::to_string(n) + " (rad=" + std::to_string(rad) +
             ", len=" + std::to_string(len) + ")");
  }
}

ExplicitRegion::ExplicitRegion(std::vector<Site> s) : sites(std::move(s)) {
  std::sort(sites.begin(), sites.end());
  sites.erase(std::unique(sites.begin(), sites.end()), sites.end());
  index = std::make_shared<std::unordered_set<Site, SiteHash>>(sites.begin(), sites.end());
}

namespace {

// Half-width of the cone cross-section at level l: floor(num*(n-l)/den).
int64_t cone_halfwidth(const ConeRegion& c, int64_t level) {
  return c.m.num * (c.n - level) / c.m.den;
}

bool cone_contains(const ConeRegion& c, const Site& s) {
  if (s.x1 < -c.n || s.x1 > c.n) return false;
  int64_t lim = c.m.num * (c.n - s.x1);
  return std::llabs(s.x2) * c.m.den <= lim && std::llabs(s.x3) * c.m.den <= lim;
}

bool kregion_contains(const KRegion& k, const Site& s) {
  if (s.x1 <= -k.n || s.x1 > k.span) return false;
  int64_t lim = k.n + s.x1;
  return std::llabs(s.x2) <= lim && std::llabs(s.x3) <= lim;
}

bool cylinder_contains(const CylinderRegion& c, const Site& s) {
  Site d = s - c.base;
  return d.x1 >= -c.l1 && d.x1 <= c.l2 && std::llabs(d.x2) <= c.l3 && std::llabs(d.x3) <= c.l3;
}

// Quiver membership: on the inner boundary of the underlying cylinder.
bool quiver_contains(const QuiverRegion& q, const Site& s) {
  Site d = s - q.base;
  if (d.x1 < 0 || d.x1 > q.len) return false;
  int64_t t = std::max(std::llabs(d.x2), std::llabs(d.x3));
  if (t > q.rad) return false;
  return d.x1 == 0 || d.x1 == q.len || t == q.rad;
}

// Enumerate the square ring a <= max(|d2|,|d3|) <= b at a fixed level.
template <typename Fn>
void emit_ring(int64_t level, int64_t a, int64_t b, const Site& origin, Fn&& fn) {
  if (b < 0 || a > b) return;
  if (a <= 0) {
    for (int64_t u = -b; u <= b; ++u)
      for (int64_t v = -b; v <= b; ++v)
        fn(Site{origin.x1 + level, origin.x2 + u, origin.x3 + v});
    return;
  }
  for (int64_t r = a; r <= b; ++r) {
    for (int64_t u = -r; u <= r; ++u) {
      fn(Site{origin.x1 + level, origin.x2 + u, origin.x3 + r});
      fn(Site{origin.x1 + level, origin.x2 + u, origin.x3 - r});
    }
    for (int64_t v = -r + 1; v <= r - 1; ++v) {
      fn(Site{origin.x1 + level, origin.x2 + r, origin.x3 + v});
      fn(Site{origin.x1 + level, origin.x2 - r, origin.x3 + v});
    }
  }
}

// Largest h >= -1 with h*h < rsq.
int64_t ball_column_height(int64_t rsq) {
  if (rsq <= 0) return -1;
  int64_t h = int64_t(std::sqrt(double(rsq)));
  while (h * h >= rsq) --h;
  while ((h + 1) * (h + 1) < rsq) ++h;
  return h;
}

struct MemberVisitor {
  const std::function<void(const Site&)>& fn;

  void operator()(const BoxRegion& b) const {
    for (int64_t i = -b.radius; i <= b.radius; ++i)
      for (int64_t j = -b.radius; j <= b.radius; ++j)
        for (int64_t k = -b.radius; k <= b.radius; ++k)
          fn(Site{b.center.x1 + i, b.center.x2 + j, b.center.x3 + k});
  }
  void operator()(const BallRegion& b) const {
    int64_t r = b.radius - 1;
    int64_t rsq = b.radius * b.radius;
    for (int64_t i = -r; i <= r; ++i)
      for (int64_t j = -r; j <= r; ++j) {
        int64_t h = ball_column_height(rsq - i * i - j * j);
        for (int64_t k = -h; k <= h; ++k)
          fn(Site{b.center.x1 + i, b.center.x2 + j, b.center.x3 + k});
      }
  }
  void operator()(const CylinderRegion& c) const {
    for (int64_t l = -c.l1; l <= c.l2; ++l) emit_ring(l, 0, c.l3, c.base, fn);
  }
  void operator()(const ConeRegion& c) const {
    for (int64_t l = -c.n; l <= c.n; ++l) emit_ring(l, 0, cone_halfwidth(c, l), Site{}, fn);
  }
  void operator()(const KRegion& k) const {
    for (int64_t l = -k.n + 1; l <= k.span; ++l) emit_ring(l, 0, k.n + l, Site{}, fn);
  }
  void operator()(const QuiverRegion& q) const {
    emit_ring(0, 0, q.rad, q.base, fn);
    for (int64_t l = 1; l < q.len; ++l) emit_ring(l, q.rad, q.rad, q.base, fn);
    emit_ring(q.len, 0, q.rad, q.base, fn);
  }
  void operator()(const ExplicitRegion& e) const {
    for (const Site& s : e.sites) fn(s);
  }
};

struct BoundaryVisitor {
  const std::function<void(const Site&)>& fn;

  void operator()(const BoxRegion& b) const {
    if (b.radius == 0) {
      fn(b.center);
      return;
    }
    Site o = b.center;
    int64_t r = b.radius;
    emit_ring(-r, 0, r, o, fn);
    emit_ring(r, 0, r, o, fn);
    for (int64_t l = -r + 1; l <= r - 1; ++l) emit_ring(l, r, r, o, fn);
  }
  void operator()(const BallRegion& b) const {
    int64_t rsq = b.radius * b.radius;
    int64_t r = b.radius - 1;
    for (int64_t i = -r; i <= r; ++i)
      for (int64_t j = -r; j <= r; ++j) {
        int64_t h = ball_column_height(rsq - i * i - j * j);
        if (h < 0) continue;
        // Shortest neighbouring column decides how much of this column is
        // laterally exposed; the caps +-h are always boundary.
        int64_t hn = h;
        hn = std::min(hn, ball_column_height(rsq - (i + 1) * (i + 1) - j * j));
        hn = std::min(hn, ball_column_height(rsq - (i - 1) * (i - 1) - j * j));
        hn = std::min(hn, ball_column_height(rsq - i * i - (j + 1) * (j + 1)));
        hn = std::min(hn, ball_column_height(rsq - i * i - (j - 1) * (j - 1)));
        int64_t from = std::min(h, hn + 1);
        for (int64_t k = from; k <= h; ++k) {
          fn(Site{b.center.x1 + i, b.center.x2 + j, b.center.x3 + k});
          if (k > 0 || -k < from)  // avoid double-emitting k = 0
            fn(Site{b.center.x1 + i, b.center.x2 + j, b.center.x3 - k});
        }
      }
  }
  void operator()(const CylinderRegion& c) const {
    emit_ring(-c.l1, 0, c.l3, c.base, fn);
    if (c.l2 > -c.l1) emit_ring(c.l2, 0, c.l3, c.base, fn);
    for (int64_t l = -c.l1 + 1; l <= c.l2 - 1; ++l) emit_ring(l, c.l3, c.l3, c.base, fn);
  }
  void operator()(const ConeRegion& c) const {
    for_each_cone_boundary(c, [&](const Site& s, bool) { fn(s); });
  }
  void operator()(const KRegion& k) const {
    // First slab and last slab are fully exposed; in between only the rim.
    emit_ring(-k.n + 1, 0, 1, Site{}, fn);
    if (k.span > -k.n + 1) emit_ring(k.span, 0, k.n + k.span, Site{}, fn);
    for (int64_t l = -k.n + 2; l <= k.span - 1; ++l) emit_ring(l, k.n + l, k.n + l, Site{}, fn);
  }
  void operator()(const QuiverRegion& q) const {
    generic(Region(q));
  }
  void operator()(const ExplicitRegion& e) const { generic(Region(e)); }

  void generic(const Region& r) const {
    r.for_each_member([&](const Site& s) {
      for (int d = 0; d < 6; ++d) {
        if (!r.contains(neighbor(s, d))) {
          fn(s);
          return;
        }
      }
    });
  }
};

}  // namespace

bool Region::contains(const Site& s) const {
  return std::visit(
      [&](const auto& r) -> bool {
        using T = std::decay_t<decltype(r)>;
        if constexpr (std::is_same_v<T, BoxRegion>) {
          return norm_inf(s - r.center) <= r.radius;
        } else if constexpr (std::is_same_v<T, BallRegion>) {
          return norm2_sq(s - r.center) < r.radius * r.radius;
        } else if constexpr (std::is_same_v<T, CylinderRegion>) {
          return cylinder_contains(r, s);
        } else if constexpr (std::is_same_v<T, ConeRegion>) {
          return cone_contains(r, s);
        } else if constexpr (std::is_same_v<T, KRegion>) {
          return kregion_contains(r, s);
        } else if constexpr (std::is_same_v<T, QuiverRegion>) {
          return quiver_contains(r, s);
        } else {
          return r.index && r.index->count(s) > 0;
        }
      },
      v_);
}

Bounds Region::bbox() const {
  return std::visit(
      [&](const auto& r) -> Bounds {
        using T = std::decay_t<decltype(r)>;
        if constexpr (std::is_same_v<T, BoxRegion>) {
          Site d{r.radius, r.radius, r.radius};
          return {r.center - d, r.center + d};
        } else if constexpr (std::is_same_v<T, BallRegion>) {
          int64_t q = r.radius - 1;
          Site d{q, q, q};
          return {r.center - d, r.center + d};
        } else if constexpr (std::is_same_v<T, CylinderRegion>) {
          return {{r.base.x1 - r.l1, r.base.x2 - r.l3, r.base.x3 - r.l3},
                  {r.base.x1 + r.l2, r.base.x2 + r.l3, r.base.x3 + r.l3}};
        } else if constexpr (std::is_same_v<T, ConeRegion>) {
          int64_t w = cone_halfwidth(r, -r.n);
          return {{-r.n, -w, -w}, {r.n, w, w}};
        } else if constexpr (std::is_same_v<T, KRegion>) {
          int64_t w = r.n + r.span;
          return {{-r.n + 1, -w, -w}, {r.span, w, w}};
        } else if constexpr (std::is_same_v<T, QuiverRegion>) {
          return {{r.base.x1, r.base.x2 - r.rad, r.base.x3 - r.rad},
                  {r.base.x1 + r.len, r.base.x2 + r.rad, r.base.x3 + r.rad}};
        } else {
          if (r.sites.empty()) return {{0, 0, 0}, {-1, -1, -1}};
          Bounds b{r.sites.front(), r.sites.front()};
          for (const Site& s : r.sites) {
            b.lo.x1 = std::min(b.lo.x1, s.x1);
            b.lo.x2 = std::min(b.lo.x2, s.x2);
            b.lo.x3 = std::min(b.lo.x3, s.x3);
            b.hi.x1 = std::max(b.hi.x1, s.x1);
            b.hi.x2 = std::max(b.hi.x2, s.x2);
            b.hi.x3 = std::max(b.hi.x3, s.x3);
          }
          return b;
        }
      },
      v_);
}

int64_t Region::size() const {
  return std::visit(
      [&](const auto& r) -> int64_t {
        using T = std::decay_t<decltype(r)>;
        if constexpr (std::is_same_v<T, BoxRegion>) {
          int64_t s = 2 * r.radius + 1;
          return s * s * s;
        } else if constexpr (std::is_same_v<T, BallRegion>) {
          int64_t count = 0;
          int64_t q = r.radius - 1, rsq = r.radius * r.radius;
          for (int64_t i = -q; i <= q; ++i)
            for (int64_t j = -q; j <= q; ++j) {
              int64_t h = ball_column_height(rsq - i * i - j * j);
              if (h >= 0) count += 2 * h + 1;
            }
          return count;
        } else if constexpr (std::is_same_v<T, CylinderRegion>) {
          int64_t w = 2 * r.l3 + 1;
          return (r.l1 + r.l2 + 1) * w * w;
        } else if constexpr (std::is_same_v<T, ConeRegion>) {
          int64_t count = 0;
          for (int64_t l = -r.n; l <= r.n; ++l) {
            int64_t w = 2 * cone_halfwidth(r, l) + 1;
            count += w * w;
          }
          return count;
        } else if constexpr (std::is_same_v<T, KRegion>) {
          int64_t count = 0;
          for (int64_t l = -r.n + 1; l <= r.span; ++l) {
            int64_t w = 2 * (r.n + l) + 1;
            count += w * w;
          }
          return count;
        } else if constexpr (std::is_same_v<T, QuiverRegion>) {
          int64_t face = 2 * r.rad + 1;
          int64_t rim = face * face - (2 * r.rad - 1) * (2 * r.rad - 1);
          return 2 * face * face + (r.len - 1) * rim;
        } else {
          return int64_t(r.sites.size());
        }
      },
      v_);
}

void Region::for_each_member(const std::function<void(const Site&)>& fn) const {
  std::visit(MemberVisitor{fn}, v_);
}

void Region::for_each_boundary(const std::function<void(const Site&)>& fn) const {
  std::visit(BoundaryVisitor{fn}, v_);
}

std::vector<Site> Region::members() const {
  std::vector<Site> out;
  for_each_member([&](const Site& s) { out.push_back(s); });
  return out;
}

std::vector<Site> Region::boundary() const {
  std::vector<Site> out;
  for_each_boundary([&](const Site& s) { out.push_back(s); });
  return out;
}

void for_each_cone_boundary(const ConeRegion& c,
                            const std::function<void(const Site&, bool is_minus)>& fn) {
  // x.e1 = -n slab: the negative boundary, in full.
  emit_ring(-c.n, 0, cone_halfwidth(c, -c.n), Site{},
            [&](const Site& s) { fn(s, true); });
  for (int64_t l = -c.n + 1; l <= c.n; ++l) {
    int64_t w = cone_halfwidth(c, l);
    int64_t wnext = (l == c.n) ? -1 : cone_halfwidth(c, l + 1);
    int64_t from = std::min(w, wnext + 1);
    emit_ring(l, from, w, Site{}, [&](const Site& s) { fn(s, false); });
  }
}

std::pair<std::vector<Site>, std::vector<Site>> cone_boundaries(const Rational& m, int64_t n) {
  std::vector<Site> minus, plus;
  for_each_cone_boundary(ConeRegion{m, n}, [&](const Site& s, bool is_minus) {
    (is_minus ? minus : plus).push_back(s);
  });
  return {std::move(minus), std::move(plus)};
}

TrapAnchors trap_anchors(const Site& x, const Rational& m, int64_t n) {
  int64_t rad = floor_ln_n_34(n);
  if (rad < 2) {
    fail(errc::degenerate_scale,
         "trap anchors degenerate: floor((ln n)^{3/4}) = " + std::to_string(rad) + " < 2");
  }
  TrapAnchors t;
  t.base = x;
  int64_t seg = floor_inv_m_3ln_n(m, n);
  t.mouth = Site{x.x1 + seg, x.x2, x.x3};
  t.tip = Site{t.mouth.x1 + floor_m_ln_n(m, n), t.mouth.x2, t.mouth.x3};
  for (int64_t j = 0; j <= seg; ++j) t.segment.push_back(Site{x.x1 + j, x.x2, x.x3});
  if (m.value() < 10.0) t.warning = "M=" + m.str() + " below the intended range (M >= 10)";
  return t;
}

std::string Region::descriptor() const {
  std::ostringstream os;
  std::visit(
      [&](const auto& r) {
        using T = std::decay_t<decltype(r)>;
        if constexpr (std::is_same_v<T, BoxRegion>) {
          os << "box " << r.center.x1 << ' ' << r.center.x2 << ' ' << r.center.x3 << ' '
             << r.radius;
        } else if constexpr (std::is_same_v<T, BallRegion>) {
          os << "ball " << r.center.x1 << ' ' << r.center.x2 << ' ' << r.center.x3 << ' '
             << r.radius;
        } else if constexpr (std::is_same_v<T, CylinderRegion>) {
          os << "cylinder " << r.base.x1 << ' ' << r.base.x2 << ' ' << r.base.x3 << ' ' << r.l1
             << ' ' << r.l2 << ' ' << r.l3;
        } else if constexpr (std::is_same_v<T, ConeRegion>) {
          os << "cone " << r.m.str() << ' ' << r.n;
        } else if constexpr (std::is_same_v<T, KRegion>) {
          os << "kregion " << r.n << ' ' << r.span;
        } else if constexpr (std::is_same_v<T, QuiverRegion>) {
          os << "quiver " << r.base.x1 << ' ' << r.base.x2 << ' ' << r.base.x3 << ' '
             << r.m.str() << ' ' << r.n;
        } else {
          os << "explicit";
          for (const Site& s : r.sites) os << ' ' << s.x1 << ',' << s.x2 << ',' << s.x3;
        }
      },
      v_);
  return os.str();
}

Region Region::parse(const std::string& text) {
  std::istringstream is(text);
  std::string kind;
  is >> kind;
  auto want = [&](int64_t& v) {
    if (!(is >> v)) fail(errc::config_invalid, "region parse: missing integer in '" + text + "'");
  };
  if (kind == "box" || kind == "ball") {
    Site c;
    int64_t r;
    want(c.x1);
    want(c.x2);
    want(c.x3);
    want(r);
    return kind == "box" ? box(c, r) : ball(c, r);
  }
  if (kind == "cylinder") {
    Site b;
    int64_t l1, l2, l3;
    want(b.x1);
    want(b.x2);
    want(b.x3);
    want(l1);
    want(l2);
    want(l3);
    return cylinder(b, l1, l2, l3);
  }
  if (kind == "cone") {
    std::string ms;
    int64_t n;
    is >> ms;
    want(n);
    return cone(Rational::parse(ms), n);
  }
  if (kind == "kregion") {
    int64_t n, span;
    want(n);
    want(span);
    return k_region(n, span);
  }
  if (kind == "quiver") {
    Site b;
    std::string ms;
    int64_t n;
    want(b.x1);
    want(b.x2);
    want(b.x3);
    is >> ms;
    want(n);
    return quiver(b, Rational::parse(ms), n);
  }
  if (kind == "explicit") {
    std::vector<Site> sites;
    std::string tok;
    while (is >> tok) {
      Site s;
      if (std::sscanf(tok.c_str(), "%ld,%ld,%ld", &s.x1, &s.x2, &s.x3) != 3)
        fail(errc::config_invalid, "region parse: bad site '" + tok + "'");
      sites.push_back(s);
    }
    if (sites.empty()) fail(errc::config_invalid, "region parse: empty explicit set");
    return explicit_set(std::move(sites));
  }
  fail(errc::config_invalid, "region parse: unknown kind '" + kind + "'");
}

}  // namespace ri
