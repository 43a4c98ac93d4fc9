#pragma once

#include <array>
#include <cmath>
#include <numbers>
#include <optional>
#include <vector>

#include "bvlab/dyadic.hpp"
#include "bvlab/fixtures.hpp"
#include "bvlab/group_action.hpp"
#include "bvlab/grid.hpp"
#include "bvlab/measures.hpp"

// First Heisenberg group in exponential coordinates (x, y, t) with
// (x,y,t) o (x',y',t') = (x+x', y+y', t+t' + (x y' - y x')/2).
//
// Grid convention: cell (ix, iy, it) at level L is anchored at the point
// (ix h, iy h, it h^2), h = 2^-L. Left translations by points whose x and y
// are even multiples of h permute cells exactly.

namespace bvlab {

struct HeisenbergPoint {
  Dyadic x, y, t;

  static HeisenbergPoint identity() { return {}; }
  friend bool operator==(const HeisenbergPoint&, const HeisenbergPoint&) = default;
};

inline HeisenbergPoint operator*(const HeisenbergPoint& a, const HeisenbergPoint& b) {
  Dyadic twist = (a.x * b.y - a.y * b.x).scaled_pow2(-1);
  return {a.x + b.x, a.y + b.y, a.t + b.t + twist};
}

inline HeisenbergPoint inverse(const HeisenbergPoint& p) { return {-p.x, -p.y, -p.t}; }

/// Anisotropic dilation by 2^k: (x, y, t) -> (2^k x, 2^k y, 4^k t).
inline HeisenbergPoint dilate(const HeisenbergPoint& p, int k) {
  return {p.x.scaled_pow2(k), p.y.scaled_pow2(k), p.t.scaled_pow2(2 * k)};
}

/// u -> 2^{3j} u(delta_{2^j}(eta^-1 o .)).
struct HGroupElement {
  int j = 0;
  HeisenbergPoint eta{};

  static HGroupElement identity() { return {}; }
  friend bool operator==(const HGroupElement&, const HGroupElement&) = default;
};

inline HGroupElement compose(const HGroupElement& a, const HGroupElement& b) {
  return {a.j + b.j, a.eta * dilate(b.eta, -a.j)};
}

inline HGroupElement inverse(const HGroupElement& g) { return {-g.j, dilate(inverse(g.eta), g.j)}; }

/// |j - j'| + |exp^-1(eta o eta'^-1)|_1.
inline double separation(const HGroupElement& a, const HGroupElement& b) {
  HeisenbergPoint d = a.eta * inverse(b.eta);
  return std::abs(a.j - b.j) + std::abs(d.x.to_double()) + std::abs(d.y.to_double()) + std::abs(d.t.to_double());
}

namespace detail {

struct ShiftIndex {
  std::int64_t a, b, c;  // x, y in cells of h (even), t in cells of h^2
};

inline ShiftIndex shift_index(const HeisenbergPoint& eta, int level) {
  auto a = eta.x.grid_index(level);
  auto b = eta.y.grid_index(level);
  auto c = eta.t.grid_index(2 * level);
  if (!a || !b || !c || (*a % 2) != 0 || (*b % 2) != 0)
    fail(ErrorCode::IncompatibleShift, "Heisenberg shift must have x, y in 2h Z and t in h^2 Z at level " + std::to_string(level));
  return {*a, *b, *c};
}

}  // namespace detail

/// Exact index remap; horizontal TV and the L^{4/3} norm are preserved.
inline HGridFunction h_apply(const HGroupElement& g, const HGridFunction& u) {
  const int level = u.level() + g.j;
  check_level(level);
  auto [a, b, c] = detail::shift_index(g.eta, level);
  const auto& src = u.box();
  if (src.empty()) return HGridFunction(level, src);

  // Target of source cell s: ix = sx + a, iy = sy + b,
  // it = st + c - (b ix - a iy)/2. Affine, so the corners bound the image.
  Index<3> lo{INT64_MAX, INT64_MAX, INT64_MAX}, hi{INT64_MIN, INT64_MIN, INT64_MIN};
  for (int corner = 0; corner < 8; ++corner) {
    std::int64_t sx = (corner & 1) ? src.upper(0) - 1 : src.origin[0];
    std::int64_t sy = (corner & 2) ? src.upper(1) - 1 : src.origin[1];
    std::int64_t st = (corner & 4) ? src.upper(2) - 1 : src.origin[2];
    std::int64_t ix = sx + a, iy = sy + b;
    std::int64_t it = st + c - (b * ix - a * iy) / 2;
    Index<3> p{ix, iy, it};
    for (int d = 0; d < 3; ++d) {
      lo[d] = std::min(lo[d], p[d]);
      hi[d] = std::max(hi[d], p[d]);
    }
  }
  Box<3> box{lo, {hi[0] - lo[0] + 1, hi[1] - lo[1] + 1, hi[2] - lo[2] + 1}};
  HGridFunction out(level, box);
  auto& vals = out.mutable_values();
  const int amp = 3 * g.j;
  for_each_index(box, [&](const Index<3>& i) {
    Index<3> s{i[0] - a, i[1] - b, i[2] - c + (b * i[0] - a * i[1]) / 2};
    double v = u.at(s);
    if (v != 0.0) vals[box.offset(i)] = std::ldexp(v, amp);
  });
  return out;
}

namespace detail {

/// u at (ix, iy, twice_t / 2), linear in t between cells for odd twice_t.
inline double at_half_t(const HGridFunction& u, std::int64_t ix, std::int64_t iy, std::int64_t twice_t) {
  if (twice_t % 2 == 0) return u.at({ix, iy, twice_t / 2});
  std::int64_t lo = floor_div(twice_t, 2);
  return 0.5 * (u.at({ix, iy, lo}) + u.at({ix, iy, lo + 1}));
}

inline std::int64_t ceil_half(std::int64_t v) { return -floor_div(-v, 2); }

}  // namespace detail

/// Calls visit(cell, sample, contribution) for every cell with a nonzero
/// discrete horizontal gradient. X1 and X2 are differenced along their own
/// integral curves, u(p o (h,0,0)) - u(p) and u(p o (0,h,0)) - u(p), which
/// are the forward differences in x and y followed by a t-offset of -iy/2
/// and +ix/2 cells; half-cell offsets interpolate linearly in t.
template <class Visit>
void visit_htv_contributions(const HGridFunction& u, Visit&& visit) {
  u.require_finite();
  const auto& box = u.box();
  if (box.empty()) return;
  const double scale = std::ldexp(1.0, -3 * u.level());  // h^4 / h
  const std::int64_t t0 = box.origin[2], t1 = box.upper(2);
  for (std::int64_t ix = box.origin[0] - 1; ix < box.upper(0); ++ix) {
    for (std::int64_t iy = box.origin[1] - 1; iy < box.upper(1); ++iy) {
      std::int64_t lo = std::min({t0, t0 + floor_div(iy, 2), t0 - detail::ceil_half(ix)}) - 1;
      std::int64_t hi = std::max({t1, t1 + detail::ceil_half(iy), t1 - floor_div(ix, 2)}) + 1;
      for (std::int64_t it = lo; it < hi; ++it) {
        const double c = u.at({ix, iy, it});
        const double d1 = detail::at_half_t(u, ix + 1, iy, 2 * it - iy) - c;
        const double d2 = detail::at_half_t(u, ix, iy + 1, 2 * it + ix) - c;
        const double g2 = d1 * d1 + d2 * d2;
        if (g2 != 0.0) visit(Index<3>{ix, iy, it}, c, scale * std::sqrt(g2));
      }
    }
  }
}

inline double horizontal_tv(const HGridFunction& u) {
  double s = 0.0;
  visit_htv_contributions(u, [&](const Index<3>&, double, double c) { s += c; });
  return s;
}

template <class Region>
double horizontal_tv_restricted(const HGridFunction& u, Region&& region) {
  double s = 0.0;
  visit_htv_contributions(u, [&](const Index<3>& i, double v, double c) {
    if (region(i, v)) s += c;
  });
  return s;
}

/// Volume of the anisotropic box delta_{2^-j}([0,1)^3) measured on a grid of
/// the given level: 2^{-4j} exactly.
inline double h_box_volume(int j, int level) {
  std::int64_t s = std::int64_t{1} << (level - j);
  double cells = static_cast<double>(s) * static_cast<double>(s) * static_cast<double>(s * s);
  return cells * cell_volume<HeisenbergGeometry>(level);
}

/// Maximizes mu_H(j, eta) = 2^j * integral of |u| over eta o delta_{2^-j}([0,1)^3)
/// over levels in the window and grid-compatible eta.
inline ScanResult<HGroupElement> h_scan(const HGridFunction& u, std::optional<LevelWindow> window = std::nullopt,
                                        unsigned jobs = 1) {
  u.require_finite();
  const int L = u.level();
  LevelWindow w = window.value_or(default_window(L));
  w.hi = std::min(w.hi, L);
  if (w.hi < w.lo) fail(ErrorCode::EmptyWindow, "scan window is empty");
  check_level(L - w.lo);

  ScanResult<HGroupElement> result;
  result.window = w;
  const int levels = w.hi - w.lo + 1;
  result.table.resize(static_cast<std::size_t>(levels));
  auto S = u.support();
  if (S.empty()) {
    for (int k = 0; k < levels; ++k) result.table[k] = {w.lo + k, 0.0};
    return result;
  }

  // Prefix sums of |u| along t for every support column.
  const auto ex = S.extent[0], ey = S.extent[1], et = S.extent[2];
  std::vector<long double> prefix(static_cast<std::size_t>(ex * ey * (et + 1)), 0.0L);
  auto pidx = [&](std::int64_t cx, std::int64_t cy, std::int64_t k) {
    return static_cast<std::size_t>((cx * ey + cy) * (et + 1) + k);
  };
  for (std::int64_t cx = 0; cx < ex; ++cx)
    for (std::int64_t cy = 0; cy < ey; ++cy)
      for (std::int64_t k = 0; k < et; ++k)
        prefix[pidx(cx, cy, k + 1)] =
            prefix[pidx(cx, cy, k)] + std::abs(u.at({S.origin[0] + cx, S.origin[1] + cy, S.origin[2] + k}));
  auto column = [&](std::int64_t ix, std::int64_t iy, std::int64_t t_lo, std::int64_t t_hi) -> long double {
    std::int64_t cx = ix - S.origin[0], cy = iy - S.origin[1];
    std::int64_t a = std::clamp<std::int64_t>(t_lo - S.origin[2], 0, et);
    std::int64_t b = std::clamp<std::int64_t>(t_hi - S.origin[2], 0, et);
    if (b <= a) return 0.0L;
    return prefix[pidx(cx, cy, b)] - prefix[pidx(cx, cy, a)];
  };
  const double vol = u.cell_volume();

  std::vector<detail::Candidate> per_level(static_cast<std::size_t>(levels));
  parallel_for(static_cast<std::size_t>(levels), jobs, [&](std::size_t k) {
    const int j = w.lo + static_cast<int>(k);
    const std::int64_t s = std::int64_t{1} << (L - j);
    const std::int64_t st = s * s;
    detail::Candidate best;
    auto even_up = [](std::int64_t v) { return v % 2 == 0 ? v : v + 1; };
    for (std::int64_t a = even_up(S.origin[0] - s + 1); a < S.upper(0); a += 2) {
      for (std::int64_t b = even_up(S.origin[1] - s + 1); b < S.upper(1); b += 2) {
        // Covered support columns and their t-offsets (a qy - b qx)/2.
        struct Col {
          std::int64_t ix, iy, shift;
        };
        std::vector<Col> cols;
        std::int64_t smin = INT64_MAX, smax = INT64_MIN;
        for (std::int64_t ix = std::max(a, S.origin[0]); ix < std::min(a + s, S.upper(0)); ++ix)
          for (std::int64_t iy = std::max(b, S.origin[1]); iy < std::min(b + s, S.upper(1)); ++iy) {
            std::int64_t sh = (a * (iy - b) - b * (ix - a)) / 2;
            cols.push_back({ix, iy, sh});
            smin = std::min(smin, sh);
            smax = std::max(smax, sh);
          }
        if (cols.empty()) continue;
        for (std::int64_t c = S.origin[2] - st + 1 - smax; c <= S.upper(2) - 1 - smin; ++c) {
          long double m = 0.0L;
          for (const auto& col : cols) m += column(col.ix, col.iy, c + col.shift, c + col.shift + st);
          detail::Candidate cand;
          cand.mass = std::ldexp(static_cast<double>(m) * vol, j);
          cand.j = j;
          cand.pos = {a, b, c};
          if (cand.beats(best)) best = cand;
        }
      }
    }
    per_level[k] = best;
  });

  detail::Candidate best;
  for (std::size_t k = 0; k < per_level.size(); ++k) {
    result.table[k] = {per_level[k].j, per_level[k].mass};
    if (per_level[k].beats(best)) best = per_level[k];
  }
  result.mass = best.mass;
  result.best.j = best.j;
  result.best.eta = {Dyadic(best.pos[0], L), Dyadic(best.pos[1], L), Dyadic(best.pos[2], 2 * L)};
  result.window_exhausted = levels > 1 && (best.j == w.lo || best.j == w.hi);
  return result;
}

/// A sin^2 bump on the unit box [0,1)^3, positive on every cell.
inline HGridFunction h_unit_bump(int level, double amplitude) {
  check_level(level);
  if (level < 0) fail(ErrorCode::ResolutionTooCoarse, "unit bump needs level >= 0");
  const std::int64_t n = std::int64_t{1} << level;
  Box<3> box{{0, 0, 0}, {n, n, n * n}};
  HGridFunction u(level, box);
  auto& vals = u.mutable_values();
  for_each_index(box, [&](const Index<3>& i) {
    double v = amplitude;
    for (int d = 0; d < 3; ++d) {
      double s = std::sin(std::numbers::pi * (static_cast<double>(i[d]) + 0.5) / static_cast<double>(box.extent[d]));
      v *= s * s;
    }
    vals[box.offset(i)] = v;
  });
  return u;
}

/// Flat-topped analogue of h_unit_bump; its scan argmax is the unit box at j = 0.
inline HGridFunction h_unit_plateau(int level, double amplitude, double ramp = 0.125) {
  check_level(level);
  if (level < 0) fail(ErrorCode::ResolutionTooCoarse, "plateau needs level >= 0");
  const std::int64_t n = std::int64_t{1} << level;
  Box<3> box{{0, 0, 0}, {n, n, n * n}};
  HGridFunction u(level, box);
  auto& vals = u.mutable_values();
  for_each_index(box, [&](const Index<3>& i) {
    double v = amplitude;
    for (int d = 0; d < 3; ++d)
      v *= plateau_factor((static_cast<double>(i[d]) + 0.5) / static_cast<double>(box.extent[d]), ramp);
    vals[box.offset(i)] = v;
  });
  return u;
}

/// Koranyi gauge ((x^2+y^2)^2 + 16 t^2)^{1/4}.
inline double koranyi_gauge(double x, double y, double t) {
  double r2 = x * x + y * y;
  return std::pow(r2 * r2 + 16.0 * t * t, 0.25);
}

/// 1 inside the gauge ball of radius R - eps, linear ramp to 0 at R.
inline HGridFunction koranyi_mollified_ball(int level, double R, double eps) {
  check_level(level);
  const double h = std::ldexp(1.0, -level);
  if (eps < 2.0 * h) fail(ErrorCode::ResolutionTooCoarse, "mollification width must be at least two cells");
  const auto nx = static_cast<std::int64_t>(std::ceil(R / h)) + 1;
  const auto nt = static_cast<std::int64_t>(std::ceil(R * R / 4.0 / (h * h))) + 1;
  Box<3> box{{-nx, -nx, -nt}, {2 * nx + 1, 2 * nx + 1, 2 * nt + 1}};
  HGridFunction u(level, box);
  auto& vals = u.mutable_values();
  for_each_index(box, [&](const Index<3>& i) {
    double rho = koranyi_gauge(i[0] * h, i[1] * h, i[2] * h * h);
    double v = rho <= R - eps ? 1.0 : (rho < R ? (R - rho) / eps : 0.0);
    vals[box.offset(i)] = v;
  });
  return trim(u);
}

/// Group policy for the generic extraction engine.
struct HeisenbergGroup {
  using Geometry = HeisenbergGeometry;
  using Function = HGridFunction;
  using Element = HGroupElement;
  static constexpr int rank = 3;

  static Function act(const Element& g, const Function& u) { return h_apply(g, u); }
  static Element invert(const Element& g) { return inverse(g); }
  static Element combine(const Element& a, const Element& b) { return compose(a, b); }
  static ScanResult<Element> concentration(const Function& u, std::optional<LevelWindow> w, unsigned jobs) {
    return h_scan(u, w, jobs);
  }
  static double sep(const Element& a, const Element& b) { return separation(a, b); }
  static double variation(const Function& u) { return horizontal_tv(u); }

  static Element make(int j, const std::array<Dyadic, 3>& t) { return Element{j, {t[0], t[1], t[2]}}; }
  static std::array<Dyadic, 3> translation(const Element& g) { return {g.eta.x, g.eta.y, g.eta.t}; }

  static Box<3> unit_window(int level, int margin) {
    const std::int64_t n = std::int64_t{1} << level;
    const std::int64_t nt = n * n;
    return Box<3>{{-margin * n, -margin * n, -margin * nt}, {(1 + 2 * margin) * n, (1 + 2 * margin) * n, (1 + 2 * margin) * nt}};
  }
};

}  // namespace bvlab
