#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include "bvlab/dyadic.hpp"
#include "bvlab/grid.hpp"
#include "bvlab/measures.hpp"

namespace bvlab {

/// Piecewise-constant radial function: value[i] on the shell
/// (knot[i-1], knot[i]] with knot[-1] = 0, zero beyond the last knot.
struct RadialProfile {
  int dim = 2;
  std::vector<double> knots;
  std::vector<double> values;

  void validate() const {
    if (knots.size() != values.size() || knots.empty()) fail(ErrorCode::FormatError, "radial profile needs one value per knot");
    double prev = 0.0;
    for (double r : knots) {
      if (!(r > prev)) fail(ErrorCode::FormatError, "radial knots must be positive and strictly increasing");
      prev = r;
    }
  }

  double operator()(double r) const {
    for (std::size_t i = 0; i < knots.size(); ++i)
      if (r <= knots[i]) return values[i];
    return 0.0;
  }

  double outer_radius() const { return knots.empty() ? 0.0 : knots.back(); }
};

/// Parameters shared by the fixture generators; each kind reads what it needs.
struct FixtureParams {
  int level = 7;
  double radius = 1.0;
  double eps = 1.0 / 16;
  double amplitude = 1.0;
  int count = 1;
  double spacing = 8.0;  // between multibump centers, length units
  std::vector<double> center;  // defaults to the origin
  RadialProfile profile;
};

namespace detail {

template <int N>
std::array<double, N> center_of(const FixtureParams& p) {
  std::array<double, N> c{};
  for (int d = 0; d < N && d < static_cast<int>(p.center.size()); ++d) c[d] = p.center[d];
  return c;
}

/// Smallest box of cells at `level` whose cell centers cover the ball B(c, r).
template <int N>
Box<N> box_around(const std::array<double, N>& c, double r, int level) {
  Box<N> b;
  const double inv_h = std::ldexp(1.0, level);
  for (int d = 0; d < N; ++d) {
    auto lo = static_cast<std::int64_t>(std::floor((c[d] - r) * inv_h - 0.5)) - 1;
    auto hi = static_cast<std::int64_t>(std::ceil((c[d] + r) * inv_h - 0.5)) + 1;
    b.origin[d] = lo;
    b.extent[d] = hi - lo + 1;
  }
  return b;
}

template <int N, class F>
GridFunction<N> rasterize_radial(const std::array<double, N>& c, double r_out, int level, F&& phi) {
  check_level(level);
  auto box = box_around<N>(c, r_out, level);
  GridFunction<N> u(level, box);
  const double h = std::ldexp(1.0, -level);
  auto& vals = u.mutable_values();
  for_each_index(box, [&](const Index<N>& i) {
    double r2 = 0.0;
    for (int d = 0; d < N; ++d) {
      double x = (static_cast<double>(i[d]) + 0.5) * h - c[d];
      r2 += x * x;
    }
    vals[box.offset(i)] = phi(std::sqrt(r2));
  });
  return trim(u);
}

}  // namespace detail

template <int N>
GridFunction<N> ball(const FixtureParams& p) {
  auto c = detail::center_of<N>(p);
  return detail::rasterize_radial<N>(c, p.radius, p.level, [&](double r) { return r <= p.radius ? p.amplitude : 0.0; });
}

/// Radial profile 1 on r <= R - eps, linear ramp (R - r)/eps, 0 beyond R.
template <int N>
GridFunction<N> mollified_ball(const FixtureParams& p) {
  const double h = std::ldexp(1.0, -p.level);
  if (p.eps < 2.0 * h) fail(ErrorCode::ResolutionTooCoarse, "mollification width must be at least two cells");
  auto c = detail::center_of<N>(p);
  const double R = p.radius, eps = p.eps, a = p.amplitude;
  return detail::rasterize_radial<N>(c, R, p.level, [=](double r) {
    if (r <= R - eps) return a;
    if (r < R) return a * (R - r) / eps;
    return 0.0;
  });
}

template <int N>
GridFunction<N> radial(const FixtureParams& p) {
  p.profile.validate();
  auto c = detail::center_of<N>(p);
  return detail::rasterize_radial<N>(c, p.profile.outer_radius(), p.level,
                                     [&](double r) { return p.amplitude * p.profile(r); });
}

/// Smooth bump amplitude * prod sin^2(pi x_d) on the unit cube [0,1)^N,
/// sampled at cell centers; strictly positive on every cell of the cube.
template <int N>
GridFunction<N> unit_bump(int level, double amplitude) {
  check_level(level);
  if (level < 0) fail(ErrorCode::ResolutionTooCoarse, "unit bump needs level >= 0");
  const std::int64_t n = std::int64_t{1} << level;
  Box<N> box;
  box.extent.fill(n);
  GridFunction<N> u(level, box);
  auto& vals = u.mutable_values();
  for_each_index(box, [&](const Index<N>& i) {
    double v = amplitude;
    for (int d = 0; d < N; ++d) {
      double s = std::sin(std::numbers::pi * (static_cast<double>(i[d]) + 0.5) / static_cast<double>(n));
      v *= s * s;
    }
    vals[box.offset(i)] = v;
  });
  return u;
}

/// 1 on the middle of [0,1) with sin^2 ramps of width `ramp` at both ends.
inline double plateau_factor(double x, double ramp) {
  if (x <= 0.0 || x >= 1.0) return 0.0;
  double e = std::min(x, 1.0 - x);
  if (e >= ramp) return 1.0;
  double s = std::sin(0.5 * std::numbers::pi * e / ramp);
  return s * s;
}

/// amplitude * prod plateau_factor(x_d) on [0,1)^N at cell centers. Its
/// scan argmax is the unit cube itself at j = 0.
template <int N>
GridFunction<N> unit_plateau(int level, double amplitude, double ramp = 0.125) {
  check_level(level);
  if (level < 0) fail(ErrorCode::ResolutionTooCoarse, "plateau needs level >= 0");
  const std::int64_t n = std::int64_t{1} << level;
  Box<N> box;
  box.extent.fill(n);
  GridFunction<N> u(level, box);
  auto& vals = u.mutable_values();
  for_each_index(box, [&](const Index<N>& i) {
    double v = amplitude;
    for (int d = 0; d < N; ++d) v *= plateau_factor((static_cast<double>(i[d]) + 0.5) / static_cast<double>(n), ramp);
    vals[box.offset(i)] = v;
  });
  return u;
}

/// `count` unit bumps of the given amplitude with lower corners at
/// center + m * spacing * e_0, m = 0..count-1.
template <int N>
GridFunction<N> multibump(const FixtureParams& p) {
  if (p.count < 1) fail(ErrorCode::FormatError, "multibump needs count >= 1");
  auto bump = unit_bump<N>(p.level, p.amplitude);
  auto c = detail::center_of<N>(p);
  Index<N> base{};
  for (int d = 0; d < N; ++d) {
    auto idx = Dyadic::from_double(c[d]).grid_index(p.level);
    if (!idx) fail(ErrorCode::IncompatibleTranslation, "multibump origin not on the grid");
    base[d] = *idx;
  }
  auto step = Dyadic::from_double(p.spacing).grid_index(p.level);
  if (!step) fail(ErrorCode::IncompatibleTranslation, "multibump spacing not on the grid");
  if (*step < bump.box().extent[0]) fail(ErrorCode::FormatError, "multibump spacing smaller than a bump");
  Box<N> box = bump.box();
  for (int d = 0; d < N; ++d) box.origin[d] = base[d];
  box.extent[0] = *step * (p.count - 1) + bump.box().extent[0];
  GridFunction<N> u(p.level, box);
  auto& vals = u.mutable_values();
  for (int m = 0; m < p.count; ++m)
    for_each_index(bump.box(), [&](const Index<N>& i) {
      Index<N> j = i;
      for (int d = 0; d < N; ++d) j[d] += base[d];
      j[0] += *step * m;
      vals[box.offset(j)] = bump.at(i);
    });
  return u;
}

template <int N>
GridFunction<N> make_fixture(const std::string& kind, const FixtureParams& p) {
  if (kind == "ball") return ball<N>(p);
  if (kind == "mollified_ball") return mollified_ball<N>(p);
  if (kind == "bump") {
    auto u = unit_bump<N>(p.level, p.amplitude);
    if (p.center.empty()) return u;
    FixtureParams q = p;
    q.count = 1;
    return multibump<N>(q);
  }
  if (kind == "plateau") return unit_plateau<N>(p.level, p.amplitude);
  if (kind == "multibump") return multibump<N>(p);
  if (kind == "radial") return radial<N>(p);
  fail(ErrorCode::UnknownKind, "unknown fixture kind '" + kind + "'");
}

}  // namespace bvlab
