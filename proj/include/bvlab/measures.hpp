#pragma once

#include <cmath>
#include <numbers>

#include "bvlab/grid.hpp"

namespace bvlab {

/// Volume of the unit ball in R^N.
inline double unit_ball_volume(int n) {
  return std::pow(std::numbers::pi, 0.5 * n) / std::tgamma(0.5 * n + 1.0);
}

/// Integral of |u|^p over the grid (sum of h^N |u|^p in row-major order).
template <class Geom>
double lp_power(const Field<Geom>& u, double p) {
  if (!(p >= 1.0) || !std::isfinite(p)) fail(ErrorCode::BadExponent, "exponent must be finite and >= 1");
  u.require_finite();
  double s = 0.0;
  if (p == 1.0) {
    for (double v : u.values()) s += std::abs(v);
  } else if (p == 2.0) {
    for (double v : u.values()) s += v * v;
  } else {
    for (double v : u.values()) s += std::pow(std::abs(v), p);
  }
  return s * u.cell_volume();
}

template <class Geom>
double lp_norm(const Field<Geom>& u, double p) {
  double s = lp_power(u, p);
  if (p == 1.0) return s;
  if (p == 2.0) return std::sqrt(s);
  return std::pow(s, 1.0 / p);
}

template <class Geom>
double critical_norm(const Field<Geom>& u) {
  return lp_norm(u, critical_exponent<Geom>());
}

/// Calls visit(cell, sample, contribution) for every cell that owns a nonzero
/// forward-difference gradient, in row-major order over the box grown by one
/// cell below. contribution = h^N |D+u(cell)|_2 with zero padding.
template <int N, class Visit>
void visit_tv_contributions(const GridFunction<N>& u, Visit&& visit) {
  u.require_finite();
  if (u.box().empty()) return;
  const double scale = std::ldexp(1.0, -(N - 1) * u.level());  // h^N / h
  auto ext = u.box().grown(1, 0);
  for_each_index(ext, [&](const Index<N>& i) {
    const double c = u.at(i);
    double g2 = 0.0;
    Index<N> nb = i;
    for (int d = 0; d < N; ++d) {
      ++nb[d];
      double diff = u.at(nb) - c;
      g2 += diff * diff;
      --nb[d];
    }
    if (g2 != 0.0) visit(i, c, scale * std::sqrt(g2));
  });
}

template <int N>
double tv(const GridFunction<N>& u) {
  double s = 0.0;
  visit_tv_contributions(u, [&](const Index<N>&, double, double c) { s += c; });
  return s;
}

/// Total variation attributed to the cells selected by `region(cell, sample)`.
/// Interface terms belong to the cell owning the forward difference, so any
/// partition of the cells splits tv(u) additively.
template <int N, class Region>
double tv_restricted(const GridFunction<N>& u, Region&& region) {
  double s = 0.0;
  visit_tv_contributions(u, [&](const Index<N>& i, double v, double c) {
    if (region(i, v)) s += c;
  });
  return s;
}

namespace detail {

inline double gauss_legendre_unit_square(const std::function<double(double, double)>& f) {
  // 20-point Gauss-Legendre on [0,1], nodes from Newton iteration on P_20.
  constexpr int n = 20;
  static const auto rule = [] {
    std::array<std::pair<double, double>, n> r{};
    for (int i = 0; i < n; ++i) {
      double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
      double dp = 0.0;
      for (int it = 0; it < 100; ++it) {
        double p0 = 1.0, p1 = x;
        for (int k = 2; k <= n; ++k) {
          double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
          p0 = p1;
          p1 = p2;
        }
        dp = n * (x * p1 - p0) / (x * x - 1.0);
        double dx = p1 / dp;
        x -= dx;
        if (std::abs(dx) < 1e-16) break;
      }
      r[i] = {0.5 * (x + 1.0), 1.0 / ((1.0 - x * x) * dp * dp)};
    }
    return r;
  }();
  double s = 0.0;
  for (auto [xi, wi] : rule)
    for (auto [yj, wj] : rule) s += wi * wj * f(xi, yj);
  return s;
}

/// Mean of |x|^-1 over the unit cell [0,1]^N with a corner at the origin.
template <int N>
double corner_cell_mean_inverse_radius() {
  if constexpr (N == 2) {
    return 2.0 * std::log(1.0 + std::numbers::sqrt2);
  } else if constexpr (N == 3) {
    // Split the cube into three pyramids x_max = x_d; the radial factor
    // integrates in closed form, leaving a smooth integrand on [0,1]^2.
    static const double v = 1.5 * gauss_legendre_unit_square([](double s, double t) { return 1.0 / std::sqrt(1.0 + s * s + t * t); });
    return v;
  } else {
    static_assert(N == 2 || N == 3, "corner-cell weight implemented for N = 2, 3");
    return 0.0;
  }
}

}  // namespace detail

/// Sum of h^N |u| / |x_cell| with x_cell the cell center. The 2^N cells that
/// touch the origin use the exact cell mean of |x|^-1 instead.
template <int N>
double hardy_integral(const GridFunction<N>& u) {
  u.require_finite();
  const double h = std::ldexp(1.0, -u.level());
  const double corner_weight = detail::corner_cell_mean_inverse_radius<N>() / h;
  double s = 0.0;
  for_each_index(u.box(), [&](const Index<N>& i) {
    double v = u.at(i);
    if (v == 0.0) return;
    bool corner = true;
    double r2 = 0.0;
    for (int d = 0; d < N; ++d) {
      corner = corner && (i[d] == 0 || i[d] == -1);
      double x = (static_cast<double>(i[d]) + 0.5) * h;
      r2 += x * x;
    }
    s += std::abs(v) * (corner ? corner_weight : 1.0 / std::sqrt(r2));
  });
  return s * u.cell_volume();
}

}  // namespace bvlab
