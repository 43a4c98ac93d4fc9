#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <exception>
#include <functional>
#include <span>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "bvlab/errors.hpp"

namespace bvlab {

template <int R>
using Index = std::array<std::int64_t, R>;

/// Axis-aligned block of cells [origin, origin + extent). Extents may be zero.
template <int R>
struct Box {
  Index<R> origin{};
  Index<R> extent{};

  std::int64_t upper(int d) const { return origin[d] + extent[d]; }

  std::size_t size() const {
    std::size_t n = 1;
    for (int d = 0; d < R; ++d) n *= static_cast<std::size_t>(std::max<std::int64_t>(extent[d], 0));
    return n;
  }
  bool empty() const { return size() == 0; }

  bool contains(const Index<R>& i) const {
    for (int d = 0; d < R; ++d)
      if (i[d] < origin[d] || i[d] >= upper(d)) return false;
    return true;
  }

  /// Row-major offset, last dimension fastest.
  std::size_t offset(const Index<R>& i) const {
    std::size_t off = 0;
    for (int d = 0; d < R; ++d) off = off * static_cast<std::size_t>(extent[d]) + static_cast<std::size_t>(i[d] - origin[d]);
    return off;
  }

  Index<R> index(std::size_t off) const {
    Index<R> i{};
    for (int d = R - 1; d >= 0; --d) {
      auto e = static_cast<std::size_t>(extent[d]);
      i[d] = origin[d] + static_cast<std::int64_t>(off % e);
      off /= e;
    }
    return i;
  }

  /// Box grown by `lo` cells below and `hi` cells above in every dimension.
  Box grown(std::int64_t lo, std::int64_t hi) const {
    Box b = *this;
    for (int d = 0; d < R; ++d) {
      b.origin[d] -= lo;
      b.extent[d] += lo + hi;
    }
    return b;
  }

  friend bool operator==(const Box&, const Box&) = default;
};

template <int R>
Box<R> bounding_union(const Box<R>& a, const Box<R>& b) {
  if (a.empty()) return b;
  if (b.empty()) return a;
  Box<R> u;
  for (int d = 0; d < R; ++d) {
    u.origin[d] = std::min(a.origin[d], b.origin[d]);
    u.extent[d] = std::max(a.upper(d), b.upper(d)) - u.origin[d];
  }
  return u;
}

/// Visits every index of `box` in row-major order.
template <int R, class F>
void for_each_index(const Box<R>& box, F&& f) {
  if (box.empty()) return;
  Index<R> i = box.origin;
  while (true) {
    f(static_cast<const Index<R>&>(i));
    int d = R - 1;
    while (d >= 0) {
      if (++i[d] < box.upper(d)) break;
      i[d] = box.origin[d];
      --d;
    }
    if (d < 0) return;
  }
}

// Geometries. `level_shift[d]` is log2 of the per-level refinement factor
// along axis d; the homogeneous dimension is their sum.

template <int N>
struct Euclidean {
  static_assert(N >= 1 && N <= 3);
  static constexpr int rank = N;
  static constexpr std::array<int, N> level_shift = [] {
    std::array<int, N> s{};
    s.fill(1);
    return s;
  }();
  static constexpr int homogeneous_dim = N;
  static constexpr const char* name = "euclidean";
};

struct HeisenbergGeometry {
  static constexpr int rank = 3;
  static constexpr std::array<int, 3> level_shift{1, 1, 2};
  static constexpr int homogeneous_dim = 4;
  static constexpr const char* name = "heisenberg";
};

template <class Geom>
inline double cell_volume(int level) {
  return std::ldexp(1.0, -Geom::homogeneous_dim * level);
}

template <class Geom>
constexpr double critical_exponent() {
  constexpr double q = Geom::homogeneous_dim;
  return q / (q - 1.0);
}

/// Upper bound on |level|, overridable through BVDECOMP_LEVEL_CAP.
inline int level_cap() {
  static const int cap = [] {
    if (const char* env = std::getenv("BVDECOMP_LEVEL_CAP")) {
      int v = std::atoi(env);
      if (v > 0) return v;
    }
    return 24;
  }();
  return cap;
}

inline void check_level(int level) {
  if (std::abs(level) > level_cap())
    fail(ErrorCode::LevelOverflow, "grid level " + std::to_string(level) + " exceeds cap " + std::to_string(level_cap()));
}

/// Compactly supported function sampled one value per cell on a dyadic grid
/// of level L (spacing 2^-L per unit of level_shift). Values outside the box
/// are zero.
template <class Geom>
class Field {
 public:
  static constexpr int rank = Geom::rank;
  using geometry = Geom;
  using box_type = Box<rank>;
  using index_type = Index<rank>;

  Field() = default;
  Field(int level, box_type box) : level_(level), box_(box), values_(box.size(), 0.0) {}
  Field(int level, box_type box, std::vector<double> values) : level_(level), box_(box), values_(std::move(values)) {
    if (values_.size() != box_.size()) fail(ErrorCode::FormatError, "value count does not match box size");
  }

  int level() const { return level_; }
  const box_type& box() const { return box_; }
  std::span<const double> values() const { return values_; }
  std::vector<double>& mutable_values() { return values_; }

  double at(const index_type& i) const { return box_.contains(i) ? values_[box_.offset(i)] : 0.0; }
  double& ref(const index_type& i) { return values_[box_.offset(i)]; }

  double cell_volume() const { return bvlab::cell_volume<Geom>(level_); }

  bool is_zero() const {
    return std::all_of(values_.begin(), values_.end(), [](double v) { return v == 0.0; });
  }

  void require_finite() const {
    for (double v : values_)
      if (!std::isfinite(v)) fail(ErrorCode::NonFiniteValue, "grid function holds a non-finite sample");
  }

  /// Bounding box of the nonzero samples (empty box for the zero function).
  box_type support() const {
    index_type lo{}, hi{};
    lo.fill(INT64_MAX);
    hi.fill(INT64_MIN);
    bool any = false;
    for_each_index(box_, [&](const index_type& i) {
      if (values_[box_.offset(i)] != 0.0) {
        any = true;
        for (int d = 0; d < rank; ++d) {
          lo[d] = std::min(lo[d], i[d]);
          hi[d] = std::max(hi[d], i[d]);
        }
      }
    });
    box_type b;
    if (!any) return b;
    for (int d = 0; d < rank; ++d) {
      b.origin[d] = lo[d];
      b.extent[d] = hi[d] - lo[d] + 1;
    }
    return b;
  }

  friend bool operator==(const Field&, const Field&) = default;

 private:
  int level_ = 0;
  box_type box_{};
  std::vector<double> values_;
};

template <int N>
using GridFunction = Field<Euclidean<N>>;

using HGridFunction = Field<HeisenbergGeometry>;

/// Copy of `u` on `box` (same level), zero-filled where `u` has no samples.
template <class Geom>
Field<Geom> restrict_to(const Field<Geom>& u, const Box<Geom::rank>& box) {
  Field<Geom> out(u.level(), box);
  auto& vals = out.mutable_values();
  for_each_index(box, [&](const Index<Geom::rank>& i) { vals[box.offset(i)] = u.at(i); });
  return out;
}

template <class Geom>
Field<Geom> trim(const Field<Geom>& u) {
  return restrict_to(u, u.support());
}

/// Piecewise-constant prolongation by `levels` dyadic levels: every cell is
/// split into its children, which inherit the parent value.
template <class Geom>
Field<Geom> refine(const Field<Geom>& u, int levels) {
  if (levels == 0) return u;
  constexpr int R = Geom::rank;
  check_level(u.level() + levels);
  Index<R> factor{};
  Box<R> box;
  for (int d = 0; d < R; ++d) {
    factor[d] = std::int64_t{1} << (Geom::level_shift[d] * levels);
    box.origin[d] = u.box().origin[d] * factor[d];
    box.extent[d] = u.box().extent[d] * factor[d];
  }
  Field<Geom> out(u.level() + levels, box);
  auto& vals = out.mutable_values();
  for_each_index(box, [&](const Index<R>& i) {
    Index<R> parent{};
    for (int d = 0; d < R; ++d) parent[d] = (i[d] - box.origin[d]) / factor[d] + u.box().origin[d];
    vals[box.offset(i)] = u.at(parent);
  });
  return out;
}

inline std::int64_t floor_div(std::int64_t a, std::int64_t b) {
  std::int64_t q = a / b;
  if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
  return q;
}

/// Restriction by `levels` dyadic levels: parent value = mean of children.
/// Exact inverse of refine().
template <class Geom>
Field<Geom> coarsen(const Field<Geom>& u, int levels) {
  if (levels == 0) return u;
  constexpr int R = Geom::rank;
  check_level(u.level() - levels);
  Index<R> factor{};
  Box<R> box;
  double children = 1.0;
  for (int d = 0; d < R; ++d) {
    factor[d] = std::int64_t{1} << (Geom::level_shift[d] * levels);
    children *= static_cast<double>(factor[d]);
    box.origin[d] = floor_div(u.box().origin[d], factor[d]);
    std::int64_t hi = floor_div(u.box().upper(d) - 1, factor[d]) + 1;
    box.extent[d] = u.box().extent[d] > 0 ? hi - box.origin[d] : 0;
  }
  Field<Geom> out(u.level() - levels, box);
  // Extended accumulator: a block of equal children sums exactly, so
  // coarsen(refine(u)) reproduces u bit for bit.
  std::vector<long double> acc(box.size(), 0.0L);
  for_each_index(u.box(), [&](const Index<R>& i) {
    Index<R> parent{};
    for (int d = 0; d < R; ++d) parent[d] = floor_div(i[d], factor[d]);
    acc[box.offset(parent)] += u.at(i);
  });
  auto& vals = out.mutable_values();
  for (std::size_t k = 0; k < acc.size(); ++k) vals[k] = static_cast<double>(acc[k] / children);
  return out;
}

template <class Geom>
Field<Geom> to_level(const Field<Geom>& u, int level) {
  if (level >= u.level()) return refine(u, level - u.level());
  return coarsen(u, u.level() - level);
}

/// a + scale * b on the union of both boxes; levels must agree.
template <class Geom>
Field<Geom> axpy(const Field<Geom>& a, double scale, const Field<Geom>& b) {
  if (a.level() != b.level()) fail(ErrorCode::FormatError, "axpy on grids of different levels");
  auto box = bounding_union(a.box(), b.box());
  Field<Geom> out = (box == a.box()) ? a : restrict_to(a, box);
  auto& vals = out.mutable_values();
  for_each_index(b.box(), [&](const Index<Geom::rank>& i) { vals[box.offset(i)] += scale * b.at(i); });
  return out;
}

template <class Geom>
Field<Geom> scaled(const Field<Geom>& u, double c) {
  std::vector<double> v(u.values().begin(), u.values().end());
  for (double& x : v) x *= c;
  return Field<Geom>(u.level(), u.box(), std::move(v));
}

template <class Geom, class F>
Field<Geom> map_values(const Field<Geom>& u, F&& f) {
  std::vector<double> v(u.values().begin(), u.values().end());
  for (double& x : v) x = f(x);
  return Field<Geom>(u.level(), u.box(), std::move(v));
}

/// L1 distance on `box` (same level).
template <class Geom>
double l1_distance(const Field<Geom>& a, const Field<Geom>& b, const Box<Geom::rank>& box) {
  double s = 0.0;
  for_each_index(box, [&](const Index<Geom::rank>& i) { s += std::abs(a.at(i) - b.at(i)); });
  return s * a.cell_volume();
}

template <class Geom>
double l1_distance(const Field<Geom>& a, const Field<Geom>& b) {
  return l1_distance(a, b, bounding_union(a.box(), b.box()));
}

template <class Geom>
double l1_mass(const Field<Geom>& u, const Box<Geom::rank>& box) {
  double s = 0.0;
  for_each_index(box, [&](const Index<Geom::rank>& i) { s += std::abs(u.at(i)); });
  return s * u.cell_volume();
}

/// Runs body(i) for i in [0, n) on up to `jobs` threads. Results must be
/// written to per-index slots so the outcome is independent of scheduling.
template <class F>
void parallel_for(std::size_t n, unsigned jobs, F&& body) {
  if (jobs <= 1 || n <= 1) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  jobs = static_cast<unsigned>(std::min<std::size_t>(jobs, n));
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errors(jobs);
  pool.reserve(jobs);
  for (unsigned t = 0; t < jobs; ++t)
    pool.emplace_back([&, t] {
      try {
        for (std::size_t i = t; i < n; i += jobs) body(i);
      } catch (...) {
        errors[t] = std::current_exception();
      }
    });
  for (auto& th : pool) th.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

}  // namespace bvlab
