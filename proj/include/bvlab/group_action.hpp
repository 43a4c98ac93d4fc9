#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "bvlab/dyadic.hpp"
#include "bvlab/grid.hpp"
#include "bvlab/measures.hpp"

namespace bvlab {

/// g[j, y]: u -> 2^{(N-1) j} u(2^j (x - y)).
template <int N>
struct GroupElement {
  int j = 0;
  std::array<Dyadic, N> y{};

  static GroupElement identity() { return {}; }
  friend bool operator==(const GroupElement&, const GroupElement&) = default;
};

template <int N>
GroupElement<N> compose(const GroupElement<N>& a, const GroupElement<N>& b) {
  GroupElement<N> c;
  c.j = a.j + b.j;
  for (int d = 0; d < N; ++d) c.y[d] = a.y[d] + b.y[d].scaled_pow2(-a.j);
  return c;
}

template <int N>
GroupElement<N> inverse(const GroupElement<N>& g) {
  GroupElement<N> c;
  c.j = -g.j;
  for (int d = 0; d < N; ++d) c.y[d] = -g.y[d].scaled_pow2(g.j);
  return c;
}

/// |j - j'| + |y - y'|_1.
template <int N>
double separation(const GroupElement<N>& a, const GroupElement<N>& b) {
  double s = std::abs(a.j - b.j);
  for (int d = 0; d < N; ++d) s += std::abs((a.y[d] - b.y[d]).to_double());
  return s;
}

/// Exact action on a dyadic grid: u at level L maps to level L + j with the
/// same samples scaled by 2^{(N-1) j} and the box shifted by y / h'.
template <int N>
GridFunction<N> apply(const GroupElement<N>& g, const GridFunction<N>& u) {
  const int level = u.level() + g.j;
  check_level(level);
  Box<N> box = u.box();
  for (int d = 0; d < N; ++d) {
    auto shift = g.y[d].grid_index(level);
    if (!shift) fail(ErrorCode::IncompatibleTranslation, "translation " + g.y[d].to_string() + " is not a multiple of 2^-" + std::to_string(level));
    box.origin[d] += *shift;
  }
  std::vector<double> vals(u.values().begin(), u.values().end());
  if (g.j != 0)
    for (double& v : vals) v = std::ldexp(v, (N - 1) * g.j);
  return GridFunction<N>(level, box, std::move(vals));
}

struct LevelWindow {
  int lo = 0;
  int hi = 0;
};

struct LevelMax {
  int j = 0;
  double mass = 0.0;
};

template <class Element>
struct ScanResult {
  Element best{};
  double mass = 0.0;
  std::vector<LevelMax> table;
  LevelWindow window{};
  bool window_exhausted = false;  // best level sits on a window edge
};

/// Default window [-(L-2), L-2]: renormalized cubes keep at least 4 cells per side.
inline LevelWindow default_window(int level) {
  int top = level - 2;
  return {-std::abs(top), top};
}

namespace detail {

/// Summed-area table of |u| over a box, long double accumulation.
template <int N>
class BoxSums {
 public:
  explicit BoxSums(const GridFunction<N>& u) : box_(u.box()) {
    for (int d = 0; d < N; ++d) dims_[d] = static_cast<std::size_t>(box_.extent[d] + 1);
    std::size_t total = 1;
    for (int d = 0; d < N; ++d) total *= dims_[d];
    table_.assign(total, 0.0L);
    for_each_index(box_, [&](const Index<N>& i) {
      std::array<std::size_t, N> t{};
      for (int d = 0; d < N; ++d) t[d] = static_cast<std::size_t>(i[d] - box_.origin[d]) + 1;
      table_[flat(t)] = std::abs(u.at(i));
    });
    for (int d = 0; d < N; ++d) {
      std::size_t stride = 1;
      for (int e = N - 1; e > d; --e) stride *= dims_[e];
      for (std::size_t k = 0; k < total; ++k) {
        std::size_t coord = (k / stride) % dims_[d];
        if (coord > 0) table_[k] += table_[k - stride];
      }
    }
  }

  /// Sum of |u| over the cells [lo, lo + side) clipped to the data box.
  long double sum(const Index<N>& lo, const Index<N>& side) const {
    std::array<std::size_t, N> a{}, b{};
    for (int d = 0; d < N; ++d) {
      std::int64_t l = std::clamp<std::int64_t>(lo[d] - box_.origin[d], 0, box_.extent[d]);
      std::int64_t h = std::clamp<std::int64_t>(lo[d] + side[d] - box_.origin[d], 0, box_.extent[d]);
      if (h <= l) return 0.0L;
      a[d] = static_cast<std::size_t>(l);
      b[d] = static_cast<std::size_t>(h);
    }
    long double s = 0.0L;
    for (unsigned mask = 0; mask < (1u << N); ++mask) {
      std::array<std::size_t, N> t{};
      int parity = 0;
      for (int d = 0; d < N; ++d) {
        if (mask & (1u << d)) {
          t[d] = a[d];
          ++parity;
        } else {
          t[d] = b[d];
        }
      }
      s += (parity % 2 ? -1.0L : 1.0L) * table_[flat(t)];
    }
    return s;
  }

 private:
  std::size_t flat(const std::array<std::size_t, N>& t) const {
    std::size_t off = 0;
    for (int d = 0; d < N; ++d) off = off * dims_[d] + t[d];
    return off;
  }

  Box<N> box_;
  std::array<std::size_t, N> dims_{};
  std::vector<long double> table_;
};

struct Candidate {
  double mass = -1.0;
  int j = 0;
  std::array<std::int64_t, 3> pos{};

  /// Larger mass wins; ties go to the lexicographically smallest (j, position).
  bool beats(const Candidate& o) const {
    if (mass != o.mass) return mass > o.mass;
    if (j != o.j) return j < o.j;
    return pos < o.pos;
  }
};

}  // namespace detail

/// Multiscale concentration scan: maximizes mu(j, z) = 2^j * integral of |u|
/// over the cube z + [0, 2^-j)^N, with z ranging over all grid-aligned
/// positions (cell steps of u's grid) at every level j of the window.
template <int N>
ScanResult<GroupElement<N>> scan(const GridFunction<N>& u, std::optional<LevelWindow> window = std::nullopt,
                                 unsigned jobs = 1) {
  u.require_finite();
  const int L = u.level();
  LevelWindow w = window.value_or(default_window(L));
  w.hi = std::min(w.hi, L);  // cubes of at least one cell
  if (w.hi < w.lo) fail(ErrorCode::EmptyWindow, "scan window is empty");
  check_level(L - w.lo);

  ScanResult<GroupElement<N>> result;
  result.window = w;
  auto support = u.support();
  const int levels = w.hi - w.lo + 1;
  result.table.resize(static_cast<std::size_t>(levels));
  if (support.empty()) {
    for (int k = 0; k < levels; ++k) result.table[k] = {w.lo + k, 0.0};
    return result;
  }
  auto core = restrict_to(u, support);
  detail::BoxSums<N> sums(core);
  const double vol = u.cell_volume();

  std::vector<detail::Candidate> per_level(static_cast<std::size_t>(levels));
  parallel_for(static_cast<std::size_t>(levels), jobs, [&](std::size_t k) {
    const int j = w.lo + static_cast<int>(k);
    const std::int64_t side = std::int64_t{1} << (L - j);
    Box<N> positions;
    Index<N> sides{};
    for (int d = 0; d < N; ++d) {
      sides[d] = side;
      if (side >= support.extent[d]) {
        // Every covering placement sees the same cells; keep the smallest.
        positions.origin[d] = support.upper(d) - side;
        positions.extent[d] = 1;
      } else {
        positions.origin[d] = support.origin[d] - side + 1;
        positions.extent[d] = support.extent[d] + side - 1;
      }
    }
    detail::Candidate best;
    for_each_index(positions, [&](const Index<N>& z) {
      detail::Candidate c;
      c.mass = std::ldexp(static_cast<double>(sums.sum(z, sides)) * vol, j);
      c.j = j;
      for (int d = 0; d < N; ++d) c.pos[d] = z[d];
      if (c.beats(best)) best = c;
    });
    per_level[k] = best;
  });

  detail::Candidate best;
  for (std::size_t k = 0; k < per_level.size(); ++k) {
    result.table[k] = {per_level[k].j, per_level[k].mass};
    if (per_level[k].beats(best)) best = per_level[k];
  }
  result.mass = best.mass;
  result.best.j = best.j;
  for (int d = 0; d < N; ++d) result.best.y[d] = Dyadic(best.pos[d], L);
  result.window_exhausted = levels > 1 && (best.j == w.lo || best.j == w.hi);
  return result;
}

/// Group policy consumed by the generic extraction engine.
template <int N>
struct EuclideanGroup {
  using Geometry = Euclidean<N>;
  using Function = GridFunction<N>;
  using Element = GroupElement<N>;
  static constexpr int rank = N;

  static Function act(const Element& g, const Function& u) { return apply(g, u); }
  static Element invert(const Element& g) { return inverse(g); }
  static Element combine(const Element& a, const Element& b) { return compose(a, b); }
  static ScanResult<Element> concentration(const Function& u, std::optional<LevelWindow> w, unsigned jobs) {
    return scan(u, w, jobs);
  }
  static double sep(const Element& a, const Element& b) { return separation(a, b); }
  static double variation(const Function& u) { return tv(u); }

  static Element make(int j, const std::array<Dyadic, N>& t) { return Element{j, t}; }
  static std::array<Dyadic, N> translation(const Element& g) { return g.y; }

  /// Cells of the aligned unit cube [0,1)^N grown by `margin` units.
  static Box<N> unit_window(int level, int margin) {
    const std::int64_t n = std::int64_t{1} << level;
    Box<N> b;
    for (int d = 0; d < N; ++d) {
      b.origin[d] = -margin * n;
      b.extent[d] = (1 + 2 * margin) * n;
    }
    return b;
  }
};

}  // namespace bvlab
