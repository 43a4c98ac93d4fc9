#pragma once

#include <algorithm>
#include <climits>
#include <cmath>
#include <functional>
#include <string>

#include "bvlab/measures.hpp"

namespace bvlab {

struct InequalityReport {
  std::string name;
  double lhs = 0.0;
  double rhs = 0.0;
  double constant = 0.0;
  double slack = 0.0;  // rhs - lhs
  double tolerance = 0.0;
  bool pass = false;
};

inline InequalityReport make_report(std::string name, double lhs, double rhs, double constant, double tolerance) {
  InequalityReport r{std::move(name), lhs, rhs, constant, rhs - lhs, tolerance, false};
  r.pass = r.slack >= -tolerance * std::abs(rhs);
  return r;
}

/// Sharp embedding constant N V_N^{1/N}.
inline double mazya_constant(int n) { return n * std::pow(unit_ball_volume(n), 1.0 / n); }

/// N V_N^{1/N} ||u||_{N/(N-1)} <= tv(u).
template <int N>
InequalityReport check_mazya(const GridFunction<N>& u, double tolerance = 1e-9) {
  if (u.is_zero()) fail(ErrorCode::ZeroFunction, "embedding check needs a nonzero function");
  const double c = mazya_constant(N);
  return make_report("mazya", c * critical_norm(u), tv(u), c, tolerance);
}

/// (N-1) * integral |u|/|x| <= tv(u).
template <int N>
InequalityReport check_hardy(const GridFunction<N>& u, double tolerance = 1e-9) {
  if (u.is_zero()) fail(ErrorCode::ZeroFunction, "Hardy check needs a nonzero function");
  return make_report("hardy", (N - 1) * hardy_integral(u), tv(u), N - 1.0, tolerance);
}

/// Scalar map applied samplewise; `derivative` is used only to bound |phi'|.
struct ScalarMap {
  std::function<double(double)> value;
  std::function<double(double)> derivative;
};

/// sup |phi'| over [lo, hi], sampled densely with the endpoints included.
inline double lipschitz_on_range(const ScalarMap& phi, double lo, double hi, int samples = 4097) {
  double best = 0.0;
  for (int i = 0; i < samples; ++i) {
    double s = lo + (hi - lo) * static_cast<double>(i) / (samples - 1);
    best = std::max(best, std::abs(phi.derivative(s)));
  }
  return best;
}

/// tv(phi(u)) <= sup_{range of u} |phi'| * tv(u). The range includes 0
/// because of the zero padding outside the support.
template <int N>
InequalityReport check_chain_rule(const GridFunction<N>& u, const ScalarMap& phi, double tolerance = 1e-9) {
  if (phi.value(0.0) != 0.0) fail(ErrorCode::SupportViolation, "phi(0) must vanish to keep compact support");
  u.require_finite();
  double lo = 0.0, hi = 0.0;
  for (double v : u.values()) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  const double lip = lipschitz_on_range(phi, lo, hi);
  auto composed = map_values(u, phi.value);
  return make_report("chain_rule", tv(composed), lip * tv(u), lip, tolerance);
}

/// Index of the value bands A_j = {|u| in (2^{(j-1)(N-1)}, 2^{(j+2)(N-1)}]}
/// containing |v|: all j with (j-1)(N-1) < log2|v| <= (j+2)(N-1).
template <int N>
std::pair<long, long> band_range(double v) {
  // Work with exact comparisons against powers of two.
  const double a = std::abs(v);
  int e = 0;
  std::frexp(a, &e);  // 2^{e-1} <= a < 2^e
  long lo = LONG_MAX, hi = LONG_MIN;
  const int k = N - 1;
  long start = static_cast<long>(std::floor(static_cast<double>(e) / k)) - 4;
  for (long j = start; j <= start + 8; ++j) {
    double lower = std::ldexp(1.0, static_cast<int>((j - 1) * k));
    double upper = std::ldexp(1.0, static_cast<int>((j + 2) * k));
    if (a > lower && a <= upper) {
      lo = std::min(lo, j);
      hi = std::max(hi, j);
    }
  }
  return {lo, hi};
}

/// sum_j tv restricted to band A_j <= 6 tv(u). Band membership goes by
/// sample value, lower-open and upper-closed.
template <int N>
InequalityReport check_layer_bound(const GridFunction<N>& u, double tolerance = 1e-9, int* active_bands = nullptr) {
  if (u.is_zero()) fail(ErrorCode::ZeroFunction, "layer bound needs a nonzero function");
  long jmin = LONG_MAX, jmax = LONG_MIN;
  for (double v : u.values()) {
    if (v == 0.0) continue;
    auto [lo, hi] = band_range<N>(v);
    jmin = std::min(jmin, lo);
    jmax = std::max(jmax, hi);
  }
  double lhs = 0.0;
  int active = 0;
  for (long j = jmin; j <= jmax; ++j) {
    bool hit = false;
    double part = tv_restricted(u, [&](const Index<N>&, double v) {
      if (v == 0.0) return false;
      auto [lo, hi] = band_range<N>(v);
      bool in = lo <= j && j <= hi;
      hit = hit || in;
      return in;
    });
    if (hit) ++active;
    lhs += part;
  }
  if (active_bands) *active_bands = active;
  return make_report("layer_bound", lhs, 6.0 * tv(u), 6.0, tolerance);
}

}  // namespace bvlab
