#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "bvlab/errors.hpp"
#include "bvlab/fixtures.hpp"
#include "bvlab/grid.hpp"
#include "bvlab/measures.hpp"

namespace bvlab {

inline void require_dimension(int n) {
  if (n < 2) fail(ErrorCode::BadDimension, "dimension must be at least 2, got " + std::to_string(n));
}

inline double critical_exponent_of(int n) { return static_cast<double>(n) / (n - 1.0); }

/// sup { integral |u|^{1*} : tv(u) = 1 }, attained at (N V_N)^{-1} times the
/// unit-ball indicator.
inline double c0_constant(int n) {
  require_dimension(n);
  const double v = unit_ball_volume(n);
  return v * std::pow(n * v, -critical_exponent_of(n));
}

/// Samples of F on a grid, optionally with a closed form used for refinement.
struct GrowthFunction {
  std::vector<double> s;
  std::vector<double> f;
  std::function<double(double)> analytic;  // may be empty

  static GrowthFunction sample(std::function<double(double)> F, double lo, double hi, int count) {
    GrowthFunction g;
    g.analytic = F;
    for (int i = 0; i < count; ++i) {
      double x = lo + (hi - lo) * i / (count - 1.0);
      g.s.push_back(x);
      g.f.push_back(F(x));
    }
    return g;
  }
};

struct VariationalResult {
  std::string problem;
  int dim = 2;
  double value = 0.0;
  RadialProfile profile;
  // growth maximizer
  double t = 0.0, m = 0.0, R = 0.0, a = 0.0;
  double check = 0.0;  // F(t) V_N R^N
  // Hardy-perturbed minimizer
  double lambda = 0.0;
  double ball_value = 0.0;
  double lower_bound = 0.0;
  bool ball_is_minimizer = false;
  int best_start = -1;
  bool converged = true;
  int iterations = 0;
  std::vector<double> history;  // best start, one entry per sweep
};

namespace detail {

/// Golden-section search for the minimum of f on [lo, hi].
inline double golden_min(const std::function<double(double)>& f, double lo, double hi, int iters = 80) {
  const double g = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = lo, b = hi;
  double c = b - g * (b - a), d = a + g * (b - a);
  double fc = f(c), fd = f(d);
  for (int i = 0; i < iters && b - a > 1e-15 * (1.0 + std::abs(a) + std::abs(b)); ++i) {
    if (fc <= fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - g * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + g * (b - a);
      fd = f(d);
    }
  }
  return fc <= fd ? c : d;
}

}  // namespace detail

/// Maximizes F(s)/|s|^{1*} over the samples; ties go to the smallest |s|,
/// positive before negative.
inline VariationalResult solve_growth_maximizer(const GrowthFunction& F, int n) {
  require_dimension(n);
  if (F.s.size() != F.f.size() || F.s.size() < 3) fail(ErrorCode::FormatError, "growth function needs >= 3 samples");
  const double p = critical_exponent_of(n);
  std::vector<std::size_t> order(F.s.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return F.s[a] < F.s[b]; });

  auto ratio = [&](double s, double f) { return f / std::pow(std::abs(s), p); };
  std::optional<std::size_t> best;  // position in `order`
  double m = -HUGE_VAL;
  for (std::size_t r = 0; r < order.size(); ++r) {
    const double s = F.s[order[r]];
    if (s == 0.0) continue;
    const double q = ratio(s, F.f[order[r]]);
    if (!std::isfinite(q)) fail(ErrorCode::NonFiniteValue, "growth ratio is not finite at s = " + std::to_string(s));
    bool better = !best || q > m;
    if (best && q == m) {
      const double bs = F.s[order[*best]];
      better = std::abs(s) < std::abs(bs) || (std::abs(s) == std::abs(bs) && s > 0.0);
    }
    if (better) {
      best = r;
      m = q;
    }
  }
  if (!best || m <= 0.0) fail(ErrorCode::NoPositiveSupremum, "sup F(s)/|s|^{1*} is not positive");
  if (*best == 0 || *best + 1 == order.size())
    fail(ErrorCode::NotAttained, "ratio maximum sits on the edge of the sampled range");

  double t = F.s[order[*best]];
  double Ft = F.f[order[*best]];
  if (F.analytic) {
    double lo = F.s[order[*best - 1]], hi = F.s[order[*best + 1]];
    // Keep the bracket on one side of zero.
    if (t > 0.0) lo = std::max(lo, 0.5 * t);
    if (t < 0.0) hi = std::min(hi, 0.5 * t);
    auto neg = [&](double s) { return -ratio(s, F.analytic(s)); };
    double s = detail::golden_min(neg, lo, hi);
    double q = -neg(s);
    if (q > m) {
      m = q;
      t = s;
      Ft = F.analytic(s);
    }
  }

  VariationalResult res;
  res.problem = "growth_maximizer";
  res.dim = n;
  res.t = t;
  res.m = m;
  const double vn = unit_ball_volume(n);
  res.a = 1.0 / (n * vn);
  res.R = std::pow(res.a / std::abs(t), 1.0 / (n - 1));
  res.value = m * c0_constant(n);
  res.check = Ft * vn * std::pow(res.R, n);
  res.profile.dim = n;
  res.profile.knots = {res.R};
  res.profile.values = {std::pow(res.R, 1.0 - n) * res.a * (t < 0.0 ? -1.0 : 1.0)};
  return res;
}

/// Integral of F(w(|x|)) for a radial step profile, by midpoint shells on
/// [0, 2 * outer radius]; exact for step profiles whose knots fall on shell edges.
inline double radial_integral(const RadialProfile& w, const std::function<double(double)>& F, int shells = 4096) {
  const int n = w.dim;
  const double vn = unit_ball_volume(n);
  const double top = 2.0 * w.outer_radius();
  double s = 0.0, prev = 0.0;
  for (int i = 1; i <= shells; ++i) {
    const double r = top * i / shells;
    const double mid = 0.5 * (prev + r);
    s += F(w(mid)) * vn * (std::pow(r, n) - std::pow(prev, n));
    prev = r;
  }
  return s;
}

/// (1 - lambda/(N-1)) N V_N^{1/N}: the Hardy-perturbed energy of a normalized
/// ball indicator, for any radius.
inline double ball_energy(double lambda, int n, double R = 1.0) {
  require_dimension(n);
  if (!(lambda >= 0.0 && lambda < n - 1.0)) fail(ErrorCode::LambdaOutOfRange, "lambda must lie in [0, N-1)");
  if (!(R > 0.0)) fail(ErrorCode::FormatError, "ball radius must be positive");
  return (1.0 - lambda / (n - 1.0)) * n * std::pow(unit_ball_volume(n), 1.0 / n);
}

struct ShellParts {
  double tv = 0.0;
  double hardy = 0.0;
  double norm_power = 0.0;  // integral |u|^{1*}
};

/// Per-shell weights of a radial step profile: values[i] lives on
/// (knots[i-1], knots[i]] with knots[-1] = 0 and zero beyond the last knot.
struct ShellGeometry {
  int dim = 2;
  double p = 2.0;
  std::vector<double> sphere;  // N V_N r_i^{N-1}
  std::vector<double> hardy;   // N V_N / (N-1) (r_i^{N-1} - r_{i-1}^{N-1})
  std::vector<double> volume;  // V_N (r_i^N - r_{i-1}^N)

  ShellGeometry(int n, const std::vector<double>& knots) : dim(n), p(critical_exponent_of(n)) {
    const double vn = unit_ball_volume(n);
    double prev = 0.0;
    for (double r : knots) {
      sphere.push_back(n * vn * std::pow(r, n - 1));
      hardy.push_back(n * vn / (n - 1.0) * (std::pow(r, n - 1) - std::pow(prev, n - 1)));
      volume.push_back(vn * (std::pow(r, n) - std::pow(prev, n)));
      prev = r;
    }
  }

  ShellParts parts(const std::vector<double>& values) const {
    ShellParts s;
    for (std::size_t i = 0; i < values.size(); ++i) {
      const double next = i + 1 < values.size() ? values[i + 1] : 0.0;
      const double v = std::abs(values[i]);
      s.tv += std::abs(values[i] - next) * sphere[i];
      s.hardy += v * hardy[i];
      s.norm_power += (p == 2.0 ? v * v : std::pow(v, p)) * volume[i];
    }
    return s;
  }

  /// (tv - lambda * hardy) / ||u||_{1*}; +inf for the zero profile.
  double quotient(double lambda, const std::vector<double>& values) const {
    auto s = parts(values);
    if (s.norm_power <= 0.0) return HUGE_VAL;
    const double norm = p == 2.0 ? std::sqrt(s.norm_power) : std::pow(s.norm_power, 1.0 / p);
    return (s.tv - lambda * s.hardy) / norm;
  }
};

inline ShellParts shell_parts(int n, const std::vector<double>& knots, const std::vector<double>& values) {
  return ShellGeometry(n, knots).parts(values);
}

inline double rayleigh_quotient(double lambda, int n, const std::vector<double>& knots,
                                const std::vector<double>& values) {
  return ShellGeometry(n, knots).quotient(lambda, values);
}

struct HardyConfig {
  int knots = 64;
  double r_min = 1.0 / 64;
  double r_max = 64.0;
  int iters = 200;
  int random_starts = 3;
  std::uint64_t seed = 0;
  double tol = 1e-12;
  unsigned jobs = 1;
};

namespace detail {

struct DescentRun {
  std::vector<double> values;
  double value = HUGE_VAL;
  bool converged = false;
  int sweeps = 0;
  std::vector<double> history;
};

inline DescentRun coordinate_descent(double lambda, const ShellGeometry& geo, std::vector<double> v,
                                     const HardyConfig& cfg) {
  DescentRun run;
  double cur = geo.quotient(lambda, v);
  run.history.push_back(cur);
  for (int sweep = 0; sweep < cfg.iters; ++sweep) {
    const double start = cur;
    for (std::size_t i = 0; i < v.size(); ++i) {
      const double keep = v[i];
      auto at = [&](double x) {
        v[i] = x;
        return geo.quotient(lambda, v);
      };
      double hi = 2.0 * *std::max_element(v.begin(), v.end()) + 1e-300;
      std::vector<double> cands{detail::golden_min(at, 0.0, hi), 0.0};
      if (i > 0) cands.push_back(v[i - 1]);
      if (i + 1 < v.size()) cands.push_back(v[i + 1]);
      double best_x = keep, best = cur;
      for (double x : cands) {
        double q = at(x);
        if (q < best) {
          best = q;
          best_x = x;
        }
      }
      v[i] = best_x;
      cur = best;
    }
    // The quotient is scale free; rescale only when the values drift far.
    double peak = *std::max_element(v.begin(), v.end());
    if (peak > 0x1.0p20 || (peak > 0.0 && peak < 0x1.0p-20)) {
      for (double& x : v) x /= peak;
      cur = geo.quotient(lambda, v);
    }
    run.history.push_back(cur);
    run.sweeps = sweep + 1;
    if (start - cur <= cfg.tol * std::abs(start)) {
      run.converged = true;
      break;
    }
  }
  run.values = std::move(v);
  run.value = cur;
  return run;
}

}  // namespace detail

/// Minimizes the Hardy-perturbed quotient over nonnegative radial step
/// profiles on geometric knots. Starts: 0 ball, 1 annulus, 2.. random.
inline VariationalResult solve_hardy_minimizer(double lambda, int n, const HardyConfig& cfg = {}) {
  const double ball = ball_energy(lambda, n);
  if (cfg.knots < 4) fail(ErrorCode::FormatError, "need at least 4 knots");
  std::vector<double> knots(static_cast<std::size_t>(cfg.knots));
  for (int i = 0; i < cfg.knots; ++i)
    knots[i] = cfg.r_min * std::pow(cfg.r_max / cfg.r_min, static_cast<double>(i) / (cfg.knots - 1));

  std::vector<std::vector<double>> starts;
  std::vector<double> b(knots.size(), 0.0), ann(knots.size(), 0.0);
  for (std::size_t i = 0; i < knots.size(); ++i) b[i] = knots[i] <= 1.0 ? 1.0 : 0.0;
  for (std::size_t i = knots.size() / 4; i < knots.size() / 2; ++i) ann[i] = 1.0;
  starts.push_back(b);
  starts.push_back(ann);
  std::mt19937_64 rng(cfg.seed);
  for (int s = 0; s < cfg.random_starts; ++s) {
    std::vector<double> r(knots.size());
    for (double& x : r) x = static_cast<double>(rng() >> 11) * 0x1.0p-53;
    starts.push_back(r);
  }

  const ShellGeometry geo(n, knots);
  std::vector<detail::DescentRun> runs(starts.size());
  parallel_for(starts.size(), cfg.jobs,
               [&](std::size_t s) { runs[s] = detail::coordinate_descent(lambda, geo, starts[s], cfg); });
  std::size_t best = 0;
  for (std::size_t s = 1; s < runs.size(); ++s)
    if (runs[s].value < runs[best].value) best = s;

  const auto& run = runs[best];
  if (!run.converged) fail(ErrorCode::NonConvergence, "descent hit the sweep cap without settling");

  VariationalResult res;
  res.problem = "hardy_minimizer";
  res.dim = n;
  res.lambda = lambda;
  res.value = run.value;
  res.ball_value = ball;
  res.lower_bound = ball;
  res.best_start = static_cast<int>(best);
  res.converged = run.converged;
  res.iterations = run.sweeps;
  res.history = run.history;
  res.ball_is_minimizer = std::abs(run.value - ball) <= 1e-9 * ball;
  // Normalize to unit critical norm.
  auto parts = geo.parts(run.values);
  const double scale = 1.0 / std::pow(parts.norm_power, 1.0 / critical_exponent_of(n));
  res.profile.dim = n;
  res.profile.knots = knots;
  res.profile.values = run.values;
  for (double& v : res.profile.values) v *= scale;
  return res;
}

}  // namespace bvlab
