#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "bvlab/errors.hpp"
#include "bvlab/group_action.hpp"
#include "bvlab/grid.hpp"
#include "bvlab/measures.hpp"

// Greedy profile extraction over a concentration group G. G supplies
// Function, Element, act, invert, combine, concentration (the scan), sep,
// variation, make, translation and unit_window; see EuclideanGroup and
// HeisenbergGroup.

namespace bvlab {

struct ExtractConfig {
  std::optional<double> delta;        // default 1e-2 * max_k variation(u_k)
  int n_max = 8;
  std::optional<int> tail_window;     // default max(ceil(K/2), min(K, 3))
  double tol_stab = 0.05;             // relative to the mean window mass
  std::optional<LevelWindow> window;  // scan levels, relative to each grid
  int margin = 1;                     // unit cells around the aligned profile box
  double budget_tol = 1e-6;
  unsigned jobs = 1;
};

enum class Termination { threshold, budget, max_profiles, error };

inline std::string to_string(Termination t) {
  switch (t) {
    case Termination::threshold: return "threshold";
    case Termination::budget: return "budget";
    case Termination::max_profiles: return "max_profiles";
    case Termination::error: return "error";
  }
  return "unknown";
}

template <class G>
struct Decomposition {
  using Function = typename G::Function;
  using Element = typename G::Element;

  std::vector<Function> profiles;
  std::vector<std::vector<Element>> params;  // params[n][k]
  std::vector<Function> remainders;
  std::vector<double> iteration_mass;        // tail scan mass seen by each iteration
  double final_mass = 0.0;                   // tail scan mass of the remainders
  double delta = 0.0;
  int tail_window = 0;
  bool window_exhausted = false;
  Termination termination = Termination::threshold;
  std::optional<ErrorCode> failure;
  std::string failure_detail;

  std::size_t size() const { return remainders.size(); }
  bool ok() const { return !failure.has_value(); }
};

inline int default_tail(int K) {
  int half = (K + 1) / 2;
  return std::min(K, std::max(half, std::min(K, 3)));
}

/// Cesaro average over `aligned`, restricted to `window` at `level`. Every
/// element is prolonged to `level` first. Stability: consecutive L1(window)
/// differences must stay below tol * M (M = mean window mass) and must not
/// grow by more than 0.1 tol M from one step to the next.
template <class Geom>
Field<Geom> weak_tail_limit(const std::vector<Field<Geom>>& aligned, int level, const Box<Geom::rank>& window,
                            double tol) {
  constexpr int R = Geom::rank;
  if (aligned.size() < 3) fail(ErrorCode::NonConvergentTail, "tail limit needs at least three aligned elements");
  if (window.empty()) fail(ErrorCode::EmptyWindow, "tail window is empty");
  for (const auto& a : aligned)
    if (a.level() > level) fail(ErrorCode::FormatError, "aligned element finer than the window level");

  std::vector<Field<Geom>> tail;
  tail.reserve(aligned.size());
  for (const auto& a : aligned) tail.push_back(restrict_to(to_level(a, level), window));

  // One-unit band around the window: mass there means the window clips the profile.
  Box<R> outer = window;
  for (int d = 0; d < R; ++d) {
    std::int64_t unit = std::int64_t{1} << (Geom::level_shift[d] * level);
    outer.origin[d] -= unit;
    outer.extent[d] += 2 * unit;
  }
  double mean_mass = 0.0;
  for (std::size_t i = 0; i < aligned.size(); ++i) {
    const auto fine = to_level(aligned[i], level);
    double inside = l1_mass(tail[i], window);
    double band = l1_mass(fine, outer) - inside;
    if (band > 0.01 * inside)
      fail(ErrorCode::WindowTooSmall, "window clips " + std::to_string(band / std::max(inside, 1e-300) * 100.0) +
                                          "% of an aligned element's mass");
    mean_mass += inside;
  }
  mean_mass /= static_cast<double>(aligned.size());

  const double bound = tol * mean_mass;
  double prev = -1.0;
  for (std::size_t i = 0; i + 1 < tail.size(); ++i) {
    double d = l1_distance(tail[i], tail[i + 1], window);
    if (d > bound)
      fail(ErrorCode::NonConvergentTail, "consecutive aligned elements differ by " + std::to_string(d / mean_mass) +
                                             " of the window mass");
    if (prev >= 0.0 && d > prev + 0.1 * bound) fail(ErrorCode::NonConvergentTail, "tail differences are not settling");
    prev = d;
  }

  // Long double keeps the mean of identical elements exact for any count.
  std::vector<long double> acc(window.size(), 0.0L);
  for (const auto& t : tail) {
    auto v = t.values();
    for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += v[i];
  }
  Field<Geom> avg(level, window);
  auto& vals = avg.mutable_values();
  const auto count = static_cast<long double>(tail.size());
  for (std::size_t i = 0; i < acc.size(); ++i) vals[i] = static_cast<double>(acc[i] / count);
  return trim(avg);
}

namespace detail {

template <class Geom>
Field<Geom> subtract_at_common_level(const Field<Geom>& v, const Field<Geom>& piece) {
  const int level = std::max(v.level(), piece.level());
  return trim(axpy(to_level(v, level), -1.0, to_level(piece, level)));
}

template <class G>
std::vector<ScanResult<typename G::Element>> scan_all(const std::vector<typename G::Function>& v,
                                                      const ExtractConfig& cfg) {
  std::vector<ScanResult<typename G::Element>> out(v.size());
  parallel_for(v.size(), cfg.jobs, [&](std::size_t k) { out[k] = G::concentration(v[k], cfg.window, 1); });
  return out;
}

}  // namespace detail

/// Greedy extraction. Library errors raised inside the loop end the run and
/// are recorded in `failure` so callers can still report what was found.
template <class G>
Decomposition<G> extract(const std::vector<typename G::Function>& seq, const ExtractConfig& cfg = {}) {
  using Function = typename G::Function;
  using Element = typename G::Element;
  using Geom = typename G::Geometry;
  if (seq.empty()) fail(ErrorCode::EmptyCorpus, "extraction needs a nonempty sequence");
  const int K = static_cast<int>(seq.size());

  Decomposition<G> dec;
  dec.remainders = seq;
  std::vector<double> tv_u(seq.size());
  parallel_for(seq.size(), cfg.jobs, [&](std::size_t k) { tv_u[k] = G::variation(seq[k]); });
  const double tv_max = *std::max_element(tv_u.begin(), tv_u.end());
  dec.delta = cfg.delta.value_or(1e-2 * tv_max);
  dec.tail_window = std::clamp(cfg.tail_window.value_or(default_tail(K)), 1, K);
  const int tail_begin = K - dec.tail_window;

  double budget_used = 0.0;
  try {
    for (int n = 0;; ++n) {
      auto scans = detail::scan_all<G>(dec.remainders, cfg);
      double mass = 0.0;
      for (int k = tail_begin; k < K; ++k) {
        mass = std::max(mass, scans[k].mass);
        dec.window_exhausted = dec.window_exhausted || scans[k].window_exhausted;
      }
      dec.final_mass = mass;
      if (mass < dec.delta) {
        dec.termination = Termination::threshold;
        break;
      }
      if (n >= cfg.n_max) {
        dec.termination = Termination::max_profiles;
        dec.failure = ErrorCode::BudgetExceeded;
        dec.failure_detail = "scan mass " + std::to_string(mass) + " still above delta after " + std::to_string(n) + " profiles";
        break;
      }
      if (!dec.iteration_mass.empty() && !(mass < dec.iteration_mass.back())) {
        dec.termination = Termination::error;
        dec.failure = ErrorCode::NonConvergentTail;
        dec.failure_detail = "scan mass stopped decreasing";
        break;
      }
      dec.iteration_mass.push_back(mass);

      std::vector<Function> aligned;
      int level = INT32_MIN;
      for (int k = tail_begin; k < K; ++k) {
        aligned.push_back(G::act(G::invert(scans[k].best), dec.remainders[k]));
        level = std::max(level, aligned.back().level());
      }
      Function w = weak_tail_limit<Geom>(aligned, level, G::unit_window(level, cfg.margin), cfg.tol_stab);

      // Every k must be able to place w on its own grid exactly.
      int needed = w.level();
      for (int k = 0; k < K; ++k) needed = std::max(needed, dec.remainders[k].level() - scans[k].best.j);
      if (needed > w.level()) w = refine(w, needed - w.level());

      const double tv_w = G::variation(w);
      if (budget_used + tv_w > (1.0 + cfg.budget_tol) * tv_max) {
        dec.termination = Termination::budget;
        break;
      }
      budget_used += tv_w;

      std::vector<Element> ps(seq.size());
      std::vector<Function> next(seq.size());
      parallel_for(seq.size(), cfg.jobs, [&](std::size_t k) {
        ps[k] = scans[k].best;
        next[k] = detail::subtract_at_common_level(dec.remainders[k], G::act(ps[k], w));
      });
      dec.profiles.push_back(std::move(w));
      dec.params.push_back(std::move(ps));
      dec.remainders = std::move(next);
    }
  } catch (const Error& e) {
    dec.termination = Termination::error;
    dec.failure = e.code();
    dec.failure_detail = e.what();
  }
  return dec;
}

/// sum_n apply(params[n][k], w_n) + r_k, assembled at the finest level involved.
template <class G>
typename G::Function reconstruct(const Decomposition<G>& dec, std::size_t k) {
  auto acc = dec.remainders.at(k);
  for (std::size_t n = 0; n < dec.profiles.size(); ++n) {
    auto piece = G::act(dec.params[n][k], dec.profiles[n]);
    const int level = std::max(acc.level(), piece.level());
    acc = axpy(to_level(acc, level), 1.0, to_level(piece, level));
  }
  return acc;
}

struct SeparationPair {
  int p = 0, q = 0;
  double sep_final = 0.0;
  double slope = 0.0;  // mean increment over the tail
  bool monotone = true;
  bool merged = false;  // below sep_min at k = K
};

struct SeparationReport {
  double sep_min = 2.0;
  std::vector<SeparationPair> pairs;
  bool pass = true;
};

template <class G>
SeparationReport verify_separation(const Decomposition<G>& dec, double sep_min = 2.0) {
  SeparationReport rep;
  rep.sep_min = sep_min;
  const int K = static_cast<int>(dec.size());
  const int n = static_cast<int>(dec.profiles.size());
  const int begin = std::max(0, K - std::max(dec.tail_window, 1));
  for (int p = 0; p < n; ++p)
    for (int q = p + 1; q < n; ++q) {
      SeparationPair pr{p, q};
      double prev = -1.0, first = 0.0;
      for (int k = begin; k < K; ++k) {
        double s = G::sep(dec.params[p][k], dec.params[q][k]);
        if (k == begin) first = s;
        if (prev >= 0.0 && s < prev) pr.monotone = false;
        prev = s;
      }
      pr.sep_final = prev;
      pr.slope = K - 1 > begin ? (prev - first) / (K - 1 - begin) : 0.0;
      pr.merged = pr.sep_final < sep_min;
      rep.pass = rep.pass && pr.monotone && !pr.merged;
      rep.pairs.push_back(pr);
    }
  return rep;
}

struct EnergyLedger {
  std::vector<double> tv_u;
  double tv_profiles = 0.0;
  std::vector<double> tv_remainder;
  std::vector<double> critical_norm_remainder;
  std::vector<double> brezis_lieb_residual;
  double brezis_lieb_relative = 0.0;  // at k = K, divided by ||u_K||^{1*}_{1*}
  double lower_slack = 0.0;           // tv(u_K) - sum tv(w)
  double upper_slack = 0.0;           // sum tv(w) + tv(r_K) - tv(u_K)
  double tolerance = 0.05;
  bool lower_ok = false;
  bool upper_ok = false;
  double cocompact_constant = 0.0;    // ||r_K||_{1*} / delta^{1/N'}
};

template <class G>
EnergyLedger energy_ledger(const std::vector<typename G::Function>& seq, const Decomposition<G>& dec,
                           double tolerance = 0.05) {
  using Geom = typename G::Geometry;
  if (seq.size() != dec.size()) fail(ErrorCode::MismatchedDecomposition, "sequence and decomposition lengths differ");
  for (const auto& p : dec.params)
    if (p.size() != seq.size()) fail(ErrorCode::MismatchedDecomposition, "parameter list length differs from the sequence");
  const double p = critical_exponent<Geom>();
  const std::size_t K = seq.size();

  EnergyLedger led;
  led.tolerance = tolerance;
  led.tv_u.resize(K);
  led.tv_remainder.resize(K);
  led.critical_norm_remainder.resize(K);
  led.brezis_lieb_residual.resize(K);
  double profile_power = 0.0;
  for (const auto& w : dec.profiles) {
    led.tv_profiles += G::variation(w);
    profile_power += lp_power(w, p);
  }
  for (std::size_t k = 0; k < K; ++k) {
    led.tv_u[k] = G::variation(seq[k]);
    led.tv_remainder[k] = G::variation(dec.remainders[k]);
    led.critical_norm_remainder[k] = lp_norm(dec.remainders[k], p);
    led.brezis_lieb_residual[k] =
        std::abs(lp_power(seq[k], p) - profile_power - lp_power(dec.remainders[k], p));
  }
  const double tvK = led.tv_u.back();
  led.lower_slack = tvK - led.tv_profiles;
  led.upper_slack = led.tv_profiles + led.tv_remainder.back() - tvK;
  led.lower_ok = led.lower_slack >= -tolerance * tvK;
  led.upper_ok = led.upper_slack >= -tolerance * tvK;
  const double uK = lp_power(seq.back(), p);
  led.brezis_lieb_relative = uK > 0.0 ? led.brezis_lieb_residual.back() / uK : led.brezis_lieb_residual.back();
  if (dec.delta > 0.0) led.cocompact_constant = led.critical_norm_remainder.back() / std::pow(dec.delta, 1.0 / p);
  return led;
}

}  // namespace bvlab
