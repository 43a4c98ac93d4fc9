// Acceptance run: one PASS/FAIL line per criterion, nonzero exit if any fail.
// Usage: acceptance <scenario dir>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "bvlab/decomposition.hpp"
#include "bvlab/fixtures.hpp"
#include "bvlab/group_action.hpp"
#include "bvlab/heisenberg.hpp"
#include "bvlab/inequalities.hpp"
#include "bvlab/report.hpp"
#include "bvlab/scenario.hpp"
#include "bvlab/variational.hpp"

using namespace bvlab;

namespace {

constexpr double kPi = std::numbers::pi;

struct Outcome {
  bool pass = false;
  std::string summary;
  json data;  // deterministic content only; compared byte for byte by criterion 10
};

struct Context {
  std::filesystem::path scenarios;
  unsigned jobs = 1;
  std::uint64_t seed = 20240611;
};

double rel_change(double before, double after) {
  return before == 0.0 ? std::abs(after) : std::abs(after - before) / std::abs(before);
}

template <class Geom>
double distance(const Field<Geom>& a, const Field<Geom>& b) {
  const int level = std::max(a.level(), b.level());
  return l1_distance(to_level(a, level), to_level(b, level));
}

template <int N>
GridFunction<N> random_field(std::mt19937_64& rng, int level, int max_extent) {
  std::uniform_int_distribution<int> ext(1, max_extent), org(-10, 10);
  std::uniform_real_distribution<double> val(-2.0, 2.0);
  Box<N> b;
  for (int d = 0; d < N; ++d) {
    b.origin[d] = org(rng);
    b.extent[d] = ext(rng);
  }
  GridFunction<N> u(level, b);
  for (double& x : u.mutable_values()) x = val(rng);
  return u;
}

// 1. tv and the critical norm are invariant under the group action.
Outcome isometries(const Context& ctx) {
  std::mt19937_64 rng(ctx.seed);
  double worst = 0.0;
  int pairs = 0;
  auto euclid = [&]<int N>(std::integral_constant<int, N>) {
    for (int t = 0; t < 100; ++t, ++pairs) {
      auto u = random_field<N>(rng, static_cast<int>(rng() % 5), N == 2 ? 12 : 6);
      GroupElement<N> g;
      g.j = static_cast<int>(rng() % 9) - 4;
      for (auto& c : g.y) c = Dyadic(static_cast<std::int64_t>(rng() % 201) - 100, u.level() + g.j);
      auto v = apply(g, u);
      worst = std::max({worst, rel_change(tv(u), tv(v)), rel_change(critical_norm(u), critical_norm(v))});
    }
  };
  euclid(std::integral_constant<int, 2>{});
  euclid(std::integral_constant<int, 3>{});
  for (int t = 0; t < 100; ++t, ++pairs) {
    const int level = static_cast<int>(rng() % 3);
    Box<3> b{{static_cast<std::int64_t>(rng() % 9) - 4, static_cast<std::int64_t>(rng() % 9) - 4,
              static_cast<std::int64_t>(rng() % 17) - 8},
             {1 + static_cast<std::int64_t>(rng() % 5), 1 + static_cast<std::int64_t>(rng() % 5),
              1 + static_cast<std::int64_t>(rng() % 9)}};
    HGridFunction u(level, b);
    std::uniform_real_distribution<double> val(-2.0, 2.0);
    for (double& x : u.mutable_values()) x = val(rng);
    HGroupElement g{static_cast<int>(rng() % 5) - 2, {}};
    const int lg = level + g.j;
    g.eta = {Dyadic(2 * (static_cast<std::int64_t>(rng() % 21) - 10), lg),
             Dyadic(2 * (static_cast<std::int64_t>(rng() % 21) - 10), lg),
             Dyadic(static_cast<std::int64_t>(rng() % 201) - 100, 2 * lg)};
    auto v = h_apply(g, u);
    worst = std::max({worst, rel_change(horizontal_tv(u), horizontal_tv(v)),
                      rel_change(critical_norm(u), critical_norm(v))});
  }
  Outcome o;
  o.pass = worst <= 1e-12;
  char buf[96];
  std::snprintf(buf, sizeof buf, "%d pairs, worst relative change %.1e", pairs, worst);
  o.summary = buf;
  o.data = {{"pairs", pairs}, {"worst_relative_change", worst}};
  return o;
}

// 2. tv / ||u||_2 approaches 2 sqrt(pi) from above as the mollifier shrinks.
Outcome mazya(const Context&) {
  const double sharp = 2.0 * std::sqrt(kPi);
  Outcome o;
  o.pass = true;
  double prev = HUGE_VAL;
  std::string s;
  json rows = json::array();
  for (double eps : {1.0 / 8, 1.0 / 16, 1.0 / 32}) {
    FixtureParams p;
    p.level = 8;
    p.eps = eps;
    auto u = mollified_ball<2>(p);
    const double ratio = tv(u) / lp_norm(u, 2.0);
    const double err = ratio / sharp - 1.0;
    o.pass = o.pass && err >= 0.0 && err <= 0.03 && err < prev;
    prev = err;
    rows.push_back({{"eps", eps}, {"ratio", ratio}, {"relative_error", err}});
    char buf[64];
    std::snprintf(buf, sizeof buf, "%s%.2f%%", s.empty() ? "" : ", ", 100.0 * err);
    s += buf;
  }
  o.summary = "excess over 2 sqrt(pi) at eps 1/8, 1/16, 1/32: " + s;
  o.data = {{"sharp", sharp}, {"rows", rows}};
  return o;
}

// 3. (N-1) hardy / tv near 1 for centered balls, smaller off center.
Outcome hardy(const Context&) {
  Outcome o;
  o.pass = true;
  json rows = json::array();
  double lo = HUGE_VAL, hi = 0.0, off_max = 0.0;
  for (double eps : {1.0 / 8, 1.0 / 16, 1.0 / 32}) {
    FixtureParams p;
    p.level = 8;
    p.eps = eps;
    auto c = check_hardy(mollified_ball<2>(p));
    const double centered = c.lhs / c.rhs;
    p.center = {0.5, 0.25};
    auto f = check_hardy(mollified_ball<2>(p));
    const double off = f.lhs / f.rhs;
    o.pass = o.pass && centered >= 0.97 && centered <= 1.01 && off < centered;
    lo = std::min(lo, centered);
    hi = std::max(hi, centered);
    off_max = std::max(off_max, off);
    rows.push_back({{"dim", 2}, {"eps", eps}, {"centered", centered}, {"off_center", off}});
  }
  {
    FixtureParams p;
    p.level = 6;
    p.eps = 1.0 / 8;
    auto c = check_hardy(mollified_ball<3>(p));
    const double centered = c.lhs / c.rhs;
    p.center = {0.5, 0.25, 0.0};
    auto f = check_hardy(mollified_ball<3>(p));
    const double off = f.lhs / f.rhs;
    o.pass = o.pass && centered >= 0.97 && centered <= 1.01 && off < centered;
    lo = std::min(lo, centered);
    hi = std::max(hi, centered);
    off_max = std::max(off_max, off);
    rows.push_back({{"dim", 3}, {"eps", p.eps}, {"centered", centered}, {"off_center", off}});
  }
  char buf[160];
  std::snprintf(buf, sizeof buf, "centered ratios in [%.4f, %.4f], off-center at most %.4f", lo, hi, off_max);
  o.summary = buf;
  o.data = {{"rows", rows}};
  return o;
}

// 4. Layer bound over a mixed corpus.
Outcome layer_bound(const Context& ctx) {
  std::mt19937_64 rng(ctx.seed + 4);
  std::vector<std::function<double(int*)>> corpus;
  auto add = [&](auto u) {
    corpus.push_back([u](int* active) {
      auto r = check_layer_bound(u, 1e-12, active);
      return r.lhs / r.rhs * 6.0;  // ratio to tv
    });
  };
  for (int i = 0; i < 16; ++i) add(random_field<2>(rng, i % 6, 12));
  for (int i = 0; i < 8; ++i) add(random_field<3>(rng, i % 3, 6));
  for (double amp : {1e-3, 0.7, 1.0, 37.0, 1e4}) {
    FixtureParams p;
    p.level = 6;
    p.amplitude = amp;
    add(mollified_ball<2>(p));
    add(ball<2>(p));
  }
  for (double eps : {1.0 / 8, 1.0 / 4}) {
    FixtureParams p;
    p.level = 5;
    p.eps = eps;
    p.center = {0.25, -0.5, 0.125};
    add(mollified_ball<3>(p));
  }
  for (int count : {1, 3, 5}) {
    FixtureParams p;
    p.level = 4;
    p.count = count;
    p.spacing = 2.0;
    p.amplitude = 3.0;
    add(multibump<2>(p));
  }
  // Radial staircases crossing many value bands.
  for (int steps : {3, 6, 10, 14}) {
    RadialProfile prof;
    prof.dim = 2;
    for (int i = 0; i < steps; ++i) {
      prof.knots.push_back(0.2 * (i + 1));
      prof.values.push_back(std::ldexp(1.0, steps - 2 * i));
    }
    FixtureParams p;
    p.level = 6;
    p.profile = prof;
    add(radial<2>(p));
  }
  add(unit_plateau<2>(5, 2.0));
  add(unit_plateau<3>(3, 0.3));
  add(unit_bump<2>(6, 1.0));
  add(unit_bump<3>(3, 5.0));
  add(scaled(unit_bump<2>(5, 1.0), -8.0));
  add(axpy(unit_bump<2>(5, 1.0), -1.0, apply(GroupElement<2>{1, {Dyadic(1, 2), Dyadic(0)}}, unit_bump<2>(4, 1.0))));
  add(map_values(random_field<2>(rng, 3, 10), [](double v) { return std::ldexp(v, 12); }));

  int violations = 0;
  double worst = 0.0;
  int bands = 0;
  for (auto& f : corpus) {
    int active = 0;
    double r = f(&active);
    bands = std::max(bands, active);
    worst = std::max(worst, r);
    if (r > 6.0) ++violations;
  }
  Outcome o;
  o.pass = violations == 0 && corpus.size() == 50;
  char buf[160];
  std::snprintf(buf, sizeof buf, "%zu fixtures, %d violations, worst sum/tv = %.4f (bound 6), up to %d active bands",
                corpus.size(), violations, worst, bands);
  o.summary = buf;
  o.data = {{"fixtures", corpus.size()}, {"violations", violations}, {"worst_ratio", worst}, {"max_active_bands", bands}};
  return o;
}

// Shared checks for criteria 5 and 9.
template <class G>
Outcome recover(const Context& ctx, const char* file, std::size_t expect_profiles) {
  auto spec = load_scenario(ctx.scenarios / file);
  auto syn = synthesize<G>(spec);
  ExtractConfig cfg = spec.extract;
  cfg.jobs = ctx.jobs;
  auto dec = extract<G>(syn.u, cfg);
  Outcome o;
  const std::size_t K = syn.u.size();
  const auto& uK = syn.u.back();
  json grid = {{"level", uK.level()}, {"extent", uK.box().extent}};
  if (!dec.ok()) {
    o.summary = std::string(file) + ": extraction failed: " + dec.failure_detail;
    o.data = {{"failure", dec.failure_detail}};
    return o;
  }
  bool params_ok = dec.profiles.size() == expect_profiles;
  double worst_profile = 0.0;
  for (std::size_t n = 0; n < dec.profiles.size(); ++n) {
    // Match by parameters at k = K.
    std::optional<std::size_t> m;
    for (std::size_t t = 0; t < syn.params.size(); ++t)
      if (syn.params[t][K - 1] == dec.params[n][K - 1]) m = t;
    if (!m) {
      params_ok = false;
      continue;
    }
    const double err = distance(dec.profiles[n], syn.profiles[*m]) / lp_norm(syn.profiles[*m], 1.0);
    worst_profile = std::max(worst_profile, err);
  }
  const double rK = lp_norm(dec.remainders.back(), 2.0) / lp_norm(uK, 2.0);
  auto led = energy_ledger<G>(syn.u, dec, 0.05);
  auto sep = verify_separation(dec, spec.sep_min);
  o.pass = params_ok && worst_profile <= 5e-2 && rK <= 1e-2 && led.lower_ok && led.upper_ok &&
           led.brezis_lieb_relative <= 1e-3;
  char buf[320];
  std::snprintf(buf, sizeof buf,
                "%s: %zu/%zu profiles, params %s, profile L1 err %.2e, |r_K|/|u_K| %.2e, norm slack %.3f/%.3f, "
                "Brezis-Lieb %.1e, grid %lldx%lldx%lld",
                file, dec.profiles.size(), expect_profiles, params_ok ? "exact" : "WRONG", worst_profile, rK,
                led.lower_slack / led.tv_u.back(), led.upper_slack / led.tv_u.back(), led.brezis_lieb_relative,
                static_cast<long long>(uK.box().extent[0]), static_cast<long long>(uK.box().extent[1]),
                static_cast<long long>(G::rank > 2 ? uK.box().extent[G::rank - 1] : 1));
  o.summary = buf;
  o.data = {{"decomposition", manifest(dec)},
            {"ledger", to_json(led)},
            {"separation", to_json(sep)},
            {"profile_error", worst_profile},
            {"remainder_ratio", rK},
            {"grid", grid}};
  return o;
}

// 5. Three-profile synthetic recovery.
Outcome profile_recovery(const Context& ctx) { return recover<EuclideanGroup<2>>(ctx, "three_profile.json", 3); }

// 6. Vanishing family: norms, scan mass decay, no profiles.
Outcome cocompactness(const Context& ctx) {
  auto spec = load_scenario(ctx.scenarios / "vanishing.json");
  auto syn = synthesize<EuclideanGroup<2>>(spec);
  auto w = unit_bump<2>(spec.level, spec.remainder.amplitude);
  const double w2 = lp_norm(w, 2.0), w1 = lp_norm(w, 1.0);
  double norm_err = 0.0, C = 0.0;
  for (std::size_t i = 0; i < syn.u.size(); ++i) {
    const double k = static_cast<double>(i + 1);
    norm_err = std::max(norm_err, std::abs(lp_norm(syn.u[i], 2.0) * std::sqrt(k) / w2 - 1.0));
    C = std::max(C, k * scan(syn.u[i], std::nullopt, ctx.jobs).mass);
  }
  ExtractConfig cfg = spec.extract;
  cfg.jobs = ctx.jobs;
  auto dec = extract<EuclideanGroup<2>>(syn.u, cfg);
  Outcome o;
  o.pass = norm_err <= 1e-10 && dec.ok() && dec.profiles.empty() && C <= 2.0 * w1;
  char buf[240];
  std::snprintf(buf, sizeof buf, "k <= %zu, norm law err %.1e, %zu profiles at delta %.2f, fitted C = %.4f (<= %.4f)",
                syn.u.size(), norm_err, dec.profiles.size(), dec.delta, C, 2.0 * w1);
  o.summary = buf;
  o.data = {{"norm_law_error", norm_err}, {"profiles", dec.profiles.size()}, {"C", C}, {"bound", 2.0 * w1},
            {"final_mass", dec.final_mass}};
  return o;
}

// 7. Growth-function maximizer.
Outcome growth(const Context&) {
  auto F = [](double s) { return s * s * std::exp(-(s - 1.0) * (s - 1.0)); };
  auto res = solve_growth_maximizer(GrowthFunction::sample(F, -4.0, 4.0, 801), 2);
  const double c0 = 1.0 / (4.0 * kPi);
  const double direct = radial_integral(res.profile, F);
  Outcome o;
  o.pass = std::abs(res.t - 1.0) <= 1e-6 && std::abs(res.m - 1.0) <= 1e-9 && std::abs(res.value / c0 - 1.0) <= 0.01 &&
           std::abs(direct - res.value) <= 1e-6 * res.value;
  char buf[200];
  std::snprintf(buf, sizeof buf, "t = %.9f, m = %.12f, c = %.10f (c0 = %.10f), direct quadrature diff %.1e", res.t,
                res.m, res.value, c0, std::abs(direct - res.value) / res.value);
  o.summary = buf;
  o.data = {{"result", to_json(res)}, {"direct", direct}};
  return o;
}

// 8. Hardy-perturbed minimizer.
Outcome hardy_minimizer(const Context& ctx) {
  const double target = 0.5 * 2.0 * std::sqrt(kPi);
  Outcome o;
  o.pass = true;
  double lowest = HUGE_VAL, best = HUGE_VAL, bound = 0.0;
  bool flagged = true;
  json runs = json::array();
  for (std::uint64_t s = 0; s < 3; ++s) {
    HardyConfig cfg;
    cfg.seed = ctx.seed + s;
    cfg.jobs = ctx.jobs;
    auto res = solve_hardy_minimizer(0.5, 2, cfg);
    bound = res.lower_bound;
    lowest = std::min(lowest, res.value);
    for (double h : res.history) lowest = std::min(lowest, h);
    best = std::min(best, res.value);
    auto j = to_json(res);
    flagged = flagged && j.contains("ball_remark") && res.ball_is_minimizer;
    runs.push_back(j);
  }
  o.pass = std::abs(best / target - 1.0) <= 0.01 && lowest >= bound - 1e-9 && flagged;
  char buf[240];
  std::snprintf(buf, sizeof buf, "kappa = %.10f (target %.5f), lowest value seen %.12f vs bound %.12f, ball remark %s",
                best, target, lowest, bound, flagged ? "present" : "missing");
  o.summary = buf;
  o.data = {{"runs", runs}};
  return o;
}

// 9. Heisenberg homogeneity and recovery.
Outcome heisenberg(const Context& ctx) {
  // Box volumes scale exactly; the invariants agree to rounding in pow.
  bool homog = true;
  for (int j = -3; j <= 3; ++j) homog = homog && h_box_volume(j, 4) == std::ldexp(1.0, -4 * j);
  auto w = h_unit_plateau(3, 1.0);
  for (int j = -2; j <= 2; ++j) {
    auto v = h_apply(HGroupElement{j, {}}, w);
    homog = homog && rel_change(horizontal_tv(w), horizontal_tv(v)) <= 1e-12 &&
            rel_change(critical_norm(w), critical_norm(v)) <= 1e-12;
  }
  auto one = recover<HeisenbergGroup>(ctx, "heisenberg_one.json", 1);
  auto two = recover<HeisenbergGroup>(ctx, "heisenberg_two.json", 2);
  Outcome o;
  o.pass = homog && one.pass && two.pass;
  o.summary = std::string("Q-homogeneity ") + (homog ? "exact" : "BROKEN") + "; " + one.summary + "; " + two.summary;
  o.data = {{"homogeneity", homog}, {"one", one.data}, {"two", two.data}};
  return o;
}

using Criterion = Outcome (*)(const Context&);

struct Entry {
  const char* title;
  Criterion run;
  double budget_s;  // 0 = no runtime bound
};

const std::vector<Entry> kCriteria = {
    {"exact isometries", isometries, 30},
    {"embedding constant", mazya, 0},
    {"Hardy saturation", hardy, 0},
    {"layer bound", layer_bound, 0},
    {"profile recovery", profile_recovery, 120},
    {"vanishing family", cocompactness, 0},
    {"growth maximizer", growth, 0},
    {"Hardy minimizer", hardy_minimizer, 60},
    {"Heisenberg", heisenberg, 300},
};

json suite_data(const Context& ctx) {
  json all = json::array();
  for (const auto& e : kCriteria) {
    try {
      all.push_back(e.run(ctx).data);
    } catch (const std::exception& ex) {
      all.push_back({{"error", ex.what()}});
    }
  }
  return all;
}

}  // namespace

int main(int argc, char** argv) {
  if (argc < 2) {
    std::fprintf(stderr, "usage: %s <scenario dir>\n", argv[0]);
    return 2;
  }
  Context ctx;
  ctx.scenarios = argv[1];

  int failed = 0;
  json first = json::array();
  for (std::size_t i = 0; i < kCriteria.size(); ++i) {
    const auto& e = kCriteria[i];
    auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = e.run(ctx);
    } catch (const std::exception& ex) {
      o.summary = std::string("exception: ") + ex.what();
      o.data = {{"error", ex.what()}};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (e.budget_s > 0 && secs > e.budget_s) {
      o.pass = false;
      o.summary += " (over the " + std::to_string(static_cast<int>(e.budget_s)) + " s budget)";
    }
    first.push_back(o.data);
    std::printf("%s criterion %zu (%s): %s [%.2f s]\n", o.pass ? "PASS" : "FAIL", i + 1, e.title, o.summary.c_str(), secs);
    std::fflush(stdout);
    if (!o.pass) ++failed;
  }

  // 10. Same seed, repeated and with more worker threads: identical bytes.
  auto t0 = std::chrono::steady_clock::now();
  const std::string a = first.dump();
  const std::string b = suite_data(ctx).dump();
  Context par = ctx;
  par.jobs = 4;
  const std::string c = suite_data(par).dump();
  const bool same = a == b && a == c;
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  std::printf("%s criterion 10 (determinism): %zu-byte report identical across repeat and jobs=4: %s [%.2f s]\n",
              same ? "PASS" : "FAIL", a.size(), same ? "yes" : "no", secs);
  if (!same) ++failed;

  std::printf("%d of 10 criteria failed\n", failed);
  return failed == 0 ? 0 : 1;
}
