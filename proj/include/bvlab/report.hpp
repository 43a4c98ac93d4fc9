#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "bvlab/decomposition.hpp"
#include "bvlab/group_action.hpp"
#include "bvlab/heisenberg.hpp"
#include "bvlab/inequalities.hpp"
#include "bvlab/variational.hpp"

// JSON views of library results. nlohmann::json objects keep keys sorted,
// which gives reports a stable byte layout.

namespace bvlab {

using json = nlohmann::json;

inline json to_json(const Dyadic& d) {
  return json{{"exact", d.to_string()}, {"value", d.to_double()}};
}

template <int N>
json to_json(const GroupElement<N>& g) {
  json y = json::array();
  for (const auto& c : g.y) y.push_back(to_json(c));
  return json{{"j", g.j}, {"y", y}};
}

inline json to_json(const HGroupElement& g) {
  return json{{"j", g.j}, {"eta", json::array({to_json(g.eta.x), to_json(g.eta.y), to_json(g.eta.t)})}};
}

inline json to_json(const InequalityReport& r) {
  return json{{"name", r.name},           {"lhs", r.lhs},   {"rhs", r.rhs},
              {"constant", r.constant},   {"slack", r.slack}, {"tolerance", r.tolerance},
              {"pass", r.pass}};
}

inline json to_json(const RadialProfile& p) {
  return json{{"dim", p.dim}, {"knots", p.knots}, {"values", p.values}};
}

inline json to_json(const VariationalResult& r) {
  json j{{"problem", r.problem}, {"dim", r.dim}, {"value", r.value}, {"profile", to_json(r.profile)}};
  if (r.problem == "growth_maximizer") {
    j["t"] = r.t;
    j["m"] = r.m;
    j["R"] = r.R;
    j["a"] = r.a;
    j["check"] = r.check;
  } else if (r.problem == "hardy_minimizer") {
    j["lambda"] = r.lambda;
    j["ball_value"] = r.ball_value;
    j["lower_bound"] = r.lower_bound;
    j["ball_is_minimizer"] = r.ball_is_minimizer;
    // Ball indicators attain the analytic lower bound here, against the common
    // expectation that they are not minimizers; flag it whenever it happens.
    j["ball_remark"] = r.ball_is_minimizer
                           ? "normalized ball attains the analytic lower bound, so balls are minimizers in this class"
                           : "optimizer found a profile below the ball value";
    j["best_start"] = r.best_start;
    j["converged"] = r.converged;
    j["iterations"] = r.iterations;
    j["history"] = r.history;
  }
  return j;
}

inline json to_json(const EnergyLedger& l) {
  return json{{"tv_u", l.tv_u},
              {"tv_profiles", l.tv_profiles},
              {"tv_remainder", l.tv_remainder},
              {"critical_norm_remainder", l.critical_norm_remainder},
              {"brezis_lieb_residual", l.brezis_lieb_residual},
              {"brezis_lieb_relative", l.brezis_lieb_relative},
              {"lower_slack", l.lower_slack},
              {"upper_slack", l.upper_slack},
              {"tolerance", l.tolerance},
              {"lower_ok", l.lower_ok},
              {"upper_ok", l.upper_ok},
              {"cocompact_constant", l.cocompact_constant}};
}

inline json to_json(const SeparationReport& r) {
  json pairs = json::array();
  for (const auto& p : r.pairs)
    pairs.push_back(json{{"p", p.p},
                         {"q", p.q},
                         {"sep_final", p.sep_final},
                         {"slope", p.slope},
                         {"monotone", p.monotone},
                         {"merged", p.merged}});
  return json{{"sep_min", r.sep_min}, {"pairs", pairs}, {"pass", r.pass}};
}

/// Decomposition manifest: parameters and summary numbers. Grid payloads are
/// written separately as GF1/GFH1 files named by `profile_files`.
template <class G>
json manifest(const Decomposition<G>& d, const std::vector<std::string>& profile_files = {},
              const std::vector<std::string>& remainder_files = {}) {
  json params = json::array();
  for (const auto& per_k : d.params) {
    json row = json::array();
    for (const auto& g : per_k) row.push_back(to_json(g));
    params.push_back(row);
  }
  json profiles = json::array();
  for (std::size_t n = 0; n < d.profiles.size(); ++n) {
    json p{{"level", d.profiles[n].level()}, {"variation", G::variation(d.profiles[n])}};
    if (n < profile_files.size()) p["file"] = profile_files[n];
    profiles.push_back(p);
  }
  json j{{"profiles", profiles},
         {"params", params},
         {"iteration_mass", d.iteration_mass},
         {"final_mass", d.final_mass},
         {"delta", d.delta},
         {"tail_window", d.tail_window},
         {"window_exhausted", d.window_exhausted},
         {"termination", to_string(d.termination)},
         {"count", d.profiles.size()}};
  if (!remainder_files.empty()) j["remainders"] = remainder_files;
  if (d.failure) {
    j["failure"] = std::string(to_string(*d.failure));
    j["failure_detail"] = d.failure_detail;
  }
  return j;
}

}  // namespace bvlab
