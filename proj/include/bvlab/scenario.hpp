#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "bvlab/decomposition.hpp"
#include "bvlab/fixtures.hpp"
#include "bvlab/group_action.hpp"
#include "bvlab/heisenberg.hpp"
#include "bvlab/io.hpp"

namespace bvlab {

using json = nlohmann::json;

/// a + b k with integer coefficients.
struct AffineInt {
  std::int64_t a = 0, b = 0;
  std::int64_t at(int k) const { return a + b * k; }
};

/// a + b k with dyadic coefficients.
struct AffineDyadic {
  Dyadic a, b;
  Dyadic at(int k) const { return a + b * Dyadic(k); }
};

struct ProfileSpec {
  std::string fixture = "bump";
  FixtureParams params;
  AffineInt j;
  std::vector<AffineDyadic> y;  // one law per translation coordinate
  bool alternating = false;     // multiply the k-th copy by (-1)^k
};

struct RemainderSpec {
  std::string kind = "none";  // none | vanishing_multibump | files
  double amplitude = 0.0;     // k-th remainder carries k bumps of amplitude / k
  double spacing = 2.0;
  std::vector<double> origin;
  std::vector<std::string> paths;
};

struct ScenarioSpec {
  std::string name;
  std::string kind = "euclidean";  // euclidean | heisenberg
  int dim = 2;
  int level = 4;
  int K = 8;
  std::vector<ProfileSpec> profiles;
  RemainderSpec remainder;
  ExtractConfig extract;
  double sep_min = 2.0;
  std::uint64_t seed = 0;
  std::filesystem::path base_dir;
};

namespace detail {

[[noreturn]] inline void schema(const std::string& what) { fail(ErrorCode::SchemaError, what); }

template <class T>
T field(const json& j, const char* key, T fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    schema(std::string("field '") + key + "' has the wrong type");
  }
}

inline double number(const json& j, const std::string& where) {
  if (!j.is_number()) schema(where + " must be a number");
  return j.get<double>();
}

inline AffineInt parse_affine_int(const json& j, const std::string& where) {
  if (j.is_number_integer()) return {j.get<std::int64_t>(), 0};
  if (!j.is_object()) schema(where + " must be an integer or {a, b}");
  AffineInt r;
  for (const char* key : {"a", "b"})
    if (j.contains(key) && !j.at(key).is_number_integer()) schema(where + "." + key + " must be an integer");
  r.a = field<std::int64_t>(j, "a", 0);
  r.b = field<std::int64_t>(j, "b", 0);
  return r;
}

inline AffineDyadic parse_affine_dyadic(const json& j, const std::string& where) {
  if (j.is_number()) return {Dyadic::from_double(j.get<double>()), Dyadic{}};
  if (!j.is_object()) schema(where + " must be a number or {a, b}");
  AffineDyadic r;
  if (j.contains("a")) r.a = Dyadic::from_double(number(j.at("a"), where + ".a"));
  if (j.contains("b")) r.b = Dyadic::from_double(number(j.at("b"), where + ".b"));
  return r;
}

inline std::vector<double> parse_vector(const json& j, const std::string& where) {
  if (!j.is_array()) schema(where + " must be an array");
  std::vector<double> v;
  for (std::size_t i = 0; i < j.size(); ++i) v.push_back(number(j[i], where + "[" + std::to_string(i) + "]"));
  return v;
}

}  // namespace detail

inline ScenarioSpec parse_scenario(const json& doc, const std::filesystem::path& base_dir = {}) {
  using namespace detail;
  if (!doc.is_object()) schema("scenario must be a JSON object");
  ScenarioSpec s;
  s.base_dir = base_dir;
  s.name = field<std::string>(doc, "name", "");
  s.kind = field<std::string>(doc, "kind", "euclidean");
  if (s.kind != "euclidean" && s.kind != "heisenberg") schema("kind must be 'euclidean' or 'heisenberg'");
  s.dim = field<int>(doc, "dim", s.kind == "heisenberg" ? 3 : 2);
  if (s.kind == "euclidean" && (s.dim < 2 || s.dim > 3)) schema("euclidean scenarios support dim 2 or 3");
  if (s.kind == "heisenberg" && s.dim != 3) schema("heisenberg scenarios have dim 3");
  if (!doc.contains("level")) schema("missing 'level'");
  s.level = field<int>(doc, "level", 4);
  if (!doc.contains("K")) schema("missing 'K'");
  s.K = field<int>(doc, "K", 8);
  if (s.K < 1) schema("K must be positive");
  s.seed = field<std::uint64_t>(doc, "seed", 0);
  s.sep_min = field<double>(doc, "sep_min", 2.0);

  if (doc.contains("profiles")) {
    const auto& ps = doc.at("profiles");
    if (!ps.is_array()) schema("'profiles' must be an array");
    for (std::size_t i = 0; i < ps.size(); ++i) {
      const auto& pj = ps[i];
      const std::string where = "profiles[" + std::to_string(i) + "]";
      if (!pj.is_object()) schema(where + " must be an object");
      ProfileSpec p;
      p.fixture = field<std::string>(pj, "fixture", "bump");
      p.params.level = s.level;
      p.params.amplitude = field<double>(pj, "amplitude", 1.0);
      p.params.radius = field<double>(pj, "radius", 1.0);
      p.params.eps = field<double>(pj, "eps", 1.0 / 16);
      if (pj.contains("center")) p.params.center = parse_vector(pj.at("center"), where + ".center");
      if (pj.contains("j")) p.j = parse_affine_int(pj.at("j"), where + ".j");
      const char* tkey = s.kind == "heisenberg" ? "eta" : "y";
      if (pj.contains(tkey)) {
        const auto& yj = pj.at(tkey);
        if (!yj.is_array() || static_cast<int>(yj.size()) != s.dim) schema(where + "." + tkey + " needs one law per coordinate");
        for (std::size_t d = 0; d < yj.size(); ++d) p.y.push_back(parse_affine_dyadic(yj[d], where + "." + tkey));
      } else {
        p.y.assign(static_cast<std::size_t>(s.dim), AffineDyadic{});
      }
      std::string sign = field<std::string>(pj, "sign", "constant");
      if (sign != "constant" && sign != "alternating") schema(where + ".sign must be 'constant' or 'alternating'");
      p.alternating = sign == "alternating";
      s.profiles.push_back(std::move(p));
    }
  }

  if (doc.contains("remainder")) {
    const auto& rj = doc.at("remainder");
    if (!rj.is_object()) schema("'remainder' must be an object");
    s.remainder.kind = field<std::string>(rj, "kind", "none");
    s.remainder.amplitude = field<double>(rj, "amplitude", 0.0);
    s.remainder.spacing = field<double>(rj, "spacing", 2.0);
    if (rj.contains("origin")) s.remainder.origin = parse_vector(rj.at("origin"), "remainder.origin");
    if (rj.contains("paths")) s.remainder.paths = field<std::vector<std::string>>(rj, "paths", {});
    const auto& k = s.remainder.kind;
    if (k != "none" && k != "vanishing_multibump" && k != "files") schema("unknown remainder kind '" + k + "'");
    if (k == "files" && static_cast<int>(s.remainder.paths.size()) != s.K) schema("remainder.paths needs K entries");
  }

  if (doc.contains("extract")) {
    const auto& ej = doc.at("extract");
    if (!ej.is_object()) schema("'extract' must be an object");
    auto& c = s.extract;
    if (ej.contains("delta")) c.delta = number(ej.at("delta"), "extract.delta");
    c.n_max = field<int>(ej, "n_max", c.n_max);
    if (ej.contains("tail_window")) c.tail_window = field<int>(ej, "tail_window", 0);
    c.tol_stab = field<double>(ej, "tol_stab", c.tol_stab);
    c.margin = field<int>(ej, "margin", c.margin);
    if (ej.contains("window")) {
      auto w = field<std::vector<int>>(ej, "window", {});
      if (w.size() != 2 || w[0] > w[1]) schema("extract.window must be [lo, hi] with lo <= hi");
      c.window = LevelWindow{w[0], w[1]};
    }
  }
  return s;
}

inline ScenarioSpec load_scenario(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::SchemaError, "cannot open scenario " + path.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    fail(ErrorCode::SchemaError, std::string("malformed scenario JSON: ") + e.what());
  }
  return parse_scenario(doc, path.parent_path());
}

/// Ground-truth family S_k = sum_n g_k^n w^n + r_k for k = 1..K.
template <class G>
struct Synthetic {
  std::vector<typename G::Function> u;
  std::vector<typename G::Function> profiles;
  std::vector<std::vector<typename G::Element>> params;  // params[n][k]
};

namespace detail {

template <class G>
typename G::Function build_profile(const ScenarioSpec& s, const ProfileSpec& p) {
  if constexpr (std::is_same_v<G, HeisenbergGroup>) {
    if (p.fixture == "bump") return h_unit_bump(s.level, p.params.amplitude);
    if (p.fixture == "plateau") return h_unit_plateau(s.level, p.params.amplitude);
    if (p.fixture == "koranyi_ball")
      return scaled(koranyi_mollified_ball(s.level, p.params.radius, p.params.eps), p.params.amplitude);
    fail(ErrorCode::UnknownKind, "unknown Heisenberg fixture '" + p.fixture + "'");
  } else {
    return make_fixture<G::rank>(p.fixture, p.params);
  }
}

template <class G>
typename G::Function vanishing_remainder(const ScenarioSpec& s, int k) {
  using Geom = typename G::Geometry;
  constexpr int R = G::rank;
  const double amp = s.remainder.amplitude / k;
  if constexpr (std::is_same_v<G, HeisenbergGroup>) {
    auto bump = h_unit_bump(s.level, amp);
    auto step = Dyadic::from_double(s.remainder.spacing).grid_index(s.level);
    if (!step || *step < bump.box().extent[0]) fail(ErrorCode::IncompatibleTranslation, "remainder spacing not on the grid");
    Index<3> base{};
    for (int d = 0; d < 3 && d < static_cast<int>(s.remainder.origin.size()); ++d) {
      auto idx = Dyadic::from_double(s.remainder.origin[d]).grid_index(Geom::level_shift[d] * s.level);
      if (!idx) fail(ErrorCode::IncompatibleTranslation, "remainder origin not on the grid");
      base[d] = *idx;
    }
    Box<3> box = bump.box();
    for (int d = 0; d < 3; ++d) box.origin[d] = base[d];
    box.extent[0] = *step * (k - 1) + bump.box().extent[0];
    HGridFunction out(s.level, box);
    for (int m = 0; m < k; ++m)
      for_each_index(bump.box(), [&](const Index<3>& i) {
        Index<3> t{i[0] + base[0] + *step * m, i[1] + base[1], i[2] + base[2]};
        out.ref(t) = bump.at(i);
      });
    return out;
  } else {
    FixtureParams q;
    q.level = s.level;
    q.amplitude = amp;
    q.count = k;
    q.spacing = s.remainder.spacing;
    q.center = s.remainder.origin;
    q.center.resize(R, 0.0);
    return multibump<R>(q);
  }
}

template <class Geom>
Field<Geom> add_at_common_level(const Field<Geom>& a, const Field<Geom>& b) {
  const int level = std::max(a.level(), b.level());
  return axpy(to_level(a, level), 1.0, to_level(b, level));
}

}  // namespace detail

template <class G>
Synthetic<G> synthesize(const ScenarioSpec& s) {
  using Function = typename G::Function;
  if (G::rank != s.dim) fail(ErrorCode::BadDimension, "scenario dimension does not match the group");
  Synthetic<G> out;
  for (const auto& p : s.profiles) out.profiles.push_back(detail::build_profile<G>(s, p));
  out.params.resize(s.profiles.size());
  for (int k = 1; k <= s.K; ++k) {
    Function acc(s.level, {});
    for (std::size_t n = 0; n < s.profiles.size(); ++n) {
      const auto& p = s.profiles[n];
      std::array<Dyadic, G::rank> y{};
      for (int d = 0; d < G::rank; ++d) y[d] = p.y[d].at(k);
      const auto j = p.j.at(k);
      if (j < INT32_MIN / 2 || j > INT32_MAX / 2) fail(ErrorCode::LevelOverflow, "scale law out of range");
      auto g = G::make(static_cast<int>(j), y);
      auto piece = G::act(g, out.profiles[n]);
      if (p.alternating && k % 2 == 1) piece = scaled(piece, -1.0);
      acc = detail::add_at_common_level(acc, piece);
      out.params[n].push_back(g);
    }
    if (s.remainder.kind == "vanishing_multibump") {
      acc = detail::add_at_common_level(acc, detail::vanishing_remainder<G>(s, k));
    } else if (s.remainder.kind == "files") {
      auto r = read_grid<typename G::Geometry>(s.base_dir / s.remainder.paths[static_cast<std::size_t>(k - 1)]);
      acc = detail::add_at_common_level(acc, r);
    }
    out.u.push_back(trim(acc));
  }
  return out;
}

}  // namespace bvlab
