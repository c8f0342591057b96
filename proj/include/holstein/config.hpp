#pragma once

// JSON experiment configuration: strict parsing (unknown keys rejected),
// normalization with defaults, dotted-path overrides and a git-style hash.

#include <openssl/evp.h>

#include <json.hpp>

#include <cmath>
#include <cstdint>
#include <fstream>
#include <initializer_list>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "holstein/errors.hpp"
#include "holstein/model.hpp"
#include "holstein/state_space.hpp"

namespace holstein {

using json = nlohmann::json;

namespace schema {

[[noreturn]] inline void fail(const std::string& path, const std::string& msg) {
  throw Error(ErrorCode::ConfigInvalid, path + ": " + msg);
}

inline std::string join(const std::string& path, const std::string& key) { return path.empty() ? key : path + "." + key; }

inline void expect_object(const json& j, const std::string& path, std::initializer_list<const char*> allowed) {
  if (!j.is_object()) fail(path, "expected an object");
  std::set<std::string> ok(allowed.begin(), allowed.end());
  for (const auto& [k, v] : j.items())
    if (!ok.count(k)) fail(join(path, k), "unknown key");
}

inline const json* find(const json& obj, const char* key) {
  auto it = obj.find(key);
  return it == obj.end() ? nullptr : &*it;
}

inline double number(const json& obj, const std::string& path, const char* key, std::optional<double> def = {}) {
  const json* v = find(obj, key);
  if (!v) {
    if (def) return *def;
    fail(join(path, key), "required");
  }
  if (!v->is_number()) fail(join(path, key), "expected a number");
  const double x = v->get<double>();
  if (!std::isfinite(x)) fail(join(path, key), "must be finite");
  return x;
}

inline std::int64_t integer(const json& obj, const std::string& path, const char* key, std::optional<std::int64_t> def = {}) {
  const json* v = find(obj, key);
  if (!v) {
    if (def) return *def;
    fail(join(path, key), "required");
  }
  if (!v->is_number_integer()) fail(join(path, key), "expected an integer");
  return v->get<std::int64_t>();
}

inline bool non_negative_integer(const json& v) {
  return v.is_number_unsigned() || (v.is_number_integer() && v.get<std::int64_t>() >= 0);
}

inline std::uint64_t unsigned_integer(const json& obj, const std::string& path, const char* key,
                                      std::optional<std::uint64_t> def = {}) {
  const json* v = find(obj, key);
  if (!v) {
    if (def) return *def;
    fail(join(path, key), "required");
  }
  if (!non_negative_integer(*v)) fail(join(path, key), "expected a non-negative integer");
  return v->get<std::uint64_t>();
}

inline bool boolean(const json& obj, const std::string& path, const char* key, std::optional<bool> def = {}) {
  const json* v = find(obj, key);
  if (!v) {
    if (def) return *def;
    fail(join(path, key), "required");
  }
  if (!v->is_boolean()) fail(join(path, key), "expected true or false");
  return v->get<bool>();
}

inline std::string string(const json& obj, const std::string& path, const char* key, std::optional<std::string> def = {}) {
  const json* v = find(obj, key);
  if (!v) {
    if (def) return *def;
    fail(join(path, key), "required");
  }
  if (!v->is_string()) fail(join(path, key), "expected a string");
  return v->get<std::string>();
}

inline std::vector<int> int_vector(const json& v, const std::string& path) {
  if (!v.is_array()) fail(path, "expected an array of integers");
  std::vector<int> out;
  for (const auto& e : v) {
    if (!e.is_number_integer()) fail(path, "expected an array of integers");
    out.push_back(e.get<int>());
  }
  return out;
}

inline std::vector<std::vector<int>> site_list(const json& v, const std::string& path) {
  if (!v.is_array()) fail(path, "expected an array of sites");
  std::vector<std::vector<int>> out;
  for (std::size_t i = 0; i < v.size(); ++i) out.push_back(int_vector(v[i], path + "[" + std::to_string(i) + "]"));
  return out;
}

inline std::complex<double> complex_value(const json& v, const std::string& path) {
  if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number())
    fail(path, "expected [re, im]");
  return {v[0].get<double>(), v[1].get<double>()};
}

}  // namespace schema

// ---------------------------------------------------------------------------

inline const std::vector<std::string>& experiment_kinds() {
  static const std::vector<std::string> kinds{"verify",   "greens",   "sweep",      "fit",
                                              "correlator", "ct-probe", "basis-info", "tail"};
  return kinds;
}

struct RegionSpec {
  std::vector<int> extent;               // box 0..L-1 per axis, or
  std::vector<std::vector<int>> sites;   // explicit site list
  std::vector<std::vector<int>> exclude;
};

struct ExperimentConfig {
  ModelParams model;
  RegionSpec region;
  TruncationPolicy truncation;
  std::string kind;
  json experiment;  // normalized, kind-specific, defaults filled
  std::uint64_t seed = 0;
  unsigned workers = 1;
  std::string output_dir = "out";

  std::shared_ptr<const LatticeRegion> build_region() const {
    std::vector<Site> excluded;
    for (const auto& c : region.exclude) excluded.push_back(Site{c});
    if (!region.extent.empty()) return std::make_shared<const LatticeRegion>(LatticeRegion::box(region.extent, excluded));
    std::vector<Site> sites;
    for (const auto& c : region.sites)
      if (std::find(region.exclude.begin(), region.exclude.end(), c) == region.exclude.end()) sites.push_back(Site{c});
    return std::make_shared<const LatticeRegion>(model.dimension, sites);
  }

  std::shared_ptr<const BasisEnumeration> build_basis() const {
    return std::make_shared<const BasisEnumeration>(build_region(), truncation);
  }
};

namespace detail {

inline json parse_model(const json& j, ModelParams& m) {
  const std::string p = "model";
  schema::expect_object(j, p, {"D", "gamma", "omega", "beta_re", "beta_im", "v_plus", "density"});
  m.dimension = static_cast<int>(schema::integer(j, p, "D"));
  m.gamma = schema::number(j, p, "gamma");
  m.omega = schema::number(j, p, "omega");
  m.beta = {schema::number(j, p, "beta_re"), schema::number(j, p, "beta_im")};
  m.v_plus = schema::number(j, p, "v_plus");
  const json* d = schema::find(j, "density");
  if (!d) schema::fail("model.density", "required");
  json density;
  if (d->is_string()) {
    const auto s = d->get<std::string>();
    if (s == "uniform") {
      m.density = UniformDensity{};
      density = "uniform";
    } else if (s == "beta") {
      m.density = BetaDensity{};
      density = json{{"kind", "beta"}, {"a", 2.0}, {"b", 2.0}};
    } else {
      schema::fail("model.density", "expected \"uniform\" or \"beta\"");
    }
  } else {
    schema::expect_object(*d, "model.density", {"kind", "a", "b"});
    const auto kind = schema::string(*d, "model.density", "kind");
    if (kind == "uniform") {
      m.density = UniformDensity{};
      density = "uniform";
    } else if (kind == "beta") {
      BetaDensity bd{schema::number(*d, "model.density", "a", 2.0), schema::number(*d, "model.density", "b", 2.0)};
      m.density = bd;
      density = json{{"kind", "beta"}, {"a", bd.a}, {"b", bd.b}};
    } else {
      schema::fail("model.density.kind", "expected \"uniform\" or \"beta\"");
    }
  }
  m.validate();
  return json{{"D", m.dimension},      {"gamma", m.gamma},          {"omega", m.omega},   {"beta_re", m.beta.real()},
              {"beta_im", m.beta.imag()}, {"v_plus", m.v_plus}, {"density", density}};
}

inline json parse_region(const json& j, int dimension, RegionSpec& r) {
  const std::string p = "region";
  schema::expect_object(j, p, {"extent", "sites", "exclude"});
  const json* ext = schema::find(j, "extent");
  const json* sites = schema::find(j, "sites");
  if ((ext != nullptr) == (sites != nullptr)) schema::fail(p, "exactly one of extent or sites is required");
  auto check_dim = [&](const std::vector<int>& c, const std::string& path) {
    if (static_cast<int>(c.size()) != dimension) schema::fail(path, "site dimension does not match model.D");
  };
  json out = json::object();
  if (ext) {
    r.extent = schema::int_vector(*ext, "region.extent");
    check_dim(r.extent, "region.extent");
    for (int e : r.extent)
      if (e < 1) schema::fail("region.extent", "entries must be >= 1");
    out["extent"] = r.extent;
  } else {
    r.sites = schema::site_list(*sites, "region.sites");
    if (r.sites.empty()) schema::fail("region.sites", "empty region");
    for (const auto& s : r.sites) check_dim(s, "region.sites");
    out["sites"] = r.sites;
  }
  if (const json* ex = schema::find(j, "exclude")) {
    r.exclude = schema::site_list(*ex, "region.exclude");
    for (const auto& s : r.exclude) check_dim(s, "region.exclude");
  }
  out["exclude"] = r.exclude;
  return out;
}

inline json parse_truncation(const json& j, TruncationPolicy& t) {
  const std::string p = "truncation";
  schema::expect_object(j, p, {"k_max", "per_site_cap", "max_states"});
  t.max_total = static_cast<int>(schema::integer(j, p, "k_max"));
  if (t.max_total < 0) schema::fail("truncation.k_max", "must be >= 0");
  json out{{"k_max", t.max_total}};
  if (schema::find(j, "per_site_cap")) {
    const auto cap = schema::integer(j, p, "per_site_cap");
    if (cap < 0) schema::fail("truncation.per_site_cap", "must be >= 0");
    t.per_site_cap = static_cast<int>(cap);
    out["per_site_cap"] = cap;
  }
  t.max_states = static_cast<std::size_t>(schema::integer(j, p, "max_states", static_cast<std::int64_t>(t.max_states)));
  if (t.max_states < 1) schema::fail("truncation.max_states", "must be >= 1");
  out["max_states"] = t.max_states;
  return out;
}

inline json normalize_state(const json& j, const std::string& p) {
  schema::expect_object(j, p, {"site", "excitations"});
  const json* s = schema::find(j, "site");
  if (!s) schema::fail(p + ".site", "required");
  json out{{"site", schema::int_vector(*s, p + ".site")}, {"excitations", json::array()}};
  if (const json* ex = schema::find(j, "excitations")) {
    if (!ex->is_array()) schema::fail(p + ".excitations", "expected an array");
    for (std::size_t i = 0; i < ex->size(); ++i) {
      const std::string q = p + ".excitations[" + std::to_string(i) + "]";
      schema::expect_object((*ex)[i], q, {"site", "count"});
      const json* es = schema::find((*ex)[i], "site");
      if (!es) schema::fail(q + ".site", "required");
      const auto count = schema::integer((*ex)[i], q, "count");
      if (count < 0) schema::fail(q + ".count", "must be >= 0");
      out["excitations"].push_back(json{{"site", schema::int_vector(*es, q + ".site")}, {"count", count}});
    }
  }
  return out;
}

inline json normalize_pairs(const json& j, const std::string& p) {
  schema::expect_object(j, p, {"kind", "anchor", "min_distance", "max_distance", "pairs", "count", "seed"});
  const auto kind = schema::string(j, p, "kind");
  if (kind == "vacuum_chain") {
    for (const char* k : {"pairs", "count", "seed"})
      if (schema::find(j, k)) schema::fail(schema::join(p, k), "unknown key for vacuum_chain");
    const json* a = schema::find(j, "anchor");
    if (!a) schema::fail(p + ".anchor", "required");
    const auto lo = schema::integer(j, p, "min_distance", 1);
    const auto hi = schema::integer(j, p, "max_distance");
    if (lo < 0 || hi < lo) schema::fail(p + ".max_distance", "need 0 <= min_distance <= max_distance");
    return json{{"kind", kind}, {"anchor", schema::int_vector(*a, p + ".anchor")}, {"min_distance", lo}, {"max_distance", hi}};
  }
  for (const char* k : {"anchor", "min_distance", "max_distance"})
    if (schema::find(j, k)) schema::fail(schema::join(p, k), "unknown key for " + kind);
  if (kind == "indices") {
    if (schema::find(j, "count") || schema::find(j, "seed")) schema::fail(p, "indices takes only pairs");
    const json* ps = schema::find(j, "pairs");
    if (!ps || !ps->is_array() || ps->empty()) schema::fail(p + ".pairs", "expected a non-empty array");
    json out{{"kind", kind}, {"pairs", json::array()}};
    for (const auto& e : *ps) {
      if (!e.is_array() || e.size() != 2 || !schema::non_negative_integer(e[0]) || !schema::non_negative_integer(e[1]))
        schema::fail(p + ".pairs", "expected [row, col] index pairs");
      out["pairs"].push_back(json::array({e[0].get<std::uint64_t>(), e[1].get<std::uint64_t>()}));
    }
    return out;
  }
  if (kind == "explicit") {
    if (schema::find(j, "count") || schema::find(j, "seed")) schema::fail(p, "explicit takes only pairs");
    const json* ps = schema::find(j, "pairs");
    if (!ps || !ps->is_array() || ps->empty()) schema::fail(p + ".pairs", "expected a non-empty array");
    json out{{"kind", kind}, {"pairs", json::array()}};
    for (std::size_t i = 0; i < ps->size(); ++i) {
      const std::string q = p + ".pairs[" + std::to_string(i) + "]";
      schema::expect_object((*ps)[i], q, {"row", "col"});
      const json* r = schema::find((*ps)[i], "row");
      const json* c = schema::find((*ps)[i], "col");
      if (!r || !c) schema::fail(q, "row and col are required");
      out["pairs"].push_back(json{{"row", normalize_state(*r, q + ".row")}, {"col", normalize_state(*c, q + ".col")}});
    }
    return out;
  }
  if (kind == "random") {
    if (schema::find(j, "pairs")) schema::fail(p + ".pairs", "unknown key for random");
    const auto count = schema::integer(j, p, "count");
    if (count < 1) schema::fail(p + ".count", "must be >= 1");
    return json{{"kind", kind}, {"count", count}, {"seed", schema::unsigned_integer(j, p, "seed", 0)}};
  }
  schema::fail(p + ".kind", "expected vacuum_chain, indices, explicit or random");
}

inline json normalize_selector(const json& j, const std::string& p) {
  schema::expect_object(j, p, {"kind", "k", "sites", "gamma"});
  const auto kind = schema::string(j, p, "kind");
  if (kind == "full") {
    if (j.size() != 1) schema::fail(p, "full takes no parameters");
    return json{{"kind", kind}};
  }
  if (kind == "band_in" || kind == "band_out" || kind == "band_split") {
    if (schema::find(j, "sites") || schema::find(j, "gamma")) schema::fail(p, kind + " takes only k");
    const auto k = schema::integer(j, p, "k");
    if (k < 0) schema::fail(p + ".k", "must be >= 0");
    return json{{"kind", kind}, {"k", k}};
  }
  if (kind == "positions") {
    if (schema::find(j, "k") || schema::find(j, "gamma")) schema::fail(p, "positions takes only sites");
    const json* s = schema::find(j, "sites");
    if (!s) schema::fail(p + ".sites", "required");
    return json{{"kind", kind}, {"sites", schema::site_list(*s, p + ".sites")}};
  }
  if (kind == "position_split") {
    if (schema::find(j, "k") || schema::find(j, "sites")) schema::fail(p, "position_split takes only gamma");
    const json* g = schema::find(j, "gamma");
    if (!g) schema::fail(p + ".gamma", "required");
    return json{{"kind", kind}, {"gamma", schema::site_list(*g, p + ".gamma")}};
  }
  schema::fail(p + ".kind", "expected full, band_in, band_out, band_split, positions or position_split");
}

inline json normalize_energies(const json* v, const std::string& p, json def) {
  if (!v) return def;
  if (!v->is_array() || v->empty()) schema::fail(p, "expected a non-empty array of [re, im]");
  json out = json::array();
  for (std::size_t i = 0; i < v->size(); ++i) {
    const auto z = schema::complex_value((*v)[i], p + "[" + std::to_string(i) + "]");
    out.push_back(json::array({z.real(), z.imag()}));
  }
  return out;
}

inline json normalize_energy(const json* v, const std::string& p, std::complex<double> def) {
  const auto z = v ? schema::complex_value(*v, p) : def;
  return json::array({z.real(), z.imag()});
}

inline json normalize_window(const json* v, const std::string& p) {
  if (!v) return json{{"band", 0}};
  schema::expect_object(*v, p, {"band", "lower", "upper"});
  if (schema::find(*v, "band")) {
    if (v->size() != 1) schema::fail(p, "band excludes lower/upper");
    const auto k = schema::integer(*v, p, "band");
    if (k < 0) schema::fail(p + ".band", "must be >= 0");
    return json{{"band", k}};
  }
  const double lo = schema::number(*v, p, "lower"), hi = schema::number(*v, p, "upper");
  if (!(lo <= hi)) schema::fail(p, "lower must be <= upper");
  return json{{"lower", lo}, {"upper", hi}};
}

inline json normalize_times(const json* v, const std::string& p) {
  if (!v) return json{{"t_max", 100.0}, {"count", 64}};
  if (v->is_array()) {
    json out = json::array();
    for (const auto& t : *v) {
      if (!t.is_number()) schema::fail(p, "expected an array of numbers");
      out.push_back(t.get<double>());
    }
    if (out.empty()) schema::fail(p, "empty");
    return out;
  }
  schema::expect_object(*v, p, {"t_max", "count"});
  const double tmax = schema::number(*v, p, "t_max");
  const auto count = schema::integer(*v, p, "count");
  if (tmax < 0 || count < 1) schema::fail(p, "need t_max >= 0 and count >= 1");
  return json{{"t_max", tmax}, {"count", count}};
}

inline double positive(double x, const std::string& path) {
  if (!(x > 0.0)) schema::fail(path, "must be > 0");
  return x;
}

inline std::int64_t at_least(std::int64_t x, std::int64_t lo, const std::string& path) {
  if (x < lo) schema::fail(path, "must be >= " + std::to_string(lo));
  return x;
}

inline json parse_experiment(const json& j) {
  const std::string p = "experiment";
  if (!j.is_object()) schema::fail(p, "expected an object");
  const auto kind = schema::string(j, p, "kind");
  const auto& kinds = experiment_kinds();
  if (std::find(kinds.begin(), kinds.end(), kind) == kinds.end()) schema::fail(p + ".kind", "unknown experiment kind");
  json out{{"kind", kind}};
  auto sel = [&](const char* key, json def) {
    const json* v = schema::find(j, key);
    return v ? normalize_selector(*v, schema::join(p, key)) : def;
  };
  auto pairs = [&]() {
    const json* v = schema::find(j, "pairs");
    if (!v) schema::fail(p + ".pairs", "required");
    return normalize_pairs(*v, p + ".pairs");
  };
  auto s_value = [&]() {
    const double s = schema::number(j, p, "s", 0.5);
    if (!(s > 0.0 && s < 1.0)) schema::fail(p + ".s", "must lie in (0, 1)");
    return s;
  };
  auto distance_kind = [&]() {
    const auto d = schema::string(j, p, "distance_kind", "lattice");
    if (d != "lattice" && d != "upsilon" && d != "upsilon+collapsed" && d != "d")
      schema::fail(p + ".distance_kind", "expected lattice, upsilon, upsilon+collapsed or d");
    return d;
  };
  const json default_z = json::array({json::array({0.25, 1e-3})});

  if (kind == "verify") {
    schema::expect_object(j, p, {"kind", "tolerances", "metric_samples", "max_n", "energy", "gri_pairs", "hooks"});
    json tol = json::object();
    if (const json* t = schema::find(j, "tolerances")) {
      if (!t->is_object()) schema::fail(p + ".tolerances", "expected an object");
      for (const auto& [name, v] : t->items()) tol[name] = positive(schema::number(*t, p + ".tolerances", name.c_str()), p + ".tolerances." + name);
    }
    out["tolerances"] = tol;
    out["metric_samples"] = at_least(schema::integer(j, p, "metric_samples", 2000), 1, p + ".metric_samples");
    out["max_n"] = at_least(schema::integer(j, p, "max_n", 10), 0, p + ".max_n");
    out["energy"] = normalize_energy(schema::find(j, "energy"), p + ".energy", {0.25, 1e-3});
    out["gri_pairs"] = at_least(schema::integer(j, p, "gri_pairs", 10), 1, p + ".gri_pairs");
    json hooks{{"flip_hopping_sign", false}};
    if (const json* h = schema::find(j, "hooks")) {
      schema::expect_object(*h, p + ".hooks", {"flip_hopping_sign"});
      hooks["flip_hopping_sign"] = schema::boolean(*h, p + ".hooks", "flip_hopping_sign", false);
    }
    out["hooks"] = hooks;
  } else if (kind == "greens") {
    schema::expect_object(j, p, {"kind", "pairs", "energies", "selector", "realization"});
    out["pairs"] = pairs();
    out["energies"] = normalize_energies(schema::find(j, "energies"), p + ".energies", default_z);
    out["selector"] = sel("selector", json{{"kind", "full"}});
    out["realization"] = schema::unsigned_integer(j, p, "realization", 0);
  } else if (kind == "sweep") {
    schema::expect_object(j, p, {"kind", "pairs", "energies", "s", "realizations", "distance_kind", "band", "selector"});
    out["pairs"] = pairs();
    out["energies"] = normalize_energies(schema::find(j, "energies"), p + ".energies", default_z);
    out["s"] = s_value();
    out["realizations"] = at_least(schema::integer(j, p, "realizations", 100), 1, p + ".realizations");
    out["distance_kind"] = distance_kind();
    out["band"] = at_least(schema::integer(j, p, "band", 0), 0, p + ".band");
    out["selector"] = sel("selector", json{{"kind", "full"}});
  } else if (kind == "fit") {
    schema::expect_object(j, p, {"kind", "samples", "s", "distance_kind", "energy_index"});
    out["samples"] = schema::string(j, p, "samples");
    out["s"] = s_value();
    out["distance_kind"] = distance_kind();
    out["energy_index"] = at_least(schema::integer(j, p, "energy_index", 0), 0, p + ".energy_index");
  } else if (kind == "correlator") {
    schema::expect_object(j, p, {"kind", "pairs", "window", "times", "realizations", "tolerance"});
    out["pairs"] = pairs();
    out["window"] = normalize_window(schema::find(j, "window"), p + ".window");
    out["times"] = normalize_times(schema::find(j, "times"), p + ".times");
    out["realizations"] = at_least(schema::integer(j, p, "realizations", 20), 1, p + ".realizations");
    out["tolerance"] = positive(schema::number(j, p, "tolerance", 1e-10), p + ".tolerance");
  } else if (kind == "ct-probe") {
    schema::expect_object(j, p, {"kind", "band", "energy", "selector", "pairs", "realization"});
    const auto band = at_least(schema::integer(j, p, "band", 0), 0, p + ".band");
    out["band"] = band;
    out["energy"] = normalize_energy(schema::find(j, "energy"), p + ".energy", {0.25, 0.0});
    out["selector"] = sel("selector", json{{"kind", "band_out"}, {"k", band}});
    out["pairs"] = pairs();
    out["realization"] = schema::unsigned_integer(j, p, "realization", 0);
  } else if (kind == "basis-info") {
    schema::expect_object(j, p, {"kind", "dump_basis", "export_matrix", "realization"});
    out["dump_basis"] = schema::boolean(j, p, "dump_basis", true);
    out["export_matrix"] = schema::boolean(j, p, "export_matrix", false);
    out["realization"] = schema::unsigned_integer(j, p, "realization", 0);
  } else {  // tail
    schema::expect_object(j, p, {"kind", "pairs", "energy", "samples", "realization"});
    out["pairs"] = pairs();
    out["energy"] = normalize_energy(schema::find(j, "energy"), p + ".energy", {0.25, 1e-6});
    out["samples"] = at_least(schema::integer(j, p, "samples", 10000), 1, p + ".samples");
    out["realization"] = schema::unsigned_integer(j, p, "realization", 0);
  }
  return out;
}

}  // namespace detail

/// Validates a config document. Returns the parsed config; `normalized`
/// receives the echo (all defaults filled in).
inline ExperimentConfig parse_config(const json& doc, json* normalized = nullptr) {
  schema::expect_object(doc, "config", {"model", "region", "truncation", "experiment", "seed", "workers", "output"});
  for (const char* k : {"model", "region", "truncation", "experiment", "seed", "workers"})
    if (!schema::find(doc, k)) schema::fail(k, "required");
  ExperimentConfig cfg;
  json echo;
  echo["model"] = detail::parse_model(doc["model"], cfg.model);
  echo["region"] = detail::parse_region(doc["region"], cfg.model.dimension, cfg.region);
  echo["truncation"] = detail::parse_truncation(doc["truncation"], cfg.truncation);
  cfg.experiment = detail::parse_experiment(doc["experiment"]);
  cfg.kind = cfg.experiment["kind"].get<std::string>();
  echo["experiment"] = cfg.experiment;
  cfg.seed = schema::unsigned_integer(doc, "", "seed");
  const auto workers = schema::integer(doc, "", "workers");
  if (workers < 1 || workers > 1024) schema::fail("workers", "must be in [1, 1024]");
  cfg.workers = static_cast<unsigned>(workers);
  echo["seed"] = cfg.seed;
  echo["workers"] = workers;
  json output{{"dir", "out"}};
  if (const json* o = schema::find(doc, "output")) {
    schema::expect_object(*o, "output", {"dir"});
    output["dir"] = schema::string(*o, "output", "dir", "out");
  }
  cfg.output_dir = output["dir"].get<std::string>();
  if (cfg.output_dir.empty()) schema::fail("output.dir", "must be non-empty");
  echo["output"] = output;
  if (normalized) *normalized = std::move(echo);
  return cfg;
}

inline json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::ConfigInvalid, path + ": cannot open");
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::ConfigInvalid, path + ": " + e.what());
  }
}

/// Applies "a.b.c=value". The value is parsed as JSON when possible, else taken as a string.
inline void apply_override(json& doc, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) throw Error(ErrorCode::ConfigInvalid, "override '" + assignment + "': expected key=value");
  const std::string key = assignment.substr(0, eq), raw = assignment.substr(eq + 1);
  json value = json::parse(raw, nullptr, false);
  if (value.is_discarded()) value = raw;
  json* node = &doc;
  std::size_t start = 0;
  while (true) {
    const auto dot = key.find('.', start);
    const std::string part = key.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
    if (part.empty()) throw Error(ErrorCode::ConfigInvalid, "override '" + assignment + "': empty path component");
    if (!node->is_object()) throw Error(ErrorCode::ConfigInvalid, "override '" + key + "': parent is not an object");
    if (dot == std::string::npos) {
      (*node)[part] = value;
      return;
    }
    node = &(*node)[part];
    if (node->is_null()) *node = json::object();
    start = dot + 1;
  }
}

inline std::string canonical_dump(const json& j) { return j.dump(-1, ' ', false, json::error_handler_t::strict); }

/// Hex SHA-1 of "blob <len>\0<canonical json>", as git would hash the text.
inline std::string config_hash(const json& normalized) {
  const std::string body = canonical_dump(normalized);
  std::string payload = "blob " + std::to_string(body.size());
  payload.push_back('\0');
  payload += body;
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(payload.data(), payload.size(), digest, &len, EVP_sha1(), nullptr) != 1)
    throw Error(ErrorCode::ComputeFailed, "sha1 failed");
  static const char* hex = "0123456789abcdef";
  std::string out;
  for (unsigned i = 0; i < len; ++i) {
    out.push_back(hex[digest[i] >> 4]);
    out.push_back(hex[digest[i] & 15]);
  }
  return out;
}

/// The configuration `holstein_lab verify` runs when no file is given.
inline json default_config() {
  return json::parse(R"({
    "model": {"D": 1, "gamma": 0.05, "omega": 1.0, "beta_re": 0.5, "beta_im": 0.0, "v_plus": 0.5, "density": "uniform"},
    "region": {"extent": [8]},
    "truncation": {"k_max": 2},
    "experiment": {"kind": "verify"},
    "seed": 1,
    "workers": 1
  })");
}

}  // namespace holstein
