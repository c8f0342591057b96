#pragma once

// Experiment orchestration behind the holstein_lab binary: resolves pair and
// subspace selectors against a basis, runs one experiment kind and writes CSV
// tables plus a JSON summary.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "holstein/assembly.hpp"
#include "holstein/config.hpp"
#include "holstein/errors.hpp"
#include "holstein/model.hpp"
#include "holstein/oscillator.hpp"
#include "holstein/resolvent.hpp"
#include "holstein/state_space.hpp"
#include "holstein/statistics.hpp"

namespace holstein {

// ---------------------------------------------------------------------------
// CSV

inline std::string format_double(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

inline std::string csv_quote(const std::string& field) {
  if (field.find_first_of(",\"\r\n") == std::string::npos) return field;
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

class CsvWriter {
 public:
  CsvWriter(const std::filesystem::path& path, const std::vector<std::string>& header) : out_(path, std::ios::binary) {
    if (!out_) throw Error(ErrorCode::ComputeFailed, "cannot write " + path.string());
    row(header);
  }

  void row(const std::vector<std::string>& fields) {
    for (std::size_t i = 0; i < fields.size(); ++i) {
      if (i) out_ << ',';
      out_ << csv_quote(fields[i]);
    }
    out_ << "\r\n";
  }

 private:
  std::ofstream out_;
};

/// RFC-4180 reader; returns rows including the header.
inline std::vector<std::vector<std::string>> read_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::ConfigInvalid, path + ": cannot open");
  std::stringstream ss;
  ss << in.rdbuf();
  const std::string text = ss.str();
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> row;
  std::string field;
  bool quoted = false, any = false;
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        field += c;
      }
      continue;
    }
    if (c == '"') {
      quoted = true;
      any = true;
    } else if (c == ',') {
      row.push_back(std::move(field));
      field.clear();
      any = true;
    } else if (c == '\n' || c == '\r') {
      if (c == '\r' && i + 1 < text.size() && text[i + 1] == '\n') ++i;
      if (any || !field.empty()) {
        row.push_back(std::move(field));
        rows.push_back(std::move(row));
      }
      row.clear();
      field.clear();
      any = false;
    } else {
      field += c;
      any = true;
    }
  }
  if (quoted) throw Error(ErrorCode::ConfigInvalid, path + ": unterminated quote");
  if (any || !field.empty()) {
    row.push_back(std::move(field));
    rows.push_back(std::move(row));
  }
  return rows;
}

// ---------------------------------------------------------------------------
// Selector resolution

inline std::size_t resolve_state(const BasisEnumeration& basis, const json& state) {
  const auto& region = basis.region();
  const std::size_t site = region.index_of(Site{state["site"].get<std::vector<int>>()});
  std::vector<OscillatorConfig::Entry> entries;
  for (const auto& e : state["excitations"])
    entries.emplace_back(static_cast<std::uint32_t>(region.index_of(Site{e["site"].get<std::vector<int>>()})),
                         e["count"].get<std::uint32_t>());
  return basis.index(site, OscillatorConfig::from_entries(std::move(entries)));
}

inline std::vector<IndexPair> resolve_pairs(const BasisEnumeration& basis, const json& spec) {
  const auto kind = spec["kind"].get<std::string>();
  std::vector<IndexPair> out;
  const OscillatorConfig vacuum;
  if (kind == "vacuum_chain") {
    const auto& region = basis.region();
    const std::size_t anchor = region.index_of(Site{spec["anchor"].get<std::vector<int>>()});
    const int lo = spec["min_distance"].get<int>(), hi = spec["max_distance"].get<int>();
    for (int d = lo; d <= hi; ++d)
      for (std::size_t y = 0; y < region.size(); ++y)
        if (region.distance_index(anchor, y) == d) out.emplace_back(basis.index(y, vacuum), basis.index(anchor, vacuum));
    if (out.empty()) throw Error(ErrorCode::ConfigInvalid, "experiment.pairs: vacuum_chain selects no sites");
  } else if (kind == "indices") {
    for (const auto& p : spec["pairs"]) {
      const auto a = p[0].get<std::size_t>(), b = p[1].get<std::size_t>();
      if (a >= basis.size() || b >= basis.size())
        throw Error(ErrorCode::ConfigInvalid, "experiment.pairs: index beyond basis size " + std::to_string(basis.size()));
      out.emplace_back(a, b);
    }
  } else if (kind == "explicit") {
    for (const auto& p : spec["pairs"]) out.emplace_back(resolve_state(basis, p["row"]), resolve_state(basis, p["col"]));
  } else {  // random
    CounterRng rng(spec["seed"].get<std::uint64_t>(), 0x7061697273ULL, 0);
    const auto count = spec["count"].get<std::size_t>();
    for (std::size_t i = 0; i < count; ++i) {
      const auto a = static_cast<std::size_t>(rng() % basis.size());
      const auto b = static_cast<std::size_t>(rng() % basis.size());
      out.emplace_back(a, b);
    }
  }
  return out;
}

inline SubspaceSelector resolve_selector(const BasisEnumeration& basis, const json& spec) {
  const auto kind = spec["kind"].get<std::string>();
  const auto& region = basis.region();
  auto sites = [&](const char* key) {
    std::vector<std::size_t> idx;
    for (const auto& c : spec[key]) idx.push_back(region.index_of(Site{c.get<std::vector<int>>()}));
    return idx;
  };
  if (kind == "full") return SubspaceSelector::full();
  if (kind == "band_in") return SubspaceSelector::band_in(spec["k"].get<int>());
  if (kind == "band_out") return SubspaceSelector::band_out(spec["k"].get<int>());
  if (kind == "band_split") return SubspaceSelector::band_split(spec["k"].get<int>());
  if (kind == "positions") return SubspaceSelector::positions(sites("sites"));
  return SubspaceSelector::position_split(region, sites("gamma"));
}

inline std::vector<cplx> resolve_energies(const json& arr) {
  std::vector<cplx> out;
  for (const auto& z : arr) out.emplace_back(z[0].get<double>(), z[1].get<double>());
  return out;
}

inline cplx resolve_energy(const json& z) { return {z[0].get<double>(), z[1].get<double>()}; }

inline json pair_distances_json(const PairDistances& d) {
  return json{{"lattice", d.lattice}, {"upsilon", d.upsilon}, {"collapsed", d.collapsed},
              {"walk", d.walk},       {"r", d.r},             {"d", d.d}};
}

// ---------------------------------------------------------------------------
// Verify suite

struct CheckResult {
  std::string name;
  double measured = 0.0;
  double tolerance = 0.0;
  bool pass = false;
  bool skipped = false;
  std::string detail;
};

struct VerifyOptions {
  std::map<std::string, double> tolerances;  // overrides by check name
  int max_n = 10;
  std::size_t metric_samples = 2000;
  cplx energy{0.25, 1e-3};
  std::size_t gri_pairs = 10;
  bool flip_hopping_sign = false;
  std::uint64_t seed = 1;
};

inline const std::map<std::string, double>& default_tolerances() {
  static const std::map<std::string, double> t{
      {"unitarity", 1e-10},   {"squaresum", 1e-8},  {"hermiticity", 1e-12},   {"diagonal", 1e-13},
      {"metric_axioms", 1e-12}, {"gre", 1e-8},      {"gre2", 1e-8},           {"firstres", 1e-8},
      {"firstres2", 1e-8},    {"firstresout", 1e-8}, {"band_containment", 1e-9}};
  return t;
}

namespace detail {

inline double max_unitarity_defect(int max_n, cplx beta) {
  double worst = 0.0;
  for (int n = 0; n <= max_n; ++n) {
    const auto sum = oscillator::adaptive_sum([&](int m) { return std::norm(oscillator::displacement_element(m, n, beta)); },
                                              oscillator::detail::displacement_peak_cutoff(n, std::abs(beta)));
    worst = std::max(worst, std::abs(sum.value - 1.0));
  }
  return worst;
}

inline double max_squaresum_defect(int max_n, cplx beta) {
  double worst = 0.0;
  for (double mu : {0.1, 0.3, 0.5})
    for (int n = 0; n <= max_n; ++n) {
      const double lhs = oscillator::weighted_square_sum(n, beta, mu).value;
      const double rhs = oscillator::weighted_square_sum_closed_form(n, beta, mu);
      worst = std::max(worst, std::abs(lhs - rhs) / std::abs(rhs));
    }
  return worst;
}

/// Largest violation of the metric axioms over random states.
inline double max_metric_violation(const BasisEnumeration& basis, std::size_t samples, std::uint64_t seed) {
  const auto& region = basis.region();
  CounterRng rng(seed, 0x6d6574726963ULL, 0);
  double worst = 0.0;
  auto bump = [&](double v) { worst = std::max(worst, v); };
  auto pick = [&] { return static_cast<std::size_t>(rng() % basis.size()); };
  auto walk_ok = [&](const BasisState& s, const BasisState& t) {
    return disagreement_sites(s.config, t.config).size() <= kMaxWaypoints;
  };
  for (std::size_t i = 0; i < samples; ++i) {
    const auto a = basis.state(pick()), b = basis.state(pick()), c = basis.state(pick());
    const double ab = upsilon(region, a.site, a.config, b.site, b.config);
    const double ba = upsilon(region, b.site, b.config, a.site, a.config);
    const double bc = upsilon(region, b.site, b.config, c.site, c.config);
    const double ac = upsilon(region, a.site, a.config, c.site, c.config);
    bump(std::abs(ab - ba));
    bump(upsilon(region, a.site, a.config, a.site, a.config));
    bump(ac - ab - bc);
    if (walk_ok(a, b) && walk_ok(b, c) && walk_ok(a, c)) {
      const double lab = walk_metric_L(region, a.site, a.config, b.site, b.config);
      const double lbc = walk_metric_L(region, b.site, b.config, c.site, c.config);
      const double lac = walk_metric_L(region, a.site, a.config, c.site, c.config);
      bump(ab - lab);
      bump(lac - lab - lbc);
    }
    const double r = r_metric(a.config, b.config);
    const double lower = std::abs(std::sqrt(static_cast<double>(a.config.total())) -
                                  std::sqrt(static_cast<double>(b.config.total())));
    for (int k = 0; k <= basis.max_total(); ++k) {
      const double rk = collapsed_metric(a.config, b.config, k, region.size());
      bump(rk - r);
      bump(lower - rk - 1e-15 * lower);
    }
  }
  return worst;
}

inline double max_band_excursion(const Eigen::VectorXd& values, const ModelParams& params, int k_max) {
  double worst = 0.0;
  for (Eigen::Index i = 0; i < values.size(); ++i) {
    double best = std::numeric_limits<double>::infinity();
    for (int k = 0; k <= k_max; ++k) {
      const double lo = params.band_lower(k), hi = params.band_upper(k);
      const double out = values(i) < lo ? lo - values(i) : (values(i) > hi ? values(i) - hi : 0.0);
      best = std::min(best, out);
    }
    worst = std::max(worst, best);
  }
  return worst;
}

}  // namespace detail

/// Exact-identity checks on one configuration. Each entry reports the
/// measured error against its tolerance.
inline std::vector<CheckResult> verify_suite(const BasisEnumeration& basis, const ModelParams& params,
                                             const VerifyOptions& opt) {
  std::vector<CheckResult> out;
  auto tol = [&](const std::string& name) {
    auto it = opt.tolerances.find(name);
    return it != opt.tolerances.end() ? it->second : default_tolerances().at(name);
  };
  auto add = [&](const std::string& name, double measured, std::string detail = {}) {
    const double t = tol(name);
    out.push_back({name, measured, t, measured <= t, false, std::move(detail)});
  };
  for (const auto& [name, v] : opt.tolerances)
    if (!default_tolerances().count(name)) throw Error(ErrorCode::ConfigInvalid, "experiment.tolerances." + name + ": unknown check");

  add("unitarity", detail::max_unitarity_defect(opt.max_n, params.beta), "n <= " + std::to_string(opt.max_n));
  add("squaresum", detail::max_squaresum_defect(opt.max_n, params.beta),
      "relative, n <= " + std::to_string(opt.max_n) + ", mu in {0.1, 0.3, 0.5}");

  const DisorderSample dis = sample_disorder(basis.region(), params, opt.seed, 0);
  AssemblyOptions aopt;
  if (opt.flip_hopping_sign) aopt.hopping_sign = -1.0;
  const OperatorMatrix h = assemble(basis, params, dis, SubspaceSelector::full(), aopt);
  add("hermiticity", h.hermiticity_defect());

  ModelParams atomic = params;
  atomic.gamma = 0.0;
  const OperatorMatrix h0 = assemble(basis, atomic, dis, SubspaceSelector::full());
  double diag = 0.0;
  for (int c = 0; c < h0.matrix.outerSize(); ++c)
    for (SparseMatrix::InnerIterator it(h0.matrix, c); it; ++it) {
      const auto i = static_cast<std::size_t>(it.row());
      if (it.row() != it.col()) {
        diag = std::max(diag, std::abs(it.value()));
      } else {
        const double want = params.omega * basis.total(i) + dis.values[basis.site_of(i)];
        diag = std::max(diag, std::abs(it.value() - want));
      }
    }
  add("diagonal", diag, "gamma = 0");

  add("metric_axioms", detail::max_metric_violation(basis, opt.metric_samples, opt.seed),
      std::to_string(opt.metric_samples) + " random triples");

  // Resolvent identities on a position split (first half of the sites) and a band split at k = 0.
  CounterRng rng(opt.seed, 0x677269ULL, 0);
  auto pick = [&](const std::vector<std::size_t>& from) { return from[static_cast<std::size_t>(rng() % from.size())]; };
  std::vector<std::size_t> everything(basis.size());
  for (std::size_t i = 0; i < everything.size(); ++i) everything[i] = i;
  std::vector<std::size_t> off_shell;
  for (std::size_t i = 0; i < basis.size(); ++i)
    if (basis.total(i) != 0) off_shell.push_back(i);
  const auto& shell0 = basis.shell(0);
  std::vector<IndexPair> pairs;
  for (std::size_t i = 0; i < opt.gri_pairs; ++i) pairs.emplace_back(pick(everything), pick(everything));
  std::vector<IndexPair> band_pairs = pairs;
  if (!off_shell.empty())
    for (std::size_t i = 0; i < opt.gri_pairs; ++i) band_pairs.emplace_back(pick(off_shell), pick(shell0));
  std::vector<std::size_t> half;
  for (std::size_t s = 0; s < (basis.region().size() + 1) / 2; ++s) half.push_back(s);
  const auto pos = verify_gri(basis, params, dis, SubspaceSelector::position_split(basis.region(), half), opt.energy, pairs);
  for (const auto& name : {"gre", "gre2"})
    add(name, pos.residuals.at(name), std::to_string(pos.pairs_checked.at(name)) + " pairs");
  const auto band = verify_gri(basis, params, dis, SubspaceSelector::band_split(0), opt.energy, band_pairs);
  for (const auto& name : {"firstres", "firstres2", "firstresout"})
    add(name, band.residuals.at(name), std::to_string(band.pairs_checked.at(name)) + " pairs");

  if (h.dimension() <= kDefaultDenseLimit) {
    // the sampled potential plus the two constant corners v = 0 and v = V_+
    double excursion = detail::max_band_excursion(spectrum(h).values, params, basis.max_total());
    for (double corner : {0.0, params.v_plus}) {
      DisorderSample flat = dis;
      std::fill(flat.values.begin(), flat.values.end(), corner);
      const OperatorMatrix hc = assemble(basis, params, flat, SubspaceSelector::full(), aopt);
      excursion = std::max(excursion, detail::max_band_excursion(spectrum(hc).values, params, basis.max_total()));
    }
    add("band_containment", excursion, std::to_string(h.dimension()) + " eigenvalues x 3 potentials");
  } else {
    CheckResult skipped{"band_containment", 0.0, tol("band_containment"), true, true, "dimension above dense limit"};
    out.push_back(skipped);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Runner

struct RunOutcome {
  int exit_code = 0;
  json summary;
  std::vector<std::string> artifacts;
};

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitCompute = 3;

inline int exit_code_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::ConfigInvalid:
    case ErrorCode::SiteOutsideRegion:
    case ErrorCode::SubsetOutsideRegion:
    case ErrorCode::SelectorMismatch:
    case ErrorCode::EmptyRegion:
      return kExitConfig;
    default:
      return kExitCompute;
  }
}

namespace detail {

struct RunContext {
  explicit RunContext(const ExperimentConfig& c) : cfg(c) {}

  const ExperimentConfig& cfg;
  std::filesystem::path dir;
  json results = json::object();
  json diagnostics = json::object();
  std::vector<std::string> artifacts;
  int exit_code = kExitOk;

  std::filesystem::path artifact(const std::string& name) {
    artifacts.push_back(name);
    return dir / name;
  }
};

inline std::vector<double> time_grid(const json& spec) {
  std::vector<double> t;
  if (spec.is_array()) {
    for (const auto& v : spec) t.push_back(v.get<double>());
    return t;
  }
  const double tmax = spec["t_max"].get<double>();
  const auto count = spec["count"].get<std::size_t>();
  for (std::size_t i = 0; i < count; ++i) t.push_back(count == 1 ? 0.0 : tmax * static_cast<double>(i) / (count - 1));
  return t;
}

inline EnergyWindow window_of(const json& spec, const ModelParams& params) {
  if (spec.contains("band")) return EnergyWindow::band_window(params, spec["band"].get<int>());
  return {spec["lower"].get<double>(), spec["upper"].get<double>(), true};
}

inline void run_verify(RunContext& ctx, const BasisEnumeration& basis) {
  const auto& e = ctx.cfg.experiment;
  VerifyOptions opt;
  for (const auto& [name, v] : e["tolerances"].items()) opt.tolerances[name] = v.get<double>();
  opt.max_n = e["max_n"].get<int>();
  opt.metric_samples = e["metric_samples"].get<std::size_t>();
  opt.energy = resolve_energy(e["energy"]);
  opt.gri_pairs = e["gri_pairs"].get<std::size_t>();
  opt.flip_hopping_sign = e["hooks"]["flip_hopping_sign"].get<bool>();
  opt.seed = ctx.cfg.seed;
  const auto checks = verify_suite(basis, ctx.cfg.model, opt);
  CsvWriter csv(ctx.artifact("verify.csv"), {"check", "measured", "tolerance", "pass", "skipped", "detail"});
  json arr = json::array();
  bool all = true;
  for (const auto& c : checks) {
    csv.row({c.name, format_double(c.measured), format_double(c.tolerance), c.pass ? "true" : "false",
             c.skipped ? "true" : "false", c.detail});
    arr.push_back(json{{"check", c.name}, {"measured", c.measured}, {"tolerance", c.tolerance}, {"pass", c.pass},
                       {"skipped", c.skipped}, {"detail", c.detail}});
    all = all && c.pass;
  }
  ctx.results["checks"] = arr;
  ctx.results["all_pass"] = all;
  if (!all) ctx.exit_code = kExitCompute;
}

inline void run_greens(RunContext& ctx, const BasisEnumeration& basis) {
  const auto& e = ctx.cfg.experiment;
  const auto pairs = resolve_pairs(basis, e["pairs"]);
  const auto energies = resolve_energies(e["energies"]);
  const auto selector = resolve_selector(basis, e["selector"]);
  const DisorderSample dis = sample_disorder(basis.region(), ctx.cfg.model, ctx.cfg.seed, e["realization"].get<std::uint64_t>());
  const OperatorMatrix op = assemble(basis, ctx.cfg.model, dis, selector);
  CsvWriter csv(ctx.artifact("greens.csv"),
                {"energy_re", "energy_im", "row", "col", "row_state", "col_state", "g_re", "g_im", "abs_g"});
  double top = 0.0;
  json rows = json::array();
  for (const auto& z : energies) {
    const ShiftedSolver solver(op, z);
    std::map<std::size_t, Eigen::VectorXcd> cols;
    for (const auto& [a, b] : pairs) {
      cplx g = 0.0;
      const auto la = op.local(a), lb = op.local(b);
      if (la && lb) {
        auto it = cols.find(b);
        if (it == cols.end()) {
          it = cols.emplace(b, solver.column(*lb)).first;
          top = std::max(top, top_shell_weight(basis, op, it->second));
        }
        g = it->second(static_cast<Eigen::Index>(*la));
      }
      csv.row({format_double(z.real()), format_double(z.imag()), std::to_string(a), std::to_string(b), basis.describe(a),
               basis.describe(b), format_double(g.real()), format_double(g.imag()), format_double(std::abs(g))});
      rows.push_back(json{{"row", a}, {"col", b}, {"energy", {z.real(), z.imag()}}, {"g", {g.real(), g.imag()}}});
    }
  }
  ctx.results["greens"] = rows;
  ctx.results["selector"] = selector.describe();
  ctx.diagnostics["operator_dimension"] = op.dimension();
  ctx.diagnostics["leaked_weight"] = op.leaked_weight;
  ctx.diagnostics["top_shell_weight"] = top;
  ctx.diagnostics["top_shell_flag"] = top > kTopShellFlagThreshold;
}

inline json fit_json(const DecayFit& f) {
  return json{{"rate", f.rate},         {"intercept", f.intercept}, {"stderr", f.stderr_},
              {"ci95", {f.ci_low, f.ci_high}}, {"rms_residual", f.rms_residual}, {"distinct_distances", f.distinct_distances},
              {"distance_kind", to_string(f.kind)}, {"bootstrap_resamples", f.bootstrap_used}};
}

inline void run_sweep(RunContext& ctx, const std::shared_ptr<const BasisEnumeration>& basis) {
  const auto& e = ctx.cfg.experiment;
  SweepConfig sc;
  sc.params = ctx.cfg.model;
  sc.basis = basis;
  sc.selector = resolve_selector(*basis, e["selector"]);
  sc.pairs = resolve_pairs(*basis, e["pairs"]);
  sc.energies = resolve_energies(e["energies"]);
  sc.s = e["s"].get<double>();
  sc.realizations = e["realizations"].get<std::size_t>();
  sc.seed = ctx.cfg.seed;
  sc.workers = ctx.cfg.workers;
  const int band = e["band"].get<int>();
  const auto kind = *parse_distance_kind(e["distance_kind"].get<std::string>());
  const SweepResult res = fractional_moment_sweep(sc);

  std::vector<PairDistances> dist;
  for (const auto& [a, b] : sc.pairs) dist.push_back(pair_distances(*basis, a, b, band));
  {
    CsvWriter csv(ctx.artifact("samples.csv"), {"realization", "energy_index", "pair_index", "row", "col", "lattice",
                                                "upsilon", "collapsed", "d", "abs_green"});
    for (const auto& r : res.samples) {
      if (!r.ok) continue;
      for (std::size_t ei = 0; ei < sc.energies.size(); ++ei)
        for (std::size_t p = 0; p < sc.pairs.size(); ++p)
          csv.row({std::to_string(r.realization), std::to_string(ei), std::to_string(p), std::to_string(sc.pairs[p].first),
                   std::to_string(sc.pairs[p].second), std::to_string(dist[p].lattice), std::to_string(dist[p].upsilon),
                   format_double(dist[p].collapsed), format_double(dist[p].d),
                   format_double(r.abs_green[ei * sc.pairs.size() + p])});
    }
  }
  {
    CsvWriter csv(ctx.artifact("moments.csv"),
                  {"energy_re", "energy_im", "pair_index", "row_state", "col_state", "lattice", "upsilon", "collapsed",
                   "d", "s", "mean_abs_g_s", "stderr", "count"});
    for (const auto& row : res.rows) {
      const auto& d = dist[row.pair];
      const auto [a, b] = sc.pairs[row.pair];
      csv.row({format_double(sc.energies[row.energy].real()), format_double(sc.energies[row.energy].imag()),
               std::to_string(row.pair), basis->describe(a), basis->describe(b), std::to_string(d.lattice),
               std::to_string(d.upsilon), format_double(d.collapsed), format_double(d.d), format_double(sc.s),
               format_double(row.mean), format_double(row.stderr_), std::to_string(row.count)});
    }
  }
  json fits = json::array();
  for (std::size_t ei = 0; ei < sc.energies.size(); ++ei) {
    json entry{{"energy", {sc.energies[ei].real(), sc.energies[ei].imag()}}};
    try {
      entry["fit"] = fit_json(decay_fit(sc, res, ei, kind, band));
    } catch (const Error& err) {
      entry["fit_error"] = err.what();
    }
    fits.push_back(entry);
  }
  ctx.results["fits"] = fits;
  ctx.results["pairs"] = sc.pairs.size();
  ctx.results["realizations_ok"] = sc.realizations - res.failures.size();
  ctx.diagnostics["failures"] = res.failures;
  ctx.diagnostics["partial"] = !res.failures.empty();
  ctx.diagnostics["top_shell_weight"] = res.max_top_shell_weight;
  ctx.diagnostics["top_shell_flag"] = res.top_shell_flag;
}

inline void run_fit(RunContext& ctx) {
  const auto& e = ctx.cfg.experiment;
  const auto rows = read_csv(e["samples"].get<std::string>());
  if (rows.empty()) throw Error(ErrorCode::ConfigInvalid, "experiment.samples: empty file");
  const auto& header = rows[0];
  auto col = [&](const std::string& name) {
    auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) throw Error(ErrorCode::ConfigInvalid, "experiment.samples: missing column " + name);
    return static_cast<std::size_t>(it - header.begin());
  };
  const auto kind = *parse_distance_kind(e["distance_kind"].get<std::string>());
  const char* dist_col = kind == DistanceKind::Lattice ? "lattice" : kind == DistanceKind::Upsilon ? "upsilon" : kind == DistanceKind::D ? "d" : "";
  const std::size_t c_real = col("realization"), c_e = col("energy_index"), c_p = col("pair_index"), c_g = col("abs_green");
  const std::size_t c_ups = col("upsilon"), c_col = col("collapsed");
  const std::size_t c_dist = *dist_col ? col(dist_col) : c_ups;
  const double s = e["s"].get<double>();
  const auto want = e["energy_index"].get<std::size_t>();
  std::map<std::size_t, std::map<std::size_t, double>> table;  // realization -> pair -> |G|^s
  std::map<std::size_t, double> distance;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const auto& r = rows[i];
    if (r.size() != header.size()) throw Error(ErrorCode::ConfigInvalid, "experiment.samples: ragged row " + std::to_string(i));
    if (std::stoul(r[c_e]) != want) continue;
    const auto p = std::stoul(r[c_p]);
    table[std::stoul(r[c_real])][p] = std::pow(std::stod(r[c_g]), s);
    distance[p] = kind == DistanceKind::UpsilonPlusCollapsed ? std::stod(r[c_ups]) + std::stod(r[c_col]) : std::stod(r[c_dist]);
  }
  if (table.empty()) throw Error(ErrorCode::ConfigInvalid, "experiment.samples: no rows for energy_index");
  std::vector<double> dist;
  for (const auto& [p, d] : distance) dist.push_back(d);
  std::vector<std::vector<double>> samples;
  for (const auto& [r, m] : table) {
    if (m.size() != distance.size()) continue;
    std::vector<double> row;
    for (const auto& [p, v] : m) row.push_back(v);
    samples.push_back(std::move(row));
  }
  const DecayFit fit = decay_fit(dist, samples, kind, mix64(ctx.cfg.seed + 0x66697400ULL + want));
  ctx.results["fit"] = fit_json(fit);
  ctx.results["realizations"] = samples.size();
}

inline void run_correlator(RunContext& ctx, const std::shared_ptr<const BasisEnumeration>& basis) {
  const auto& e = ctx.cfg.experiment;
  CorrelatorSweepConfig cc;
  cc.params = ctx.cfg.model;
  cc.basis = basis;
  cc.pairs = resolve_pairs(*basis, e["pairs"]);
  cc.window = window_of(e["window"], ctx.cfg.model);
  cc.times = time_grid(e["times"]);
  cc.realizations = e["realizations"].get<std::size_t>();
  cc.seed = ctx.cfg.seed;
  cc.workers = ctx.cfg.workers;
  cc.tolerance = e["tolerance"].get<double>();
  const auto res = correlator_sweep(cc);
  CsvWriter csv(ctx.artifact("correlator.csv"), {"pair_index", "row_state", "col_state", "lattice", "mean_q", "stderr"});
  for (std::size_t p = 0; p < cc.pairs.size(); ++p) {
    const auto [a, b] = cc.pairs[p];
    csv.row({std::to_string(p), basis->describe(a), basis->describe(b),
             std::to_string(basis->region().distance_index(basis->site_of(a), basis->site_of(b))),
             format_double(res.mean_q[p]), format_double(res.stderr_q[p])});
  }
  ctx.results["violations"] = res.violations;
  ctx.results["amplitude_samples"] = res.amplitude_samples;
  ctx.results["max_excess"] = res.max_excess;
  if (res.fit) ctx.results["fit"] = fit_json(*res.fit);
  else ctx.results["fit_error"] = res.fit_error;
  ctx.diagnostics["failures"] = res.failures;
  ctx.diagnostics["partial"] = !res.failures.empty();
}

inline void run_ct_probe(RunContext& ctx, const BasisEnumeration& basis) {
  const auto& e = ctx.cfg.experiment;
  const int band = e["band"].get<int>();
  const auto selector = resolve_selector(basis, e["selector"]);
  const auto pairs = resolve_pairs(basis, e["pairs"]);
  const DisorderSample dis = sample_disorder(basis.region(), ctx.cfg.model, ctx.cfg.seed, e["realization"].get<std::uint64_t>());
  const auto res = combes_thomas_probe(basis, ctx.cfg.model, dis, selector, band, resolve_energy(e["energy"]), pairs);
  CsvWriter csv(ctx.artifact("ct_probe.csv"), {"row_state", "col_state", "lattice", "upsilon", "collapsed", "walk", "r",
                                               "d", "g_re", "g_im", "abs_g"});
  std::vector<double> xs, ys;
  for (const auto& r : res.records) {
    const auto& d = r.distances;
    csv.row({basis.describe(r.a), basis.describe(r.b), std::to_string(d.lattice), std::to_string(d.upsilon),
             format_double(d.collapsed), std::to_string(d.walk), format_double(d.r), format_double(d.d),
             format_double(r.green.real()), format_double(r.green.imag()), format_double(std::abs(r.green))});
    if (d.d >= 0 && std::abs(r.green) > 0) {
      xs.push_back(d.d);
      ys.push_back(std::log(std::abs(r.green)));
    }
  }
  ctx.results["gap"] = res.gap;
  ctx.results["gap_bound"] = res.gap_bound;
  ctx.results["dist_to_spectrum"] = res.dist_to_spectrum;
  ctx.results["resolvent_norm"] = res.resolvent_norm;
  ctx.results["norm_within_dist"] = res.norm_within_dist;
  ctx.results["norm_within_gap_bound"] = res.norm_within_gap_bound;
  std::set<double> distinct(xs.begin(), xs.end());
  if (distinct.size() >= 2) {
    const auto f = fit_line(xs, ys);
    ctx.results["nu_hat"] = -f.slope;
    ctx.results["nu_hat_stderr"] = f.slope_stderr;
  }
}

inline void run_basis_info(RunContext& ctx, const BasisEnumeration& basis) {
  const auto& e = ctx.cfg.experiment;
  ctx.results["dimension"] = basis.size();
  ctx.results["configs_per_site"] = basis.config_count();
  json shells = json::array();
  for (int k = 0; k <= basis.max_total(); ++k) shells.push_back(basis.shell(k).size());
  ctx.results["shell_sizes"] = shells;
  if (e["dump_basis"].get<bool>()) {
    CsvWriter csv(ctx.artifact("basis.csv"), {"index", "site", "config", "total"});
    for (std::size_t i = 0; i < basis.size(); ++i)
      csv.row({std::to_string(i), to_string(basis.region().site(basis.site_of(i))),
               to_string(basis.config_of(i), basis.region()), std::to_string(basis.total(i))});
  }
  const DisorderSample dis = sample_disorder(basis.region(), ctx.cfg.model, ctx.cfg.seed, e["realization"].get<std::uint64_t>());
  const OperatorMatrix op = assemble(basis, ctx.cfg.model, dis, SubspaceSelector::full());
  ctx.results["nonzeros"] = op.matrix.nonZeros();
  ctx.results["hermiticity_defect"] = op.hermiticity_defect();
  ctx.diagnostics["leaked_weight"] = op.leaked_weight;
  if (e["export_matrix"].get<bool>()) {
    CsvWriter csv(ctx.artifact("matrix.csv"), {"row", "col", "re", "im"});
    for (int c = 0; c < op.matrix.outerSize(); ++c)
      for (SparseMatrix::InnerIterator it(op.matrix, c); it; ++it)
        csv.row({std::to_string(it.row()), std::to_string(it.col()), format_double(it.value().real()),
                 format_double(it.value().imag())});
  }
}

inline void run_tail(RunContext& ctx, const std::shared_ptr<const BasisEnumeration>& basis) {
  const auto& e = ctx.cfg.experiment;
  const auto pairs = resolve_pairs(*basis, e["pairs"]);
  TailConfig tc;
  tc.params = ctx.cfg.model;
  tc.basis = basis;
  tc.a = pairs.front().first;
  tc.b = pairs.front().second;
  tc.z = resolve_energy(e["energy"]);
  tc.samples = e["samples"].get<std::size_t>();
  tc.seed = ctx.cfg.seed;
  tc.realization = e["realization"].get<std::size_t>();
  const auto res = tail_test(tc);
  CsvWriter csv(ctx.artifact("tail.csv"), {"t", "survival", "count"});
  for (std::size_t i = 0; i < res.t.size(); ++i)
    csv.row({format_double(res.t[i]), format_double(res.survival[i]), std::to_string(res.counts[i])});
  ctx.results["slope"] = res.slope;
  ctx.results["slope_stderr"] = res.slope_stderr;
  ctx.results["envelope"] = res.envelope;
  ctx.results["decade_envelope"] = res.decade_envelope;
  ctx.results["envelope_growth"] = res.envelope_growth;
  ctx.results["moment_half"] = res.moment(0.5);
  ctx.results["moment_half_bound"] = res.moment_bound(0.5);
}

}  // namespace detail

/// Runs a validated config; writes artifacts and summary.json under the output directory.
inline RunOutcome run_experiment(const ExperimentConfig& cfg, const json& normalized) {
  const auto start = std::chrono::steady_clock::now();
  std::filesystem::create_directories(cfg.output_dir);
  detail::RunContext ctx{cfg};
  ctx.dir = cfg.output_dir;
  json timings = json::object();
  RunOutcome outcome;
  try {
    if (cfg.kind == "fit") {
      detail::run_fit(ctx);
    } else {
      const auto basis = cfg.build_basis();
      ctx.diagnostics["basis_dimension"] = basis->size();
      ctx.diagnostics["k_max"] = basis->max_total();
      timings["setup_seconds"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
      if (cfg.kind == "verify") detail::run_verify(ctx, *basis);
      else if (cfg.kind == "greens") detail::run_greens(ctx, *basis);
      else if (cfg.kind == "sweep") detail::run_sweep(ctx, basis);
      else if (cfg.kind == "correlator") detail::run_correlator(ctx, basis);
      else if (cfg.kind == "ct-probe") detail::run_ct_probe(ctx, *basis);
      else if (cfg.kind == "basis-info") detail::run_basis_info(ctx, *basis);
      else detail::run_tail(ctx, basis);
    }
  } catch (const Error& e) {
    ctx.exit_code = exit_code_for(e.code());
    ctx.diagnostics["error"] = json{{"code", to_string(e.code())}, {"message", e.what()}};
    ctx.diagnostics["partial"] = true;
  }
  timings["wall_seconds"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  outcome.summary = json{{"config_hash", config_hash(normalized)},
                         {"config", normalized},
                         {"results", ctx.results},
                         {"timings", timings},
                         {"diagnostics", ctx.diagnostics},
                         {"artifacts", ctx.artifacts},
                         {"exit_code", ctx.exit_code}};
  std::ofstream(std::filesystem::path(cfg.output_dir) / "summary.json") << outcome.summary.dump(2) << "\n";
  outcome.exit_code = ctx.exit_code;
  outcome.artifacts = ctx.artifacts;
  return outcome;
}

}  // namespace holstein
