// starstab command-line driver: one subcommand per run, one JSON config per
// run, artifacts plus a hashed manifest in a per-run directory.
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <iostream>
#include <map>

#include <Eigen/Core>
#include <boost/version.hpp>
#include <openssl/crypto.h>

#include "CLI11.hpp"
#include "checks.hpp"
#include "config.hpp"
#include "starstab/errors.hpp"
#include "starstab/eos.hpp"
#include "starstab/family.hpp"
#include "starstab/functionals.hpp"
#include "starstab/hydro.hpp"
#include "starstab/io.hpp"
#include "starstab/spectral.hpp"
#include "starstab/star.hpp"

namespace fs = std::filesystem;
using namespace starstab;
using cli::Json;
using cli::Section;

namespace {

constexpr const char* kVersion = "1.0.0";

enum Exit { ok = 0, config_error = 2, invariant_violation = 3, numerical_failure = 4 };

struct Run {
  std::string sub;
  fs::path dir;
  std::uint64_t seed = 1;
  Json results = Json::object();
  std::vector<std::string> files;

  std::string path(const std::string& name) {
    files.push_back(name);
    return (dir / name).string();
  }
  void text(const std::string& name, const std::string& body) { io::write_text(path(name), body); }
  void json(const std::string& name, const Json& j) { text(name, j.dump(2) + "\n"); }
};

// Deferred failure: artifacts are written first, then the run reports it.
struct Verdict {
  std::string invariant, numerical;
  void violate(const std::string& what) { invariant += (invariant.empty() ? "" : "; ") + what; }
};

eos::LawSpec read_law(Section s) {
  eos::LawSpec spec;
  spec.kind = s.text("kind", "polytrope");
  if (spec.kind == "polytrope") {
    spec.K = s.number("K", 1.0);
    spec.gamma = s.number("gamma", 1.5);
    spec.allow_out_of_range = s.flag("allow_out_of_range", false);
  } else if (spec.kind == "white_dwarf") {
    spec.A = s.number("A", 1.0);
    spec.B = s.number("B", 1.0);
  } else if (spec.kind == "custom_table") {
    spec.table_path = s.text("table_path", "");
    if (spec.table_path.empty()) throw ConfigError("config field '" + s.path() + ".table_path': required for custom_table");
  } else {
    throw ConfigError("config field '" + s.path() + ".kind': unknown law '" + spec.kind + "'");
  }
  s.finish();
  return spec;
}

star::SolverOptions read_solver(Section s) {
  star::SolverOptions o;
  o.rtol = s.number("rtol", o.rtol);
  o.atol = s.number("atol", o.atol);
  o.max_step_frac = s.number("max_step_frac", o.max_step_frac);
  s.finish();
  return o;
}

// The reference star: solved at star.mu, or loaded from star.profile_json/csv.
functionals::RefPtr read_reference(Section& root) {
  auto h = eos::build_enthalpy(eos::make_law(read_law(root.sub("law"))));
  auto s = root.sub("star");
  star::StarProfile p;
  const std::string pj = s.text("profile_json", ""), pc = s.text("profile_csv", "");
  if (!pj.empty() || !pc.empty()) {
    if (pj.empty() || pc.empty()) throw ConfigError("config field 'star': profile_json and profile_csv go together");
    p = star::read_profile(pj, pc);
    if (p.law_label != h.law().info().label)
      throw ConfigError("config field 'star.profile_json': profile was solved for '" + p.law_label + "', not '" +
                        h.law().info().label + "'");
  } else {
    const double mu = s.number("mu", 1.0);
    p = star::solve_star(h, mu, read_solver(s.sub("solver")));
  }
  s.finish();
  return functionals::make_reference(std::move(p), std::move(h));
}

family::SweepOptions read_sweep(Section s) {
  family::SweepOptions o;
  o.mu_min = s.number("mu_min", o.mu_min);
  o.mu_max = s.number("mu_max", o.mu_max);
  o.samples = s.integer("samples", o.samples);
  o.refine_passes = s.integer("refine_passes", o.refine_passes);
  o.zero_rel = s.number("zero_rel", o.zero_rel);
  o.degenerate_tol = s.number("degenerate_tol", o.degenerate_tol);
  o.threads = s.integer("threads", 0);
  o.solver = read_solver(s.sub("solver"));
  s.finish();
  return o;
}

hydro::HydroConfig read_hydro(Section s) {
  hydro::HydroConfig c;
  c.n_in = s.integer("n_in", c.n_in);
  c.r_dom_factor = s.number("r_dom_factor", c.r_dom_factor);
  c.cfl = s.number("cfl", c.cfl);
  c.floor_rel = s.number("floor_rel", c.floor_rel);
  c.visc = s.number("visc", c.visc);
  c.t_end = s.number("t_end", c.t_end);
  c.cadence = s.number("cadence", c.cadence);
  c.gravity = s.flag("gravity", c.gravity);
  c.q = s.number("q", c.q);
  auto p = s.sub("perturbation");
  c.perturbation.kind = p.text("kind", c.perturbation.kind);
  c.perturbation.amplitude = p.number("amplitude", 1e-2);
  c.perturbation.mass_preserving = p.flag("mass_preserving", c.perturbation.mass_preserving);
  p.finish();
  s.finish();
  hydro::validate(c);
  return c;
}

double gamma0_of(const eos::Enthalpy& h) { return h.law().info().gamma0; }

Json parse(const std::string& text) { return Json::parse(text); }

// ---- subcommands ----

void cmd_eos(Section& root, Run& run, Verdict& v) {
  const auto spec = read_law(root.sub("law"));
  auto s = root.sub("eos");
  const double lo = s.number("rho_min", 1e-6), hi = s.number("rho_max", 1e6);
  const int points = s.integer("points", 61);
  const int samples = s.integer("fenchel_samples", 10000);
  const auto rho_b = s.numbers("fenchel_rho_b", {0.1, 1.0, 10.0});
  auto tol = root.sub("tolerances");
  const double fenchel_tol = tol.number("fenchel", 1e-6);
  tol.finish();
  s.finish();
  if (!(lo > 0.0 && hi > lo) || points < 2) throw ConfigError("config field 'eos': need 0 < rho_min < rho_max, points >= 2");

  const auto law = eos::make_law(spec);
  const auto h = eos::build_enthalpy(law);
  io::Table t;
  t.kind = "eos";
  t.names = {"rho", "P", "dP", "phi", "dphi", "d2phi"};
  t.columns.assign(6, {});
  for (int i = 0; i < points; ++i) {
    const double r = lo * std::pow(hi / lo, static_cast<double>(i) / (points - 1));
    const double row[] = {r, law->pressure(r), law->dpressure(r), h.phi(r), h.dphi(r), h.d2phi(r)};
    for (int k = 0; k < 6; ++k) t.columns[k].push_back(row[k]);
  }
  io::write_csv(run.path("eos.csv"), t);

  const auto rep = eos::validate(*law);
  const auto& info = law->info();
  Json j = {{"format", "starstab-v1 eos"},
            {"label", info.label},
            {"gamma0", info.gamma0},
            {"gamma1", info.gamma1},
            {"K0", info.K0},
            {"K1", info.K1},
            {"enthalpy", h.kind() == eos::EnthalpyKind::closed_form ? "closed_form" : "tabulated"},
            {"validation", {{"ok", rep.ok}, {"failures", rep.failures}}}};
  double worst = 0.0;
  for (double b : rho_b) {
    const double f = eos::fenchel_check(b, samples, h, run.seed);
    worst = std::max(worst, f);
    j["fenchel"].push_back({{"rho_b", b}, {"max_violation", f}});
  }
  run.json("eos.json", j);
  run.results = {{"valid", rep.ok}, {"fenchel_max", worst}};
  if (!rep.ok) v.violate("pressure law fails validation");
  if (worst > fenchel_tol) v.violate("Fenchel-Young violation above tolerance");
}

void cmd_star(Section& root, Run& run, Verdict&) {
  const auto ref = read_reference(root);
  const auto& p = ref->profile;
  star::write_profile(p, run.path("profile.json"), run.path("profile.csv"));
  run.results = {{"mu", p.mu},
                 {"R", p.R},
                 {"M", p.M},
                 {"steady_residual", star::steady_residual(p, ref->enthalpy)},
                 {"relation_residual", star::relation_residual(p, ref->enthalpy)},
                 {"sound_crossing_time", star::sound_crossing_time(p, ref->enthalpy)}};
}

void cmd_family(Section& root, Run& run, Verdict&) {
  const auto h = eos::build_enthalpy(eos::make_law(read_law(root.sub("law"))));
  auto c = family::sweep(h, read_sweep(root.sub("family")));
  std::string note;
  try {
    family::classify(c, gamma0_of(h));
  } catch (const ConfigError& e) {
    note = e.what();  // n^u column left at -1
  }
  family::write_curve(c, run.path("family.csv"), run.path("family.json"));
  run.results = {{"samples", c.size()}, {"events", c.events.size()}, {"degenerate", c.degenerate}};
  if (!note.empty()) run.results["classification"] = note;
}

void cmd_classify(Section& root, Run& run, Verdict& v) {
  const auto h = eos::build_enthalpy(eos::make_law(read_law(root.sub("law"))));
  auto c = family::sweep(h, read_sweep(root.sub("family")));
  auto s = root.sub("classify");
  const int spectral_samples = s.integer("spectral_samples", 5);
  const int n_el = s.integer("n_el", 40);
  s.finish();
  family::classify(c, gamma0_of(h));
  family::write_curve(c, run.path("family.csv"), run.path("family.json"));
  Json j = {{"format", "starstab-v1 classify"}, {"n_u", c.nu}};
  if (spectral_samples > 0) {
    const auto rows = checks::inertia_vs_classifier(h, c, spectral_samples, n_el);
    io::Table t;
    t.kind = "classify";
    t.names = {"mu", "n_u", "n_minus_Lmu_Zmu", "n_zero_Lmu_Zmu", "n_minus_tildeL_l0", "n_zero_tildeL_l0"};
    t.columns.assign(6, {});
    bool all = true;
    for (const auto& r : rows) {
      const double row[] = {r.mu, double(r.nu), double(r.n_minus_Z), double(r.n_zero_Z), double(r.n_minus_l0),
                            double(r.n_zero_l0)};
      for (int k = 0; k < 6; ++k) t.columns[k].push_back(row[k]);
      all = all && r.match();
    }
    io::write_csv(run.path("classify.csv"), t);
    j["spectral_match"] = all;
    if (!all) v.violate("spectral inertia disagrees with the classifier");
  }
  run.json("classify.json", j);
  run.results = j;
  run.results.erase("format");
}

void cmd_spectrum(Section& root, Run& run, Verdict&) {
  const auto ref = read_reference(root);
  auto s = root.sub("spectrum");
  const auto op = spectral::parse_operator(s.text("operator", "tildeL_l0"));
  const int n_el = s.integer("n_el", 40);
  spectral::SpectralOptions o;
  o.degree = s.integer("degree", o.degree);
  o.grading = s.number("grading", o.grading);
  o.cutoff_rel = s.number("cutoff_rel", o.cutoff_rel);
  o.r_out_factor = s.number("r_out_factor", o.r_out_factor);
  s.finish();
  const auto r = spectral::converged_report(ref->ip, op, n_el, o);
  run.text("spectrum.json", spectral::report_json(r));
  io::Table t;
  t.kind = "spectrum";
  t.names = {"index", "eigenvalue", "coarse_eigenvalue"};
  t.columns.assign(3, {});
  for (std::size_t k = 0; k < r.eigenvalues.size(); ++k) {
    t.columns[0].push_back(static_cast<double>(k));
    t.columns[1].push_back(r.eigenvalues[k]);
    t.columns[2].push_back(k < r.coarse_eigenvalues.size() ? r.coarse_eigenvalues[k] : std::nan(""));
  }
  io::write_csv(run.path("eigenvalues.csv"), t);
  run.results = {{"operator", r.tag}, {"n_minus", r.n_minus}, {"n_zero", r.n_zero}, {"lowest", r.eigenvalues.front()}};
  if (op == spectral::Operator::tildeL_l0 && r.n_minus == 0 && r.n_zero == 0)
    run.results["C0"] = spectral::coercivity_constant(r);
}

void cmd_distance(Section& root, Run& run, Verdict& v) {
  const auto ref = read_reference(root);
  auto s = root.sub("distance");
  const std::string state_path = s.text("state", "");
  functionals::PerturbedState st;
  if (!state_path.empty()) {
    st = functionals::read_state(state_path, ref);
  } else {
    const std::string layout = s.text("layout", "nodal");
    const double R_dom = s.number("r_dom_factor", 1.5) * ref->R();
    functionals::PerturbedState base;
    if (layout == "nodal")
      base = functionals::reference_state(ref, R_dom, s.integer("n_in", 2000), s.integer("n_out", 1000));
    else if (layout == "cells")
      base = functionals::reference_cells(ref, R_dom, s.integer("n_in", 400));
    else
      throw ConfigError("config field 'distance.layout': expected nodal or cells");
    st = functionals::random_state(base, run.seed, s.number("amplitude", 0.1), s.flag("mass_preserving", false));
    functionals::write_state(st, run.path("state.csv"));
  }
  auto tol = root.sub("tolerances");
  const bool nodal = st.layout == functionals::Layout::nodal;
  // cell samples satisfy the steady relation only to O(h^2)
  const double tol_id = nodal ? tol.number("decomposition", 1e-8) : tol.number("decomposition_cells", 1e-4);
  const double tol_slack = tol.number("duality_slack", 1e-9);
  tol.finish();
  s.finish();

  const auto d = functionals::distance(st);
  const double residual = functionals::decomposition_check(st);
  const auto g = functionals::duality_gap(st);
  const auto e = functionals::energy_casimir(st);
  Json j = {{"format", "starstab-v1 distance"},
            {"distance", parse(functionals::distance_json(d))},
            {"decomposition_residual", residual},
            {"duality", {{"d2_minus_d4", g.d2_minus_d4}, {"surrogate", g.surrogate}, {"slack", g.slack}}},
            {"energy", {{"kinetic", e.kinetic}, {"internal", e.internal}, {"field", e.field}, {"E", e.E}, {"H", e.H}}}};
  run.json("distance.json", j);
  run.results = {{"d", d.d}, {"decomposition_residual", residual}, {"slack", g.slack}};
  if (residual > tol_id) v.violate("decomposition identity residual above tolerance");
  if (g.slack < -tol_slack) v.violate("negative duality slack");
}

void cmd_evolve(Section& root, Run& run, Verdict& v) {
  const auto ref = read_reference(root);
  const auto c = read_hydro(root.sub("hydro"));
  auto tol = root.sub("tolerances");
  const double tol_M = tol.number("mass", 1e-12), tol_E = tol.number("energy_rel", 1e-5);
  tol.finish();
  const auto tr = hydro::evolve(hydro::make_initial(ref, c), c);
  hydro::write_trajectory(tr, run.path("trajectory.csv"));
  functionals::write_state(tr.final_state, run.path("final_state.csv"));
  const auto& d0 = tr.records.front().dist;
  Json j = {{"format", "starstab-v1 evolve"},
            {"t_sc", tr.t_sc},
            {"steps", tr.steps},
            {"records", tr.records.size()},
            {"floor_mass", tr.floor_mass},
            {"failed", tr.failed},
            {"failure", tr.failure},
            {"mass_drift", hydro::max_relative_mass_drift(tr)},
            {"energy_rise", hydro::max_energy_rise(tr)},
            {"d0", d0.d},
            {"sup_d", hydro::sup_distance(tr)}};
  if (d0.d + d0.mass_gap > 0.0) j["amplification_ratio"] = hydro::amplification_ratio(tr, c.q);
  if (tr.records.size() >= 6) j["trend_ratio"] = hydro::trend_ratio(tr);
  run.json("summary.json", j);
  run.results = j;
  run.results.erase("format");
  if (hydro::max_relative_mass_drift(tr) > tol_M) v.violate("mass drift above tolerance");
  if (hydro::max_energy_rise(tr) > tol_E * std::abs(tr.records.front().E)) v.violate("energy rise above tolerance");
  if (tr.failed) v.numerical = tr.failure;
}

void cmd_experiment(Section& root, Run& run, Verdict& v) {
  const auto ref = read_reference(root);
  const auto c = read_hydro(root.sub("hydro"));
  auto s = root.sub("experiment");
  const auto amps = s.numbers("amplitudes", {1e-3, 1e-2});
  const int threads = s.integer("threads", 0);
  s.finish();
  if (amps.empty()) throw ConfigError("config field 'experiment.amplitudes': empty");
  const auto rep = hydro::stability_experiment(ref, c, amps, threads);
  run.text("experiment.json", hydro::experiment_json(rep));
  run.results = {{"max_ratio", rep.max_ratio}};
  for (const auto& r : rep.runs)
    if (r.failed) v.numerical = "experiment: run at amplitude " + io::fmt_double(r.amplitude) + " failed";
}

void cmd_verify(Section& root, Run& run, Verdict& v) {
  auto s = root.sub("verify");
  auto tol = root.sub("tolerances");
  const double tol_id = tol.number("decomposition", 1e-8), tol_slack = tol.number("duality_slack", 1e-9);
  const double tol_shrink = tol.number("kernel_shrink", 4.0), tol_vec = tol.number("kernel_vector", 1e-3);
  tol.finish();
  const int states = s.integer("random_states", 20);
  Json checks = Json::array();
  auto record = [&](const std::string& name, double value, double bound, bool pass) {
    checks.push_back({{"name", name}, {"value", value}, {"bound", bound}, {"pass", pass}});
    if (!pass) v.violate(name);
  };
  for (auto f : s.list("families")) {
    const auto h = eos::build_enthalpy(eos::make_law(read_law(f.sub("law"))));
    const auto label = h.law().info().label;
    auto c = family::sweep(h, read_sweep(f.sub("family")));
    const int spectral_samples = f.integer("spectral_samples", 5), n_el = f.integer("n_el", 40);
    f.finish();
    family::classify(c, gamma0_of(h));
    int mismatches = 0;
    for (const auto& r : checks::inertia_vs_classifier(h, c, spectral_samples, n_el)) mismatches += !r.match();
    record(label + ": spectral inertia vs classifier (mismatching samples)", mismatches, 0, mismatches == 0);
    // identities on the middle star of the sweep
    const double mu = std::sqrt(c.mu.front() * c.mu.back());
    auto ref = functionals::make_reference(star::solve_star(h, mu), eos::Enthalpy(h));
    const double res = checks::decomposition_suite(ref, states, run.seed);
    record(label + ": decomposition identity residual", res, tol_id, res <= tol_id);
    const double slack = checks::duality_suite(ref, states, run.seed);
    record(label + ": smallest duality slack", slack, -tol_slack, slack >= -tol_slack);
  }
  for (auto k : s.list("kernels")) {
    const auto h = eos::build_enthalpy(eos::make_law(read_law(k.sub("law"))));
    const auto label = h.law().info().label;
    const double mu = k.number("mu", 1.0);
    const int n_el = k.integer("n_el", 40);
    k.finish();
    auto ref = functionals::make_reference(star::solve_star(h, mu), eos::Enthalpy(h));
    const auto kr = checks::kernel_check(ref, n_el);
    record(label + ": l=1 bottom eigenvalue shrink per doubling", kr.shrink, tol_shrink, kr.shrink >= tol_shrink);
    record(label + ": l=1 kernel vector vs V'", kr.vector_error, tol_vec, kr.vector_error <= tol_vec);
    record(label + ": l=0 zero modes", kr.l0_n_zero, 0, kr.l0_n_zero == 0);
  }
  s.finish();
  if (checks.empty()) throw ConfigError("config field 'verify': no families or kernels to check");
  int failed = 0;
  for (const auto& c : checks) failed += !c["pass"].get<bool>();
  run.json("verify.json", {{"format", "starstab-v1 verify"}, {"checks", checks}, {"failed", failed}});
  run.results = {{"checks", checks.size()}, {"failed", failed}};
}

using Command = std::function<void(Section&, Run&, Verdict&)>;

const std::map<std::string, std::pair<Command, std::string>>& commands() {
  static const std::map<std::string, std::pair<Command, std::string>> m = {
      {"eos", {cmd_eos, "tabulate and validate a pressure law, Fenchel-Young check"}},
      {"star", {cmd_star, "solve one steady star"}},
      {"family", {cmd_family, "sweep the central density: M, R, derivatives, n^u"}},
      {"classify", {cmd_classify, "turning-point classification checked against spectral inertia"}},
      {"spectrum", {cmd_spectrum, "grid-converged inertia of one operator"}},
      {"distance", {cmd_distance, "distance breakdown, identity residual and duality gap of a state"}},
      {"evolve", {cmd_evolve, "one Euler-Poisson run with d(t) diagnostics"}},
      {"experiment", {cmd_experiment, "batch of runs over amplitudes: amplification ratios"}},
      {"verify", {cmd_verify, "cross-module consistency suite; nonzero exit on any violation"}},
  };
  return m;
}

int execute(const std::string& sub, const std::string& config_path, const std::string& out_flag) {
  const auto t0 = std::chrono::steady_clock::now();
  Run run;
  run.sub = sub;
  Json src = Json::object(), resolved = Json::object();
  if (!config_path.empty()) src = cli::parse_config(io::read_text(config_path), config_path);
  Section root(src, resolved, "");
  run.seed = static_cast<std::uint64_t>(root.integer("seed", 1));
  std::string out = root.text("output_dir", "");
  if (!out_flag.empty()) out = out_flag;
  if (out.empty()) {
    const char* env = std::getenv("STARSTAB_OUT");
    out = (fs::path(env && *env ? env : "starstab-out") / sub).string();
  }
  run.dir = out;
  resolved.erase("output_dir");  // the emitted config is location independent

  Verdict verdict;
  commands().at(sub).first(root, run, verdict);
  root.finish();

  run.json("config.json", resolved);
  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  Json files = Json::array();
  for (const auto& f : run.files) {
    const auto bytes = io::read_text((run.dir / f).string());
    files.push_back({{"path", f}, {"bytes", bytes.size()}, {"sha256", cli::sha256_hex(bytes)}});
  }
  int code = ok;
  if (!verdict.invariant.empty()) code = invariant_violation;
  if (!verdict.numerical.empty()) code = numerical_failure;
  const Json manifest = {
      {"format", "starstab-v1 manifest"},
      {"subcommand", sub},
      {"config", resolved},
      {"tolerances", resolved.contains("tolerances") ? resolved["tolerances"] : Json::object()},
      {"results", run.results},
      {"files", files},
      {"versions",
       {{"starstab", kVersion},
        {"compiler", __VERSION__},
        {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                      std::to_string(EIGEN_MINOR_VERSION)},
        {"boost", BOOST_LIB_VERSION},
        {"openssl", OpenSSL_version(OPENSSL_VERSION)}}},
      {"wall_time_s", wall},
      {"exit_code", code}};
  io::write_text((run.dir / "manifest.json").string(), manifest.dump(2) + "\n");

  std::cout << sub << ": " << run.results.dump() << "\n" << "artifacts in " << run.dir.string() << "\n";
  if (!verdict.invariant.empty()) throw InvariantViolation(sub + ": " + verdict.invariant);
  if (!verdict.numerical.empty()) throw NumericalFailure(sub + ": " + verdict.numerical);
  return ok;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"starstab: steady stars, stability classification and Euler-Poisson stress tests"};
  app.require_subcommand(1);
  std::string config, out;
  for (const auto& [name, cmd] : commands()) {
    auto* sc = app.add_subcommand(name, cmd.second);
    sc->add_option("-c,--config", config, "JSON run config (defaults apply to missing fields)")->check(CLI::ExistingFile);
    sc->add_option("-o,--out", out, "output directory (default: $STARSTAB_OUT/<subcommand>)");
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? ok : config_error;
  }
  const std::string sub = app.get_subcommands().front()->get_name();
  try {
    return execute(sub, config, out);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return config_error;
  } catch (const InvariantViolation& e) {
    std::cerr << "invariant violation: " << e.what() << "\n";
    return invariant_violation;
  } catch (const NumericalFailure& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return numerical_failure;
  } catch (const Json::exception& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return config_error;
  } catch (const std::exception& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return numerical_failure;
  }
}
