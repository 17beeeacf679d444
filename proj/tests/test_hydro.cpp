#include <cmath>

#include "doctest.h"
#include "starstab/errors.hpp"
#include "starstab/hydro.hpp"
#include "starstab/io.hpp"

using namespace starstab;
using namespace starstab::hydro;

namespace {

functionals::RefPtr star_ref(double gamma, double mu) {
  auto h = eos::build_enthalpy(eos::make_polytrope(1.0, gamma));
  auto p = star::solve_star(h, mu);
  return functionals::make_reference(std::move(p), std::move(h));
}

const functionals::RefPtr& ref15() {
  static const auto r = star_ref(1.5, 1.0);
  return r;
}

const functionals::RefPtr& ref125() {
  static const auto r = star_ref(1.25, 0.1);
  return r;
}

HydroConfig bump(double amplitude, int n_in = 200, double t_end = 10.0) {
  HydroConfig c;
  c.n_in = n_in;
  c.t_end = t_end;
  c.perturbation.kind = "density_bump";
  c.perturbation.amplitude = amplitude;
  return c;
}

// Unstable-star setup: the seed depletes the centre and the run stops once
// d(t) is O(1); the growth happens within a small fraction of the
// (surface-dominated) sound-crossing time.
HydroConfig unstable_seed(double amplitude, double t_end = 0.14) {
  HydroConfig c;
  c.n_in = 100;
  c.t_end = t_end;
  c.cadence = 0.01;
  c.perturbation.kind = "eigenmode_seed";
  c.perturbation.amplitude = amplitude;
  return c;
}

}  // namespace

TEST_CASE("config validation") {
  HydroConfig c;
  CHECK_NOTHROW(validate(c));
  auto bad = c;
  bad.cfl = 1.0;
  CHECK_THROWS_AS(validate(bad), ConfigError);
  bad = c;
  bad.r_dom_factor = 1.0;
  CHECK_THROWS_AS(validate(bad), ConfigError);
  bad = c;
  bad.floor_rel = 0.0;
  CHECK_THROWS_AS(validate(bad), ConfigError);
  bad = c;
  bad.visc = -1.0;
  CHECK_THROWS_AS(validate(bad), ConfigError);
  bad = c;
  bad.perturbation.kind = "wobble";
  CHECK_THROWS_AS(validate(bad), ConfigError);
  bad = c;
  bad.perturbation.amplitude = -0.9;  // bump that digs a hole deeper than the star
  CHECK_THROWS_AS(make_initial(ref15(), bad), ConfigError);
}

TEST_CASE("initial data") {
  SUBCASE("zero amplitude is the star itself") {
    const auto s = make_initial(ref15(), bump(0.0));
    const auto d = functionals::distance(s);
    CHECK(d.d == 0.0);
    CHECK(d.mass_gap == 0.0);
  }
  SUBCASE("mass-preserving bump keeps M_mu") {
    const auto s = make_initial(ref15(), bump(1e-2));
    const double M = functionals::total_mass(s), Mref = functionals::reference_mass(s);
    CHECK(std::abs(M - Mref) <= 1e-12 * Mref);
    CHECK(functionals::distance(s).d > 0.0);
  }
  SUBCASE("velocity kick") {
    auto c = bump(1e-2);
    c.perturbation.kind = "velocity_kick";
    const auto s = make_initial(ref15(), c);
    const double R = ref15()->R();
    for (std::size_t i = 0; i < s.size(); ++i) {
      const double expect = s.inside(i) ? 1e-2 * s.r[i] * std::exp(-std::pow(s.r[i] / R, 2)) : 0.0;
      CHECK(s.v[i] == doctest::Approx(expect).epsilon(1e-14));
    }
  }
  SUBCASE("eigenmode seed: d2 and d4 scale with the amplitude squared") {
    const auto d1 = functionals::distance(make_initial(ref125(), unstable_seed(-0.01)));
    const auto d2 = functionals::distance(make_initial(ref125(), unstable_seed(-0.02)));
    CHECK(d2.d2 / d1.d2 == doctest::Approx(4.0).epsilon(0.02));
    CHECK(d2.d4 / d1.d4 == doctest::Approx(4.0).epsilon(0.02));
  }
}

TEST_CASE("uniform state without gravity is preserved") {
  auto c = bump(0.0, 50);
  c.gravity = false;
  auto s = make_initial(ref15(), c);
  for (auto& x : s.rho) x = 0.3;
  const auto before = s;
  for (int k = 0; k < 20; ++k) step(s, c);
  for (std::size_t i = 0; i < s.size(); ++i) {
    CHECK(std::abs(s.rho[i] - 0.3) <= 1e-14);
    CHECK(std::abs(s.v[i]) <= 1e-13);
  }
}

TEST_CASE("a single step conserves mass to round-off") {
  auto c = bump(1e-2, 100);
  c.perturbation.kind = "velocity_kick";
  auto s = make_initial(ref15(), c);
  const double M0 = functionals::total_mass(s);
  for (int k = 0; k < 5; ++k) {
    const double dt = step(s, c);
    CHECK(dt > 0.0);
    CHECK(std::abs(functionals::total_mass(s) - M0) <= 1e-14 * M0);
  }
}

TEST_CASE("exact Riemann solver") {
  // two rarefactions, symmetric: v* = 0 and the states are mirror images
  const RiemannState L{1.0, -0.5}, R{1.0, 0.5};
  const auto mid = exact_riemann(1.0, 1.4, L, R, 0.0);
  CHECK(mid.v == doctest::Approx(0.0).epsilon(1e-12));
  const auto a = exact_riemann(1.0, 1.4, L, R, 0.3), b = exact_riemann(1.0, 1.4, L, R, -0.3);
  CHECK(a.rho == doctest::Approx(b.rho).epsilon(1e-12));
  CHECK(a.v == doctest::Approx(-b.v).epsilon(1e-12));
  // far field returns the data
  CHECK(exact_riemann(1.0, 1.4, {1.0, 0.0}, {0.125, 0.0}, -5.0).rho == 1.0);
  CHECK(exact_riemann(1.0, 1.4, {1.0, 0.0}, {0.125, 0.0}, 5.0).rho == 0.125);
  // Rankine-Hugoniot across the right shock of the Sod problem
  const RiemannState sl{1.0, 0.0}, sr{0.125, 0.0};
  RiemannState star = sl;  // plateau just behind the shock
  for (double xi = 0.0; xi < 3.0; xi += 1e-4) {
    const auto w = exact_riemann(1.0, 1.4, sl, sr, xi);
    if (w.rho == sr.rho) break;
    star = w;
  }
  const double s = star.rho * star.v / (star.rho - sr.rho);
  const double flux_jump = star.rho * star.v * star.v + std::pow(star.rho, 1.4) - std::pow(sr.rho, 1.4);
  CHECK(flux_jump == doctest::Approx(s * star.rho * star.v).epsilon(1e-10));
  CHECK_THROWS_AS(exact_riemann(1.0, 1.4, {1.0, -50.0}, {1.0, 50.0}, 0.0), ConfigError);
}

TEST_CASE("Sod shock tube converges to the exact solution") {
  const RiemannState L{1.0, 0.0}, R{0.125, 0.0};
  const double e1 = shock_tube_error(100, 1.0, 1.4, L, R, 0.2);
  const double e2 = shock_tube_error(200, 1.0, 1.4, L, R, 0.2);
  const double e3 = shock_tube_error(400, 1.0, 1.4, L, R, 0.2);
  MESSAGE("Sod L1 errors " << e1 << " " << e2 << " " << e3);
  CHECK(e2 < e1);
  CHECK(e3 < e2);
  CHECK(std::log2(e1 / e3) / 2.0 >= 0.8);
}

TEST_CASE("steady star: drift floor of the scheme") {
  // not well-balanced: the unperturbed star drifts by a resolution-dependent amount
  const auto tr = evolve(make_initial(ref15(), bump(0.0, 100)), bump(0.0, 100));
  REQUIRE_FALSE(tr.failed);
  MESSAGE("drift floor n_in=100: " << sup_distance(tr));
  CHECK(sup_distance(tr) <= 3e-6);
  CHECK(max_relative_mass_drift(tr) <= 1e-12);
  CHECK(tr.floor_mass == 0.0);
}

TEST_CASE("stable star: conservation, energy and no growth") {
  const auto c = bump(1e-2);
  const auto tr = evolve(make_initial(ref15(), c), c);
  REQUIRE_FALSE(tr.failed);
  CHECK(tr.records.size() == 101);
  CHECK(max_relative_mass_drift(tr) <= 1e-12);
  CHECK(max_energy_rise(tr) <= 1e-5 * std::abs(tr.records.front().E));
  CHECK(trend_ratio(tr) <= 1.5);
  CHECK(sup_distance(tr) <= 2.0 * tr.records.front().dist.d);
  for (std::size_t i = 0; i < tr.final_state.size(); ++i)
    if (tr.final_state.rho[i] <= c.floor_rel * ref15()->profile.mu) CHECK(tr.final_state.v[i] == 0.0);
}

TEST_CASE("velocity kick: energy tolerance and vacuum contract") {
  auto c = bump(1e-2);
  c.perturbation.kind = "velocity_kick";
  const auto tr = evolve(make_initial(ref15(), c), c);
  REQUIRE_FALSE(tr.failed);
  CHECK(max_relative_mass_drift(tr) <= 1e-12);
  CHECK(max_energy_rise(tr) <= 1e-5 * std::abs(tr.records.front().E));
  const double floor = c.floor_rel * ref15()->profile.mu;
  int vacuum = 0;
  for (std::size_t i = 0; i < tr.final_state.size(); ++i)
    if (tr.final_state.rho[i] <= floor) {
      ++vacuum;
      CHECK(tr.final_state.v[i] == 0.0);
    }
  CHECK(vacuum > 0);
}

TEST_CASE("viscous run dissipates energy") {
  auto c = bump(1e-2, 100, 2.0);
  c.visc = 1e-3;
  const auto tr = evolve(make_initial(ref15(), c), c);
  REQUIRE_FALSE(tr.failed);
  MESSAGE("floor mass " << tr.floor_mass << " drift " << max_relative_mass_drift(tr));
  CHECK(max_relative_mass_drift(tr) <= 1e-12);
  CHECK(tr.records.back().E < tr.records.front().E);
}

TEST_CASE("d(t) is continuous under cadence refinement") {
  auto jump = [](double cadence) {
    auto c = bump(1e-2, 100, 1.0);
    c.perturbation.kind = "velocity_kick";
    c.cadence = cadence;
    const auto tr = evolve(make_initial(ref15(), c), c);
    double m = 0.0;
    for (std::size_t k = 1; k < tr.records.size(); ++k)
      m = std::max(m, std::abs(tr.records[k].dist.d - tr.records[k - 1].dist.d));
    return m;
  };
  const double j1 = jump(0.1), j2 = jump(0.05), j3 = jump(0.025);
  MESSAGE("max |d_{k+1} - d_k|: " << j1 << " " << j2 << " " << j3);
  CHECK(j2 < 0.75 * j1);
  CHECK(j3 < 0.75 * j2);
}

TEST_CASE("unstable star: the eigenmode seed grows") {
  const auto c = unstable_seed(-0.03);
  const auto tr = evolve(make_initial(ref125(), c), c);
  REQUIRE_FALSE(tr.failed);
  const double growth = sup_distance(tr) / tr.records.front().dist.d;
  MESSAGE("growth factor " << growth);
  CHECK(growth >= 10.0);
  CHECK(max_relative_mass_drift(tr) <= 1e-12);
  // the amplification ratio increases with run time
  Trajectory half = tr;
  half.records.resize(tr.records.size() / 2);
  CHECK(amplification_ratio(tr, c.q) > 5.0 * amplification_ratio(half, c.q));
}

TEST_CASE("stability experiment: bounded amplification for the stable star") {
  const auto rep = stability_experiment(ref15(), bump(0.0), {1e-3, 1e-2}, 2);
  REQUIRE(rep.runs.size() == 2);
  for (const auto& r : rep.runs) {
    CHECK_FALSE(r.failed);
    CHECK(r.ratio <= 10.0);
  }
  const double spread = rep.runs[0].ratio / rep.runs[1].ratio;
  CHECK(spread >= 1.0 / 3.0);
  CHECK(spread <= 3.0);
  const auto json = experiment_json(rep);
  CHECK(json.find("\"max_ratio\"") != std::string::npos);
}

TEST_CASE("pure mass offset: the mass term keeps the ratio finite") {
  for (double a : {1e-2, 1e-3}) {
    auto c = bump(a, 100, 5.0);
    c.perturbation.kind = "mass_offset";
    const auto tr = evolve(make_initial(ref15(), c), c);
    REQUIRE_FALSE(tr.failed);
    const double with_term = amplification_ratio(tr, c.q);
    const double without = sup_distance(tr) / tr.records.front().dist.d;
    CHECK(with_term <= 2.0);
    CHECK(without >= 5.0);
  }
}

TEST_CASE("trajectory CSV") {
  auto c = bump(1e-2, 50, 0.5);
  const auto tr = evolve(make_initial(ref15(), c), c);
  const std::string path = "rt/trajectory.csv";
  write_trajectory(tr, path);
  const auto t = io::read_csv(path, "trajectory");
  CHECK(t.columns.size() == 11);
  CHECK(t.columns[0].size() == tr.records.size());
  CHECK(t.columns[4].back() == doctest::Approx(tr.records.back().dist.d).epsilon(1e-12));
}
