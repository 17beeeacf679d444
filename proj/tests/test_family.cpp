#include <cmath>

#include "doctest.h"
#include "starstab/errors.hpp"
#include "starstab/family.hpp"

using namespace starstab;
using family::IMu;

namespace {

family::FamilyCurve synthetic(double scale = 1.0) {
  // M peaks at mu = 2.05 while R keeps falling: M'R' goes - to +.
  family::FamilyCurve c;
  for (int i = 0; i <= 20; ++i) {
    const double mu = 1.0 + 0.1 * i;
    c.mu.push_back(scale * mu);
    c.M.push_back(3.0 - (mu - 2.05) * (mu - 2.05));
    c.R.push_back(1.0 / mu);
  }
  family::compute_derivatives(c);
  return c;
}

family::SweepOptions opts(double lo, double hi, int n) {
  family::SweepOptions o;
  o.mu_min = lo;
  o.mu_max = hi;
  o.samples = n;
  return o;
}

}  // namespace

TEST_CASE("gamma = 3/2 sweep: mass increasing, n^u = 0, i_mu = 1") {
  auto h = eos::build_enthalpy(eos::make_polytrope(1.0, 1.5));
  auto c = family::sweep(h, opts(0.1, 10.0, 33));
  REQUIRE(c.size() == 33);
  for (std::size_t k = 0; k < c.size(); ++k) {
    CHECK(c.dM[k] > 0.0);
    // d ln M / d ln mu = 1/4
    CHECK(c.dM[k] * c.mu[k] / c.M[k] == doctest::Approx(0.25).epsilon(1e-5));
  }
  CHECK(c.events.empty());
  family::classify(c, 1.5);
  for (int n : c.nu) CHECK(n == 0);
  for (std::size_t k = 0; k < c.size(); ++k) CHECK(family::i_mu(c, k) == IMu::one);
}

TEST_CASE("gamma = 4/3 sweep is degenerate") {
  auto h = eos::build_enthalpy(eos::make_polytrope(1.0, 4.0 / 3.0));
  auto c = family::sweep(h, opts(0.1, 10.0, 17));
  for (std::size_t k = 0; k < c.size(); ++k) CHECK(std::abs(c.dM[k]) * c.mu[k] / c.M[k] <= 1e-4);
  CHECK(c.degenerate);
  CHECK(c.events.empty());
  CHECK_THROWS_AS(family::classify(c, 4.0 / 3.0), ConfigError);
  CHECK(family::i_mu(c, 3) == IMu::one);
}

TEST_CASE("gamma = 5/4 sweep: n^u = 1") {
  auto h = eos::build_enthalpy(eos::make_polytrope(1.0, 1.25));
  auto c = family::sweep(h, opts(0.1, 10.0, 9));
  CHECK(c.events.empty());
  family::classify(c, 1.25);
  for (int n : c.nu) CHECK(n == 1);
}

TEST_CASE("white dwarf family: M increasing, R decreasing at large mu") {
  auto h = eos::build_enthalpy(eos::make_white_dwarf());
  auto c = family::sweep(h, opts(1e-2, 1e4, 25));
  REQUIRE(c.size() == 25);
  for (std::size_t k = 0; k < c.size(); ++k) {
    CHECK(c.dM[k] > 0.0);
    if (k > 0) CHECK(c.M[k] > c.M[k - 1]);
    if (c.mu[k] > 1.0) CHECK(c.dR[k] < 0.0);
  }
  family::classify(c, 5.0 / 3.0);
  for (int n : c.nu) CHECK(n == 0);
  // doubled resolution agrees on monotonicity
  auto d = family::sweep(h, opts(1e-2, 1e4, 49));
  for (std::size_t k = 1; k < d.size(); ++k) CHECK(d.M[k] > d.M[k - 1]);
}

TEST_CASE("synthetic counterclockwise extremum") {
  auto c = synthetic();
  REQUIRE(c.events.size() == 1);
  CHECK(c.events[0].kind == "max");
  CHECK(c.events[0].bend == 1);
  CHECK(c.events[0].mu == doctest::Approx(2.05).epsilon(1e-3));
  family::classify(c, 1.5);
  for (std::size_t k = 0; k < c.size(); ++k) CHECK(c.nu[k] == (c.mu[k] < 2.05 ? 0 : 1));
}

TEST_CASE("synthetic clockwise extremum clamps at zero with a warning") {
  auto c = synthetic();
  for (auto& r : c.R) r = 1.0 / r;  // R increasing: M'R' goes + to -
  family::compute_derivatives(c);
  REQUIRE(c.events.size() == 1);
  CHECK(c.events[0].bend == -1);
  family::classify(c, 1.5);
  CHECK(c.warnings.size() == 1);
  for (int n : c.nu) CHECK(n == 0);
  auto d = synthetic();
  for (auto& r : d.R) r = 1.0 / r;
  family::compute_derivatives(d);
  family::classify(d, 1.25);
  for (std::size_t k = 0; k < d.size(); ++k) CHECK(d.nu[k] == (d.mu[k] < 2.05 ? 1 : 0));
}

TEST_CASE("classify is invariant under rescaling of the mu grid") {
  auto a = synthetic(1.0), b = synthetic(7.5);
  family::classify(a, 1.5);
  family::classify(b, 1.5);
  CHECK(a.nu == b.nu);
  REQUIRE(a.events.size() == b.events.size());
  CHECK(a.events[0].index == b.events[0].index);
  CHECK(a.events[0].bend == b.events[0].bend);
}

TEST_CASE("classify rejects bad input") {
  auto c = synthetic();
  CHECK_THROWS_AS(family::classify(c, 4.0 / 3.0), ConfigError);
  CHECK_THROWS_AS(family::classify(c, 2.5), ConfigError);
  // alternating derivative signs are noise
  family::FamilyCurve n;
  for (int i = 0; i < 12; ++i) {
    n.mu.push_back(1.0 + i);
    n.M.push_back(1.0 + 0.1 * (i % 2));
    n.R.push_back(1.0);
  }
  family::compute_derivatives(n);
  CHECK_THROWS_AS(family::classify(n, 1.5), NumericalFailure);
}

TEST_CASE("i_mu case split") {
  family::FamilyCurve c;
  c.mu = {1.0};
  c.M = {1.0};
  c.R = {1.0};
  c.dM = {0.5};
  c.dR = {0.0};
  c.dMR = {-0.3};
  CHECK(family::i_mu(c, 0) == IMu::zero);
  c.dMR = {0.3};
  CHECK(family::i_mu(c, 0) == IMu::one);
  c.dMR = {0.0};
  CHECK(family::i_mu(c, 0) == IMu::indeterminate);
  c.dM = {0.0};
  CHECK(family::i_mu(c, 0) == IMu::one);
}

TEST_CASE("sweep is deterministic across thread counts and round-trips") {
  auto h = eos::build_enthalpy(eos::make_polytrope(1.0, 1.5));
  auto o = opts(0.5, 2.0, 8);
  o.threads = 1;
  auto a = family::sweep(h, o);
  o.threads = 4;
  auto b = family::sweep(h, o);
  CHECK(a.M == b.M);
  CHECK(a.R == b.R);
  family::classify(a, 1.5);
  family::write_curve(a, "rt/family.csv", "rt/family.json");
  auto c = family::read_curve("rt/family.csv");
  CHECK(c.mu == a.mu);
  CHECK(c.dM == a.dM);
  CHECK(c.nu == a.nu);
}
