#include "starstab/hydro.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <numbers>
#include <sstream>
#include <thread>

#include <boost/math/tools/roots.hpp>

#include "json.hpp"
#include "starstab/errors.hpp"
#include "starstab/io.hpp"
#include "starstab/spectral.hpp"

namespace starstab::hydro {

namespace {

using std::numbers::pi;
using Vec = std::vector<double>;

enum class Geometry { spherical, planar };

double mc_slope(double a, double b, double c) {
  const double l = b - a, r = c - b;
  if (l * r <= 0.0) return 0.0;
  const double s = std::min({2.0 * std::abs(l), 2.0 * std::abs(r), 0.5 * std::abs(c - a)});
  return l > 0.0 ? s : -s;
}

// Finite-volume scheme for barotropic Euler(-Poisson) on fixed cells.
class Scheme {
 public:
  Scheme(Vec faces, const eos::PressureLaw& law, Geometry geo, double floor, double visc, bool gravity)
      : faces_(std::move(faces)), law_(law), geo_(geo), floor_(floor), visc_(visc), gravity_(gravity) {
    n_ = faces_.size() - 1;
    centres_.resize(n_);
    vol_.resize(n_);
    area_.resize(n_ + 1);
    for (std::size_t i = 0; i <= n_; ++i)
      area_[i] = geo_ == Geometry::spherical ? 4.0 * pi * faces_[i] * faces_[i] : 1.0;
    for (std::size_t i = 0; i < n_; ++i) {
      centres_[i] = 0.5 * (faces_[i] + faces_[i + 1]);
      vol_[i] = geo_ == Geometry::spherical
                    ? 4.0 * pi / 3.0 * (std::pow(faces_[i + 1], 3) - std::pow(faces_[i], 3))
                    : faces_[i + 1] - faces_[i];
    }
  }

  Vec rho, mom;
  double floor_mass = 0.0;

  double dt_max(double cfl) const {
    double dt = 1e300;
    for (std::size_t i = 0; i < n_; ++i) {
      const double dr = faces_[i + 1] - faces_[i];
      const double v = rho[i] > floor_ ? mom[i] / rho[i] : 0.0;
      const double s = std::abs(v) + std::sqrt(std::max(law_.dpressure(rho[i]), 0.0));
      if (s > 0.0) dt = std::min(dt, cfl * dr / s);
      if (visc_ > 0.0) dt = std::min(dt, 0.25 * dr * dr / visc_);
    }
    return dt;
  }

  // SSP-RK2 (Heun)
  void advance(double dt) {
    const Vec r0 = rho, m0 = mom;
    Vec dr(n_), dm(n_);
    rhs(dr, dm);
    for (std::size_t i = 0; i < n_; ++i) {
      rho[i] = r0[i] + dt * dr[i];
      mom[i] = m0[i] + dt * dm[i];
    }
    post();
    rhs(dr, dm);
    for (std::size_t i = 0; i < n_; ++i) {
      rho[i] = 0.5 * (r0[i] + rho[i] + dt * dr[i]);
      mom[i] = 0.5 * (m0[i] + mom[i] + dt * dm[i]);
    }
    post();
  }

  double mass() const {
    double m = 0.0;
    for (std::size_t i = 0; i < n_; ++i) m += rho[i] * vol_[i];
    return m;
  }

 private:
  struct Prim {
    double rho, v;
  };

  // Vacuum handling: negative densities (a positivity failure) are reset to
  // the floor and the added mass is recorded; velocity is zero at the floor.
  void post() {
    for (std::size_t i = 0; i < n_; ++i) {
      if (!std::isfinite(rho[i]) || !std::isfinite(mom[i])) {
        std::ostringstream os;
        os << "hydro: non-finite state in cell " << i << " (r = " << centres_[i] << ")";
        throw NumericalFailure(os.str());
      }
      if (rho[i] < 0.0) {
        floor_mass += (floor_ - rho[i]) * vol_[i];
        rho[i] = floor_;
      }
      if (rho[i] <= floor_) mom[i] = 0.0;
    }
  }

  Prim prim(std::size_t i) const { return {rho[i], rho[i] > floor_ ? mom[i] / rho[i] : 0.0}; }

  std::pair<double, double> hll(Prim L, Prim R) const {
    const double pL = law_.pressure(L.rho), pR = law_.pressure(R.rho);
    const double cL = std::sqrt(std::max(law_.dpressure(L.rho), 0.0));
    const double cR = std::sqrt(std::max(law_.dpressure(R.rho), 0.0));
    const double sL = std::min(L.v - cL, R.v - cR), sR = std::max(L.v + cL, R.v + cR);
    const double FL0 = L.rho * L.v, FL1 = L.rho * L.v * L.v + pL;
    const double FR0 = R.rho * R.v, FR1 = R.rho * R.v * R.v + pR;
    if (sL >= 0.0) return {FL0, FL1};
    if (sR <= 0.0) return {FR0, FR1};
    const double inv = 1.0 / (sR - sL);
    return {(sR * FL0 - sL * FR0 + sL * sR * (R.rho - L.rho)) * inv,
            (sR * FL1 - sL * FR1 + sL * sR * (R.rho * R.v - L.rho * L.v)) * inv};
  }

  void rhs(Vec& drho, Vec& dmom) const {
    // ghost-extended primitives: index k <-> cell k - 1
    std::vector<Prim> p(n_ + 2);
    for (std::size_t i = 0; i < n_; ++i) p[i + 1] = prim(i);
    if (geo_ == Geometry::spherical) {
      p[0] = {p[1].rho, -p[1].v};
      p[n_ + 1] = {p[n_].rho, -p[n_].v};
    } else {
      p[0] = p[1];
      p[n_ + 1] = p[n_];
    }
    // limited slopes, first order next to vacuum
    Vec srho(n_ + 2, 0.0), sv(n_ + 2, 0.0);
    const double near_vacuum = 1e3 * floor_;
    for (std::size_t k = 1; k <= n_; ++k) {
      if (std::min({p[k - 1].rho, p[k].rho, p[k + 1].rho}) < near_vacuum) continue;
      srho[k] = mc_slope(p[k - 1].rho, p[k].rho, p[k + 1].rho);
      sv[k] = mc_slope(p[k - 1].v, p[k].v, p[k + 1].v);
    }
    Vec F0(n_ + 1, 0.0), F1(n_ + 1, 0.0);
    for (std::size_t f = 0; f <= n_; ++f) {
      Prim L{p[f].rho + 0.5 * srho[f], p[f].v + 0.5 * sv[f]};
      Prim R{p[f + 1].rho - 0.5 * srho[f + 1], p[f + 1].v - 0.5 * sv[f + 1]};
      if (geo_ == Geometry::spherical && f == 0) R = {L.rho, -L.v};
      if (geo_ == Geometry::spherical && f == n_) R = {L.rho, -L.v};
      if (L.rho <= floor_) L.v = 0.0;
      if (R.rho <= floor_) R.v = 0.0;
      std::tie(F0[f], F1[f]) = hll(L, R);
    }
    if (geo_ == Geometry::spherical) F0[0] = F0[n_] = 0.0;  // centre and wall carry no mass

    double q = 0.0;  // enclosed mass at the inner face
    for (std::size_t i = 0; i < n_; ++i) {
      const double aL = area_[i], aR = area_[i + 1];
      drho[i] = -(aR * F0[i + 1] - aL * F0[i]) / vol_[i];
      dmom[i] = -(aR * F1[i + 1] - aL * F1[i]) / vol_[i];
      if (geo_ == Geometry::spherical) {
        dmom[i] += law_.pressure(rho[i]) * (aR - aL) / vol_[i];
        if (gravity_) {
          const double c = centres_[i];
          const double qc = q + 4.0 * pi / 3.0 * rho[i] * (c * c * c - std::pow(faces_[i], 3));
          dmom[i] -= rho[i] * qc / (c * c);
        }
      }
      q += rho[i] * vol_[i];
    }
    if (visc_ > 0.0) {
      // visc rho dv/dr at faces; the smaller neighbour density keeps the
      // acceleration of a near-vacuum cell within the parabolic step limit
      Vec tau(n_ + 1, 0.0);
      for (std::size_t f = 1; f < n_; ++f)
        tau[f] = visc_ * std::min(rho[f - 1], rho[f]) * (p[f + 1].v - p[f].v) / (centres_[f] - centres_[f - 1]);
      if (geo_ == Geometry::spherical) tau[n_] = visc_ * rho[n_ - 1] * (0.0 - p[n_].v) / (faces_[n_] - centres_[n_ - 1]);
      for (std::size_t i = 0; i < n_; ++i) {
        dmom[i] += (area_[i + 1] * tau[i + 1] - area_[i] * tau[i]) / vol_[i];
        if (geo_ == Geometry::spherical) dmom[i] -= 2.0 * visc_ * rho[i] * p[i + 1].v / (centres_[i] * centres_[i]);
      }
    }
  }

  Vec faces_, centres_, vol_, area_;
  std::size_t n_ = 0;
  const eos::PressureLaw& law_;
  Geometry geo_;
  double floor_, visc_;
  bool gravity_;
};

double floor_of(const functionals::PerturbedState& s, const HydroConfig& c) {
  return c.floor_rel * s.ref->profile.mu;
}

Scheme scheme_for(const functionals::PerturbedState& s, const HydroConfig& c) {
  Scheme sc(s.faces, s.ref->enthalpy.law(), Geometry::spherical, floor_of(s, c), c.visc, c.gravity);
  sc.rho = s.rho;
  sc.mom.resize(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) sc.mom[i] = s.rho[i] * s.v[i];
  return sc;
}

void load(functionals::PerturbedState& s, const Scheme& sc, double floor) {
  s.rho = sc.rho;
  for (std::size_t i = 0; i < s.size(); ++i) s.v[i] = sc.rho[i] > floor ? sc.mom[i] / sc.rho[i] : 0.0;
}

Record record(const functionals::PerturbedState& s, double t) {
  Record r;
  r.t = t;
  r.M = functionals::total_mass(s);
  const auto e = functionals::energy_casimir(s);
  r.E = e.E;
  r.H = e.H;
  r.dist = functionals::distance(s);
  return r;
}

}  // namespace

void validate(const HydroConfig& c) {
  if (c.n_in < 8) throw ConfigError("hydro: n_in must be at least 8");
  if (!(c.r_dom_factor > 1.0)) throw ConfigError("hydro: r_dom_factor must exceed 1 (R_dom > R_mu)");
  if (!(c.cfl > 0.0 && c.cfl < 1.0)) throw ConfigError("hydro: cfl must lie in (0, 1)");
  if (!(c.floor_rel > 0.0)) throw ConfigError("hydro: floor_rel must be positive");
  if (!(c.visc >= 0.0)) throw ConfigError("hydro: visc must be nonnegative");
  if (!(c.t_end > 0.0) || !(c.cadence > 0.0)) throw ConfigError("hydro: t_end and cadence must be positive");
  if (!(c.q > 1.0 && c.q < 2.0)) throw ConfigError("hydro: q must lie in (1, 2)");
  const auto& k = c.perturbation.kind;
  if (k != "density_bump" && k != "velocity_kick" && k != "eigenmode_seed" && k != "mass_offset")
    throw ConfigError("hydro: unknown perturbation kind '" + k + "'");
}

functionals::PerturbedState make_initial(functionals::RefPtr ref, const HydroConfig& c) {
  validate(c);
  auto s = functionals::reference_cells(ref, c.r_dom_factor * ref->R(), c.n_in);
  // the exterior starts as exact vacuum; the floor only marks vacuum cells
  const double R = ref->R(), mu = ref->profile.mu;
  const double M_target = functionals::reference_mass(s);
  const auto& P = c.perturbation;
  const double A = P.amplitude;
  bool rescale = P.mass_preserving;

  if (A != 0.0) {
    if (P.kind == "density_bump") {
      for (std::size_t i = 0; i < s.size(); ++i)
        if (s.inside(i)) s.rho[i] += A * mu * std::exp(-std::pow((s.r[i] - 0.5 * R) / (0.15 * R), 2));
    } else if (P.kind == "velocity_kick") {
      for (std::size_t i = 0; i < s.size(); ++i)
        if (s.inside(i)) s.v[i] = A * s.r[i] * std::exp(-std::pow(s.r[i] / R, 2));
      rescale = false;
    } else if (P.kind == "mass_offset") {
      for (std::size_t i = 0; i < s.size(); ++i)
        if (s.inside(i)) s.rho[i] *= 1.0 + A;
      rescale = false;
    } else {  // eigenmode_seed: most negative direction of L_mu on Z_mu
      const auto form = spectral::assemble_Lmu_Zmu(ref->ip, 100);
      const auto rep = spectral::inertia(form);
      spectral::RadialField h{form.mesh, rep.lowest_vector, 0};
      Vec drho(s.size(), 0.0);
      double mx = 0.0;
      for (std::size_t i = 0; i < s.size(); ++i)
        if (s.inside(i)) {
          drho[i] = ref->enthalpy.inv_d2phi(ref->ip.rho(s.r[i])) * h.value(s.r[i]);
          mx = std::max(mx, std::abs(drho[i]));
        }
      // sign convention: positive at the centre
      const double sgn = drho[0] >= 0.0 ? 1.0 : -1.0;
      for (std::size_t i = 0; i < s.size(); ++i) s.rho[i] += sgn * A * mu * drho[i] / mx;
    }
  }
  for (std::size_t i = 0; i < s.size(); ++i)
    if (s.rho[i] < 0.0) {
      std::ostringstream os;
      os << "make_initial: perturbation makes the density negative at r = " << s.r[i] << "; reduce the amplitude";
      throw ConfigError(os.str());
    }
  if (rescale && A != 0.0) {
    const auto w = functionals::volume_weights(s);
    double m_in = 0.0, m_out = 0.0;
    for (std::size_t i = 0; i < s.size(); ++i) (s.inside(i) ? m_in : m_out) += w[i] * s.rho[i];
    const double k = (M_target - m_out) / m_in;
    for (std::size_t i = 0; i < s.size(); ++i)
      if (s.inside(i)) s.rho[i] *= k;
  }
  functionals::validate(s);
  return s;
}

double step(functionals::PerturbedState& s, const HydroConfig& c, double dt_max) {
  auto sc = scheme_for(s, c);
  const double dt = std::min(dt_max, sc.dt_max(c.cfl));
  sc.advance(dt);
  load(s, sc, floor_of(s, c));
  return dt;
}

Trajectory evolve(const functionals::PerturbedState& initial, const HydroConfig& c) {
  validate(c);
  Trajectory tr;
  tr.t_sc = star::sound_crossing_time(initial.ref->profile, initial.ref->enthalpy);
  const double T = c.t_end * tr.t_sc, cadence = c.cadence * tr.t_sc, floor = floor_of(initial, c);
  auto s = initial;
  auto sc = scheme_for(s, c);
  tr.records.push_back(record(s, 0.0));
  double t = 0.0;
  try {
    while (t < T * (1.0 - 1e-14)) {
      const double t_out = std::min(T, tr.records.back().t + cadence);
      while (t < t_out * (1.0 - 1e-14)) {
        double dt = sc.dt_max(c.cfl);
        if (!(dt > 1e-12 * tr.t_sc)) {
          std::ostringstream os;
          os << "hydro: time step underflow (dt = " << dt << " at t = " << t << ")";
          throw NumericalFailure(os.str());
        }
        dt = std::min(dt, t_out - t);
        sc.advance(dt);
        t = std::min(t + dt, t_out);
        if (t_out - t < 1e-14 * T) t = t_out;
        ++tr.steps;
      }
      load(s, sc, floor);
      tr.records.push_back(record(s, t));
    }
  } catch (const Error& e) {
    tr.failed = true;
    tr.failure = e.what();
    load(s, sc, floor);
  }
  tr.floor_mass = sc.floor_mass;
  tr.final_state = s;
  return tr;
}

double max_relative_mass_drift(const Trajectory& t) {
  double m = 0.0;
  for (const auto& r : t.records) m = std::max(m, std::abs(r.M - t.records.front().M) / t.records.front().M);
  return m;
}

double max_energy_rise(const Trajectory& t) {
  double m = 0.0;
  for (const auto& r : t.records) m = std::max(m, r.E - t.records.front().E);
  return m;
}

double sup_distance(const Trajectory& t) {
  double m = 0.0;
  for (const auto& r : t.records) m = std::max(m, r.dist.d);
  return m;
}

double amplification_ratio(const Trajectory& t, double q) {
  const auto& d0 = t.records.front().dist;
  const double den = d0.d + std::pow(d0.mass_gap, q);
  if (!(den > 0.0)) throw ConfigError("amplification_ratio: zero initial distance and mass gap");
  return sup_distance(t) / den;
}

double trend_ratio(const Trajectory& t) {
  const std::size_t n = t.records.size();
  if (n < 6) throw ConfigError("trend_ratio: need at least 6 records");
  double early = 0.0, late = 0.0;
  for (std::size_t i = 0; i < n / 3; ++i) early = std::max(early, t.records[i].dist.d);
  for (std::size_t i = n - n / 3; i < n; ++i) late = std::max(late, t.records[i].dist.d);
  return late / early;
}

ExperimentReport stability_experiment(functionals::RefPtr ref, const HydroConfig& base,
                                      const std::vector<double>& amplitudes, int threads) {
  validate(base);
  const std::size_t workers = threads > 0 ? threads : std::max(1u, std::thread::hardware_concurrency());
  ExperimentReport rep;
  rep.runs.resize(amplitudes.size());
  auto run = [&](std::size_t k) {
    auto c = base;
    c.perturbation.amplitude = amplitudes[k];
    const auto tr = evolve(make_initial(ref, c), c);
    RunSummary s;
    s.amplitude = amplitudes[k];
    s.d0 = tr.records.front().dist.d;
    s.mass_gap = tr.records.front().dist.mass_gap;
    s.sup_d = sup_distance(tr);
    s.final_d = tr.records.back().dist.d;
    s.ratio = amplification_ratio(tr, c.q);
    s.trend = tr.records.size() >= 6 ? trend_ratio(tr) : 0.0;
    s.failed = tr.failed;
    return s;
  };
  for (std::size_t start = 0; start < amplitudes.size(); start += workers) {
    std::vector<std::future<RunSummary>> fut;
    for (std::size_t k = start; k < std::min(amplitudes.size(), start + workers); ++k)
      fut.push_back(std::async(std::launch::async, run, k));
    for (std::size_t k = 0; k < fut.size(); ++k) rep.runs[start + k] = fut[k].get();
  }
  for (const auto& r : rep.runs) rep.max_ratio = std::max(rep.max_ratio, r.ratio);
  return rep;
}

std::string experiment_json(const ExperimentReport& r) {
  nlohmann::ordered_json j;
  j["format"] = "starstab-v1 experiment";
  j["max_ratio"] = r.max_ratio;
  for (const auto& s : r.runs)
    j["runs"].push_back({{"amplitude", s.amplitude},
                         {"d0", s.d0},
                         {"mass_gap", s.mass_gap},
                         {"sup_d", s.sup_d},
                         {"final_d", s.final_d},
                         {"ratio", s.ratio},
                         {"trend", s.trend},
                         {"failed", s.failed}});
  return j.dump(2) + "\n";
}

void write_trajectory(const Trajectory& t, const std::string& path) {
  io::Table tab;
  tab.kind = "trajectory";
  tab.names = {"t", "M", "E", "H", "d", "d1", "d2", "d3", "d4", "d5", "mass_gap"};
  tab.columns.assign(tab.names.size(), {});
  for (const auto& r : t.records) {
    const double row[] = {r.t,       r.M,       r.E,       r.H,       r.dist.d,       r.dist.d1,
                          r.dist.d2, r.dist.d3, r.dist.d4, r.dist.d5, r.dist.mass_gap};
    for (std::size_t k = 0; k < tab.names.size(); ++k) tab.columns[k].push_back(row[k]);
  }
  io::write_csv(path, tab);
}

RiemannState exact_riemann(double K, double gamma, RiemannState left, RiemannState right, double xi) {
  auto p = [&](double r) { return K * std::pow(r, gamma); };
  auto c = [&](double r) { return std::sqrt(K * gamma * std::pow(r, gamma - 1.0)); };
  const double g1 = gamma - 1.0;
  // velocity change across the wave connecting state a to density rs
  auto f = [&](double rs, const RiemannState& a) {
    if (rs <= a.rho) return 2.0 / g1 * (c(rs) - c(a.rho));
    return std::sqrt((p(rs) - p(a.rho)) * (rs - a.rho) / (rs * a.rho));
  };
  if (!(left.rho > 0.0 && right.rho > 0.0)) throw ConfigError("exact_riemann: states must be non-vacuum");
  const double dv = right.v - left.v;
  if (dv >= 2.0 / g1 * (c(left.rho) + c(right.rho))) throw ConfigError("exact_riemann: vacuum generation");
  auto g = [&](double lr) {
    const double rs = std::exp(lr);
    return f(rs, left) + f(rs, right) + dv;
  };
  double lo = std::log(std::min(left.rho, right.rho)) - 1.0, hi = std::log(std::max(left.rho, right.rho)) + 1.0;
  while (g(lo) > 0.0) lo -= 1.0;
  while (g(hi) < 0.0) hi += 1.0;
  boost::uintmax_t it = 200;
  const auto br = boost::math::tools::toms748_solve(g, lo, hi, boost::math::tools::eps_tolerance<double>(52), it);
  const double rs = std::exp(0.5 * (br.first + br.second));
  const double vs = left.v - f(rs, left);

  if (xi <= vs) {
    if (rs > left.rho) {
      const double s = (rs * vs - left.rho * left.v) / (rs - left.rho);
      return xi < s ? left : RiemannState{rs, vs};
    }
    if (xi <= left.v - c(left.rho)) return left;
    if (xi >= vs - c(rs)) return {rs, vs};
    const double cc = (left.v + 2.0 * c(left.rho) / g1 - xi) * g1 / (gamma + 1.0);
    return {std::pow(cc * cc / (K * gamma), 1.0 / g1), xi + cc};
  }
  if (rs > right.rho) {
    const double s = (rs * vs - right.rho * right.v) / (rs - right.rho);
    return xi > s ? right : RiemannState{rs, vs};
  }
  if (xi >= right.v + c(right.rho)) return right;
  if (xi <= vs + c(rs)) return {rs, vs};
  const double cc = (xi - (right.v - 2.0 * c(right.rho) / g1)) * g1 / (gamma + 1.0);
  return {std::pow(cc * cc / (K * gamma), 1.0 / g1), xi - cc};
}

double shock_tube_error(int n_cells, double K, double gamma, RiemannState left, RiemannState right, double t_end,
                        double cfl) {
  if (n_cells < 4) throw ConfigError("shock_tube_error: need at least 4 cells");
  const auto law = eos::make_polytrope(K, gamma);
  Vec faces(n_cells + 1);
  for (int i = 0; i <= n_cells; ++i) faces[i] = static_cast<double>(i) / n_cells;
  Scheme sc(faces, *law, Geometry::planar, 1e-300, 0.0, false);
  sc.rho.resize(n_cells);
  sc.mom.resize(n_cells);
  for (int i = 0; i < n_cells; ++i) {
    const auto& st = (i + 0.5) / n_cells < 0.5 ? left : right;
    sc.rho[i] = st.rho;
    sc.mom[i] = st.rho * st.v;
  }
  double t = 0.0;
  while (t < t_end) {
    const double dt = std::min(sc.dt_max(cfl), t_end - t);
    sc.advance(dt);
    t += dt;
  }
  double err = 0.0;
  for (int i = 0; i < n_cells; ++i) {
    const double x = (i + 0.5) / n_cells;
    err += std::abs(sc.rho[i] - exact_riemann(K, gamma, left, right, (x - 0.5) / t_end).rho) / n_cells;
  }
  return err;
}

}  // namespace starstab::hydro
