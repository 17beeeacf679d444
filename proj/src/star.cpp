#include "starstab/star.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>

#include <boost/math/quadrature/tanh_sinh.hpp>
#include <boost/math/tools/roots.hpp>

#include "json.hpp"
#include "starstab/errors.hpp"
#include "starstab/io.hpp"

namespace starstab::star {

namespace {

using std::numbers::pi;
using State = std::array<double, 2>;  // (u, m)

// Dormand-Prince 5(4) tableau
constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561, a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                 a65 = -5103.0 / 18656;
constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784, b6 = 11.0 / 84;
constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                 e6 = 22.0 / 525, e7 = -1.0 / 40;

struct StepResult {
  State y;
  State err;
};

class StarOde {
 public:
  explicit StarOde(const eos::Enthalpy& h) : h_(h) {}
  State operator()(double r, const State& y) const {
    const double rho = h_.inverse_dphi(y[0]);
    return {-y[1] / (r * r), 4.0 * pi * r * r * rho};
  }

  StepResult step(double r, const State& y, double hs) const {
    const auto& f = *this;
    auto axpy = [&](std::initializer_list<std::pair<double, const State*>> terms) {
      State out = y;
      for (auto [c, k] : terms) {
        out[0] += hs * c * (*k)[0];
        out[1] += hs * c * (*k)[1];
      }
      return out;
    };
    const State k1 = f(r, y);
    const State k2 = f(r + c2 * hs, axpy({{a21, &k1}}));
    const State k3 = f(r + c3 * hs, axpy({{a31, &k1}, {a32, &k2}}));
    const State k4 = f(r + c4 * hs, axpy({{a41, &k1}, {a42, &k2}, {a43, &k3}}));
    const State k5 = f(r + c5 * hs, axpy({{a51, &k1}, {a52, &k2}, {a53, &k3}, {a54, &k4}}));
    const State k6 = f(r + hs, axpy({{a61, &k1}, {a62, &k2}, {a63, &k3}, {a64, &k4}, {a65, &k5}}));
    StepResult res;
    res.y = axpy({{b1, &k1}, {b3, &k3}, {b4, &k4}, {b5, &k5}, {b6, &k6}});
    const State k7 = f(r + hs, res.y);
    for (int i = 0; i < 2; ++i)
      res.err[i] = hs * (e1 * k1[i] + e3 * k3[i] + e4 * k4[i] + e5 * k5[i] + e6 * k6[i] + e7 * k7[i]);
    return res;
  }

 private:
  const eos::Enthalpy& h_;
};

}  // namespace

double radius_guess(const eos::Enthalpy& h, double mu) {
  const double u0 = h.dphi(mu);
  return 3.0 * std::sqrt(u0 / (4.0 * pi * mu));
}

StarProfile solve_star(const eos::Enthalpy& h, double mu, const SolverOptions& opts) {
  if (!(mu > 0.0) || !std::isfinite(mu)) throw ConfigError("solve_star: central density must be positive");
  const StarOde ode(h);
  const double rg = radius_guess(h, mu);
  const double u0 = h.dphi(mu);
  if (!(u0 > 0.0) || !std::isfinite(u0)) throw NumericalFailure("solve_star: Phi'(mu) is not positive and finite");
  const double d2 = h.d2phi(mu);
  const double rho2 = -(2.0 * pi / 3.0) * mu / d2;
  const double mscale = 4.0 * pi / 3.0 * mu * rg * rg * rg;

  StarProfile p;
  p.mu = mu;
  p.law_label = h.law().info().label;
  p.r.push_back(0.0);
  p.u.push_back(u0);
  p.m.push_back(0.0);

  double r = opts.r0_frac * rg;
  const double r2 = r * r;
  State y{u0 - (2.0 * pi / 3.0) * mu * r2 - (pi / 5.0) * rho2 * r2 * r2,
          (4.0 * pi / 3.0) * mu * r2 * r + (4.0 * pi / 5.0) * rho2 * r2 * r2 * r};
  if (!(y[0] > 0.0)) throw NumericalFailure("solve_star: series start already beyond the surface");
  p.r.push_back(r);
  p.u.push_back(y[0]);
  p.m.push_back(y[1]);

  const bool fixed = opts.fixed_step_frac > 0.0;
  const double hmax = fixed ? opts.fixed_step_frac * rg : opts.max_step_frac * rg;
  double hs = fixed ? hmax : std::min(hmax, 10.0 * r);
  const double r_max = opts.r_max_factor * rg;

  auto err_norm = [&](const State& y0, const StepResult& s) {
    const double su = opts.atol * u0 + opts.rtol * std::max(std::abs(y0[0]), std::abs(s.y[0]));
    const double sm = opts.atol * mscale + opts.rtol * std::max(std::abs(y0[1]), std::abs(s.y[1]));
    return std::max(std::abs(s.err[0]) / su, std::abs(s.err[1]) / sm);
  };

  long steps = 0;
  bool done = false;
  while (!done) {
    if (++steps > opts.max_steps) throw NumericalFailure("solve_star: step limit reached before the surface");
    if (r > r_max)
      throw NumericalFailure("solve_star: no vacuum boundary before r_max (central density beyond the family?)");
    if (!fixed && hs < 1e-14 * std::max(r, rg)) throw NumericalFailure("solve_star: step size underflow");

    StepResult s = ode.step(r, y, hs);
    if (!std::isfinite(s.y[0]) || !std::isfinite(s.y[1])) throw NumericalFailure("solve_star: non-finite state");
    const double en = fixed ? 0.0 : err_norm(y, s);

    if (s.y[0] <= 0.0) {
      // The surface lies inside this step: find the partial step that lands on u = 0.
      auto g = [&](double hh) { return ode.step(r, y, hh).y[0]; };
      boost::uintmax_t it = 200;
      const auto [lo, hi] = boost::math::tools::toms748_solve(
          g, 0.0, hs, y[0], s.y[0],
          [&](double a, double b) { return std::abs(b - a) <= opts.surface_rtol * (r + b) * 0.5; }, it);
      const double hstar = 0.5 * (lo + hi);
      StepResult last = ode.step(r, y, hstar);
      if (fixed || err_norm(y, last) <= 1.0) {
        r += hstar;
        p.r.push_back(r);
        p.u.push_back(0.0);
        p.m.push_back(last.y[1]);
        done = true;
      } else {
        hs = 0.5 * hstar;
      }
      continue;
    }

    if (en <= 1.0) {
      r += hs;
      y = s.y;
      p.r.push_back(r);
      p.u.push_back(y[0]);
      p.m.push_back(y[1]);
    }
    if (!fixed) {
      const double fac = en == 0.0 ? 5.0 : std::clamp(0.9 * std::pow(en, -0.2), 0.2, 5.0);
      hs = std::min(hmax, hs * fac);
    }
  }

  p.steps = steps;
  p.R = p.r.back();
  p.M = p.m.back();
  const std::size_t n = p.r.size();
  p.rho.resize(n);
  p.V.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    p.rho[i] = i == 0 ? mu : h.inverse_dphi(p.u[i]);
    p.V[i] = -p.M / p.R - p.u[i];
  }
  p.V.back() = p.V_surface();
  p.relation_residual = relation_residual(p, h);
  return p;
}

double relation_residual(const StarProfile& p, const eos::Enthalpy& h) {
  const double vr = p.V_surface();
  double worst = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) worst = std::max(worst, std::abs(h.dphi(p.rho[i]) + p.V[i] - vr));
  return worst;
}

std::vector<double> fd_weights(const double* x, int n, double x0) {
  // Fornberg's recursion, derivative orders 0 and 1.
  std::vector<double> c0(n, 0.0), c1(n, 0.0);
  double c1p = 1.0;
  double c4 = x[0] - x0;
  c0[0] = 1.0;
  for (int i = 1; i < n; ++i) {
    double c2p = 1.0;
    const double c5 = c4;
    c4 = x[i] - x0;
    for (int j = 0; j < i; ++j) {
      const double c3 = x[i] - x[j];
      c2p *= c3;
      if (j == i - 1) {
        c1[i] = c1p * (c0[i - 1] - c5 * c1[i - 1]) / c2p;
        c0[i] = -c1p * c5 * c0[i - 1] / c2p;
      }
      c1[j] = (c4 * c1[j] - c0[j]) / c3;
      c0[j] = c4 * c0[j] / c3;
    }
    c1p = c2p;
  }
  return c1;
}

double steady_residual(const StarProfile& p, const eos::Enthalpy& h) {
  const std::size_t n = p.size();
  if (n < 6) throw ConfigError("steady_residual: profile needs at least 6 nodes");
  std::vector<double> P(n);
  for (std::size_t i = 0; i < n; ++i) P[i] = h.law().pressure(p.rho[i]);
  double worst = 0.0;
  for (std::size_t i = 1; i + 1 < n; ++i) {
    const std::size_t s = std::clamp<std::ptrdiff_t>(static_cast<std::ptrdiff_t>(i) - 2, 0, static_cast<std::ptrdiff_t>(n) - 5);
    const auto w = fd_weights(&p.r[s], 5, p.r[i]);
    double dp = 0.0;
    for (int k = 0; k < 5; ++k) dp += w[k] * P[s + k];
    worst = std::max(worst, std::abs(dp + p.rho[i] * p.m[i] / (p.r[i] * p.r[i])));
  }
  return worst / (h.law().pressure(p.mu) / p.R);
}

ProfileInterpolant::ProfileInterpolant(const StarProfile& p, const eos::Enthalpy& h)
    : h_(&h), R_(p.R), M_(p.M), mu_(p.mu) {
  const std::size_t n = p.size();
  if (n < 2) throw ConfigError("ProfileInterpolant: empty profile");
  std::vector<double> x = p.r, uu = p.u, du(n), mm = p.m, dm(n);
  for (std::size_t i = 0; i < n; ++i) {
    du[i] = i == 0 ? 0.0 : -p.m[i] / (p.r[i] * p.r[i]);
    dm[i] = 4.0 * std::numbers::pi * p.r[i] * p.r[i] * p.rho[i];
  }
  std::vector<double> x2 = x;
  u_ = std::make_shared<const Hermite>(std::move(x), std::move(uu), std::move(du));
  m_ = std::make_shared<const Hermite>(std::move(x2), std::move(mm), std::move(dm));
}

double ProfileInterpolant::u(double r) const { return r >= R_ ? 0.0 : (*u_)(std::max(r, 0.0)); }
double ProfileInterpolant::rho(double r) const { return r >= R_ ? 0.0 : h_->inverse_dphi(u(r)); }
double ProfileInterpolant::m(double r) const { return r >= R_ ? M_ : (*m_)(std::max(r, 0.0)); }
double ProfileInterpolant::V(double r) const { return r >= R_ ? -M_ / r : -M_ / R_ - u(r); }
double ProfileInterpolant::dV(double r) const { return r <= 0.0 ? 0.0 : m(r) / (r * r); }

double sound_crossing_time(const StarProfile& p, const eos::Enthalpy& h) {
  ProfileInterpolant ip(p, h);
  boost::math::quadrature::tanh_sinh<double> ts;
  const double I = ts.integrate(
      [&](double r) {
        const double c2 = h.law().dpressure(ip.rho(r));
        return c2 > 0.0 ? 1.0 / std::sqrt(c2) : 0.0;
      },
      0.0, p.R);
  return 2.0 * I;
}

std::string profile_json(const StarProfile& p, const std::string& csv_name) {
  nlohmann::ordered_json j;
  j["format"] = "starstab-v1 profile";
  j["law"] = p.law_label;
  j["mu"] = p.mu;
  j["R"] = p.R;
  j["M"] = p.M;
  j["V_surface"] = p.V_surface();
  j["relation_residual"] = p.relation_residual;
  j["steps"] = p.steps;
  j["nodes"] = p.size();
  j["csv"] = csv_name;
  return j.dump(2) + "\n";
}

void write_profile(const StarProfile& p, const std::string& json_path, const std::string& csv_path) {
  io::Table t;
  t.kind = "profile";
  t.names = {"r", "rho", "m", "V", "u"};
  t.columns = {p.r, p.rho, p.m, p.V, p.u};
  io::write_csv(csv_path, t);
  const auto csv_name = csv_path.substr(csv_path.find_last_of('/') + 1);
  io::write_text(json_path, profile_json(p, csv_name));
}

StarProfile read_profile(const std::string& json_path, const std::string& csv_path) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(io::read_text(json_path));
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(json_path + ": " + e.what());
  }
  StarProfile p;
  try {
    p.mu = j.at("mu").get<double>();
    p.R = j.at("R").get<double>();
    p.M = j.at("M").get<double>();
    p.relation_residual = j.at("relation_residual").get<double>();
    p.law_label = j.at("law").get<std::string>();
    p.steps = j.value("steps", 0L);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(json_path + ": " + e.what());
  }
  const auto t = io::read_csv(csv_path, "profile");
  p.r = t.column("r");
  p.rho = t.column("rho");
  p.m = t.column("m");
  p.V = t.column("V");
  p.u = t.column("u");
  return p;
}

}  // namespace starstab::star
