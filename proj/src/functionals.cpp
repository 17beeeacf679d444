#include "starstab/functionals.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include "json.hpp"
#include "starstab/errors.hpp"
#include "starstab/io.hpp"

namespace starstab::functionals {

namespace {

using std::numbers::pi;
using Vec = std::vector<double>;

// Quadratic interpolation on a panel x0 < x1 < x2 (h0 = x1 - x0, h1 = x2 - x1):
// weights of int_{x0}^{x2} and of int_{x0}^{x1}.
struct PanelWeights {
  double full[3], half[3];
};

PanelWeights panel(double h0, double h1) {
  const double H = h0 + h1;
  PanelWeights w{};
  w.full[0] = H * (2.0 * h0 - h1) / (6.0 * h0);
  w.full[1] = H * H * H / (6.0 * h0 * h1);
  w.full[2] = H * (2.0 * h1 - h0) / (6.0 * h1);
  w.half[0] = h0 * (2.0 * h0 + 3.0 * h1) / (6.0 * H);
  w.half[1] = h0 * (h0 + 3.0 * h1) / (6.0 * h1);
  w.half[2] = -h0 * h0 * h0 / (6.0 * H * h1);
  return w;
}

// Index of the left copy of R_mu in a nodal state.
std::size_t split_index(const PerturbedState& s) {
  for (std::size_t i = 0; i + 1 < s.r.size(); ++i)
    if (s.r[i] == s.r[i + 1]) return i;
  throw ConfigError("nodal state: the node R_mu must appear twice");
}

// Cumulative integral of f over nodes [a, b] (Simpson panels), added to `out`
// starting from `start`.
void cumulative(const Vec& r, const Vec& f, std::size_t a, std::size_t b, double start, Vec& out) {
  out[a] = start;
  for (std::size_t j = a; j + 2 <= b; j += 2) {
    const auto w = panel(r[j + 1] - r[j], r[j + 2] - r[j + 1]);
    out[j + 1] = out[j] + w.half[0] * f[j] + w.half[1] * f[j + 1] + w.half[2] * f[j + 2];
    out[j + 2] = out[j] + w.full[0] * f[j] + w.full[1] * f[j + 1] + w.full[2] * f[j + 2];
  }
}

// Forward cumulative over both Simpson segments, continuous across R_mu.
Vec cumulative_nodal(const PerturbedState& s, const Vec& f) {
  const std::size_t K = split_index(s), n = s.size();
  Vec out(n, 0.0);
  cumulative(s.r, f, 0, K, 0.0, out);
  cumulative(s.r, f, K + 1, n - 1, out[K], out);
  return out;
}

Vec simpson_weights(const PerturbedState& s) {
  const std::size_t K = split_index(s), n = s.size();
  Vec w(n, 0.0);
  auto seg = [&](std::size_t a, std::size_t b) {
    for (std::size_t j = a; j + 2 <= b; j += 2) {
      const auto p = panel(s.r[j + 1] - s.r[j], s.r[j + 2] - s.r[j + 1]);
      for (int k = 0; k < 3; ++k) w[j + k] += p.full[k];
    }
  };
  seg(0, K);
  seg(K + 1, n - 1);
  return w;
}

Vec face_mass(const PerturbedState& s, const Vec& rho) {
  Vec q(s.faces.size(), 0.0);
  for (std::size_t i = 0; i < s.size(); ++i)
    q[i + 1] = q[i] + 4.0 * pi / 3.0 * rho[i] * (std::pow(s.faces[i + 1], 3) - std::pow(s.faces[i], 3));
  return q;
}

void check_size(const PerturbedState& s, const Vec& f) {
  if (f.size() != s.size()) throw ConfigError("field size differs from the state grid");
}

PerturbedState with_density(const PerturbedState& s, Vec rho) {
  PerturbedState t = s;
  t.rho = std::move(rho);
  t.v.assign(s.size(), 0.0);
  return t;
}

}  // namespace

Reference::Reference(star::StarProfile p, eos::Enthalpy h)
    : profile(std::move(p)), enthalpy(std::move(h)), ip(profile, enthalpy) {}

RefPtr make_reference(star::StarProfile p, eos::Enthalpy h) {
  return std::make_shared<const Reference>(std::move(p), std::move(h));
}

bool PerturbedState::inside(std::size_t i) const {
  if (layout == Layout::cells) return r[i] < ref->R();
  // the duplicated node: left copy inside, right copy outside
  if (i + 1 < r.size() && r[i + 1] == r[i]) return true;
  if (i > 0 && r[i - 1] == r[i]) return false;
  return r[i] < ref->R();
}

PerturbedState reference_state(RefPtr ref, double R_dom, int n_in, int n_out) {
  const double R = ref->R();
  if (!(R_dom > R)) throw ConfigError("reference_state: R_dom must exceed R_mu");
  if (n_in < 2 || n_out < 2 || n_in % 2 || n_out % 2)
    throw ConfigError("reference_state: interval counts must be even and >= 2");
  PerturbedState s;
  s.layout = Layout::nodal;
  s.ref = ref;
  for (int i = 0; i <= n_in; ++i) s.r.push_back(i == n_in ? R : R * i / n_in);
  for (int i = 0; i <= n_out; ++i) s.r.push_back(i == n_out ? R_dom : R + (R_dom - R) * i / n_out);
  s.rho = reference_density(s);
  s.v.assign(s.size(), 0.0);
  return s;
}

PerturbedState reference_cells(RefPtr ref, double R_dom, int n_in) {
  const double R = ref->R();
  if (!(R_dom > R) || n_in < 1) throw ConfigError("reference_cells: need R_dom > R_mu and n_in >= 1");
  const double dr = R / n_in;
  const int n = n_in + static_cast<int>(std::ceil((R_dom - R) / dr - 1e-9));
  PerturbedState s;
  s.layout = Layout::cells;
  s.ref = ref;
  for (int i = 0; i <= n; ++i) s.faces.push_back(i == n_in ? R : dr * i);
  for (int i = 0; i < n; ++i) s.r.push_back(0.5 * (s.faces[i] + s.faces[i + 1]));
  s.rho = reference_density(s);
  s.v.assign(s.size(), 0.0);
  return s;
}

void validate(PerturbedState& s) {
  if (!s.ref) throw ConfigError("state has no reference star");
  const std::size_t n = s.size();
  if (n < 3 || s.rho.size() != n || s.v.size() != n) throw ConfigError("state: inconsistent array sizes");
  const double R = s.ref->R();
  if (s.layout == Layout::nodal) {
    if (s.r.front() != 0.0) throw ConfigError("nodal state: first node must be r = 0");
    const std::size_t K = split_index(s);
    if (std::abs(s.r[K] - R) > 1e-12 * R) throw ConfigError("nodal state: duplicated node is not R_mu");
    for (std::size_t i = 1; i < n; ++i)
      if (i != K + 1 && !(s.r[i] > s.r[i - 1])) throw ConfigError("nodal state: nodes must increase");
    if (K % 2 || (n - 1 - (K + 1)) % 2 || K == 0 || K + 1 == n - 1)
      throw ConfigError("nodal state: each side of R_mu needs an even, nonzero number of intervals");
  } else {
    if (s.faces.size() != n + 1 || s.faces.front() != 0.0) throw ConfigError("cell state: faces must start at 0");
    bool has_R = false;
    for (std::size_t i = 0; i < n; ++i) {
      if (!(s.faces[i + 1] > s.faces[i]) || !(s.r[i] > s.faces[i] && s.r[i] < s.faces[i + 1]))
        throw ConfigError("cell state: faces must increase and bracket the centres");
      has_R = has_R || std::abs(s.faces[i + 1] - R) <= 1e-12 * R;
    }
    if (!has_R) throw ConfigError("cell state: R_mu must be a cell face");
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (!std::isfinite(s.rho[i]) || !std::isfinite(s.v[i]))
      throw InvariantViolation("state: non-finite value at r = " + io::fmt_double(s.r[i]));
    if (s.rho[i] < 0.0) throw InvariantViolation("state: negative density at r = " + io::fmt_double(s.r[i]));
    if (s.rho[i] == 0.0) s.v[i] = 0.0;
  }
}

Vec volume_weights(const PerturbedState& s) {
  Vec w(s.size());
  if (s.layout == Layout::cells) {
    for (std::size_t i = 0; i < s.size(); ++i)
      w[i] = 4.0 * pi / 3.0 * (std::pow(s.faces[i + 1], 3) - std::pow(s.faces[i], 3));
    return w;
  }
  w = simpson_weights(s);
  for (std::size_t i = 0; i < s.size(); ++i) w[i] *= 4.0 * pi * s.r[i] * s.r[i];
  return w;
}

Vec enclosed_mass(const PerturbedState& s, const Vec& rho) {
  check_size(s, rho);
  if (s.layout == Layout::cells) {
    const auto qf = face_mass(s, rho);
    Vec q(s.size());
    for (std::size_t i = 0; i < s.size(); ++i)
      q[i] = qf[i] + 4.0 * pi / 3.0 * rho[i] * (std::pow(s.r[i], 3) - std::pow(s.faces[i], 3));
    return q;
  }
  Vec f(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) f[i] = 4.0 * pi * s.r[i] * s.r[i] * rho[i];
  return cumulative_nodal(s, f);
}

Vec potential(const PerturbedState& s, const Vec& rho) {
  check_size(s, rho);
  const auto q = enclosed_mass(s, rho);
  Vec V(s.size());
  if (s.layout == Layout::cells) {
    // int_r^inf 4 pi s rho ds, accumulated from the outside in
    double outer = 0.0;
    for (std::size_t k = s.size(); k-- > 0;) {
      const double c = s.r[k], b = s.faces[k + 1];
      V[k] = -q[k] / c - (outer + 2.0 * pi * rho[k] * (b * b - c * c));
      outer += 2.0 * pi * rho[k] * (b * b - s.faces[k] * s.faces[k]);
    }
    return V;
  }
  Vec f(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) f[i] = 4.0 * pi * s.r[i] * rho[i];
  const auto G = cumulative_nodal(s, f);
  for (std::size_t i = 0; i < s.size(); ++i) V[i] = (s.r[i] > 0.0 ? -q[i] / s.r[i] : 0.0) - (G.back() - G[i]);
  return V;
}

double field_pairing(const PerturbedState& s, const Vec& rho_a, const Vec& rho_b) {
  check_size(s, rho_a);
  check_size(s, rho_b);
  double sum = 0.0, Qa = 0.0, Qb = 0.0;
  if (s.layout == Layout::cells) {
    // q = alpha + beta r^3 inside a cell: integrate q_a q_b / r^2 exactly
    const auto qa = face_mass(s, rho_a), qb = face_mass(s, rho_b);
    for (std::size_t i = 0; i < s.size(); ++i) {
      const double a = s.faces[i], b = s.faces[i + 1];
      const double ba = 4.0 * pi / 3.0 * rho_a[i], bb = 4.0 * pi / 3.0 * rho_b[i];
      const double aa = qa[i] - ba * a * a * a, ab = qb[i] - bb * a * a * a;
      if (a > 0.0) sum += aa * ab * (1.0 / a - 1.0 / b);
      sum += (aa * bb + ab * ba) * 0.5 * (b * b - a * a);
      sum += ba * bb * (std::pow(b, 5) - std::pow(a, 5)) / 5.0;
    }
    Qa = qa.back();
    Qb = qb.back();
  } else {
    const auto qa = enclosed_mass(s, rho_a), qb = enclosed_mass(s, rho_b);
    const auto w = simpson_weights(s);
    for (std::size_t i = 0; i < s.size(); ++i)
      if (s.r[i] > 0.0) sum += w[i] * qa[i] * qb[i] / (s.r[i] * s.r[i]);
    Qa = qa.back();
    Qb = qb.back();
  }
  return sum + Qa * Qb / s.R_dom();
}

double total_mass(const PerturbedState& s) {
  const auto w = volume_weights(s);
  double m = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i) m += w[i] * s.rho[i];
  return m;
}

Vec reference_density(const PerturbedState& s) {
  Vec rho(s.size(), 0.0);
  for (std::size_t i = 0; i < s.size(); ++i)
    if (s.inside(i)) rho[i] = s.ref->ip.rho(s.r[i]);
  return rho;
}

double reference_mass(const PerturbedState& s) { return total_mass(with_density(s, reference_density(s))); }

InOut split_in_out(const PerturbedState& s) {
  InOut o;
  o.rho_in.assign(s.size(), 0.0);
  o.rho_out.assign(s.size(), 0.0);
  for (std::size_t i = 0; i < s.size(); ++i) (s.inside(i) ? o.rho_in : o.rho_out)[i] = s.rho[i];
  o.V_in = potential(s, o.rho_in);
  o.V_out = potential(s, o.rho_out);
  return o;
}

EnergyCasimir energy_casimir(const PerturbedState& s) {
  const auto w = volume_weights(s);
  const auto& h = s.ref->enthalpy;
  EnergyCasimir e;
  double M = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    e.kinetic += 0.5 * w[i] * s.rho[i] * s.v[i] * s.v[i];
    e.internal += w[i] * h.phi(s.rho[i]);
    M += w[i] * s.rho[i];
  }
  e.field = 0.5 * field_pairing(s, s.rho, s.rho);
  if (!std::isfinite(e.kinetic) || !std::isfinite(e.internal) || !std::isfinite(e.field)) {
    std::ostringstream os;
    os << "energy_casimir: non-finite term (kinetic " << e.kinetic << ", internal " << e.internal << ", field "
       << e.field << ")";
    throw NumericalFailure(os.str());
  }
  e.E = e.kinetic + e.internal - e.field;
  e.H = e.E - s.ref->V_surface() * M;
  return e;
}

DistanceBreakdown distance(const PerturbedState& s) {
  const auto w = volume_weights(s);
  const auto& h = s.ref->enthalpy;
  const auto rho_mu = reference_density(s);
  const double M_mu = s.ref->M(), R = s.ref->R();
  const auto io = split_in_out(s);
  Vec tilde(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) tilde[i] = io.rho_in[i] - rho_mu[i];

  DistanceBreakdown d;
  for (std::size_t i = 0; i < s.size(); ++i) {
    d.d1 += 0.5 * w[i] * s.rho[i] * s.v[i] * s.v[i];
    if (s.inside(i)) {
      d.d2 += w[i] * eos::psi(rho_mu[i], s.rho[i] - rho_mu[i], h);
    } else {
      d.d3 += w[i] * h.phi(s.rho[i]);
      d.d5 += w[i] * (M_mu / R - M_mu / s.r[i]) * s.rho[i];
    }
  }
  d.d4 = 0.5 * field_pairing(s, tilde, tilde);
  d.out_energy = 0.5 * field_pairing(s, io.rho_out, io.rho_out);
  d.cross = field_pairing(s, io.rho_out, tilde);
  d.d = d.d1 + d.d2 + d.d3 + d.d4 + d.d5;
  for (double x : {d.d1, d.d2, d.d3, d.d4, d.d5})
    if (x < -1e-12) {
      std::ostringstream os;
      os << "distance: negative term " << x << " (quadrature defect)";
      throw InvariantViolation(os.str());
    }
  d.H_diff = energy_casimir(s).H - energy_casimir(with_density(s, rho_mu)).H;
  d.mass_gap = std::abs(total_mass(s) - total_mass(with_density(s, rho_mu)));
  return d;
}

std::string distance_json(const DistanceBreakdown& d) {
  nlohmann::ordered_json j;
  j["format"] = "starstab-v1 distance";
  j["d"] = d.d;
  j["d1"] = d.d1;
  j["d2"] = d.d2;
  j["d3"] = d.d3;
  j["d4"] = d.d4;
  j["d5"] = d.d5;
  j["out_field_energy"] = d.out_energy;
  j["cross_term"] = d.cross;
  j["H_minus_H_mu"] = d.H_diff;
  j["mass_gap"] = d.mass_gap;
  return j.dump(2) + "\n";
}

double decomposition_check(const PerturbedState& s) {
  const auto d = distance(s);
  const double rhs = d.d1 + d.d2 + d.d3 - d.d4 + d.d5 - d.out_energy - d.cross;
  return std::abs(d.H_diff - rhs) / (1.0 + std::abs(d.H_diff));
}

double projection_P(const PerturbedState& s, const Vec& phi) {
  check_size(s, phi);
  const auto w = volume_weights(s);
  const auto rho_mu = reference_density(s);
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (!s.inside(i)) continue;
    const double c = w[i] * s.ref->enthalpy.inv_d2phi(rho_mu[i]);
    num += c * phi[i];
    den += c;
  }
  if (!(den > 0.0)) throw InvariantViolation("projection_P: vanishing weight over the support");
  return num / den;
}

double projection_P(const spectral::RadialField& f, const star::ProfileInterpolant& prof, double cutoff_rel) {
  const auto qp = spectral::quadrature(f.mesh);
  const auto bg = spectral::background(prof, qp, cutoff_rel);
  double num = 0.0, den = 0.0;
  for (std::size_t g = 0; g < qp.size(); ++g) {
    const double c = qp[g].weight * bg.w[g] * qp[g].r * qp[g].r;
    num += c * f.value(qp[g].r);
    den += c;
  }
  if (!(den > 0.0)) throw InvariantViolation("projection_P: vanishing weight over the support");
  return num / den;
}

double dual_B(const spectral::RadialField& f, const star::ProfileInterpolant& prof, double cutoff_rel) {
  const auto qp = spectral::quadrature(f.mesh);
  const auto bg = spectral::background(prof, qp, cutoff_rel);
  Vec fv(qp.size());
  double num = 0.0, den = 0.0;
  for (std::size_t g = 0; g < qp.size(); ++g) {
    fv[g] = f.value(qp[g].r);
    const double c = qp[g].weight * bg.w[g] * qp[g].r * qp[g].r;
    num += c * fv[g];
    den += c;
  }
  const double P = f.l == 0 ? num / den : 0.0;
  double conj = 0.0;
  for (std::size_t g = 0; g < qp.size(); ++g) {
    if (bg.w[g] == 0.0) continue;
    conj += 4.0 * pi * qp[g].weight * qp[g].r * qp[g].r * eos::psi_star(bg.rho[g], P - fv[g], prof.enthalpy()).value;
  }
  return 0.5 * f.gradient_norm2() + conj;
}

DualityGap duality_gap(const PerturbedState& s) {
  const auto w = volume_weights(s);
  const auto rho_mu = reference_density(s);
  const auto d = distance(s);
  Vec tilde(s.size(), 0.0);
  for (std::size_t i = 0; i < s.size(); ++i)
    if (s.inside(i)) tilde[i] = s.rho[i] - rho_mu[i];
  const auto Vt = potential(s, tilde);
  const double P = projection_P(s, Vt);
  double conj = 0.0, mass = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (!s.inside(i)) continue;
    conj += w[i] * eos::psi_star(rho_mu[i], P - Vt[i], s.ref->enthalpy).value;
    mass += w[i] * tilde[i];
  }
  DualityGap g;
  g.d2_minus_d4 = d.d2 - d.d4;
  g.surrogate = d.d4 + conj + P * mass;
  g.slack = g.d2_minus_d4 - g.surrogate;
  return g;
}

PerturbedState random_state(const PerturbedState& base, std::uint64_t seed, double amplitude, bool mass_preserving) {
  if (!(amplitude >= 0.0 && amplitude < 1.0)) throw ConfigError("random_state: amplitude must lie in [0, 1)");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  const double R = base.ref->R(), Rd = base.R_dom(), mu = base.ref->profile.mu;
  const double c0 = std::sqrt(base.ref->enthalpy.law().dpressure(mu));
  double a[3];
  for (auto& x : a) x = (2.0 * U(rng) - 1.0) / 3.0;
  const double bump_c = U(rng), bump_r = (0.2 + 0.7 * U(rng)) * R, bump_w = (0.05 + 0.15 * U(rng)) * R;
  const double shell_c = U(rng), shell_lo = R + (0.05 + 0.3 * U(rng)) * (Rd - R);
  const double shell_hi = shell_lo + (0.1 + 0.4 * U(rng)) * (Rd - shell_lo);
  const double vk = 2.0 * U(rng) - 1.0, vm = 1.0 + std::floor(3.0 * U(rng));

  PerturbedState s = base;
  const auto rho_mu = reference_density(base);
  for (std::size_t i = 0; i < s.size(); ++i) {
    const double r = s.r[i];
    if (s.inside(i)) {
      double mod = 0.0;
      for (int k = 0; k < 3; ++k) mod += a[k] * std::cos((k + 1) * pi * r / R);
      s.rho[i] = rho_mu[i] * (1.0 + amplitude * mod) +
                 amplitude * 0.1 * mu * bump_c * std::exp(-std::pow((r - bump_r) / bump_w, 2));
    } else if (r > shell_lo && r < shell_hi) {
      const double x = std::sin(pi * (r - shell_lo) / (shell_hi - shell_lo));
      s.rho[i] = amplitude * 0.01 * mu * shell_c * x * x * x * x;
    } else {
      s.rho[i] = 0.0;
    }
    s.v[i] = s.rho[i] > 0.0 ? amplitude * c0 * vk * std::sin(vm * pi * r / Rd) : 0.0;
  }
  if (mass_preserving) {
    const auto w = volume_weights(s);
    double m_in = 0.0, m_out = 0.0;
    for (std::size_t i = 0; i < s.size(); ++i) (s.inside(i) ? m_in : m_out) += w[i] * s.rho[i];
    const double scale = (reference_mass(base) - m_out) / m_in;
    for (std::size_t i = 0; i < s.size(); ++i)
      if (s.inside(i)) s.rho[i] *= scale;
  }
  validate(s);
  return s;
}

void write_state(const PerturbedState& s, const std::string& path) {
  io::Table t;
  if (s.layout == Layout::nodal) {
    t.kind = "state";
    t.names = {"r", "rho", "v"};
    t.columns = {s.r, s.rho, s.v};
  } else {
    t.kind = "state-cells";
    t.names = {"r_lo", "r_hi", "rho", "v"};
    t.columns = {Vec(s.faces.begin(), s.faces.end() - 1), Vec(s.faces.begin() + 1, s.faces.end()), s.rho, s.v};
  }
  io::write_csv(path, t);
}

PerturbedState read_state(const std::string& path, RefPtr ref) {
  const auto text = io::read_text(path);
  const bool cells = text.rfind("# starstab-v1 state-cells", 0) == 0;
  PerturbedState s;
  s.ref = std::move(ref);
  if (cells) {
    const auto t = io::read_csv(path, "state-cells");
    s.layout = Layout::cells;
    const auto& lo = t.column("r_lo");
    const auto& hi = t.column("r_hi");
    if (lo.empty()) throw ConfigError(path + ": empty state");
    s.faces = lo;
    s.faces.push_back(hi.back());
    for (std::size_t i = 0; i < lo.size(); ++i) {
      if (i + 1 < lo.size() && hi[i] != lo[i + 1]) throw ConfigError(path + ": cells are not contiguous");
      s.r.push_back(0.5 * (lo[i] + hi[i]));
    }
    s.rho = t.column("rho");
    s.v = t.column("v");
  } else {
    const auto t = io::read_csv(path, "state");
    s.r = t.column("r");
    s.rho = t.column("rho");
    s.v = t.column("v");
  }
  validate(s);
  return s;
}

}  // namespace starstab::functionals
