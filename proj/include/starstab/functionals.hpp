#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "starstab/eos.hpp"
#include "starstab/spectral.hpp"
#include "starstab/star.hpp"

namespace starstab::functionals {

/// A steady star together with the enthalpy it was solved for. Pinned in
/// memory because the interpolant points at the enthalpy.
struct Reference {
  Reference(star::StarProfile p, eos::Enthalpy h);
  Reference(const Reference&) = delete;
  Reference& operator=(const Reference&) = delete;

  star::StarProfile profile;
  eos::Enthalpy enthalpy;
  star::ProfileInterpolant ip;

  double R() const { return profile.R; }
  double M() const { return profile.M; }
  /// V_mu(R_mu) = -M_mu / R_mu
  double V_surface() const { return -profile.M / profile.R; }
};
using RefPtr = std::shared_ptr<const Reference>;
RefPtr make_reference(star::StarProfile p, eos::Enthalpy h);

enum class Layout {
  /// Point values; composite Simpson on [0, R_mu] and on [R_mu, R_dom], with
  /// the node R_mu stored twice (left and right limits).
  nodal,
  /// Cell averages between `faces`; R_mu must be a face. Integrals are exact
  /// for piecewise-constant data.
  cells,
};

/// Radial density/velocity on [0, R_dom] measured against a reference star.
struct PerturbedState {
  Layout layout = Layout::nodal;
  std::vector<double> r;      // nodes, or cell centres
  std::vector<double> faces;  // cells only, size r.size() + 1
  std::vector<double> rho, v;
  RefPtr ref;

  std::size_t size() const { return r.size(); }
  double R_dom() const { return layout == Layout::cells ? faces.back() : r.back(); }
  /// true for points of the closed support ball (the left copy of R_mu counts)
  bool inside(std::size_t i) const;
};

/// Nodal grid: n_in (even) Simpson intervals on [0, R_mu], n_out (even) on
/// [R_mu, R_dom]; density is the reference sample, velocity zero.
PerturbedState reference_state(RefPtr ref, double R_dom, int n_in = 2000, int n_out = 1000);

/// Cell layout with uniform cells of width R_mu / n_in, extended to cover
/// R_dom; density is the reference at the cell centres.
PerturbedState reference_cells(RefPtr ref, double R_dom, int n_in);

/// Throws InvariantViolation for negative density and ConfigError for a
/// malformed grid; zeroes v on the vacuum set.
void validate(PerturbedState& s);

/// Volume weights for int f dx = sum w_i f_i.
std::vector<double> volume_weights(const PerturbedState& s);
/// Enclosed mass of `rho` at every point of s.
std::vector<double> enclosed_mass(const PerturbedState& s, const std::vector<double>& rho);
/// Radial Green potential V(r) = -q(r)/r - int_r^inf 4 pi s rho ds at every point.
std::vector<double> potential(const PerturbedState& s, const std::vector<double>& rho);
/// int_0^inf q_a q_b / r^2 dr = (1/4 pi) int grad V_a . grad V_b dx.
double field_pairing(const PerturbedState& s, const std::vector<double>& rho_a, const std::vector<double>& rho_b);

double total_mass(const PerturbedState& s);
/// Mass of the reference sampled on the state's grid (the M_mu used by mass gaps).
double reference_mass(const PerturbedState& s);
std::vector<double> reference_density(const PerturbedState& s);

struct InOut {
  std::vector<double> rho_in, rho_out, V_in, V_out;
};
InOut split_in_out(const PerturbedState& s);

struct EnergyCasimir {
  double kinetic = 0.0, internal = 0.0, field = 0.0;  // field = (1/8 pi) int |grad V|^2
  double E = 0.0, H = 0.0;
};
EnergyCasimir energy_casimir(const PerturbedState& s);

struct DistanceBreakdown {
  double d1 = 0.0, d2 = 0.0, d3 = 0.0, d4 = 0.0, d5 = 0.0;
  double d = 0.0;
  double out_energy = 0.0;  // (1/8 pi) int |grad V_out|^2
  double cross = 0.0;       // (1/4 pi) int grad V_out . (grad V_in - grad V_mu)
  double H_diff = 0.0;      // H(state) - H(reference on the same grid)
  double mass_gap = 0.0;    // |M - M_mu|
};
/// Throws InvariantViolation if any d_i < -1e-12 (quadrature bug).
DistanceBreakdown distance(const PerturbedState& s);
std::string distance_json(const DistanceBreakdown& d);

/// |LHS - RHS| / (1 + |LHS|) for H - H_mu = d1+d2+d3-d4+d5 - out_energy - cross.
double decomposition_check(const PerturbedState& s);

/// Weighted average over B_mu with weight 1/Phi''(rho_mu).
double projection_P(const PerturbedState& s, const std::vector<double>& phi);
double projection_P(const spectral::RadialField& f, const star::ProfileInterpolant& prof, double cutoff_rel = 1e-14);

/// B(phi) = (1/8 pi) int |grad phi|^2 + int_{B_mu} Psi*_{rho_mu}(P phi - phi) dx,
/// on the quadrature and surface cutoff used by spectral::assemble_tildeL.
double dual_B(const spectral::RadialField& f, const star::ProfileInterpolant& prof, double cutoff_rel = 1e-14);

struct DualityGap {
  double d2_minus_d4 = 0.0;
  double surrogate = 0.0;  // B(V~_in) + P V~_in int rho~_in
  double slack = 0.0;      // (d2 - d4) - surrogate
};
DualityGap duality_gap(const PerturbedState& s);

/// Seeded smooth admissible perturbation of `base`: interior modulation and
/// bump, an exterior shell and a velocity field, all scaled by `amplitude`.
/// mass_preserving rescales the interior so the total equals reference_mass.
PerturbedState random_state(const PerturbedState& base, std::uint64_t seed, double amplitude,
                            bool mass_preserving = false);

/// CSV kinds "state" (nodal: r, rho, v) and "state-cells" (r_lo, r_hi, rho, v).
void write_state(const PerturbedState& s, const std::string& path);
PerturbedState read_state(const std::string& path, RefPtr ref);

}  // namespace starstab::functionals
