#pragma once

#include <memory>
#include <string>
#include <vector>

#include <boost/math/interpolators/cubic_hermite.hpp>

#include "starstab/eos.hpp"

namespace starstab::star {

struct SolverOptions {
  double rtol = 1e-12;
  double atol = 1e-15;          // absolute floor, relative to the central values
  double max_step_frac = 2e-3;  // max step as a fraction of the radius guess
  double r0_frac = 1e-6;        // series start, fraction of the radius guess
  double surface_rtol = 1e-12;
  double r_max_factor = 1e4;    // give up beyond this multiple of the guess
  long max_steps = 2'000'000;
  /// When positive: fixed steps of this fraction of the radius guess, no
  /// error control (used for convergence-order studies).
  double fixed_step_frac = 0.0;
};

/// One steady star. Nodes run from r = 0 to r = R (inclusive).
struct StarProfile {
  double mu = 0.0;
  double R = 0.0;
  double M = 0.0;
  std::vector<double> r, rho, m, u, V;  // u = Phi'(rho) = V(R) - V
  double relation_residual = 0.0;       // max |Phi'(rho_i) + V_i - V(R)|
  std::string law_label;
  long steps = 0;

  double V_surface() const { return -M / R; }
  std::size_t size() const { return r.size(); }
};

/// Shooting solve of u' = -m/r^2, m' = 4 pi r^2 (Phi')^{-1}(u) from the
/// regular centre up to the first zero of u.
StarProfile solve_star(const eos::Enthalpy& h, double mu, const SolverOptions& opts = {});

/// Radius scale used for the series start and step caps: the Lane-Emden
/// length of a gamma0 polytrope matched at the centre.
double radius_guess(const eos::Enthalpy& h, double mu);

/// max over interior nodes of |dP/dr + rho m / r^2| / (P(mu)/R), with dP/dr
/// from 5-point finite differences on the node set.
double steady_residual(const StarProfile& p, const eos::Enthalpy& h);

/// max |Phi'(rho_i) + V_i - V(R)| recomputed from the stored columns.
double relation_residual(const StarProfile& p, const eos::Enthalpy& h);

/// Smooth evaluation of the profile between nodes: Hermite cubics on u and m
/// with the exact ODE slopes, rho recovered through (Phi')^{-1}. Extends by
/// vacuum and the point-mass potential for r > R.
class ProfileInterpolant {
 public:
  ProfileInterpolant(const StarProfile& p, const eos::Enthalpy& h);

  double u(double r) const;
  double rho(double r) const;
  double m(double r) const;
  double V(double r) const;
  /// V'(r) = m(r)/r^2 (zero at the centre).
  double dV(double r) const;
  double R() const { return R_; }
  double M() const { return M_; }
  double mu() const { return mu_; }
  const eos::Enthalpy& enthalpy() const { return *h_; }

 private:
  using Hermite = boost::math::interpolators::cubic_hermite<std::vector<double>>;
  std::shared_ptr<const Hermite> u_, m_;
  const eos::Enthalpy* h_;
  double R_, M_, mu_;
};

/// Sound-crossing time 2 int_0^R dr / sqrt(P'(rho)).
double sound_crossing_time(const StarProfile& p, const eos::Enthalpy& h);

/// JSON metadata + CSV columns (r, rho, m, V, u). Reload reproduces every
/// stored double exactly.
void write_profile(const StarProfile& p, const std::string& json_path, const std::string& csv_path);
StarProfile read_profile(const std::string& json_path, const std::string& csv_path);
std::string profile_json(const StarProfile& p, const std::string& csv_name);

/// 5-point Fornberg weights for the first derivative at x0.
std::vector<double> fd_weights(const double* x, int n, double x0);

}  // namespace starstab::star
