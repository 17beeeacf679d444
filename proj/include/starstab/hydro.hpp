#pragma once

#include <string>
#include <vector>

#include "starstab/functionals.hpp"

namespace starstab::hydro {

struct Perturbation {
  /// density_bump | velocity_kick | eigenmode_seed | mass_offset
  std::string kind = "density_bump";
  /// For eigenmode_seed the sign picks the direction: positive adds density at the centre.
  double amplitude = 0.0;
  bool mass_preserving = true;
};

struct HydroConfig {
  int n_in = 200;               // cells across [0, R_mu]
  double r_dom_factor = 1.5;    // R_dom / R_mu
  double cfl = 0.4;
  double floor_rel = 1e-12;     // density floor / mu
  double visc = 0.0;            // epsilon of the viscous term, >= 0
  double t_end = 10.0;          // in sound-crossing times
  double cadence = 0.1;         // output spacing, in sound-crossing times
  bool gravity = true;
  double q = 1.5;               // exponent of |M - M_mu| in the amplification ratio
  Perturbation perturbation;
};

/// Throws ConfigError for out-of-range fields.
void validate(const HydroConfig& c);

/// Cell-layout state on [0, R_dom] with the perturbation applied; the exterior
/// sits at the density floor. Throws ConfigError if the perturbed density is
/// negative anywhere.
functionals::PerturbedState make_initial(functionals::RefPtr ref, const HydroConfig& c);

/// One SSP-RK2 step at the CFL time step (capped by dt_max); returns the step taken.
double step(functionals::PerturbedState& s, const HydroConfig& c, double dt_max = 1e300);

struct Record {
  double t = 0.0;
  double M = 0.0, E = 0.0, H = 0.0;
  functionals::DistanceBreakdown dist;
};

struct Trajectory {
  double t_sc = 0.0;  // sound-crossing time of the reference star
  std::vector<Record> records;
  functionals::PerturbedState final_state;
  long steps = 0;
  double floor_mass = 0.0;  // mass added by floor resets (0 unless the scheme lost positivity)
  bool failed = false;
  std::string failure;
};

/// Runs to t_end, recording diagnostics every cadence. A step failure stops
/// the run and is reported in the trajectory (records so far are kept).
Trajectory evolve(const functionals::PerturbedState& initial, const HydroConfig& c);

double max_relative_mass_drift(const Trajectory& t);
/// max_t E(t) - E(0)
double max_energy_rise(const Trajectory& t);
double sup_distance(const Trajectory& t);
/// sup_t d(t) / (d(0) + |M - M_mu|^q)
double amplification_ratio(const Trajectory& t, double q);
/// max d over the last third of the records divided by max d over the first third.
double trend_ratio(const Trajectory& t);

struct RunSummary {
  double amplitude = 0.0;
  double d0 = 0.0, mass_gap = 0.0, sup_d = 0.0, final_d = 0.0;
  double ratio = 0.0, trend = 0.0;
  bool failed = false;
};
struct ExperimentReport {
  std::vector<RunSummary> runs;
  double max_ratio = 0.0;
};
/// One run per amplitude, executed concurrently.
ExperimentReport stability_experiment(functionals::RefPtr ref, const HydroConfig& base,
                                      const std::vector<double>& amplitudes, int threads = 0);
std::string experiment_json(const ExperimentReport& r);

/// CSV kind "trajectory": t, M, E, H, d, d1..d5, mass_gap.
void write_trajectory(const Trajectory& t, const std::string& path);

// ---- validation problems without gravity ----

/// Exact solution of the planar isentropic Riemann problem for P = K rho^gamma
/// at similarity coordinate xi = x / t: returns {rho, v}.
struct RiemannState {
  double rho, v;
};
RiemannState exact_riemann(double K, double gamma, RiemannState left, RiemannState right, double xi);

/// Planar shock tube on [0, 1] (left state for x < 1/2) with the hydro scheme;
/// returns the L1 density error against exact_riemann at t_end.
double shock_tube_error(int n_cells, double K, double gamma, RiemannState left, RiemannState right, double t_end,
                        double cfl = 0.4);

}  // namespace starstab::hydro
