#pragma once

#include <string>
#include <vector>

#include "starstab/eos.hpp"
#include "starstab/star.hpp"

namespace starstab::family {

/// A detected sign change of dM/dmu between samples `index` and `index + 1`.
struct ExtremumEvent {
  std::size_t index = 0;
  double mu = 0.0;   // located by bisection when the law is available, else linear
  int bend = 0;      // +1: M'R' goes - to + (counterclockwise), -1: + to -, 0: undetermined
  std::string kind;  // "max" | "min"
};

struct FamilyCurve {
  std::string law_label;
  std::vector<double> mu, M, R;
  std::vector<double> dM, dR, dMR;  // d/dmu of M, R, M/R
  std::vector<int> nu;              // n^u, filled by classify
  std::vector<ExtremumEvent> events;
  std::vector<std::string> warnings;
  double dM_threshold = 0.0;        // |dM/dmu| below this counts as zero
  bool degenerate = false;          // dM/dmu negligible at every sample
  bool truncated = false;
  std::string truncation_reason;

  std::size_t size() const { return mu.size(); }
};

struct SweepOptions {
  double mu_min = 0.1;
  double mu_max = 10.0;
  int samples = 33;
  int refine_passes = 3;           // midpoint insertion around dM/dmu sign changes
  double zero_rel = 1e-6;          // threshold relative to max |dM/dmu|
  double degenerate_tol = 1e-4;    // |dM/dmu| mu / M below this everywhere => degenerate
  int threads = 0;                 // 0: hardware concurrency
  star::SolverOptions solver;
};

/// Solves log-spaced samples, attaches derivatives, refines near sign changes
/// of dM/dmu and locates the extrema.
FamilyCurve sweep(const eos::Enthalpy& h, const SweepOptions& opts);

/// 5-point finite differences on the (nonuniform) mu grid; one-sided stencils
/// at the ends. Also fills the zero threshold, degenerate flag and events
/// (without bisection).
void compute_derivatives(FamilyCurve& c, double zero_rel = 1e-6, double degenerate_tol = 1e-4);

/// Threshold, degenerate flag and events from the stored derivatives.
void detect_events(FamilyCurve& c, double zero_rel = 1e-6, double degenerate_tol = 1e-4);

/// Turning-point classification: seeds n^u by gamma0 and walks the events.
/// Throws ConfigError for gamma0 = 4/3 or outside (6/5, 2), and for degenerate
/// curves; NumericalFailure for events in adjacent intervals (noise).
void classify(FamilyCurve& c, double gamma0);

enum class IMu { zero = 0, one = 1, indeterminate = 2 };

/// i_mu = 1 if M' d(M/R)/dmu > 0 or M' = 0, else 0.
IMu i_mu(const FamilyCurve& c, std::size_t k, double zero_tol = 1e-4);

void write_curve(const FamilyCurve& c, const std::string& csv_path, const std::string& json_path);
FamilyCurve read_curve(const std::string& csv_path);
std::string events_json(const FamilyCurve& c);

}  // namespace starstab::family
