#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "starstab/family.hpp"
#include "starstab/functionals.hpp"

// Cross-module consistency checks shared by `starstab verify` and the
// acceptance runner. Each returns measured numbers; callers compare them
// against their own tolerances.
namespace starstab::checks {

functionals::RefPtr polytrope_ref(double gamma, double mu, double K = 1.0);

/// Max decomposition residual over `n` seeded random states on the nodal
/// layout (alternating plain and mass-preserving, amplitude 0.2).
double decomposition_suite(const functionals::RefPtr& ref, int n, std::uint64_t seed);

/// Smallest duality slack over `n` seeded mass-preserving random states.
double duality_suite(const functionals::RefPtr& ref, int n, std::uint64_t seed);

struct InertiaRow {
  double mu = 0.0;
  int nu = 0;                  // classifier
  int n_minus_Z = 0, n_zero_Z = 0;    // L_mu on Z_mu
  int n_minus_l0 = 0, n_zero_l0 = 0;  // tilde L, l = 0
  bool match() const { return n_minus_Z == nu && n_minus_l0 == n_minus_Z && n_zero_l0 == n_zero_Z; }
};

/// Spectral inertia at `count` classified samples spread over the curve
/// (grid-converged reports at n_el and 2 n_el).
std::vector<InertiaRow> inertia_vs_classifier(const eos::Enthalpy& h, const family::FamilyCurve& c, int count,
                                              int n_el);

struct KernelResult {
  double l1_lowest = 0.0, l1_lowest_coarse = 0.0;
  double shrink = 0.0;          // |lambda_coarse| / |lambda_fine| for the l = 1 bottom eigenvalue
  double vector_error = 0.0;    // weighted distance of its eigenvector to V_mu'
  int l1_n_zero = 0;
  int l0_n_zero = 0, l0_n_minus = 0;
};
KernelResult kernel_check(const functionals::RefPtr& ref, int n_el);

struct HessianResult {
  double max_rel_error = 0.0;  // at the finer step
  double min_order = 1e300;
};
/// Central second differences of B at 0 against (1/4 pi) x^T A x of the
/// tilde-L l = 0 form, on `n` seeded smooth directions.
HessianResult hessian_suite(const functionals::RefPtr& ref, int n, std::uint64_t seed, int n_el = 40);

}  // namespace starstab::checks
