#pragma once

#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "starstab/star.hpp"

namespace starstab::spectral {

/// Element endpoints of a radial Lagrange finite-element space of degree 1 or 2.
struct RadialMesh {
  std::vector<double> x;  // element endpoints, x.front() = 0
  int degree = 2;
  double r_star = 0.0;    // support radius R_mu (always an endpoint)

  std::size_t elements() const { return x.size() - 1; }
  std::size_t ndof() const { return elements() * degree + 1; }
  double dof_position(std::size_t i) const;
  double r_out() const { return x.back(); }
};

/// Graded mesh on [0, R]: r = R (s - a sin(2 pi s) / (2 pi)) on uniform s, so
/// both ends are clustered by 1/(1-a) and doubling n halves every element.
RadialMesh graded_mesh(double R, int n_el, int degree = 2, double grading = 0.9);

/// graded_mesh on [0, R] followed by uniform exterior elements up to R_out.
RadialMesh extended_mesh(double R, double R_out, int n_el, int n_ext, int degree = 2, double grading = 0.9);

/// Lagrange shape functions on the reference element [-1, 1].
void shape(int degree, double xi, double* N, double* dN);

struct QuadPoint {
  std::size_t element;
  double xi;      // reference coordinate
  double r;
  double weight;  // for dr
};

/// Gauss-Legendre points (8 per element) over every element.
std::vector<QuadPoint> quadrature(const RadialMesh& mesh);

/// Background density and 1/Phi''(rho_mu) at the quadrature points inside
/// the star; points with w below cutoff_rel * w_max are zeroed and counted.
struct Background {
  std::vector<double> rho, w;  // aligned with quadrature(mesh); zero outside
  int excluded = 0;
};
Background background(const star::ProfileInterpolant& prof, const std::vector<QuadPoint>& qp,
                      double cutoff_rel = 1e-14);

/// A function on a RadialMesh; l is the harmonic degree of its angular factor.
/// Outside r_out it continues as c r^{-(l+1)}.
struct RadialField {
  RadialMesh mesh;
  Eigen::VectorXd coef;
  int l = 0;

  double value(double r) const;
  double deriv(double r) const;
  /// int_0^{r_out} (f'^2 + l(l+1) f^2 / r^2) r^2 dr + (l+1) r_out f(r_out)^2
  double gradient_norm2() const;
};

struct FormMatrices {
  std::string tag;     // L_mu_Zmu_radial | L_mu_radial | tildeL_l0 | tildeL_l1
  RadialMesh mesh;
  Eigen::MatrixXd A;   // quadratic form
  Eigen::MatrixXd W;   // weight (inner product) matrix
  std::optional<Eigen::VectorXd> b;  // constraint row (mass), if any
  std::vector<std::size_t> dofs;     // mesh dofs kept (Dirichlet removal)
  int excluded = 0;                  // surface quadrature points cut from 1/Phi''
};

struct SpectralOptions {
  int degree = 2;
  double grading = 0.9;
  double cutoff_rel = 1e-14;
  double r_out_factor = 1.5;  // R_out / R_mu for the tilde-L operators
};

/// <L rho, rho> = 4 pi int Phi'' rho^2 r^2 - int q^2/r^2 (- q(R)^2/R off Z_mu),
/// with rho = h / Phi''(rho_mu) and h in the FE space on [0, R_mu]. The weight
/// is the L^2_{Phi''} inner product and b encodes int rho dx.
/// `constrained = false` keeps the exterior field term and drops b.
FormMatrices assemble_Lmu_Zmu(const star::ProfileInterpolant& prof, int n_el, const SpectralOptions& opts = {},
                              bool constrained = true);

/// 4 pi [int (phi'^2 + l(l+1) phi^2/r^2) r^2 + (l+1) R_out phi(R_out)^2]
///   - 16 pi^2 int_0^{R_mu} (phi - P phi)^2 r^2 / Phi''(rho_mu),
/// P the 1/Phi''-weighted average for l = 0 and zero for l = 1. The weight is
/// the gradient norm 4 pi [...].
FormMatrices assemble_tildeL(const star::ProfileInterpolant& prof, int l, double R_out, int n_el,
                             const SpectralOptions& opts = {});

struct SpectralReport {
  std::string tag;
  int n_el = 0;
  std::size_t ndof = 0;
  double r_out = 0.0;
  std::vector<double> eigenvalues;  // ascending
  int n_minus = 0;
  int n_zero = 0;
  double zero_tol = 0.0;
  std::vector<Eigen::VectorXd> zero_vectors;  // in mesh dofs, for the n^0 band
  Eigen::VectorXd lowest_vector;              // in mesh dofs
  int excluded = 0;
  std::vector<double> coarse_eigenvalues;     // same operator at n_el / 2, if computed
};

/// Generalized symmetric eigenproblem A x = lambda W x, on the null space of
/// b^T when b is given. zero_tol = zero_rel * max |lambda|.
SpectralReport inertia(const Eigen::MatrixXd& A, const Eigen::MatrixXd& W,
                       const std::optional<Eigen::VectorXd>& b = std::nullopt, double zero_rel = 1e-6);
SpectralReport inertia(const FormMatrices& f, double zero_rel = 1e-6);

enum class Operator { Lmu_Zmu, Lmu, tildeL_l0, tildeL_l1 };
Operator parse_operator(const std::string& tag);

/// Assembles and solves at n_el and 2 n_el; returns the fine report with the
/// coarse eigenvalues attached.
SpectralReport converged_report(const star::ProfileInterpolant& prof, Operator op, int n_el,
                                const SpectralOptions& opts = {});

/// Eigenvalue indices (in the fine report) whose magnitude shrank at least
/// `factor` times under the doubling: kernel candidates.
std::vector<std::size_t> kernel_candidates(const SpectralReport& r, double factor = 4.0, std::size_t scan = 4);

/// Smallest eigenvalue of the tilde-L l = 0 form against the gradient norm,
/// divided by 4 pi. Throws InvariantViolation if the report has n^- or n^0 > 0.
double coercivity_constant(const SpectralReport& l0_report);

/// sqrt(int (a - b)^2 w r^2) over [0, R_mu] after normalizing a and b to unit
/// norm and aligning signs.
double weighted_distance(const RadialField& f, const std::vector<double>& target_at_qp,
                         const std::vector<QuadPoint>& qp, const Background& bg);

std::string report_json(const SpectralReport& r);

}  // namespace starstab::spectral
