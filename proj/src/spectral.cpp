#include "starstab/spectral.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>

#include <boost/math/quadrature/gauss.hpp>

#include "json.hpp"
#include "starstab/errors.hpp"

namespace starstab::spectral {

namespace {

using std::numbers::pi;
constexpr int kGauss = 8;

const std::array<std::pair<double, double>, kGauss>& gauss_rule() {
  static const auto rule = [] {
    using G = boost::math::quadrature::gauss<double, kGauss>;
    std::array<std::pair<double, double>, kGauss> r{};
    const auto& a = G::abscissa();
    const auto& w = G::weights();
    for (int i = 0; i < kGauss / 2; ++i) {
      r[i] = {-a[kGauss / 2 - 1 - i], w[kGauss / 2 - 1 - i]};
      r[kGauss - 1 - i] = {a[kGauss / 2 - 1 - i], w[kGauss / 2 - 1 - i]};
    }
    return r;
  }();
  return rule;
}

void check_degree(int p) {
  if (p != 1 && p != 2) throw ConfigError("finite-element degree must be 1 or 2");
}

Eigen::MatrixXd symmetrized(const Eigen::MatrixXd& m) { return 0.5 * (m + m.transpose()); }

struct LocalBasis {
  double N[3], dN[3];
};

LocalBasis basis_at(const RadialMesh& mesh, std::size_t e, double xi) {
  LocalBasis b{};
  shape(mesh.degree, xi, b.N, b.dN);
  const double jac = 2.0 / (mesh.x[e + 1] - mesh.x[e]);
  for (int j = 0; j <= mesh.degree; ++j) b.dN[j] *= jac;
  return b;
}

// Mass-type pieces shared by both operators: W, b and the per-element b pieces.
struct WeightedMass {
  Eigen::MatrixXd W;
  Eigen::VectorXd b;
};

WeightedMass weighted_mass(const RadialMesh& mesh, const std::vector<QuadPoint>& qp, const Background& bg) {
  const std::size_t n = mesh.ndof();
  const int p = mesh.degree;
  WeightedMass out{Eigen::MatrixXd::Zero(n, n), Eigen::VectorXd::Zero(n)};
  for (std::size_t g = 0; g < qp.size(); ++g) {
    if (bg.w[g] == 0.0) continue;
    const auto B = basis_at(mesh, qp[g].element, qp[g].xi);
    const double c = 4.0 * pi * qp[g].weight * bg.w[g] * qp[g].r * qp[g].r;
    const std::size_t base = qp[g].element * p;
    for (int i = 0; i <= p; ++i) {
      out.b[base + i] += c * B.N[i];
      for (int j = 0; j <= p; ++j) out.W(base + i, base + j) += c * B.N[i] * B.N[j];
    }
  }
  return out;
}

}  // namespace

double RadialMesh::dof_position(std::size_t i) const {
  const std::size_t e = i / degree, j = i % degree;
  if (e >= elements()) return x.back();
  return x[e] + (x[e + 1] - x[e]) * static_cast<double>(j) / degree;
}

RadialMesh graded_mesh(double R, int n_el, int degree, double grading) {
  check_degree(degree);
  if (!(R > 0.0) || n_el < 2) throw ConfigError("graded_mesh: need R > 0 and at least 2 elements");
  if (!(grading >= 0.0 && grading < 1.0)) throw ConfigError("graded_mesh: grading must lie in [0, 1)");
  RadialMesh m;
  m.degree = degree;
  m.r_star = R;
  m.x.resize(n_el + 1);
  for (int i = 0; i <= n_el; ++i) {
    const double s = static_cast<double>(i) / n_el;
    m.x[i] = R * (s - grading * std::sin(2.0 * pi * s) / (2.0 * pi));
  }
  m.x.front() = 0.0;
  m.x.back() = R;
  return m;
}

RadialMesh extended_mesh(double R, double R_out, int n_el, int n_ext, int degree, double grading) {
  if (!(R_out > R)) throw ConfigError("extended_mesh: R_out must exceed R_mu");
  if (n_ext < 1) throw ConfigError("extended_mesh: need at least one exterior element");
  RadialMesh m = graded_mesh(R, n_el, degree, grading);
  for (int i = 1; i <= n_ext; ++i) m.x.push_back(i == n_ext ? R_out : R + (R_out - R) * i / n_ext);
  return m;
}

void shape(int degree, double xi, double* N, double* dN) {
  if (degree == 1) {
    N[0] = 0.5 * (1.0 - xi);
    N[1] = 0.5 * (1.0 + xi);
    dN[0] = -0.5;
    dN[1] = 0.5;
    return;
  }
  N[0] = 0.5 * xi * (xi - 1.0);
  N[1] = 1.0 - xi * xi;
  N[2] = 0.5 * xi * (xi + 1.0);
  dN[0] = xi - 0.5;
  dN[1] = -2.0 * xi;
  dN[2] = xi + 0.5;
}

std::vector<QuadPoint> quadrature(const RadialMesh& mesh) {
  std::vector<QuadPoint> out;
  out.reserve(mesh.elements() * kGauss);
  for (std::size_t e = 0; e < mesh.elements(); ++e) {
    const double a = mesh.x[e], b = mesh.x[e + 1];
    for (const auto& [xi, w] : gauss_rule()) out.push_back({e, xi, a + 0.5 * (xi + 1.0) * (b - a), 0.5 * (b - a) * w});
  }
  return out;
}

Background background(const star::ProfileInterpolant& prof, const std::vector<QuadPoint>& qp, double cutoff_rel) {
  Background bg;
  bg.rho.assign(qp.size(), 0.0);
  bg.w.assign(qp.size(), 0.0);
  double wmax = 0.0;
  for (std::size_t g = 0; g < qp.size(); ++g) {
    if (qp[g].r >= prof.R()) continue;
    bg.rho[g] = prof.rho(qp[g].r);
    bg.w[g] = prof.enthalpy().inv_d2phi(bg.rho[g]);
    wmax = std::max(wmax, bg.w[g]);
  }
  for (std::size_t g = 0; g < qp.size(); ++g)
    if (qp[g].r < prof.R() && bg.w[g] < cutoff_rel * wmax) {
      bg.w[g] = 0.0;
      ++bg.excluded;
    }
  return bg;
}

double RadialField::value(double r) const {
  const auto& x = mesh.x;
  if (r >= x.back()) return coef[coef.size() - 1] * std::pow(x.back() / r, l + 1);
  const std::size_t e = std::min<std::size_t>(
      mesh.elements() - 1, static_cast<std::size_t>(std::upper_bound(x.begin(), x.end(), r) - x.begin()) - 1);
  const double xi = 2.0 * (r - x[e]) / (x[e + 1] - x[e]) - 1.0;
  double N[3], dN[3];
  shape(mesh.degree, xi, N, dN);
  double v = 0.0;
  for (int j = 0; j <= mesh.degree; ++j) v += N[j] * coef[e * mesh.degree + j];
  return v;
}

double RadialField::deriv(double r) const {
  const auto& x = mesh.x;
  if (r >= x.back()) return -(l + 1) * coef[coef.size() - 1] * std::pow(x.back() / r, l + 1) / r;
  const std::size_t e = std::min<std::size_t>(
      mesh.elements() - 1, static_cast<std::size_t>(std::upper_bound(x.begin(), x.end(), r) - x.begin()) - 1);
  const auto B = basis_at(mesh, e, 2.0 * (r - x[e]) / (x[e + 1] - x[e]) - 1.0);
  double v = 0.0;
  for (int j = 0; j <= mesh.degree; ++j) v += B.dN[j] * coef[e * mesh.degree + j];
  return v;
}

double RadialField::gradient_norm2() const {
  double s = 0.0;
  for (const auto& q : quadrature(mesh)) {
    const auto B = basis_at(mesh, q.element, q.xi);
    double f = 0.0, df = 0.0;
    for (int j = 0; j <= mesh.degree; ++j) {
      f += B.N[j] * coef[q.element * mesh.degree + j];
      df += B.dN[j] * coef[q.element * mesh.degree + j];
    }
    s += q.weight * (df * df * q.r * q.r + l * (l + 1) * f * f);
  }
  const double fo = coef[coef.size() - 1];
  return s + (l + 1) * mesh.r_out() * fo * fo;
}

FormMatrices assemble_Lmu_Zmu(const star::ProfileInterpolant& prof, int n_el, const SpectralOptions& opts,
                              bool constrained) {
  FormMatrices f;
  f.tag = constrained ? "L_mu_Zmu_radial" : "L_mu_radial";
  f.mesh = graded_mesh(prof.R(), n_el, opts.degree, opts.grading);
  const auto& mesh = f.mesh;
  const int p = mesh.degree;
  const std::size_t n = mesh.ndof();
  const auto qp = quadrature(mesh);
  const auto bg = background(prof, qp, opts.cutoff_rel);
  f.excluded = bg.excluded;
  auto wm = weighted_mass(mesh, qp, bg);

  // q_i(r) = int_0^r 4 pi s^2 phi_i w ds at every quadrature point, scaled by
  // sqrt(weight)/r so that G = Q Q^T.
  const double wmax = *std::max_element(bg.w.begin(), bg.w.end());
  const auto& rule = gauss_rule();
  Eigen::MatrixXd Q = Eigen::MatrixXd::Zero(n, qp.size());
  Eigen::VectorXd before = Eigen::VectorXd::Zero(n);
  for (std::size_t e = 0; e < mesh.elements(); ++e) {
    const double a = mesh.x[e], b = mesh.x[e + 1];
    Eigen::VectorXd elem = Eigen::VectorXd::Zero(p + 1);
    for (int g = 0; g < kGauss; ++g) {
      const std::size_t gi = e * kGauss + g;
      const double xg = rule[g].first;
      Eigen::VectorXd part = Eigen::VectorXd::Zero(p + 1);
      for (const auto& [t, tw] : rule) {
        const double xi = -1.0 + 0.5 * (xg + 1.0) * (t + 1.0);
        const double r = a + 0.5 * (xi + 1.0) * (b - a);
        double w = prof.enthalpy().inv_d2phi(prof.rho(r));
        if (w < opts.cutoff_rel * wmax) w = 0.0;
        double N[3], dN[3];
        shape(p, xi, N, dN);
        const double c = 4.0 * pi * r * r * w * tw * 0.5 * (xg + 1.0) * 0.5 * (b - a);
        for (int j = 0; j <= p; ++j) part[j] += c * N[j];
      }
      Q.col(gi) = before;
      Q.col(gi).segment(e * p, p + 1) += part;
      Q.col(gi) *= std::sqrt(qp[gi].weight) / qp[gi].r;
    }
    // full-element piece from the same weights as b
    for (int g = 0; g < kGauss; ++g) {
      const std::size_t gi = e * kGauss + g;
      if (bg.w[gi] == 0.0) continue;
      double N[3], dN[3];
      shape(p, qp[gi].xi, N, dN);
      for (int j = 0; j <= p; ++j) elem[j] += 4.0 * pi * qp[gi].weight * bg.w[gi] * qp[gi].r * qp[gi].r * N[j];
    }
    before.segment(e * p, p + 1) += elem;
  }
  Eigen::MatrixXd G = Q * Q.transpose();
  if (!constrained) G += wm.b * wm.b.transpose() / prof.R();
  f.A = symmetrized(wm.W - G);
  f.W = symmetrized(wm.W);
  if (constrained) f.b = wm.b;
  f.dofs.resize(n);
  for (std::size_t i = 0; i < n; ++i) f.dofs[i] = i;
  return f;
}

FormMatrices assemble_tildeL(const star::ProfileInterpolant& prof, int l, double R_out, int n_el,
                             const SpectralOptions& opts) {
  if (l != 0 && l != 1) throw ConfigError("assemble_tildeL: harmonic degree must be 0 or 1");
  if (!(R_out > prof.R())) throw ConfigError("assemble_tildeL: R_out must exceed R_mu");
  FormMatrices f;
  f.tag = l == 0 ? "tildeL_l0" : "tildeL_l1";
  f.mesh = extended_mesh(prof.R(), R_out, n_el, std::max(2, n_el / 4), opts.degree, opts.grading);
  const auto& mesh = f.mesh;
  const int p = mesh.degree;
  const std::size_t n = mesh.ndof();
  const auto qp = quadrature(mesh);
  const auto bg = background(prof, qp, opts.cutoff_rel);
  f.excluded = bg.excluded;
  const auto wm = weighted_mass(mesh, qp, bg);

  Eigen::MatrixXd K = Eigen::MatrixXd::Zero(n, n);
  for (const auto& q : qp) {
    const auto B = basis_at(mesh, q.element, q.xi);
    const std::size_t base = q.element * p;
    for (int i = 0; i <= p; ++i)
      for (int j = 0; j <= p; ++j)
        K(base + i, base + j) += q.weight * (B.dN[i] * B.dN[j] * q.r * q.r + l * (l + 1) * B.N[i] * B.N[j]);
  }
  K(n - 1, n - 1) += (l + 1) * R_out;

  Eigen::MatrixXd A = K - wm.W;
  if (l == 0) A += wm.b * wm.b.transpose() / wm.b.sum();
  A *= 4.0 * pi;
  K *= 4.0 * pi;

  const std::size_t first = l == 0 ? 0 : 1;  // f(0) = 0 for l >= 1
  const std::size_t m = n - first;
  f.A = symmetrized(A.bottomRightCorner(m, m));
  f.W = symmetrized(K.bottomRightCorner(m, m));
  f.dofs.resize(m);
  for (std::size_t i = 0; i < m; ++i) f.dofs[i] = i + first;
  return f;
}

SpectralReport inertia(const Eigen::MatrixXd& A, const Eigen::MatrixXd& W, const std::optional<Eigen::VectorXd>& b,
                       double zero_rel) {
  const Eigen::Index n = A.rows();
  if (A.cols() != n || W.rows() != n || W.cols() != n) throw ConfigError("inertia: matrix sizes differ");
  const double asym = (A - A.transpose()).cwiseAbs().maxCoeff();
  if (asym > 1e-12 * std::max(1.0, A.cwiseAbs().maxCoeff())) throw ConfigError("inertia: form matrix is not symmetric");
  Eigen::MatrixXd Z;
  if (b) {
    if (b->size() != n) throw ConfigError("inertia: constraint length differs from the matrix size");
    const Eigen::MatrixXd bm = *b;
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(bm);
    Z = Eigen::MatrixXd(qr.householderQ()).rightCols(n - 1);
  } else {
    Z = Eigen::MatrixXd::Identity(n, n);
  }
  const Eigen::MatrixXd Ar = symmetrized(Z.transpose() * A * Z);
  const Eigen::MatrixXd Wr = symmetrized(Z.transpose() * W * Z);
  Eigen::LLT<Eigen::MatrixXd> llt(Wr);
  if (llt.info() != Eigen::Success) throw NumericalFailure("inertia: weight matrix is not positive definite");
  Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> es(Ar, Wr, Eigen::ComputeEigenvectors | Eigen::Ax_lBx);
  if (es.info() != Eigen::Success) throw NumericalFailure("inertia: generalized eigensolver failed");

  SpectralReport r;
  r.ndof = static_cast<std::size_t>(Ar.rows());
  const auto& ev = es.eigenvalues();
  r.eigenvalues.assign(ev.data(), ev.data() + ev.size());
  double mx = 0.0;
  for (double v : r.eigenvalues) mx = std::max(mx, std::abs(v));
  r.zero_tol = zero_rel * mx;
  for (Eigen::Index i = 0; i < ev.size(); ++i) {
    if (ev[i] < -r.zero_tol) {
      ++r.n_minus;
    } else if (ev[i] <= r.zero_tol) {
      ++r.n_zero;
      r.zero_vectors.push_back(Z * es.eigenvectors().col(i));
    }
  }
  r.lowest_vector = Z * es.eigenvectors().col(0);
  return r;
}

SpectralReport inertia(const FormMatrices& f, double zero_rel) {
  auto r = inertia(f.A, f.W, f.b, zero_rel);
  r.tag = f.tag;
  r.n_el = static_cast<int>(f.mesh.elements());
  r.r_out = f.mesh.r_out();
  r.excluded = f.excluded;
  auto lift = [&](const Eigen::VectorXd& v) {
    Eigen::VectorXd full = Eigen::VectorXd::Zero(f.mesh.ndof());
    for (std::size_t i = 0; i < f.dofs.size(); ++i) full[f.dofs[i]] = v[i];
    return full;
  };
  for (auto& v : r.zero_vectors) v = lift(v);
  r.lowest_vector = lift(r.lowest_vector);
  return r;
}

Operator parse_operator(const std::string& tag) {
  if (tag == "L_mu_Zmu_radial" || tag == "Lmu_Zmu") return Operator::Lmu_Zmu;
  if (tag == "L_mu_radial" || tag == "Lmu") return Operator::Lmu;
  if (tag == "tildeL_l0") return Operator::tildeL_l0;
  if (tag == "tildeL_l1") return Operator::tildeL_l1;
  throw ConfigError("unknown operator '" + tag + "' (expected L_mu_Zmu_radial | L_mu_radial | tildeL_l0 | tildeL_l1)");
}

namespace {
FormMatrices assemble(const star::ProfileInterpolant& prof, Operator op, int n_el, const SpectralOptions& opts) {
  const double r_out = opts.r_out_factor * prof.R();
  switch (op) {
    case Operator::Lmu_Zmu: return assemble_Lmu_Zmu(prof, n_el, opts, true);
    case Operator::Lmu: return assemble_Lmu_Zmu(prof, n_el, opts, false);
    case Operator::tildeL_l0: return assemble_tildeL(prof, 0, r_out, n_el, opts);
    case Operator::tildeL_l1: return assemble_tildeL(prof, 1, r_out, n_el, opts);
  }
  throw ConfigError("unknown operator");
}
}  // namespace

SpectralReport converged_report(const star::ProfileInterpolant& prof, Operator op, int n_el,
                                const SpectralOptions& opts) {
  const auto coarse = inertia(assemble(prof, op, n_el, opts));
  auto fine = inertia(assemble(prof, op, 2 * n_el, opts));
  fine.coarse_eigenvalues = coarse.eigenvalues;
  return fine;
}

std::vector<std::size_t> kernel_candidates(const SpectralReport& r, double factor, std::size_t scan) {
  std::vector<std::size_t> out;
  const std::size_t n = std::min({scan, r.eigenvalues.size(), r.coarse_eigenvalues.size()});
  for (std::size_t i = 0; i < n; ++i)
    if (factor * std::abs(r.eigenvalues[i]) <= std::abs(r.coarse_eigenvalues[i])) out.push_back(i);
  return out;
}

double coercivity_constant(const SpectralReport& r) {
  if (r.tag != "tildeL_l0") throw ConfigError("coercivity_constant: expects a tildeL_l0 report");
  if (r.n_minus > 0 || r.n_zero > 0)
    throw InvariantViolation("coercivity_constant: the l = 0 form has " + std::to_string(r.n_minus) +
                             " negative and " + std::to_string(r.n_zero) + " zero directions");
  return r.eigenvalues.front() / (4.0 * pi);
}

double weighted_distance(const RadialField& f, const std::vector<double>& target, const std::vector<QuadPoint>& qp,
                         const Background& bg) {
  if (target.size() != qp.size()) throw ConfigError("weighted_distance: target not sampled on the quadrature");
  double ff = 0.0, tt = 0.0, ft = 0.0;
  std::vector<double> fv(qp.size());
  for (std::size_t g = 0; g < qp.size(); ++g) {
    if (bg.w[g] == 0.0) continue;
    fv[g] = f.value(qp[g].r);
    const double c = qp[g].weight * bg.w[g] * qp[g].r * qp[g].r;
    ff += c * fv[g] * fv[g];
    tt += c * target[g] * target[g];
    ft += c * fv[g] * target[g];
  }
  if (!(ff > 0.0) || !(tt > 0.0)) throw NumericalFailure("weighted_distance: zero norm");
  const double s = ft >= 0.0 ? 1.0 : -1.0;
  // |a/|a| - s b/|b||^2 = 2 - 2 |<a,b>| / (|a||b|)
  double d2 = 0.0;
  const double na = std::sqrt(ff), nb = std::sqrt(tt);
  for (std::size_t g = 0; g < qp.size(); ++g) {
    if (bg.w[g] == 0.0) continue;
    const double c = qp[g].weight * bg.w[g] * qp[g].r * qp[g].r;
    const double d = fv[g] / na - s * target[g] / nb;
    d2 += c * d * d;
  }
  return std::sqrt(d2);
}

std::string report_json(const SpectralReport& r) {
  nlohmann::ordered_json j;
  j["format"] = "starstab-v1 spectrum";
  j["operator"] = r.tag;
  j["n_el"] = r.n_el;
  j["ndof"] = r.ndof;
  j["r_out"] = r.r_out;
  j["n_minus"] = r.n_minus;
  j["n_zero"] = r.n_zero;
  j["zero_tol"] = r.zero_tol;
  j["surface_points_excluded"] = r.excluded;
  const std::size_t k = std::min<std::size_t>(r.eigenvalues.size(), 16);
  j["lowest_eigenvalues"] = std::vector<double>(r.eigenvalues.begin(), r.eigenvalues.begin() + k);
  if (!r.coarse_eigenvalues.empty()) {
    const std::size_t kc = std::min<std::size_t>(r.coarse_eigenvalues.size(), 16);
    j["coarse_lowest_eigenvalues"] =
        std::vector<double>(r.coarse_eigenvalues.begin(), r.coarse_eigenvalues.begin() + kc);
    j["kernel_candidates"] = kernel_candidates(r);
  }
  return j.dump(2) + "\n";
}

}  // namespace starstab::spectral
