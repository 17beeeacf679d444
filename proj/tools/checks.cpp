#include "checks.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "starstab/errors.hpp"
#include "starstab/spectral.hpp"

namespace starstab::checks {

using std::numbers::pi;

functionals::RefPtr polytrope_ref(double gamma, double mu, double K) {
  auto h = eos::build_enthalpy(eos::make_polytrope(K, gamma));
  auto p = star::solve_star(h, mu);
  return functionals::make_reference(std::move(p), std::move(h));
}

double decomposition_suite(const functionals::RefPtr& ref, int n, std::uint64_t seed) {
  const auto base = functionals::reference_state(ref, 1.5 * ref->R());
  double worst = 0.0;
  for (int k = 0; k < n; ++k) {
    const auto s = functionals::random_state(base, seed + k, 0.2, k % 2 == 1);
    worst = std::max(worst, functionals::decomposition_check(s));
  }
  return worst;
}

double duality_suite(const functionals::RefPtr& ref, int n, std::uint64_t seed) {
  const auto base = functionals::reference_state(ref, 1.5 * ref->R());
  double worst = 1e300;
  for (int k = 0; k < n; ++k)
    worst = std::min(worst, functionals::duality_gap(functionals::random_state(base, seed + k, 0.2, true)).slack);
  return worst;
}

std::vector<InertiaRow> inertia_vs_classifier(const eos::Enthalpy& h, const family::FamilyCurve& c, int count,
                                              int n_el) {
  if (c.nu.size() != c.size()) throw ConfigError("inertia_vs_classifier: curve is not classified");
  if (count < 1) throw ConfigError("inertia_vs_classifier: need at least one sample");
  std::vector<std::size_t> pick;
  const std::size_t n = c.size();
  for (int k = 0; k < count; ++k) {
    const std::size_t i = count == 1 ? n / 2 : static_cast<std::size_t>(std::lround(k * (n - 1.0) / (count - 1)));
    if (pick.empty() || pick.back() != i) pick.push_back(i);
  }
  std::vector<InertiaRow> rows;
  for (std::size_t i : pick) {
    const auto p = star::solve_star(h, c.mu[i]);
    const star::ProfileInterpolant ip(p, h);
    const auto z = spectral::converged_report(ip, spectral::Operator::Lmu_Zmu, n_el);
    const auto l0 = spectral::converged_report(ip, spectral::Operator::tildeL_l0, n_el);
    rows.push_back({c.mu[i], c.nu[i], z.n_minus, z.n_zero, l0.n_minus, l0.n_zero});
  }
  return rows;
}

KernelResult kernel_check(const functionals::RefPtr& ref, int n_el) {
  const auto& ip = ref->ip;
  KernelResult k;
  const auto r = spectral::converged_report(ip, spectral::Operator::tildeL_l1, n_el);
  k.l1_lowest = r.eigenvalues.front();
  k.l1_lowest_coarse = r.coarse_eigenvalues.front();
  k.shrink = std::abs(k.l1_lowest_coarse) / std::abs(k.l1_lowest);
  k.l1_n_zero = r.n_zero;
  const auto form = spectral::assemble_tildeL(ip, 1, r.r_out, 2 * n_el);
  const spectral::RadialField f{form.mesh, r.lowest_vector, 1};
  const auto qp = spectral::quadrature(form.mesh);
  const auto bg = spectral::background(ip, qp);
  std::vector<double> target(qp.size());
  for (std::size_t g = 0; g < qp.size(); ++g) target[g] = ip.dV(qp[g].r);
  k.vector_error = spectral::weighted_distance(f, target, qp, bg);
  const auto l0 = spectral::converged_report(ip, spectral::Operator::tildeL_l0, n_el);
  k.l0_n_zero = l0.n_zero;
  k.l0_n_minus = l0.n_minus;
  return k;
}

HessianResult hessian_suite(const functionals::RefPtr& ref, int n, std::uint64_t seed, int n_el) {
  const auto& ip = ref->ip;
  const auto form = spectral::assemble_tildeL(ip, 0, 1.5 * ip.R(), n_el);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd;
  const double scale = ref->enthalpy.dphi(ip.mu());
  HessianResult res;
  for (int trial = 0; trial < n; ++trial) {
    double c[6];
    for (auto& x : c) x = nd(rng);
    Eigen::VectorXd coef(form.mesh.ndof());
    for (Eigen::Index i = 0; i < coef.size(); ++i) {
      const double x = form.mesh.dof_position(i) / form.mesh.r_out();
      double v = c[5] * x;
      for (int k = 0; k < 5; ++k) v += c[k] * std::cos(k * pi * x);
      coef[i] = scale * v;
    }
    const double target = coef.dot(form.A * coef) / (4.0 * pi);
    auto fd = [&](double eps) {
      const spectral::RadialField p{form.mesh, eps * coef, 0}, m{form.mesh, -eps * coef, 0};
      return (functionals::dual_B(p, ip) + functionals::dual_B(m, ip)) / (eps * eps);
    };
    // steps small enough that the O(eps^2) truncation sits well under the 1e-4 check
    const double e1 = std::abs(fd(5e-4) - target), e2 = std::abs(fd(2.5e-4) - target);
    res.max_rel_error = std::max(res.max_rel_error, e2 / std::abs(target));
    res.min_order = std::min(res.min_order, std::log2(e1 / e2));
  }
  return res;
}

}  // namespace starstab::checks
