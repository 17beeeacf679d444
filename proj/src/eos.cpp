#include "starstab/eos.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numbers>
#include <random>
#include <sstream>

// pchip.hpp in Boost 1.74 calls isnan unqualified
namespace boost::math::interpolators { using std::isnan; }
#include <boost/math/interpolators/pchip.hpp>
#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/tools/roots.hpp>

#include "starstab/errors.hpp"

namespace starstab::eos {

namespace {

constexpr double kGammaLow = 6.0 / 5.0;
constexpr double kGammaHigh = 2.0;

class Polytrope final : public PressureLaw {
 public:
  Polytrope(double K, double gamma, LawInfo info) : PressureLaw(std::move(info)), K_(K), gamma_(gamma) {}

  double pressure(double rho) const override { return rho <= 0.0 ? 0.0 : K_ * std::pow(rho, gamma_); }
  double dpressure(double rho) const override {
    return rho <= 0.0 ? 0.0 : K_ * gamma_ * std::pow(rho, gamma_ - 1.0);
  }
  double d2pressure(double rho) const override {
    if (rho <= 0.0) return gamma_ < 2.0 ? std::numeric_limits<double>::infinity() : (gamma_ == 2.0 ? 2.0 * K_ : 0.0);
    return K_ * gamma_ * (gamma_ - 1.0) * std::pow(rho, gamma_ - 2.0);
  }

  bool has_closed_form_enthalpy() const override { return true; }
  double closed_dphi(double rho) const override {
    return rho <= 0.0 ? 0.0 : K_ * gamma_ / (gamma_ - 1.0) * std::pow(rho, gamma_ - 1.0);
  }
  double closed_inverse_dphi(double y) const override {
    return y <= 0.0 ? 0.0 : std::pow((gamma_ - 1.0) * y / (K_ * gamma_), 1.0 / (gamma_ - 1.0));
  }

 private:
  double K_;
  double gamma_;
};

class WhiteDwarf final : public PressureLaw {
 public:
  WhiteDwarf(double A, double B, LawInfo info) : PressureLaw(std::move(info)), A_(A), B_(B) {}

  double pressure(double rho) const override { return rho <= 0.0 ? 0.0 : A_ * white_dwarf_f(x_of(rho)); }
  double dpressure(double rho) const override {
    if (rho <= 0.0) return 0.0;
    const double x = x_of(rho);
    return 8.0 * A_ / (3.0 * B_) * x * x / std::sqrt(1.0 + x * x);
  }
  double d2pressure(double rho) const override {
    if (rho <= 0.0) return std::numeric_limits<double>::infinity();
    const double x = x_of(rho);
    const double s = 1.0 + x * x;
    return 8.0 * A_ / (9.0 * B_ * B_) * (2.0 + x * x) / (x * s * std::sqrt(s));
  }

 private:
  double x_of(double rho) const { return std::cbrt(rho / B_); }
  double A_;
  double B_;
};

/// Monotone cubic in (ln rho, ln P) with power-law continuation at both ends.
class TableLaw final : public PressureLaw {
 public:
  using Interp = boost::math::interpolators::pchip<std::vector<double>>;

  TableLaw(std::shared_ptr<const Interp> interp, double s_min, double s_max, LawInfo info)
      : PressureLaw(std::move(info)), interp_(std::move(interp)), s_min_(s_min), s_max_(s_max) {
    lp_min_ = (*interp_)(s_min_);
    lp_max_ = (*interp_)(s_max_);
  }

  double pressure(double rho) const override {
    if (rho <= 0.0) return 0.0;
    const double s = std::log(rho);
    return std::exp(log_p(s));
  }
  double dpressure(double rho) const override {
    if (rho <= 0.0) return 0.0;
    const double s = std::log(rho);
    return std::exp(log_p(s) - s) * slope(s);
  }
  double d2pressure(double rho) const override {
    if (rho <= 0.0) return std::numeric_limits<double>::infinity();
    const double h = 1e-5 * rho;
    return (dpressure(rho + h) - dpressure(rho - h)) / (2.0 * h);
  }

 private:
  double log_p(double s) const {
    if (s < s_min_) return lp_min_ + info().gamma0 * (s - s_min_);
    if (s > s_max_) return lp_max_ + info().gamma1 * (s - s_max_);
    return (*interp_)(s);
  }
  double slope(double s) const {
    if (s < s_min_) return info().gamma0;
    if (s > s_max_) return info().gamma1;
    return interp_->prime(s);
  }

  std::shared_ptr<const Interp> interp_;
  double s_min_, s_max_, lp_min_ = 0.0, lp_max_ = 0.0;
};

void check_gamma(double gamma, const char* what) {
  if (!(gamma > kGammaLow)) {
    std::ostringstream os;
    os << what << " = " << gamma << " violates the lower bound gamma > 6/5";
    throw ConfigError(os.str());
  }
  if (!(gamma < kGammaHigh)) {
    std::ostringstream os;
    os << what << " = " << gamma << " violates the upper bound gamma < 2";
    throw ConfigError(os.str());
  }
}

}  // namespace

double PressureLaw::closed_dphi(double) const {
  throw Error("law '" + info_.label + "' has no closed-form enthalpy");
}

double PressureLaw::closed_inverse_dphi(double) const {
  throw Error("law '" + info_.label + "' has no closed-form enthalpy");
}

LawPtr make_polytrope(double K, double gamma, bool allow_out_of_range) {
  if (!(K > 0.0)) throw ConfigError("polytrope: K must be positive");
  if (!allow_out_of_range) check_gamma(gamma, "polytrope gamma");
  if (!(gamma > 1.0)) throw ConfigError("polytrope: gamma must exceed 1 even with the validation override");
  LawInfo info;
  std::ostringstream os;
  os << "polytrope(K=" << K << ",gamma=" << gamma << ")";
  info.label = os.str();
  info.gamma0 = info.gamma1 = gamma;
  info.K0 = info.K1 = K * gamma;
  info.theta0 = 0.5 * (gamma - 1.0);
  info.c1_compliant = true;
  return std::make_shared<Polytrope>(K, gamma, std::move(info));
}

double white_dwarf_f(double x) {
  if (x <= 0.0) return 0.0;
  if (x < 0.3) {
    // 8 * sum_k binom(-1/2, k) x^{5+2k} / (5+2k)
    double coeff = 1.0;
    double xp = std::pow(x, 5);
    const double x2 = x * x;
    double sum = 0.0;
    for (int k = 0; k < 40; ++k) {
      const double term = coeff * xp / (5.0 + 2.0 * k);
      sum += term;
      if (std::abs(term) < 1e-18 * std::abs(sum)) break;
      coeff *= -(2.0 * k + 1.0) / (2.0 * k + 2.0);
      xp *= x2;
    }
    return 8.0 * sum;
  }
  const double s = std::sqrt(1.0 + x * x);
  return x * s * (2.0 * x * x - 3.0) + 3.0 * std::asinh(x);
}

LawPtr make_white_dwarf(double A, double B) {
  if (!(A > 0.0) || !(B > 0.0)) throw ConfigError("white dwarf: A and B must be positive");
  LawInfo info;
  std::ostringstream os;
  os << "white_dwarf(A=" << A << ",B=" << B << ")";
  info.label = os.str();
  info.gamma0 = 5.0 / 3.0;
  info.gamma1 = 4.0 / 3.0;
  info.K0 = 8.0 * A / (3.0 * std::pow(B, 5.0 / 3.0));
  info.K1 = 8.0 * A / (3.0 * std::pow(B, 4.0 / 3.0));
  info.theta0 = 1.0 / 3.0;
  info.decay = 2.0 / 3.0;
  info.rho_low = B / 8.0;
  info.rho_high = 8.0 * B;
  info.c1_compliant = true;
  return std::make_shared<WhiteDwarf>(A, B, std::move(info));
}

LawPtr make_table_law(std::vector<double> rho, std::vector<double> p, std::string label) {
  if (rho.size() != p.size() || rho.size() < 4) throw ConfigError("table law: need at least 4 (rho, P) rows");
  std::vector<double> s(rho.size()), lp(rho.size());
  for (std::size_t i = 0; i < rho.size(); ++i) {
    if (!(rho[i] > 0.0) || !(p[i] > 0.0)) throw ConfigError("table law: rho and P must be positive");
    if (i > 0 && !(rho[i] > rho[i - 1])) throw ConfigError("table law: rho column must be strictly increasing");
    if (i > 0 && !(p[i] > p[i - 1])) throw ConfigError("table law: P must be strictly increasing (P' > 0)");
    s[i] = std::log(rho[i]);
    lp[i] = std::log(p[i]);
  }
  const std::size_t n = s.size();
  const double g0 = (lp[1] - lp[0]) / (s[1] - s[0]);
  const double g1 = (lp[n - 1] - lp[n - 2]) / (s[n - 1] - s[n - 2]);
  const double s_min = s.front(), s_max = s.back();
  auto interp = std::make_shared<const TableLaw::Interp>(std::move(s), std::move(lp), g0, g1);
  LawInfo info;
  info.label = std::move(label);
  info.gamma0 = g0;
  info.gamma1 = g1;
  info.K0 = g0 * p.front() / std::pow(rho.front(), g0);
  info.K1 = g1 * p.back() / std::pow(rho.back(), g1);
  return std::make_shared<TableLaw>(std::move(interp), s_min, s_max, std::move(info));
}

LawPtr load_table_law(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("table law: cannot open '" + path + "'");
  std::vector<double> rho, p;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream ls(line);
    double a = 0.0, b = 0.0;
    if (!(ls >> a >> b)) {
      if (rho.empty()) continue;  // header row
      throw ConfigError(path + ":" + std::to_string(lineno) + ": expected two numeric columns");
    }
    rho.push_back(a);
    p.push_back(b);
  }
  return make_table_law(std::move(rho), std::move(p), "custom_table(" + path + ")");
}

LawPtr make_law(const LawSpec& spec) {
  if (spec.kind == "polytrope") return make_polytrope(spec.K, spec.gamma, spec.allow_out_of_range);
  if (spec.kind == "white_dwarf") return make_white_dwarf(spec.A, spec.B);
  if (spec.kind == "custom_table") return load_table_law(spec.table_path);
  throw ConfigError("unknown law kind '" + spec.kind + "' (expected polytrope | white_dwarf | custom_table)");
}

ValidationReport validate(const PressureLaw& law, const ValidationOptions& opts) {
  ValidationReport rep;
  const auto& info = law.info();
  auto fail = [&](std::string msg) {
    rep.ok = false;
    rep.failures.push_back(std::move(msg));
  };
  for (int i = 0; i < opts.interior_samples; ++i) {
    const double s = std::pow(10.0, -8.0 + 16.0 * i / (opts.interior_samples - 1));
    const double dp = law.dpressure(s);
    if (!(dp > 0.0)) {
      fail("P'(" + std::to_string(s) + ") is not positive");
      break;
    }
    if (info.c1_compliant && !(s * law.d2pressure(s) + 2.0 * dp > 0.0)) {
      fail("rho P'' + 2 P' <= 0 at rho = " + std::to_string(s));
      break;
    }
  }
  for (double s : opts.low_points) {
    const double ratio = std::pow(s, 1.0 - info.gamma0) * law.dpressure(s) / info.K0;
    if (!(std::abs(ratio - 1.0) <= opts.limit_rel_tol))
      fail("low-density limit s^{1-gamma0} P'(s) -> K0 off by " + std::to_string(ratio - 1.0) +
           " at s = " + std::to_string(s));
  }
  for (double s : opts.high_points) {
    const double ratio = std::pow(s, 1.0 - info.gamma1) * law.dpressure(s) / info.K1;
    if (!(std::abs(ratio - 1.0) <= opts.limit_rel_tol))
      fail("high-density limit s^{1-gamma1} P'(s) -> K1 off by " + std::to_string(ratio - 1.0) +
           " at s = " + std::to_string(s));
  }
  if (!(info.gamma0 > kGammaLow && info.gamma0 < kGammaHigh)) fail("gamma0 outside (6/5, 2)");
  if (!(info.gamma1 > kGammaLow && info.gamma1 < kGammaHigh)) fail("gamma1 outside (6/5, 2)");
  return rep;
}

// ---------------------------------------------------------------------------
// Enthalpy

Enthalpy build_enthalpy(LawPtr law, const TabulationSpec& tab) {
  if (!law) throw ConfigError("build_enthalpy: null law");
  Enthalpy h;
  h.law_ = law;
  h.p0_ = law->pressure(0.0);
  if (law->has_closed_form_enthalpy()) {
    h.kind_ = EnthalpyKind::closed_form;
    return h;
  }
  h.kind_ = EnthalpyKind::tabulated;
  const auto& info = law->info();
  const double rho_ref = std::max(info.rho_low.value_or(1.0), 1.0);
  const int n = static_cast<int>(std::lround((tab.decades_below + tab.decades_above) * tab.points_per_decade)) + 1;
  h.dlog_ = std::log(10.0) / tab.points_per_decade;
  h.log_rho_min_ = std::log(rho_ref) - tab.decades_below * std::log(10.0);
  h.rho_min_ = std::exp(h.log_rho_min_);
  h.rho_max_ = std::exp(h.log_rho_min_ + (n - 1) * h.dlog_);

  // Phi'(rho) = int_0^rho P'(s)/s ds = int_{-inf}^{ln rho} P'(e^u) du
  std::vector<double> g(n), slope(n), lg(n);
  {
    boost::math::quadrature::exp_sinh<double> tail;
    double err = 0.0;
    const double rmin = h.rho_min_;
    g[0] = tail.integrate([&](double t) { return law->dpressure(rmin * std::exp(-t)); },
                          1e-13, &err);
    if (!(g[0] > 0.0) || !(err <= 1e-8 * g[0])) throw NumericalFailure("build_enthalpy: tail quadrature did not converge");
  }
  for (int j = 0; j + 1 < n; ++j) {
    const double a = h.log_rho_min_ + j * h.dlog_;
    const double b = a + h.dlog_;
    double err = 0.0;
    const double piece = boost::math::quadrature::gauss_kronrod<double, 15>::integrate(
        [&](double u) { return law->dpressure(std::exp(u)); }, a, b, 8, 1e-14, &err);
    if (!std::isfinite(piece) || err > 1e-10 * std::abs(piece) + 1e-300)
      throw NumericalFailure("build_enthalpy: quadrature did not converge on table interval " + std::to_string(j));
    g[j + 1] = g[j] + piece;
    if (!(g[j + 1] > g[j])) throw NumericalFailure("build_enthalpy: non-monotone Phi' table (invalid law)");
  }
  for (int j = 0; j < n; ++j) {
    const double rho = std::exp(h.log_rho_min_ + j * h.dlog_);
    lg[j] = std::log(g[j]);
    slope[j] = law->dpressure(rho) / g[j];  // d ln Phi' / d ln rho
  }
  h.log_dphi_ = lg;
  h.table_ = std::make_shared<const Enthalpy::Table>(std::move(lg), std::move(slope), h.log_rho_min_, h.dlog_);
  return h;
}

double Enthalpy::table_dphi(double rho) const {
  if (rho <= 0.0) return 0.0;
  const auto& info = law_->info();
  const double s = std::log(rho);
  if (rho <= rho_min_) return std::exp(log_dphi_.front()) * std::pow(rho / rho_min_, info.gamma0 - 1.0);
  if (rho >= rho_max_)
    return std::exp(log_dphi_.back()) +
           info.K1 / (info.gamma1 - 1.0) * (std::pow(rho, info.gamma1 - 1.0) - std::pow(rho_max_, info.gamma1 - 1.0));
  // exp/log round trips can land one ulp past the table ends
  const auto [lo, hi] = table_->domain();
  return std::exp((*table_)(std::clamp(s, lo, hi)));
}

double Enthalpy::table_inverse(double y) const {
  if (y <= 0.0) return 0.0;
  const auto& info = law_->info();
  const double ly = std::log(y);
  if (ly <= log_dphi_.front()) return rho_min_ * std::pow(y / std::exp(log_dphi_.front()), 1.0 / (info.gamma0 - 1.0));
  if (ly >= log_dphi_.back()) {
    const double base = std::pow(rho_max_, info.gamma1 - 1.0) + (y - std::exp(log_dphi_.back())) * (info.gamma1 - 1.0) / info.K1;
    return std::pow(base, 1.0 / (info.gamma1 - 1.0));
  }
  const auto it = std::upper_bound(log_dphi_.begin(), log_dphi_.end(), ly);
  const std::size_t j = static_cast<std::size_t>(std::distance(log_dphi_.begin(), it)) - 1;
  const double a = log_rho_min_ + j * dlog_;
  const double b = std::min(a + dlog_, table_->domain().second);
  const double fa = log_dphi_[j] - ly;
  const double fb = log_dphi_[j + 1] - ly;
  if (fa == 0.0) return std::exp(a);
  if (fb == 0.0) return std::exp(b);
  boost::uintmax_t iters = 100;
  const auto [lo, hi] = boost::math::tools::toms748_solve(
      [&](double s) { return (*table_)(s) - ly; }, a, b, fa, fb,
      boost::math::tools::eps_tolerance<double>(52), iters);
  return std::exp(0.5 * (lo + hi));
}

double Enthalpy::dphi(double rho) const {
  if (rho <= 0.0) return 0.0;
  return kind_ == EnthalpyKind::closed_form ? law_->closed_dphi(rho) : table_dphi(rho);
}

double Enthalpy::inverse_dphi(double y) const {
  if (y <= 0.0) return 0.0;
  return kind_ == EnthalpyKind::closed_form ? law_->closed_inverse_dphi(y) : table_inverse(y);
}

double Enthalpy::phi(double rho) const {
  if (rho <= 0.0) return 0.0;
  // Phi = rho Phi' - (P - P(0)), since (rho Phi' - P)' = Phi'.
  return rho * dphi(rho) - (law_->pressure(rho) - p0_);
}

double Enthalpy::d2phi(double rho) const {
  if (rho <= 0.0) {
    const auto& info = law_->info();
    if (info.gamma0 < 2.0) return std::numeric_limits<double>::infinity();
    return info.gamma0 == 2.0 ? info.K0 : 0.0;
  }
  return law_->dpressure(rho) / rho;
}

double Enthalpy::inv_d2phi(double rho) const {
  if (rho <= 0.0) {
    const auto& info = law_->info();
    if (info.gamma0 < 2.0) return 0.0;
    return info.gamma0 == 2.0 ? 1.0 / info.K0 : std::numeric_limits<double>::infinity();
  }
  return rho / law_->dpressure(rho);
}

// ---------------------------------------------------------------------------
// Psi and its Legendre transform

double psi(double rho_b, double tau, const Enthalpy& h) {
  if (tau < -rho_b * (1.0 + 1e-14)) {
    std::ostringstream os;
    os << "psi: tau = " << tau << " lies below the vacuum bound -rho_b = " << -rho_b;
    throw ConfigError(os.str());
  }
  if (tau == 0.0) return 0.0;
  tau = std::max(tau, -rho_b);
  if (rho_b > 0.0 && std::abs(tau) <= 0.5 * rho_b) {
    // Taylor remainder: Psi(tau) = tau^2 int_0^1 (1-t) Phi''(rho_b + t tau) dt
    const double integral = boost::math::quadrature::gauss<double, 30>::integrate(
        [&](double t) { return (1.0 - t) * h.d2phi(rho_b + t * tau); }, 0.0, 1.0);
    return tau * tau * integral;
  }
  return h.phi(rho_b + tau) - h.phi(rho_b) - h.dphi(rho_b) * tau;
}

PsiStar psi_star(double rho_b, double y, const Enthalpy& h) {
  PsiStar out;
  const double g = h.dphi(rho_b);
  if (y <= -g) {
    // minimiser sits at the vacuum endpoint tau = -rho_b
    out.value = (h.law().pressure(rho_b) - h.law().pressure(0.0)) + y * rho_b;
    out.d1 = rho_b;
    out.d2 = 0.0;
    return out;
  }
  if (y == 0.0) {
    out.d2 = -h.inv_d2phi(rho_b);
    return out;
  }
  const double rho1 = h.inverse_dphi(y + g);
  const double z = rho1 - rho_b;
  out.value = psi(rho_b, z, h) - y * z;
  out.d1 = -z;
  out.d2 = -h.inv_d2phi(rho1);
  return out;
}

double fenchel_check(double rho_b, int n, const Enthalpy& h, std::uint64_t seed) {
  if (n < 1) throw ConfigError("fenchel_check: need at least one sample");
  std::mt19937_64 rng(seed);
  const double a = h.dphi(rho_b);
  std::uniform_real_distribution<double> tau_dist(-rho_b, 3.0 * rho_b + 1.0);
  std::uniform_real_distribution<double> y_dist(-2.0 * a - 1.0, 2.0 * a + 1.0);
  double worst = 0.0;  // sample (0, 0)
  for (int i = 1; i < n; ++i) {
    const double tau = tau_dist(rng);
    const double y = y_dist(rng);
    const double v = psi_star(rho_b, y, h).value + y * tau - psi(rho_b, tau, h);
    worst = std::max(worst, v);
  }
  return worst;
}

}  // namespace starstab::eos
