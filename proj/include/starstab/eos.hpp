#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <boost/math/interpolators/cubic_hermite.hpp>

namespace starstab::eos {

/// Asymptotic data of a barotropic pressure law.
///
/// `K0`, `K1` are the limits of s^{1-gamma0} P'(s) as s -> 0 and
/// s^{1-gamma1} P'(s) as s -> infinity. The crossover densities and the
/// decay exponent of the high-density remainder are informational.
struct LawInfo {
  std::string label;
  double gamma0 = 0.0;
  double gamma1 = 0.0;
  double K0 = 0.0;
  double K1 = 0.0;
  std::optional<double> rho_low;   // below: P ~ kappa0 rho^gamma0 (1 + P0)
  std::optional<double> rho_high;  // above: P ~ kappa1 rho^gamma1 (1 + P1)
  std::optional<double> theta0;
  std::optional<double> decay;     // exponent of the P1 remainder
  bool c1_compliant = false;       // rho P'' + 2 P' > 0 is asserted
};

/// Barotropic pressure law P(rho) on (0, inf).
class PressureLaw {
 public:
  virtual ~PressureLaw() = default;

  virtual double pressure(double rho) const = 0;
  virtual double dpressure(double rho) const = 0;
  virtual double d2pressure(double rho) const = 0;

  /// Laws with an analytic enthalpy override these three.
  virtual bool has_closed_form_enthalpy() const { return false; }
  virtual double closed_dphi(double rho) const;
  virtual double closed_inverse_dphi(double y) const;

  const LawInfo& info() const { return info_; }

 protected:
  explicit PressureLaw(LawInfo info) : info_(std::move(info)) {}

 private:
  LawInfo info_;
};

using LawPtr = std::shared_ptr<const PressureLaw>;

/// P = K rho^gamma. Rejects gamma outside the open interval (6/5, 2) unless
/// `allow_out_of_range` is set (used for the closed-form gamma = 2 oracle).
LawPtr make_polytrope(double K, double gamma, bool allow_out_of_range = false);

/// Chandrasekhar white-dwarf law P = A f(x), rho = B x^3.
LawPtr make_white_dwarf(double A = 1.0, double B = 1.0);

/// Law interpolated from (rho, P) samples with a monotone cubic in log-log
/// coordinates and power-law tails.
LawPtr make_table_law(std::vector<double> rho, std::vector<double> p, std::string label = "custom_table");

/// Reads `rho,P` columns from a CSV file (header and '#' lines skipped).
LawPtr load_table_law(const std::string& path);

/// f(x) = x sqrt(1+x^2)(2x^2-3) + 3 asinh(x), evaluated without cancellation.
double white_dwarf_f(double x);

/// Structured description of a law, as read from run configs.
struct LawSpec {
  std::string kind = "polytrope";  // polytrope | white_dwarf | custom_table
  double K = 1.0;
  double gamma = 1.5;
  double A = 1.0;
  double B = 1.0;
  std::string table_path;
  bool allow_out_of_range = false;
};

LawPtr make_law(const LawSpec& spec);

struct ValidationOptions {
  std::vector<double> low_points{1e-6, 1e-8};
  std::vector<double> high_points{1e6, 1e8};
  double limit_rel_tol = 0.05;
  int interior_samples = 400;
};

struct ValidationReport {
  bool ok = true;
  std::vector<std::string> failures;
};

/// Sampling-based check of P' > 0, the two asymptotic limits and (C1).
ValidationReport validate(const PressureLaw& law, const ValidationOptions& opts = {});

/// Grid for tabulating Phi' when no closed form exists.
struct TabulationSpec {
  double decades_below = 12.0;
  double decades_above = 6.0;
  int points_per_decade = 200;
};

enum class EnthalpyKind { closed_form, tabulated };

/// Enthalpy Phi with Phi(0) = Phi'(0) = 0 and Phi'' = P'/rho.
class Enthalpy {
 public:
  double phi(double rho) const;
  double dphi(double rho) const;
  double d2phi(double rho) const;
  /// 1/Phi''(rho) = rho/P'(rho), with its limit at rho = 0.
  double inv_d2phi(double rho) const;
  /// (Phi')^{-1} extended by zero to y <= 0.
  double inverse_dphi(double y) const;

  EnthalpyKind kind() const { return kind_; }
  const PressureLaw& law() const { return *law_; }
  const LawPtr& law_ptr() const { return law_; }
  /// Table bounds in rho (meaningful for tabulated enthalpies only).
  double table_min() const { return rho_min_; }
  double table_max() const { return rho_max_; }

 private:
  friend Enthalpy build_enthalpy(LawPtr law, const TabulationSpec& tab);
  using Table = boost::math::interpolators::cardinal_cubic_hermite<std::vector<double>>;

  double table_dphi(double rho) const;
  double table_inverse(double y) const;

  LawPtr law_;
  EnthalpyKind kind_ = EnthalpyKind::closed_form;
  double p0_ = 0.0;
  double rho_min_ = 0.0;
  double rho_max_ = 0.0;
  double log_rho_min_ = 0.0;
  double dlog_ = 0.0;
  std::vector<double> log_dphi_;  // copy of the tabulated values for bracketing
  std::shared_ptr<const Table> table_;
};

/// Closed form when the law declares one, otherwise log-spaced tabulation by
/// adaptive quadrature of P'(s)/s.
Enthalpy build_enthalpy(LawPtr law, const TabulationSpec& tab = {});

/// Psi_b(tau) = Phi(tau + b) - Phi(b) - Phi'(b) tau for tau >= -b.
double psi(double rho_b, double tau, const Enthalpy& h);

struct PsiStar {
  double value = 0.0;
  double d1 = 0.0;
  double d2 = 0.0;
};

/// Psi*_b(y) = inf_{tau >= -b} (Psi_b(tau) - y tau) with its first two derivatives.
PsiStar psi_star(double rho_b, double y, const Enthalpy& h);

/// max over n sampled (tau, y) of Psi*(y) + y tau - Psi(tau); the first sample
/// is (0, 0), so the result is never negative.
double fenchel_check(double rho_b, int n, const Enthalpy& h, std::uint64_t seed = 1);

}  // namespace starstab::eos
