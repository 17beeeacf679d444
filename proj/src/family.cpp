#include "starstab/family.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <optional>
#include <sstream>
#include <thread>

#include "json.hpp"
#include "starstab/errors.hpp"
#include "starstab/io.hpp"

namespace starstab::family {

namespace {

struct Solved {
  double M = 0.0, R = 0.0;
  std::optional<std::string> error;
};

std::vector<Solved> solve_all(const eos::Enthalpy& h, const std::vector<double>& mus, const star::SolverOptions& so,
                              int threads) {
  std::vector<Solved> out(mus.size());
  auto work = [&](std::size_t lo, std::size_t hi) {
    for (std::size_t i = lo; i < hi; ++i) {
      try {
        const auto p = star::solve_star(h, mus[i], so);
        out[i].M = p.M;
        out[i].R = p.R;
      } catch (const NumericalFailure& e) {
        out[i].error = e.what();
      }
    }
  };
  const std::size_t nt = std::max<std::size_t>(
      1, std::min<std::size_t>(mus.size(), threads > 0 ? threads : std::thread::hardware_concurrency()));
  if (nt == 1) {
    work(0, mus.size());
    return out;
  }
  std::vector<std::future<void>> jobs;
  const std::size_t chunk = (mus.size() + nt - 1) / nt;
  for (std::size_t lo = 0; lo < mus.size(); lo += chunk)
    jobs.push_back(std::async(std::launch::async, work, lo, std::min(mus.size(), lo + chunk)));
  for (auto& j : jobs) j.get();
  return out;
}

int sgn(double x) { return (x > 0.0) - (x < 0.0); }

// d/dx at index k from the 5 nearest samples
double fd(const std::vector<double>& mu, const std::vector<double>& f, std::size_t k) {
  const std::size_t n = mu.size();
  const int w = static_cast<int>(std::min<std::size_t>(5, n));
  const std::size_t s =
      std::clamp<std::ptrdiff_t>(static_cast<std::ptrdiff_t>(k) - w / 2, 0, static_cast<std::ptrdiff_t>(n) - w);
  const auto c = star::fd_weights(&mu[s], w, mu[k]);
  double d = 0.0;
  for (int i = 0; i < w; ++i) d += c[i] * f[s + i];
  return d;
}

// dM/dmu at an arbitrary mu from four nearby solves
double dM_at(const eos::Enthalpy& h, double mu, const star::SolverOptions& so) {
  const double d = 1e-3;
  double m[4];
  const double off[4] = {-2, -1, 1, 2};
  for (int i = 0; i < 4; ++i) m[i] = star::solve_star(h, mu * std::exp(off[i] * d), so).M;
  const double dlog = (m[0] - 8.0 * m[1] + 8.0 * m[2] - m[3]) / (12.0 * d);
  return dlog / mu;
}

void assemble(FamilyCurve& c, const std::vector<double>& mus, const std::vector<Solved>& res) {
  c.mu.clear();
  c.M.clear();
  c.R.clear();
  for (std::size_t i = 0; i < mus.size(); ++i) {
    if (res[i].error) {
      c.truncated = true;
      c.truncation_reason = "solve failed at mu = " + io::fmt_double(mus[i]) + ": " + *res[i].error;
      break;
    }
    c.mu.push_back(mus[i]);
    c.M.push_back(res[i].M);
    c.R.push_back(res[i].R);
  }
}

}  // namespace

void detect_events(FamilyCurve& c, double zero_rel, double degenerate_tol) {
  const std::size_t n = c.size();
  c.events.clear();
  double mx = 0.0;
  c.degenerate = n > 0;
  for (std::size_t k = 0; k < n; ++k) {
    mx = std::max(mx, std::abs(c.dM[k]));
    if (std::abs(c.dM[k]) * c.mu[k] / c.M[k] > degenerate_tol) c.degenerate = false;
  }
  c.dM_threshold = zero_rel * mx;
  if (c.degenerate) return;
  std::optional<std::size_t> last;
  for (std::size_t k = 0; k < n; ++k) {
    if (!(std::abs(c.dM[k]) > c.dM_threshold)) continue;
    if (last && sgn(c.dM[k]) != sgn(c.dM[*last])) {
      const std::size_t j = *last;
      ExtremumEvent e;
      e.index = j;
      e.kind = c.dM[j] > 0.0 ? "max" : "min";
      // linear zero of dM/dmu between the two samples
      e.mu = c.mu[j] + (c.mu[k] - c.mu[j]) * c.dM[j] / (c.dM[j] - c.dM[k]);
      const int before = sgn(c.dM[j] * c.dR[j]), after = sgn(c.dM[k] * c.dR[k]);
      e.bend = (before < 0 && after > 0) ? 1 : (before > 0 && after < 0) ? -1 : 0;
      c.events.push_back(e);
    }
    last = k;
  }
}

void compute_derivatives(FamilyCurve& c, double zero_rel, double degenerate_tol) {
  const std::size_t n = c.size();
  if (n < 2) throw ConfigError("compute_derivatives: need at least two samples");
  for (std::size_t k = 1; k < n; ++k)
    if (!(c.mu[k] > c.mu[k - 1])) throw ConfigError("compute_derivatives: mu samples must be strictly increasing");
  // Differentiate in log-log variables, where power-law families are exactly linear.
  std::vector<double> lmu(n), lm(n), lr(n), lmr(n);
  for (std::size_t k = 0; k < n; ++k) {
    if (!(c.M[k] > 0.0) || !(c.R[k] > 0.0)) throw ConfigError("compute_derivatives: M and R must be positive");
    lmu[k] = std::log(c.mu[k]);
    lm[k] = std::log(c.M[k]);
    lr[k] = std::log(c.R[k]);
    lmr[k] = lm[k] - lr[k];
  }
  c.dM.resize(n);
  c.dR.resize(n);
  c.dMR.resize(n);
  for (std::size_t k = 0; k < n; ++k) {
    c.dM[k] = fd(lmu, lm, k) * c.M[k] / c.mu[k];
    c.dR[k] = fd(lmu, lr, k) * c.R[k] / c.mu[k];
    c.dMR[k] = fd(lmu, lmr, k) * c.M[k] / (c.R[k] * c.mu[k]);
  }
  detect_events(c, zero_rel, degenerate_tol);
}

FamilyCurve sweep(const eos::Enthalpy& h, const SweepOptions& opts) {
  if (!(opts.mu_min > 0.0) || !(opts.mu_max > opts.mu_min)) throw ConfigError("sweep: need 0 < mu_min < mu_max");
  if (opts.samples < 5) throw ConfigError("sweep: need at least 5 samples");
  FamilyCurve c;
  c.law_label = h.law().info().label;
  std::vector<double> mus(opts.samples);
  const double a = std::log(opts.mu_min), b = std::log(opts.mu_max);
  for (int i = 0; i < opts.samples; ++i) mus[i] = std::exp(a + (b - a) * i / (opts.samples - 1));
  mus.back() = opts.mu_max;
  assemble(c, mus, solve_all(h, mus, opts.solver, opts.threads));
  if (c.size() < 5) throw NumericalFailure("sweep: fewer than 5 solvable samples; " + c.truncation_reason);
  compute_derivatives(c, opts.zero_rel, opts.degenerate_tol);

  for (int pass = 0; pass < opts.refine_passes && !c.events.empty(); ++pass) {
    std::vector<double> extra;
    for (const auto& e : c.events) {
      const std::size_t lo = e.index > 0 ? e.index - 1 : 0;
      const std::size_t hi = std::min(c.size() - 1, e.index + 3);
      for (std::size_t k = lo; k < hi; ++k) extra.push_back(std::sqrt(c.mu[k] * c.mu[k + 1]));
    }
    std::sort(extra.begin(), extra.end());
    extra.erase(std::unique(extra.begin(), extra.end()), extra.end());
    const auto res = solve_all(h, extra, opts.solver, opts.threads);
    std::vector<std::pair<double, Solved>> merged;
    for (std::size_t k = 0; k < c.size(); ++k) merged.push_back({c.mu[k], Solved{c.M[k], c.R[k], std::nullopt}});
    for (std::size_t k = 0; k < extra.size(); ++k)
      if (!res[k].error) merged.push_back({extra[k], res[k]});
    std::sort(merged.begin(), merged.end(), [](const auto& x, const auto& y) { return x.first < y.first; });
    c.mu.clear();
    c.M.clear();
    c.R.clear();
    for (const auto& [m, s] : merged) {
      c.mu.push_back(m);
      c.M.push_back(s.M);
      c.R.push_back(s.R);
    }
    compute_derivatives(c, opts.zero_rel, opts.degenerate_tol);
  }

  // bisection on dM/dmu for each event
  for (auto& e : c.events) {
    double lo = c.mu[e.index], hi = c.mu[std::min(c.size() - 1, e.index + 1)];
    for (std::size_t k = e.index + 1; k < c.size(); ++k)
      if (std::abs(c.dM[k]) > c.dM_threshold) {
        hi = c.mu[k];
        break;
      }
    try {
      double flo = dM_at(h, lo, opts.solver);
      for (int it = 0; it < 60 && hi - lo > 1e-10 * hi; ++it) {
        const double mid = std::sqrt(lo * hi);
        const double fm = dM_at(h, mid, opts.solver);
        if (sgn(fm) == sgn(flo)) {
          lo = mid;
          flo = fm;
        } else {
          hi = mid;
        }
      }
      e.mu = std::sqrt(lo * hi);
    } catch (const NumericalFailure& err) {
      c.warnings.push_back(std::string("extremum bisection failed, keeping the linear estimate: ") + err.what());
    }
  }
  return c;
}

void classify(FamilyCurve& c, double gamma0) {
  if (std::abs(gamma0 - 4.0 / 3.0) < 1e-12)
    throw ConfigError("classify: gamma0 = 4/3 has no defined seed for n^u (mass is independent of mu)");
  if (!(gamma0 > 1.2 && gamma0 < 2.0)) throw ConfigError("classify: gamma0 must lie in (6/5, 2)");
  if (c.degenerate)
    throw ConfigError("classify: dM/dmu is negligible at every sample (degenerate mass extremum everywhere)");
  if (c.dM.size() != c.size()) throw ConfigError("classify: curve has no derivatives");
  for (std::size_t i = 1; i < c.events.size(); ++i)
    if (c.events[i].index <= c.events[i - 1].index + 1)
      throw NumericalFailure(
          "classify: dM/dmu changes sign in adjacent intervals near mu = " + io::fmt_double(c.events[i].mu) +
          "; the derivative is noise-dominated there, refine the mu grid (more samples or refine passes)");
  int n = gamma0 < 4.0 / 3.0 ? 1 : 0;
  c.nu.assign(c.size(), 0);
  std::size_t next = 0;
  for (std::size_t k = 0; k < c.size(); ++k) {
    while (next < c.events.size() && c.events[next].mu <= c.mu[k]) {
      const auto& e = c.events[next++];
      if (e.bend == 0) {
        c.warnings.push_back("mass extremum at mu = " + io::fmt_double(e.mu) +
                             " with undetermined bend direction; n^u left unchanged");
      } else if (n + e.bend < 0) {
        c.warnings.push_back("decrement of n^u below 0 at mu = " + io::fmt_double(e.mu) +
                             " clamped (likely a misdetected extremum)");
        n = 0;
      } else {
        n += e.bend;
      }
    }
    c.nu[k] = n;
  }
}

IMu i_mu(const FamilyCurve& c, std::size_t k, double zero_tol) {
  if (k >= c.size() || c.dM.size() != c.size()) throw ConfigError("i_mu: index out of range or no derivatives");
  const double mu = c.mu[k];
  const bool mzero = std::abs(c.dM[k]) * mu / c.M[k] <= zero_tol;
  if (mzero) return IMu::one;
  const double mr = c.M[k] / c.R[k];
  if (std::abs(c.dMR[k]) * mu / mr <= zero_tol) return IMu::indeterminate;
  return c.dM[k] * c.dMR[k] > 0.0 ? IMu::one : IMu::zero;
}

std::string events_json(const FamilyCurve& c) {
  nlohmann::ordered_json j;
  j["format"] = "starstab-v1 family-events";
  j["law"] = c.law_label;
  j["samples"] = c.size();
  j["dM_threshold"] = c.dM_threshold;
  j["degenerate"] = c.degenerate;
  j["truncated"] = c.truncated;
  if (c.truncated) j["truncation_reason"] = c.truncation_reason;
  j["events"] = nlohmann::ordered_json::array();
  for (const auto& e : c.events)
    j["events"].push_back({{"index", e.index}, {"mu", e.mu}, {"kind", e.kind}, {"bend", e.bend}});
  j["warnings"] = c.warnings;
  return j.dump(2) + "\n";
}

void write_curve(const FamilyCurve& c, const std::string& csv_path, const std::string& json_path) {
  io::Table t;
  t.kind = "family";
  t.names = {"mu", "M", "R", "dM_dmu", "dR_dmu", "dMR_dmu", "n_u"};
  std::vector<double> nu(c.size(), -1.0);
  for (std::size_t k = 0; k < c.nu.size(); ++k) nu[k] = c.nu[k];
  t.columns = {c.mu, c.M, c.R, c.dM, c.dR, c.dMR, nu};
  io::write_csv(csv_path, t);
  if (!json_path.empty()) io::write_text(json_path, events_json(c));
}

FamilyCurve read_curve(const std::string& csv_path) {
  const auto t = io::read_csv(csv_path, "family");
  FamilyCurve c;
  c.mu = t.column("mu");
  c.M = t.column("M");
  c.R = t.column("R");
  c.dM = t.column("dM_dmu");
  c.dR = t.column("dR_dmu");
  c.dMR = t.column("dMR_dmu");
  const auto& nu = t.column("n_u");
  if (std::all_of(nu.begin(), nu.end(), [](double x) { return x >= 0.0; }))
    for (double x : nu) c.nu.push_back(static_cast<int>(x));
  detect_events(c);
  return c;
}

}  // namespace starstab::family
