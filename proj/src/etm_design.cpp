#include "petc/etm_design.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace petc {

namespace {

constexpr double kBisectionTol = 1e-9;
constexpr std::size_t kMaxScanSteps = 200'000'000;

double rk4_step(const EtmParams& p, int l, double phi, double h) {
  const double k1 = phi_derivative(l, phi, p);
  const double k2 = phi_derivative(l, phi + 0.5 * h * k1, p);
  const double k3 = phi_derivative(l, phi + 0.5 * h * k2, p);
  const double k4 = phi_derivative(l, phi + h * k3, p);
  return phi + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

double phi_init(const EtmParams& p, int l) { return l == 0 ? p.phi0_init : p.phi1_init; }

// Largest x in [a, b] with g(x) >= 0, given g(a) >= 0 > g(b).
template <typename G>
double bisect_lower(G&& g, double a, double b) {
  while (b - a > kBisectionTol) {
    const double mid = 0.5 * (a + b);
    if (g(mid) >= 0.0) {
      a = mid;
    } else {
      b = mid;
    }
  }
  return a;
}

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(6);
  os << v;
  return os.str();
}

// Scan both trajectories with the same RK4 recursion used by integrate_phi
// and return the grid horizons each table has to cover.
struct Horizons {
  double phi0;
  double phi1;
};

Horizons scan_horizons(const EtmParams& p, double step) {
  const double g0 = p.gamma_tilde(0);
  const double g1 = p.gamma_tilde(1);
  const double threshold = p.lambda * p.lambda * g1 * p.phi1_init;

  double phi0 = p.phi0_init;
  double phi1 = p.phi1_init;
  std::optional<std::size_t> k_max;
  std::optional<std::size_t> k_mad;
  for (std::size_t k = 0; k < kMaxScanSteps; ++k) {
    if (!k_max && g0 * phi0 < threshold) k_max = k;
    if (!k_mad && g1 * phi1 < g0 * phi0) k_mad = k;
    if (k_max && k_mad) break;
    phi0 = rk4_step(p, 0, phi0, step);
    if (!k_mad) phi1 = rk4_step(p, 1, phi1, step);
    if (!std::isfinite(phi0) || (!k_mad && !std::isfinite(phi1))) {
      throw DesignError("phi became non-finite while scanning for the timing constants");
    }
  }
  if (!k_max) throw DesignError("phi0 never reaches the tau_max threshold");
  const double h0 = static_cast<double>(*k_max) * step + p.tau_masp + step;
  double h1 = k_mad ? static_cast<double>(*k_mad) * step + step : h0;
  h1 = std::min(h1, h0);
  return {h0, h1};
}

}  // namespace

double EtmParams::gamma_tilde(int l) const { return std::pow(lambda, -l) * gamma; }

double EtmParams::lip_tilde(int l) const {
  return std::pow(lambda, -l) * std::sqrt(static_cast<double>(n_out)) * lip;
}

void EtmParams::validate() const {
  if (!(lambda > 0.0 && lambda < 1.0)) throw DesignError("lambda must lie in (0,1), got " + fmt(lambda));
  if (!(eps > 0.0 && eps <= 1.0)) throw DesignError("eps must lie in (0,1], got " + fmt(eps));
  if (!(gamma > 0.0)) throw DesignError("gamma must be positive");
  if (!(mu > 0.0)) throw DesignError("mu must be positive");
  if (!(lip >= 0.0)) throw DesignError("lip must be non-negative");
  if (n_out < 1) throw DesignError("an agent needs at least one out-neighbour");
  if (!(d_min > 0.0 && d_min <= tau_masp)) {
    throw DesignError("sampling bounds must satisfy 0 < d_min <= tau_masp");
  }
  if (!(phi0_init > 0.0 && phi1_init > 0.0)) throw DesignError("phi initial values must be positive");
}

bool EtmParams::initial_ordering_holds() const noexcept {
  const double a = gamma_tilde(1) * phi1_init;
  const double b = gamma_tilde(0) * phi0_init;
  const double c = lambda * lambda * gamma_tilde(1) * phi1_init;
  return a >= b && b > c && c > 0.0;
}

void EtmParams::check_initial_ordering() const {
  if (!initial_ordering_holds()) {
    throw DesignError(
        "phi initial conditions violate gamma~(1)phi1(0) >= gamma~(0)phi0(0) > "
        "lambda^2 gamma~(1)phi1(0) > 0 (phi0(0)=" +
        fmt(phi0_init) + ", phi1(0)=" + fmt(phi1_init) + ", lambda=" + fmt(lambda) + ")");
  }
}

double phi_derivative(int l, double phi, const EtmParams& p) {
  return -(2.0 * p.lip_tilde(l) * phi + p.gamma_tilde(l) * (phi * phi / (p.mu * p.eps) + 1.0));
}

PhiTrajectory::PhiTrajectory(double step, std::vector<double> values, std::vector<double> slopes)
    : step_(step), values_(std::move(values)), slopes_(std::move(slopes)) {
  if (!(step_ > 0.0)) throw DesignError("phi table step must be positive");
  if (values_.empty() || values_.size() != slopes_.size()) {
    throw DesignError("phi table needs matching, non-empty value and slope arrays");
  }
}

double PhiTrajectory::horizon() const {
  return values_.empty() ? 0.0 : static_cast<double>(values_.size() - 1) * step_;
}

double PhiTrajectory::operator()(double tau) const {
  const double hz = horizon();
  if (!(tau >= -1e-12 && tau <= hz + 1e-12)) {
    throw DesignError("phi lookup at tau=" + fmt(tau) + " outside table horizon " + fmt(hz));
  }
  if (values_.size() == 1) return values_.front();
  tau = std::clamp(tau, 0.0, hz);
  auto k = static_cast<std::size_t>(tau / step_);
  if (k >= values_.size() - 1) k = values_.size() - 2;
  const double s = (tau - static_cast<double>(k) * step_) / step_;
  const double s2 = s * s;
  const double s3 = s2 * s;
  const double h00 = 2 * s3 - 3 * s2 + 1;
  const double h10 = s3 - 2 * s2 + s;
  const double h01 = -2 * s3 + 3 * s2;
  const double h11 = s3 - s2;
  return h00 * values_[k] + h10 * step_ * slopes_[k] + h01 * values_[k + 1] +
         h11 * step_ * slopes_[k + 1];
}

PhiTrajectory integrate_phi(const EtmParams& p, int l, double horizon, double step) {
  if (l != 0 && l != 1) throw DesignError("phi index must be 0 or 1");
  if (!(step > 0.0) || !(horizon > 0.0)) throw DesignError("integrate_phi needs positive step and horizon");
  const auto n = static_cast<std::size_t>(std::ceil(horizon / step - 1e-9));
  std::vector<double> values(n + 1);
  std::vector<double> slopes(n + 1);
  double phi = phi_init(p, l);
  for (std::size_t k = 0; k <= n; ++k) {
    if (!std::isfinite(phi)) {
      throw DesignError("phi_" + std::to_string(l) + " became non-finite at tau=" +
                        fmt(static_cast<double>(k) * step) + "; reduce the step or horizon");
    }
    values[k] = phi;
    slopes[k] = phi_derivative(l, phi, p);
    if (k < n) phi = rk4_step(p, l, phi, step);
  }
  return PhiTrajectory(step, std::move(values), std::move(slopes));
}

double compute_tau_max(const EtmParams& p, const PhiTable& phi) {
  const double g0 = p.gamma_tilde(0);
  const double threshold = p.lambda * p.lambda * p.gamma_tilde(1) * phi.phi1.values().front();
  const auto& v = phi.phi0.values();
  const double slack = 1e-12 * std::abs(threshold);
  auto g = [&](double tau) { return g0 * phi.phi0(tau) - threshold + slack; };
  if (g0 * v.front() - threshold + slack < 0.0) {
    throw DesignError("tau_max inequality already violated at tau=0");
  }
  const double h = phi.phi0.step();
  for (std::size_t k = 1; k < v.size(); ++k) {
    if (g0 * v[k] - threshold + slack < 0.0) {
      return bisect_lower(g, static_cast<double>(k - 1) * h, static_cast<double>(k) * h);
    }
  }
  return phi.phi0.horizon();
}

double compute_tau_mad(const EtmParams& p, const PhiTable& phi) {
  const double g0 = p.gamma_tilde(0);
  const double g1 = p.gamma_tilde(1);
  if (phi.phi0.step() != phi.phi1.step()) throw DesignError("phi tables must share a grid");
  const auto& v0 = phi.phi0.values();
  const auto& v1 = phi.phi1.values();
  auto g = [&](double tau) { return g1 * phi.phi1(tau) - g0 * phi.phi0(tau); };
  if (g1 * v1.front() - g0 * v0.front() < 0.0) {
    throw DesignError("tau_MAD inequality already violated at tau=0");
  }
  const std::size_t n = std::min(v0.size(), v1.size());
  const double h = phi.phi0.step();
  for (std::size_t k = 1; k < n; ++k) {
    if (g1 * v1[k] - g0 * v0[k] < 0.0) {
      return bisect_lower(g, static_cast<double>(k - 1) * h, static_cast<double>(k) * h);
    }
  }
  return static_cast<double>(n - 1) * h;
}

namespace {

PhiTable tabulate(const EtmParams& p, double step) {
  const Horizons hz = scan_horizons(p, step);
  return PhiTable{integrate_phi(p, 0, hz.phi0, step), integrate_phi(p, 1, hz.phi1, step)};
}

}  // namespace

AgentDesign design_agent(const EtmParams& p, const DesignOptions& opts) {
  p.validate();
  p.check_initial_ordering();
  if (!(opts.step > 0.0)) throw DesignError("design step must be positive");

  AgentDesign d{p, tabulate(p, opts.step), {}};
  TimingConstants& t = d.timing;
  t.tau_max_bound = compute_tau_max(p, d.phi);
  t.tau_mad = compute_tau_mad(p, d.phi);

  if (opts.tau_miet) {
    t.tau_miet = *opts.tau_miet;
    if (!(t.tau_miet > 0.0)) throw DesignError("tau_MIET must be positive");
    if (t.tau_miet + p.tau_masp > t.tau_max_bound + 1e-12) {
      throw DesignError("selected tau_MIET=" + fmt(t.tau_miet) + " exceeds tau_max - tau_MASP = " +
                        fmt(t.tau_max_bound - p.tau_masp));
    }
  } else {
    t.tau_miet = t.tau_max_bound - p.tau_masp;
  }
  t.tau_max = t.tau_miet + p.tau_masp;
  if (t.tau_miet < t.tau_mad) {
    throw DesignError("timing infeasible: tau_MIET=" + fmt(t.tau_miet) + " < tau_MAD=" +
                      fmt(t.tau_mad) + " (tau_max bound " + fmt(t.tau_max_bound) +
                      ", tau_MASP " + fmt(p.tau_masp) + ")");
  }
  return d;
}

namespace {

// phi_l(tau) by RK4 at `step`, with a final partial step landing on tau.
double rk4_value_at(const EtmParams& p, int l, double tau, double step) {
  double phi = phi_init(p, l);
  const auto n = static_cast<std::size_t>(std::floor(tau / step));
  for (std::size_t k = 0; k < n; ++k) phi = rk4_step(p, l, phi, step);
  const double rest = tau - static_cast<double>(n) * step;
  if (rest > 0.0) phi = rk4_step(p, l, phi, rest);
  return phi;
}

}  // namespace

TimingCertificate certify_timing(const AgentDesign& d, int refine) {
  const EtmParams& p = d.params;
  const TimingConstants& t = d.timing;
  const double fine = d.phi.step() / std::max(refine, 1);
  const double g0 = p.gamma_tilde(0);
  const double g1 = p.gamma_tilde(1);
  // Integration error of the reference run is ~1e-12; a margin below this
  // is indistinguishable from zero.
  constexpr double kNumericalZero = 1e-10;

  TimingCertificate r;
  r.ordering_ok = p.initial_ordering_holds();

  const double threshold = p.lambda * p.lambda * g1 * p.phi1_init;
  r.tau_max_margin = g0 * rk4_value_at(p, 0, t.tau_max, fine) - threshold;
  r.tau_max_ok = r.tau_max_margin >= -kNumericalZero &&
                 g0 * rk4_value_at(p, 0, t.tau_max_bound, fine) - threshold >= -kNumericalZero;

  double phi0 = p.phi0_init;
  double phi1 = p.phi1_init;
  double worst = g1 * phi1 - g0 * phi0;
  const auto n = static_cast<std::size_t>(std::floor(t.tau_mad / fine));
  for (std::size_t k = 0; k < n; ++k) {
    phi0 = rk4_step(p, 0, phi0, fine);
    phi1 = rk4_step(p, 1, phi1, fine);
    worst = std::min(worst, g1 * phi1 - g0 * phi0);
  }
  const double rest = t.tau_mad - static_cast<double>(n) * fine;
  if (rest > 0.0) {
    worst = std::min(worst, g1 * rk4_step(p, 1, phi1, rest) - g0 * rk4_step(p, 0, phi0, rest));
  }
  r.tau_mad_margin = worst;
  r.tau_mad_ok = worst >= -kNumericalZero;
  r.spacing_ok = t.tau_max + 1e-12 >= t.tau_mad + p.tau_masp && t.tau_miet >= t.tau_mad &&
                 t.tau_max <= t.tau_max_bound + 1e-12;
  return r;
}

TradeoffCurve tradeoff_curve(const EtmParams& p, std::span<const double> lambdas, double step) {
  std::vector<double> grid(lambdas.begin(), lambdas.end());
  std::sort(grid.begin(), grid.end());
  TradeoffCurve out;
  for (double lam : grid) {
    EtmParams q = p;
    q.lambda = lam;
    try {
      q.validate();
      q.check_initial_ordering();
      const PhiTable table = tabulate(q, step);
      out.rows.push_back({lam, compute_tau_max(q, table), compute_tau_mad(q, table)});
    } catch (const DesignError& e) {
      out.warnings.push_back("lambda=" + fmt(lam) + " skipped: " + e.what());
    }
  }
  return out;
}

TriggerMode parse_trigger_mode(const std::string& s) {
  if (s == "online") return TriggerMode::online;
  if (s == "conservative") return TriggerMode::conservative;
  throw DesignError("unknown trigger mode '" + s + "' (expected online|conservative)");
}

std::string to_string(TriggerMode m) {
  return m == TriggerMode::online ? "online" : "conservative";
}

TriggerFunctions::TriggerFunctions(std::shared_ptr<const AgentDesign> design, TriggerMode mode,
                                   double eps_eta)
    : design_(std::move(design)), mode_(mode), eps_eta_(eps_eta) {
  if (!design_) throw DesignError("trigger functions need a design");
  if (!(eps_eta_ > 0.0)) throw DesignError("eps_eta must be positive");
  const auto& t = design_->timing;
  if (design_->phi.horizon() + 1e-12 < t.tau_miet + design_->params.tau_masp) {
    throw DesignError("phi table does not cover tau_MIET + tau_MASP");
  }
}

double TriggerFunctions::eps_rho(double sigma) const {
  const auto& p = design_->params;
  const auto& t = design_->timing;
  const double at = mode_ == TriggerMode::online ? t.tau_miet + sigma : t.tau_max;
  const double v = p.gamma_tilde(0) * design_->phi.phi0(at) -
                   p.gamma_tilde(1) * design_->phi.phi1.values().front() * p.lambda * p.lambda;
  if (v < -1e-12) {
    throw DesignError("eps_rho=" + fmt(v) + " < 0: timing constants inconsistent with phi table");
  }
  return std::max(v, 0.0);
}

double TriggerFunctions::eps_nu(double sigma) const {
  const auto& t = design_->timing;
  const auto& phi0 = design_->phi.phi0;
  const double at = mode_ == TriggerMode::online ? t.tau_miet + sigma : t.tau_max;
  const double v = -(phi0(t.tau_miet) - phi0(at));
  if (v > 1e-12) throw DesignError("eps_nu=" + fmt(v) + " > 0: phi0 not decreasing");
  return std::min(v, 0.0);
}

double TriggerFunctions::omega(double tau) const {
  return tau <= design_->timing.tau_miet ? 1.0 : 0.0;
}

double TriggerFunctions::rho(double e_out_sq, double sigma) const {
  return eps_rho(sigma) * e_out_sq;
}

double TriggerFunctions::nu(double e_out_sq, double tau, double sigma) const {
  if (omega(tau) == 1.0 || e_out_sq == 0.0) return 0.0;
  return design_->params.gamma_tilde(0) * eps_nu(sigma) * e_out_sq;
}

double out_error_sq(const Eigen::VectorXd& y, std::span<const Eigen::VectorXd> yhat_out) {
  double s = 0.0;
  for (const auto& yh : yhat_out) s += (yh - y).squaredNorm();
  return s;
}

RhoFunction make_rho(std::shared_ptr<const TriggerFunctions> tf) {
  return [tf](const Eigen::VectorXd& y, std::span<const Eigen::VectorXd> yhat_out, double sigma) {
    return tf->rho(out_error_sq(y, yhat_out), sigma);
  };
}

NuFunction make_nu(std::shared_ptr<const TriggerFunctions> tf) {
  return [tf](const Eigen::VectorXd& y, std::span<const Eigen::VectorXd> yhat_out, double tau,
              double sigma) { return tf->nu(out_error_sq(y, yhat_out), tau, sigma); };
}

PsiFunction make_psi(PsiFunction varsigma, PsiFunction h_lower, const EtmParams& p) {
  const double weight = (1.0 - p.eps) * p.mu * static_cast<double>(p.n_out);
  return [varsigma = std::move(varsigma), h_lower = std::move(h_lower),
          weight](const Eigen::VectorXd& yhat) {
    const double hl = h_lower(yhat);
    return varsigma(yhat) + weight * hl * hl;
  };
}

double eta_exact_step(double eta, double psi_val, double eps_eta, double dt) {
  if (dt == 0.0) return eta;
  if (eps_eta == 0.0) return eta + psi_val * dt;
  const double a = -eps_eta * dt;
  return std::exp(a) * eta - std::expm1(a) / eps_eta * psi_val;
}

}  // namespace petc
