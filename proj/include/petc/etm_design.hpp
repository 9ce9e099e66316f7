// Timing-constant design for the dynamic periodic event-triggering mechanism.
//
// Each agent carries two scalar trajectories phi_0 and phi_1 that solve a
// Riccati-type ODE in the local transmission clock tau. Their crossings give
// the largest admissible tau_max (and hence the minimum inter-event time) and
// the maximum allowable delay tau_MAD. The same tables parameterise the
// trigger functions rho and nu that update the dynamic variable eta at
// sampling instants.
#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace petc {

class DesignError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Per-agent tuning and gain constants.
struct EtmParams {
  double gamma = 1.0;  ///< L2 gain from |e_out| to H.
  double lip = 0.0;    ///< L_i, growth of the output derivative in |e_i^i|.
  double mu = 1.0;
  double eps = 1.0;     ///< in (0, 1]
  double lambda = 0.5;  ///< in (0, 1)
  std::size_t n_out = 1;
  double phi0_init = 1.0;
  double phi1_init = 1.0;
  double tau_masp = 1e-2;
  double d_min = 1e-3;

  double gamma_tilde(int l) const;
  double lip_tilde(int l) const;

  /// Throws DesignError naming the first violated constraint. The
  /// phi initial-condition ordering is checked separately by
  /// `check_initial_ordering` so a tradeoff sweep can skip bad points.
  void validate() const;
  void check_initial_ordering() const;
  bool initial_ordering_holds() const noexcept;
};

/// Right-hand side of the phi_l ODE.
double phi_derivative(int l, double phi, const EtmParams& p);

/// Uniformly sampled solution with the exact ODE slope at every node, so the
/// interpolant is a C1 cubic Hermite spline.
class PhiTrajectory {
 public:
  PhiTrajectory() = default;
  PhiTrajectory(double step, std::vector<double> values, std::vector<double> slopes);

  double step() const { return step_; }
  double horizon() const;
  std::size_t size() const { return values_.size(); }
  const std::vector<double>& values() const { return values_; }
  const std::vector<double>& slopes() const { return slopes_; }

  /// Hermite interpolation; throws DesignError outside [0, horizon].
  double operator()(double tau) const;

 private:
  double step_ = 0.0;
  std::vector<double> values_;
  std::vector<double> slopes_;
};

/// Classical RK4 on a fixed grid covering [0, horizon].
PhiTrajectory integrate_phi(const EtmParams& p, int l, double horizon, double step);

struct PhiTable {
  PhiTrajectory phi0;
  PhiTrajectory phi1;

  double step() const { return phi0.step(); }
  double horizon() const { return phi0.horizon(); }
  double phi(int l, double tau) const { return l == 0 ? phi0(tau) : phi1(tau); }
};

/// Largest tau with gamma~(0) phi0(tau) >= lambda^2 gamma~(1) phi1(0).
double compute_tau_max(const EtmParams& p, const PhiTable& phi);

/// Largest tau such that gamma~(1) phi1(s) >= gamma~(0) phi0(s) for all s <= tau.
/// Returns the common table horizon when the inequality never fails there.
double compute_tau_mad(const EtmParams& p, const PhiTable& phi);

struct TimingConstants {
  double tau_max = 0.0;        ///< selected; always tau_miet + tau_masp
  double tau_max_bound = 0.0;  ///< largest tau_max allowed by the phi0 crossing
  double tau_mad = 0.0;
  double tau_miet = 0.0;
};

struct DesignOptions {
  double step = 1e-5;
  /// Fix tau_MIET instead of using the largest admissible value.
  std::optional<double> tau_miet;
};

struct AgentDesign {
  EtmParams params;
  PhiTable phi;
  TimingConstants timing;
};

/// Full pipeline: validates params, tabulates phi over a horizon that covers
/// every later lookup, computes the timing constants and checks the
/// spacing precondition tau_max >= tau_MAD + tau_MASP.
AgentDesign design_agent(const EtmParams& p, const DesignOptions& opts = {});

/// Re-check of both phi inequalities against an independent integration at
/// `refine` times finer step.
struct TimingCertificate {
  bool ordering_ok = false;
  bool tau_max_ok = false;
  bool tau_mad_ok = false;
  bool spacing_ok = false;  ///< tau_max >= tau_mad + tau_masp and tau_miet >= tau_mad
  double tau_max_margin = 0.0;  ///< gamma~0 phi0(tau_max) - lambda^2 gamma~1 phi1(0)
  double tau_mad_margin = 0.0;  ///< min over [0, tau_mad] of gamma~1 phi1 - gamma~0 phi0
  bool ok() const { return ordering_ok && tau_max_ok && tau_mad_ok && spacing_ok; }
};
TimingCertificate certify_timing(const AgentDesign& d, int refine = 10);

struct TradeoffRow {
  double lambda;
  double tau_max;
  double tau_mad;
};

struct TradeoffCurve {
  std::vector<TradeoffRow> rows;
  std::vector<std::string> warnings;
};

TradeoffCurve tradeoff_curve(const EtmParams& p, std::span<const double> lambdas,
                             double step = 1e-5);

enum class TriggerMode { online, conservative };

TriggerMode parse_trigger_mode(const std::string& s);
std::string to_string(TriggerMode m);

/// rho, nu and the eta leakage for one agent.
class TriggerFunctions {
 public:
  TriggerFunctions(std::shared_ptr<const AgentDesign> design, TriggerMode mode,
                   double eps_eta);

  const AgentDesign& design() const { return *design_; }
  const EtmParams& params() const { return design_->params; }
  const TimingConstants& timing() const { return design_->timing; }
  TriggerMode mode() const { return mode_; }
  double eps_eta() const { return eps_eta_; }

  /// Coefficient of |e_out|^2 in rho; non-negative.
  double eps_rho(double sigma) const;
  /// Coefficient eps_nu of the nu function (the value multiplying
  /// gamma~(0) |e_out|^2); non-positive.
  double eps_nu(double sigma) const;
  /// omega(tau): 1 up to and including tau_MIET, 0 after.
  double omega(double tau) const;

  double rho(double e_out_sq, double sigma) const;
  double nu(double e_out_sq, double tau, double sigma) const;

  /// K-infinity leakage of the eta dynamics.
  double leakage(double eta) const { return eps_eta_ * eta; }

 private:
  std::shared_ptr<const AgentDesign> design_;
  TriggerMode mode_;
  double eps_eta_;
};

/// Squared norm of the out-going network errors of agent i: sum over the
/// given estimate blocks of |yhat_m - y_i|^2.
double out_error_sq(const Eigen::VectorXd& y, std::span<const Eigen::VectorXd> yhat_out);

using RhoFunction =
    std::function<double(const Eigen::VectorXd&, std::span<const Eigen::VectorXd>, double)>;
using NuFunction = std::function<double(const Eigen::VectorXd&,
                                        std::span<const Eigen::VectorXd>, double, double)>;
using PsiFunction = std::function<double(const Eigen::VectorXd&)>;

/// (y_i, yhat_out, sigma) -> rho
RhoFunction make_rho(std::shared_ptr<const TriggerFunctions> tf);
/// (y_i, yhat_out, tau, sigma) -> nu
NuFunction make_nu(std::shared_ptr<const TriggerFunctions> tf);

/// Psi(yhat) = varsigma(yhat) + (1 - eps) mu N H_lower(yhat)^2.
PsiFunction make_psi(PsiFunction varsigma, PsiFunction h_lower, const EtmParams& p);

/// Exact flow of eta' = psi - eps_eta * eta over dt with psi held constant.
double eta_exact_step(double eta, double psi_val, double eps_eta, double dt);

}  // namespace petc
