// Runtime verification of the storage-function certificate along runs, plus
// timing and performance metrics.
#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "petc/hybrid_core.hpp"
#include "petc/net_sim.hpp"

namespace petc {

/// max{|e + s|, lambda * max_{R subset of R_i} |e + sum_{l in R} Y_l s|} with
/// s_l = r - y - e_l for l in R_i and R_i the out-neighbours with ell or b set.
/// `ell`, `b` hold N flags indexed by receiver; `e_out` holds N blocks of
/// size |y|. Throws when |R_i| > 16.
double w_tilde(double lambda, std::span<const std::uint8_t> ell, std::span<const std::uint8_t> b,
               const Eigen::VectorXd& y, const Eigen::VectorXd& e_out, const Eigen::VectorXd& r,
               std::span<const std::size_t> out_neighbors);

int p_flag(std::span<const std::uint8_t> ell, std::span<const std::uint8_t> b,
           std::span<const std::size_t> out_neighbors);

/// phi_l(tau) while tau - sigma <= tau_MIET, else phi_l(tau_MIET + sigma).
double phi_bar(int l, double tau, double sigma, const AgentDesign& d);

/// Evaluates U and the flow bounds for states of one hybrid system.
class StorageEvaluator {
 public:
  explicit StorageEvaluator(const HybridSystem& sys);

  const HybridSystem& system() const { return sys_; }

  double w_tilde(const HybridState& s, std::size_t i) const;
  int p(const HybridState& s, std::size_t i) const;
  /// eta_i + gamma~(p) phi_bar_p W~^2
  double component(const HybridState& s, std::size_t i) const;
  /// U = V(x) + sum of components
  double storage(const HybridState& s) const;

  /// sum_i [-gamma~(p)^2 W~^2 + mu eps N H^2 + varsigma + (1 - eps) mu N H_lower^2
  ///        - eps_eta eta], an upper bound on d/dt (U - V).
  double etm_flow_bound(const HybridState& s, const Inputs& v = {}) const;
  /// s(x, e, v) - sum_i eps_eta eta_i
  double supply_bound(const HybridState& s, const Inputs& v = {}) const;

 private:
  const HybridSystem& sys_;
};

struct Violation {
  double t = 0.0;
  std::string what;
  std::size_t agent = kNoAgent;
  double value = 0.0;
  double limit = 0.0;
};

struct JumpCheck {
  std::size_t checked[3] = {0, 0, 0};  ///< G_a, G_b, G_c
  std::size_t violations = 0;
  double worst_rel_increase = -std::numeric_limits<double>::infinity();  ///< max dU / (1 + U)
  double gc_max_abs = 0.0;
  std::size_t gb_early = 0;  ///< G_b with tau <= tau_MIET
  double gb_early_own_max_abs = 0.0;
  double gb_early_clean_max_abs = 0.0;  ///< same, restricted to jumps without buffered packets
  std::size_t gb_early_with_flush = 0;
  std::size_t strict_decreases = 0;  ///< early G_b with dU < -tol (buffered packets processed)
  std::vector<Violation> list;
  bool ok() const { return violations == 0; }
};

struct FlowCheck {
  std::size_t intervals = 0;
  std::size_t skipped_short = 0;
  std::size_t hard_violations = 0;
  double worst_etm_excess = -std::numeric_limits<double>::infinity();  ///< max (rate - bound - tol)
  bool supply_advisory = false;
  std::size_t supply_violations = 0;  ///< hard when the model is not advisory
  std::size_t downgraded = 0;         ///< supply violations reported as warnings
  double worst_supply_excess = -std::numeric_limits<double>::infinity();
  std::vector<Violation> list;
  bool ok() const { return hard_violations == 0; }
};

struct AgentMetrics {
  std::size_t transmissions = 0;
  std::size_t samplings = 0;
  double min_iet = std::numeric_limits<double>::quiet_NaN();
  double mean_iet = std::numeric_limits<double>::quiet_NaN();
  double max_iet = std::numeric_limits<double>::quiet_NaN();
};

struct Metrics {
  std::vector<AgentMetrics> agents;
  std::vector<std::string> flags;
  std::vector<double> t;
  std::vector<double> spread;  ///< max_{i,m} |x_i - x_m| per recorded row
  std::vector<double> V;
  double initial_spread = 0.0;
  double final_spread = 0.0;
  double time_to_1pct = std::numeric_limits<double>::quiet_NaN();
  double max_V_increase = 0.0;  ///< largest V(t_{k+1}) - V(t_k) over consecutive rows
};

struct TimingReport {
  std::size_t iet_violations = 0;
  std::size_t delay_violations = 0;
  std::size_t off_sample_transmissions = 0;
  std::size_t order_violations = 0;
  std::size_t zeno_violations = 0;
  std::size_t unprocessed = 0;  ///< packets whose processing should have happened before the horizon
  double min_iet_margin = std::numeric_limits<double>::infinity();  ///< min (IET - tau_MIET)
  double max_delay_excess = -std::numeric_limits<double>::infinity();  ///< max (delay - tau_MAD)
  std::vector<Violation> list;
  bool ok() const {
    return iet_violations + delay_violations + off_sample_transmissions + order_violations +
               zeno_violations + unprocessed == 0;
  }
};

struct MonitorReport {
  JumpCheck jumps;
  FlowCheck flow;
  TimingReport timing;
  Metrics metrics;
  bool passed() const { return jumps.ok() && flow.ok() && timing.ok(); }
};

struct MonitorOptions {
  double flow_stride = 1e-4;
  double min_interval = 1e-6;  ///< shorter flow intervals are skipped (round-off dominated)
  std::size_t max_listed = 50;
};

/// Online monitor: checks every jump and every flow segment while the
/// simulation runs, without storing states.
class StorageMonitor : public RunObserver {
 public:
  StorageMonitor(const StorageEvaluator& ev, MonitorOptions opts = {});

  void on_flow(double t0, const HybridState& s0, double t1, const HybridState& s1) override;
  void on_jump(double t, JumpKind kind, std::size_t agent, std::size_t peer,
               const HybridState& pre, const HybridState& post, const JumpInfo& info) override;

  const JumpCheck& jumps() const { return jumps_; }
  const FlowCheck& flow() const { return flow_; }

 private:
  void check_interval(double ta, const HybridState& a, double tb, const HybridState& b);

  const StorageEvaluator& ev_;
  MonitorOptions opts_;
  JumpCheck jumps_;
  FlowCheck flow_;
};

/// Rebuilds missing pre-jump states of a stored trace by flowing the previous
/// row's state to the jump time.
void reconstruct_pre_states(SimTrace& trace, const HybridSystem& sys);

/// Replay checks over a trace recorded with store_states.
JumpCheck check_jumps(const SimTrace& trace, const StorageEvaluator& ev,
                      const MonitorOptions& opts = {});
FlowCheck check_flow(const SimTrace& trace, const StorageEvaluator& ev,
                     const MonitorOptions& opts = {});

TimingReport check_timing(const SimTrace& trace, const GraphTopology& g);
Metrics metrics(const SimTrace& trace);

/// Online monitor + timing + metrics in one run.
MonitorReport monitored_run(const HybridSystem& sys, const ScenarioConfig& cfg,
                            const MonitorOptions& opts = {}, SimTrace* trace_out = nullptr);

}  // namespace petc
