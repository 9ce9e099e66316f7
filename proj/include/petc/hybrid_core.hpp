// Flow map and the three jump maps of the networked hybrid system.
#pragma once

#include <cstddef>
#include <memory>
#include <span>
#include <stdexcept>
#include <vector>

#include <Eigen/Core>

#include "petc/etm_design.hpp"
#include "petc/hybrid_state.hpp"
#include "petc/system_model.hpp"

namespace petc {

/// Protocol violation or inadmissible state.
class HybridError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class JumpKind { transmit, sample, receive };
const char* to_string(JumpKind k);  // "G_a", "G_b", "G_c"

/// Side information of a jump.
struct JumpInfo {
  std::vector<std::size_t> flushed;  ///< senders j whose buffered packet agent i processed
  double eta_increment = 0.0;        ///< rho (G_a) or nu (G_b)
};

struct HybridOptions {
  /// Largest RK4 substep for x along a flow.
  double max_substep = 1e-3;
  /// Re-check admissibility after every operation.
  bool debug_checks = false;
};

class HybridSystem {
 public:
  HybridSystem(std::shared_ptr<const SystemModel> model,
               std::vector<std::shared_ptr<const TriggerFunctions>> triggers,
               HybridOptions opts = {});

  std::size_t size() const { return layout_->n; }
  const SystemModel& model() const { return *model_; }
  std::shared_ptr<const SystemModel> model_ptr() const { return model_; }
  const GraphTopology& topology() const { return model_->topology(); }
  const TriggerFunctions& trigger(std::size_t i) const { return *triggers_.at(i); }
  const std::shared_ptr<const StateLayout>& layout() const { return layout_; }
  const HybridOptions& options() const { return opts_; }

  /// e = 0, clocks 0, r = y(0), ell = b = 0.
  HybridState initial_state(const Eigen::VectorXd& x0, std::span<const double> eta0) const;

  Eigen::VectorXd output(const HybridState& s, std::size_t i) const;
  /// Flat vector of estimates held by agent i: block m = y_m + e_m^i for m in
  /// V_i^in, zero elsewhere.
  Eigen::VectorXd estimates_in(const HybridState& s, std::size_t i) const;
  /// estimates_in with block i replaced by r_i.
  Eigen::VectorXd controller_view(const HybridState& s, std::size_t i) const;
  /// |e_i^out|^2 = sum over out-neighbours m of |e_i^m|^2.
  double e_out_sq(const HybridState& s, std::size_t i) const;
  double psi(const HybridState& s, std::size_t i) const;

  HybridState flow(const HybridState& s, double dt, const Inputs& v = {}) const;

  HybridState jump_transmit(const HybridState& s, std::size_t i, JumpInfo* info = nullptr) const;
  HybridState jump_sample(const HybridState& s, std::size_t i, JumpInfo* info = nullptr) const;
  HybridState jump_receive(const HybridState& s, std::size_t sender, std::size_t receiver) const;
  bool trigger_decision(const HybridState& s, std::size_t i) const;

  /// Throws HybridError naming the first violated state constraint.
  void check_admissible(const HybridState& s) const;

 private:
  void flush_buffers(HybridState& s, std::size_t i, JumpInfo* info) const;
  void check_sampling_pre(const HybridState& s, std::size_t i) const;
  Eigen::VectorXd input_of(const Inputs& v, std::size_t i) const;

  std::shared_ptr<const SystemModel> model_;
  std::vector<std::shared_ptr<const TriggerFunctions>> triggers_;
  std::vector<PsiFunction> psi_;
  std::shared_ptr<const StateLayout> layout_;
  HybridOptions opts_;
};

}  // namespace petc
