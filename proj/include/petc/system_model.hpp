// Pluggable agent dynamics and controller bundle.
//
// Every per-agent callback receives agent i's controller view: a flat vector
// of N output blocks where block m is the held estimate yhat_m^i for each
// in-neighbour m, block i is the agent's own last broadcast r_i, and all other
// blocks are zero. The view is piecewise constant along flows.
#pragma once

#include <cstddef>
#include <memory>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "petc/graph.hpp"
#include "petc/hybrid_state.hpp"

namespace petc {

/// Exogenous inputs, one block per agent; an empty vector means v = 0.
using Inputs = std::vector<Eigen::VectorXd>;

class SystemModel {
 public:
  virtual ~SystemModel() = default;

  virtual std::string name() const = 0;
  virtual const GraphTopology& topology() const = 0;
  virtual std::size_t state_dim(std::size_t i) const = 0;
  virtual std::size_t output_dim(std::size_t i) const = 0;

  std::size_t size() const { return topology().size(); }
  std::shared_ptr<const StateLayout> make_layout() const;

  virtual Eigen::VectorXd f(std::size_t i, const Eigen::VectorXd& x, const Eigen::VectorXd& view,
                            const Eigen::VectorXd& v) const = 0;
  virtual Eigen::VectorXd h(std::size_t i, const Eigen::VectorXd& x) const = 0;
  /// dy_i/dt along the flow.
  virtual Eigen::VectorXd output_rate(std::size_t i, const Eigen::VectorXd& x,
                                      const Eigen::VectorXd& view,
                                      const Eigen::VectorXd& v) const = 0;

  /// |dy_i/dt| <= H_i + L_i |e_i^i| (output-derivative bound).
  virtual double H(std::size_t i, const Eigen::VectorXd& x, const Eigen::VectorXd& view,
                   const Eigen::VectorXd& v) const = 0;
  virtual double H_lower(std::size_t i, const Eigen::VectorXd& view) const = 0;
  virtual double lipschitz(std::size_t i) const = 0;
  virtual double varsigma(std::size_t i, const Eigen::VectorXd& view) const = 0;
  virtual double gamma(std::size_t i) const = 0;
  virtual double mu(std::size_t i) const = 0;

  virtual double storage(const Eigen::VectorXd& x) const = 0;
  virtual double supply(const HybridState& s, const Inputs& v) const = 0;
  virtual double attractor_distance(const Eigen::VectorXd& x) const = 0;
  /// True when the supply rate contains terms the model can only guess;
  /// flow checks against it are then reported as warnings.
  virtual bool supply_rate_advisory() const { return false; }
};

}  // namespace petc
