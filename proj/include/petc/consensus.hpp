// Single-integrator consensus: x_i' = u_i with
// u_i = -sum_{m in V_i^in} (yhat_i^i - yhat_m^i), where yhat_i^i = r_i.
#pragma once

#include <string>

#include "petc/system_model.hpp"

namespace petc {

/// Which mu_i the design uses: c_i / N_i, or c_i itself.
enum class MuConvention { per_neighbor, aggregate };

MuConvention parse_mu_convention(const std::string& s);
std::string to_string(MuConvention m);

struct ConsensusParams {
  double delta = 0.05;
  double a = 0.1;
  double alpha = 0.05;
  MuConvention mu_convention = MuConvention::per_neighbor;

  double c(std::size_t n_i) const { return (1.0 - delta) * (1.0 - a * static_cast<double>(n_i)); }
  double d_lyap(std::size_t n_i) const { return delta * (1.0 - a * static_cast<double>(n_i)); }
  double gamma(std::size_t n_i) const;
  double mu(std::size_t n_i) const;
};

/// u_i from a controller view.
double consensus_control(const GraphTopology& g, std::size_t i, const Eigen::VectorXd& view);

class ConsensusModel final : public SystemModel {
 public:
  /// Rejects directed or disconnected graphs and a * N_i >= 1.
  ConsensusModel(GraphTopology topology, ConsensusParams params);

  const ConsensusParams& params() const { return params_; }

  std::string name() const override { return "consensus"; }
  const GraphTopology& topology() const override { return g_; }
  std::size_t state_dim(std::size_t) const override { return 1; }
  std::size_t output_dim(std::size_t) const override { return 1; }

  Eigen::VectorXd f(std::size_t i, const Eigen::VectorXd& x, const Eigen::VectorXd& view,
                    const Eigen::VectorXd& v) const override;
  Eigen::VectorXd h(std::size_t i, const Eigen::VectorXd& x) const override;
  Eigen::VectorXd output_rate(std::size_t i, const Eigen::VectorXd& x, const Eigen::VectorXd& view,
                              const Eigen::VectorXd& v) const override;

  double H(std::size_t i, const Eigen::VectorXd& x, const Eigen::VectorXd& view,
           const Eigen::VectorXd& v) const override;
  double H_lower(std::size_t i, const Eigen::VectorXd& view) const override;
  double lipschitz(std::size_t) const override { return 0.0; }
  double varsigma(std::size_t, const Eigen::VectorXd&) const override { return 0.0; }
  double gamma(std::size_t i) const override;
  double mu(std::size_t i) const override;

  /// x^T L x
  double storage(const Eigen::VectorXd& x) const override;
  /// sum_i (-d_i z_i^2 - mu_i |e_i^out|^2), z_i = sum_{m in V_i^in} (x_i - x_m)
  double supply(const HybridState& s, const Inputs& v) const override;
  /// |x - mean(x) 1|
  double attractor_distance(const Eigen::VectorXd& x) const override;
  bool supply_rate_advisory() const override { return true; }

 private:
  GraphTopology g_;
  ConsensusParams params_;
  Eigen::MatrixXd lap_;
};

}  // namespace petc
