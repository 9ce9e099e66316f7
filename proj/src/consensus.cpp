#include "petc/consensus.hpp"

#include <cmath>
#include <stdexcept>

namespace petc {

MuConvention parse_mu_convention(const std::string& s) {
  if (s == "per_neighbor") return MuConvention::per_neighbor;
  if (s == "aggregate") return MuConvention::aggregate;
  throw std::invalid_argument("unknown mu_convention '" + s + "' (expected per_neighbor|aggregate)");
}

std::string to_string(MuConvention m) {
  return m == MuConvention::per_neighbor ? "per_neighbor" : "aggregate";
}

double ConsensusParams::gamma(std::size_t n_i) const {
  return std::sqrt(static_cast<double>(n_i) / a + alpha);
}

double ConsensusParams::mu(std::size_t n_i) const {
  return mu_convention == MuConvention::per_neighbor ? c(n_i) / static_cast<double>(n_i) : c(n_i);
}

double consensus_control(const GraphTopology& g, std::size_t i, const Eigen::VectorXd& view) {
  const auto ii = static_cast<Eigen::Index>(i);
  double u = 0.0;
  for (std::size_t m : g.in_neighbors(i)) u -= view(ii) - view(static_cast<Eigen::Index>(m));
  return u;
}

ConsensusModel::ConsensusModel(GraphTopology topology, ConsensusParams params)
    : g_(std::move(topology)), params_(params) {
  if (!g_.is_undirected()) throw std::invalid_argument("consensus model needs an undirected graph");
  if (!g_.is_connected()) throw std::invalid_argument("consensus model needs a connected graph");
  if (!(params_.delta > 0.0 && params_.delta < 1.0)) throw std::invalid_argument("delta must lie in (0,1)");
  if (!(params_.alpha > 0.0)) throw std::invalid_argument("alpha must be positive");
  if (!(params_.a > 0.0) || params_.a * static_cast<double>(g_.max_out_degree()) >= 1.0) {
    throw std::invalid_argument("a must lie in (0, 1/max_i N_i)");
  }
  lap_ = g_.laplacian();
}

Eigen::VectorXd ConsensusModel::f(std::size_t i, const Eigen::VectorXd&, const Eigen::VectorXd& view,
                                  const Eigen::VectorXd&) const {
  return Eigen::VectorXd::Constant(1, consensus_control(g_, i, view));
}

Eigen::VectorXd ConsensusModel::h(std::size_t i, const Eigen::VectorXd& x) const {
  return x.segment(static_cast<Eigen::Index>(i), 1);
}

Eigen::VectorXd ConsensusModel::output_rate(std::size_t i, const Eigen::VectorXd& x,
                                            const Eigen::VectorXd& view,
                                            const Eigen::VectorXd& v) const {
  return f(i, x, view, v);
}

double ConsensusModel::H(std::size_t i, const Eigen::VectorXd&, const Eigen::VectorXd& view,
                         const Eigen::VectorXd&) const {
  return std::abs(consensus_control(g_, i, view));
}

double ConsensusModel::H_lower(std::size_t i, const Eigen::VectorXd& view) const {
  return std::abs(consensus_control(g_, i, view));
}

double ConsensusModel::gamma(std::size_t i) const { return params_.gamma(g_.out_degree(i)); }

double ConsensusModel::mu(std::size_t i) const { return params_.mu(g_.out_degree(i)); }

double ConsensusModel::storage(const Eigen::VectorXd& x) const { return x.dot(lap_ * x); }

double ConsensusModel::supply(const HybridState& s, const Inputs&) const {
  double acc = 0.0;
  for (std::size_t i = 0; i < g_.size(); ++i) {
    const auto ii = static_cast<Eigen::Index>(i);
    double z = 0.0;
    for (std::size_t m : g_.in_neighbors(i)) z += s.x(ii) - s.x(static_cast<Eigen::Index>(m));
    double e_sq = 0.0;
    for (std::size_t m : g_.out_neighbors(i)) e_sq += s.e_block(i, m).squaredNorm();
    acc += -params_.d_lyap(g_.out_degree(i)) * z * z - mu(i) * e_sq;
  }
  return acc;
}

double ConsensusModel::attractor_distance(const Eigen::VectorXd& x) const {
  return (x.array() - x.mean()).matrix().norm();
}

}  // namespace petc
