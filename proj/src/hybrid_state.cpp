#include "petc/hybrid_state.hpp"

#include <cmath>
#include <stdexcept>

namespace petc {

StateLayout::StateLayout(std::vector<std::size_t> state_dims, std::vector<std::size_t> output_dims)
    : n(state_dims.size()), nx(std::move(state_dims)), ny(std::move(output_dims)) {
  if (nx.size() != ny.size()) throw std::invalid_argument("state/output dimension lists differ");
  x_off.resize(n);
  y_off.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    x_off[i] = nx_total;
    y_off[i] = ny_total;
    nx_total += nx[i];
    ny_total += ny[i];
  }
}

HybridState::HybridState(std::shared_ptr<const StateLayout> l)
    : layout(std::move(l)),
      x(Eigen::VectorXd::Zero(idx(layout->nx_total))),
      e(Eigen::VectorXd::Zero(idx(layout->e_total()))),
      r(Eigen::VectorXd::Zero(idx(layout->ny_total))),
      tau(layout->n, 0.0),
      sigma(layout->n, 0.0),
      eta(layout->n, 0.0),
      ell(layout->n * layout->n, 0),
      b(layout->n * layout->n, 0) {}

bool HybridState::all_finite() const {
  auto finite = [](double v) { return std::isfinite(v); };
  if (!x.allFinite() || !e.allFinite() || !r.allFinite()) return false;
  for (std::size_t i = 0; i < tau.size(); ++i) {
    if (!finite(tau[i]) || !finite(sigma[i]) || !finite(eta[i])) return false;
  }
  return true;
}

}  // namespace petc
