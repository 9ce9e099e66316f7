#include "petc/graph.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>

namespace petc {

GraphTopology::GraphTopology(std::size_t n_agents, std::vector<Edge> edges)
    : n_(n_agents), edges_(std::move(edges)), in_(n_agents), out_(n_agents),
      adj_(n_agents * n_agents, 0) {
  if (n_ == 0) throw std::invalid_argument("graph needs at least one agent");
  for (const auto& [i, m] : edges_) {
    if (i >= n_ || m >= n_) {
      throw std::invalid_argument("edge (" + std::to_string(i) + "," + std::to_string(m) +
                                  ") out of range");
    }
    if (i == m) throw std::invalid_argument("self-loop at agent " + std::to_string(i));
    if (adj_[i * n_ + m]) {
      throw std::invalid_argument("duplicate edge (" + std::to_string(i) + "," +
                                  std::to_string(m) + ")");
    }
    adj_[i * n_ + m] = 1;
    out_[i].push_back(m);
    in_[m].push_back(i);
  }
  for (auto& v : in_) std::sort(v.begin(), v.end());
  for (auto& v : out_) std::sort(v.begin(), v.end());
}

GraphTopology GraphTopology::from_undirected(std::size_t n_agents, const std::vector<Edge>& edges,
                                             bool one_based) {
  std::vector<Edge> directed;
  directed.reserve(2 * edges.size());
  for (auto [i, m] : edges) {
    if (one_based) {
      if (i == 0 || m == 0) throw std::invalid_argument("one-based edge list contains 0");
      --i;
      --m;
    }
    directed.emplace_back(i, m);
    directed.emplace_back(m, i);
  }
  return GraphTopology(n_agents, std::move(directed));
}

std::size_t GraphTopology::max_out_degree() const {
  std::size_t best = 0;
  for (const auto& v : out_) best = std::max(best, v.size());
  return best;
}

bool GraphTopology::is_undirected() const {
  for (const auto& [i, m] : edges_) {
    if (!delta(m, i)) return false;
  }
  return true;
}

bool GraphTopology::is_connected() const {
  if (n_ == 0) return false;
  std::vector<bool> seen(n_, false);
  std::vector<std::size_t> stack{0};
  seen[0] = true;
  while (!stack.empty()) {
    const std::size_t i = stack.back();
    stack.pop_back();
    auto visit = [&](std::size_t j) {
      if (!seen[j]) {
        seen[j] = true;
        stack.push_back(j);
      }
    };
    for (std::size_t j : out_[i]) visit(j);
    for (std::size_t j : in_[i]) visit(j);
  }
  return std::all_of(seen.begin(), seen.end(), [](bool b) { return b; });
}

Eigen::MatrixXd GraphTopology::laplacian() const {
  Eigen::MatrixXd lap = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n_),
                                              static_cast<Eigen::Index>(n_));
  for (std::size_t i = 0; i < n_; ++i) {
    const auto ii = static_cast<Eigen::Index>(i);
    for (std::size_t m : in_[i]) {
      lap(ii, ii) += 1.0;
      lap(ii, static_cast<Eigen::Index>(m)) -= 1.0;
    }
  }
  return lap;
}

}  // namespace petc
