// Directed communication graph. An edge (i, m) means agent i sends to agent m,
// so m is an out-neighbour of i and i an in-neighbour of m.
#pragma once

#include <cstddef>
#include <utility>
#include <vector>

#include <Eigen/Core>

namespace petc {

using Edge = std::pair<std::size_t, std::size_t>;

class GraphTopology {
 public:
  GraphTopology() = default;
  /// Zero-based directed edges; rejects self-loops, duplicates and bad indices.
  GraphTopology(std::size_t n_agents, std::vector<Edge> edges);

  /// Each undirected edge {i, m} becomes (i, m) and (m, i).
  static GraphTopology from_undirected(std::size_t n_agents, const std::vector<Edge>& edges,
                                       bool one_based = false);

  std::size_t size() const { return n_; }
  const std::vector<Edge>& edges() const { return edges_; }
  const std::vector<std::size_t>& in_neighbors(std::size_t i) const { return in_.at(i); }
  const std::vector<std::size_t>& out_neighbors(std::size_t i) const { return out_.at(i); }
  std::size_t out_degree(std::size_t i) const { return out_.at(i).size(); }
  std::size_t max_out_degree() const;

  /// delta_i(m): 1 when m is an out-neighbour of i.
  bool delta(std::size_t i, std::size_t m) const { return adj_[i * n_ + m] != 0; }

  bool is_undirected() const;
  bool is_connected() const;  ///< weak connectivity
  Eigen::MatrixXd laplacian() const;  ///< in-degree Laplacian

 private:
  std::size_t n_ = 0;
  std::vector<Edge> edges_;
  std::vector<std::vector<std::size_t>> in_;
  std::vector<std::vector<std::size_t>> out_;
  std::vector<unsigned char> adj_;
};

}  // namespace petc
