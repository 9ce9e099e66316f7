// Flat storage for the hybrid state xi = (x, e, tau, sigma, r, ell, b, eta).
#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <vector>

#include <Eigen/Core>

namespace petc {

/// Block offsets shared by every state of one system. Agent i owns an n_x,i
/// state block and an n_y,i output block. The error e_i^m (estimate of y_i
/// held by agent m minus y_i) has dimension n_y,i and lives at e_off(i, m).
struct StateLayout {
  std::size_t n = 0;
  std::vector<std::size_t> nx, ny, x_off, y_off;
  std::size_t nx_total = 0;
  std::size_t ny_total = 0;

  StateLayout(std::vector<std::size_t> state_dims, std::vector<std::size_t> output_dims);

  std::size_t e_off(std::size_t i, std::size_t m) const { return n * y_off[i] + m * ny[i]; }
  std::size_t e_total() const { return n * ny_total; }
};

struct HybridState {
  std::shared_ptr<const StateLayout> layout;
  Eigen::VectorXd x;
  Eigen::VectorXd e;
  Eigen::VectorXd r;
  std::vector<double> tau;
  std::vector<double> sigma;
  std::vector<double> eta;
  std::vector<std::uint8_t> ell;  ///< ell[i * n + m]
  std::vector<std::uint8_t> b;    ///< b[i * n + m]

  HybridState() = default;
  explicit HybridState(std::shared_ptr<const StateLayout> l);

  std::size_t size() const { return layout ? layout->n : 0; }

  auto x_block(std::size_t i) { return x.segment(idx(layout->x_off[i]), idx(layout->nx[i])); }
  auto x_block(std::size_t i) const {
    return x.segment(idx(layout->x_off[i]), idx(layout->nx[i]));
  }
  auto e_block(std::size_t i, std::size_t m) {
    return e.segment(idx(layout->e_off(i, m)), idx(layout->ny[i]));
  }
  auto e_block(std::size_t i, std::size_t m) const {
    return e.segment(idx(layout->e_off(i, m)), idx(layout->ny[i]));
  }
  /// All N blocks e_i^0..e_i^{N-1} of sender i (e_i^out with redundant zeros).
  auto e_out(std::size_t i) const {
    return e.segment(idx(layout->e_off(i, 0)), idx(layout->n * layout->ny[i]));
  }
  auto r_block(std::size_t i) { return r.segment(idx(layout->y_off[i]), idx(layout->ny[i])); }
  auto r_block(std::size_t i) const {
    return r.segment(idx(layout->y_off[i]), idx(layout->ny[i]));
  }

  std::uint8_t& ell_at(std::size_t i, std::size_t m) { return ell[i * layout->n + m]; }
  std::uint8_t ell_at(std::size_t i, std::size_t m) const { return ell[i * layout->n + m]; }
  std::uint8_t& b_at(std::size_t i, std::size_t m) { return b[i * layout->n + m]; }
  std::uint8_t b_at(std::size_t i, std::size_t m) const { return b[i * layout->n + m]; }

  bool all_finite() const;

 private:
  static Eigen::Index idx(std::size_t v) { return static_cast<Eigen::Index>(v); }
};

}  // namespace petc
