#include "petc/system_model.hpp"

namespace petc {

std::shared_ptr<const StateLayout> SystemModel::make_layout() const {
  std::vector<std::size_t> nx(size());
  std::vector<std::size_t> ny(size());
  for (std::size_t i = 0; i < size(); ++i) {
    nx[i] = state_dim(i);
    ny[i] = output_dim(i);
  }
  return std::make_shared<const StateLayout>(std::move(nx), std::move(ny));
}

}  // namespace petc
