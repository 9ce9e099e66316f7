#pragma once

#include <cmath>
#include <memory>
#include <string>

#include "petc/scenario_io.hpp"

namespace petc::test {

inline std::string config_path() { return std::string(PETC_CONFIG_DIR) + "/case_study.json"; }

inline ScenarioFile case_study() { return load_scenario(config_path()); }

inline EtmParams case_params(std::size_t n_out, MuConvention conv) {
  ConsensusParams cp;
  cp.delta = 0.05;
  cp.a = 0.1;
  cp.alpha = 0.05;
  cp.mu_convention = conv;
  EtmParams p;
  p.gamma = cp.gamma(n_out);
  p.lip = 0.0;
  p.mu = cp.mu(n_out);
  p.eps = 0.5;
  p.lambda = 0.2;
  p.n_out = n_out;
  p.phi0_init = 5.0;
  p.phi1_init = 2.0;
  p.tau_masp = 0.01;
  p.d_min = 0.001;
  return p;
}

/// Separation of variables for L = 0: phi = k tan(theta), theta' = -gamma~/k.
inline double phi_closed_form(const EtmParams& p, int l, double tau) {
  const double k = std::sqrt(p.mu * p.eps);
  const double init = l == 0 ? p.phi0_init : p.phi1_init;
  const double g = p.gamma * std::pow(p.lambda, -l);
  return k * std::tan(std::atan(init / k) - g * tau / k);
}

inline double tau_max_closed_form(const EtmParams& p) {
  const double k = std::sqrt(p.mu * p.eps);
  return k / p.gamma * (std::atan(p.phi0_init / k) - std::atan(p.lambda * p.phi1_init / k));
}

}  // namespace petc::test

#include "petc/consensus.hpp"
#include "petc/hybrid_core.hpp"

namespace petc::test {

/// Consensus on the path 0 - 1 - 2 with the case-study tuning.
struct PathSystem {
  std::shared_ptr<const ConsensusModel> model;
  std::vector<std::shared_ptr<const AgentDesign>> designs;
  std::shared_ptr<const HybridSystem> sys;
};

inline PathSystem path_system(TriggerMode mode = TriggerMode::online, std::size_t n = 3) {
  std::vector<Edge> edges;
  for (std::size_t i = 0; i + 1 < n; ++i) edges.emplace_back(i, i + 1);
  ConsensusParams cp;
  cp.mu_convention = MuConvention::aggregate;
  PathSystem ps;
  ps.model = std::make_shared<ConsensusModel>(GraphTopology::from_undirected(n, edges), cp);
  std::vector<std::shared_ptr<const TriggerFunctions>> tf;
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t deg = std::max<std::size_t>(1, ps.model->topology().out_degree(i));
    auto d = std::make_shared<AgentDesign>(design_agent(case_params(deg, MuConvention::aggregate)));
    ps.designs.push_back(d);
    tf.push_back(std::make_shared<TriggerFunctions>(d, mode, 0.05));
  }
  HybridOptions o;
  o.debug_checks = true;
  ps.sys = std::make_shared<HybridSystem>(ps.model, tf, o);
  return ps;
}

}  // namespace petc::test
