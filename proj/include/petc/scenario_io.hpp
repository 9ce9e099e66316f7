// Scenario files (JSON), trace CSV, run summaries and reports.
//
// Config schema:
//   topology: {n_agents, edges: [[i, m], ...], undirected (default true),
//              one_based (default false)}
//   model:    {type: "consensus", delta, a, alpha, mu_convention}
//   etm:      {eps, lambda, phi0_init, phi1_init, eps_eta, tau_masp, d_min,
//              step, tau_miet: number | [per agent] | {"<N_i>": value}}
//   scenario: {horizon, seed, mode, x0: [..] | {uniform: [lo, hi]}, eta0,
//              sampling: "uniform" | "periodic",
//              delay: "uniform" | "zero" | {fraction: f},
//              trace: {stride, full_state}, monitor: {flow_stride}}
//   reference_timing (optional): {"<N_i>": [tau_max, tau_mad]} compared
//              against the design under both mu conventions.
#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "petc/consensus.hpp"
#include "petc/net_sim.hpp"
#include "petc/verification.hpp"

namespace petc {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct EtmSettings {
  double eps = 0.5;
  double lambda = 0.2;
  double phi0_init = 5.0;
  double phi1_init = 2.0;
  double eps_eta = 0.05;
  double tau_masp = 1e-2;
  double d_min = 1e-3;
  double step = 1e-5;
  std::optional<double> tau_miet_all;
  std::vector<double> tau_miet_per_agent;
  std::map<std::size_t, double> tau_miet_by_out_degree;
};

struct ScenarioFile {
  GraphTopology topology;
  ConsensusParams consensus;
  EtmSettings etm;
  double horizon = 10.0;
  std::uint64_t seed = 1;
  TriggerMode mode = TriggerMode::online;
  std::vector<double> x0;  ///< explicit initial state; empty means uniform draw
  double x0_lo = -1.0;
  double x0_hi = 1.0;
  double eta0 = 0.0;
  SamplingSpec sampling;
  DelaySpec delay;
  double trace_stride = 1e-2;
  bool full_state = false;
  MonitorOptions monitor;
  std::map<std::size_t, std::pair<double, double>> reference_timing;
};

ScenarioFile parse_scenario(const nlohmann::json& j);
ScenarioFile load_scenario(const std::filesystem::path& path);

/// Seeded uniform draw (one independent stream per agent) unless x0 is given.
Eigen::VectorXd initial_x(const ScenarioFile& f, std::uint64_t seed);

EtmParams etm_params_for(const ScenarioFile& f, const SystemModel& model, std::size_t i);
std::optional<double> tau_miet_for(const ScenarioFile& f, const SystemModel& model, std::size_t i);

/// Designs shared between agents with identical parameters.
std::vector<std::shared_ptr<const AgentDesign>> design_all(const ScenarioFile& f,
                                                           const SystemModel& model);

struct Scenario {
  std::shared_ptr<const ConsensusModel> model;
  ScenarioConfig config;
  std::shared_ptr<const HybridSystem> system;
};

struct RunOverrides {
  std::optional<std::uint64_t> seed;
  std::optional<double> horizon;
  std::optional<TriggerMode> mode;
};

Scenario build_scenario(const ScenarioFile& f, const RunOverrides& o = {});

/// Design summary including the timing certificates and, when the file
/// carries reference_timing, the comparison under both mu conventions.
nlohmann::json design_report(const ScenarioFile& f);

/// Trace CSV. Column order is fixed and versioned in the first line.
std::string trace_csv(const SimTrace& trace, const HybridSystem& sys, bool full_state);
SimTrace parse_trace_csv(const std::string& text, const HybridSystem& sys);

std::string phi_table_csv(const AgentDesign& d);
std::string curve_csv(const std::vector<std::pair<std::size_t, TradeoffCurve>>& curves,
                      double tau_masp);

nlohmann::json summary_json(const SimTrace& trace, const Metrics& m);
nlohmann::json report_json(const MonitorReport& r);

/// Shortest round-trip decimal form.
std::string format_double(double v);

/// Write via a temporary file and rename.
void write_atomic(const std::filesystem::path& path, const std::string& content);
std::string read_file(const std::filesystem::path& path);

}  // namespace petc
