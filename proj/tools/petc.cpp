// petc: design, simulate, curve, verify.
#include <charconv>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "petc/scenario_io.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace petc;

namespace {

constexpr int kExitFail = 1;
constexpr int kExitUsage = 2;

std::optional<std::uint64_t> seed_from_env() {
  const char* env = std::getenv("PETC_SEED");
  if (!env || !*env) return std::nullopt;
  try {
    std::size_t pos = 0;
    const auto v = std::stoull(env, &pos);
    if (pos != std::string(env).size()) throw std::invalid_argument(env);
    return v;
  } catch (const std::exception&) {
    throw ConfigError(std::string("PETC_SEED is not an unsigned integer: ") + env);
  }
}

int cmd_design(const fs::path& config, const fs::path& out) {
  const ScenarioFile f = load_scenario(config);
  const json report = design_report(f);
  write_atomic(out / "design.json", report.dump(2) + "\n");

  const ConsensusModel model(f.topology, f.consensus);
  const auto designs = design_all(f, model);
  for (std::size_t i = 0; i < designs.size(); ++i) {
    write_atomic(out / ("phi_agent" + std::to_string(i) + ".csv"), phi_table_csv(*designs[i]));
  }

  std::cout << "mu convention: " << report["mu_convention"].get<std::string>() << "\n";
  for (const auto& a : report["agents"]) {
    std::cout << "agent " << a["agent"] << " N=" << a["n_out"] << "  tau_max=" << a["tau_max"]
              << "  tau_MAD=" << a["tau_mad"] << "  tau_MIET=" << a["tau_miet"]
              << "  certificate=" << (a["certificate"]["ok"].get<bool>() ? "certified" : "FAILED") << "\n";
  }
  if (report.contains("reference_comparison")) {
    for (const auto& r : report["reference_comparison"]) {
      std::cout << "reference N=" << r["n_out"] << " (tau_max, tau_MAD)=" << r["reference"].dump() << ":";
      for (const char* conv : {"per_neighbor", "aggregate"}) {
        const auto& c = r[conv];
        std::cout << "  " << conv << " -> " << c["verdict"].get<std::string>();
        if (c.contains("tau_max")) std::cout << " (" << c["tau_max"] << ", " << c["tau_mad"] << ")";
      }
      std::cout << "\n";
    }
  }
  return report["certified"].get<bool>() ? 0 : kExitFail;
}

int cmd_simulate(const fs::path& config, const RunOverrides& o, bool verify, bool full_state,
                 const fs::path& out) {
  ScenarioFile f = load_scenario(config);
  if (full_state) f.full_state = true;
  Scenario sc = build_scenario(f, o);
  StorageEvaluator ev(*sc.system);
  sc.config.trace.storage = [&ev](const HybridState& s) { return ev.storage(s); };

  SimTrace trace;
  std::optional<MonitorReport> report;
  if (verify) {
    report = monitored_run(*sc.system, sc.config, f.monitor, &trace);
  } else {
    trace = run(*sc.system, sc.config);
  }
  const Metrics m = report ? report->metrics : metrics(trace);
  write_atomic(out / "trace.csv", trace_csv(trace, *sc.system, f.full_state));
  write_atomic(out / "summary.json", summary_json(trace, m).dump(2) + "\n");

  std::cout << "seed " << sc.config.seed << ", horizon " << sc.config.horizon << " s, "
            << trace.transmissions.size() << " transmissions, spread " << m.initial_spread << " -> "
            << m.final_spread << "\n";
  if (!report) return 0;
  const json rj = report_json(*report);
  write_atomic(out / "report.json", rj.dump(2) + "\n");
  std::cout << "jumps: " << report->jumps.violations << " violations; flow: "
            << report->flow.hard_violations << " hard violations, " << report->flow.downgraded
            << " supply-rate warnings; timing: " << (report->timing.ok() ? "ok" : "FAILED") << "\n";
  std::cout << (report->passed() ? "verification passed" : "verification FAILED") << "\n";
  return report->passed() ? 0 : kExitFail;
}

std::vector<double> parse_grid(const std::string& text) {
  std::vector<double> out;
  std::stringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    const auto b = item.find_first_not_of(" \t");
    if (b == std::string::npos) continue;
    const auto e = item.find_last_not_of(" \t");
    const std::string tok = item.substr(b, e - b + 1);
    double v = 0.0;
    const auto [p, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (ec != std::errc() || p != tok.data() + tok.size()) {
      throw ConfigError("--lambdas: '" + tok + "' is not a number");
    }
    out.push_back(v);
  }
  return out;
}

int cmd_curve(const fs::path& config, const std::vector<double>& lambdas, const fs::path& out) {
  if (lambdas.empty()) {
    std::cerr << "curve: empty lambda grid\n";
    return kExitUsage;
  }
  const ScenarioFile f = load_scenario(config);
  const ConsensusModel model(f.topology, f.consensus);
  std::vector<std::pair<std::size_t, TradeoffCurve>> curves;
  std::vector<bool> seen(model.topology().max_out_degree() + 1, false);
  for (std::size_t i = 0; i < model.size(); ++i) {
    const std::size_t n_out = model.topology().out_degree(i);
    if (seen[n_out]) continue;
    seen[n_out] = true;
    curves.emplace_back(n_out, tradeoff_curve(etm_params_for(f, model, i), lambdas, f.etm.step));
  }
  std::sort(curves.begin(), curves.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
  for (const auto& [n_out, c] : curves) {
    for (const auto& w : c.warnings) std::cerr << "warning (N=" << n_out << "): " << w << "\n";
  }
  write_atomic(out / "curve.csv", curve_csv(curves, f.etm.tau_masp));
  std::cout << "wrote " << (out / "curve.csv").string() << "\n";
  return 0;
}

int cmd_verify(const fs::path& config, const fs::path& trace_path, const fs::path& out) {
  const ScenarioFile f = load_scenario(config);
  const Scenario sc = build_scenario(f);
  SimTrace trace = parse_trace_csv(read_file(trace_path), *sc.system);
  reconstruct_pre_states(trace, *sc.system);
  const StorageEvaluator ev(*sc.system);
  MonitorReport r;
  r.jumps = check_jumps(trace, ev, f.monitor);
  r.flow = check_flow(trace, ev, f.monitor);
  r.timing = check_timing(trace, sc.system->topology());
  r.metrics = metrics(trace);
  write_atomic(out / "report.json", report_json(r).dump(2) + "\n");
  std::cout << (r.passed() ? "verification passed" : "verification FAILED") << "\n";
  return r.passed() ? 0 : kExitFail;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Periodic event-triggered control: design, simulation and verification"};
  app.require_subcommand(1);

  fs::path config;
  fs::path out = ".";
  std::optional<std::uint64_t> seed;
  std::optional<double> horizon;
  std::string mode;
  bool verify = false;
  bool full_state = false;
  std::string lambdas;
  fs::path trace_path;

  auto* design = app.add_subcommand("design", "compute timing constants and phi tables");
  auto* simulate = app.add_subcommand("simulate", "run the networked simulation");
  auto* curve = app.add_subcommand("curve", "tradeoff curve over a lambda grid");
  auto* ver = app.add_subcommand("verify", "re-check an existing full-state trace");
  for (auto* sub : {design, simulate, curve, ver}) {
    sub->add_option("--config", config, "scenario JSON")->required()->check(CLI::ExistingFile);
    sub->add_option("--out", out, "output directory");
  }
  simulate->add_option("--seed", seed, "RNG seed (PETC_SEED overrides)");
  simulate->add_option("--horizon", horizon, "simulated seconds")->check(CLI::NonNegativeNumber);
  simulate->add_option("--mode", mode, "trigger mode")->check(CLI::IsMember({"online", "conservative"}));
  simulate->add_flag("--verify", verify, "run the storage-function monitor");
  simulate->add_flag("--full-state", full_state, "write full hybrid states to the trace");
  curve->add_option("--lambdas", lambdas, "comma-separated lambda grid")->required();
  ver->add_option("--trace", trace_path, "trace CSV")->required()->check(CLI::ExistingFile);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*design) return cmd_design(config, out);
    if (*simulate) {
      RunOverrides o;
      o.seed = seed;
      if (auto env = seed_from_env()) o.seed = env;
      o.horizon = horizon;
      if (!mode.empty()) o.mode = parse_trigger_mode(mode);
      return cmd_simulate(config, o, verify, full_state, out);
    }
    if (*curve) return cmd_curve(config, parse_grid(lambdas), out);
    if (*ver) return cmd_verify(config, trace_path, out);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const DesignError& e) {
    std::cerr << "design error: " << e.what() << "\n";
    return kExitFail;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitFail;
  }
  return kExitUsage;
}
