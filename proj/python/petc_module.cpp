#include <optional>
#include <string>
#include <vector>

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "petc/scenario_io.hpp"

namespace py = pybind11;
using namespace petc;

namespace {

ScenarioFile parse(const std::string& config_json) {
  return parse_scenario(nlohmann::json::parse(config_json));
}

std::string design(const std::string& config_json) {
  const auto f = parse(config_json);
  py::gil_scoped_release nogil;
  return design_report(f).dump();
}

py::tuple simulate(const std::string& config_json, std::optional<std::uint64_t> seed,
                   std::optional<double> horizon, std::optional<std::string> mode, bool verify,
                   bool full_state) {
  ScenarioFile f = parse(config_json);
  if (full_state) f.full_state = true;
  RunOverrides o;
  o.seed = seed;
  o.horizon = horizon;
  if (mode) o.mode = parse_trigger_mode(*mode);
  std::string summary, csv;
  std::optional<std::string> report;
  {
    py::gil_scoped_release nogil;
    Scenario sc = build_scenario(f, o);
    StorageEvaluator ev(*sc.system);
    sc.config.trace.storage = [&ev](const HybridState& s) { return ev.storage(s); };
    SimTrace trace;
    std::optional<MonitorReport> rep;
    if (verify) {
      rep = monitored_run(*sc.system, sc.config, f.monitor, &trace);
    } else {
      trace = run(*sc.system, sc.config);
    }
    summary = summary_json(trace, rep ? rep->metrics : metrics(trace)).dump();
    csv = trace_csv(trace, *sc.system, f.full_state);
    if (rep) report = report_json(*rep).dump();
  }
  return py::make_tuple(summary, csv, report);
}

std::string verify(const std::string& config_json, const std::string& trace_text) {
  const auto f = parse(config_json);
  py::gil_scoped_release nogil;
  const Scenario sc = build_scenario(f);
  SimTrace trace = parse_trace_csv(trace_text, *sc.system);
  reconstruct_pre_states(trace, *sc.system);
  const StorageEvaluator ev(*sc.system);
  MonitorReport r;
  r.jumps = check_jumps(trace, ev, f.monitor);
  r.flow = check_flow(trace, ev, f.monitor);
  r.timing = check_timing(trace, sc.system->topology());
  r.metrics = metrics(trace);
  return report_json(r).dump();
}

std::string curve(const std::string& config_json, const std::vector<double>& lambdas) {
  const auto f = parse(config_json);
  py::gil_scoped_release nogil;
  const ConsensusModel model(f.topology, f.consensus);
  std::vector<std::pair<std::size_t, TradeoffCurve>> curves;
  for (std::size_t i = 0; i < model.size(); ++i) {
    const std::size_t n_out = model.topology().out_degree(i);
    bool seen = false;
    for (const auto& c : curves) seen |= c.first == n_out;
    if (!seen) curves.emplace_back(n_out, tradeoff_curve(etm_params_for(f, model, i), lambdas, f.etm.step));
  }
  std::sort(curves.begin(), curves.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
  return curve_csv(curves, f.etm.tau_masp);
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Periodic event-triggered control: design, simulation and verification";

  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<DesignError>(m, "DesignError", PyExc_ValueError);
  py::register_exception<HybridError>(m, "HybridError", PyExc_RuntimeError);

  py::class_<EtmParams>(m, "EtmParams")
      .def(py::init<>())
      .def_readwrite("gamma", &EtmParams::gamma)
      .def_readwrite("lip", &EtmParams::lip)
      .def_readwrite("mu", &EtmParams::mu)
      .def_readwrite("eps", &EtmParams::eps)
      .def_readwrite("lam", &EtmParams::lambda)
      .def_readwrite("n_out", &EtmParams::n_out)
      .def_readwrite("phi0_init", &EtmParams::phi0_init)
      .def_readwrite("phi1_init", &EtmParams::phi1_init)
      .def_readwrite("tau_masp", &EtmParams::tau_masp)
      .def_readwrite("d_min", &EtmParams::d_min)
      .def("gamma_tilde", &EtmParams::gamma_tilde);

  m.def("phi_derivative", &phi_derivative, py::arg("l"), py::arg("phi"), py::arg("params"));
  m.def(
      "integrate_phi",
      [](const EtmParams& p, int l, double horizon, double step) {
        return integrate_phi(p, l, horizon, step).values();
      },
      py::arg("params"), py::arg("l"), py::arg("horizon"), py::arg("step") = 1e-5);
  m.def(
      "design_agent",
      [](const EtmParams& p, std::optional<double> tau_miet, double step) {
        DesignOptions o;
        o.step = step;
        o.tau_miet = tau_miet;
        const auto d = design_agent(p, o);
        py::dict out;
        out["tau_max"] = d.timing.tau_max;
        out["tau_max_bound"] = d.timing.tau_max_bound;
        out["tau_mad"] = d.timing.tau_mad;
        out["tau_miet"] = d.timing.tau_miet;
        out["certified"] = certify_timing(d).ok();
        return out;
      },
      py::arg("params"), py::arg("tau_miet") = py::none(), py::arg("step") = 1e-5);

  m.def("design", &design, py::arg("config_json"));
  m.def("simulate", &simulate, py::arg("config_json"), py::arg("seed") = py::none(),
        py::arg("horizon") = py::none(), py::arg("mode") = py::none(), py::arg("verify") = false,
        py::arg("full_state") = false);
  m.def("verify", &verify, py::arg("config_json"), py::arg("trace_csv"));
  m.def("curve", &curve, py::arg("config_json"), py::arg("lambdas"));
}
