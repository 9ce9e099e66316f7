#include "petc/scenario_io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <tuple>

namespace petc {

using nlohmann::json;

namespace {

template <typename T>
T get_or(const json& j, const char* key, T fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config key '") + key + "': " + e.what());
  }
}

std::size_t parse_degree_key(const std::string& k) {
  std::size_t v = 0;
  auto [p, ec] = std::from_chars(k.data(), k.data() + k.size(), v);
  if (ec != std::errc() || p != k.data() + k.size()) {
    throw ConfigError("expected an out-degree key, got '" + k + "'");
  }
  return v;
}

}  // namespace

std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

ScenarioFile parse_scenario(const json& j) {
  ScenarioFile f;
  try {
    const json& topo = j.at("topology");
    const auto n = topo.at("n_agents").get<std::size_t>();
    std::vector<Edge> edges;
    for (const auto& e : topo.at("edges")) edges.emplace_back(e.at(0).get<std::size_t>(), e.at(1).get<std::size_t>());
    const bool one_based = get_or(topo, "one_based", false);
    if (get_or(topo, "undirected", true)) {
      f.topology = GraphTopology::from_undirected(n, edges, one_based);
    } else {
      if (one_based) {
        for (auto& [a, b] : edges) {
          if (a == 0 || b == 0) throw ConfigError("one-based edge list contains 0");
          --a;
          --b;
        }
      }
      f.topology = GraphTopology(n, edges);
    }

    const json model = j.value("model", json::object());
    const auto type = get_or<std::string>(model, "type", "consensus");
    if (type != "consensus") throw ConfigError("unknown model type '" + type + "'");
    f.consensus.delta = get_or(model, "delta", f.consensus.delta);
    f.consensus.a = get_or(model, "a", f.consensus.a);
    f.consensus.alpha = get_or(model, "alpha", f.consensus.alpha);
    f.consensus.mu_convention =
        parse_mu_convention(get_or<std::string>(model, "mu_convention", "per_neighbor"));

    const json etm = j.value("etm", json::object());
    EtmSettings& s = f.etm;
    s.eps = get_or(etm, "eps", s.eps);
    s.lambda = get_or(etm, "lambda", s.lambda);
    s.phi0_init = get_or(etm, "phi0_init", s.phi0_init);
    s.phi1_init = get_or(etm, "phi1_init", s.phi1_init);
    s.eps_eta = get_or(etm, "eps_eta", s.eps_eta);
    s.tau_masp = get_or(etm, "tau_masp", s.tau_masp);
    s.d_min = get_or(etm, "d_min", s.d_min);
    s.step = get_or(etm, "step", s.step);
    if (etm.contains("tau_miet")) {
      const json& tm = etm.at("tau_miet");
      if (tm.is_number()) {
        s.tau_miet_all = tm.get<double>();
      } else if (tm.is_array()) {
        s.tau_miet_per_agent = tm.get<std::vector<double>>();
        if (s.tau_miet_per_agent.size() != n) throw ConfigError("tau_miet array needs one value per agent");
      } else if (tm.is_object()) {
        for (const auto& [k, v] : tm.items()) s.tau_miet_by_out_degree[parse_degree_key(k)] = v.get<double>();
      } else {
        throw ConfigError("tau_miet must be a number, an array or an object");
      }
    }

    const json sc = j.value("scenario", json::object());
    f.horizon = get_or(sc, "horizon", f.horizon);
    f.seed = get_or<std::uint64_t>(sc, "seed", f.seed);
    f.mode = parse_trigger_mode(get_or<std::string>(sc, "mode", "online"));
    if (sc.contains("x0")) {
      const json& x0 = sc.at("x0");
      if (x0.is_array()) {
        f.x0 = x0.get<std::vector<double>>();
        if (f.x0.size() != n) throw ConfigError("x0 needs one value per agent");
      } else {
        const auto range = x0.at("uniform").get<std::vector<double>>();
        if (range.size() != 2 || !(range[0] <= range[1])) throw ConfigError("x0.uniform must be [lo, hi]");
        f.x0_lo = range[0];
        f.x0_hi = range[1];
      }
    }
    f.eta0 = get_or(sc, "eta0", f.eta0);
    if (!(f.eta0 >= 0.0)) throw ConfigError("eta0 must be non-negative");
    const auto sampling = get_or<std::string>(sc, "sampling", "uniform");
    if (sampling == "uniform") {
      f.sampling.kind = SamplingSpec::Kind::uniform;
    } else if (sampling == "periodic") {
      f.sampling.kind = SamplingSpec::Kind::periodic;
    } else {
      throw ConfigError("unknown sampling distribution '" + sampling + "'");
    }
    if (sc.contains("delay")) {
      const json& d = sc.at("delay");
      if (d.is_string()) {
        const auto kind = d.get<std::string>();
        if (kind == "uniform") {
          f.delay.kind = DelaySpec::Kind::uniform;
        } else if (kind == "zero") {
          f.delay.kind = DelaySpec::Kind::zero;
        } else {
          throw ConfigError("unknown delay distribution '" + kind + "'");
        }
      } else {
        f.delay.kind = DelaySpec::Kind::fraction;
        f.delay.fraction = d.at("fraction").get<double>();
      }
    }
    const json trace = sc.value("trace", json::object());
    f.trace_stride = get_or(trace, "stride", f.trace_stride);
    f.full_state = get_or(trace, "full_state", f.full_state);
    const json mon = sc.value("monitor", json::object());
    f.monitor.flow_stride = get_or(mon, "flow_stride", f.monitor.flow_stride);

    if (j.contains("reference_timing")) {
      for (const auto& [k, v] : j.at("reference_timing").items()) {
        f.reference_timing[parse_degree_key(k)] = {v.at(0).get<double>(), v.at(1).get<double>()};
      }
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed config: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  return f;
}

ScenarioFile load_scenario(const std::filesystem::path& path) {
  json j;
  try {
    j = json::parse(read_file(path));
  } catch (const json::parse_error& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  return parse_scenario(j);
}

Eigen::VectorXd initial_x(const ScenarioFile& f, std::uint64_t seed) {
  const std::size_t n = f.topology.size();
  Eigen::VectorXd x(static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) {
    if (!f.x0.empty()) {
      x(static_cast<Eigen::Index>(i)) = f.x0[i];
    } else {
      Rng rng(seed, i, Stream::initial);
      x(static_cast<Eigen::Index>(i)) = rng.uniform(f.x0_lo, f.x0_hi);
    }
  }
  return x;
}

EtmParams etm_params_for(const ScenarioFile& f, const SystemModel& model, std::size_t i) {
  EtmParams p;
  p.gamma = model.gamma(i);
  p.lip = model.lipschitz(i);
  p.mu = model.mu(i);
  p.eps = f.etm.eps;
  p.lambda = f.etm.lambda;
  p.n_out = std::max<std::size_t>(1, model.topology().out_degree(i));
  p.phi0_init = f.etm.phi0_init;
  p.phi1_init = f.etm.phi1_init;
  p.tau_masp = f.etm.tau_masp;
  p.d_min = f.etm.d_min;
  return p;
}

std::optional<double> tau_miet_for(const ScenarioFile& f, const SystemModel& model, std::size_t i) {
  if (!f.etm.tau_miet_per_agent.empty()) return f.etm.tau_miet_per_agent.at(i);
  auto it = f.etm.tau_miet_by_out_degree.find(model.topology().out_degree(i));
  if (it != f.etm.tau_miet_by_out_degree.end()) return it->second;
  return f.etm.tau_miet_all;
}

std::vector<std::shared_ptr<const AgentDesign>> design_all(const ScenarioFile& f,
                                                           const SystemModel& model) {
  using Key = std::tuple<double, double, double, std::size_t, std::optional<double>>;
  std::map<Key, std::shared_ptr<const AgentDesign>> cache;
  std::vector<std::shared_ptr<const AgentDesign>> out;
  for (std::size_t i = 0; i < model.size(); ++i) {
    const EtmParams p = etm_params_for(f, model, i);
    const auto miet = tau_miet_for(f, model, i);
    const Key key{p.gamma, p.lip, p.mu, p.n_out, miet};
    auto it = cache.find(key);
    if (it == cache.end()) {
      DesignOptions opts;
      opts.step = f.etm.step;
      opts.tau_miet = miet;
      try {
        it = cache.emplace(key, std::make_shared<const AgentDesign>(design_agent(p, opts))).first;
      } catch (const DesignError& e) {
        throw DesignError("agent " + std::to_string(i) + ": " + e.what());
      }
    }
    out.push_back(it->second);
  }
  return out;
}

Scenario build_scenario(const ScenarioFile& f, const RunOverrides& o) {
  Scenario sc;
  sc.model = std::make_shared<const ConsensusModel>(f.topology, f.consensus);
  ScenarioConfig& c = sc.config;
  c.designs = design_all(f, *sc.model);
  c.mode = o.mode.value_or(f.mode);
  c.eps_eta = f.etm.eps_eta;
  c.seed = o.seed.value_or(f.seed);
  c.horizon = o.horizon.value_or(f.horizon);
  c.x0 = initial_x(f, c.seed);
  c.eta0.assign(f.topology.size(), f.eta0);
  c.sampling = f.sampling;
  c.delay = f.delay;
  c.trace.stride = f.trace_stride;
  c.trace.store_states = f.full_state;
  try {
    sc.system = std::make_shared<const HybridSystem>(make_system(c, sc.model));
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  return sc;
}

namespace {

json certificate_json(const TimingCertificate& r) {
  return {{"ok", r.ok()},
          {"ordering_ok", r.ordering_ok},
          {"tau_max_ok", r.tau_max_ok},
          {"tau_mad_ok", r.tau_mad_ok},
          {"spacing_ok", r.spacing_ok},
          {"tau_max_margin", r.tau_max_margin},
          {"tau_mad_margin", r.tau_mad_margin}};
}

// Half a unit in the last printed digit of a reference value.
double printed_tolerance(double v) {
  const std::string s = format_double(v);
  const auto dot = s.find('.');
  const int digits = dot == std::string::npos ? 0 : static_cast<int>(s.size() - dot - 1);
  return 0.5 * std::pow(10.0, -digits);
}

}  // namespace

json design_report(const ScenarioFile& f) {
  const ConsensusModel model(f.topology, f.consensus);
  const auto designs = design_all(f, model);
  json agents = json::array();
  bool all_ok = true;
  for (std::size_t i = 0; i < designs.size(); ++i) {
    const auto& d = *designs[i];
    const auto cert = certify_timing(d);
    all_ok = all_ok && cert.ok();
    agents.push_back({{"agent", i},
                      {"n_out", model.topology().out_degree(i)},
                      {"gamma", d.params.gamma},
                      {"mu", d.params.mu},
                      {"c", f.consensus.c(model.topology().out_degree(i))},
                      {"tau_max", d.timing.tau_max},
                      {"tau_max_bound", d.timing.tau_max_bound},
                      {"tau_mad", d.timing.tau_mad},
                      {"tau_miet", d.timing.tau_miet},
                      {"certificate", certificate_json(cert)}});
  }
  json out = {{"mu_convention", to_string(f.consensus.mu_convention)},
              {"agents", agents},
              {"certified", all_ok}};

  if (!f.reference_timing.empty()) {
    json refs = json::array();
    for (const auto& [n_out, ref] : f.reference_timing) {
      json entry = {{"n_out", n_out}, {"reference", {ref.first, ref.second}}};
      for (MuConvention conv : {MuConvention::per_neighbor, MuConvention::aggregate}) {
        ConsensusParams cp = f.consensus;
        cp.mu_convention = conv;
        EtmParams p;
        p.gamma = cp.gamma(n_out);
        p.lip = 0.0;
        p.mu = cp.mu(n_out);
        p.eps = f.etm.eps;
        p.lambda = f.etm.lambda;
        p.n_out = n_out;
        p.phi0_init = f.etm.phi0_init;
        p.phi1_init = f.etm.phi1_init;
        p.tau_masp = f.etm.tau_masp;
        p.d_min = f.etm.d_min;
        json c = {{"mu", p.mu}};
        const double grid[] = {p.lambda};
        const TradeoffCurve curve = tradeoff_curve(p, grid, f.etm.step);
        if (curve.rows.empty()) {
          c["verdict"] = "discrepancy";
          c["error"] = curve.warnings.empty() ? "design failed" : curve.warnings.front();
        } else {
          const double tmax = curve.rows.front().tau_max;
          const double tmad = curve.rows.front().tau_mad;
          const bool match = std::abs(tmax - ref.first) <= printed_tolerance(ref.first) &&
                             std::abs(tmad - ref.second) <= printed_tolerance(ref.second);
          c["tau_max"] = tmax;
          c["tau_mad"] = tmad;
          c["verdict"] = match ? "match" : "discrepancy";
        }
        entry[to_string(conv)] = c;
      }
      refs.push_back(entry);
    }
    out["reference_comparison"] = refs;
  }
  return out;
}

namespace {

constexpr const char* kTraceVersion = "# petc-trace v1";

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == sep) {
      out.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  out.push_back(cur);
  return out;
}

double parse_double(const std::string& s) {
  double v = 0.0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size()) throw ConfigError("bad number '" + s + "' in trace");
  return v;
}

std::size_t parse_index(const std::string& s) {
  if (s.empty()) return kNoAgent;
  std::size_t v = 0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size()) throw ConfigError("bad index '" + s + "' in trace");
  return v;
}

RowKind parse_row_kind(const std::string& s) {
  if (s == "flow") return RowKind::flow;
  if (s == "G_a") return RowKind::transmit;
  if (s == "G_b") return RowKind::sample;
  if (s == "G_c") return RowKind::receive;
  throw ConfigError("unknown row kind '" + s + "' in trace");
}

std::vector<std::string> trace_columns(const HybridSystem& sys, bool full_state) {
  const auto& l = *sys.layout();
  std::vector<std::string> cols{"t", "kind", "agent", "peer"};
  for (std::size_t k = 0; k < l.nx_total; ++k) cols.push_back("x" + std::to_string(k));
  for (std::size_t i = 0; i < l.n; ++i) cols.push_back("eta" + std::to_string(i));
  cols.push_back("U");
  cols.push_back("V");
  if (!full_state) return cols;
  for (std::size_t i = 0; i < l.n; ++i) cols.push_back("tau" + std::to_string(i));
  for (std::size_t i = 0; i < l.n; ++i) cols.push_back("sigma" + std::to_string(i));
  for (std::size_t k = 0; k < l.ny_total; ++k) cols.push_back("r" + std::to_string(k));
  for (const auto& [i, m] : sys.topology().edges()) {
    const std::string tag = std::to_string(i) + "_" + std::to_string(m);
    for (std::size_t k = 0; k < l.ny[i]; ++k) cols.push_back("e" + tag + "_" + std::to_string(k));
    cols.push_back("ell" + tag);
    cols.push_back("b" + tag);
  }
  cols.push_back("flushed");
  cols.push_back("eta_inc");
  return cols;
}

std::string join(const std::vector<std::string>& v, char sep) {
  std::string out;
  for (std::size_t k = 0; k < v.size(); ++k) {
    if (k) out.push_back(sep);
    out += v[k];
  }
  return out;
}

}  // namespace

std::string trace_csv(const SimTrace& trace, const HybridSystem& sys, bool full_state) {
  const auto cols = trace_columns(sys, full_state);
  std::string out;
  out += kTraceVersion;
  out += full_state ? " full-state\n" : "\n";
  out += join(cols, ',');
  out += '\n';
  const auto idx = [](std::size_t v) { return v == kNoAgent ? std::string() : std::to_string(v); };
  for (const auto& row : trace.rows) {
    std::vector<std::string> f;
    f.reserve(cols.size());
    f.push_back(format_double(row.t));
    f.emplace_back(to_string(row.kind));
    f.push_back(idx(row.agent));
    f.push_back(idx(row.peer));
    for (Eigen::Index k = 0; k < row.x.size(); ++k) f.push_back(format_double(row.x(k)));
    for (double e : row.eta) f.push_back(format_double(e));
    f.push_back(format_double(row.U));
    f.push_back(format_double(row.V));
    if (full_state) {
      if (!row.state) throw std::invalid_argument("full-state trace requested but rows carry no state");
      const HybridState& s = *row.state;
      for (double v : s.tau) f.push_back(format_double(v));
      for (double v : s.sigma) f.push_back(format_double(v));
      for (Eigen::Index k = 0; k < s.r.size(); ++k) f.push_back(format_double(s.r(k)));
      for (const auto& [i, m] : sys.topology().edges()) {
        const auto blk = s.e_block(i, m);
        for (Eigen::Index k = 0; k < blk.size(); ++k) f.push_back(format_double(blk(k)));
        f.push_back(std::to_string(s.ell_at(i, m)));
        f.push_back(std::to_string(s.b_at(i, m)));
      }
      std::vector<std::string> fl;
      for (std::size_t j : row.flushed) fl.push_back(std::to_string(j));
      f.push_back(join(fl, ';'));
      f.push_back(format_double(row.eta_increment));
    }
    out += join(f, ',');
    out += '\n';
  }
  return out;
}

SimTrace parse_trace_csv(const std::string& text, const HybridSystem& sys) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line.rfind(kTraceVersion, 0) != 0) {
    throw ConfigError("not a petc trace (missing version line)");
  }
  if (line.find("full-state") == std::string::npos) {
    throw ConfigError("trace was written without full-state columns; re-run with full_state");
  }
  const auto cols = trace_columns(sys, true);
  if (!std::getline(in, line) || line != join(cols, ',')) {
    throw ConfigError("trace columns do not match the configured system");
  }
  const std::size_t n = sys.size();
  SimTrace tr;
  tr.n_agents = n;
  for (std::size_t i = 0; i < n; ++i) {
    tr.timing.push_back(sys.trigger(i).timing());
    tr.tau_masp.push_back(sys.trigger(i).params().tau_masp);
    tr.d_min.push_back(sys.trigger(i).params().d_min);
  }
  std::vector<std::uint64_t> pending(n * n, 0);
  std::vector<double> pending_sent(n * n, 0.0);
  std::uint64_t next_packet = 1;
  const auto& l = *sys.layout();

  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto f = split(line, ',');
    if (f.size() != cols.size()) throw ConfigError("trace row has " + std::to_string(f.size()) + " fields");
    std::size_t c = 0;
    TraceRow row;
    row.t = parse_double(f[c++]);
    row.kind = parse_row_kind(f[c++]);
    row.agent = parse_index(f[c++]);
    row.peer = parse_index(f[c++]);
    HybridState s(sys.layout());
    for (std::size_t k = 0; k < l.nx_total; ++k) s.x(static_cast<Eigen::Index>(k)) = parse_double(f[c++]);
    for (std::size_t i = 0; i < n; ++i) s.eta[i] = parse_double(f[c++]);
    row.U = parse_double(f[c++]);
    row.V = parse_double(f[c++]);
    for (std::size_t i = 0; i < n; ++i) s.tau[i] = parse_double(f[c++]);
    for (std::size_t i = 0; i < n; ++i) s.sigma[i] = parse_double(f[c++]);
    for (std::size_t k = 0; k < l.ny_total; ++k) s.r(static_cast<Eigen::Index>(k)) = parse_double(f[c++]);
    for (const auto& [i, m] : sys.topology().edges()) {
      auto blk = s.e_block(i, m);
      for (Eigen::Index k = 0; k < blk.size(); ++k) blk(k) = parse_double(f[c++]);
      s.ell_at(i, m) = static_cast<std::uint8_t>(parse_index(f[c++]));
      s.b_at(i, m) = static_cast<std::uint8_t>(parse_index(f[c++]));
    }
    if (!f[c].empty()) {
      for (const auto& j : split(f[c], ';')) row.flushed.push_back(parse_index(j));
    }
    ++c;
    row.eta_increment = parse_double(f[c++]);
    row.x = s.x;
    row.eta = s.eta;
    row.state = std::move(s);

    if (row.kind == RowKind::transmit || row.kind == RowKind::sample) {
      const std::size_t i = row.agent;
      if (i >= n) throw ConfigError("jump row without a valid agent");
      for (std::size_t j : row.flushed) tr.processings.push_back({j, i, pending[j * n + i], pending_sent[j * n + i], row.t});
      const bool tx = row.kind == RowKind::transmit;
      tr.samplings.push_back({i, row.t, tx});
      if (tx) {
        const std::uint64_t id = next_packet++;
        for (std::size_t m : sys.topology().out_neighbors(i)) {
          pending[i * n + m] = id;
          pending_sent[i * n + m] = row.t;
        }
        tr.transmissions.push_back({i, row.t, std::numeric_limits<double>::quiet_NaN(), row.eta_increment, id});
      }
    } else if (row.kind == RowKind::receive) {
      if (row.agent >= n || row.peer >= n) throw ConfigError("delivery row without a valid link");
      tr.deliveries.push_back({row.agent, row.peer, pending[row.agent * n + row.peer],
                               pending_sent[row.agent * n + row.peer], row.t});
    }
    tr.rows.push_back(std::move(row));
  }
  if (tr.rows.empty()) throw ConfigError("trace has no rows");
  tr.horizon = tr.rows.back().t;
  tr.final_state = tr.rows.back().state;
  return tr;
}

std::string phi_table_csv(const AgentDesign& d) {
  std::string out = "tau,phi0,phi1\n";
  const auto& p0 = d.phi.phi0.values();
  const auto& p1 = d.phi.phi1.values();
  for (std::size_t k = 0; k < p0.size(); ++k) {
    out += format_double(static_cast<double>(k) * d.phi.step());
    out += ',';
    out += format_double(p0[k]);
    out += ',';
    if (k < p1.size()) out += format_double(p1[k]);
    out += '\n';
  }
  return out;
}

std::string curve_csv(const std::vector<std::pair<std::size_t, TradeoffCurve>>& curves,
                      double tau_masp) {
  std::string out = "n_out,lambda,tau_max,tau_mad,tau_miet\n";
  for (const auto& [n_out, curve] : curves) {
    for (const auto& r : curve.rows) {
      out += std::to_string(n_out) + ',' + format_double(r.lambda) + ',' + format_double(r.tau_max) +
             ',' + format_double(r.tau_mad) + ',' + format_double(r.tau_max - tau_masp) + '\n';
    }
  }
  return out;
}

namespace {

json num_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

json violations_json(const std::vector<Violation>& list) {
  json out = json::array();
  for (const auto& v : list) {
    json e = {{"t", v.t}, {"what", v.what}, {"value", num_or_null(v.value)}, {"limit", num_or_null(v.limit)}};
    if (v.agent != kNoAgent) e["agent"] = v.agent;
    out.push_back(e);
  }
  return out;
}

}  // namespace

json summary_json(const SimTrace& trace, const Metrics& m) {
  json agents = json::array();
  for (std::size_t i = 0; i < m.agents.size(); ++i) {
    const auto& a = m.agents[i];
    agents.push_back({{"agent", i},
                      {"tau_miet", trace.timing[i].tau_miet},
                      {"tau_mad", trace.timing[i].tau_mad},
                      {"transmissions", a.transmissions},
                      {"samplings", a.samplings},
                      {"min_iet", num_or_null(a.min_iet)},
                      {"mean_iet", num_or_null(a.mean_iet)},
                      {"max_iet", num_or_null(a.max_iet)}});
  }
  return {{"seed", trace.seed},
          {"horizon", trace.horizon},
          {"transmissions", trace.transmissions.size()},
          {"deliveries", trace.deliveries.size()},
          {"agents", agents},
          {"initial_spread", m.initial_spread},
          {"final_spread", m.final_spread},
          {"time_to_1pct", num_or_null(m.time_to_1pct)},
          {"max_V_increase", m.max_V_increase},
          {"flags", m.flags}};
}

json report_json(const MonitorReport& r) {
  const auto& j = r.jumps;
  const auto& f = r.flow;
  const auto& t = r.timing;
  return {{"passed", r.passed()},
          {"jumps",
           {{"ok", j.ok()},
            {"checked", {{"G_a", j.checked[0]}, {"G_b", j.checked[1]}, {"G_c", j.checked[2]}}},
            {"violations", j.violations},
            {"worst_relative_increase", num_or_null(j.worst_rel_increase)},
            {"G_c_max_abs_change", j.gc_max_abs},
            {"G_b_early", j.gb_early},
            {"G_b_early_own_max_abs_change", j.gb_early_own_max_abs},
            {"G_b_early_clean_max_abs_change", j.gb_early_clean_max_abs},
            {"G_b_early_with_buffered_packets", j.gb_early_with_flush},
            {"strict_decreases", j.strict_decreases},
            {"list", violations_json(j.list)}}},
          {"flow",
           {{"ok", f.ok()},
            {"intervals", f.intervals},
            {"skipped_short", f.skipped_short},
            {"hard_violations", f.hard_violations},
            {"worst_etm_excess", num_or_null(f.worst_etm_excess)},
            {"supply_rate_advisory", f.supply_advisory},
            {"supply_violations", f.supply_violations},
            {"downgraded_to_warnings", f.downgraded},
            {"worst_supply_excess", num_or_null(f.worst_supply_excess)},
            {"list", violations_json(f.list)}}},
          {"timing",
           {{"ok", t.ok()},
            {"iet_violations", t.iet_violations},
            {"delay_violations", t.delay_violations},
            {"off_sample_transmissions", t.off_sample_transmissions},
            {"order_violations", t.order_violations},
            {"zeno_violations", t.zeno_violations},
            {"unprocessed", t.unprocessed},
            {"min_iet_margin", num_or_null(t.min_iet_margin)},
            {"max_delay_excess", num_or_null(t.max_delay_excess)},
            {"list", violations_json(t.list)}}}};
}

void write_atomic(const std::filesystem::path& path, const std::string& content) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
    out << content;
    if (!out.flush()) throw std::runtime_error("write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace petc
