#include "petc/verification.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <stdexcept>

namespace petc {

namespace {

// Event times sit on a 1e-12 s grid; timing checks allow two grid units.
constexpr double kTimeSlack = 2e-12;
constexpr std::size_t kMaxSubsetBits = 16;

void add_violation(std::vector<Violation>& list, std::size_t cap, Violation v) {
  if (list.size() < cap) list.push_back(std::move(v));
}

}  // namespace

double w_tilde(double lambda, std::span<const std::uint8_t> ell, std::span<const std::uint8_t> b,
               const Eigen::VectorXd& y, const Eigen::VectorXd& e_out, const Eigen::VectorXd& r,
               std::span<const std::size_t> out_neighbors) {
  const auto ny = y.size();
  std::vector<std::size_t> pending;
  for (std::size_t m : out_neighbors) {
    if (ell[m] || b[m]) pending.push_back(m);
  }
  if (pending.size() > kMaxSubsetBits) {
    throw std::invalid_argument("w_tilde subset enumeration limited to 16 pending links");
  }
  std::vector<Eigen::VectorXd> s(pending.size());
  Eigen::VectorXd full = e_out;
  for (std::size_t k = 0; k < pending.size(); ++k) {
    const auto off = static_cast<Eigen::Index>(pending[k]) * ny;
    s[k] = r - y - e_out.segment(off, ny);
    full.segment(off, ny) += s[k];
  }
  double best = 0.0;
  const std::size_t subsets = std::size_t{1} << pending.size();
  for (std::size_t mask = 0; mask < subsets; ++mask) {
    Eigen::VectorXd v = e_out;
    for (std::size_t k = 0; k < pending.size(); ++k) {
      if (mask & (std::size_t{1} << k)) {
        v.segment(static_cast<Eigen::Index>(pending[k]) * ny, ny) += s[k];
      }
    }
    best = std::max(best, v.norm());
  }
  return std::max(full.norm(), lambda * best);
}

int p_flag(std::span<const std::uint8_t> ell, std::span<const std::uint8_t> b,
           std::span<const std::size_t> out_neighbors) {
  for (std::size_t m : out_neighbors) {
    if (ell[m] || b[m]) return 1;
  }
  return 0;
}

double phi_bar(int l, double tau, double sigma, const AgentDesign& d) {
  const double miet = d.timing.tau_miet;
  return tau - sigma <= miet ? d.phi.phi(l, tau) : d.phi.phi(l, miet + sigma);
}

StorageEvaluator::StorageEvaluator(const HybridSystem& sys) : sys_(sys) {
  for (std::size_t i = 0; i < sys_.size(); ++i) {
    const auto& tf = sys_.trigger(i);
    if (tf.design().phi.phi0.horizon() + 1e-12 < tf.timing().tau_miet + tf.params().tau_masp) {
      throw std::invalid_argument("phi table of agent " + std::to_string(i) +
                                  " does not cover tau_MIET + tau_MASP");
    }
  }
}

double StorageEvaluator::w_tilde(const HybridState& s, std::size_t i) const {
  const std::size_t n = s.size();
  const std::span<const std::uint8_t> ell(s.ell.data() + i * n, n);
  const std::span<const std::uint8_t> b(s.b.data() + i * n, n);
  const auto& out = sys_.topology().out_neighbors(i);
  return petc::w_tilde(sys_.trigger(i).params().lambda, ell, b, sys_.output(s, i), s.e_out(i),
                       s.r_block(i), out);
}

int StorageEvaluator::p(const HybridState& s, std::size_t i) const {
  const std::size_t n = s.size();
  return p_flag({s.ell.data() + i * n, n}, {s.b.data() + i * n, n},
                sys_.topology().out_neighbors(i));
}

double StorageEvaluator::component(const HybridState& s, std::size_t i) const {
  const auto& d = sys_.trigger(i).design();
  const int l = p(s, i);
  const double w = w_tilde(s, i);
  double acc = s.eta[i];
  if (w != 0.0) acc += d.params.gamma_tilde(l) * phi_bar(l, s.tau[i], s.sigma[i], d) * w * w;
  return acc;
}

double StorageEvaluator::storage(const HybridState& s) const {
  double u = sys_.model().storage(s.x);
  for (std::size_t i = 0; i < s.size(); ++i) u += component(s, i);
  return u;
}

double StorageEvaluator::etm_flow_bound(const HybridState& s, const Inputs& v) const {
  const auto& model = sys_.model();
  double acc = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    const auto& tf = sys_.trigger(i);
    const auto& p = tf.params();
    const Eigen::VectorXd view = sys_.controller_view(s, i);
    const Eigen::VectorXd vi = v.empty() ? Eigen::VectorXd() : v.at(i);
    const double h = model.H(i, s.x, view, vi);
    const double hl = model.H_lower(i, view);
    const double n_out = static_cast<double>(p.n_out);
    const double g = p.gamma_tilde(p_flag({s.ell.data() + i * s.size(), s.size()},
                                          {s.b.data() + i * s.size(), s.size()},
                                          sys_.topology().out_neighbors(i)));
    const double w = w_tilde(s, i);
    acc += -g * g * w * w + p.mu * p.eps * n_out * h * h + model.varsigma(i, view) +
           (1.0 - p.eps) * p.mu * n_out * hl * hl - tf.leakage(s.eta[i]);
  }
  return acc;
}

double StorageEvaluator::supply_bound(const HybridState& s, const Inputs& v) const {
  double acc = sys_.model().supply(s, v);
  for (std::size_t i = 0; i < s.size(); ++i) acc -= sys_.trigger(i).leakage(s.eta[i]);
  return acc;
}

StorageMonitor::StorageMonitor(const StorageEvaluator& ev, MonitorOptions opts)
    : ev_(ev), opts_(opts) {
  if (!(opts_.flow_stride > 0.0)) throw std::invalid_argument("flow stride must be positive");
  flow_.supply_advisory = ev_.system().model().supply_rate_advisory();
}

void StorageMonitor::on_flow(double t0, const HybridState& s0, double t1, const HybridState& s1) {
  const double total = t1 - t0;
  if (!(total > 0.0)) return;
  if (total < opts_.min_interval) {
    ++flow_.skipped_short;
    return;
  }
  const auto steps = std::max<std::size_t>(
      1, static_cast<std::size_t>(std::llround(total / opts_.flow_stride)));
  const double h = total / static_cast<double>(steps);
  HybridState a = s0;
  double ta = t0;
  for (std::size_t k = 1; k <= steps; ++k) {
    const double tb = k == steps ? t1 : t0 + static_cast<double>(k) * h;
    HybridState b = k == steps ? s1 : ev_.system().flow(s0, static_cast<double>(k) * h);
    check_interval(ta, a, tb, b);
    a = std::move(b);
    ta = tb;
  }
}

void StorageMonitor::check_interval(double ta, const HybridState& a, double tb,
                                    const HybridState& b) {
  const double dt = tb - ta;
  ++flow_.intervals;
  const double va = ev_.system().model().storage(a.x);
  const double vb = ev_.system().model().storage(b.x);
  const double ua = ev_.storage(a);
  const double ub = ev_.storage(b);

  const double etm_rate = ((ub - vb) - (ua - va)) / dt;
  const double etm_rhs = 0.5 * (ev_.etm_flow_bound(a) + ev_.etm_flow_bound(b));
  const double etm_excess = etm_rate - etm_rhs - (1e-6 + 1e-3 * std::abs(etm_rhs));
  flow_.worst_etm_excess = std::max(flow_.worst_etm_excess, etm_excess);
  if (etm_excess > 0.0) {
    ++flow_.hard_violations;
    add_violation(flow_.list, opts_.max_listed,
                  {ta, "flow: d/dt(U - V) above the trigger-design bound", kNoAgent, etm_rate, etm_rhs});
  }

  const double rate = (ub - ua) / dt;
  const double rhs = 0.5 * (ev_.supply_bound(a) + ev_.supply_bound(b));
  const double excess = rate - rhs - (1e-6 + 1e-3 * std::abs(rhs));
  flow_.worst_supply_excess = std::max(flow_.worst_supply_excess, excess);
  if (excess > 0.0) {
    ++flow_.supply_violations;
    if (flow_.supply_advisory) {
      ++flow_.downgraded;
    } else {
      ++flow_.hard_violations;
      add_violation(flow_.list, opts_.max_listed,
                    {ta, "flow: dU/dt above the supply rate", kNoAgent, rate, rhs});
    }
  }
}

void StorageMonitor::on_jump(double t, JumpKind kind, std::size_t agent, std::size_t,
                             const HybridState& pre, const HybridState& post,
                             const JumpInfo& info) {
  ++jumps_.checked[static_cast<int>(kind)];
  const double u0 = ev_.storage(pre);
  const double u1 = ev_.storage(post);
  const double du = u1 - u0;
  const double tol = 1e-8 * (1.0 + std::abs(u0));
  jumps_.worst_rel_increase = std::max(jumps_.worst_rel_increase, du / (1.0 + std::abs(u0)));
  auto fail = [&](const char* what, double value) {
    ++jumps_.violations;
    add_violation(jumps_.list, opts_.max_listed, {t, what, agent, value, tol});
  };
  if (du > tol) fail("jump: U increased", du);

  if (kind == JumpKind::receive) {
    jumps_.gc_max_abs = std::max(jumps_.gc_max_abs, std::abs(du));
    if (std::abs(du) > tol) fail("G_c: U changed", du);
  } else if (kind == JumpKind::sample && pre.tau[agent] <= ev_.system().trigger(agent).timing().tau_miet) {
    ++jumps_.gb_early;
    const double own = ev_.component(post, agent) - ev_.component(pre, agent);
    jumps_.gb_early_own_max_abs = std::max(jumps_.gb_early_own_max_abs, std::abs(own));
    if (std::abs(own) > tol) fail("G_b (tau <= tau_MIET): own storage component changed", own);
    if (info.flushed.empty()) {
      jumps_.gb_early_clean_max_abs = std::max(jumps_.gb_early_clean_max_abs, std::abs(du));
      if (std::abs(du) > tol) fail("G_b (tau <= tau_MIET): U changed", du);
    } else {
      ++jumps_.gb_early_with_flush;
    }
    if (du < -tol) ++jumps_.strict_decreases;
  }
}

void reconstruct_pre_states(SimTrace& trace, const HybridSystem& sys) {
  const HybridState* prev = nullptr;
  double prev_t = 0.0;
  for (auto& row : trace.rows) {
    if (!row.state) throw std::invalid_argument("trace rows carry no states");
    if (row.kind != RowKind::flow && !row.pre) {
      if (!prev) throw std::invalid_argument("trace starts with a jump row");
      row.pre = row.t > prev_t ? sys.flow(*prev, row.t - prev_t) : *prev;
    }
    prev = &*row.state;
    prev_t = row.t;
  }
}

namespace {

JumpKind jump_kind(RowKind k) {
  switch (k) {
    case RowKind::transmit:
      return JumpKind::transmit;
    case RowKind::sample:
      return JumpKind::sample;
    default:
      return JumpKind::receive;
  }
}

void require_states(const SimTrace& trace) {
  for (const auto& row : trace.rows) {
    if (!row.state || (row.kind != RowKind::flow && !row.pre)) {
      throw std::invalid_argument("replay checks need a trace recorded with full states");
    }
  }
}

}  // namespace

JumpCheck check_jumps(const SimTrace& trace, const StorageEvaluator& ev, const MonitorOptions& opts) {
  require_states(trace);
  StorageMonitor mon(ev, opts);
  for (const auto& row : trace.rows) {
    if (row.kind == RowKind::flow) continue;
    JumpInfo info;
    info.flushed = row.flushed;
    info.eta_increment = row.eta_increment;
    mon.on_jump(row.t, jump_kind(row.kind), row.agent, row.peer, *row.pre, *row.state, info);
  }
  return mon.jumps();
}

FlowCheck check_flow(const SimTrace& trace, const StorageEvaluator& ev, const MonitorOptions& opts) {
  require_states(trace);
  StorageMonitor mon(ev, opts);
  const HybridState* prev = nullptr;
  double prev_t = 0.0;
  for (const auto& row : trace.rows) {
    if (prev) {
      const HybridState& end = row.kind == RowKind::flow ? *row.state : *row.pre;
      mon.on_flow(prev_t, *prev, row.t, end);
    }
    prev = &*row.state;
    prev_t = row.t;
  }
  return mon.flow();
}

TimingReport check_timing(const SimTrace& trace, const GraphTopology& g) {
  TimingReport rep;
  const std::size_t n = trace.n_agents;
  const std::size_t cap = 50;

  std::vector<double> last(n, 0.0);
  std::vector<std::size_t> count(n, 0);
  std::set<std::pair<std::size_t, double>> sample_tx;
  for (const auto& s : trace.samplings) {
    if (s.transmitted) sample_tx.emplace(s.agent, s.time);
  }
  for (const auto& tx : trace.transmissions) {
    const double miet = trace.timing[tx.agent].tau_miet;
    const double gap = tx.time - last[tx.agent];
    rep.min_iet_margin = std::min(rep.min_iet_margin, gap - miet);
    if (gap < miet) {
      ++rep.iet_violations;
      add_violation(rep.list, cap, {tx.time, "inter-event time below tau_MIET", tx.agent, gap, miet});
    }
    if (!sample_tx.count({tx.agent, tx.time})) {
      ++rep.off_sample_transmissions;
      add_violation(rep.list, cap, {tx.time, "transmission outside a sampling instant", tx.agent, 0, 0});
    }
    last[tx.agent] = tx.time;
    ++count[tx.agent];
  }
  for (std::size_t i = 0; i < n; ++i) {
    const double bound = std::ceil(trace.horizon / trace.timing[i].tau_miet) + 1.0;
    if (static_cast<double>(count[i]) > bound) {
      ++rep.zeno_violations;
      add_violation(rep.list, cap, {trace.horizon, "transmission count above T/tau_MIET + 1", i,
                                    static_cast<double>(count[i]), bound});
    }
  }

  auto check_delay = [&](const LinkRecord& r, const char* what) {
    const double mad = trace.timing[r.sender].tau_mad;
    const double delay = r.time - r.sent_at;
    rep.max_delay_excess = std::max(rep.max_delay_excess, delay - mad);
    if (delay > mad + kTimeSlack || delay < 0.0) {
      ++rep.delay_violations;
      add_violation(rep.list, cap, {r.time, what, r.sender, delay, mad});
    }
  };
  std::map<std::uint64_t, double> delivered_at;
  for (const auto& d : trace.deliveries) {
    check_delay(d, "delivery later than tau_MAD");
    delivered_at[d.packet * (n + 1) + d.receiver] = d.time;
  }
  std::vector<std::uint64_t> last_packet(n * n, 0);
  std::map<std::uint64_t, std::size_t> processed;
  for (const auto& p : trace.processings) {
    check_delay(p, "processing later than tau_MAD");
    auto it = delivered_at.find(p.packet * (n + 1) + p.receiver);
    if (it == delivered_at.end() || it->second > p.time) {
      ++rep.order_violations;
      add_violation(rep.list, cap, {p.time, "processing before delivery", p.sender, 0, 0});
    }
    auto& lp = last_packet[p.sender * n + p.receiver];
    if (p.packet <= lp) {
      ++rep.order_violations;
      add_violation(rep.list, cap, {p.time, "packets processed out of order", p.sender, 0, 0});
    }
    lp = p.packet;
    ++processed[p.packet];
  }
  for (const auto& tx : trace.transmissions) {
    if (tx.time + trace.timing[tx.agent].tau_mad + kTimeSlack >= trace.horizon) continue;
    if (processed[tx.packet] != g.out_degree(tx.agent)) {
      ++rep.unprocessed;
      add_violation(rep.list, cap, {tx.time, "packet not processed within tau_MAD", tx.agent, 0, 0});
    }
  }
  return rep;
}

Metrics metrics(const SimTrace& trace) {
  Metrics m;
  const std::size_t n = trace.n_agents;
  m.agents.resize(n);
  std::vector<double> last(n, -1.0);
  std::vector<double> sum(n, 0.0);
  for (const auto& s : trace.samplings) ++m.agents[s.agent].samplings;
  for (const auto& tx : trace.transmissions) {
    auto& a = m.agents[tx.agent];
    ++a.transmissions;
    if (last[tx.agent] >= 0.0) {
      const double iet = tx.time - last[tx.agent];
      a.min_iet = std::isnan(a.min_iet) ? iet : std::min(a.min_iet, iet);
      a.max_iet = std::isnan(a.max_iet) ? iet : std::max(a.max_iet, iet);
      sum[tx.agent] += iet;
    }
    last[tx.agent] = tx.time;
  }
  for (std::size_t i = 0; i < n; ++i) {
    auto& a = m.agents[i];
    if (a.transmissions >= 2) {
      a.mean_iet = sum[i] / static_cast<double>(a.transmissions - 1);
    } else {
      m.flags.push_back("agent " + std::to_string(i) + ": fewer than two transmissions, no IET statistics");
    }
  }
  if (trace.rows.empty()) {
    m.flags.push_back("no rows recorded");
    return m;
  }
  for (const auto& row : trace.rows) {
    const double spread = row.x.size() ? row.x.maxCoeff() - row.x.minCoeff() : 0.0;
    m.t.push_back(row.t);
    m.spread.push_back(spread);
    m.V.push_back(row.V);
  }
  m.initial_spread = m.spread.front();
  m.final_spread = m.spread.back();
  for (std::size_t k = 0; k < m.spread.size(); ++k) {
    if (m.spread[k] <= 0.01 * m.initial_spread) {
      m.time_to_1pct = m.t[k];
      break;
    }
  }
  for (std::size_t k = 1; k < m.V.size(); ++k) m.max_V_increase = std::max(m.max_V_increase, m.V[k] - m.V[k - 1]);
  return m;
}

MonitorReport monitored_run(const HybridSystem& sys, const ScenarioConfig& cfg,
                            const MonitorOptions& opts, SimTrace* trace_out) {
  StorageEvaluator ev(sys);
  StorageMonitor mon(ev, opts);
  SimTrace tr = run(sys, cfg, &mon);
  MonitorReport rep;
  rep.jumps = mon.jumps();
  rep.flow = mon.flow();
  rep.timing = check_timing(tr, sys.topology());
  rep.metrics = metrics(tr);
  if (trace_out) *trace_out = std::move(tr);
  return rep;
}

}  // namespace petc
