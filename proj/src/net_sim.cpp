#include "petc/net_sim.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace petc {

double round_time(double t) { return std::round(t * 1e12) / 1e12; }

namespace {

double floor_time(double t) { return std::floor(t * 1e12) / 1e12; }

}  // namespace

bool EventQueue::Later::operator()(const Event& a, const Event& b) const {
  if (a.time != b.time) return a.time > b.time;
  if (a.type != b.type) return a.type > b.type;
  if (a.agent != b.agent) return a.agent > b.agent;
  if (a.peer != b.peer) return a.peer > b.peer;
  return a.seq > b.seq;
}

void EventQueue::push(Event e) {
  e.seq = next_seq_++;
  q_.push(e);
}

Event EventQueue::pop() {
  Event e = q_.top();
  q_.pop();
  return e;
}

const char* to_string(RowKind k) {
  switch (k) {
    case RowKind::flow:
      return "flow";
    case RowKind::transmit:
      return "G_a";
    case RowKind::sample:
      return "G_b";
    case RowKind::receive:
      return "G_c";
  }
  return "?";
}

void ScenarioConfig::validate(const GraphTopology& g) const {
  const std::size_t n = g.size();
  if (designs.size() != n) {
    throw std::invalid_argument("scenario has " + std::to_string(designs.size()) +
                                " agent designs for " + std::to_string(n) + " agents");
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (!designs[i]) throw std::invalid_argument("missing design for agent " + std::to_string(i));
  }
  if (!(horizon >= 0.0) || !std::isfinite(horizon)) {
    throw std::invalid_argument("horizon must be a finite non-negative number");
  }
  if (!(eps_eta > 0.0)) throw std::invalid_argument("eps_eta must be positive");
  if (trace.record_flow && !(trace.stride > 0.0)) {
    throw std::invalid_argument("trace stride must be positive");
  }
  if (delay.kind == DelaySpec::Kind::fraction && !(delay.fraction >= 0.0 && delay.fraction <= 1.0)) {
    throw std::invalid_argument("delay fraction must lie in [0,1]");
  }
  for (const auto& [i, m] : g.edges()) {
    const double mad = designs[i]->timing.tau_mad;
    const double masp = designs[m]->params.tau_masp;
    if (mad < masp) {
      throw std::invalid_argument("tau_MAD of agent " + std::to_string(i) + " (" +
                                  std::to_string(mad) + ") is below tau_MASP of receiver " +
                                  std::to_string(m) + " (" + std::to_string(masp) + ")");
    }
  }
}

HybridSystem make_system(const ScenarioConfig& cfg, std::shared_ptr<const SystemModel> model) {
  cfg.validate(model->topology());
  std::vector<std::shared_ptr<const TriggerFunctions>> triggers;
  triggers.reserve(cfg.designs.size());
  for (const auto& d : cfg.designs) {
    triggers.push_back(std::make_shared<const TriggerFunctions>(d, cfg.mode, cfg.eps_eta));
  }
  return HybridSystem(std::move(model), std::move(triggers), cfg.hybrid);
}

double next_sampling(const EtmParams& p, double now, Rng& rng, const SamplingSpec& spec) {
  const double gap =
      spec.kind == SamplingSpec::Kind::periodic ? p.tau_masp : rng.uniform(p.d_min, p.tau_masp);
  return now + gap;
}

Packet draw_delays(const HybridSystem& sys, std::size_t sender, double now,
                   Eigen::VectorXd payload, Rng& rng, const DelaySpec& spec) {
  Packet pk;
  pk.sender = sender;
  pk.payload = std::move(payload);
  pk.sent_at = now;
  const double mad = sys.trigger(sender).timing().tau_mad;
  for (std::size_t m : sys.topology().out_neighbors(sender)) {
    const double bound = mad - sys.trigger(m).params().tau_masp;
    if (bound < 0.0) throw std::invalid_argument("inadmissible delay bound on link to " + std::to_string(m));
    double delay = 0.0;
    switch (spec.kind) {
      case DelaySpec::Kind::uniform:
        delay = rng.uniform(0.0, bound);
        break;
      case DelaySpec::Kind::zero:
        delay = 0.0;
        break;
      case DelaySpec::Kind::fraction:
        delay = spec.fraction * bound;
        break;
    }
    // Rounded down so the grid never pushes a delivery past its bound.
    pk.deliver_at.emplace_back(m, std::max(now, floor_time(now + delay)));
  }
  return pk;
}

SimTrace run(const HybridSystem& sys, const ScenarioConfig& cfg, RunObserver* observer) {
  cfg.validate(sys.topology());
  const std::size_t n = sys.size();
  const auto& model = sys.model();
  const auto& topt = cfg.trace;

  SimTrace tr;
  tr.n_agents = n;
  tr.seed = cfg.seed;
  tr.horizon = cfg.horizon;
  for (std::size_t i = 0; i < n; ++i) {
    tr.timing.push_back(sys.trigger(i).timing());
    tr.tau_masp.push_back(sys.trigger(i).params().tau_masp);
    tr.d_min.push_back(sys.trigger(i).params().d_min);
  }

  HybridState s = sys.initial_state(cfg.x0, cfg.eta0);
  double t = 0.0;

  auto push_row = [&](RowKind kind, std::size_t agent, std::size_t peer, const HybridState& st,
                      const HybridState* pre, const JumpInfo* info) {
    TraceRow row;
    row.t = t;
    row.kind = kind;
    row.agent = agent;
    row.peer = peer;
    row.x = st.x;
    row.eta = st.eta;
    row.V = model.storage(st.x);
    if (topt.storage) row.U = topt.storage(st);
    if (topt.store_states) {
      row.state = st;
      if (pre) row.pre = *pre;
    }
    if (info) {
      row.flushed = info->flushed;
      row.eta_increment = info->eta_increment;
    }
    tr.rows.push_back(std::move(row));
  };

  std::vector<Rng> sampling_rng;
  std::vector<Rng> delay_rng;
  for (std::size_t i = 0; i < n; ++i) {
    sampling_rng.emplace_back(cfg.seed, i, Stream::sampling);
    delay_rng.emplace_back(cfg.seed, i, Stream::delay);
  }

  EventQueue q;
  for (std::size_t i = 0; i < n; ++i) {
    q.push({round_time(next_sampling(sys.trigger(i).params(), 0.0, sampling_rng[i], cfg.sampling)),
            EventType::sampling, i, kNoAgent, 0, 0});
  }

  std::vector<double> last_tx(n, 0.0);
  std::vector<double> last_sample(n, 0.0);
  std::vector<std::uint64_t> pending(n * n, 0);
  std::vector<double> pending_sent(n * n, 0.0);
  std::uint64_t next_packet = 1;
  std::uint64_t next_grid = 1;

  if (topt.record_flow || topt.record_jumps) push_row(RowKind::flow, kNoAgent, kNoAgent, s, nullptr, nullptr);
  if (observer) observer->on_start(t, s);

  auto advance = [&](double t_new) {
    if (!(t_new > t)) return;
    if (topt.record_flow) {
      for (;;) {
        const double g = round_time(static_cast<double>(next_grid) * topt.stride);
        if (g > t_new) break;
        ++next_grid;
        if (g <= t) continue;
        const HybridState sg = sys.flow(s, g - t);
        const double keep = t;
        t = g;
        push_row(RowKind::flow, kNoAgent, kNoAgent, sg, nullptr, nullptr);
        t = keep;
      }
    }
    HybridState s1 = sys.flow(s, t_new - t);
    for (std::size_t i = 0; i < n; ++i) {
      s1.tau[i] = t_new - last_tx[i];
      s1.sigma[i] = t_new - last_sample[i];
    }
    if (observer) observer->on_flow(t, s, t_new, s1);
    s = std::move(s1);
    t = t_new;
  };

  while (!q.empty() && q.top().time <= cfg.horizon) {
    const Event ev = q.pop();
    if (ev.time < t) throw HybridError("event queue went back in time at t=" + std::to_string(ev.time));
    advance(ev.time);

    if (ev.type == EventType::delivery) {
      const HybridState pre = s;
      try {
        s = sys.jump_receive(pre, ev.agent, ev.peer);
      } catch (const HybridError& e) {
        throw HybridError(std::string(e.what()) + " at t=" + std::to_string(t));
      }
      tr.deliveries.push_back({ev.agent, ev.peer, ev.packet, pending_sent[ev.agent * n + ev.peer], t});
      if (observer) observer->on_jump(t, JumpKind::receive, ev.agent, ev.peer, pre, s, JumpInfo{});
      if (topt.record_jumps) push_row(RowKind::receive, ev.agent, ev.peer, s, &pre, nullptr);
      continue;
    }

    const std::size_t i = ev.agent;
    const HybridState pre = s;
    JumpInfo info;
    bool transmitted = false;
    try {
      transmitted = sys.trigger_decision(pre, i);
      if (transmitted) {
        s = sys.jump_transmit(pre, i, &info);
      } else {
        s = sys.jump_sample(pre, i, &info);
      }
    } catch (const std::exception& e) {
      throw HybridError(std::string(e.what()) + " at t=" + std::to_string(t));
    }
    last_sample[i] = t;
    for (std::size_t j : info.flushed) {
      tr.processings.push_back({j, i, pending[j * n + i], pending_sent[j * n + i], t});
    }
    if (transmitted) {
      last_tx[i] = t;
      Packet pk = draw_delays(sys, i, t, sys.output(pre, i), delay_rng[i], cfg.delay);
      pk.id = next_packet++;
      for (const auto& [m, at] : pk.deliver_at) {
        pending[i * n + m] = pk.id;
        pending_sent[i * n + m] = t;
        q.push({at, EventType::delivery, i, m, pk.id, 0});
      }
      tr.transmissions.push_back({i, t, pre.tau[i], info.eta_increment, pk.id});
    }
    tr.samplings.push_back({i, t, transmitted});
    q.push({round_time(next_sampling(sys.trigger(i).params(), t, sampling_rng[i], cfg.sampling)),
            EventType::sampling, i, kNoAgent, 0, 0});

    const JumpKind kind = transmitted ? JumpKind::transmit : JumpKind::sample;
    if (observer) observer->on_jump(t, kind, i, kNoAgent, pre, s, info);
    if (topt.record_jumps) {
      push_row(transmitted ? RowKind::transmit : RowKind::sample, i, kNoAgent, s, &pre, &info);
    }
    if (sys.options().debug_checks) sys.check_admissible(s);
  }

  advance(cfg.horizon);
  if ((topt.record_flow || topt.record_jumps) && !tr.rows.empty() && tr.rows.back().t < cfg.horizon) {
    push_row(RowKind::flow, kNoAgent, kNoAgent, s, nullptr, nullptr);
  }
  if (observer) observer->on_finish(t, s);
  tr.final_state = s;
  return tr;
}

}  // namespace petc
