// Discrete-event engine driving the hybrid system through asynchronous
// sampling, delayed packet delivery and buffered processing.
#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <memory>
#include <optional>
#include <queue>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "petc/etm_design.hpp"
#include "petc/hybrid_core.hpp"
#include "petc/rng.hpp"

namespace petc {

inline constexpr std::size_t kNoAgent = std::numeric_limits<std::size_t>::max();

/// Event times live on a 1e-12 s grid so simultaneity is exact.
double round_time(double t);

struct Packet {
  std::uint64_t id = 0;
  std::size_t sender = 0;
  Eigen::VectorXd payload;
  double sent_at = 0.0;
  std::vector<std::pair<std::size_t, double>> deliver_at;  ///< (receiver, time)
};

enum class EventType { delivery = 0, sampling = 1 };

struct Event {
  double time = 0.0;
  EventType type = EventType::sampling;
  std::size_t agent = 0;  ///< sampling agent, or the sender of a delivery
  std::size_t peer = kNoAgent;  ///< receiver of a delivery
  std::uint64_t packet = 0;
  std::uint64_t seq = 0;
};

/// Min-queue ordered by time, then deliveries before samplings, then agent
/// index, then insertion order.
class EventQueue {
 public:
  void push(Event e);
  const Event& top() const { return q_.top(); }
  Event pop();
  bool empty() const { return q_.empty(); }
  std::size_t size() const { return q_.size(); }

 private:
  struct Later {
    bool operator()(const Event& a, const Event& b) const;
  };
  std::priority_queue<Event, std::vector<Event>, Later> q_;
  std::uint64_t next_seq_ = 0;
};

struct SamplingSpec {
  enum class Kind { uniform, periodic } kind = Kind::uniform;
};

struct DelaySpec {
  /// uniform on [0, bound]; zero; fixed fraction of the bound.
  enum class Kind { uniform, zero, fraction } kind = Kind::uniform;
  double fraction = 1.0;
};

enum class RowKind { flow, transmit, sample, receive };
const char* to_string(RowKind k);  // "flow", "G_a", "G_b", "G_c"

struct TraceRow {
  double t = 0.0;
  RowKind kind = RowKind::flow;
  std::size_t agent = kNoAgent;
  std::size_t peer = kNoAgent;
  Eigen::VectorXd x;
  std::vector<double> eta;
  double U = std::numeric_limits<double>::quiet_NaN();
  double V = 0.0;
  std::optional<HybridState> state;  ///< post-jump state for jump rows
  std::optional<HybridState> pre;    ///< pre-jump state for jump rows
  std::vector<std::size_t> flushed;
  double eta_increment = 0.0;
};

struct TransmissionRecord {
  std::size_t agent;
  double time;
  double tau_before;
  double rho;
  std::uint64_t packet;
};

struct SamplingRecord {
  std::size_t agent;
  double time;
  bool transmitted;
};

struct LinkRecord {
  std::size_t sender;
  std::size_t receiver;
  std::uint64_t packet;
  double sent_at;
  double time;
};

struct SimTrace {
  std::size_t n_agents = 0;
  std::uint64_t seed = 0;
  double horizon = 0.0;
  std::vector<TimingConstants> timing;
  std::vector<double> tau_masp;
  std::vector<double> d_min;
  std::vector<TraceRow> rows;
  std::vector<TransmissionRecord> transmissions;
  std::vector<SamplingRecord> samplings;
  std::vector<LinkRecord> deliveries;
  std::vector<LinkRecord> processings;
  std::optional<HybridState> final_state;
};

struct TraceOptions {
  bool record_flow = true;   ///< flow rows on the k * stride grid
  bool record_jumps = true;  ///< one row per jump
  double stride = 1e-2;
  bool store_states = false;  ///< keep full states on rows (needed for replay checks)
  /// Optional storage function for the U column.
  std::function<double(const HybridState&)> storage;
};

struct ScenarioConfig {
  std::vector<std::shared_ptr<const AgentDesign>> designs;
  TriggerMode mode = TriggerMode::online;
  double eps_eta = 0.05;
  Eigen::VectorXd x0;
  std::vector<double> eta0;
  double horizon = 10.0;
  std::uint64_t seed = 1;
  SamplingSpec sampling;
  DelaySpec delay;
  TraceOptions trace;
  HybridOptions hybrid;

  /// Rejects tau_MAD^i < tau_MASP^m on any edge, negative horizon and
  /// mismatched sizes.
  void validate(const GraphTopology& g) const;
};

/// Hooks called while a run progresses.
class RunObserver {
 public:
  virtual ~RunObserver() = default;
  virtual void on_start(double /*t*/, const HybridState& /*s*/) {}
  /// One maximal flow segment [t0, t1] with its end states.
  virtual void on_flow(double /*t0*/, const HybridState& /*s0*/, double /*t1*/,
                       const HybridState& /*s1*/) {}
  virtual void on_jump(double /*t*/, JumpKind /*kind*/, std::size_t /*agent*/,
                       std::size_t /*peer*/, const HybridState& /*pre*/,
                       const HybridState& /*post*/, const JumpInfo& /*info*/) {}
  virtual void on_finish(double /*t*/, const HybridState& /*s*/) {}
};

HybridSystem make_system(const ScenarioConfig& cfg, std::shared_ptr<const SystemModel> model);

double next_sampling(const EtmParams& p, double now, Rng& rng,
                     const SamplingSpec& spec = {});

/// Per-receiver delivery times with network delay in [0, tau_MAD^i - tau_MASP^m].
Packet draw_delays(const HybridSystem& sys, std::size_t sender, double now,
                   Eigen::VectorXd payload, Rng& rng, const DelaySpec& spec = {});

SimTrace run(const HybridSystem& sys, const ScenarioConfig& cfg, RunObserver* observer = nullptr);

}  // namespace petc
