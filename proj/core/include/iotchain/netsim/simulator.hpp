#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <queue>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "iotchain/common/result.hpp"
#include "iotchain/common/rng.hpp"
#include "iotchain/consensus/messages.hpp"
#include "iotchain/ledger/types.hpp"
#include "iotchain/membership/signer.hpp"

namespace iotchain::netsim {

// A device's signed transaction together with the flow record observed
// alongside it; delivered to the device's gateway.
struct DeviceSubmission {
  ledger::Transaction tx;
  std::vector<double> features;

  bool operator==(const DeviceSubmission&) const = default;
};

struct TimerPop {
  std::uint64_t token = 0;

  bool operator==(const TimerPop&) const = default;
};

using SimPayload = std::variant<consensus::PbftMessage, DeviceSubmission, TimerPop>;

struct SimEvent {
  std::uint64_t deliver_at = 0;
  std::uint64_t seq = 0;  // insertion order; breaks equal-time ties
  std::string target;
  SimPayload payload;
};

struct SendMessage {
  std::string to;
  SimPayload payload;
};

struct StartTimer {
  std::uint64_t token = 0;
  std::uint64_t delay = 0;
};

using NodeOutput = std::variant<SendMessage, StartTimer>;

// A simulated node: a pure state machine fed one event at a time by the
// single-threaded scheduler. Timers are local (never delayed, lost, or
// transformed); sends cross the network.
class Node {
 public:
  virtual ~Node() = default;

  virtual const std::string& id() const = 0;
  virtual std::vector<NodeOutput> on_event(const SimPayload& payload, std::uint64_t now) = 0;
};

enum class FaultBehavior : std::uint8_t {
  Honest = 0,
  Silent = 1,         // drops every outbound send
  Equivocate = 2,     // shows conflicting proposals to disjoint receiver halves
  DelayInjector = 3,  // adds a fixed extra delay to every outbound send
};
std::string_view fault_behavior_name(FaultBehavior behavior);
bool parse_fault_behavior(std::string_view text, FaultBehavior& out);

struct FaultProfile {
  std::string node;
  FaultBehavior behavior = FaultBehavior::Honest;
  std::uint64_t extra_delay = 0;  // delay_injector parameter

  bool operator==(const FaultProfile&) const = default;
};

enum class SimError : std::uint8_t {
  PastDelivery = 0,
  UnknownTarget = 1,
};
std::string_view sim_error_name(SimError error);

// One delivered event. The full trace is a pure function of (topology,
// fault profiles, seed).
struct TraceEntry {
  std::uint64_t time = 0;
  std::string target;
  std::string sender;  // empty for timer pops
  std::string kind;    // protocol phase, "submission", or "timer"
  std::uint64_t view = 0;
  std::uint64_t seq = 0;

  bool operator==(const TraceEntry&) const = default;
};

struct SimConfig {
  std::uint64_t seed = 1;
  std::uint64_t delay_min = 1;
  std::uint64_t delay_max = 10;
  double loss = 0.0;  // independent per-message drop probability
};

// Deterministic discrete-event scheduler. Events are delivered in
// (deliver_at, insertion order); every network send samples a delay from
// the seeded generator and may be dropped by the loss probability; a
// sender's fault profile transforms its outbound batch first.
class Simulator {
 public:
  Simulator(SimConfig config, const membership::Registry& registry);

  void add_node(std::unique_ptr<Node> node);
  void set_fault(FaultProfile profile);

  // External injection at an absolute time, bypassing delay and loss.
  Status<SimError> schedule_at(std::uint64_t deliver_at, const std::string& target,
                               SimPayload payload);
  // Device-side emission: the network delay and loss apply on the way to
  // the target, but no fault transform does (devices have no profiles).
  Status<SimError> submit(std::uint64_t emit_time, const std::string& target,
                          DeviceSubmission submission);

  bool step();  // deliver one event; false when the queue is empty
  std::size_t run_until_quiet(std::size_t max_steps = 1'000'000);

  std::uint64_t now() const { return now_; }
  Node* node(std::string_view id);
  const std::vector<TraceEntry>& trace() const { return trace_; }
  std::size_t lost_messages() const { return lost_; }

 private:
  struct LaterEvent {
    bool operator()(const SimEvent& a, const SimEvent& b) const {
      if (a.deliver_at != b.deliver_at) return a.deliver_at > b.deliver_at;
      return a.seq > b.seq;
    }
  };

  std::uint64_t sample_delay(std::uint64_t extra);
  void dispatch_outputs(const std::string& sender, std::vector<NodeOutput> outputs);
  std::vector<SendMessage> apply_fault(const std::string& sender, std::vector<SendMessage> sends);
  void push_event(std::uint64_t deliver_at, std::string target, SimPayload payload);
  void record_trace(const SimEvent& event);

  SimConfig config_;
  const membership::Registry* registry_;
  membership::HmacSigner signer_;
  Rng rng_;
  std::uint64_t now_ = 0;
  std::uint64_t next_seq_ = 0;
  std::priority_queue<SimEvent, std::vector<SimEvent>, LaterEvent> queue_;
  std::map<std::string, std::unique_ptr<Node>, std::less<>> nodes_;
  std::map<std::string, FaultProfile, std::less<>> faults_;
  std::vector<TraceEntry> trace_;
  std::size_t lost_ = 0;
};

}  // namespace iotchain::netsim
