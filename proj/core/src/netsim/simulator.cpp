#include "iotchain/netsim/simulator.hpp"

#include "iotchain/ledger/codec.hpp"

namespace iotchain::netsim {

using consensus::PbftMessage;
using consensus::Phase;

std::string_view fault_behavior_name(FaultBehavior behavior) {
  switch (behavior) {
    case FaultBehavior::Honest: return "honest";
    case FaultBehavior::Silent: return "silent";
    case FaultBehavior::Equivocate: return "equivocate";
    case FaultBehavior::DelayInjector: return "delay_injector";
  }
  return "unknown";
}

bool parse_fault_behavior(std::string_view text, FaultBehavior& out) {
  for (FaultBehavior behavior : {FaultBehavior::Honest, FaultBehavior::Silent,
                                 FaultBehavior::Equivocate, FaultBehavior::DelayInjector}) {
    if (text == fault_behavior_name(behavior)) {
      out = behavior;
      return true;
    }
  }
  return false;
}

std::string_view sim_error_name(SimError error) {
  switch (error) {
    case SimError::PastDelivery: return "PastDelivery";
    case SimError::UnknownTarget: return "UnknownTarget";
  }
  return "unknown";
}

Simulator::Simulator(SimConfig config, const membership::Registry& registry)
    : config_(config), registry_(&registry), signer_(registry), rng_(config.seed) {}

void Simulator::add_node(std::unique_ptr<Node> node) {
  std::string id = node->id();
  nodes_.emplace(std::move(id), std::move(node));
}

void Simulator::set_fault(FaultProfile profile) {
  std::string id = profile.node;
  faults_.insert_or_assign(std::move(id), std::move(profile));
}

Node* Simulator::node(std::string_view id) {
  auto it = nodes_.find(id);
  return it == nodes_.end() ? nullptr : it->second.get();
}

void Simulator::push_event(std::uint64_t deliver_at, std::string target, SimPayload payload) {
  queue_.push(SimEvent{deliver_at, next_seq_++, std::move(target), std::move(payload)});
}

Status<SimError> Simulator::schedule_at(std::uint64_t deliver_at, const std::string& target,
                                        SimPayload payload) {
  if (deliver_at < now_) {
    return {SimError::PastDelivery, "deliver_at " + std::to_string(deliver_at) +
                                        " is before current time " + std::to_string(now_)};
  }
  if (!nodes_.contains(target)) {
    return {SimError::UnknownTarget, "no node " + target};
  }
  push_event(deliver_at, target, std::move(payload));
  return {};
}

std::uint64_t Simulator::sample_delay(std::uint64_t extra) {
  return rng_.between(config_.delay_min, config_.delay_max) + extra;
}

Status<SimError> Simulator::submit(std::uint64_t emit_time, const std::string& target,
                                   DeviceSubmission submission) {
  if (emit_time < now_) {
    return {SimError::PastDelivery, "emission at " + std::to_string(emit_time) +
                                        " is before current time " + std::to_string(now_)};
  }
  if (!nodes_.contains(target)) {
    return {SimError::UnknownTarget, "no node " + target};
  }
  if (config_.loss > 0.0 && rng_.unit() < config_.loss) {
    ++lost_;
    return {};
  }
  push_event(emit_time + sample_delay(0), target, std::move(submission));
  return {};
}

void Simulator::record_trace(const SimEvent& event) {
  TraceEntry entry;
  entry.time = event.deliver_at;
  entry.target = event.target;
  if (const auto* msg = std::get_if<PbftMessage>(&event.payload)) {
    entry.sender = msg->sender;
    entry.kind = std::string(consensus::phase_name(msg->phase));
    entry.view = msg->view;
    entry.seq = msg->seq;
  } else if (const auto* submission = std::get_if<DeviceSubmission>(&event.payload)) {
    entry.sender = submission->tx.submitter;
    entry.kind = "submission";
  } else {
    entry.kind = "timer";
    entry.seq = std::get<TimerPop>(event.payload).token;
  }
  trace_.push_back(std::move(entry));
}

bool Simulator::step() {
  if (queue_.empty()) return false;
  SimEvent event = queue_.top();
  queue_.pop();
  now_ = event.deliver_at;
  record_trace(event);

  auto it = nodes_.find(event.target);
  if (it == nodes_.end()) return true;
  dispatch_outputs(event.target, it->second->on_event(event.payload, now_));
  return true;
}

std::size_t Simulator::run_until_quiet(std::size_t max_steps) {
  std::size_t steps = 0;
  while (steps < max_steps && step()) ++steps;
  return steps;
}

void Simulator::dispatch_outputs(const std::string& sender, std::vector<NodeOutput> outputs) {
  std::vector<SendMessage> sends;
  for (NodeOutput& output : outputs) {
    if (auto* send = std::get_if<SendMessage>(&output)) {
      sends.push_back(std::move(*send));
    } else {
      // Timers are local: exact delay, immune to loss and faults.
      const auto& timer = std::get<StartTimer>(output);
      push_event(now_ + timer.delay, sender, TimerPop{timer.token});
    }
  }

  std::uint64_t extra = 0;
  if (auto it = faults_.find(sender); it != faults_.end()) {
    sends = apply_fault(sender, std::move(sends));
    if (it->second.behavior == FaultBehavior::DelayInjector) extra = it->second.extra_delay;
  }

  for (SendMessage& send : sends) {
    if (config_.loss > 0.0 && rng_.unit() < config_.loss) {
      ++lost_;
      continue;
    }
    push_event(now_ + sample_delay(extra), std::move(send.to), std::move(send.payload));
  }
}

std::vector<SendMessage> Simulator::apply_fault(const std::string& sender,
                                                std::vector<SendMessage> sends) {
  const FaultProfile& profile = faults_.at(sender);
  switch (profile.behavior) {
    case FaultBehavior::Honest:
    case FaultBehavior::DelayInjector:
      return sends;
    case FaultBehavior::Silent:
      return {};
    case FaultBehavior::Equivocate:
      break;
  }

  // Split each batch of identical proposals or votes into two conflicting
  // variants across disjoint receiver halves: the first ceil(k/2) receivers
  // see the original, the rest see a re-signed variant. Commits and
  // view-change traffic are withheld so neither variant can be driven to a
  // commit quorum by the equivocator itself.
  std::vector<std::size_t> pre_prepares;
  std::vector<std::size_t> prepares;
  std::vector<SendMessage> out;
  out.reserve(sends.size());
  for (SendMessage& send : sends) {
    auto* msg = std::get_if<PbftMessage>(&send.payload);
    if (msg == nullptr || msg->phase == Phase::Request) {
      out.push_back(std::move(send));
      continue;
    }
    switch (msg->phase) {
      case Phase::PrePrepare:
        pre_prepares.push_back(out.size());
        out.push_back(std::move(send));
        break;
      case Phase::Prepare:
        prepares.push_back(out.size());
        out.push_back(std::move(send));
        break;
      default:
        break;  // commit / view-change / new-view withheld
    }
  }

  auto variant_tail = [&](const std::vector<std::size_t>& indices, auto mutate) {
    std::size_t keep = (indices.size() + 1) / 2;
    for (std::size_t i = keep; i < indices.size(); ++i) {
      auto& msg = std::get<PbftMessage>(out[indices[i]].payload);
      mutate(msg);
      msg.signature = signer_.sign(sender, msg.signing_bytes());
    }
  };
  variant_tail(pre_prepares, [](PbftMessage& msg) {
    if (!msg.block.has_value()) return;
    msg.block->timestamp += 1;
    msg.block->block_hash = ledger::block_digest(*msg.block);
    msg.digest = msg.block->block_hash;
  });
  variant_tail(prepares, [](PbftMessage& msg) { msg.digest.bytes[0] ^= 0xFF; });
  return out;
}

}  // namespace iotchain::netsim
