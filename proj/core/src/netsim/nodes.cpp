#include "iotchain/netsim/nodes.hpp"

namespace iotchain::netsim {

std::vector<NodeOutput> ReplicaNode::on_event(const SimPayload& payload, std::uint64_t now) {
  std::vector<consensus::ReplicaOutput> outputs;
  if (const auto* msg = std::get_if<consensus::PbftMessage>(&payload)) {
    outputs = replica_.on_message(*msg, now);
  } else if (const auto* pop = std::get_if<TimerPop>(&payload)) {
    outputs = replica_.on_timer(pop->token, now);
  }

  std::vector<NodeOutput> converted;
  converted.reserve(outputs.size());
  for (consensus::ReplicaOutput& output : outputs) {
    if (auto* send = std::get_if<consensus::Send>(&output)) {
      converted.push_back(SendMessage{std::move(send->to), std::move(send->msg)});
    } else {
      const auto& timer = std::get<consensus::Timer>(output);
      converted.push_back(StartTimer{timer.token, timer.delay});
    }
  }
  return converted;
}

std::vector<NodeOutput> GatewayNode::on_event(const SimPayload& payload, std::uint64_t now) {
  const auto* submission = std::get_if<DeviceSubmission>(&payload);
  if (submission == nullptr) return {};

  auto request = gateway_.handle_submission(submission->tx, submission->features, now);
  if (!request.ok()) return {};

  std::vector<NodeOutput> outputs;
  outputs.reserve(validators_.size());
  for (const std::string& validator : validators_) {
    outputs.push_back(SendMessage{validator, request.value()});
  }
  return outputs;
}

}  // namespace iotchain::netsim
