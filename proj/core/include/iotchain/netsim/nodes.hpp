#pragma once

#include <string>
#include <vector>

#include "iotchain/consensus/replica.hpp"
#include "iotchain/gateway/gateway.hpp"
#include "iotchain/netsim/simulator.hpp"

namespace iotchain::netsim {

// Wraps a consensus replica as a simulated node: protocol messages and
// timer pops go to the replica, anything else is ignored.
class ReplicaNode final : public Node {
 public:
  ReplicaNode(consensus::ReplicaConfig config, const membership::Registry& registry)
      : replica_(std::move(config), registry) {}

  const std::string& id() const override { return replica_.id(); }
  std::vector<NodeOutput> on_event(const SimPayload& payload, std::uint64_t now) override;

  consensus::Replica& replica() { return replica_; }
  const consensus::Replica& replica() const { return replica_; }

 private:
  consensus::Replica replica_;
};

// Wraps a gateway: device submissions are mediated into signed consensus
// requests broadcast to every validator.
class GatewayNode final : public Node {
 public:
  GatewayNode(gateway::Gateway gateway, std::vector<std::string> validators)
      : gateway_(std::move(gateway)), validators_(std::move(validators)) {}

  const std::string& id() const override { return gateway_.id(); }
  std::vector<NodeOutput> on_event(const SimPayload& payload, std::uint64_t now) override;

  gateway::Gateway& gateway() { return gateway_; }
  const gateway::Gateway& gateway() const { return gateway_; }

 private:
  gateway::Gateway gateway_;
  std::vector<std::string> validators_;
};

}  // namespace iotchain::netsim
