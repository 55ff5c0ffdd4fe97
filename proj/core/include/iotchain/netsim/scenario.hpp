#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "iotchain/gateway/gateway.hpp"
#include "iotchain/netsim/nodes.hpp"
#include "iotchain/netsim/simulator.hpp"

namespace iotchain::netsim {

struct ScenarioGateway {
  std::string id;
  std::vector<std::string> devices;

  bool operator==(const ScenarioGateway&) const = default;
};

struct ScenarioSensor {
  std::string id;
  std::string device;
  double initial = 0.0;

  bool operator==(const ScenarioSensor&) const = default;
};

// One scripted device emission: at `time` the device signs a sensor update
// and sends it, with the accompanying flow record, to its gateway.
struct ScenarioTraffic {
  std::uint64_t time = 0;
  std::string device;
  std::string sensor;
  double value = 0.0;
  std::vector<double> flow;

  bool operator==(const ScenarioTraffic&) const = default;
};

// Declarative description of a full run: topology, fault profiles, network
// parameters, seed, and the device traffic script.
struct Scenario {
  std::uint64_t seed = 1;
  std::uint64_t delay_min = 1;
  std::uint64_t delay_max = 10;
  double loss = 0.0;
  std::string chain_id;
  std::vector<std::string> validators;
  std::vector<ScenarioGateway> gateways;
  std::vector<ScenarioSensor> sensors;
  std::vector<FaultProfile> faults;
  gateway::GatewayPolicy policy = gateway::GatewayPolicy::AlertAndQuarantine;
  std::vector<ScenarioTraffic> traffic;

  bool operator==(const Scenario&) const = default;
};

enum class ScenarioError : std::uint8_t {
  Parse = 0,    // malformed JSON; detail includes line and column
  Invalid = 1,  // well-formed but violates a scenario rule
};
std::string_view scenario_error_name(ScenarioError error);

Result<Scenario, ScenarioError> parse_scenario(const std::string& text);
Status<ScenarioError> validate_scenario(const Scenario& scenario);

// Everything a run needs, with stable addresses: nodes hold pointers into
// the registry, so both live behind unique_ptr.
struct Simulation {
  std::unique_ptr<membership::Registry> registry;
  ledger::ChainConfig chain_config;
  std::unique_ptr<Simulator> sim;
  std::vector<std::string> validators;
  std::vector<std::string> gateways;
  std::map<std::string, std::string> device_gateway;
  std::vector<FaultProfile> faults;
  std::shared_ptr<const gateway::FlowClassifier> model;
  std::size_t submissions_scheduled = 0;

  consensus::Replica* replica(std::string_view id);
  const consensus::Replica* replica(std::string_view id) const;
  gateway::Gateway* gateway(std::string_view id);
  const gateway::Gateway* gateway(std::string_view id) const;
  bool is_honest(std::string_view validator) const;
};

// Builds registry, chain config, simulator, and nodes from a validated
// scenario and schedules the traffic script. Member credentials are derived
// deterministically from the chain id and member id, so a scenario is fully
// reproducible from its file alone.
Result<std::unique_ptr<Simulation>, ScenarioError> build_simulation(
    const Scenario& scenario, std::shared_ptr<const gateway::FlowClassifier> model);

// Post-run accounting over the honest validators' ledgers and the gateway
// decision logs. honest_agreement holds when every honest chain is a prefix
// of the longest honest chain (no two honest replicas executed different
// blocks at the same height); committed counts read from that longest chain.
// The conservation identity is
//   committed updates + committed alerts + rejections = mediated submissions
// whenever no messages were lost.
struct RunSummary {
  std::uint64_t committed_blocks = 0;
  std::uint64_t committed_updates = 0;
  std::uint64_t committed_alerts = 0;
  std::uint64_t committed_registrations = 0;
  std::uint64_t rejections = 0;
  std::uint64_t view_changes = 0;
  std::uint64_t decisions_forwarded = 0;
  std::uint64_t decisions_alerted = 0;
  std::uint64_t submissions_scheduled = 0;
  bool honest_agreement = false;
  bool any_halted = false;
};
RunSummary summarize_run(const Simulation& simulation);

}  // namespace iotchain::netsim
