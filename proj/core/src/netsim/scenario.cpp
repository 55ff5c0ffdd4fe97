#include "iotchain/netsim/scenario.hpp"

#include <json.hpp>

#include <optional>
#include <set>

#include "iotchain/crypto/sha256.hpp"
#include "iotchain/ledger/txbuild.hpp"
#include "iotchain/membership/registry.hpp"

namespace iotchain::netsim {
namespace {

using nlohmann::json;

Failure<ScenarioError> invalid(std::string detail) {
  return {ScenarioError::Invalid, std::move(detail)};
}

Failure<ScenarioError> at_byte(const std::string& text, std::size_t byte, const std::string& what) {
  std::size_t line = 1;
  std::size_t column = 1;
  for (std::size_t i = 0; i + 1 < byte && i < text.size(); ++i) {
    if (text[i] == '\n') {
      ++line;
      column = 1;
    } else {
      ++column;
    }
  }
  return {ScenarioError::Parse,
          "line " + std::to_string(line) + ", column " + std::to_string(column) + ": " + what};
}

std::optional<std::string> unknown_key(const json& object,
                                       std::initializer_list<const char*> allowed) {
  for (const auto& item : object.items()) {
    bool known = false;
    for (const char* key : allowed) {
      if (item.key() == key) {
        known = true;
        break;
      }
    }
    if (!known) return item.key();
  }
  return std::nullopt;
}

bool read_u64(const json& object, const char* key, std::uint64_t& out) {
  if (!object.contains(key)) return true;
  const json& value = object.at(key);
  if (!value.is_number_unsigned()) return false;
  out = value.get<std::uint64_t>();
  return true;
}

bool read_double(const json& object, const char* key, double& out) {
  if (!object.contains(key)) return true;
  const json& value = object.at(key);
  if (!value.is_number()) return false;
  out = value.get<double>();
  return true;
}

bool read_string(const json& object, const char* key, std::string& out) {
  if (!object.contains(key)) return true;
  const json& value = object.at(key);
  if (!value.is_string()) return false;
  out = value.get<std::string>();
  return true;
}

bool read_string_array(const json& value, std::vector<std::string>& out) {
  if (!value.is_array()) return false;
  for (const json& item : value) {
    if (!item.is_string()) return false;
    out.push_back(item.get<std::string>());
  }
  return true;
}

bool read_double_array(const json& value, std::vector<double>& out) {
  if (!value.is_array()) return false;
  for (const json& item : value) {
    if (!item.is_number()) return false;
    out.push_back(item.get<double>());
  }
  return true;
}

Bytes scenario_credential(const std::string& chain_id, const std::string& member) {
  crypto::Digest digest =
      crypto::sha256(std::string("scenario-credential:") + chain_id + ":" + member);
  return Bytes(digest.bytes.begin(), digest.bytes.end());
}

}  // namespace

std::string_view scenario_error_name(ScenarioError error) {
  switch (error) {
    case ScenarioError::Parse: return "Parse";
    case ScenarioError::Invalid: return "Invalid";
  }
  return "unknown";
}

Result<Scenario, ScenarioError> parse_scenario(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    return at_byte(text, e.byte, e.what());
  }
  if (!doc.is_object()) return invalid("top level must be an object");
  if (auto key = unknown_key(doc, {"seed", "delay", "loss", "chain_id", "validators", "gateways",
                                   "sensors", "faults", "policy", "traffic"})) {
    return invalid("unknown key \"" + *key + "\"");
  }

  Scenario scenario;
  if (!read_u64(doc, "seed", scenario.seed)) return invalid("seed must be a non-negative integer");
  if (doc.contains("delay")) {
    const json& delay = doc.at("delay");
    if (!delay.is_object()) return invalid("delay must be an object");
    if (auto key = unknown_key(delay, {"min", "max"})) {
      return invalid("unknown key \"" + *key + "\" in delay");
    }
    if (!read_u64(delay, "min", scenario.delay_min) ||
        !read_u64(delay, "max", scenario.delay_max)) {
      return invalid("delay.min and delay.max must be non-negative integers");
    }
  }
  if (!read_double(doc, "loss", scenario.loss)) return invalid("loss must be a number");
  if (!read_string(doc, "chain_id", scenario.chain_id)) return invalid("chain_id must be a string");

  if (!doc.contains("validators")) return invalid("validators is required");
  if (!read_string_array(doc.at("validators"), scenario.validators)) {
    return invalid("validators must be an array of strings");
  }

  if (doc.contains("gateways")) {
    if (!doc.at("gateways").is_array()) return invalid("gateways must be an array");
    for (const json& entry : doc.at("gateways")) {
      if (!entry.is_object()) return invalid("each gateway must be an object");
      if (auto key = unknown_key(entry, {"id", "devices"})) {
        return invalid("unknown key \"" + *key + "\" in gateway");
      }
      ScenarioGateway gw;
      if (!entry.contains("id") || !read_string(entry, "id", gw.id)) {
        return invalid("gateway.id must be a string");
      }
      if (entry.contains("devices") && !read_string_array(entry.at("devices"), gw.devices)) {
        return invalid("gateway.devices must be an array of strings");
      }
      scenario.gateways.push_back(std::move(gw));
    }
  }

  if (doc.contains("sensors")) {
    if (!doc.at("sensors").is_array()) return invalid("sensors must be an array");
    for (const json& entry : doc.at("sensors")) {
      if (!entry.is_object()) return invalid("each sensor must be an object");
      if (auto key = unknown_key(entry, {"id", "device", "initial"})) {
        return invalid("unknown key \"" + *key + "\" in sensor");
      }
      ScenarioSensor sensor;
      if (!entry.contains("id") || !read_string(entry, "id", sensor.id) ||
          !entry.contains("device") || !read_string(entry, "device", sensor.device)) {
        return invalid("sensor.id and sensor.device must be strings");
      }
      if (!read_double(entry, "initial", sensor.initial)) {
        return invalid("sensor.initial must be a number");
      }
      scenario.sensors.push_back(std::move(sensor));
    }
  }

  if (doc.contains("faults")) {
    if (!doc.at("faults").is_array()) return invalid("faults must be an array");
    for (const json& entry : doc.at("faults")) {
      if (!entry.is_object()) return invalid("each fault must be an object");
      if (auto key = unknown_key(entry, {"node", "behavior", "extra_delay"})) {
        return invalid("unknown key \"" + *key + "\" in fault");
      }
      FaultProfile fault;
      std::string behavior;
      if (!entry.contains("node") || !read_string(entry, "node", fault.node) ||
          !entry.contains("behavior") || !read_string(entry, "behavior", behavior)) {
        return invalid("fault.node and fault.behavior must be strings");
      }
      if (!parse_fault_behavior(behavior, fault.behavior)) {
        return invalid("unknown fault behavior \"" + behavior + "\"");
      }
      if (!read_u64(entry, "extra_delay", fault.extra_delay)) {
        return invalid("fault.extra_delay must be a non-negative integer");
      }
      scenario.faults.push_back(std::move(fault));
    }
  }

  if (doc.contains("policy")) {
    std::string policy;
    if (!read_string(doc, "policy", policy)) return invalid("policy must be a string");
    if (policy == "alert-and-quarantine") {
      scenario.policy = gateway::GatewayPolicy::AlertAndQuarantine;
    } else if (policy == "alert-only") {
      scenario.policy = gateway::GatewayPolicy::AlertOnly;
    } else {
      return invalid("unknown policy \"" + policy + "\"");
    }
  }

  if (doc.contains("traffic")) {
    if (!doc.at("traffic").is_array()) return invalid("traffic must be an array");
    for (const json& entry : doc.at("traffic")) {
      if (!entry.is_object()) return invalid("each traffic entry must be an object");
      if (auto key = unknown_key(entry, {"time", "device", "sensor", "value", "flow"})) {
        return invalid("unknown key \"" + *key + "\" in traffic entry");
      }
      ScenarioTraffic traffic;
      if (!entry.contains("time") || !read_u64(entry, "time", traffic.time)) {
        return invalid("traffic.time must be a non-negative integer");
      }
      if (!entry.contains("device") || !read_string(entry, "device", traffic.device) ||
          !entry.contains("sensor") || !read_string(entry, "sensor", traffic.sensor)) {
        return invalid("traffic.device and traffic.sensor must be strings");
      }
      if (!entry.contains("value") || !read_double(entry, "value", traffic.value)) {
        return invalid("traffic.value must be a number");
      }
      if (entry.contains("flow") && !read_double_array(entry.at("flow"), traffic.flow)) {
        return invalid("traffic.flow must be an array of numbers");
      }
      scenario.traffic.push_back(std::move(traffic));
    }
  }

  auto valid = validate_scenario(scenario);
  if (!valid.ok()) return Failure<ScenarioError>{valid.code(), valid.detail()};
  return scenario;
}

Status<ScenarioError> validate_scenario(const Scenario& scenario) {
  if (scenario.chain_id.empty()) return {ScenarioError::Invalid, "chain_id must be non-empty"};
  if (scenario.validators.empty()) return {ScenarioError::Invalid, "at least one validator"};
  if (scenario.delay_min > scenario.delay_max) {
    return {ScenarioError::Invalid, "delay.min exceeds delay.max"};
  }
  if (!(scenario.loss >= 0.0 && scenario.loss < 1.0)) {
    return {ScenarioError::Invalid, "loss must be in [0, 1)"};
  }

  std::set<std::string> members{"admin"};
  auto claim = [&members](const std::string& id, const char* what) -> std::string {
    if (!membership::valid_member_id(id)) {
      return std::string(what) + " id \"" + id + "\" is malformed";
    }
    if (!members.insert(id).second) {
      return std::string(what) + " id \"" + id + "\" collides with another member";
    }
    return {};
  };

  for (const std::string& validator : scenario.validators) {
    if (std::string err = claim(validator, "validator"); !err.empty()) {
      return {ScenarioError::Invalid, std::move(err)};
    }
  }
  std::set<std::string> devices;
  for (const ScenarioGateway& gw : scenario.gateways) {
    if (std::string err = claim(gw.id, "gateway"); !err.empty()) {
      return {ScenarioError::Invalid, std::move(err)};
    }
    for (const std::string& device : gw.devices) {
      if (std::string err = claim(device, "device"); !err.empty()) {
        return {ScenarioError::Invalid, std::move(err)};
      }
      devices.insert(device);
    }
  }

  std::set<std::string> sensors;
  for (const ScenarioSensor& sensor : scenario.sensors) {
    if (!membership::valid_member_id(sensor.id)) {
      return {ScenarioError::Invalid, "sensor id \"" + sensor.id + "\" is malformed"};
    }
    if (!sensors.insert(sensor.id).second) {
      return {ScenarioError::Invalid, "sensor id \"" + sensor.id + "\" is duplicated"};
    }
    if (!devices.contains(sensor.device)) {
      return {ScenarioError::Invalid,
              "sensor " + sensor.id + " references unknown device " + sensor.device};
    }
  }

  std::set<std::string> faulted;
  std::size_t non_honest = 0;
  for (const FaultProfile& fault : scenario.faults) {
    if (std::find(scenario.validators.begin(), scenario.validators.end(), fault.node) ==
        scenario.validators.end()) {
      return {ScenarioError::Invalid, "fault on non-validator " + fault.node};
    }
    if (!faulted.insert(fault.node).second) {
      return {ScenarioError::Invalid, "duplicate fault for " + fault.node};
    }
    if (fault.behavior != FaultBehavior::Honest) ++non_honest;
  }
  std::size_t f = (scenario.validators.size() - 1) / 3;
  if (non_honest > f) {
    return {ScenarioError::Invalid, "scenario declares " + std::to_string(non_honest) +
                                        " non-honest validators but tolerates only " +
                                        std::to_string(f)};
  }

  for (const ScenarioTraffic& traffic : scenario.traffic) {
    if (!devices.contains(traffic.device)) {
      return {ScenarioError::Invalid, "traffic from unknown device " + traffic.device};
    }
  }
  return {};
}

consensus::Replica* Simulation::replica(std::string_view id) {
  auto* node = dynamic_cast<ReplicaNode*>(sim->node(id));
  return node == nullptr ? nullptr : &node->replica();
}

const consensus::Replica* Simulation::replica(std::string_view id) const {
  const auto* node = dynamic_cast<const ReplicaNode*>(sim->node(id));
  return node == nullptr ? nullptr : &node->replica();
}

gateway::Gateway* Simulation::gateway(std::string_view id) {
  auto* node = dynamic_cast<GatewayNode*>(sim->node(id));
  return node == nullptr ? nullptr : &node->gateway();
}

const gateway::Gateway* Simulation::gateway(std::string_view id) const {
  const auto* node = dynamic_cast<const GatewayNode*>(sim->node(id));
  return node == nullptr ? nullptr : &node->gateway();
}

bool Simulation::is_honest(std::string_view validator) const {
  for (const FaultProfile& fault : faults) {
    if (fault.node == validator) return fault.behavior == FaultBehavior::Honest;
  }
  return true;
}

Result<std::unique_ptr<Simulation>, ScenarioError> build_simulation(
    const Scenario& scenario, std::shared_ptr<const gateway::FlowClassifier> model) {
  auto valid = validate_scenario(scenario);
  if (!valid.ok()) return Failure<ScenarioError>{valid.code(), valid.detail()};
  if (!scenario.traffic.empty() && model == nullptr) {
    return invalid("traffic script requires a classifier model");
  }

  auto simulation = std::make_unique<Simulation>();
  simulation->registry = std::make_unique<membership::Registry>(
      membership::Registry::bootstrap("admin", scenario_credential(scenario.chain_id, "admin")));
  membership::Registry& registry = *simulation->registry;
  for (const std::string& validator : scenario.validators) {
    registry.add_unchecked({validator, membership::Role::Validator,
                            scenario_credential(scenario.chain_id, validator)});
  }
  for (const ScenarioGateway& gw : scenario.gateways) {
    registry.add_unchecked(
        {gw.id, membership::Role::Gateway, scenario_credential(scenario.chain_id, gw.id)});
    for (const std::string& device : gw.devices) {
      registry.add_unchecked(
          {device, membership::Role::Device, scenario_credential(scenario.chain_id, device)});
      simulation->device_gateway.emplace(device, gw.id);
    }
  }

  simulation->chain_config.chain_id = scenario.chain_id;
  for (const ScenarioGateway& gw : scenario.gateways) {
    for (const std::string& device : gw.devices) {
      simulation->chain_config.devices.push_back({device, gw.id, ledger::DeviceStatus::Active});
    }
  }
  for (const ScenarioSensor& sensor : scenario.sensors) {
    simulation->chain_config.sensors.push_back(
        {sensor.id, sensor.device, ledger::ScaledValue::from_double(sensor.initial), 0});
  }

  SimConfig sim_config{scenario.seed, scenario.delay_min, scenario.delay_max, scenario.loss};
  simulation->sim = std::make_unique<Simulator>(sim_config, registry);
  Simulator& sim = *simulation->sim;

  for (const std::string& validator : scenario.validators) {
    consensus::ReplicaConfig rc;
    rc.id = validator;
    rc.validators = scenario.validators;
    rc.chain_config = simulation->chain_config;
    sim.add_node(std::make_unique<ReplicaNode>(std::move(rc), registry));
  }
  for (const ScenarioGateway& gw : scenario.gateways) {
    gateway::Gateway node(gw.id, registry,
                          std::set<std::string>(gw.devices.begin(), gw.devices.end()),
                          scenario.policy);
    node.set_model(model);
    sim.add_node(std::make_unique<GatewayNode>(std::move(node), scenario.validators));
  }
  for (const FaultProfile& fault : scenario.faults) sim.set_fault(fault);

  membership::HmacSigner signer(registry);
  std::map<std::string, std::uint64_t> nonces;
  for (const ScenarioTraffic& traffic : scenario.traffic) {
    ledger::Transaction tx = ledger::make_signed_tx(
        ledger::SensorUpdate{traffic.sensor, ledger::ScaledValue::from_double(traffic.value)},
        traffic.device, ++nonces[traffic.device], signer);
    auto scheduled = sim.submit(traffic.time, simulation->device_gateway.at(traffic.device),
                                DeviceSubmission{std::move(tx), traffic.flow});
    if (!scheduled.ok()) return invalid("traffic scheduling failed: " + scheduled.detail());
    ++simulation->submissions_scheduled;
  }

  simulation->validators = scenario.validators;
  for (const ScenarioGateway& gw : scenario.gateways) simulation->gateways.push_back(gw.id);
  simulation->faults = scenario.faults;
  simulation->model = std::move(model);
  return simulation;
}

RunSummary summarize_run(const Simulation& simulation) {
  RunSummary summary;
  summary.submissions_scheduled = simulation.submissions_scheduled;

  std::vector<const consensus::Replica*> honest;
  std::set<crypto::Digest> rejected_ids;
  for (const std::string& validator : simulation.validators) {
    if (!simulation.is_honest(validator)) continue;
    const consensus::Replica* replica = simulation.replica(validator);
    if (replica == nullptr) continue;
    honest.push_back(replica);
    summary.view_changes =
        std::max<std::uint64_t>(summary.view_changes, replica->completed_view_changes());
    if (replica->halted()) summary.any_halted = true;
    for (const consensus::RejectedRequest& rejection : replica->rejected()) {
      rejected_ids.insert(rejection.tx.tx_id);
    }
  }
  summary.rejections = rejected_ids.size();

  // Agreement is the prefix rule: at any height, honest replicas hold either
  // the same block or no block yet. An honest replica may trail the rest if
  // the run stopped mid-round, so every honest chain must match the longest
  // one block for block over its own length. Counts read from the longest.
  summary.honest_agreement = true;
  const consensus::Replica* longest = nullptr;
  for (const consensus::Replica* replica : honest) {
    if (longest == nullptr ||
        replica->chain().blocks().size() > longest->chain().blocks().size()) {
      longest = replica;
    }
  }
  if (longest != nullptr) {
    const std::vector<ledger::Block>& reference = longest->chain().blocks();
    for (const consensus::Replica* replica : honest) {
      const std::vector<ledger::Block>& blocks = replica->chain().blocks();
      for (std::size_t i = 0; i < blocks.size(); ++i) {
        if (blocks[i].block_hash != reference[i].block_hash) {
          summary.honest_agreement = false;
        }
      }
    }
    summary.committed_blocks = reference.size() - 1;
    for (std::size_t i = 1; i < reference.size(); ++i) {
      for (const ledger::Transaction& tx : reference[i].txs) {
        switch (tx.kind()) {
          case ledger::TxKind::SensorUpdate: ++summary.committed_updates; break;
          case ledger::TxKind::Alert: ++summary.committed_alerts; break;
          case ledger::TxKind::Register: ++summary.committed_registrations; break;
        }
      }
    }
  }

  for (const std::string& id : simulation.gateways) {
    const gateway::Gateway* gw = simulation.gateway(id);
    if (gw == nullptr) continue;
    for (const gateway::Decision& decision : gw->decisions()) {
      if (decision.action == gateway::GatewayAction::Forwarded) {
        ++summary.decisions_forwarded;
      } else {
        ++summary.decisions_alerted;
      }
    }
  }
  return summary;
}

}  // namespace iotchain::netsim
