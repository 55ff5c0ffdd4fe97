#include <doctest.h>

#include <memory>
#include <span>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "iotchain/common/rng.hpp"
#include "iotchain/netsim/scenario.hpp"

using namespace iotchain;
using namespace iotchain::netsim;
using ledger::DeviceStatus;
using ledger::ScaledValue;
using ledger::TxError;

namespace {

// Single-threshold stand-in for a trained model: the first feature above
// 0.5 marks the flow as a flood.
class ThresholdModel final : public gateway::FlowClassifier {
 public:
  std::size_t feature_count() const override { return 3; }
  gateway::Verdict classify(std::span<const double> features) const override {
    if (features[0] > 0.5) return {4, "DoS Hulk", true, 0.99};
    return {0, "Benign", false, 0.97};
  }
};

std::shared_ptr<const gateway::FlowClassifier> threshold_model() {
  return std::make_shared<ThresholdModel>();
}

// Node that only records what reaches it; used to probe the scheduler.
class RecorderNode final : public Node {
 public:
  explicit RecorderNode(std::string id) : id_(std::move(id)) {}

  const std::string& id() const override { return id_; }
  std::vector<NodeOutput> on_event(const SimPayload& payload, std::uint64_t now) override {
    if (const auto* pop = std::get_if<TimerPop>(&payload)) log_.emplace_back(now, pop->token);
    return {};
  }

  const std::vector<std::pair<std::uint64_t, std::uint64_t>>& log() const { return log_; }

 private:
  std::string id_;
  std::vector<std::pair<std::uint64_t, std::uint64_t>> log_;
};

// Four validators, one gateway with two devices, one sensor per device.
std::string scenario_text(std::uint64_t seed, const std::string& faults,
                          const std::string& traffic, const std::string& extra = {}) {
  return std::string(R"({
    "seed": )") +
         std::to_string(seed) + R"(,
    "delay": {"min": 1, "max": 5},
    "chain_id": "simnet",
    "validators": ["v0", "v1", "v2", "v3"],
    "gateways": [{"id": "gw0", "devices": ["d0", "d1"]}],
    "sensors": [
      {"id": "s0", "device": "d0", "initial": 20.0},
      {"id": "s1", "device": "d1", "initial": 1.0}
    ],
    "faults": [)" +
         faults + R"(],
    "traffic": [)" +
         traffic + "]" + extra + "\n  }";
}

std::string benign(std::uint64_t time, const std::string& device, const std::string& sensor,
                   double value) {
  return "{\"time\": " + std::to_string(time) + ", \"device\": \"" + device +
         "\", \"sensor\": \"" + sensor + "\", \"value\": " + std::to_string(value) +
         ", \"flow\": [0.1, 0.2, 0.3]}";
}

std::string attack(std::uint64_t time, const std::string& device, const std::string& sensor,
                   double value) {
  return "{\"time\": " + std::to_string(time) + ", \"device\": \"" + device +
         "\", \"sensor\": \"" + sensor + "\", \"value\": " + std::to_string(value) +
         ", \"flow\": [0.9, 0.2, 0.3]}";
}

std::unique_ptr<Simulation> run_scenario(const std::string& text,
                                         std::size_t max_steps = 200'000) {
  auto parsed = parse_scenario(text);
  REQUIRE(parsed.ok());
  auto built = build_simulation(parsed.value(), threshold_model());
  REQUIRE(built.ok());
  auto simulation = built.take();
  simulation->sim->run_until_quiet(max_steps);
  return simulation;
}

std::string chain_export(const Simulation& simulation, const std::string& validator) {
  std::ostringstream out;
  simulation.replica(validator)->chain().export_chain(out);
  return out.str();
}

}  // namespace

TEST_SUITE("netsim") {
  TEST_CASE("events deliver in time order with insertion-order ties") {
    membership::Registry registry = membership::Registry::bootstrap("admin", Bytes(32, 1));
    Simulator sim(SimConfig{7, 1, 10, 0.0}, registry);
    auto owned_a = std::make_unique<RecorderNode>("a");
    auto owned_b = std::make_unique<RecorderNode>("b");
    const RecorderNode* a = owned_a.get();
    const RecorderNode* b = owned_b.get();
    sim.add_node(std::move(owned_a));
    sim.add_node(std::move(owned_b));

    CHECK(sim.schedule_at(5, "a", TimerPop{1}).ok());
    CHECK(sim.schedule_at(3, "b", TimerPop{2}).ok());
    CHECK(sim.schedule_at(5, "b", TimerPop{3}).ok());
    CHECK(sim.schedule_at(3, "a", TimerPop{4}).ok());

    auto missing = sim.schedule_at(4, "nope", TimerPop{9});
    REQUIRE(!missing.ok());
    CHECK(missing.code() == SimError::UnknownTarget);
    CHECK(std::string(sim_error_name(missing.code())) == "UnknownTarget");

    CHECK(sim.run_until_quiet() == 4);
    CHECK(sim.now() == 5);
    CHECK(a->log() == std::vector<std::pair<std::uint64_t, std::uint64_t>>{{3, 4}, {5, 1}});
    CHECK(b->log() == std::vector<std::pair<std::uint64_t, std::uint64_t>>{{3, 2}, {5, 3}});

    REQUIRE(sim.trace().size() == 4);
    CHECK(sim.trace()[0] == TraceEntry{3, "b", "", "timer", 0, 2});
    CHECK(sim.trace()[1] == TraceEntry{3, "a", "", "timer", 0, 4});
    CHECK(sim.trace()[2] == TraceEntry{5, "a", "", "timer", 0, 1});
    CHECK(sim.trace()[3] == TraceEntry{5, "b", "", "timer", 0, 3});

    auto past = sim.schedule_at(4, "a", TimerPop{5});
    REQUIRE(!past.ok());
    CHECK(past.code() == SimError::PastDelivery);
  }

  TEST_CASE("identical seeds replay identical runs") {
    const std::string text = scenario_text(
        11, "",
        benign(0, "d0", "s0", 21.5) + ", " + benign(0, "d1", "s1", 2.5) + ", " +
            benign(60, "d0", "s0", 22.0));
    auto first = run_scenario(text);
    auto second = run_scenario(text);

    CHECK(first->sim->trace() == second->sim->trace());
    CHECK(first->sim->now() == second->sim->now());
    for (const std::string& validator : first->validators) {
      CHECK(chain_export(*first, validator) == chain_export(*second, validator));
    }

    auto reseeded = run_scenario(scenario_text(
        12, "",
        benign(0, "d0", "s0", 21.5) + ", " + benign(0, "d1", "s1", 2.5) + ", " +
            benign(60, "d0", "s0", 22.0)));
    CHECK(first->sim->trace() != reseeded->sim->trace());
  }

  TEST_CASE("honest traffic commits on every validator") {
    auto simulation = run_scenario(scenario_text(
        21, "",
        benign(0, "d0", "s0", 21.5) + ", " + benign(0, "d1", "s1", 2.5) + ", " +
            benign(60, "d0", "s0", 22.0)));

    RunSummary summary = summarize_run(*simulation);
    CHECK(summary.honest_agreement);
    CHECK(!summary.any_halted);
    CHECK(summary.view_changes == 0);
    CHECK(summary.submissions_scheduled == 3);
    CHECK(summary.committed_updates == 3);
    CHECK(summary.committed_alerts == 0);
    CHECK(summary.rejections == 0);
    CHECK(summary.decisions_forwarded == 3);
    CHECK(summary.decisions_alerted == 0);
    CHECK(summary.committed_updates + summary.committed_alerts + summary.rejections ==
          summary.submissions_scheduled);
    CHECK(simulation->sim->lost_messages() == 0);

    const auto& state = simulation->replica("v2")->chain().state();
    CHECK(state.sensor("s0")->last_value == ScaledValue::from_double(22.0));
    CHECK(state.sensor("s1")->last_value == ScaledValue::from_double(2.5));
    for (const std::string& validator : simulation->validators) {
      CHECK(simulation->replica(validator)->last_executed() ==
            summarize_run(*simulation).committed_blocks);
    }
  }

  TEST_CASE("a malicious flow quarantines the device and blocks later traffic") {
    auto simulation = run_scenario(scenario_text(
        31, "",
        benign(0, "d1", "s1", 2.5) + ", " + attack(0, "d0", "s0", 21.5) + ", " +
            benign(400, "d0", "s0", 25.0)));

    RunSummary summary = summarize_run(*simulation);
    CHECK(summary.honest_agreement);
    CHECK(!summary.any_halted);
    CHECK(summary.submissions_scheduled == 3);
    CHECK(summary.committed_updates == 1);
    CHECK(summary.committed_alerts == 1);
    CHECK(summary.rejections == 1);
    CHECK(summary.decisions_forwarded == 2);
    CHECK(summary.decisions_alerted == 1);
    CHECK(summary.committed_updates + summary.committed_alerts + summary.rejections ==
          summary.submissions_scheduled);

    const auto& state = simulation->replica("v0")->chain().state();
    CHECK(state.device("d0")->status == DeviceStatus::Quarantined);
    CHECK(state.sensor("s0")->last_value == ScaledValue::from_double(20.0));
    REQUIRE(state.alerts().size() == 1);
    CHECK(state.alerts()[0].alert.device_id == "d0");
    CHECK(state.alerts()[0].alert.attack_class == "DoS Hulk");
    CHECK(state.alerts()[0].alert.quarantine);
    CHECK(state.alerts()[0].submitter == "gw0");

    const auto& rejected = simulation->replica("v0")->rejected();
    REQUIRE(rejected.size() == 1);
    CHECK(rejected[0].code == TxError::DeviceQuarantined);
  }

  TEST_CASE("alert-only policy leaves the device active") {
    auto simulation = run_scenario(scenario_text(
        41, "",
        benign(0, "d1", "s1", 2.5) + ", " + attack(0, "d0", "s0", 21.5) + ", " +
            benign(400, "d0", "s0", 25.0),
        ",\n    \"policy\": \"alert-only\""));

    RunSummary summary = summarize_run(*simulation);
    CHECK(summary.honest_agreement);
    CHECK(summary.committed_updates == 2);
    CHECK(summary.committed_alerts == 1);
    CHECK(summary.rejections == 0);
    CHECK(summary.committed_updates + summary.committed_alerts + summary.rejections ==
          summary.submissions_scheduled);

    const auto& state = simulation->replica("v0")->chain().state();
    CHECK(state.device("d0")->status == DeviceStatus::Active);
    CHECK(state.sensor("s0")->last_value == ScaledValue::from_double(25.0));
  }

  TEST_CASE("a silent primary is replaced and the run completes") {
    auto simulation = run_scenario(scenario_text(
        51, R"({"node": "v0", "behavior": "silent"})",
        benign(0, "d0", "s0", 21.5) + ", " + benign(0, "d1", "s1", 2.5)));

    RunSummary summary = summarize_run(*simulation);
    CHECK(summary.honest_agreement);
    CHECK(!summary.any_halted);
    CHECK(summary.view_changes == 1);
    CHECK(summary.committed_updates == 2);
    CHECK(summary.rejections == 0);

    CHECK(simulation->replica("v1")->chain().blocks().back().proposer == "v1");
    CHECK(simulation->replica("v1")->view() == 1);
    // The silent replica still receives everything and stays current.
    CHECK(simulation->replica("v0")->last_executed() == summary.committed_blocks);
  }

  TEST_CASE("an equivocating primary cannot split the honest ledger") {
    auto simulation = run_scenario(scenario_text(
        61, R"({"node": "v0", "behavior": "equivocate"})", benign(0, "d0", "s0", 21.5)));

    RunSummary summary = summarize_run(*simulation);
    CHECK(summary.honest_agreement);
    CHECK(!summary.any_halted);
    CHECK(summary.view_changes == 1);
    CHECK(summary.committed_blocks == 1);
    CHECK(summary.committed_updates == 1);

    // The surviving proposal is the equivocator's own block, carried through
    // the view change by its prepared certificate.
    CHECK(simulation->replica("v1")->chain().blocks().back().proposer == "v0");
  }

  TEST_CASE("a delay-injecting validator slows but does not derail consensus") {
    auto simulation = run_scenario(scenario_text(
        71, R"({"node": "v1", "behavior": "delay_injector", "extra_delay": 15})",
        benign(0, "d0", "s0", 21.5) + ", " + benign(0, "d1", "s1", 2.5)));

    RunSummary summary = summarize_run(*simulation);
    CHECK(summary.honest_agreement);
    CHECK(!summary.any_halted);
    CHECK(summary.committed_updates == 2);
    CHECK(summary.rejections == 0);
  }

  TEST_CASE("random schedules with faults preserve honest agreement") {
    Rng rng(2026);
    const char* behaviors[] = {"honest", "silent", "equivocate", "delay_injector"};
    for (std::uint64_t seed = 1; seed <= 1000; ++seed) {
      Scenario scenario;
      scenario.seed = seed;
      scenario.delay_min = 1;
      scenario.delay_max = 1 + rng.below(10);
      scenario.chain_id = "fuzznet";
      scenario.validators = {"v0", "v1", "v2", "v3"};
      scenario.gateways = {{"gw0", {"d0", "d1"}}};
      scenario.sensors = {{"s0", "d0", 20.0}, {"s1", "d1", 1.0}};

      FaultProfile fault;
      fault.node = "v" + std::to_string(rng.below(4));
      REQUIRE(parse_fault_behavior(behaviors[rng.below(4)], fault.behavior));
      if (fault.behavior == FaultBehavior::DelayInjector) fault.extra_delay = rng.below(21);
      scenario.faults = {fault};

      std::size_t submissions = 2 + rng.below(3);
      for (std::size_t i = 0; i < submissions; ++i) {
        ScenarioTraffic traffic;
        bool first_device = rng.below(2) == 0;
        traffic.time = rng.below(120);
        traffic.device = first_device ? "d0" : "d1";
        traffic.sensor = first_device ? "s0" : "s1";
        traffic.value = rng.uniform(0.0, 50.0);
        double flow_head = rng.below(4) == 0 ? 0.9 : 0.1;
        traffic.flow = {flow_head, 0.2, 0.3};
        scenario.traffic.push_back(std::move(traffic));
      }

      auto built = build_simulation(scenario, threshold_model());
      REQUIRE(built.ok());
      auto simulation = built.take();
      simulation->sim->run_until_quiet(150'000);

      RunSummary summary = summarize_run(*simulation);
      CHECK_MESSAGE(summary.honest_agreement, "fork at fuzz seed " << seed);
      CHECK_MESSAGE(!summary.any_halted, "halt at fuzz seed " << seed);
      CHECK_MESSAGE(summary.committed_updates + summary.committed_alerts +
                            summary.rejections ==
                        summary.submissions_scheduled,
                    "conservation breaks at fuzz seed " << seed);
      for (const std::string& validator : simulation->validators) {
        if (!simulation->is_honest(validator)) continue;
        CHECK_MESSAGE(simulation->replica(validator)->last_executed() ==
                          summary.committed_blocks,
                      validator << " lags at fuzz seed " << seed);
      }
    }
  }

  TEST_CASE("lossy delivery may stall progress but never forks the ledger") {
    Rng rng(7119);
    for (std::uint64_t seed = 1; seed <= 30; ++seed) {
      Scenario scenario;
      scenario.seed = seed;
      scenario.delay_min = 1;
      scenario.delay_max = 1 + rng.below(10);
      scenario.loss = 0.05 + 0.05 * double(rng.below(2));
      scenario.chain_id = "lossnet";
      scenario.validators = {"v0", "v1", "v2", "v3"};
      scenario.gateways = {{"gw0", {"d0", "d1"}}};
      scenario.sensors = {{"s0", "d0", 20.0}, {"s1", "d1", 1.0}};

      std::size_t submissions = 2 + rng.below(3);
      for (std::size_t i = 0; i < submissions; ++i) {
        ScenarioTraffic traffic;
        bool first_device = rng.below(2) == 0;
        traffic.time = rng.below(120);
        traffic.device = first_device ? "d0" : "d1";
        traffic.sensor = first_device ? "s0" : "s1";
        traffic.value = rng.uniform(0.0, 50.0);
        traffic.flow = {0.1, 0.2, 0.3};
        scenario.traffic.push_back(std::move(traffic));
      }

      auto built = build_simulation(scenario, threshold_model());
      REQUIRE(built.ok());
      auto simulation = built.take();
      // A stranded replica re-demands view changes forever (there is no state
      // transfer), so lossy runs need a step cap rather than quiescence.
      simulation->sim->run_until_quiet(4'000);

      // Only the safety half is asserted here: no fork and no halt. Progress
      // depends on which messages happened to drop.
      RunSummary summary = summarize_run(*simulation);
      CHECK_MESSAGE(summary.honest_agreement, "fork at loss seed " << seed);
      CHECK_MESSAGE(!summary.any_halted, "halt at loss seed " << seed);
      CHECK(summary.committed_updates + summary.committed_alerts <=
            summary.submissions_scheduled);
    }
  }

  TEST_CASE("scenario parsing reports precise errors") {
    SUBCASE("malformed json carries line and column") {
      auto bad = parse_scenario("{\"seed\": }");
      REQUIRE(!bad.ok());
      CHECK(bad.code() == ScenarioError::Parse);
      CHECK(bad.detail().find("line 1, column") != std::string::npos);

      auto second_line = parse_scenario("{\n  \"seed\": nope\n}");
      REQUIRE(!second_line.ok());
      CHECK(second_line.code() == ScenarioError::Parse);
      CHECK(second_line.detail().find("line 2, column") != std::string::npos);
      CHECK(std::string(scenario_error_name(second_line.code())) == "Parse");
    }

    SUBCASE("unknown keys and values are rejected") {
      auto unknown = parse_scenario(R"({"chain_id": "c", "validators": ["v0"], "bogus": 1})");
      REQUIRE(!unknown.ok());
      CHECK(unknown.code() == ScenarioError::Invalid);
      CHECK(unknown.detail() == "unknown key \"bogus\"");

      auto policy = parse_scenario(
          R"({"chain_id": "c", "validators": ["v0"], "policy": "ignore"})");
      REQUIRE(!policy.ok());
      CHECK(policy.detail() == "unknown policy \"ignore\"");

      auto behavior = parse_scenario(scenario_text(
          1, R"({"node": "v0", "behavior": "sleepy"})", ""));
      REQUIRE(!behavior.ok());
      CHECK(behavior.detail() == "unknown fault behavior \"sleepy\"");

      auto missing = parse_scenario(R"({"chain_id": "c"})");
      REQUIRE(!missing.ok());
      CHECK(missing.detail() == "validators is required");
    }

    SUBCASE("topology rules are enforced") {
      auto gateway_fault = parse_scenario(scenario_text(
          1, R"({"node": "gw0", "behavior": "silent"})", ""));
      REQUIRE(!gateway_fault.ok());
      CHECK(gateway_fault.detail() == "fault on non-validator gw0");

      auto two_faults = parse_scenario(scenario_text(
          1, R"({"node": "v0", "behavior": "silent"}, {"node": "v1", "behavior": "equivocate"})",
          ""));
      REQUIRE(!two_faults.ok());
      CHECK(two_faults.detail().find("tolerates only 1") != std::string::npos);

      auto duplicate = parse_scenario(
          R"({"chain_id": "c", "validators": ["v0", "v0"]})");
      REQUIRE(!duplicate.ok());
      CHECK(duplicate.detail().find("collides") != std::string::npos);

      auto orphan_sensor = parse_scenario(
          R"({"chain_id": "c", "validators": ["v0"],
              "sensors": [{"id": "s0", "device": "d9", "initial": 1.0}]})");
      REQUIRE(!orphan_sensor.ok());
      CHECK(orphan_sensor.detail().find("unknown device d9") != std::string::npos);

      auto orphan_traffic = parse_scenario(scenario_text(1, "", benign(0, "d9", "s0", 1.0)));
      REQUIRE(!orphan_traffic.ok());
      CHECK(orphan_traffic.detail() == "traffic from unknown device d9");

      auto bad_id = parse_scenario(R"({"chain_id": "c", "validators": ["v 0"]})");
      REQUIRE(!bad_id.ok());
      CHECK(bad_id.detail().find("malformed") != std::string::npos);
    }

    SUBCASE("network parameters are bounded") {
      Scenario scenario;
      scenario.chain_id = "c";
      scenario.validators = {"v0"};
      scenario.delay_min = 7;
      scenario.delay_max = 2;
      auto inverted = validate_scenario(scenario);
      REQUIRE(!inverted.ok());
      CHECK(inverted.detail() == "delay.min exceeds delay.max");

      scenario.delay_min = 1;
      scenario.delay_max = 5;
      scenario.loss = 1.0;
      auto certain_loss = validate_scenario(scenario);
      REQUIRE(!certain_loss.ok());
      CHECK(certain_loss.detail() == "loss must be in [0, 1)");

      scenario.loss = 0.0;
      scenario.chain_id = "";
      CHECK(!validate_scenario(scenario).ok());
    }

    SUBCASE("traffic without a model refuses to build") {
      auto parsed = parse_scenario(scenario_text(1, "", benign(0, "d0", "s0", 1.0)));
      REQUIRE(parsed.ok());
      auto built = build_simulation(parsed.value(), nullptr);
      REQUIRE(!built.ok());
      CHECK(built.detail() == "traffic script requires a classifier model");
    }

    SUBCASE("a full scenario round-trips into its struct") {
      auto parsed = parse_scenario(scenario_text(
          9, R"({"node": "v2", "behavior": "delay_injector", "extra_delay": 4})",
          benign(5, "d0", "s0", 21.5), ",\n    \"loss\": 0.25"));
      REQUIRE(parsed.ok());
      const Scenario& scenario = parsed.value();
      CHECK(scenario.seed == 9);
      CHECK(scenario.delay_min == 1);
      CHECK(scenario.delay_max == 5);
      CHECK(scenario.loss == 0.25);
      CHECK(scenario.chain_id == "simnet");
      CHECK(scenario.validators ==
            std::vector<std::string>{"v0", "v1", "v2", "v3"});
      REQUIRE(scenario.gateways.size() == 1);
      CHECK(scenario.gateways[0].devices == std::vector<std::string>{"d0", "d1"});
      REQUIRE(scenario.faults.size() == 1);
      CHECK(scenario.faults[0] ==
            FaultProfile{"v2", FaultBehavior::DelayInjector, 4});
      REQUIRE(scenario.traffic.size() == 1);
      CHECK(scenario.traffic[0].device == "d0");
      CHECK(scenario.traffic[0].flow == std::vector<double>{0.1, 0.2, 0.3});
      CHECK(scenario.policy == gateway::GatewayPolicy::AlertAndQuarantine);
    }
  }
}
