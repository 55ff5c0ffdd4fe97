#pragma once

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "iotchain/common/result.hpp"
#include "iotchain/consensus/messages.hpp"
#include "iotchain/gateway/classifier.hpp"
#include "iotchain/ledger/types.hpp"
#include "iotchain/membership/signer.hpp"

namespace iotchain::gateway {

enum class GatewayError : std::uint8_t {
  AuthFailed = 0,
  SchemaMismatch = 1,
  ModelMissing = 2,
};
std::string_view gateway_error_name(GatewayError error);

enum class GatewayPolicy : std::uint8_t {
  AlertAndQuarantine = 0,  // raised alerts quarantine the offending device
  AlertOnly = 1,
};

enum class GatewayAction : std::uint8_t {
  Forwarded = 0,  // original transaction endorsed toward consensus
  Alerted = 1,    // transaction discarded, alert endorsed instead
};
std::string_view gateway_action_name(GatewayAction action);

// One line of the decision log: what the gateway did with one device
// submission.
struct Decision {
  std::uint64_t time = 0;
  std::string device;
  Verdict verdict;
  GatewayAction action = GatewayAction::Forwarded;
  crypto::Digest forwarded_tx;  // id of the transaction sent toward consensus

  bool operator==(const Decision&) const = default;
};

// Mediation point between devices and consensus. Every device submission is
// authenticated against the registry, its flow record is classified, and
// either the original transaction or a gateway-signed alert is wrapped into
// a signed consensus request. Nothing reaches the validators except through
// this path.
class Gateway {
 public:
  Gateway(std::string id, const membership::Registry& registry, std::set<std::string> devices,
          GatewayPolicy policy);

  // The model is shared: simulations run the same artifact on every gateway.
  void set_model(std::shared_ptr<const FlowClassifier> model) { model_ = std::move(model); }
  const FlowClassifier* model() const { return model_.get(); }

  Result<Verdict, GatewayError> inspect_flow(std::span<const double> features) const;

  // Returns the consensus request to broadcast to the validators.
  Result<consensus::PbftMessage, GatewayError> handle_submission(const ledger::Transaction& tx,
                                                                 std::span<const double> features,
                                                                 std::uint64_t now);

  const std::string& id() const { return id_; }
  GatewayPolicy policy() const { return policy_; }
  const std::set<std::string>& devices() const { return devices_; }
  const std::vector<Decision>& decisions() const { return decisions_; }
  const std::vector<std::string>& failures() const { return failures_; }

  // One line per submission: time, device, action, probability, class name.
  void export_decisions(std::ostream& out) const;

 private:
  consensus::PbftMessage make_request(const ledger::Transaction& tx) const;

  std::string id_;
  const membership::Registry* registry_;
  membership::HmacSigner signer_;
  std::set<std::string> devices_;
  GatewayPolicy policy_;
  std::shared_ptr<const FlowClassifier> model_;
  std::vector<Decision> decisions_;
  std::vector<std::string> failures_;
  std::uint64_t alert_nonce_ = 0;
};

}  // namespace iotchain::gateway
