#include "iotchain/gateway/gateway.hpp"

#include <cstdio>
#include <ostream>

#include "iotchain/ledger/codec.hpp"
#include "iotchain/ledger/txbuild.hpp"

namespace iotchain::gateway {

std::string_view gateway_error_name(GatewayError error) {
  switch (error) {
    case GatewayError::AuthFailed: return "AuthFailed";
    case GatewayError::SchemaMismatch: return "SchemaMismatch";
    case GatewayError::ModelMissing: return "ModelMissing";
  }
  return "unknown";
}

std::string_view gateway_action_name(GatewayAction action) {
  switch (action) {
    case GatewayAction::Forwarded: return "forwarded";
    case GatewayAction::Alerted: return "alerted";
  }
  return "unknown";
}

Gateway::Gateway(std::string id, const membership::Registry& registry,
                 std::set<std::string> devices, GatewayPolicy policy)
    : id_(std::move(id)),
      registry_(&registry),
      signer_(registry),
      devices_(std::move(devices)),
      policy_(policy) {}

Result<Verdict, GatewayError> Gateway::inspect_flow(std::span<const double> features) const {
  if (model_ == nullptr) {
    return Failure<GatewayError>{GatewayError::ModelMissing, "no model loaded"};
  }
  if (features.size() != model_->feature_count()) {
    return Failure<GatewayError>{
        GatewayError::SchemaMismatch,
        "flow has " + std::to_string(features.size()) + " features, model expects " +
            std::to_string(model_->feature_count())};
  }
  return model_->classify(features);
}

consensus::PbftMessage Gateway::make_request(const ledger::Transaction& tx) const {
  consensus::PbftMessage request;
  request.phase = consensus::Phase::Request;
  request.digest = tx.tx_id;
  request.request_tx = tx;
  request.sender = id_;
  request.signature = signer_.sign(id_, request.signing_bytes());
  return request;
}

Result<consensus::PbftMessage, GatewayError> Gateway::handle_submission(
    const ledger::Transaction& tx, std::span<const double> features, std::uint64_t now) {
  auto fail = [this](GatewayError code, std::string detail) {
    failures_.push_back(std::string(gateway_error_name(code)) + ": " + detail);
    return Failure<GatewayError>{code, std::move(detail)};
  };

  if (!devices_.contains(tx.submitter)) {
    return fail(GatewayError::AuthFailed, "device " + tx.submitter + " not mediated by " + id_);
  }
  const membership::MemberIdentity* member = registry_->find(tx.submitter);
  if (member == nullptr || member->role != membership::Role::Device) {
    return fail(GatewayError::AuthFailed, "submitter " + tx.submitter + " is not a device");
  }
  Bytes payload = ledger::encode_tx_payload(tx);
  if (tx.tx_id != crypto::sha256(payload) || !signer_.verify(tx.submitter, payload, tx.signature)) {
    return fail(GatewayError::AuthFailed, "bad transaction signature from " + tx.submitter);
  }

  auto verdict = inspect_flow(features);
  if (!verdict.ok()) {
    failures_.push_back(std::string(gateway_error_name(verdict.code())) + ": " + verdict.detail());
    return Failure<GatewayError>{verdict.code(), verdict.detail()};
  }

  if (!verdict.value().is_malicious) {
    decisions_.push_back({now, tx.submitter, verdict.value(), GatewayAction::Forwarded, tx.tx_id});
    return make_request(tx);
  }

  ledger::Alert alert;
  alert.device_id = tx.submitter;
  alert.attack_class = verdict.value().class_name;
  alert.confidence = ledger::ScaledValue::from_double(verdict.value().probability);
  alert.quarantine = policy_ == GatewayPolicy::AlertAndQuarantine;
  ledger::Transaction alert_tx =
      ledger::make_signed_tx(alert, id_, ++alert_nonce_, signer_);
  decisions_.push_back({now, tx.submitter, verdict.value(), GatewayAction::Alerted,
                        alert_tx.tx_id});
  return make_request(alert_tx);
}

void Gateway::export_decisions(std::ostream& out) const {
  char probability[16];
  for (const Decision& decision : decisions_) {
    std::snprintf(probability, sizeof(probability), "%.4f", decision.verdict.probability);
    out << decision.time << ' ' << decision.device << ' '
        << gateway_action_name(decision.action) << ' ' << probability << ' '
        << decision.verdict.class_name << '\n';
  }
}

}  // namespace iotchain::gateway
