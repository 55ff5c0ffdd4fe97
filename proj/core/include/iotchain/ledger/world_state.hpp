#pragma once

#include <iosfwd>
#include <map>
#include <vector>

#include "iotchain/common/result.hpp"
#include "iotchain/ledger/types.hpp"
#include "iotchain/membership/registry.hpp"
#include "iotchain/membership/signer.hpp"

namespace iotchain::ledger {

enum class TxError {
  UnknownSensor,
  UnknownDevice,
  BadSignature,
  Unauthorized,
  DeviceQuarantined,
  DuplicateAsset,
  Malformed,
};

std::string_view tx_error_name(TxError error);

struct AppliedAlert {
  Alert alert;
  std::string submitter;
  std::uint64_t height = 0;

  bool operator==(const AppliedAlert&) const = default;
};

// Deterministic key-value view of the chain: assets keyed by id plus the
// ordered list of applied alerts. Equal states compare equal field by field,
// which is what the replay checks rely on.
class WorldState {
 public:
  WorldState() = default;
  static WorldState from_config(const ChainConfig& config);

  const SensorAsset* sensor(std::string_view sensor_id) const;
  const DeviceAsset* device(std::string_view device_id) const;
  const std::map<std::string, SensorAsset, std::less<>>& sensors() const { return sensors_; }
  const std::map<std::string, DeviceAsset, std::less<>>& devices() const { return devices_; }
  const std::vector<AppliedAlert>& alerts() const { return alerts_; }
  std::uint64_t updates_applied() const { return update_counter_; }

  // Full admission check: well-formed payload, known submitter, valid
  // signature, role authorization for the kind, live referenced assets.
  Status<TxError> validate(const Transaction& tx, const membership::Registry& registry,
                           const membership::Signer& signer) const;

  // State transition. Precondition: validate() accepted the transaction
  // against this exact state; only referential integrity is rechecked.
  Status<TxError> apply(const Transaction& tx, std::uint64_t height);

  // One asset per line, ids sorted, alerts in applied order.
  void dump(std::ostream& out) const;
  Digest digest() const;

  bool operator==(const WorldState&) const = default;

 private:
  std::map<std::string, SensorAsset, std::less<>> sensors_;
  std::map<std::string, DeviceAsset, std::less<>> devices_;
  std::vector<AppliedAlert> alerts_;
  std::uint64_t update_counter_ = 0;
};

}  // namespace iotchain::ledger
