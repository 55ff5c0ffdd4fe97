#include "iotchain/ledger/world_state.hpp"

#include <ostream>
#include <sstream>

#include "iotchain/ledger/codec.hpp"

namespace iotchain::ledger {

namespace {

using membership::Role;

bool role_may_submit(Role role, TxKind kind) {
  switch (kind) {
    case TxKind::SensorUpdate:
      return role == Role::Device || role == Role::Gateway;
    case TxKind::Alert:
      return role == Role::Gateway;
    case TxKind::Register:
      return role == Role::Admin;
  }
  return false;
}

}  // namespace

std::string_view tx_error_name(TxError error) {
  switch (error) {
    case TxError::UnknownSensor: return "UnknownSensor";
    case TxError::UnknownDevice: return "UnknownDevice";
    case TxError::BadSignature: return "BadSignature";
    case TxError::Unauthorized: return "Unauthorized";
    case TxError::DeviceQuarantined: return "DeviceQuarantined";
    case TxError::DuplicateAsset: return "DuplicateAsset";
    case TxError::Malformed: return "Malformed";
  }
  return "Unknown";
}

WorldState WorldState::from_config(const ChainConfig& config) {
  WorldState state;
  for (const DeviceAsset& device : config.devices) {
    state.devices_.emplace(device.device_id, device);
  }
  for (const SensorAsset& sensor : config.sensors) {
    state.sensors_.emplace(sensor.sensor_id, sensor);
  }
  return state;
}

const SensorAsset* WorldState::sensor(std::string_view sensor_id) const {
  auto it = sensors_.find(sensor_id);
  return it == sensors_.end() ? nullptr : &it->second;
}

const DeviceAsset* WorldState::device(std::string_view device_id) const {
  auto it = devices_.find(device_id);
  return it == devices_.end() ? nullptr : &it->second;
}

Status<TxError> WorldState::validate(const Transaction& tx, const membership::Registry& registry,
                                     const membership::Signer& signer) const {
  const membership::MemberIdentity* submitter = registry.find(tx.submitter);
  if (submitter == nullptr) {
    return {TxError::Unauthorized, "unknown submitter " + tx.submitter};
  }
  Bytes payload = encode_tx_payload(tx);
  if (tx.tx_id != crypto::sha256(payload)) {
    return {TxError::Malformed, "tx id does not match payload"};
  }
  if (!signer.verify(tx.submitter, payload, tx.signature)) {
    return {TxError::BadSignature, "signature check failed for " + tx.submitter};
  }
  if (!role_may_submit(submitter->role, tx.kind())) {
    return {TxError::Unauthorized, std::string(membership::role_name(submitter->role)) +
                                       " role may not submit this transaction kind"};
  }

  if (const auto* update = std::get_if<SensorUpdate>(&tx.payload)) {
    if (update->sensor_id.empty()) return {TxError::Malformed, "empty sensor id"};
    const SensorAsset* sensor = this->sensor(update->sensor_id);
    if (sensor == nullptr) return {TxError::UnknownSensor, "no sensor " + update->sensor_id};
    const DeviceAsset* device = this->device(sensor->device_id);
    if (device == nullptr) return {TxError::UnknownDevice, "no device " + sensor->device_id};
    if (device->status == DeviceStatus::Quarantined) {
      return {TxError::DeviceQuarantined, "device " + device->device_id + " is quarantined"};
    }
    // A device may only write its own sensors; gateways write on behalf of
    // any device they mediate.
    if (submitter->role == Role::Device && sensor->device_id != tx.submitter) {
      return {TxError::Unauthorized,
              "sensor " + update->sensor_id + " is not attached to " + tx.submitter};
    }
    return {};
  }

  if (const auto* alert = std::get_if<Alert>(&tx.payload)) {
    if (alert->device_id.empty() || alert->attack_class.empty()) {
      return {TxError::Malformed, "alert missing device or class"};
    }
    const DeviceAsset* device = this->device(alert->device_id);
    if (device == nullptr) return {TxError::UnknownDevice, "no device " + alert->device_id};
    if (device->status == DeviceStatus::Quarantined) {
      return {TxError::DeviceQuarantined, "device " + device->device_id + " is quarantined"};
    }
    return {};
  }

  if (const auto* reg = std::get_if<RegisterDevice>(&tx.payload)) {
    if (!membership::valid_member_id(reg->device_id) ||
        !membership::valid_member_id(reg->owner_member)) {
      return {TxError::Malformed, "bad device or owner id"};
    }
    if (device(reg->device_id) != nullptr) {
      return {TxError::DuplicateAsset, "device " + reg->device_id + " already registered"};
    }
    return {};
  }

  const auto& reg = std::get<RegisterSensor>(tx.payload);
  if (!membership::valid_member_id(reg.sensor_id) || !membership::valid_member_id(reg.device_id)) {
    return {TxError::Malformed, "bad sensor or device id"};
  }
  if (sensor(reg.sensor_id) != nullptr) {
    return {TxError::DuplicateAsset, "sensor " + reg.sensor_id + " already registered"};
  }
  const DeviceAsset* device = this->device(reg.device_id);
  if (device == nullptr) return {TxError::UnknownDevice, "no device " + reg.device_id};
  if (device->status == DeviceStatus::Quarantined) {
    return {TxError::DeviceQuarantined, "device " + device->device_id + " is quarantined"};
  }
  return {};
}

Status<TxError> WorldState::apply(const Transaction& tx, std::uint64_t height) {
  if (const auto* update = std::get_if<SensorUpdate>(&tx.payload)) {
    auto it = sensors_.find(update->sensor_id);
    if (it == sensors_.end()) return {TxError::UnknownSensor, "no sensor " + update->sensor_id};
    it->second.last_value = update->value;
    it->second.updated_at = ++update_counter_;
    return {};
  }

  if (const auto* alert = std::get_if<Alert>(&tx.payload)) {
    auto it = devices_.find(alert->device_id);
    if (it == devices_.end()) return {TxError::UnknownDevice, "no device " + alert->device_id};
    alerts_.push_back({*alert, tx.submitter, height});
    if (alert->quarantine) it->second.status = DeviceStatus::Quarantined;
    return {};
  }

  if (const auto* reg = std::get_if<RegisterDevice>(&tx.payload)) {
    auto [it, inserted] =
        devices_.emplace(reg->device_id, DeviceAsset{reg->device_id, reg->owner_member});
    if (!inserted) return {TxError::DuplicateAsset, "device " + reg->device_id};
    return {};
  }

  const auto& reg = std::get<RegisterSensor>(tx.payload);
  if (devices_.find(reg.device_id) == devices_.end()) {
    return {TxError::UnknownDevice, "no device " + reg.device_id};
  }
  auto [it, inserted] =
      sensors_.emplace(reg.sensor_id, SensorAsset{reg.sensor_id, reg.device_id, {}, 0});
  if (!inserted) return {TxError::DuplicateAsset, "sensor " + reg.sensor_id};
  return {};
}

void WorldState::dump(std::ostream& out) const {
  for (const auto& [id, device] : devices_) {
    out << "device " << id << ' ' << device.owner_member << ' '
        << device_status_name(device.status) << '\n';
  }
  for (const auto& [id, sensor] : sensors_) {
    out << "sensor " << id << ' ' << sensor.device_id << ' ' << sensor.last_value.str() << ' '
        << sensor.updated_at << '\n';
  }
  std::size_t index = 0;
  for (const AppliedAlert& entry : alerts_) {
    out << "alert " << index++ << ' ' << entry.alert.device_id << ' ';
    // Attack classes contain spaces; exported as strict lowercase hex so the
    // line stays space-separated.
    out << to_hex(to_bytes(entry.alert.attack_class)) << ' ' << entry.alert.confidence.str() << ' '
        << (entry.alert.quarantine ? 1 : 0) << ' ' << entry.submitter << ' ' << entry.height
        << '\n';
  }
}

Digest WorldState::digest() const {
  std::ostringstream text;
  dump(text);
  return crypto::sha256(text.str());
}

}  // namespace iotchain::ledger
