#pragma once

#include <compare>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "iotchain/common/bytes.hpp"
#include "iotchain/crypto/sha256.hpp"

namespace iotchain::ledger {

using crypto::Digest;

// Fixed-point decimal with six fractional digits. Sensor readings and alert
// confidences are stored this way so that canonical encodings (and therefore
// hashes) never depend on floating-point formatting.
struct ScaledValue {
  static constexpr std::int64_t kScale = 1'000'000;

  std::int64_t raw = 0;

  static ScaledValue from_raw(std::int64_t raw) { return ScaledValue{raw}; }
  static ScaledValue from_double(double value);
  // Strict decimal text: optional sign, digits, optional '.' plus 1..6
  // fraction digits. Rejects anything else, including overflow.
  static std::optional<ScaledValue> parse(std::string_view text);

  double to_double() const { return double(raw) / double(kScale); }
  // Decimal text with trailing fraction zeros trimmed; round-trips via parse.
  std::string str() const;

  auto operator<=>(const ScaledValue&) const = default;
};

enum class DeviceStatus : std::uint8_t { Active = 0, Quarantined = 1 };

std::string_view device_status_name(DeviceStatus status);

struct DeviceAsset {
  std::string device_id;
  std::string owner_member;  // managing member, normally the edge gateway
  DeviceStatus status = DeviceStatus::Active;

  bool operator==(const DeviceAsset&) const = default;
};

struct SensorAsset {
  std::string sensor_id;
  std::string device_id;
  ScaledValue last_value;
  std::uint64_t updated_at = 0;  // world-state update counter at last write

  bool operator==(const SensorAsset&) const = default;
};

// Transaction payloads. The variant makes per-kind required fields a
// compile-time property instead of a validation rule.
struct SensorUpdate {
  std::string sensor_id;
  ScaledValue value;

  bool operator==(const SensorUpdate&) const = default;
};

struct Alert {
  std::string device_id;
  std::string attack_class;
  ScaledValue confidence;
  bool quarantine = true;

  bool operator==(const Alert&) const = default;
};

struct RegisterDevice {
  std::string device_id;
  std::string owner_member;

  bool operator==(const RegisterDevice&) const = default;
};

struct RegisterSensor {
  std::string sensor_id;
  std::string device_id;

  bool operator==(const RegisterSensor&) const = default;
};

using TxPayload = std::variant<SensorUpdate, Alert, RegisterDevice, RegisterSensor>;

enum class TxKind : std::uint8_t { SensorUpdate = 0, Alert = 1, Register = 2 };

struct Transaction {
  TxPayload payload;
  std::string submitter;
  std::uint64_t nonce = 0;  // per-submitter counter, disambiguates repeats
  Digest tx_id;             // digest of the canonical payload bytes
  Bytes signature;          // submitter's signature over the same bytes

  TxKind kind() const;
  bool operator==(const Transaction&) const = default;
};

struct Block {
  std::uint64_t height = 0;
  Digest prev_hash;
  std::string proposer;
  std::uint64_t timestamp = 0;  // simulated time at proposal
  std::vector<Transaction> txs;
  Digest block_hash;  // digest of the canonical block bytes

  bool operator==(const Block&) const = default;
};

// Genesis configuration. The genesis block's prev_hash commits to the
// canonical encoding of this structure, so initial assets are covered by the
// hash chain without appearing as transactions.
struct ChainConfig {
  std::string chain_id;
  std::vector<DeviceAsset> devices;
  std::vector<SensorAsset> sensors;

  bool operator==(const ChainConfig&) const = default;
};

}  // namespace iotchain::ledger
