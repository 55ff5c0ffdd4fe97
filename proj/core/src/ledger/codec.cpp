#include "iotchain/ledger/codec.hpp"

#include <cstring>

namespace iotchain::ledger {

namespace {

constexpr std::uint8_t kTagSensorUpdate = 0;
constexpr std::uint8_t kTagAlert = 1;
constexpr std::uint8_t kTagRegisterDevice = 2;
constexpr std::uint8_t kTagRegisterSensor = 3;

constexpr std::size_t kMaxStringLength = 1 << 20;

}  // namespace

void CanonicalWriter::u32(std::uint32_t v) {
  out_.push_back(std::uint8_t(v >> 24));
  out_.push_back(std::uint8_t(v >> 16));
  out_.push_back(std::uint8_t(v >> 8));
  out_.push_back(std::uint8_t(v));
}

void CanonicalWriter::u64(std::uint64_t v) {
  u32(std::uint32_t(v >> 32));
  u32(std::uint32_t(v));
}

void CanonicalWriter::raw32(const Digest& digest) {
  out_.insert(out_.end(), digest.bytes.begin(), digest.bytes.end());
}

void CanonicalWriter::str(std::string_view s) {
  u32(std::uint32_t(s.size()));
  out_.insert(out_.end(), s.begin(), s.end());
}

void CanonicalWriter::blob(std::span<const std::uint8_t> b) {
  u32(std::uint32_t(b.size()));
  out_.insert(out_.end(), b.begin(), b.end());
}

Result<std::uint8_t, DecodeError> CanonicalReader::u8() {
  if (pos_ + 1 > data_.size()) return {DecodeError::Truncated, "u8 past end"};
  return data_[pos_++];
}

Result<std::uint32_t, DecodeError> CanonicalReader::u32() {
  if (pos_ + 4 > data_.size()) return {DecodeError::Truncated, "u32 past end"};
  std::uint32_t v = (std::uint32_t(data_[pos_]) << 24) | (std::uint32_t(data_[pos_ + 1]) << 16) |
                    (std::uint32_t(data_[pos_ + 2]) << 8) | std::uint32_t(data_[pos_ + 3]);
  pos_ += 4;
  return v;
}

Result<std::uint64_t, DecodeError> CanonicalReader::u64() {
  auto hi = u32();
  if (!hi) return {hi.code(), hi.detail()};
  auto lo = u32();
  if (!lo) return {lo.code(), lo.detail()};
  return (std::uint64_t(hi.value()) << 32) | lo.value();
}

Result<std::int64_t, DecodeError> CanonicalReader::i64() {
  auto v = u64();
  if (!v) return {v.code(), v.detail()};
  return static_cast<std::int64_t>(v.value());
}

Result<Digest, DecodeError> CanonicalReader::raw32() {
  if (pos_ + 32 > data_.size()) return {DecodeError::Truncated, "digest past end"};
  Digest d;
  std::memcpy(d.bytes.data(), data_.data() + pos_, 32);
  pos_ += 32;
  return d;
}

Result<std::string, DecodeError> CanonicalReader::str() {
  auto len = u32();
  if (!len) return {len.code(), len.detail()};
  if (len.value() > kMaxStringLength) return {DecodeError::BadValue, "string too long"};
  if (pos_ + len.value() > data_.size()) return {DecodeError::Truncated, "string past end"};
  std::string s(reinterpret_cast<const char*>(data_.data() + pos_), len.value());
  pos_ += len.value();
  return s;
}

Result<Bytes, DecodeError> CanonicalReader::blob() {
  auto len = u32();
  if (!len) return {len.code(), len.detail()};
  if (len.value() > kMaxStringLength) return {DecodeError::BadValue, "blob too long"};
  if (pos_ + len.value() > data_.size()) return {DecodeError::Truncated, "blob past end"};
  Bytes b(data_.begin() + pos_, data_.begin() + pos_ + len.value());
  pos_ += len.value();
  return b;
}

TxKind Transaction::kind() const {
  if (std::holds_alternative<SensorUpdate>(payload)) return TxKind::SensorUpdate;
  if (std::holds_alternative<Alert>(payload)) return TxKind::Alert;
  return TxKind::Register;
}

Bytes encode_tx_payload(const Transaction& tx) {
  CanonicalWriter w;
  std::visit(
      [&](const auto& p) {
        using P = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<P, SensorUpdate>) {
          w.u8(kTagSensorUpdate);
          w.str(p.sensor_id);
          w.i64(p.value.raw);
        } else if constexpr (std::is_same_v<P, Alert>) {
          w.u8(kTagAlert);
          w.str(p.device_id);
          w.str(p.attack_class);
          w.i64(p.confidence.raw);
          w.u8(p.quarantine ? 1 : 0);
        } else if constexpr (std::is_same_v<P, RegisterDevice>) {
          w.u8(kTagRegisterDevice);
          w.str(p.device_id);
          w.str(p.owner_member);
        } else {
          w.u8(kTagRegisterSensor);
          w.str(p.sensor_id);
          w.str(p.device_id);
        }
      },
      tx.payload);
  w.str(tx.submitter);
  w.u64(tx.nonce);
  return w.take();
}

Bytes encode_tx(const Transaction& tx) {
  Bytes payload = encode_tx_payload(tx);
  CanonicalWriter w;
  w.blob(payload);
  w.blob(tx.signature);
  return w.take();
}

Bytes encode_block_content(const Block& block) {
  CanonicalWriter w;
  w.u64(block.height);
  w.raw32(block.prev_hash);
  w.str(block.proposer);
  w.u64(block.timestamp);
  w.u32(std::uint32_t(block.txs.size()));
  for (const Transaction& tx : block.txs) w.blob(encode_tx(tx));
  return w.take();
}

Bytes encode_chain_config(const ChainConfig& config) {
  CanonicalWriter w;
  w.str(config.chain_id);
  w.u32(std::uint32_t(config.devices.size()));
  for (const DeviceAsset& d : config.devices) {
    w.str(d.device_id);
    w.str(d.owner_member);
    w.u8(std::uint8_t(d.status));
  }
  w.u32(std::uint32_t(config.sensors.size()));
  for (const SensorAsset& s : config.sensors) {
    w.str(s.sensor_id);
    w.str(s.device_id);
    w.i64(s.last_value.raw);
    w.u64(s.updated_at);
  }
  return w.take();
}

Digest tx_digest(const Transaction& tx) { return crypto::sha256(encode_tx_payload(tx)); }

Digest block_digest(const Block& block) { return crypto::sha256(encode_block_content(block)); }

Digest chain_config_digest(const ChainConfig& config) {
  return crypto::sha256(encode_chain_config(config));
}

Result<Transaction, DecodeError> decode_tx(std::span<const std::uint8_t> data) {
  CanonicalReader outer(data);
  auto payload_bytes = outer.blob();
  if (!payload_bytes) return {payload_bytes.code(), payload_bytes.detail()};
  auto signature = outer.blob();
  if (!signature) return {signature.code(), signature.detail()};
  if (!outer.exhausted()) return {DecodeError::TrailingBytes, "bytes after signature"};

  CanonicalReader r(payload_bytes.value());
  auto tag = r.u8();
  if (!tag) return {tag.code(), tag.detail()};

  Transaction tx;
  switch (tag.value()) {
    case kTagSensorUpdate: {
      auto sensor_id = r.str();
      if (!sensor_id) return {sensor_id.code(), sensor_id.detail()};
      auto raw = r.i64();
      if (!raw) return {raw.code(), raw.detail()};
      tx.payload = SensorUpdate{sensor_id.take(), ScaledValue::from_raw(raw.value())};
      break;
    }
    case kTagAlert: {
      auto device_id = r.str();
      if (!device_id) return {device_id.code(), device_id.detail()};
      auto attack_class = r.str();
      if (!attack_class) return {attack_class.code(), attack_class.detail()};
      auto raw = r.i64();
      if (!raw) return {raw.code(), raw.detail()};
      auto quarantine = r.u8();
      if (!quarantine) return {quarantine.code(), quarantine.detail()};
      if (quarantine.value() > 1) return {DecodeError::BadValue, "quarantine flag not 0/1"};
      tx.payload = Alert{device_id.take(), attack_class.take(), ScaledValue::from_raw(raw.value()),
                         quarantine.value() == 1};
      break;
    }
    case kTagRegisterDevice: {
      auto device_id = r.str();
      if (!device_id) return {device_id.code(), device_id.detail()};
      auto owner = r.str();
      if (!owner) return {owner.code(), owner.detail()};
      tx.payload = RegisterDevice{device_id.take(), owner.take()};
      break;
    }
    case kTagRegisterSensor: {
      auto sensor_id = r.str();
      if (!sensor_id) return {sensor_id.code(), sensor_id.detail()};
      auto device_id = r.str();
      if (!device_id) return {device_id.code(), device_id.detail()};
      tx.payload = RegisterSensor{sensor_id.take(), device_id.take()};
      break;
    }
    default:
      return {DecodeError::BadTag, "unknown payload tag"};
  }

  auto submitter = r.str();
  if (!submitter) return {submitter.code(), submitter.detail()};
  auto nonce = r.u64();
  if (!nonce) return {nonce.code(), nonce.detail()};
  if (!r.exhausted()) return {DecodeError::TrailingBytes, "bytes after payload"};

  tx.submitter = submitter.take();
  tx.nonce = nonce.value();
  tx.signature = signature.take();
  tx.tx_id = crypto::sha256(payload_bytes.value());
  return tx;
}

Result<ChainConfig, DecodeError> decode_chain_config(std::span<const std::uint8_t> data) {
  CanonicalReader r(data);
  ChainConfig config;
  auto chain_id = r.str();
  if (!chain_id) return {chain_id.code(), chain_id.detail()};
  config.chain_id = chain_id.take();

  auto n_devices = r.u32();
  if (!n_devices) return {n_devices.code(), n_devices.detail()};
  for (std::uint32_t i = 0; i < n_devices.value(); ++i) {
    auto device_id = r.str();
    if (!device_id) return {device_id.code(), device_id.detail()};
    auto owner = r.str();
    if (!owner) return {owner.code(), owner.detail()};
    auto status = r.u8();
    if (!status) return {status.code(), status.detail()};
    if (status.value() > 1) return {DecodeError::BadValue, "bad device status"};
    config.devices.push_back(
        {device_id.take(), owner.take(), static_cast<DeviceStatus>(status.value())});
  }

  auto n_sensors = r.u32();
  if (!n_sensors) return {n_sensors.code(), n_sensors.detail()};
  for (std::uint32_t i = 0; i < n_sensors.value(); ++i) {
    auto sensor_id = r.str();
    if (!sensor_id) return {sensor_id.code(), sensor_id.detail()};
    auto device_id = r.str();
    if (!device_id) return {device_id.code(), device_id.detail()};
    auto raw = r.i64();
    if (!raw) return {raw.code(), raw.detail()};
    auto updated = r.u64();
    if (!updated) return {updated.code(), updated.detail()};
    config.sensors.push_back(
        {sensor_id.take(), device_id.take(), ScaledValue::from_raw(raw.value()), updated.value()});
  }

  if (!r.exhausted()) return {DecodeError::TrailingBytes, "bytes after sensors"};
  return config;
}

}  // namespace iotchain::ledger
