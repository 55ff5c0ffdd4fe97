#pragma once

#include <cstdint>
#include <span>
#include <string_view>

#include "iotchain/common/bytes.hpp"
#include "iotchain/common/result.hpp"
#include "iotchain/ledger/types.hpp"

namespace iotchain::ledger {

// Canonical binary form shared by hashing, signing and the line-oriented
// export. Integers are big-endian, strings and byte blobs are u32
// length-prefixed, decimals are their raw scaled int64. Any two structurally
// equal values encode to identical bytes.
class CanonicalWriter {
 public:
  void u8(std::uint8_t v) { out_.push_back(v); }
  void u32(std::uint32_t v);
  void u64(std::uint64_t v);
  void i64(std::int64_t v) { u64(static_cast<std::uint64_t>(v)); }
  void raw32(const Digest& digest);
  void str(std::string_view s);
  void blob(std::span<const std::uint8_t> b);

  const Bytes& bytes() const { return out_; }
  Bytes take() { return std::move(out_); }

 private:
  Bytes out_;
};

enum class DecodeError { Truncated, BadTag, BadValue, TrailingBytes };

class CanonicalReader {
 public:
  explicit CanonicalReader(std::span<const std::uint8_t> data) : data_(data) {}

  Result<std::uint8_t, DecodeError> u8();
  Result<std::uint32_t, DecodeError> u32();
  Result<std::uint64_t, DecodeError> u64();
  Result<std::int64_t, DecodeError> i64();
  Result<Digest, DecodeError> raw32();
  Result<std::string, DecodeError> str();
  Result<Bytes, DecodeError> blob();

  bool exhausted() const { return pos_ == data_.size(); }

 private:
  std::span<const std::uint8_t> data_;
  std::size_t pos_ = 0;
};

// Payload bytes: kind tag, payload fields, submitter, nonce. These are the
// bytes that tx_id digests and the submitter signs.
Bytes encode_tx_payload(const Transaction& tx);
// Payload bytes followed by the length-prefixed signature.
Bytes encode_tx(const Transaction& tx);
// Everything the block hash covers: header fields plus full tx encodings.
Bytes encode_block_content(const Block& block);
Bytes encode_chain_config(const ChainConfig& config);

Digest tx_digest(const Transaction& tx);
Digest block_digest(const Block& block);
Digest chain_config_digest(const ChainConfig& config);

// Inverse of encode_tx; recomputes tx_id from the payload bytes.
Result<Transaction, DecodeError> decode_tx(std::span<const std::uint8_t> data);
Result<ChainConfig, DecodeError> decode_chain_config(std::span<const std::uint8_t> data);

}  // namespace iotchain::ledger
