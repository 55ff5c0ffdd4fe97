#pragma once

#include <array>
#include <compare>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>

#include "iotchain/common/bytes.hpp"

namespace iotchain::crypto {

// 256-bit digest value type used for transaction ids, block hashes and
// message authentication throughout the ledger and consensus layers.
struct Digest {
  std::array<std::uint8_t, 32> bytes{};

  auto operator<=>(const Digest&) const = default;

  std::string hex() const;
  static std::optional<Digest> parse_hex(std::string_view text);
};

// Incremental SHA-256 (FIPS 180-4).
class Sha256 {
 public:
  Sha256();

  void update(const std::uint8_t* data, std::size_t size);
  void update(std::span<const std::uint8_t> data);
  void update(std::string_view text);

  // Finalizes the state; the object must not be updated afterwards.
  Digest finish();

 private:
  void compress(const std::uint8_t block[64]);

  std::array<std::uint32_t, 8> state_;
  std::uint64_t total_bytes_ = 0;
  std::array<std::uint8_t, 64> buffer_{};
  std::size_t buffered_ = 0;
};

Digest sha256(std::span<const std::uint8_t> data);
Digest sha256(std::string_view text);

// HMAC-SHA256 (RFC 2104), returned as a full 32-byte tag.
Digest hmac_sha256(std::span<const std::uint8_t> key, std::span<const std::uint8_t> message);

}  // namespace iotchain::crypto
