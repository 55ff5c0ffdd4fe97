#pragma once

#include <span>
#include <string_view>

#include "iotchain/common/bytes.hpp"
#include "iotchain/membership/registry.hpp"

namespace iotchain::membership {

// Signature scheme abstraction. The default implementation is a keyed digest
// over the canonical payload with the per-identity secret held by the
// registry; a public-key scheme can be swapped in without touching callers.
class Signer {
 public:
  virtual ~Signer() = default;

  virtual Bytes sign(std::string_view member_id, std::span<const std::uint8_t> payload) const = 0;
  virtual bool verify(std::string_view member_id, std::span<const std::uint8_t> payload,
                      std::span<const std::uint8_t> signature) const = 0;
};

class HmacSigner final : public Signer {
 public:
  explicit HmacSigner(const Registry& registry) : registry_(&registry) {}

  Bytes sign(std::string_view member_id, std::span<const std::uint8_t> payload) const override;
  bool verify(std::string_view member_id, std::span<const std::uint8_t> payload,
              std::span<const std::uint8_t> signature) const override;

 private:
  const Registry* registry_;
};

}  // namespace iotchain::membership
