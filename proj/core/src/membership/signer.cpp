#include "iotchain/membership/signer.hpp"

#include <algorithm>

namespace iotchain::membership {

namespace {

constexpr std::string_view kSignPrefix = "iotchain-sig:";

Bytes domain_separated(std::span<const std::uint8_t> payload) {
  Bytes message = to_bytes(kSignPrefix);
  message.insert(message.end(), payload.begin(), payload.end());
  return message;
}

}  // namespace

Bytes HmacSigner::sign(std::string_view member_id, std::span<const std::uint8_t> payload) const {
  const MemberIdentity* member = registry_->find(member_id);
  if (member == nullptr) return {};
  crypto::Digest tag = crypto::hmac_sha256(member->credential, domain_separated(payload));
  return Bytes(tag.bytes.begin(), tag.bytes.end());
}

bool HmacSigner::verify(std::string_view member_id, std::span<const std::uint8_t> payload,
                        std::span<const std::uint8_t> signature) const {
  const MemberIdentity* member = registry_->find(member_id);
  if (member == nullptr) return false;
  crypto::Digest expected = crypto::hmac_sha256(member->credential, domain_separated(payload));
  return signature.size() == expected.bytes.size() &&
         std::equal(signature.begin(), signature.end(), expected.bytes.begin());
}

}  // namespace iotchain::membership
