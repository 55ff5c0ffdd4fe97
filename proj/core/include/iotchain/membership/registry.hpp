#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>

#include "iotchain/common/bytes.hpp"
#include "iotchain/common/result.hpp"
#include "iotchain/crypto/sha256.hpp"

namespace iotchain::membership {

enum class Role : std::uint8_t { Device = 0, Gateway = 1, Validator = 2, Admin = 3 };

enum class Action : std::uint8_t {
  SubmitTransaction,
  ProposeBlock,
  ValidateBlock,
  RegisterMember,
  Query,
};

std::string_view role_name(Role role);
std::optional<Role> parse_role(std::string_view text);

struct MemberIdentity {
  std::string member_id;
  Role role = Role::Device;
  Bytes credential;  // shared secret for the keyed-digest scheme
};

struct Principal {
  std::string member_id;
  Role role = Role::Device;
};

enum class RegistryError {
  Unauthorized,
  DuplicateMember,
  UnknownMember,
  BadCredential,
  BadMemberId,
  ParseError,
};

// Member ids appear as fields in space-separated exports, so they are
// restricted to [A-Za-z0-9_.-]+.
bool valid_member_id(std::string_view id);

// In-memory permissioned membership list. All network participation is
// mediated through it: authentication resolves an id plus proof-of-credential
// to a principal, and the static ACL maps roles to permitted actions.
class Registry {
 public:
  Registry() = default;

  // Seeds the initial admin; later additions go through register_member.
  static Registry bootstrap(std::string admin_id, Bytes admin_credential);

  Status<RegistryError> register_member(const Principal& caller, MemberIdentity member);

  // Setup-path insertion used when loading a prepared registry file.
  Status<RegistryError> add_unchecked(MemberIdentity member);

  Result<Principal, RegistryError> authenticate(std::string_view member_id,
                                                std::span<const std::uint8_t> proof) const;

  static bool authorize(const Principal& principal, Action action);

  const MemberIdentity* find(std::string_view member_id) const;
  std::size_t size() const { return members_.size(); }
  const std::map<std::string, MemberIdentity, std::less<>>& members() const { return members_; }

  // Expected value for the authenticate() proof argument.
  static crypto::Digest auth_proof(const MemberIdentity& member);

  // One "<id> <role> <credential hex>" line per member; '#' comments and
  // blank lines are ignored on load.
  void save(std::ostream& out) const;
  static Result<Registry, RegistryError> load(std::istream& in);

 private:
  std::map<std::string, MemberIdentity, std::less<>> members_;
};

}  // namespace iotchain::membership
