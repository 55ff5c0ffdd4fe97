#include "iotchain/membership/registry.hpp"

#include <istream>
#include <ostream>
#include <sstream>

namespace iotchain::membership {

namespace {

// Prefixes keep authentication proofs and transaction signatures in separate
// domains even though both use the same per-member secret.
constexpr std::string_view kAuthPrefix = "iotchain-auth:";

}  // namespace

std::string_view role_name(Role role) {
  switch (role) {
    case Role::Device: return "device";
    case Role::Gateway: return "gateway";
    case Role::Validator: return "validator";
    case Role::Admin: return "admin";
  }
  return "unknown";
}

std::optional<Role> parse_role(std::string_view text) {
  if (text == "device") return Role::Device;
  if (text == "gateway") return Role::Gateway;
  if (text == "validator") return Role::Validator;
  if (text == "admin") return Role::Admin;
  return std::nullopt;
}

bool valid_member_id(std::string_view id) {
  if (id.empty()) return false;
  for (char c : id) {
    bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') ||
              c == '_' || c == '.' || c == '-';
    if (!ok) return false;
  }
  return true;
}

Registry Registry::bootstrap(std::string admin_id, Bytes admin_credential) {
  Registry r;
  MemberIdentity admin{std::move(admin_id), Role::Admin, std::move(admin_credential)};
  r.members_.emplace(admin.member_id, std::move(admin));
  return r;
}

Status<RegistryError> Registry::register_member(const Principal& caller, MemberIdentity member) {
  const MemberIdentity* caller_record = find(caller.member_id);
  if (caller_record == nullptr || caller_record->role != Role::Admin ||
      !authorize(caller, Action::RegisterMember)) {
    return {RegistryError::Unauthorized, "caller " + caller.member_id + " may not register members"};
  }
  return add_unchecked(std::move(member));
}

Status<RegistryError> Registry::add_unchecked(MemberIdentity member) {
  if (!valid_member_id(member.member_id)) {
    return {RegistryError::BadMemberId, "invalid member id: " + member.member_id};
  }
  if (member.credential.empty()) {
    return {RegistryError::BadCredential, "empty credential for " + member.member_id};
  }
  auto [it, inserted] = members_.emplace(member.member_id, std::move(member));
  if (!inserted) {
    return {RegistryError::DuplicateMember, "member already registered: " + it->first};
  }
  return {};
}

Result<Principal, RegistryError> Registry::authenticate(
    std::string_view member_id, std::span<const std::uint8_t> proof) const {
  const MemberIdentity* member = find(member_id);
  if (member == nullptr) {
    return {RegistryError::UnknownMember, "unknown member: " + std::string(member_id)};
  }
  crypto::Digest expected = auth_proof(*member);
  if (proof.size() != expected.bytes.size() ||
      !std::equal(proof.begin(), proof.end(), expected.bytes.begin())) {
    return {RegistryError::BadCredential, "credential proof mismatch for " + std::string(member_id)};
  }
  return Principal{member->member_id, member->role};
}

bool Registry::authorize(const Principal& principal, Action action) {
  switch (action) {
    case Action::Query:
      return true;
    case Action::SubmitTransaction:
      return principal.role == Role::Device || principal.role == Role::Gateway;
    case Action::ProposeBlock:
    case Action::ValidateBlock:
      return principal.role == Role::Validator;
    case Action::RegisterMember:
      return principal.role == Role::Admin;
  }
  return false;
}

const MemberIdentity* Registry::find(std::string_view member_id) const {
  auto it = members_.find(member_id);
  return it == members_.end() ? nullptr : &it->second;
}

crypto::Digest Registry::auth_proof(const MemberIdentity& member) {
  Bytes message = to_bytes(kAuthPrefix);
  message.insert(message.end(), member.member_id.begin(), member.member_id.end());
  return crypto::hmac_sha256(member.credential, message);
}

void Registry::save(std::ostream& out) const {
  for (const auto& [id, member] : members_) {
    out << id << ' ' << role_name(member.role) << ' ' << to_hex(member.credential) << '\n';
  }
}

Result<Registry, RegistryError> Registry::load(std::istream& in) {
  Registry registry;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    std::istringstream fields(line);
    std::string id, role_text, credential_hex;
    if (!(fields >> id >> role_text >> credential_hex)) {
      return {RegistryError::ParseError, "line " + std::to_string(line_no) + ": expected 3 fields"};
    }
    std::string extra;
    if (fields >> extra) {
      return {RegistryError::ParseError, "line " + std::to_string(line_no) + ": trailing field"};
    }
    auto role = parse_role(role_text);
    if (!role) {
      return {RegistryError::ParseError, "line " + std::to_string(line_no) + ": bad role " + role_text};
    }
    auto credential = from_hex(credential_hex);
    if (!credential || credential->empty()) {
      return {RegistryError::ParseError, "line " + std::to_string(line_no) + ": bad credential"};
    }
    auto status = registry.add_unchecked({id, *role, *credential});
    if (!status.ok()) {
      return {RegistryError::ParseError, "line " + std::to_string(line_no) + ": " + status.detail()};
    }
  }
  return registry;
}

}  // namespace iotchain::membership
