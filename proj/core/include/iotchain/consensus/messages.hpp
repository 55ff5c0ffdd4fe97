#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "iotchain/common/bytes.hpp"
#include "iotchain/ledger/types.hpp"

namespace iotchain::consensus {

using crypto::Digest;

enum class Phase : std::uint8_t {
  Request = 0,
  PrePrepare = 1,
  Prepare = 2,
  Commit = 3,
  ViewChange = 4,
  NewView = 5,
};

std::string_view phase_name(Phase phase);

struct PreparedProof;

// One protocol message. The digest field is the transaction id for Request
// and the proposed block hash for the agreement phases; view-change traffic
// carries its evidence in the nested fields. sender and the signature over
// the canonical encoding ride on every message.
struct PbftMessage {
  Phase phase = Phase::Request;
  std::uint64_t view = 0;
  std::uint64_t seq = 0;
  Digest digest;
  std::string sender;

  std::optional<ledger::Transaction> request_tx;  // Request
  std::optional<ledger::Block> block;             // PrePrepare

  std::uint64_t last_executed = 0;            // ViewChange
  std::vector<PreparedProof> prepared_proofs; // ViewChange

  std::vector<PbftMessage> view_changes;           // NewView: the 2f+1 justifying set
  std::vector<PbftMessage> new_view_preprepares;   // NewView: re-proposals, ascending seq

  Bytes signature;

  // Canonical bytes the signature covers: header fields plus a commitment to
  // the nested payload. Nested messages are committed with their signatures
  // so evidence sets cannot be swapped after signing.
  Bytes signing_bytes() const;

  bool operator==(const PbftMessage&) const;
};

// Evidence that a proposal reached the prepared predicate in some view: the
// accepted pre-prepare plus 2f matching prepares from distinct backups.
struct PreparedProof {
  PbftMessage pre_prepare;
  std::vector<PbftMessage> prepares;

  bool operator==(const PreparedProof&) const;
};

}  // namespace iotchain::consensus
