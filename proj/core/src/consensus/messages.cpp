#include "iotchain/consensus/messages.hpp"

#include "iotchain/crypto/sha256.hpp"
#include "iotchain/ledger/codec.hpp"

namespace iotchain::consensus {

namespace {

void write_nested(ledger::CanonicalWriter& w, const PbftMessage& msg) {
  w.blob(msg.signing_bytes());
  w.blob(msg.signature);
}

}  // namespace

std::string_view phase_name(Phase phase) {
  switch (phase) {
    case Phase::Request: return "request";
    case Phase::PrePrepare: return "pre-prepare";
    case Phase::Prepare: return "prepare";
    case Phase::Commit: return "commit";
    case Phase::ViewChange: return "view-change";
    case Phase::NewView: return "new-view";
  }
  return "unknown";
}

Bytes PbftMessage::signing_bytes() const {
  ledger::CanonicalWriter w;
  w.u8(static_cast<std::uint8_t>(phase));
  w.u64(view);
  w.u64(seq);
  w.raw32(digest);
  w.str(sender);

  switch (phase) {
    case Phase::Request:
      if (request_tx) w.blob(ledger::encode_tx(*request_tx));
      break;
    case Phase::PrePrepare:
      if (block) w.blob(ledger::encode_block_content(*block));
      break;
    case Phase::Prepare:
    case Phase::Commit:
      break;
    case Phase::ViewChange: {
      w.u64(last_executed);
      w.u32(std::uint32_t(prepared_proofs.size()));
      for (const PreparedProof& proof : prepared_proofs) {
        write_nested(w, proof.pre_prepare);
        w.u32(std::uint32_t(proof.prepares.size()));
        for (const PbftMessage& prepare : proof.prepares) write_nested(w, prepare);
      }
      break;
    }
    case Phase::NewView: {
      w.u32(std::uint32_t(view_changes.size()));
      for (const PbftMessage& vc : view_changes) write_nested(w, vc);
      w.u32(std::uint32_t(new_view_preprepares.size()));
      for (const PbftMessage& pp : new_view_preprepares) write_nested(w, pp);
      break;
    }
  }
  return w.take();
}

bool PbftMessage::operator==(const PbftMessage&) const = default;
bool PreparedProof::operator==(const PreparedProof&) const = default;

}  // namespace iotchain::consensus
