#pragma once

#include "iotchain/ledger/codec.hpp"
#include "iotchain/ledger/types.hpp"
#include "iotchain/membership/signer.hpp"

namespace iotchain::ledger {

inline Transaction make_signed_tx(TxPayload payload, std::string submitter, std::uint64_t nonce,
                                  const membership::Signer& signer) {
  Transaction tx;
  tx.payload = std::move(payload);
  tx.submitter = std::move(submitter);
  tx.nonce = nonce;
  Bytes payload_bytes = encode_tx_payload(tx);
  tx.tx_id = crypto::sha256(payload_bytes);
  tx.signature = signer.sign(tx.submitter, payload_bytes);
  return tx;
}

}  // namespace iotchain::ledger
