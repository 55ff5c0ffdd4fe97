#pragma once

#include <iosfwd>
#include <vector>

#include "iotchain/common/result.hpp"
#include "iotchain/ledger/types.hpp"
#include "iotchain/ledger/world_state.hpp"

namespace iotchain::ledger {

enum class AppendError { BadHeight, BadLink, BadHash, InvalidTx };
enum class VerifyError { BadGenesis, BadHeight, BadLink, BadHash, InvalidTx };
enum class ImportError { Parse, BadConfig, Mismatch };

std::string_view append_error_name(AppendError error);
std::string_view verify_error_name(VerifyError error);

// Hash-linked block sequence plus the world state it folds to. The genesis
// block's prev_hash is the digest of the chain config, so the initial asset
// set is covered by the same hash chain as every later block.
class Chain {
 public:
  explicit Chain(ChainConfig config);

  static Block make_genesis(const ChainConfig& config);

  const ChainConfig& config() const { return config_; }
  const std::vector<Block>& blocks() const { return blocks_; }
  const Block& tip() const { return blocks_.back(); }
  std::uint64_t height() const { return blocks_.back().height; }
  const WorldState& state() const { return state_; }

  // Assembles the successor block for a proposer; does not append it.
  Block build_next(std::vector<Transaction> txs, std::string proposer,
                   std::uint64_t timestamp) const;

  // Structural checks (height, link, hash), then per-transaction validation
  // against the rolling state. State is untouched unless every check passes.
  Status<AppendError> append(const Block& block, const membership::Registry& registry,
                             const membership::Signer& signer);

  // Integrity of the stored sequence: genesis commitment, heights, links,
  // block hashes. Any single-byte change to an exported chain breaks one of
  // these (or the export grammar). Failure details name the block height.
  Status<VerifyError> verify() const;

  // verify() plus signature and authorization replay from genesis.
  Status<VerifyError> verify_full(const membership::Registry& registry,
                                  const membership::Signer& signer) const;

  // Line-oriented export: "config <hex>" then one "block ..." line per
  // block, every binary field as strict lowercase hex.
  void export_chain(std::ostream& out) const;
  static Result<Chain, ImportError> import_chain(std::istream& in);

 private:
  Status<AppendError> append_impl(const Block& block, const membership::Registry* registry,
                                  const membership::Signer* signer);

  ChainConfig config_;
  std::vector<Block> blocks_;
  WorldState state_;
};

// Independent fold of apply() over all blocks, for comparing against the
// incrementally maintained state.
WorldState replay_state(const Chain& chain);

}  // namespace iotchain::ledger
