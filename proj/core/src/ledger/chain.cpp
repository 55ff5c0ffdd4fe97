#include "iotchain/ledger/chain.hpp"

#include <charconv>
#include <istream>
#include <ostream>
#include <sstream>

#include "iotchain/ledger/codec.hpp"

namespace iotchain::ledger {

namespace {

constexpr std::string_view kGenesisProposer = "genesis";

// Strict decimal: digits only, no leading zeros except "0" itself.
std::optional<std::uint64_t> parse_u64_strict(std::string_view text) {
  if (text.empty() || (text.size() > 1 && text[0] == '0')) return std::nullopt;
  std::uint64_t value = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size()) return std::nullopt;
  return value;
}

std::vector<std::string_view> split_single_spaces(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    std::size_t pos = line.find(' ', start);
    if (pos == std::string_view::npos) {
      fields.push_back(line.substr(start));
      return fields;
    }
    fields.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
}

}  // namespace

std::string_view append_error_name(AppendError error) {
  switch (error) {
    case AppendError::BadHeight: return "BadHeight";
    case AppendError::BadLink: return "BadLink";
    case AppendError::BadHash: return "BadHash";
    case AppendError::InvalidTx: return "InvalidTx";
  }
  return "Unknown";
}

std::string_view verify_error_name(VerifyError error) {
  switch (error) {
    case VerifyError::BadGenesis: return "BadGenesis";
    case VerifyError::BadHeight: return "BadHeight";
    case VerifyError::BadLink: return "BadLink";
    case VerifyError::BadHash: return "BadHash";
    case VerifyError::InvalidTx: return "InvalidTx";
  }
  return "Unknown";
}

Block Chain::make_genesis(const ChainConfig& config) {
  Block genesis;
  genesis.height = 0;
  genesis.prev_hash = chain_config_digest(config);
  genesis.proposer = std::string(kGenesisProposer);
  genesis.timestamp = 0;
  genesis.block_hash = block_digest(genesis);
  return genesis;
}

Chain::Chain(ChainConfig config)
    : config_(std::move(config)),
      blocks_{make_genesis(config_)},
      state_(WorldState::from_config(config_)) {}

Block Chain::build_next(std::vector<Transaction> txs, std::string proposer,
                        std::uint64_t timestamp) const {
  Block block;
  block.height = height() + 1;
  block.prev_hash = tip().block_hash;
  block.proposer = std::move(proposer);
  block.timestamp = timestamp;
  block.txs = std::move(txs);
  block.block_hash = block_digest(block);
  return block;
}

Status<AppendError> Chain::append_impl(const Block& block, const membership::Registry* registry,
                                       const membership::Signer* signer) {
  if (block.height != height() + 1) {
    return {AppendError::BadHeight, "expected height " + std::to_string(height() + 1) + ", got " +
                                        std::to_string(block.height)};
  }
  if (block.prev_hash != tip().block_hash) {
    return {AppendError::BadLink, "prev hash does not match tip at height " +
                                      std::to_string(block.height)};
  }
  if (block.block_hash != block_digest(block)) {
    return {AppendError::BadHash, "stored hash does not match content at height " +
                                      std::to_string(block.height)};
  }

  WorldState scratch = state_;
  for (const Transaction& tx : block.txs) {
    if (registry != nullptr) {
      auto valid = scratch.validate(tx, *registry, *signer);
      if (!valid.ok()) {
        return {AppendError::InvalidTx,
                std::string(tx_error_name(valid.code())) + ": " + valid.detail()};
      }
    }
    auto applied = scratch.apply(tx, block.height);
    if (!applied.ok()) {
      return {AppendError::InvalidTx,
              std::string(tx_error_name(applied.code())) + ": " + applied.detail()};
    }
  }

  state_ = std::move(scratch);
  blocks_.push_back(block);
  return {};
}

Status<AppendError> Chain::append(const Block& block, const membership::Registry& registry,
                                  const membership::Signer& signer) {
  return append_impl(block, &registry, &signer);
}

Status<VerifyError> Chain::verify() const {
  if (blocks_.empty() || blocks_[0] != make_genesis(config_)) {
    return {VerifyError::BadGenesis, "genesis does not match chain config"};
  }
  for (std::size_t i = 1; i < blocks_.size(); ++i) {
    const Block& block = blocks_[i];
    std::string at = "block at height " + std::to_string(block.height);
    if (block.height != blocks_[i - 1].height + 1) {
      return {VerifyError::BadHeight, "non-sequential " + at};
    }
    if (block.prev_hash != blocks_[i - 1].block_hash) {
      return {VerifyError::BadLink, "broken link at " + at};
    }
    if (block.block_hash != block_digest(block)) {
      return {VerifyError::BadHash, "hash mismatch at " + at};
    }
  }
  return {};
}

Status<VerifyError> Chain::verify_full(const membership::Registry& registry,
                                       const membership::Signer& signer) const {
  auto structural = verify();
  if (!structural.ok()) return structural;

  WorldState state = WorldState::from_config(config_);
  for (std::size_t i = 1; i < blocks_.size(); ++i) {
    for (const Transaction& tx : blocks_[i].txs) {
      auto valid = state.validate(tx, registry, signer);
      if (!valid.ok()) {
        return {VerifyError::InvalidTx, "height " + std::to_string(blocks_[i].height) + ": " +
                                            std::string(tx_error_name(valid.code())) + ": " +
                                            valid.detail()};
      }
      auto applied = state.apply(tx, blocks_[i].height);
      if (!applied.ok()) {
        return {VerifyError::InvalidTx, "height " + std::to_string(blocks_[i].height) + ": " +
                                            std::string(tx_error_name(applied.code())) + ": " +
                                            applied.detail()};
      }
    }
  }
  return {};
}

void Chain::export_chain(std::ostream& out) const {
  out << "config " << to_hex(encode_chain_config(config_)) << '\n';
  for (const Block& block : blocks_) {
    out << "block " << block.height << ' ' << block.prev_hash.hex() << ' ' << block.proposer << ' '
        << block.timestamp << ' ' << block.txs.size();
    for (const Transaction& tx : block.txs) out << ' ' << to_hex(encode_tx(tx));
    out << ' ' << block.block_hash.hex() << '\n';
  }
}

Result<Chain, ImportError> Chain::import_chain(std::istream& in) {
  std::string line;
  std::size_t line_no = 0;

  auto parse_fail = [&](std::string_view what) -> Failure<ImportError> {
    return {ImportError::Parse, "line " + std::to_string(line_no) + ": " + std::string(what)};
  };

  if (!std::getline(in, line)) return Failure<ImportError>{ImportError::Parse, "empty input"};
  ++line_no;
  auto header = split_single_spaces(line);
  if (header.size() != 2 || header[0] != "config") return parse_fail("expected config line");
  auto config_bytes = from_hex(header[1]);
  if (!config_bytes) return parse_fail("config is not valid hex");
  auto config = decode_chain_config(*config_bytes);
  if (!config) {
    return Failure<ImportError>{ImportError::BadConfig,
                                "config does not decode: " + config.detail()};
  }

  std::vector<Block> blocks;
  while (std::getline(in, line)) {
    ++line_no;
    auto fields = split_single_spaces(line);
    if (fields.size() < 6 || fields[0] != "block") return parse_fail("expected block line");

    Block block;
    auto height = parse_u64_strict(fields[1]);
    if (!height) return parse_fail("bad height field");
    block.height = *height;

    auto prev = Digest::parse_hex(fields[2]);
    if (!prev) return parse_fail("bad prev hash field");
    block.prev_hash = *prev;

    if (fields[3].empty()) return parse_fail("empty proposer field");
    block.proposer = std::string(fields[3]);

    auto timestamp = parse_u64_strict(fields[4]);
    if (!timestamp) return parse_fail("bad timestamp field");
    block.timestamp = *timestamp;

    auto n_tx = parse_u64_strict(fields[5]);
    if (!n_tx) return parse_fail("bad transaction count field");
    if (fields.size() != 6 + *n_tx + 1) return parse_fail("field count does not match tx count");

    for (std::size_t i = 0; i < *n_tx; ++i) {
      auto tx_bytes = from_hex(fields[6 + i]);
      if (!tx_bytes) return parse_fail("transaction is not valid hex");
      auto tx = decode_tx(*tx_bytes);
      if (!tx) return parse_fail("transaction does not decode: " + tx.detail());
      block.txs.push_back(tx.take());
    }

    auto stored_hash = Digest::parse_hex(fields.back());
    if (!stored_hash) return parse_fail("bad block hash field");
    block.block_hash = *stored_hash;

    blocks.push_back(std::move(block));
  }

  if (blocks.empty()) return Failure<ImportError>{ImportError::Parse, "no block lines"};

  Chain chain(config.take());
  if (blocks[0] != chain.blocks_[0]) {
    return Failure<ImportError>{ImportError::Mismatch,
                                "genesis line does not match chain config"};
  }
  for (std::size_t i = 1; i < blocks.size(); ++i) {
    auto appended = chain.append_impl(blocks[i], nullptr, nullptr);
    if (!appended.ok()) {
      return Failure<ImportError>{ImportError::Mismatch,
                                  std::string(append_error_name(appended.code())) + ": " +
                                      appended.detail()};
    }
  }
  return chain;
}

WorldState replay_state(const Chain& chain) {
  WorldState state = WorldState::from_config(chain.config());
  for (const Block& block : chain.blocks()) {
    for (const Transaction& tx : block.txs) {
      state.apply(tx, block.height);
    }
  }
  return state;
}

}  // namespace iotchain::ledger
