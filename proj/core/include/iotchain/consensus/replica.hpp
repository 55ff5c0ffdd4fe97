#pragma once

#include <cstdint>
#include <deque>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include "iotchain/consensus/messages.hpp"
#include "iotchain/ledger/chain.hpp"
#include "iotchain/membership/signer.hpp"

namespace iotchain::consensus {

struct ReplicaConfig {
  std::string id;
  std::vector<std::string> validators;  // fixed order; primary of view v is v % n
  ledger::ChainConfig chain_config;
  std::uint64_t base_timeout = 50;       // doubles on consecutive view changes
  std::uint64_t watermark_window = 256;  // max in-flight seq distance
  std::size_t max_batch = 100;           // transactions per proposed block
  std::size_t future_buffer_limit = 128; // buffered future-view messages
};

struct Send {
  std::string to;
  PbftMessage msg;
};

struct Timer {
  std::uint64_t token = 0;
  std::uint64_t delay = 0;
};

using ReplicaOutput = std::variant<Send, Timer>;

struct Suspicion {
  std::string sender;
  std::uint64_t view = 0;
  std::uint64_t seq = 0;
  std::string note;
};

struct RejectedRequest {
  ledger::Transaction tx;
  ledger::TxError code;
  std::string detail;
};

// Deterministic three-phase replica: all behavior is a function of the
// message and timer sequence fed in. It owns its replicated chain and
// executes committed blocks against it in sequence order. No checkpointing
// or state transfer: the log grows for the lifetime of a run, and a replica
// that misses a committed sequence catches up only through re-proposals.
class Replica {
 public:
  Replica(ReplicaConfig config, const membership::Registry& registry);

  std::vector<ReplicaOutput> on_message(const PbftMessage& msg, std::uint64_t now);
  std::vector<ReplicaOutput> on_timer(std::uint64_t token, std::uint64_t now);

  const std::string& id() const { return config_.id; }
  std::uint64_t view() const { return view_; }
  std::uint64_t last_executed() const { return last_executed_; }
  bool in_view_change() const { return in_view_change_; }
  std::size_t completed_view_changes() const { return completed_view_changes_; }
  const ledger::Chain& chain() const { return chain_; }
  std::size_t pending_requests() const { return pending_.size(); }

  bool halted() const { return halted_; }
  const std::string& fault_report() const { return fault_report_; }
  const std::vector<Suspicion>& suspicions() const { return suspicions_; }
  const std::vector<RejectedRequest>& rejected() const { return rejected_; }

  // Quorum predicates over the received-message log, exposed for checks
  // against independent counting oracles.
  bool prepared(std::uint64_t view, std::uint64_t seq, const Digest& digest) const;
  bool committed_local(std::uint64_t view, std::uint64_t seq, const Digest& digest) const;

  std::size_t n() const { return config_.validators.size(); }
  std::size_t f() const { return (n() - 1) / 3; }
  const std::string& primary_of(std::uint64_t view) const {
    return config_.validators[view % n()];
  }

 private:
  struct Entry {
    std::optional<PbftMessage> pre_prepare;
    std::map<std::string, PbftMessage> prepares;  // full messages, reusable as proof
    std::map<std::string, Digest> commits;        // sender -> digest
    bool sent_prepare = false;
    bool sent_commit = false;
  };

  struct RequestTimer {
    Digest tx_id;
  };
  struct ViewChangeTimer {
    std::uint64_t target_view = 0;
  };
  using TimerKind = std::variant<RequestTimer, ViewChangeTimer>;

  bool is_validator(std::string_view id) const;
  bool i_am_primary() const { return primary_of(view_) == config_.id; }
  std::uint64_t current_timeout() const { return config_.base_timeout * timeout_multiplier_; }

  void sign(PbftMessage& msg);
  bool signature_ok(const PbftMessage& msg) const;
  void send_to(const std::string& to, PbftMessage msg);
  void broadcast(PbftMessage msg);
  void start_request_timer(const Digest& tx_id);
  void cancel_request_timer(const Digest& tx_id);
  void start_view_change_timer(std::uint64_t target_view);
  void suspect(const PbftMessage& msg, std::string note);
  void reject_request(const ledger::Transaction& tx, ledger::TxError code, std::string detail);

  void handle_request(const PbftMessage& msg, std::uint64_t now);
  void handle_pre_prepare(const PbftMessage& msg, std::uint64_t now);
  void handle_prepare(const PbftMessage& msg, std::uint64_t now);
  void handle_commit(const PbftMessage& msg, std::uint64_t now);
  void handle_view_change(const PbftMessage& msg, std::uint64_t now);
  void handle_new_view(const PbftMessage& msg, std::uint64_t now);

  // True when the message belongs to a later view (buffered) or an earlier
  // one (dropped); the caller returns immediately in both cases.
  bool defer_wrong_view(const PbftMessage& msg);

  void accept_pre_prepare(const PbftMessage& msg);
  void check_prepared(std::uint64_t view, std::uint64_t seq);
  void check_committed(std::uint64_t view, std::uint64_t seq);
  void try_execute(std::uint64_t now);
  void try_propose(std::uint64_t now);
  void prune_pending();

  void initiate_view_change(std::uint64_t target_view, std::uint64_t now);
  void maybe_join_view_change(std::uint64_t now);
  void maybe_emit_new_view(std::uint64_t now);
  PbftMessage build_view_change(std::uint64_t target_view) const;
  bool valid_prepared_proof(const PreparedProof& proof) const;
  // Deterministic re-proposal set from a justifying view-change quorum:
  // highest-view valid certificate per sequence above the proven executed
  // base, ascending.
  std::vector<PreparedProof> compute_new_view_certs(
      const std::vector<PbftMessage>& view_changes) const;
  void adopt_view(std::uint64_t new_view, const std::vector<PbftMessage>& o_set,
                  std::uint64_t base, std::uint64_t now);
  void drain_future_buffer(std::uint64_t now);
  void restart_pending_timers();
  void halt(std::string report);

  ReplicaConfig config_;
  const membership::Registry* registry_;
  membership::HmacSigner signer_;
  ledger::Chain chain_;

  std::uint64_t view_ = 0;
  std::uint64_t last_executed_ = 0;
  bool in_view_change_ = false;
  std::uint64_t vc_target_ = 0;
  // Highest executed sequence proven by any adopted new-view quorum; fresh
  // proposals wait until this replica has executed up to it.
  std::uint64_t new_view_base_ = 0;
  std::uint64_t timeout_multiplier_ = 1;
  std::size_t completed_view_changes_ = 0;

  std::map<std::pair<std::uint64_t, std::uint64_t>, Entry> log_;
  std::map<std::uint64_t, ledger::Block> committed_blocks_;
  std::set<std::uint64_t> outstanding_;  // my unexecuted proposals (as primary)

  std::map<Digest, ledger::Transaction> pending_;
  std::set<Digest> executed_ids_;
  std::set<Digest> rejected_ids_;

  std::map<std::uint64_t, std::map<std::string, PbftMessage>> view_change_log_;
  std::deque<PbftMessage> future_buffer_;

  std::uint64_t next_token_ = 1;
  std::map<std::uint64_t, TimerKind> active_timers_;
  std::map<Digest, std::uint64_t> request_timer_tokens_;
  std::optional<std::uint64_t> view_change_timer_token_;

  std::vector<Suspicion> suspicions_;
  std::vector<RejectedRequest> rejected_;
  bool halted_ = false;
  std::string fault_report_;

  std::vector<ReplicaOutput> outputs_;
};

}  // namespace iotchain::consensus
