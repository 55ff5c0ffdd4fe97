#include "iotchain/consensus/replica.hpp"

#include <algorithm>

#include "iotchain/ledger/codec.hpp"

namespace iotchain::consensus {

using ledger::Transaction;
using ledger::TxError;

// Backoff doubles per failed view change; the cap keeps base * multiplier far
// from uint64 wraparound, where a timeout of zero would fire timers instantly.
constexpr std::uint64_t kMaxTimeoutMultiplier = 1ull << 32;

Replica::Replica(ReplicaConfig config, const membership::Registry& registry)
    : config_(std::move(config)),
      registry_(&registry),
      signer_(registry),
      chain_(config_.chain_config) {}

bool Replica::is_validator(std::string_view id) const {
  return std::find(config_.validators.begin(), config_.validators.end(), id) !=
         config_.validators.end();
}

void Replica::sign(PbftMessage& msg) {
  msg.sender = config_.id;
  msg.signature = signer_.sign(config_.id, msg.signing_bytes());
}

bool Replica::signature_ok(const PbftMessage& msg) const {
  return signer_.verify(msg.sender, msg.signing_bytes(), msg.signature);
}

void Replica::send_to(const std::string& to, PbftMessage msg) {
  outputs_.push_back(Send{to, std::move(msg)});
}

void Replica::broadcast(PbftMessage msg) {
  for (const std::string& validator : config_.validators) {
    if (validator == config_.id) continue;
    outputs_.push_back(Send{validator, msg});
  }
}

void Replica::start_request_timer(const Digest& tx_id) {
  cancel_request_timer(tx_id);
  std::uint64_t token = next_token_++;
  active_timers_.emplace(token, RequestTimer{tx_id});
  request_timer_tokens_[tx_id] = token;
  outputs_.push_back(Timer{token, current_timeout()});
}

void Replica::cancel_request_timer(const Digest& tx_id) {
  auto it = request_timer_tokens_.find(tx_id);
  if (it == request_timer_tokens_.end()) return;
  active_timers_.erase(it->second);
  request_timer_tokens_.erase(it);
}

void Replica::start_view_change_timer(std::uint64_t target_view) {
  if (view_change_timer_token_) active_timers_.erase(*view_change_timer_token_);
  std::uint64_t token = next_token_++;
  active_timers_.emplace(token, ViewChangeTimer{target_view});
  view_change_timer_token_ = token;
  outputs_.push_back(Timer{token, current_timeout()});
}

void Replica::suspect(const PbftMessage& msg, std::string note) {
  suspicions_.push_back({msg.sender, msg.view, msg.seq, std::move(note)});
}

void Replica::reject_request(const Transaction& tx, TxError code, std::string detail) {
  if (rejected_ids_.contains(tx.tx_id)) return;
  rejected_ids_.insert(tx.tx_id);
  rejected_.push_back({tx, code, std::move(detail)});
}

void Replica::halt(std::string report) {
  halted_ = true;
  fault_report_ = std::move(report);
}

std::vector<ReplicaOutput> Replica::on_message(const PbftMessage& msg, std::uint64_t now) {
  outputs_.clear();
  if (halted_) return std::move(outputs_);
  if (msg.sender == config_.id) return std::move(outputs_);
  if (!signature_ok(msg)) return std::move(outputs_);

  if (msg.phase == Phase::Request) {
    handle_request(msg, now);
    return std::move(outputs_);
  }

  if (!is_validator(msg.sender)) return std::move(outputs_);
  switch (msg.phase) {
    case Phase::PrePrepare: handle_pre_prepare(msg, now); break;
    case Phase::Prepare: handle_prepare(msg, now); break;
    case Phase::Commit: handle_commit(msg, now); break;
    case Phase::ViewChange: handle_view_change(msg, now); break;
    case Phase::NewView: handle_new_view(msg, now); break;
    case Phase::Request: break;
  }
  return std::move(outputs_);
}

std::vector<ReplicaOutput> Replica::on_timer(std::uint64_t token, std::uint64_t now) {
  outputs_.clear();
  if (halted_) return std::move(outputs_);
  auto it = active_timers_.find(token);
  if (it == active_timers_.end()) return std::move(outputs_);
  TimerKind kind = it->second;
  active_timers_.erase(it);

  if (const auto* request = std::get_if<RequestTimer>(&kind)) {
    auto token_it = request_timer_tokens_.find(request->tx_id);
    if (token_it != request_timer_tokens_.end() && token_it->second == token) {
      request_timer_tokens_.erase(token_it);
    }
    if (pending_.contains(request->tx_id) && !in_view_change_) {
      if (timeout_multiplier_ < kMaxTimeoutMultiplier) timeout_multiplier_ *= 2;
      initiate_view_change(view_ + 1, now);
    }
  } else {
    const auto& vc = std::get<ViewChangeTimer>(kind);
    view_change_timer_token_.reset();
    if (in_view_change_ && vc_target_ == vc.target_view) {
      if (timeout_multiplier_ < kMaxTimeoutMultiplier) timeout_multiplier_ *= 2;
      initiate_view_change(vc.target_view + 1, now);
    }
  }
  return std::move(outputs_);
}

void Replica::handle_request(const PbftMessage& msg, std::uint64_t now) {
  if (!msg.request_tx.has_value()) return;
  const membership::MemberIdentity* sender = registry_->find(msg.sender);
  if (sender == nullptr || sender->role != membership::Role::Gateway) return;

  const Transaction& tx = *msg.request_tx;
  if (tx.tx_id != ledger::tx_digest(tx) || tx.tx_id != msg.digest) return;
  if (executed_ids_.contains(tx.tx_id) || rejected_ids_.contains(tx.tx_id)) return;
  if (pending_.contains(tx.tx_id)) return;

  auto valid = chain_.state().validate(tx, *registry_, signer_);
  if (!valid.ok()) {
    reject_request(tx, valid.code(), valid.detail());
    return;
  }

  pending_.emplace(tx.tx_id, tx);
  if (!in_view_change_) {
    if (!i_am_primary()) send_to(primary_of(view_), msg);
    start_request_timer(tx.tx_id);
    if (i_am_primary()) try_propose(now);
  }
}

bool Replica::defer_wrong_view(const PbftMessage& msg) {
  if (msg.view == view_ && !in_view_change_) return false;
  if (msg.view > view_) {
    if (future_buffer_.size() >= config_.future_buffer_limit) future_buffer_.pop_front();
    future_buffer_.push_back(msg);
  }
  return true;
}

void Replica::handle_pre_prepare(const PbftMessage& msg, std::uint64_t now) {
  if (defer_wrong_view(msg)) return;
  if (msg.sender != primary_of(msg.view)) {
    suspect(msg, "pre-prepare from non-primary");
    return;
  }
  if (msg.seq <= last_executed_ || msg.seq > last_executed_ + config_.watermark_window) return;
  if (!msg.block.has_value()) return;

  const ledger::Block& block = *msg.block;
  if (block.block_hash != ledger::block_digest(block) || msg.digest != block.block_hash ||
      block.height != msg.seq) {
    suspect(msg, "pre-prepare digest inconsistent with block");
    return;
  }
  if (msg.seq == last_executed_ + 1 && block.prev_hash != chain_.tip().block_hash) {
    suspect(msg, "pre-prepare does not extend committed chain");
    return;
  }

  Entry& entry = log_[{msg.view, msg.seq}];
  if (entry.pre_prepare.has_value()) {
    if (entry.pre_prepare->digest != msg.digest) {
      suspect(msg, "conflicting pre-prepare for same view and sequence");
    }
    return;
  }

  for (const Transaction& tx : block.txs) {
    if (executed_ids_.contains(tx.tx_id)) {
      suspect(msg, "pre-prepare replays executed transaction");
      return;
    }
    if (tx.tx_id != ledger::tx_digest(tx) ||
        !signer_.verify(tx.submitter, ledger::encode_tx_payload(tx), tx.signature)) {
      suspect(msg, "pre-prepare carries invalid transaction");
      return;
    }
  }

  accept_pre_prepare(msg);
  check_prepared(msg.view, msg.seq);
  check_committed(msg.view, msg.seq);
  try_execute(now);
}

void Replica::accept_pre_prepare(const PbftMessage& msg) {
  Entry& entry = log_[{msg.view, msg.seq}];
  entry.pre_prepare = msg;

  if (primary_of(msg.view) == config_.id) return;  // own proposal stands in for a prepare
  if (entry.sent_prepare) return;
  entry.sent_prepare = true;

  PbftMessage prepare;
  prepare.phase = Phase::Prepare;
  prepare.view = msg.view;
  prepare.seq = msg.seq;
  prepare.digest = msg.digest;
  sign(prepare);
  entry.prepares.emplace(config_.id, prepare);
  broadcast(std::move(prepare));
}

void Replica::handle_prepare(const PbftMessage& msg, std::uint64_t now) {
  if (defer_wrong_view(msg)) return;
  if (msg.sender == primary_of(msg.view)) {
    suspect(msg, "prepare from primary");
    return;
  }
  Entry& entry = log_[{msg.view, msg.seq}];
  auto [it, inserted] = entry.prepares.emplace(msg.sender, msg);
  if (!inserted) {
    if (it->second.digest != msg.digest) suspect(msg, "conflicting prepare digests");
    return;
  }
  check_prepared(msg.view, msg.seq);
  check_committed(msg.view, msg.seq);
  try_execute(now);
}

void Replica::handle_commit(const PbftMessage& msg, std::uint64_t now) {
  if (defer_wrong_view(msg)) return;
  Entry& entry = log_[{msg.view, msg.seq}];
  auto [it, inserted] = entry.commits.emplace(msg.sender, msg.digest);
  if (!inserted) {
    if (it->second != msg.digest) suspect(msg, "conflicting commit digests");
    return;
  }
  check_committed(msg.view, msg.seq);
  try_execute(now);
}

bool Replica::prepared(std::uint64_t view, std::uint64_t seq, const Digest& digest) const {
  auto it = log_.find({view, seq});
  if (it == log_.end()) return false;
  const Entry& entry = it->second;
  if (!entry.pre_prepare || entry.pre_prepare->digest != digest) return false;
  std::size_t matching = 0;
  for (const auto& [sender, prepare] : entry.prepares) {
    if (prepare.digest == digest) ++matching;
  }
  return matching >= 2 * f();
}

bool Replica::committed_local(std::uint64_t view, std::uint64_t seq, const Digest& digest) const {
  if (!prepared(view, seq, digest)) return false;
  auto it = log_.find({view, seq});
  std::size_t matching = 0;
  for (const auto& [sender, commit_digest] : it->second.commits) {
    if (commit_digest == digest) ++matching;
  }
  return matching >= 2 * f() + 1;
}

void Replica::check_prepared(std::uint64_t view, std::uint64_t seq) {
  Entry& entry = log_[{view, seq}];
  if (entry.sent_commit || !entry.pre_prepare) return;
  if (!prepared(view, seq, entry.pre_prepare->digest)) return;
  entry.sent_commit = true;

  PbftMessage commit;
  commit.phase = Phase::Commit;
  commit.view = view;
  commit.seq = seq;
  commit.digest = entry.pre_prepare->digest;
  sign(commit);
  entry.commits.emplace(config_.id, commit.digest);
  broadcast(std::move(commit));
}

void Replica::check_committed(std::uint64_t view, std::uint64_t seq) {
  Entry& entry = log_[{view, seq}];
  if (!entry.pre_prepare) return;
  if (!committed_local(view, seq, entry.pre_prepare->digest)) return;
  committed_blocks_.emplace(seq, *entry.pre_prepare->block);
}

void Replica::try_execute(std::uint64_t now) {
  bool progressed = false;
  while (!halted_) {
    auto it = committed_blocks_.find(last_executed_ + 1);
    if (it == committed_blocks_.end()) break;
    const ledger::Block& block = it->second;

    auto appended = chain_.append(block, *registry_, signer_);
    if (!appended.ok()) {
      halt("execution failed at height " + std::to_string(block.height) + " proposed by " +
           block.proposer + ": " + std::string(ledger::append_error_name(appended.code())) + ": " +
           appended.detail());
      return;
    }

    ++last_executed_;
    progressed = true;
    timeout_multiplier_ = 1;
    outstanding_.erase(block.height);
    for (const Transaction& tx : block.txs) {
      executed_ids_.insert(tx.tx_id);
      pending_.erase(tx.tx_id);
      cancel_request_timer(tx.tx_id);
    }
  }

  if (progressed) {
    prune_pending();
    if (!in_view_change_) {
      restart_pending_timers();
      if (i_am_primary()) try_propose(now);
    }
  }
}

void Replica::prune_pending() {
  std::vector<Digest> invalid;
  for (const auto& [tx_id, tx] : pending_) {
    auto valid = chain_.state().validate(tx, *registry_, signer_);
    if (!valid.ok()) {
      reject_request(tx, valid.code(), valid.detail());
      invalid.push_back(tx_id);
    }
  }
  for (const Digest& tx_id : invalid) {
    pending_.erase(tx_id);
    cancel_request_timer(tx_id);
  }
}

void Replica::restart_pending_timers() {
  for (const auto& [tx_id, tx] : pending_) start_request_timer(tx_id);
}

void Replica::try_propose(std::uint64_t now) {
  if (halted_ || in_view_change_ || !i_am_primary()) return;
  if (!outstanding_.empty()) return;  // one proposal in flight at a time
  if (last_executed_ < new_view_base_) return;
  if (pending_.empty()) return;
  std::uint64_t seq = last_executed_ + 1;
  if (seq > last_executed_ + config_.watermark_window) return;

  std::vector<Transaction> batch;
  std::vector<Digest> dropped;
  ledger::WorldState scratch = chain_.state();
  for (const auto& [tx_id, tx] : pending_) {
    if (batch.size() >= config_.max_batch) break;
    auto valid = scratch.validate(tx, *registry_, signer_);
    if (!valid.ok()) {
      reject_request(tx, valid.code(), valid.detail());
      dropped.push_back(tx_id);
      continue;
    }
    scratch.apply(tx, seq);
    batch.push_back(tx);
  }
  for (const Digest& tx_id : dropped) {
    pending_.erase(tx_id);
    cancel_request_timer(tx_id);
  }
  if (batch.empty()) return;

  ledger::Block block = chain_.build_next(std::move(batch), config_.id, now);

  PbftMessage pre_prepare;
  pre_prepare.phase = Phase::PrePrepare;
  pre_prepare.view = view_;
  pre_prepare.seq = seq;
  pre_prepare.digest = block.block_hash;
  pre_prepare.block = std::move(block);
  sign(pre_prepare);

  Entry& entry = log_[{view_, seq}];
  entry.pre_prepare = pre_prepare;
  outstanding_.insert(seq);
  broadcast(std::move(pre_prepare));
}

PbftMessage Replica::build_view_change(std::uint64_t target_view) const {
  PbftMessage vc;
  vc.phase = Phase::ViewChange;
  vc.view = target_view;
  vc.last_executed = last_executed_;

  // Highest-view prepared certificate per unexecuted sequence.
  std::map<std::uint64_t, std::pair<std::uint64_t, const Entry*>> best;
  for (const auto& [key, entry] : log_) {
    auto [view, seq] = key;
    if (seq <= last_executed_ || !entry.pre_prepare) continue;
    if (!prepared(view, seq, entry.pre_prepare->digest)) continue;
    auto it = best.find(seq);
    if (it == best.end() || view > it->second.first) best[seq] = {view, &entry};
  }

  for (const auto& [seq, found] : best) {
    const Entry& entry = *found.second;
    PreparedProof proof;
    proof.pre_prepare = *entry.pre_prepare;
    for (const auto& [sender, prepare] : entry.prepares) {
      if (proof.prepares.size() >= 2 * f()) break;
      if (prepare.digest == entry.pre_prepare->digest) proof.prepares.push_back(prepare);
    }
    vc.prepared_proofs.push_back(std::move(proof));
  }
  return vc;
}

void Replica::initiate_view_change(std::uint64_t target_view, std::uint64_t now) {
  if (halted_) return;
  if (in_view_change_ && vc_target_ >= target_view) return;
  if (target_view <= view_) return;

  in_view_change_ = true;
  vc_target_ = target_view;

  for (const auto& [tx_id, token] : request_timer_tokens_) active_timers_.erase(token);
  request_timer_tokens_.clear();

  PbftMessage vc = build_view_change(target_view);
  sign(vc);
  view_change_log_[target_view].emplace(config_.id, vc);
  broadcast(vc);
  start_view_change_timer(target_view);
  maybe_emit_new_view(now);
}

void Replica::handle_view_change(const PbftMessage& msg, std::uint64_t now) {
  if (msg.view <= view_) return;
  view_change_log_[msg.view].emplace(msg.sender, msg);
  maybe_join_view_change(now);
  maybe_emit_new_view(now);
}

void Replica::maybe_join_view_change(std::uint64_t now) {
  // Join once f+1 distinct replicas demand views beyond anything this
  // replica has agreed to move to; adopt the smallest such view.
  std::uint64_t floor_view = in_view_change_ ? vc_target_ : view_;
  std::set<std::string> demanding;
  std::uint64_t smallest = 0;
  for (const auto& [target, senders] : view_change_log_) {
    if (target <= floor_view) continue;
    for (const auto& [sender, vc] : senders) {
      demanding.insert(sender);
      if (smallest == 0 || target < smallest) smallest = target;
    }
  }
  if (demanding.size() >= f() + 1) initiate_view_change(smallest, now);
}

void Replica::maybe_emit_new_view(std::uint64_t now) {
  if (halted_) return;
  for (const auto& [target, senders] : view_change_log_) {
    if (target <= view_) continue;
    if (primary_of(target) != config_.id) continue;
    if (!senders.contains(config_.id)) continue;
    if (senders.size() < 2 * f() + 1) continue;

    std::vector<PbftMessage> vcs;
    for (const auto& [sender, vc] : senders) vcs.push_back(vc);

    std::vector<PreparedProof> certs = compute_new_view_certs(vcs);
    PbftMessage nv;
    nv.phase = Phase::NewView;
    nv.view = target;
    nv.view_changes = vcs;
    for (const PreparedProof& cert : certs) {
      PbftMessage pp;
      pp.phase = Phase::PrePrepare;
      pp.view = target;
      pp.seq = cert.pre_prepare.seq;
      pp.digest = cert.pre_prepare.digest;
      pp.block = cert.pre_prepare.block;
      sign(pp);
      nv.new_view_preprepares.push_back(std::move(pp));
    }
    sign(nv);
    std::vector<PbftMessage> o_set = nv.new_view_preprepares;
    std::uint64_t base = 0;
    for (const PbftMessage& vc : vcs) base = std::max(base, vc.last_executed);
    broadcast(std::move(nv));
    adopt_view(target, o_set, base, now);
    return;
  }
}

bool Replica::valid_prepared_proof(const PreparedProof& proof) const {
  const PbftMessage& pp = proof.pre_prepare;
  if (pp.phase != Phase::PrePrepare || !pp.block.has_value()) return false;
  if (pp.sender != primary_of(pp.view)) return false;
  const ledger::Block& block = *pp.block;
  if (block.block_hash != ledger::block_digest(block) || pp.digest != block.block_hash ||
      block.height != pp.seq) {
    return false;
  }
  if (!signer_.verify(pp.sender, pp.signing_bytes(), pp.signature)) return false;

  std::set<std::string> seen;
  for (const PbftMessage& prepare : proof.prepares) {
    if (prepare.phase != Phase::Prepare || prepare.view != pp.view || prepare.seq != pp.seq ||
        prepare.digest != pp.digest) {
      return false;
    }
    if (!is_validator(prepare.sender) || prepare.sender == primary_of(pp.view)) return false;
    if (!seen.insert(prepare.sender).second) return false;
    if (!signer_.verify(prepare.sender, prepare.signing_bytes(), prepare.signature)) return false;
  }
  return seen.size() >= 2 * f();
}

std::vector<PreparedProof> Replica::compute_new_view_certs(
    const std::vector<PbftMessage>& view_changes) const {
  std::uint64_t base = 0;
  for (const PbftMessage& vc : view_changes) base = std::max(base, vc.last_executed);

  // Highest view wins per sequence; equal views tie-break on smaller digest
  // so every replica derives the identical set.
  std::map<std::uint64_t, const PreparedProof*> best;
  for (const PbftMessage& vc : view_changes) {
    for (const PreparedProof& proof : vc.prepared_proofs) {
      if (!valid_prepared_proof(proof)) continue;
      std::uint64_t seq = proof.pre_prepare.seq;
      if (seq <= base) continue;
      auto it = best.find(seq);
      if (it == best.end() || proof.pre_prepare.view > it->second->pre_prepare.view ||
          (proof.pre_prepare.view == it->second->pre_prepare.view &&
           proof.pre_prepare.digest.bytes < it->second->pre_prepare.digest.bytes)) {
        best[seq] = &proof;
      }
    }
  }

  std::vector<PreparedProof> certs;
  for (const auto& [seq, proof] : best) certs.push_back(*proof);
  return certs;
}

void Replica::handle_new_view(const PbftMessage& msg, std::uint64_t now) {
  if (msg.view <= view_) return;
  if (msg.sender != primary_of(msg.view)) {
    suspect(msg, "new-view from wrong primary");
    return;
  }

  std::set<std::string> senders;
  for (const PbftMessage& vc : msg.view_changes) {
    if (vc.phase != Phase::ViewChange || vc.view != msg.view) return;
    if (!is_validator(vc.sender) || !senders.insert(vc.sender).second) return;
    if (!signer_.verify(vc.sender, vc.signing_bytes(), vc.signature)) return;
  }
  if (senders.size() < 2 * f() + 1) {
    suspect(msg, "new-view without a justifying quorum");
    return;
  }

  std::vector<PreparedProof> certs = compute_new_view_certs(msg.view_changes);
  if (certs.size() != msg.new_view_preprepares.size()) {
    suspect(msg, "new-view re-proposals do not match certificates");
    return;
  }
  for (std::size_t i = 0; i < certs.size(); ++i) {
    const PbftMessage& pp = msg.new_view_preprepares[i];
    if (pp.phase != Phase::PrePrepare || pp.view != msg.view || pp.sender != msg.sender ||
        pp.seq != certs[i].pre_prepare.seq || pp.digest != certs[i].pre_prepare.digest ||
        !pp.block.has_value() || *pp.block != *certs[i].pre_prepare.block ||
        !signer_.verify(pp.sender, pp.signing_bytes(), pp.signature)) {
      suspect(msg, "new-view re-proposals do not match certificates");
      return;
    }
  }

  std::uint64_t base = 0;
  for (const PbftMessage& vc : msg.view_changes) base = std::max(base, vc.last_executed);
  adopt_view(msg.view, msg.new_view_preprepares, base, now);
}

void Replica::adopt_view(std::uint64_t new_view, const std::vector<PbftMessage>& o_set,
                         std::uint64_t base, std::uint64_t now) {
  view_ = new_view;
  in_view_change_ = false;
  vc_target_ = 0;
  new_view_base_ = std::max(new_view_base_, base);
  ++completed_view_changes_;
  if (view_change_timer_token_) {
    active_timers_.erase(*view_change_timer_token_);
    view_change_timer_token_.reset();
  }
  outstanding_.clear();

  bool primary = i_am_primary();
  for (const PbftMessage& pp : o_set) {
    if (pp.seq <= last_executed_) continue;
    if (primary) {
      Entry& entry = log_[{view_, pp.seq}];
      entry.pre_prepare = pp;
      outstanding_.insert(pp.seq);
    } else {
      accept_pre_prepare(pp);
    }
    check_prepared(view_, pp.seq);
    check_committed(view_, pp.seq);
  }
  try_execute(now);

  drain_future_buffer(now);
  restart_pending_timers();
  if (primary) try_propose(now);
}

void Replica::drain_future_buffer(std::uint64_t now) {
  std::deque<PbftMessage> keep;
  std::deque<PbftMessage> ready;
  for (PbftMessage& msg : future_buffer_) {
    if (msg.view == view_) {
      ready.push_back(std::move(msg));
    } else if (msg.view > view_) {
      keep.push_back(std::move(msg));
    }
  }
  future_buffer_ = std::move(keep);

  for (const PbftMessage& msg : ready) {
    switch (msg.phase) {
      case Phase::PrePrepare: handle_pre_prepare(msg, now); break;
      case Phase::Prepare: handle_prepare(msg, now); break;
      case Phase::Commit: handle_commit(msg, now); break;
      default: break;
    }
  }
}

}  // namespace iotchain::consensus
