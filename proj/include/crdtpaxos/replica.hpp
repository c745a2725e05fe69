#pragma once

// One replica = one acceptor + one proposer, as deterministic event handlers.
//
// Every entry point takes an input event and returns the Effects it produces
// (messages, client replies, timer changes). No I/O, no clocks: the simulator
// and the TCP service drive the same code.

#include <algorithm>
#include <cstdint>
#include <deque>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <variant>
#include <vector>

#include "crdtpaxos/acceptor.hpp"
#include "crdtpaxos/causal.hpp"
#include "crdtpaxos/errors.hpp"
#include "crdtpaxos/lattice.hpp"
#include "crdtpaxos/messages.hpp"
#include "crdtpaxos/quorum.hpp"
#include "crdtpaxos/round.hpp"

namespace crdtpaxos {

struct ProtocolConfig {
  ProcessId self = 1;
  QuorumSystem quorum;
  bool batching = false;
  std::uint64_t timeout = 100;  // in the driver's time unit
  std::uint32_t max_retries = 50;
};

enum class RequestKind : std::uint8_t { Update, Query };
enum class RequestPhase : std::uint8_t { Merging, Preparing, Voting, Done };

struct ClientOp {
  ClientRef client = 0;
  RequestId client_request;
  std::variant<UpdateCommand, QueryCommand> cmd;
};

template <class L>
struct ProposerRequest {
  RequestId id;
  RequestKind kind = RequestKind::Query;
  RequestPhase phase = RequestPhase::Preparing;
  std::vector<ClientOp> members;  // more than one only when batching
  Round round;
  RequestId attempt;  // correlation id of the phase currently in flight
  std::map<ProcessId, Ack<L>> acks;
  std::set<ProcessId> merged;
  std::set<ProcessId> voted;
  std::optional<L> proposed;
  std::optional<L> received;       // LUB of every payload received for this request
  std::optional<L> merge_payload;  // update requests: the state sent in MERGE
  std::uint32_t retries = 0;
  std::uint32_t round_trips = 0;
};

template <class L>
class Replica {
 public:
  Replica(ProtocolConfig config, L s0);

  Effects<L> on_client_update(ClientRef client, RequestId client_request, UpdateCommand cmd);
  Effects<L> on_client_query(ClientRef client, RequestId client_request, QueryCommand cmd);
  // Acceptor-bound bodies (MERGE, PREPARE, VOTE) go to the acceptor, replies to the proposer.
  Effects<L> on_message(const PeerMessage<L>& m);
  Effects<L> on_timeout(RequestId request);

  // Batching entry points. enqueue buffers the op and flushes when nothing of
  // that kind is in flight; flush submits the buffered batch.
  Effects<L> batch_enqueue(ClientOp op);
  Effects<L> batch_flush(RequestKind kind);

  RoundId new_round_id() { return round_ids_.next(); }

  [[nodiscard]] const Acceptor<L>& acceptor() const { return acceptor_; }
  [[nodiscard]] const ProtocolConfig& config() const { return config_; }
  [[nodiscard]] ProcessId id() const { return config_.self; }
  [[nodiscard]] std::size_t live_requests() const { return requests_.size(); }
  [[nodiscard]] std::size_t buffered(RequestKind kind) const {
    return kind == RequestKind::Update ? update_batch_.size() : query_batch_.size();
  }
  [[nodiscard]] const ProposerRequest<L>* find_request(RequestId id) const {
    auto it = requests_.find(id);
    return it == requests_.end() ? nullptr : &it->second;
  }

 private:
  RequestId next_request_id() { return {config_.self, ++request_seq_}; }

  Effects<L> acceptor_handle(const PeerMessage<L>& m);
  Effects<L> on_merged(ProcessId from, RequestId attempt);
  Effects<L> on_ack(ProcessId from, RequestId attempt, const Ack<L>& ack);
  Effects<L> on_voted(ProcessId from, RequestId attempt);
  Effects<L> on_nack(ProcessId from, RequestId attempt, const Nack<L>& nack);

  Effects<L> start_update(std::vector<ClientOp> members);
  Effects<L> start_query(std::vector<ClientOp> members);
  void begin_prepare(ProposerRequest<L>& req, Round round, const L& payload, Effects<L>& fx);
  void begin_vote(ProposerRequest<L>& req, L proposal, Effects<L>& fx);
  Effects<L> retry_incremental(ProposerRequest<L>& req);
  Effects<L> complete_update(ProposerRequest<L>& req);
  Effects<L> complete_query(ProposerRequest<L>& req, const L& learned);
  Effects<L> fail(ProposerRequest<L>& req, const std::string& reason);
  Effects<L> finish(RequestId id, RequestKind kind, Effects<L> fx);

  void broadcast(RequestId attempt, const PeerBody<L>& body, bool include_self, Effects<L>& fx,
                 const std::set<ProcessId>* skip = nullptr) const;
  void fold_received(ProposerRequest<L>& req, const L& state) const;
  ProposerRequest<L>* by_attempt(RequestId attempt);
  void set_attempt(ProposerRequest<L>& req, RequestId attempt);
  ClientReply<L> reply_for(const ProposerRequest<L>& req, const ClientOp& op, ReplyBody<L> body) const;
  CausalTag assign_tag(UpdateCommand& cmd);

  ProtocolConfig config_;
  std::size_t self_slot_ = 0;
  Acceptor<L> acceptor_;
  RoundIdGenerator round_ids_;
  std::uint64_t request_seq_ = 0;
  std::uint64_t update_seq_ = 0;
  std::map<RequestId, ProposerRequest<L>> requests_;
  std::map<RequestId, RequestId> attempt_owner_;
  std::deque<ClientOp> update_batch_;
  std::deque<ClientOp> query_batch_;
  bool update_in_flight_ = false;
  bool query_in_flight_ = false;
};

// ---------------------------------------------------------------------------

template <class L>
Replica<L>::Replica(ProtocolConfig config, L s0) : config_(std::move(config)), round_ids_(config_.self) {
  const auto& replicas = config_.quorum.replicas();
  auto it = std::find(replicas.begin(), replicas.end(), config_.self);
  if (it == replicas.end()) throw ConfigError("replica " + std::to_string(config_.self) + " is not in the quorum system");
  self_slot_ = static_cast<std::size_t>(it - replicas.begin());
  acceptor_.init(std::move(s0));
}

template <class L>
CausalTag Replica<L>::assign_tag(UpdateCommand& cmd) {
  if (auto* inc = std::get_if<Increment>(&cmd.op)) inc->slot = self_slot_;
  if (cmd.tag.is_bottom()) {
    // A counter replica's k-th increment of its own slot is tagged (self, k).
    if (std::holds_alternative<Increment>(cmd.op)) {
      auto current = counter_slot(acceptor_.payload(), self_slot_);
      cmd.tag = {config_.self, current.value_or(update_seq_) + 1};
    } else {
      cmd.tag = {config_.self, ++update_seq_};
    }
  }
  return cmd.tag;
}

template <class L>
ClientReply<L> Replica<L>::reply_for(const ProposerRequest<L>& req, const ClientOp& op, ReplyBody<L> body) const {
  ClientReply<L> r;
  r.client = op.client;
  r.client_request = op.client_request;
  r.proposer_request = req.id;
  r.round_trips = req.round_trips;
  r.retries = req.retries;
  r.body = std::move(body);
  return r;
}

template <class L>
void Replica<L>::broadcast(RequestId attempt, const PeerBody<L>& body, bool include_self, Effects<L>& fx,
                           const std::set<ProcessId>* skip) const {
  for (ProcessId to : config_.quorum.replicas()) {
    if (to == config_.self && !include_self) continue;
    if (skip != nullptr && skip->count(to) != 0) continue;
    fx.messages.push_back(PeerMessage<L>{config_.self, to, attempt, body});
  }
}

template <class L>
void Replica<L>::fold_received(ProposerRequest<L>& req, const L& state) const {
  req.received = req.received ? merge(*req.received, state) : state;
}

template <class L>
ProposerRequest<L>* Replica<L>::by_attempt(RequestId attempt) {
  auto owner = attempt_owner_.find(attempt);
  if (owner == attempt_owner_.end()) return nullptr;
  auto it = requests_.find(owner->second);
  return it == requests_.end() ? nullptr : &it->second;
}

template <class L>
void Replica<L>::set_attempt(ProposerRequest<L>& req, RequestId attempt) {
  attempt_owner_.erase(req.attempt);
  req.attempt = attempt;
  attempt_owner_[attempt] = req.id;
}

// ---- client entry points ----

template <class L>
Effects<L> Replica<L>::on_client_update(ClientRef client, RequestId client_request, UpdateCommand cmd) {
  ClientOp op{client, client_request, std::move(cmd)};
  if (config_.batching) return batch_enqueue(std::move(op));
  return start_update({std::move(op)});
}

template <class L>
Effects<L> Replica<L>::on_client_query(ClientRef client, RequestId client_request, QueryCommand cmd) {
  ClientOp op{client, client_request, std::move(cmd)};
  if (config_.batching) return batch_enqueue(std::move(op));
  return start_query({std::move(op)});
}

template <class L>
Effects<L> Replica<L>::batch_enqueue(ClientOp op) {
  const bool is_update = std::holds_alternative<UpdateCommand>(op.cmd);
  (is_update ? update_batch_ : query_batch_).push_back(std::move(op));
  return batch_flush(is_update ? RequestKind::Update : RequestKind::Query);
}

template <class L>
Effects<L> Replica<L>::batch_flush(RequestKind kind) {
  auto& buffer = kind == RequestKind::Update ? update_batch_ : query_batch_;
  bool& in_flight = kind == RequestKind::Update ? update_in_flight_ : query_in_flight_;
  if (in_flight || buffer.empty()) return {};
  std::vector<ClientOp> members(std::make_move_iterator(buffer.begin()), std::make_move_iterator(buffer.end()));
  buffer.clear();
  in_flight = true;
  return kind == RequestKind::Update ? start_update(std::move(members)) : start_query(std::move(members));
}

// ---- update path ----

template <class L>
Effects<L> Replica<L>::start_update(std::vector<ClientOp> members) {
  Effects<L> fx;
  ProposerRequest<L> req;
  req.id = next_request_id();
  req.kind = RequestKind::Update;
  req.phase = RequestPhase::Merging;

  std::vector<ClientOp> applied;
  for (auto& op : members) {
    auto& cmd = std::get<UpdateCommand>(op.cmd);
    try {
      UpdateCommand tagged = cmd;
      assign_tag(tagged);
      acceptor_.apply_update(tagged);
      cmd = std::move(tagged);
      applied.push_back(std::move(op));
    } catch (const CommandError& e) {
      fx.replies.push_back(reply_for(req, op, RequestFailed{e.what()}));
    }
  }
  req.members = std::move(applied);
  if (req.members.empty()) {
    return finish(req.id, RequestKind::Update, std::move(fx));
  }

  req.merge_payload = acceptor_.payload();
  req.merged.insert(config_.self);
  req.round_trips = 1;
  fx.phases.push_back({req.id, PhaseKind::Merge});
  const RequestId id = req.id;
  auto& stored = requests_.emplace(id, std::move(req)).first->second;
  set_attempt(stored, id);

  if (config_.quorum.is_quorum(stored.merged)) {
    fx.append(complete_update(stored));
    return fx;
  }
  broadcast(id, Merge<L>{*stored.merge_payload}, false, fx);
  fx.arm.push_back({id, config_.timeout});
  return fx;
}

template <class L>
Effects<L> Replica<L>::on_merged(ProcessId from, RequestId attempt) {
  auto* req = by_attempt(attempt);
  if (req == nullptr || req->kind != RequestKind::Update || req->phase != RequestPhase::Merging) return {};
  req->merged.insert(from);
  if (!config_.quorum.is_quorum(req->merged)) return {};
  return complete_update(*req);
}

template <class L>
Effects<L> Replica<L>::complete_update(ProposerRequest<L>& req) {
  Effects<L> fx;
  req.phase = RequestPhase::Done;
  for (const auto& op : req.members) {
    fx.replies.push_back(reply_for(req, op, UpdateDone{std::get<UpdateCommand>(op.cmd).tag}));
  }
  fx.cancel.push_back(req.id);
  return finish(req.id, RequestKind::Update, std::move(fx));
}

// ---- query path ----

template <class L>
Effects<L> Replica<L>::start_query(std::vector<ClientOp> members) {
  Effects<L> fx;
  ProposerRequest<L> req;
  req.id = next_request_id();
  req.kind = RequestKind::Query;
  req.members = std::move(members);
  const RequestId id = req.id;
  auto& stored = requests_.emplace(id, std::move(req)).first->second;
  // Carry the co-located acceptor's payload instead of s0 to speed up convergence.
  begin_prepare(stored, Round::incremental(new_round_id()), acceptor_.payload(), fx);
  return fx;
}

template <class L>
void Replica<L>::begin_prepare(ProposerRequest<L>& req, Round round, const L& payload, Effects<L>& fx) {
  set_attempt(req, next_request_id());
  req.phase = RequestPhase::Preparing;
  req.round = round;
  req.acks.clear();
  req.voted.clear();
  req.proposed.reset();
  ++req.round_trips;
  fx.phases.push_back({req.id, round.nr_is_bottom() ? PhaseKind::IncrementalPrepare : PhaseKind::FixedPrepare});
  broadcast(req.attempt, Prepare<L>{round, payload}, true, fx);
  fx.arm.push_back({req.id, config_.timeout});
}

template <class L>
void Replica<L>::begin_vote(ProposerRequest<L>& req, L proposal, Effects<L>& fx) {
  set_attempt(req, next_request_id());
  req.phase = RequestPhase::Voting;
  req.voted.clear();
  req.proposed = std::move(proposal);
  ++req.round_trips;
  fx.phases.push_back({req.id, PhaseKind::Vote});
  broadcast(req.attempt, Vote<L>{req.round, *req.proposed}, true, fx);
  fx.arm.push_back({req.id, config_.timeout});
}

template <class L>
Effects<L> Replica<L>::on_ack(ProcessId from, RequestId attempt, const Ack<L>& ack) {
  auto* req = by_attempt(attempt);
  if (req == nullptr) return {};
  fold_received(*req, ack.state);
  if (req->phase != RequestPhase::Preparing) return {};
  req->acks.emplace(from, ack);  // first reply per sender counts

  std::set<ProcessId> senders;
  for (const auto& [sender, _] : req->acks) senders.insert(sender);
  if (!config_.quorum.is_quorum(senders)) return {};

  L lub = req->acks.begin()->second.state;
  for (const auto& [_, a] : req->acks) lub = merge(lub, a.state);

  const bool consistent_states = std::all_of(req->acks.begin(), req->acks.end(),
                                             [&](const auto& kv) { return compare(lub, kv.second.state); });
  if (consistent_states) return complete_query(*req, lub);  // learned by consistent quorum

  const Round& first = req->acks.begin()->second.round;
  const bool consistent_rounds = std::all_of(req->acks.begin(), req->acks.end(),
                                             [&](const auto& kv) { return kv.second.round == first; });
  Effects<L> fx;
  if (consistent_rounds) {
    req->round = first;
    begin_vote(*req, std::move(lub), fx);
    return fx;
  }

  std::int64_t max_nr = first.nr;
  for (const auto& [_, a] : req->acks) max_nr = std::max(max_nr, a.round.nr);
  begin_prepare(*req, Round::fixed(max_nr + 1, new_round_id()), lub, fx);
  return fx;
}

template <class L>
Effects<L> Replica<L>::on_voted(ProcessId from, RequestId attempt) {
  auto* req = by_attempt(attempt);
  if (req == nullptr || req->phase != RequestPhase::Voting) return {};
  req->voted.insert(from);
  if (!config_.quorum.is_quorum(req->voted)) return {};
  const L learned = *req->proposed;  // learned by vote
  return complete_query(*req, learned);
}

template <class L>
Effects<L> Replica<L>::on_nack(ProcessId /*from*/, RequestId attempt, const Nack<L>& nack) {
  auto* req = by_attempt(attempt);
  if (req == nullptr) return {};
  fold_received(*req, nack.state);
  if (req->phase != RequestPhase::Preparing && req->phase != RequestPhase::Voting) return {};
  return retry_incremental(*req);
}

template <class L>
Effects<L> Replica<L>::retry_incremental(ProposerRequest<L>& req) {
  if (++req.retries > config_.max_retries) return fail(req, "max retries exceeded");
  Effects<L> fx;
  const L payload = req.received ? *req.received : acceptor_.payload();
  begin_prepare(req, Round::incremental(new_round_id()), payload, fx);
  return fx;
}

template <class L>
Effects<L> Replica<L>::complete_query(ProposerRequest<L>& req, const L& learned) {
  Effects<L> fx;
  req.phase = RequestPhase::Done;
  for (const auto& op : req.members) {
    try {
      QueryResult result = apply_query(std::get<QueryCommand>(op.cmd), learned);
      fx.replies.push_back(reply_for(req, op, QueryDone<L>{std::move(result), learned}));
    } catch (const CommandError& e) {
      fx.replies.push_back(reply_for(req, op, RequestFailed{e.what()}));
    }
  }
  fx.cancel.push_back(req.id);
  return finish(req.id, RequestKind::Query, std::move(fx));
}

template <class L>
Effects<L> Replica<L>::fail(ProposerRequest<L>& req, const std::string& reason) {
  Effects<L> fx;
  req.phase = RequestPhase::Done;
  for (const auto& op : req.members) fx.replies.push_back(reply_for(req, op, RequestFailed{reason}));
  fx.cancel.push_back(req.id);
  return finish(req.id, req.kind, std::move(fx));
}

// Drops all bookkeeping for a finished request and submits the next batch.
template <class L>
Effects<L> Replica<L>::finish(RequestId id, RequestKind kind, Effects<L> fx) {
  if (auto it = requests_.find(id); it != requests_.end()) {
    attempt_owner_.erase(it->second.attempt);
    requests_.erase(it);
  }
  if (config_.batching) {
    (kind == RequestKind::Update ? update_in_flight_ : query_in_flight_) = false;
    fx.append(batch_flush(kind));
  }
  return fx;
}

// ---- timers ----

template <class L>
Effects<L> Replica<L>::on_timeout(RequestId request) {
  auto it = requests_.find(request);
  if (it == requests_.end() || it->second.phase == RequestPhase::Done) return {};
  auto& req = it->second;
  if (req.kind == RequestKind::Query) return retry_incremental(req);

  // MERGE is idempotent: resend the same payload to whoever has not answered.
  if (++req.retries > config_.max_retries) return fail(req, "max retries exceeded");
  Effects<L> fx;
  ++req.round_trips;
  fx.phases.push_back({req.id, PhaseKind::Merge});
  broadcast(req.attempt, Merge<L>{*req.merge_payload}, false, fx, &req.merged);
  fx.arm.push_back({req.id, config_.timeout});
  return fx;
}

// ---- message dispatch ----

template <class L>
Effects<L> Replica<L>::acceptor_handle(const PeerMessage<L>& m) {
  Effects<L> fx;
  auto reply = [&](PeerBody<L> body) {
    fx.messages.push_back(PeerMessage<L>{config_.self, m.from, m.request, std::move(body)});
  };
  if (const auto* merge_msg = std::get_if<Merge<L>>(&m.body)) {
    reply(acceptor_.on_merge(*merge_msg));
  } else if (const auto* prepare = std::get_if<Prepare<L>>(&m.body)) {
    auto r = acceptor_.on_prepare(*prepare);
    std::visit([&](auto&& body) { reply(std::move(body)); }, std::move(r));
  } else if (const auto* vote = std::get_if<Vote<L>>(&m.body)) {
    auto r = acceptor_.on_vote(*vote);
    std::visit([&](auto&& body) { reply(std::move(body)); }, std::move(r));
  }
  return fx;
}

template <class L>
Effects<L> Replica<L>::on_message(const PeerMessage<L>& m) {
  switch (m.body.index()) {
    case 0:  // MERGE
    case 2:  // PREPARE
    case 4:  // VOTE
      return acceptor_handle(m);
    case 1:
      return on_merged(m.from, m.request);
    case 3:
      return on_ack(m.from, m.request, std::get<Ack<L>>(m.body));
    case 5:
      return on_voted(m.from, m.request);
    case 6:
      return on_nack(m.from, m.request, std::get<Nack<L>>(m.body));
    default:
      return {};
  }
}

extern template class Replica<CrdtState>;
extern template class Replica<CausalTaggedState<CrdtState>>;

}  // namespace crdtpaxos
