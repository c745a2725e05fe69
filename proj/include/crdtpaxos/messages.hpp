#pragma once

#include <cstdint>
#include <string>
#include <variant>
#include <vector>

#include "crdtpaxos/ids.hpp"
#include "crdtpaxos/lattice.hpp"
#include "crdtpaxos/round.hpp"

namespace crdtpaxos {

// ---- replica <-> replica ----

template <class L>
struct Merge {
  L state;
  bool operator==(const Merge&) const = default;
};
struct Merged {
  bool operator==(const Merged&) const = default;
};
template <class L>
struct Prepare {
  Round round;
  L state;
  bool operator==(const Prepare&) const = default;
};
template <class L>
struct Ack {
  Round round;
  L state;
  bool operator==(const Ack&) const = default;
};
template <class L>
struct Vote {
  Round round;
  L state;
  bool operator==(const Vote&) const = default;
};
// Carries no payload: the proposer remembers what it proposed.
struct Voted {
  bool operator==(const Voted&) const = default;
};
// Rejection of a fixed prepare or a vote; carries the acceptor's round and payload.
template <class L>
struct Nack {
  Round round;
  L state;
  bool operator==(const Nack&) const = default;
};

template <class L>
using PeerBody = std::variant<Merge<L>, Merged, Prepare<L>, Ack<L>, Vote<L>, Voted, Nack<L>>;

template <class L>
struct PeerMessage {
  ProcessId from = 0;
  ProcessId to = 0;
  RequestId request;
  PeerBody<L> body;

  bool operator==(const PeerMessage&) const = default;
};

template <class L>
const char* message_name(const PeerBody<L>& body) {
  static constexpr const char* kNames[] = {"MERGE", "MERGED", "PREPARE", "ACK", "VOTE", "VOTED", "NACK"};
  return kNames[body.index()];
}

// ---- client <-> proposer ----

// Opaque handle for whoever submitted a client request (a simulated client, a socket).
using ClientRef = std::uint64_t;

struct UpdateDone {
  CausalTag tag;  // causal tag the proposer attached to the update
  bool operator==(const UpdateDone&) const = default;
};
template <class L>
struct QueryDone {
  QueryResult result;
  L learned;
  bool operator==(const QueryDone&) const = default;
};
struct RequestFailed {
  std::string reason;
  bool operator==(const RequestFailed&) const = default;
};

template <class L>
using ReplyBody = std::variant<UpdateDone, QueryDone<L>, RequestFailed>;

template <class L>
struct ClientReply {
  ClientRef client = 0;
  RequestId client_request;
  RequestId proposer_request;
  std::uint32_t round_trips = 0;
  std::uint32_t retries = 0;
  ReplyBody<L> body;
};

// ---- handler outputs ----

enum class PhaseKind : std::uint8_t { Merge, IncrementalPrepare, FixedPrepare, Vote };

inline const char* phase_name(PhaseKind k) {
  switch (k) {
    case PhaseKind::Merge:
      return "merge";
    case PhaseKind::IncrementalPrepare:
      return "incremental_prepare";
    case PhaseKind::FixedPrepare:
      return "fixed_prepare";
    case PhaseKind::Vote:
      return "vote";
  }
  return "?";
}

// One broadcast-and-await-quorum phase started by a proposer. Each one is a round trip.
struct PhaseStart {
  RequestId request;
  PhaseKind kind;
};

struct TimerArm {
  RequestId request;
  std::uint64_t delay = 0;
};

// Everything a handler wants done. Handlers never perform I/O themselves.
template <class L>
struct Effects {
  std::vector<PeerMessage<L>> messages;
  std::vector<ClientReply<L>> replies;
  std::vector<TimerArm> arm;        // (re)arm: replaces any timer for the same request
  std::vector<RequestId> cancel;
  std::vector<PhaseStart> phases;

  void append(Effects&& other) {
    for (auto& m : other.messages) messages.push_back(std::move(m));
    for (auto& r : other.replies) replies.push_back(std::move(r));
    arm.insert(arm.end(), other.arm.begin(), other.arm.end());
    cancel.insert(cancel.end(), other.cancel.begin(), other.cancel.end());
    phases.insert(phases.end(), other.phases.begin(), other.phases.end());
  }
  [[nodiscard]] bool empty() const {
    return messages.empty() && replies.empty() && arm.empty() && cancel.empty() && phases.empty();
  }
};

}  // namespace crdtpaxos
