#pragma once

// Framed binary protocol shared by replicas and clients.
//
//   u32 length      big-endian, counts every byte after itself
//   u8  tag         WireTag
//   u64 u64         request id (origin, seq)
//   u64             sender id
//   i64 u64 u64     round: nr (-1 = bottom), id counter, id process ((0,0) = bottom)
//   ...             payload, canonical serialization
//
// Client replies append two u32 counters (round trips, retries) to the payload.

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <variant>

#include "crdtpaxos/bytes.hpp"
#include "crdtpaxos/ids.hpp"
#include "crdtpaxos/lattice.hpp"
#include "crdtpaxos/messages.hpp"
#include "crdtpaxos/round.hpp"

namespace crdtpaxos {

enum class WireTag : std::uint8_t {
  Update = 1,
  UpdateDone,
  Query,
  QueryDone,
  Merge,
  Merged,
  Prepare,
  Ack,
  Vote,
  Voted,
  Nack,
  RequestFailed,
};

inline constexpr std::size_t kFrameHeaderBytes = 4 + 1 + 16 + 8 + 24;
inline constexpr std::uint32_t kMaxFrameBytes = 16U << 20;

struct ReplyStats {
  std::uint32_t round_trips = 0;
  std::uint32_t retries = 0;
  bool operator==(const ReplyStats&) const = default;
};

struct ClientUpdate {
  UpdateCommand cmd;
  bool operator==(const ClientUpdate&) const = default;
};
struct ClientQuery {
  QueryCommand cmd;
  bool operator==(const ClientQuery&) const = default;
};
struct UpdateReply {
  CausalTag tag;
  ReplyStats stats;
  bool operator==(const UpdateReply&) const = default;
};
struct QueryReply {
  QueryResult result;
  CrdtState learned;
  ReplyStats stats;
  bool operator==(const QueryReply&) const = default;
};
struct FailedReply {
  std::string reason;
  ReplyStats stats;
  bool operator==(const FailedReply&) const = default;
};

// Alternative i carries WireTag i + 1.
using WireBody = std::variant<ClientUpdate, UpdateReply, ClientQuery, QueryReply, Merge<CrdtState>, Merged,
                              Prepare<CrdtState>, Ack<CrdtState>, Vote<CrdtState>, Voted, Nack<CrdtState>, FailedReply>;

struct Frame {
  RequestId request;
  ProcessId sender = 0;
  WireBody body;

  [[nodiscard]] WireTag tag() const { return static_cast<WireTag>(body.index() + 1); }
  bool operator==(const Frame&) const = default;
};

Bytes encode_frame(const Frame& f);

// `bytes` must hold exactly one frame, length prefix included. Throws FrameError.
Frame decode_frame(std::span<const std::uint8_t> bytes);

// Size of the first frame in `buffer` once its length prefix is readable.
// Throws FrameError when the declared length is out of range.
std::optional<std::size_t> frame_extent(std::span<const std::uint8_t> buffer);

std::optional<PeerMessage<CrdtState>> to_peer_message(const Frame& f, ProcessId to);
Frame from_peer_message(const PeerMessage<CrdtState>& m);
// Client reply as it travels back over a socket.
Frame from_client_reply(const ClientReply<CrdtState>& r, ProcessId sender);

const char* wire_tag_name(WireTag t);

}  // namespace crdtpaxos
