#include "crdtpaxos/wire.hpp"

#include "crdtpaxos/errors.hpp"

namespace crdtpaxos {

namespace {

constexpr Round kNoRound{Round::kBottomNr, {}};

void put_round(ByteWriter& w, const Round& r) {
  w.i64(r.nr);
  w.u64(r.id.counter);
  w.u64(r.id.process);
}

void put_stats(ByteWriter& w, const ReplyStats& s) {
  w.u32(s.round_trips);
  w.u32(s.retries);
}

ReplyStats get_stats(ByteReader& r) {
  ReplyStats s;
  s.round_trips = r.u32();
  s.retries = r.u32();
  return s;
}

Round body_round(const WireBody& body) {
  return std::visit(
      [](const auto& b) -> Round {
        if constexpr (requires { b.round; }) {
          return b.round;
        } else {
          return kNoRound;
        }
      },
      body);
}

void put_payload(ByteWriter& w, const WireBody& body) {
  std::visit(
      [&](const auto& b) {
        using B = std::decay_t<decltype(b)>;
        if constexpr (std::is_same_v<B, ClientUpdate> || std::is_same_v<B, ClientQuery>) {
          encode(w, b.cmd);
        } else if constexpr (std::is_same_v<B, UpdateReply>) {
          w.u64(b.tag.origin);
          w.u64(b.tag.seq);
          put_stats(w, b.stats);
        } else if constexpr (std::is_same_v<B, QueryReply>) {
          encode(w, b.result);
          encode(w, b.learned);
          put_stats(w, b.stats);
        } else if constexpr (std::is_same_v<B, FailedReply>) {
          w.str(b.reason);
          put_stats(w, b.stats);
        } else if constexpr (requires { b.state; }) {
          encode(w, b.state);
        }
      },
      body);
}

WireBody get_payload(WireTag tag, const Round& round, ByteReader& r) {
  auto require_no_round = [&] {
    if (!(round == kNoRound)) throw FrameError("round set on a message that carries none");
  };
  switch (tag) {
    case WireTag::Update:
      require_no_round();
      return ClientUpdate{decode_update(r)};
    case WireTag::UpdateDone: {
      require_no_round();
      UpdateReply u;
      u.tag.origin = r.u64();
      u.tag.seq = r.u64();
      u.stats = get_stats(r);
      return u;
    }
    case WireTag::Query:
      require_no_round();
      return ClientQuery{decode_query(r)};
    case WireTag::QueryDone: {
      require_no_round();
      QueryResult result = decode_result(r);
      CrdtState learned = decode_state(r);
      return QueryReply{std::move(result), std::move(learned), get_stats(r)};
    }
    case WireTag::Merge:
      require_no_round();
      return Merge<CrdtState>{decode_state(r)};
    case WireTag::Merged:
      require_no_round();
      return Merged{};
    case WireTag::Prepare:
      return Prepare<CrdtState>{round, decode_state(r)};
    case WireTag::Ack:
      return Ack<CrdtState>{round, decode_state(r)};
    case WireTag::Vote:
      return Vote<CrdtState>{round, decode_state(r)};
    case WireTag::Voted:
      require_no_round();
      return Voted{};
    case WireTag::Nack:
      return Nack<CrdtState>{round, decode_state(r)};
    case WireTag::RequestFailed: {
      require_no_round();
      std::string reason = r.str();
      return FailedReply{std::move(reason), get_stats(r)};
    }
  }
  throw FrameError("unknown message tag " + std::to_string(static_cast<int>(tag)));
}

}  // namespace

const char* wire_tag_name(WireTag t) {
  static constexpr const char* kNames[] = {"?",     "UPDATE", "UPDATE_DONE", "QUERY", "QUERY_DONE", "MERGE", "MERGED",
                                           "PREPARE", "ACK",   "VOTE",        "VOTED", "NACK",       "REQUEST_FAILED"};
  const auto i = static_cast<std::size_t>(t);
  return i < std::size(kNames) ? kNames[i] : "?";
}

Bytes encode_frame(const Frame& f) {
  ByteWriter body;
  body.u8(static_cast<std::uint8_t>(f.tag()));
  body.u64(f.request.origin);
  body.u64(f.request.seq);
  body.u64(f.sender);
  put_round(body, body_round(f.body));
  put_payload(body, f.body);
  const Bytes inner = std::move(body).take();
  if (inner.size() > kMaxFrameBytes) throw FrameError("frame exceeds " + std::to_string(kMaxFrameBytes) + " bytes");
  ByteWriter out;
  out.u32(static_cast<std::uint32_t>(inner.size()));
  out.raw(inner);
  return std::move(out).take();
}

std::optional<std::size_t> frame_extent(std::span<const std::uint8_t> buffer) {
  if (buffer.size() < 4) return std::nullopt;
  ByteReader r(buffer.first(4));
  const std::uint32_t len = r.u32();
  if (len < kFrameHeaderBytes - 4) throw FrameError("declared frame length " + std::to_string(len) + " too short");
  if (len > kMaxFrameBytes) throw FrameError("declared frame length " + std::to_string(len) + " too long");
  return std::size_t{4} + len;
}

Frame decode_frame(std::span<const std::uint8_t> bytes) {
  const auto extent = frame_extent(bytes);
  if (!extent || bytes.size() < *extent) throw FrameError("truncated frame");
  if (bytes.size() > *extent) throw FrameError("bytes beyond the declared frame length");
  ByteReader r(bytes.subspan(4));
  const std::uint8_t raw_tag = r.u8();
  if (raw_tag < 1 || raw_tag > static_cast<std::uint8_t>(WireTag::RequestFailed)) {
    throw FrameError("unknown message tag " + std::to_string(raw_tag));
  }
  Frame f;
  f.request.origin = r.u64();
  f.request.seq = r.u64();
  f.sender = r.u64();
  Round round;
  round.nr = r.i64();
  round.id.counter = r.u64();
  round.id.process = r.u64();
  if (round.nr < Round::kBottomNr) throw FrameError("negative round number");
  f.body = get_payload(static_cast<WireTag>(raw_tag), round, r);
  if (!r.done()) throw FrameError("payload shorter than the declared frame length");
  return f;
}

std::optional<PeerMessage<CrdtState>> to_peer_message(const Frame& f, ProcessId to) {
  PeerMessage<CrdtState> m;
  m.from = f.sender;
  m.to = to;
  m.request = f.request;
  const bool peer = std::visit(
      [&](const auto& b) {
        using B = std::decay_t<decltype(b)>;
        if constexpr (std::is_constructible_v<PeerBody<CrdtState>, B>) {
          m.body = b;
          return true;
        } else {
          return false;
        }
      },
      f.body);
  if (!peer) return std::nullopt;
  return m;
}

Frame from_peer_message(const PeerMessage<CrdtState>& m) {
  Frame f;
  f.request = m.request;
  f.sender = m.from;
  f.body = std::visit([](const auto& b) -> WireBody { return b; }, m.body);
  return f;
}

Frame from_client_reply(const ClientReply<CrdtState>& r, ProcessId sender) {
  Frame f;
  f.request = r.client_request;
  f.sender = sender;
  const ReplyStats stats{r.round_trips, r.retries};
  f.body = std::visit(
      [&](const auto& b) -> WireBody {
        using B = std::decay_t<decltype(b)>;
        if constexpr (std::is_same_v<B, UpdateDone>) {
          return UpdateReply{b.tag, stats};
        } else if constexpr (std::is_same_v<B, QueryDone<CrdtState>>) {
          return QueryReply{b.result, b.learned, stats};
        } else {
          return FailedReply{b.reason, stats};
        }
      },
      r.body);
  return f;
}

}  // namespace crdtpaxos
