#include "crdtpaxos/wire.hpp"

#include <gtest/gtest.h>

#include <random>

#include "crdtpaxos/errors.hpp"

using namespace crdtpaxos;

namespace {

using S = CrdtState;

std::string random_string(std::mt19937_64& rng) {
  std::string s(rng() % 6, 'a');
  for (auto& c : s) c = static_cast<char>(rng() % 256);
  return s;
}

S random_state(std::mt19937_64& rng) {
  if (rng() % 2) {
    std::vector<std::uint64_t> v(rng() % 6);
    for (auto& x : v) x = rng() % 3 == 0 ? rng() : rng() % 10;
    return GCounter(v);
  }
  GSet s;
  for (std::size_t i = rng() % 5; i > 0; --i) s.insert(random_string(rng));
  return s;
}

Round random_round(std::mt19937_64& rng) {
  const RoundId id = rng() % 4 == 0 ? RoundId{} : RoundId{rng(), 1 + rng() % 9};
  if (rng() % 3 == 0) return Round::incremental(id);
  return Round::fixed(static_cast<std::int64_t>(rng() >> 1), id);
}

ReplyStats random_stats(std::mt19937_64& rng) {
  return {static_cast<std::uint32_t>(rng()), static_cast<std::uint32_t>(rng())};
}

QueryResult random_result(std::mt19937_64& rng) {
  switch (rng() % 3) {
    case 0:
      return rng();
    case 1:
      return rng() % 2 == 0;
    default: {
      std::vector<std::string> v(rng() % 4);
      for (auto& s : v) s = random_string(rng);
      return v;
    }
  }
}

Frame random_frame(std::mt19937_64& rng) {
  Frame f;
  f.request = {rng(), rng()};
  f.sender = rng() % 10;
  const CausalTag tag{rng(), rng()};
  switch (rng() % 12) {
    case 0:
      f.body = ClientUpdate{rng() % 2 ? UpdateCommand::increment(rng() % 10, tag) : UpdateCommand::add(random_string(rng), tag)};
      break;
    case 1:
      f.body = UpdateReply{tag, random_stats(rng)};
      break;
    case 2: {
      const auto k = rng() % 3;
      f.body = ClientQuery{k == 0 ? QueryCommand::value()
                                  : k == 1 ? QueryCommand::contains(random_string(rng)) : QueryCommand::elements()};
      break;
    }
    case 3:
      f.body = QueryReply{random_result(rng), random_state(rng), random_stats(rng)};
      break;
    case 4:
      f.body = Merge<S>{random_state(rng)};
      break;
    case 5:
      f.body = Merged{};
      break;
    case 6:
      f.body = Prepare<S>{random_round(rng), random_state(rng)};
      break;
    case 7:
      f.body = Ack<S>{random_round(rng), random_state(rng)};
      break;
    case 8:
      f.body = Vote<S>{random_round(rng), random_state(rng)};
      break;
    case 9:
      f.body = Voted{};
      break;
    case 10:
      f.body = Nack<S>{random_round(rng), random_state(rng)};
      break;
    default:
      f.body = FailedReply{random_string(rng), random_stats(rng)};
      break;
  }
  return f;
}

Bytes be64(std::uint64_t v) {
  Bytes b;
  for (int s = 56; s >= 0; s -= 8) b.push_back(static_cast<std::uint8_t>(v >> s));
  return b;
}

}  // namespace

TEST(Wire, PrepareExactBytes) {
  const Frame f{{2, 3}, 1, Prepare<S>{Round::incremental({1, 1}), GCounter(3)}};
  const Bytes b = encode_frame(f);
  Bytes expect = {0, 0, 0, 78, 7};
  for (auto v : {2ULL, 3ULL, 1ULL, ~0ULL, 1ULL, 1ULL}) {
    const Bytes part = be64(v);
    expect.insert(expect.end(), part.begin(), part.end());
  }
  const Bytes payload = {1, 0, 0, 0, 3};
  expect.insert(expect.end(), payload.begin(), payload.end());
  expect.resize(expect.size() + 24, 0);
  EXPECT_EQ(b, expect);
  EXPECT_EQ(decode_frame(b), f);
  EXPECT_EQ(f.tag(), WireTag::Prepare);
  EXPECT_STREQ(wire_tag_name(f.tag()), "PREPARE");
}

TEST(Wire, HeaderSize) {
  const Bytes b = encode_frame(Frame{{1, 1}, 2, Merged{}});
  EXPECT_EQ(b.size(), kFrameHeaderBytes);
  // messages without a round carry the bottom round
  EXPECT_EQ(Bytes(b.begin() + 29, b.begin() + 37), be64(~0ULL));
}

TEST(Wire, TagNumbers) {
  EXPECT_EQ(static_cast<int>(Frame{{}, 0, ClientUpdate{}}.tag()), 1);
  EXPECT_EQ(static_cast<int>(Frame{{}, 0, Nack<S>{}}.tag()), 11);
  EXPECT_EQ(static_cast<int>(Frame{{}, 0, FailedReply{}}.tag()), 12);
}

TEST(Wire, LengthMismatch) {
  Bytes b = encode_frame(Frame{{1, 1}, 1, Merge<S>{GCounter({1, 2})}});
  Bytes longer = b;
  longer.push_back(0);
  EXPECT_THROW(decode_frame(longer), FrameError);
  Bytes shorter(b.begin(), b.end() - 1);
  EXPECT_THROW(decode_frame(shorter), FrameError);
  Bytes bumped = b;
  bumped[3] += 1;
  EXPECT_THROW(decode_frame(bumped), FrameError);
  bumped = b;
  bumped.push_back(0);
  bumped[3] += 1;  // declared length covers a stray trailing byte
  EXPECT_THROW(decode_frame(bumped), FrameError);
  EXPECT_THROW(decode_frame(Bytes{0, 0}), FrameError);
}

TEST(Wire, RejectsBadHeaders) {
  Bytes b = encode_frame(Frame{{1, 1}, 1, Merged{}});
  Bytes bad_tag = b;
  bad_tag[4] = 0;
  EXPECT_THROW(decode_frame(bad_tag), FrameError);
  bad_tag[4] = 13;
  EXPECT_THROW(decode_frame(bad_tag), FrameError);
  Bytes round_set = b;
  round_set[36] = 0;  // nr becomes something other than -1 on a roundless message
  EXPECT_THROW(decode_frame(round_set), FrameError);

  Bytes negative = encode_frame(Frame{{1, 1}, 1, Prepare<S>{Round::fixed(0, {1, 1}), GCounter(1)}});
  for (std::size_t i = 29; i < 37; ++i) negative[i] = 0xFF;
  negative[36] = 0xFE;  // nr = -2
  EXPECT_THROW(decode_frame(negative), FrameError);
}

TEST(Wire, FrameExtent) {
  const Bytes b = encode_frame(Frame{{1, 1}, 1, Merged{}});
  EXPECT_FALSE(frame_extent(std::span(b).first(3)).has_value());
  EXPECT_EQ(frame_extent(b), b.size());
  EXPECT_THROW(frame_extent(Bytes{0, 0, 0, 1}), FrameError);
  EXPECT_THROW(frame_extent(Bytes{0xFF, 0xFF, 0xFF, 0xFF}), FrameError);
}

TEST(Wire, FuzzRoundTrip) {
  std::mt19937_64 rng(12345);
  for (int i = 0; i < 100000; ++i) {
    const Frame f = random_frame(rng);
    const Bytes b = encode_frame(f);
    ASSERT_EQ(frame_extent(b), b.size());
    ASSERT_EQ(decode_frame(b), f);
  }
}

TEST(Wire, MutatedFramesFailCleanlyOrRoundTrip) {
  std::mt19937_64 rng(999);
  std::size_t rejected = 0;
  for (int i = 0; i < 20000; ++i) {
    Bytes b = encode_frame(random_frame(rng));
    const auto flips = 1 + rng() % 3;
    for (std::size_t k = 0; k < flips; ++k) b[rng() % b.size()] ^= static_cast<std::uint8_t>(1 + rng() % 255);
    try {
      const Frame f = decode_frame(b);
      ASSERT_EQ(encode_frame(f), b);
    } catch (const FrameError&) {
      ++rejected;
    }
  }
  EXPECT_GT(rejected, 0U);
}

TEST(Wire, PeerMessageConversion) {
  const PeerMessage<S> m{3, 1, {3, 9}, Ack<S>{Round::fixed(4, {2, 3}), GCounter({1, 0, 2})}};
  const Frame f = from_peer_message(m);
  EXPECT_EQ(f.sender, 3U);
  const auto back = to_peer_message(decode_frame(encode_frame(f)), 1);
  ASSERT_TRUE(back.has_value());
  EXPECT_EQ(*back, m);
  EXPECT_FALSE(to_peer_message(Frame{{1, 1}, 1, ClientQuery{QueryCommand::value()}}, 1).has_value());
}

TEST(Wire, ClientReplyConversion) {
  ClientReply<S> r;
  r.client_request = {5, 6};
  r.round_trips = 2;
  r.retries = 1;
  r.body = QueryDone<S>{QueryResult(std::uint64_t{3}), GCounter({1, 2})};
  const Frame f = from_client_reply(r, 2);
  EXPECT_EQ(f.request, (RequestId{5, 6}));
  ASSERT_TRUE(std::holds_alternative<QueryReply>(f.body));
  const auto& q = std::get<QueryReply>(f.body);
  EXPECT_EQ(q.stats, (ReplyStats{2, 1}));
  EXPECT_EQ(q.learned, S(GCounter({1, 2})));

  r.body = RequestFailed{"max retries exceeded"};
  EXPECT_EQ(std::get<FailedReply>(from_client_reply(r, 2).body).reason, "max retries exceeded");
  r.body = UpdateDone{{2, 7}};
  EXPECT_EQ(std::get<UpdateReply>(from_client_reply(r, 2).body).tag, (CausalTag{2, 7}));
}
