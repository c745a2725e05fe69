#include "crdtpaxos/acceptor.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace crdtpaxos;

namespace {

using S = CrdtState;
const RoundId x{1, 1};
const RoundId y{1, 2};
const RoundId z{1, 3};

S gc(std::vector<std::uint64_t> v) { return GCounter(std::move(v)); }

AcceptorState<S> at(std::int64_t nr, RoundId id, S s) { return {Round::fixed(nr, id), std::move(s)}; }

}  // namespace

TEST(AcceptorInit, Examples) {
  const auto a = acceptor_init(gc({0, 0, 0}));
  EXPECT_EQ(a.round, Round::initial());
  EXPECT_EQ(a.round.nr, 0);
  EXPECT_TRUE(a.round.id.is_bottom());
  EXPECT_EQ(a.state, gc({0, 0, 0}));

  const auto b = acceptor_init(S(GSet{}));
  EXPECT_EQ(b.round, Round::initial());
  EXPECT_EQ(b.state, S(GSet{}));
}

TEST(AcceptorApplyUpdate, InvalidatesRoundId) {
  auto [a, s] = acceptor_apply_update(at(3, x, gc({1, 0})), UpdateCommand::increment(0));
  EXPECT_EQ(a.round, Round::fixed(3, RoundId{}));
  EXPECT_EQ(a.state, gc({2, 0}));
  EXPECT_EQ(s, gc({2, 0}));
}

TEST(AcceptorApplyUpdate, FreshAcceptorKeepsNr) {
  auto [a, s] = acceptor_apply_update(acceptor_init(gc({0, 0, 0})), UpdateCommand::increment(0));
  EXPECT_EQ(a.state, gc({1, 0, 0}));
  EXPECT_EQ(a.round.nr, 0);
}

TEST(AcceptorApplyUpdate, IncompatibleCommand) {
  EXPECT_THROW(acceptor_apply_update(acceptor_init(gc({0})), UpdateCommand::add("a")), CommandError);
}

TEST(AcceptorMerge, Examples) {
  auto [a, reply] = acceptor_on_merge(at(0, {}, gc({1, 0})), Merge<S>{gc({0, 2})});
  EXPECT_EQ(a.state, gc({1, 2}));
  EXPECT_EQ(reply, Merged{});

  // duplicate delivery is idempotent
  auto [a2, reply2] = acceptor_on_merge(a, Merge<S>{gc({0, 2})});
  EXPECT_EQ(a2.state, gc({1, 2}));
  EXPECT_EQ(reply2, Merged{});

  // dominated payload still invalidates the round id
  auto [a3, _] = acceptor_on_merge(at(4, y, gc({3, 3})), Merge<S>{gc({1, 0})});
  EXPECT_EQ(a3.state, gc({3, 3}));
  EXPECT_EQ(a3.round, Round::fixed(4, RoundId{}));
}

TEST(AcceptorPrepare, IncrementalPrepareIsAccepted) {
  auto [a, reply] = acceptor_on_prepare(at(2, x, gc({1, 0})), Prepare<S>{Round::incremental(y), gc({0, 1})});
  EXPECT_EQ(a.round, Round::fixed(3, y));
  EXPECT_EQ(a.state, gc({1, 1}));
  ASSERT_TRUE(std::holds_alternative<Ack<S>>(reply));
  EXPECT_EQ(std::get<Ack<S>>(reply), (Ack<S>{Round::fixed(3, y), gc({1, 1})}));
}

TEST(AcceptorPrepare, StaleFixedPrepareIsNacked) {
  const S s0 = gc({0, 0});
  auto [a, reply] = acceptor_on_prepare(at(2, x, gc({1, 0})), Prepare<S>{Round::fixed(1, z), s0});
  ASSERT_TRUE(std::holds_alternative<Nack<S>>(reply));
  EXPECT_EQ(std::get<Nack<S>>(reply), (Nack<S>{Round::fixed(2, x), gc({1, 0})}));
  EXPECT_EQ(a.round, Round::fixed(2, x));
}

TEST(AcceptorPrepare, EqualNrFixedPrepareIsNacked) {
  auto [a, reply] = acceptor_on_prepare(at(2, x, gc({1, 0})), Prepare<S>{Round::fixed(2, z), gc({0, 0})});
  EXPECT_TRUE(std::holds_alternative<Nack<S>>(reply));
  EXPECT_EQ(a.round, Round::fixed(2, x));
}

TEST(AcceptorPrepare, NewerFixedPrepareIsAccepted) {
  auto [a, reply] = acceptor_on_prepare(at(2, x, gc({1, 0})), Prepare<S>{Round::fixed(5, z), gc({1, 0})});
  EXPECT_EQ(a.round, Round::fixed(5, z));
  ASSERT_TRUE(std::holds_alternative<Ack<S>>(reply));
  EXPECT_EQ(std::get<Ack<S>>(reply), (Ack<S>{Round::fixed(5, z), gc({1, 0})}));
}

TEST(AcceptorPrepare, NackedPrepareStillMergesPayload) {
  auto [a, reply] = acceptor_on_prepare(at(2, x, gc({1, 0})), Prepare<S>{Round::fixed(1, z), gc({0, 4})});
  EXPECT_TRUE(std::holds_alternative<Nack<S>>(reply));
  EXPECT_EQ(a.state, gc({1, 4}));
}

TEST(AcceptorVote, MatchingRoundIsVoted) {
  auto [a, reply] = acceptor_on_vote(at(3, y, gc({1, 0})), Vote<S>{Round::fixed(3, y), gc({1, 1})});
  EXPECT_TRUE(std::holds_alternative<Voted>(reply));
  EXPECT_TRUE(compare(gc({1, 1}), a.state));
}

TEST(AcceptorVote, InvalidatedRoundIsNacked) {
  auto a = at(3, y, gc({1, 0}));
  a = acceptor_on_merge(a, Merge<S>{gc({0, 0})}).first;
  EXPECT_EQ(a.round, Round::fixed(3, RoundId{}));
  auto [b, reply] = acceptor_on_vote(a, Vote<S>{Round::fixed(3, y), gc({1, 1})});
  EXPECT_TRUE(std::holds_alternative<Nack<S>>(reply));
}

TEST(AcceptorVote, NewerRoundNacksButMerges) {
  auto [a, reply] = acceptor_on_vote(at(4, z, gc({1, 0})), Vote<S>{Round::fixed(3, y), gc({0, 5})});
  ASSERT_TRUE(std::holds_alternative<Nack<S>>(reply));
  EXPECT_EQ(a.state, gc({1, 5}));
  EXPECT_EQ(std::get<Nack<S>>(reply), (Nack<S>{Round::fixed(4, z), gc({1, 5})}));
}

TEST(AcceptorVote, SameNrDifferentIdIsNacked) {
  auto [a, reply] = acceptor_on_vote(at(3, z, gc({0})), Vote<S>{Round::fixed(3, y), gc({0})});
  EXPECT_TRUE(std::holds_alternative<Nack<S>>(reply));
}

TEST(AcceptorObject, InitOnceAndUseAfterInit) {
  Acceptor<S> a;
  EXPECT_FALSE(a.initialized());
  EXPECT_THROW((void)a.payload(), UsageError);
  EXPECT_THROW(a.on_merge(Merge<S>{gc({1})}), UsageError);
  a.init(gc({0}));
  EXPECT_THROW(a.init(gc({0})), UsageError);
  a.apply_update(UpdateCommand::increment(0));
  EXPECT_EQ(a.payload(), gc({1}));
}

TEST(AcceptorObject, MonotoneUnderRandomMessages) {
  std::mt19937_64 rng(9);
  Acceptor<S> a(gc({0, 0, 0}));
  for (int i = 0; i < 20000; ++i) {
    const S before = a.payload();
    const std::int64_t nr_before = a.round().nr;
    std::vector<std::uint64_t> v(3);
    for (auto& c : v) c = rng() % 5;
    const RoundId id{rng() % 4, rng() % 4};
    const Round r = rng() % 2 ? Round::incremental(id) : Round::fixed(static_cast<std::int64_t>(rng() % 8), id);
    switch (rng() % 4) {
      case 0:
        a.apply_update(UpdateCommand::increment(rng() % 3));
        break;
      case 1:
        a.on_merge(Merge<S>{gc(v)});
        break;
      case 2:
        a.on_prepare(Prepare<S>{r, gc(v)});
        break;
      default:
        a.on_vote(Vote<S>{r, gc(v)});
        break;
    }
    ASSERT_TRUE(compare(before, a.payload()));
    ASSERT_GE(a.round().nr, nr_before);
  }
}
