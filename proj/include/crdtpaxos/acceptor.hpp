#pragma once

#include <optional>
#include <utility>
#include <variant>

#include "crdtpaxos/errors.hpp"
#include "crdtpaxos/lattice.hpp"
#include "crdtpaxos/messages.hpp"
#include "crdtpaxos/round.hpp"

namespace crdtpaxos {

template <class L>
struct AcceptorState {
  Round round;
  L state;

  bool operator==(const AcceptorState&) const = default;
};

template <class L>
AcceptorState<L> acceptor_init(L s0) {
  return {Round::initial(), std::move(s0)};
}

// In-place handlers. The pure acceptor_* forms below wrap these.

template <class L>
void acceptor_apply_update_in_place(AcceptorState<L>& a, const UpdateCommand& cmd) {
  a.state = apply_update(cmd, a.state);
  a.round.id = RoundId{};  // invalidate round in progress
}

template <class L>
void acceptor_on_merge_in_place(AcceptorState<L>& a, const Merge<L>& m) {
  a.state = merge(a.state, m.state);
  a.round.id = RoundId{};
}

template <class L>
std::variant<Ack<L>, Nack<L>> acceptor_on_prepare_in_place(AcceptorState<L>& a, const Prepare<L>& m) {
  a.state = merge(a.state, m.state);
  Round proposed = m.round;
  if (proposed.nr_is_bottom()) proposed.nr = a.round.nr + 1;  // incremental prepare
  if (proposed.nr > a.round.nr) {
    a.round = proposed;
    return Ack<L>{a.round, a.state};
  }
  return Nack<L>{a.round, a.state};
}

template <class L>
std::variant<Voted, Nack<L>> acceptor_on_vote_in_place(AcceptorState<L>& a, const Vote<L>& m) {
  a.state = merge(a.state, m.state);
  if (m.round == a.round) return Voted{};
  return Nack<L>{a.round, a.state};
}

template <class L>
std::pair<AcceptorState<L>, L> acceptor_apply_update(AcceptorState<L> a, const UpdateCommand& cmd) {
  acceptor_apply_update_in_place(a, cmd);
  L s = a.state;
  return {std::move(a), std::move(s)};
}

template <class L>
std::pair<AcceptorState<L>, Merged> acceptor_on_merge(AcceptorState<L> a, const Merge<L>& m) {
  acceptor_on_merge_in_place(a, m);
  return {std::move(a), Merged{}};
}

template <class L>
std::pair<AcceptorState<L>, std::variant<Ack<L>, Nack<L>>> acceptor_on_prepare(AcceptorState<L> a,
                                                                               const Prepare<L>& m) {
  auto reply = acceptor_on_prepare_in_place(a, m);
  return {std::move(a), std::move(reply)};
}

template <class L>
std::pair<AcceptorState<L>, std::variant<Voted, Nack<L>>> acceptor_on_vote(AcceptorState<L> a, const Vote<L>& m) {
  auto reply = acceptor_on_vote_in_place(a, m);
  return {std::move(a), std::move(reply)};
}

// Stateful acceptor owned by one replica. Initialized exactly once.
template <class L>
class Acceptor {
 public:
  Acceptor() = default;
  explicit Acceptor(L s0) { init(std::move(s0)); }

  void init(L s0) {
    if (state_) throw UsageError("acceptor already initialized");
    state_ = acceptor_init(std::move(s0));
  }

  [[nodiscard]] bool initialized() const { return state_.has_value(); }
  [[nodiscard]] const AcceptorState<L>& state() const { return checked(); }
  [[nodiscard]] const L& payload() const { return checked().state; }
  [[nodiscard]] const Round& round() const { return checked().round; }

  const L& apply_update(const UpdateCommand& cmd) {
    acceptor_apply_update_in_place(checked(), cmd);
    return state_->state;
  }
  Merged on_merge(const Merge<L>& m) {
    acceptor_on_merge_in_place(checked(), m);
    return {};
  }
  std::variant<Ack<L>, Nack<L>> on_prepare(const Prepare<L>& m) { return acceptor_on_prepare_in_place(checked(), m); }
  std::variant<Voted, Nack<L>> on_vote(const Vote<L>& m) { return acceptor_on_vote_in_place(checked(), m); }

 private:
  AcceptorState<L>& checked() {
    if (!state_) throw UsageError("acceptor used before init");
    return *state_;
  }
  const AcceptorState<L>& checked() const {
    if (!state_) throw UsageError("acceptor used before init");
    return *state_;
  }

  std::optional<AcceptorState<L>> state_;
};

}  // namespace crdtpaxos
