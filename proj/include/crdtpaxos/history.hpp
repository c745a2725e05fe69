#pragma once

// Invoke/response record of client operations, consumed by the checker.
//
// Line-delimited JSON, schema "crdtpaxos-history" version 1:
//   {"format":"crdtpaxos-history","version":1,"instrumented":true}
//   {"event":"invoke","op":1,"client":0,"replica":2,"kind":"update","command":"incr(1)",
//    "tag":[1,1],"time":5,"seq":10}
//   {"event":"respond","op":1,"time":25,"seq":40,"outcome":"ok","round_trips":1,"retries":0,
//    "result":"6","learned":[[1,1]],"state":"[1,0,0]","phases":[["merge",7]],"proposer_done":23}
// Lines after the header are ordered by "seq", the position in the global
// event order; precedence between operations is decided on seq.

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "crdtpaxos/causal.hpp"
#include "crdtpaxos/ids.hpp"
#include "crdtpaxos/messages.hpp"

namespace crdtpaxos {

enum class OpKind : std::uint8_t { Update, Query };

struct PhaseRecord {
  PhaseKind kind = PhaseKind::Merge;
  std::uint64_t time = 0;
  bool operator==(const PhaseRecord&) const = default;
};

struct Operation {
  std::uint64_t id = 0;
  std::uint64_t client = 0;
  ProcessId replica = 0;
  OpKind kind = OpKind::Query;
  std::string command;
  std::optional<CausalTag> tag;  // updates only

  std::uint64_t invoke_time = 0;
  std::uint64_t invoke_seq = 0;
  std::optional<std::uint64_t> response_time;
  std::optional<std::uint64_t> response_seq;
  bool failed = false;

  std::optional<TagSet> learned;  // queries, when instrumented
  std::optional<std::string> result;
  std::optional<std::string> learned_state;
  std::uint32_t round_trips = 0;
  std::uint32_t retries = 0;
  std::vector<PhaseRecord> phases;
  std::optional<std::uint64_t> proposer_done_time;

  // A response that reports success. Failed operations count as pending.
  [[nodiscard]] bool completed() const { return response_seq.has_value() && !failed; }

  bool operator==(const Operation&) const = default;
};

struct History {
  bool instrumented = true;
  std::vector<Operation> ops;

  bool operator==(const History&) const = default;
};

// a's successful response happened before b's invocation.
inline bool precedes(const Operation& a, const Operation& b) {
  return a.completed() && *a.response_seq < b.invoke_seq;
}

std::string history_to_jsonl(const History& h);
History history_from_jsonl(std::string_view text);
void write_history(const History& h, const std::string& path);
History read_history(const std::string& path);

}  // namespace crdtpaxos
