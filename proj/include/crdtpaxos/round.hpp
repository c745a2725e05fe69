#pragma once

#include <compare>
#include <cstdint>
#include <string>

#include "crdtpaxos/ids.hpp"

namespace crdtpaxos {

// (counter, process). The all-zero id is BOTTOM and sorts below every generated id.
struct RoundId {
  std::uint64_t counter = 0;
  ProcessId process = 0;

  [[nodiscard]] bool is_bottom() const { return counter == 0 && process == 0; }
  auto operator<=>(const RoundId&) const = default;
};

// A round orders the prepare/vote handshake. Rounds are ordered by number only;
// operator== compares number and id.
struct Round {
  static constexpr std::int64_t kBottomNr = -1;

  std::int64_t nr = 0;
  RoundId id;

  static Round initial() { return {0, {}}; }
  static Round incremental(RoundId id) { return {kBottomNr, id}; }
  static Round fixed(std::int64_t nr, RoundId id) { return {nr, id}; }

  [[nodiscard]] bool nr_is_bottom() const { return nr == kBottomNr; }
  bool operator==(const Round&) const = default;
};

inline bool nr_less(const Round& a, const Round& b) { return a.nr < b.nr; }

inline std::string to_string(const Round& r) {
  std::string nr = r.nr_is_bottom() ? "_" : std::to_string(r.nr);
  std::string id = r.id.is_bottom() ? "_" : std::to_string(r.id.counter) + "." + std::to_string(r.id.process);
  return "(" + nr + "," + id + ")";
}

// Ids are strictly increasing per process and unique across processes.
class RoundIdGenerator {
 public:
  explicit RoundIdGenerator(ProcessId self) : self_(self) {}
  RoundId next() { return {++counter_, self_}; }

 private:
  ProcessId self_;
  std::uint64_t counter_ = 0;
};

}  // namespace crdtpaxos
