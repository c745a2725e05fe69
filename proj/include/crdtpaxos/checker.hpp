#pragma once

// GLA safety conditions and linearizability over recorded histories.
//
// Learned states are compared by their causal tag-sets. Before checking, the
// history is extended: pending and failed updates never respond (they precede
// nothing), and queries without a successful response are dropped.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "crdtpaxos/history.hpp"

namespace crdtpaxos {

enum class Condition : std::uint8_t { Validity, Stability, Consistency, UpdateStability, UpdateVisibility };
const char* condition_name(Condition c);

struct Verdict {
  Condition condition = Condition::Validity;
  bool pass = true;
  std::vector<std::uint64_t> witness;  // op ids; re-checking just these ops fails again
  std::string detail;

  [[nodiscard]] std::string to_json() const;
};

// All of these throw UnsupportedInput on an uninstrumented history.
Verdict check_validity(const History& h);
Verdict check_stability(const History& h);
Verdict check_consistency(const History& h);
Verdict check_update_stability(const History& h);
Verdict check_update_visibility(const History& h);
std::vector<Verdict> check_gla(const History& h);

// The ops with the given ids, in the original order.
History restrict_history(const History& h, const std::vector<std::uint64_t>& ids);

struct SequentialWitness {
  std::vector<std::uint64_t> order;  // op ids
};

struct Linearization {
  bool legal = false;
  std::optional<SequentialWitness> witness;
  std::optional<Verdict> refused;  // the failing GLA check, when the construction was not attempted
  std::string detail;

  [[nodiscard]] std::string to_json() const;
};

Linearization linearize(const History& h);

// Exhaustive search over interleavings consistent with real-time order.
// Throws UnsupportedInput above `bound` ops (after extension).
bool linearizability_oracle(const History& h, std::size_t bound = 12);

}  // namespace crdtpaxos
