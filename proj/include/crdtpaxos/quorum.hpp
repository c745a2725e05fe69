#pragma once

#include <cstddef>
#include <set>
#include <vector>

#include "crdtpaxos/ids.hpp"

namespace crdtpaxos {

// A family of replica subsets with pairwise non-empty intersection.
class QuorumSystem {
 public:
  QuorumSystem() = default;

  // Any subset holding more than half of the replicas.
  static QuorumSystem majority(std::vector<ProcessId> replicas);
  // Throws ConfigError unless every pair of quorums intersects.
  static QuorumSystem explicit_family(std::vector<ProcessId> replicas, std::vector<std::set<ProcessId>> quorums);

  // True when `members` contains some quorum.
  [[nodiscard]] bool is_quorum(const std::set<ProcessId>& members) const;
  [[nodiscard]] std::size_t min_quorum_size() const;
  [[nodiscard]] const std::vector<ProcessId>& replicas() const { return replicas_; }
  [[nodiscard]] bool is_majority() const { return quorums_.empty(); }

 private:
  std::vector<ProcessId> replicas_;
  std::vector<std::set<ProcessId>> quorums_;  // empty == majority
};

}  // namespace crdtpaxos
