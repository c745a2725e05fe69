#include "crdtpaxos/quorum.hpp"

#include <algorithm>

#include "crdtpaxos/errors.hpp"

namespace crdtpaxos {

QuorumSystem QuorumSystem::majority(std::vector<ProcessId> replicas) {
  if (replicas.empty()) throw ConfigError("quorum system needs at least one replica");
  std::sort(replicas.begin(), replicas.end());
  if (std::adjacent_find(replicas.begin(), replicas.end()) != replicas.end()) {
    throw ConfigError("duplicate replica id in quorum system");
  }
  QuorumSystem q;
  q.replicas_ = std::move(replicas);
  return q;
}

QuorumSystem QuorumSystem::explicit_family(std::vector<ProcessId> replicas,
                                           std::vector<std::set<ProcessId>> quorums) {
  QuorumSystem q = majority(std::move(replicas));
  if (quorums.empty()) throw ConfigError("explicit quorum family is empty");
  for (const auto& quorum : quorums) {
    if (quorum.empty()) throw ConfigError("empty quorum");
    for (auto p : quorum) {
      if (!std::binary_search(q.replicas_.begin(), q.replicas_.end(), p)) {
        throw ConfigError("quorum names unknown replica " + std::to_string(p));
      }
    }
  }
  for (std::size_t i = 0; i < quorums.size(); ++i) {
    for (std::size_t j = i; j < quorums.size(); ++j) {
      const bool meet = std::any_of(quorums[i].begin(), quorums[i].end(),
                                    [&](ProcessId p) { return quorums[j].count(p) != 0; });
      if (!meet) throw ConfigError("quorums " + std::to_string(i) + " and " + std::to_string(j) + " do not intersect");
    }
  }
  q.quorums_ = std::move(quorums);
  return q;
}

bool QuorumSystem::is_quorum(const std::set<ProcessId>& members) const {
  if (quorums_.empty()) {
    const auto present = std::count_if(replicas_.begin(), replicas_.end(),
                                       [&](ProcessId p) { return members.count(p) != 0; });
    return static_cast<std::size_t>(present) >= replicas_.size() / 2 + 1;
  }
  return std::any_of(quorums_.begin(), quorums_.end(), [&](const std::set<ProcessId>& quorum) {
    return std::includes(members.begin(), members.end(), quorum.begin(), quorum.end());
  });
}

std::size_t QuorumSystem::min_quorum_size() const {
  if (quorums_.empty()) return replicas_.size() / 2 + 1;
  std::size_t best = replicas_.size();
  for (const auto& quorum : quorums_) best = std::min(best, quorum.size());
  return best;
}

}  // namespace crdtpaxos
