#include "crdtpaxos/causal.hpp"

namespace crdtpaxos {

std::optional<TagSet> derived_history(const CrdtState& s) {
  if (s.kind() != CrdtKind::GCounter) return std::nullopt;
  const GCounter& c = s.counter();
  std::vector<CausalTag> tags;
  tags.reserve(gcounter_query(c));
  for (std::size_t slot = 0; slot < c.size(); ++slot) {
    for (std::uint64_t k = 1; k <= c[slot]; ++k) tags.push_back({slot + 1, k});
  }
  return TagSet(std::move(tags));
}

}  // namespace crdtpaxos
