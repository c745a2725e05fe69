#pragma once

// Causal-history instrumentation. Only the simulator and the checker use these
// types; the production payload carries no history.

#include <algorithm>
#include <initializer_list>
#include <optional>
#include <vector>

#include "crdtpaxos/ids.hpp"
#include "crdtpaxos/lattice.hpp"

namespace crdtpaxos {

// Sorted, duplicate-free set of causal tags.
class TagSet {
 public:
  TagSet() = default;
  TagSet(std::initializer_list<CausalTag> tags) : tags_(tags) { normalize(); }
  explicit TagSet(std::vector<CausalTag> tags) : tags_(std::move(tags)) { normalize(); }

  void insert(const CausalTag& t) {
    auto it = std::lower_bound(tags_.begin(), tags_.end(), t);
    if (it == tags_.end() || *it != t) tags_.insert(it, t);
  }
  [[nodiscard]] bool contains(const CausalTag& t) const { return std::binary_search(tags_.begin(), tags_.end(), t); }
  [[nodiscard]] bool subset_of(const TagSet& other) const {
    return std::includes(other.tags_.begin(), other.tags_.end(), tags_.begin(), tags_.end());
  }
  [[nodiscard]] TagSet united(const TagSet& other) const {
    TagSet out;
    out.tags_.reserve(tags_.size() + other.tags_.size());
    std::set_union(tags_.begin(), tags_.end(), other.tags_.begin(), other.tags_.end(),
                   std::back_inserter(out.tags_));
    return out;
  }
  [[nodiscard]] std::size_t size() const { return tags_.size(); }
  [[nodiscard]] bool empty() const { return tags_.empty(); }
  [[nodiscard]] auto begin() const { return tags_.begin(); }
  [[nodiscard]] auto end() const { return tags_.end(); }

  bool operator==(const TagSet&) const = default;

 private:
  void normalize() {
    std::sort(tags_.begin(), tags_.end());
    tags_.erase(std::unique(tags_.begin(), tags_.end()), tags_.end());
  }

  std::vector<CausalTag> tags_;
};

// A lattice value paired with the set of updates it includes.
// Protocol decisions (compare) look at the value only, so wrapping a payload
// never changes protocol behaviour.
template <class L>
struct CausalTaggedState {
  L value;
  TagSet history;

  bool operator==(const CausalTaggedState&) const = default;
};

template <class L>
bool compare(const CausalTaggedState<L>& x, const CausalTaggedState<L>& y) {
  return compare(x.value, y.value);
}

template <class L>
CausalTaggedState<L> merge(const CausalTaggedState<L>& x, const CausalTaggedState<L>& y) {
  return {merge(x.value, y.value), x.history.united(y.history)};
}

template <class L>
CausalTaggedState<L> tagged_merge(const CausalTaggedState<L>& x, const CausalTaggedState<L>& y) {
  return merge(x, y);
}

template <class L>
CausalTaggedState<L> apply_update(const UpdateCommand& cmd, const CausalTaggedState<L>& s) {
  CausalTaggedState<L> out{apply_update(cmd, s.value), s.history};
  out.history.insert(cmd.tag);
  return out;
}

template <class L>
QueryResult apply_query(const QueryCommand& cmd, const CausalTaggedState<L>& s) {
  return apply_query(cmd, s.value);
}

template <class L>
std::size_t payload_size(const CausalTaggedState<L>& s) {
  return payload_size(s.value);
}

template <class L>
std::string render(const CausalTaggedState<L>& s) {
  return render(s.value);
}

template <class L>
std::optional<std::uint64_t> counter_slot(const CausalTaggedState<L>& s, std::size_t slot) {
  return counter_slot(s.value, slot);
}

template <class L>
const L& plain_value(const CausalTaggedState<L>& s) {
  return s.value;
}
inline const CrdtState& plain_value(const CrdtState& s) { return s; }

// Reconstructs the causal history of a G-counter in which replica i (slot i-1)
// tags its k-th increment (i, k). Returns nullopt for payloads whose history is
// not recoverable from the value.
std::optional<TagSet> derived_history(const CrdtState& s);

}  // namespace crdtpaxos
