#pragma once

// Join-semilattice CRDT payloads replicated by the protocol.
//
// Every payload type offers the same free-function surface, found by ADL:
//   compare(x, y)        x ⊑ y
//   merge(x, y)          least upper bound
//   apply_update(u, s)   inflationary update, returns a new value
//   apply_query(q, s)    side-effect free query
//   payload_size(s)      bytes of the canonical serialization
// The protocol templates in replica.hpp are written against that surface only.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "crdtpaxos/bytes.hpp"
#include "crdtpaxos/ids.hpp"

namespace crdtpaxos {

class GCounter {
 public:
  GCounter() = default;
  explicit GCounter(std::size_t slots) : counts_(slots, 0) {}
  explicit GCounter(std::vector<std::uint64_t> counts) : counts_(std::move(counts)) {}

  [[nodiscard]] std::size_t size() const { return counts_.size(); }
  [[nodiscard]] std::uint64_t operator[](std::size_t slot) const { return counts_.at(slot); }
  [[nodiscard]] std::span<const std::uint64_t> counts() const { return counts_; }

  void increment(std::size_t slot);

  bool operator==(const GCounter&) const = default;

 private:
  std::vector<std::uint64_t> counts_;
};

bool compare(const GCounter& x, const GCounter& y);
GCounter merge(const GCounter& x, const GCounter& y);
std::uint64_t gcounter_query(const GCounter& x);

class GSet {
 public:
  GSet() = default;
  GSet(std::initializer_list<std::string> init) : elements_(init) {}
  explicit GSet(std::set<std::string> elements) : elements_(std::move(elements)) {}

  [[nodiscard]] const std::set<std::string>& elements() const { return elements_; }
  [[nodiscard]] bool contains(const std::string& e) const { return elements_.count(e) != 0; }
  [[nodiscard]] std::size_t size() const { return elements_.size(); }
  void insert(std::string e) { elements_.insert(std::move(e)); }

  bool operator==(const GSet&) const = default;

 private:
  std::set<std::string> elements_;
};

bool compare(const GSet& x, const GSet& y);
GSet merge(const GSet& x, const GSet& y);

// ---- commands ----

struct Increment {
  std::size_t slot = 0;
  bool operator==(const Increment&) const = default;
};
struct SetAdd {
  std::string element;
  bool operator==(const SetAdd&) const = default;
};

struct UpdateCommand {
  std::variant<Increment, SetAdd> op;
  CausalTag tag;

  static UpdateCommand increment(std::size_t slot, CausalTag tag = {}) { return {Increment{slot}, tag}; }
  static UpdateCommand add(std::string element, CausalTag tag = {}) { return {SetAdd{std::move(element)}, tag}; }
  bool operator==(const UpdateCommand&) const = default;
};

struct CounterValue {
  bool operator==(const CounterValue&) const = default;
};
struct SetContains {
  std::string element;
  bool operator==(const SetContains&) const = default;
};
struct SetElements {
  bool operator==(const SetElements&) const = default;
};

struct QueryCommand {
  std::variant<CounterValue, SetContains, SetElements> op;

  static QueryCommand value() { return {CounterValue{}}; }
  static QueryCommand contains(std::string e) { return {SetContains{std::move(e)}}; }
  static QueryCommand elements() { return {SetElements{}}; }
  bool operator==(const QueryCommand&) const = default;
};

using QueryResult = std::variant<std::uint64_t, bool, std::vector<std::string>>;

GCounter apply_update(const UpdateCommand& cmd, const GCounter& s);
GSet apply_update(const UpdateCommand& cmd, const GSet& s);
QueryResult apply_query(const QueryCommand& cmd, const GCounter& s);
QueryResult apply_query(const QueryCommand& cmd, const GSet& s);

// ---- runtime-selected CRDT ----

enum class CrdtKind : std::uint8_t { GCounter = 1, GSet = 2 };

// The payload type replicas actually carry; the concrete CRDT is fixed per cluster.
class CrdtState {
 public:
  CrdtState() : value_(GCounter{}) {}
  CrdtState(GCounter c) : value_(std::move(c)) {}  // NOLINT(google-explicit-constructor)
  CrdtState(GSet s) : value_(std::move(s)) {}      // NOLINT(google-explicit-constructor)

  static CrdtState initial(CrdtKind kind, std::size_t replicas);

  [[nodiscard]] CrdtKind kind() const {
    return std::holds_alternative<GCounter>(value_) ? CrdtKind::GCounter : CrdtKind::GSet;
  }
  [[nodiscard]] const GCounter& counter() const;
  [[nodiscard]] const GSet& set() const;
  [[nodiscard]] const std::variant<GCounter, GSet>& variant() const { return value_; }

  bool operator==(const CrdtState&) const = default;

 private:
  std::variant<GCounter, GSet> value_;
};

bool compare(const CrdtState& x, const CrdtState& y);
CrdtState merge(const CrdtState& x, const CrdtState& y);
CrdtState apply_update(const UpdateCommand& cmd, const CrdtState& s);
QueryResult apply_query(const QueryCommand& cmd, const CrdtState& s);

// Value of one G-counter slot, or nullopt when the payload is not a counter.
std::optional<std::uint64_t> counter_slot(const GCounter& c, std::size_t slot);
std::optional<std::uint64_t> counter_slot(const GSet& s, std::size_t slot);
std::optional<std::uint64_t> counter_slot(const CrdtState& s, std::size_t slot);

// Mutual compare.
template <class L>
bool equivalent(const L& x, const L& y) {
  return compare(x, y) && compare(y, x);
}

// ---- canonical serialization ----
//
// GCounter: u32 slot count, then one u64 per slot.
// GSet:     u32 element count, then elements in sorted order, each u32 length + bytes.
// CrdtState prefixes one kind byte (1 = gcounter, 2 = gset).
// All integers big-endian.

void encode(ByteWriter& w, const GCounter& c);
void encode(ByteWriter& w, const GSet& s);
void encode(ByteWriter& w, const CrdtState& s);
GCounter decode_gcounter(ByteReader& r);
GSet decode_gset(ByteReader& r);
CrdtState decode_state(ByteReader& r);

Bytes serialize(const CrdtState& s);
CrdtState deserialize(std::span<const std::uint8_t> bytes);

std::size_t payload_size(const GCounter& c);
std::size_t payload_size(const GSet& s);
std::size_t payload_size(const CrdtState& s);

void encode(ByteWriter& w, const UpdateCommand& cmd);
void encode(ByteWriter& w, const QueryCommand& cmd);
void encode(ByteWriter& w, const QueryResult& res);
UpdateCommand decode_update(ByteReader& r);
QueryCommand decode_query(ByteReader& r);
QueryResult decode_result(ByteReader& r);

// Human-readable rendering: "[1,0,2]" for counters, "{a,b}" for sets.
std::string render(const GCounter& c);
std::string render(const GSet& s);
std::string render(const CrdtState& s);
std::string render(const UpdateCommand& cmd);
std::string render(const QueryCommand& cmd);
std::string render(const QueryResult& res);

}  // namespace crdtpaxos
