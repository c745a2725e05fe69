#include "crdtpaxos/lattice.hpp"

#include <algorithm>
#include <numeric>

#include "crdtpaxos/errors.hpp"

namespace crdtpaxos {

namespace {

void require_same_shape(const GCounter& x, const GCounter& y) {
  if (x.size() != y.size()) {
    throw ShapeError("gcounter length mismatch: " + std::to_string(x.size()) + " vs " +
                     std::to_string(y.size()));
  }
}

template <class... Fs>
struct overloaded : Fs... {
  using Fs::operator()...;
};
template <class... Fs>
overloaded(Fs...) -> overloaded<Fs...>;

constexpr std::uint8_t kIncrementTag = 1;
constexpr std::uint8_t kSetAddTag = 2;
constexpr std::uint8_t kCounterValueTag = 1;
constexpr std::uint8_t kSetContainsTag = 2;
constexpr std::uint8_t kSetElementsTag = 3;
constexpr std::uint8_t kResultU64 = 1;
constexpr std::uint8_t kResultBool = 2;
constexpr std::uint8_t kResultList = 3;

}  // namespace

void GCounter::increment(std::size_t slot) {
  if (slot >= counts_.size()) {
    throw CommandError("increment slot " + std::to_string(slot) + " out of range for " +
                       std::to_string(counts_.size()) + " slots");
  }
  ++counts_[slot];
}

bool compare(const GCounter& x, const GCounter& y) {
  require_same_shape(x, y);
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (x[i] > y[i]) return false;
  }
  return true;
}

GCounter merge(const GCounter& x, const GCounter& y) {
  require_same_shape(x, y);
  std::vector<std::uint64_t> z(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) z[i] = std::max(x[i], y[i]);
  return GCounter(std::move(z));
}

std::uint64_t gcounter_query(const GCounter& x) {
  const auto counts = x.counts();
  return std::accumulate(counts.begin(), counts.end(), std::uint64_t{0});
}

bool compare(const GSet& x, const GSet& y) {
  return std::includes(y.elements().begin(), y.elements().end(), x.elements().begin(), x.elements().end());
}

GSet merge(const GSet& x, const GSet& y) {
  std::set<std::string> out = x.elements();
  out.insert(y.elements().begin(), y.elements().end());
  return GSet(std::move(out));
}

GCounter apply_update(const UpdateCommand& cmd, const GCounter& s) {
  const auto* inc = std::get_if<Increment>(&cmd.op);
  if (inc == nullptr) throw CommandError("set_add applied to a gcounter");
  GCounter out = s;
  out.increment(inc->slot);
  return out;
}

GSet apply_update(const UpdateCommand& cmd, const GSet& s) {
  const auto* add = std::get_if<SetAdd>(&cmd.op);
  if (add == nullptr) throw CommandError("increment applied to a gset");
  GSet out = s;
  out.insert(add->element);
  return out;
}

QueryResult apply_query(const QueryCommand& cmd, const GCounter& s) {
  if (!std::holds_alternative<CounterValue>(cmd.op)) throw CommandError("set query applied to a gcounter");
  return gcounter_query(s);
}

QueryResult apply_query(const QueryCommand& cmd, const GSet& s) {
  return std::visit(overloaded{
                        [](const CounterValue&) -> QueryResult {
                          throw CommandError("counter query applied to a gset");
                        },
                        [&](const SetContains& c) -> QueryResult { return s.contains(c.element); },
                        [&](const SetElements&) -> QueryResult {
                          return std::vector<std::string>(s.elements().begin(), s.elements().end());
                        },
                    },
                    cmd.op);
}

// ---- CrdtState ----

CrdtState CrdtState::initial(CrdtKind kind, std::size_t replicas) {
  switch (kind) {
    case CrdtKind::GCounter:
      return GCounter(replicas);
    case CrdtKind::GSet:
      return GSet{};
  }
  throw ConfigError("unknown crdt kind");
}

const GCounter& CrdtState::counter() const {
  if (const auto* c = std::get_if<GCounter>(&value_)) return *c;
  throw ShapeError("state is not a gcounter");
}

const GSet& CrdtState::set() const {
  if (const auto* s = std::get_if<GSet>(&value_)) return *s;
  throw ShapeError("state is not a gset");
}

bool compare(const CrdtState& x, const CrdtState& y) {
  if (x.kind() != y.kind()) throw ShapeError("crdt kind mismatch");
  return std::visit([&](const auto& a) { return compare(a, std::get<std::decay_t<decltype(a)>>(y.variant())); },
                    x.variant());
}

CrdtState merge(const CrdtState& x, const CrdtState& y) {
  if (x.kind() != y.kind()) throw ShapeError("crdt kind mismatch");
  return std::visit(
      [&](const auto& a) -> CrdtState { return merge(a, std::get<std::decay_t<decltype(a)>>(y.variant())); },
      x.variant());
}

CrdtState apply_update(const UpdateCommand& cmd, const CrdtState& s) {
  return std::visit([&](const auto& a) -> CrdtState { return apply_update(cmd, a); }, s.variant());
}

QueryResult apply_query(const QueryCommand& cmd, const CrdtState& s) {
  return std::visit([&](const auto& a) { return apply_query(cmd, a); }, s.variant());
}

std::optional<std::uint64_t> counter_slot(const GCounter& c, std::size_t slot) {
  if (slot >= c.size()) return std::nullopt;
  return c[slot];
}

std::optional<std::uint64_t> counter_slot(const GSet&, std::size_t) { return std::nullopt; }

std::optional<std::uint64_t> counter_slot(const CrdtState& s, std::size_t slot) {
  return std::visit([&](const auto& a) { return counter_slot(a, slot); }, s.variant());
}

// ---- serialization ----

void encode(ByteWriter& w, const GCounter& c) {
  w.u32(static_cast<std::uint32_t>(c.size()));
  for (auto v : c.counts()) w.u64(v);
}

void encode(ByteWriter& w, const GSet& s) {
  w.u32(static_cast<std::uint32_t>(s.size()));
  for (const auto& e : s.elements()) w.str(e);
}

void encode(ByteWriter& w, const CrdtState& s) {
  w.u8(static_cast<std::uint8_t>(s.kind()));
  std::visit([&](const auto& a) { encode(w, a); }, s.variant());
}

GCounter decode_gcounter(ByteReader& r) {
  const std::uint32_t n = r.u32();
  if (static_cast<std::size_t>(n) * 8 > r.remaining()) throw FrameError("gcounter length exceeds input");
  std::vector<std::uint64_t> counts(n);
  for (auto& v : counts) v = r.u64();
  return GCounter(std::move(counts));
}

GSet decode_gset(ByteReader& r) {
  const std::uint32_t n = r.u32();
  if (static_cast<std::size_t>(n) * 4 > r.remaining()) throw FrameError("gset length exceeds input");
  std::set<std::string> elements;
  std::string prev;
  for (std::uint32_t i = 0; i < n; ++i) {
    std::string e = r.str();
    if (i > 0 && !(prev < e)) throw FrameError("gset elements not strictly sorted");
    prev = e;
    elements.insert(elements.end(), std::move(e));
  }
  return GSet(std::move(elements));
}

CrdtState decode_state(ByteReader& r) {
  switch (r.u8()) {
    case static_cast<std::uint8_t>(CrdtKind::GCounter):
      return decode_gcounter(r);
    case static_cast<std::uint8_t>(CrdtKind::GSet):
      return decode_gset(r);
    default:
      throw FrameError("unknown crdt kind byte");
  }
}

Bytes serialize(const CrdtState& s) {
  ByteWriter w;
  encode(w, s);
  return std::move(w).take();
}

CrdtState deserialize(std::span<const std::uint8_t> bytes) {
  ByteReader r(bytes);
  CrdtState s = decode_state(r);
  r.expect_done();
  return s;
}

std::size_t payload_size(const GCounter& c) { return 4 + 8 * c.size(); }

std::size_t payload_size(const GSet& s) {
  std::size_t n = 4;
  for (const auto& e : s.elements()) n += 4 + e.size();
  return n;
}

std::size_t payload_size(const CrdtState& s) {
  return 1 + std::visit([](const auto& a) { return payload_size(a); }, s.variant());
}

void encode(ByteWriter& w, const UpdateCommand& cmd) {
  std::visit(overloaded{
                 [&](const Increment& i) {
                   w.u8(kIncrementTag);
                   w.u64(i.slot);
                 },
                 [&](const SetAdd& a) {
                   w.u8(kSetAddTag);
                   w.str(a.element);
                 },
             },
             cmd.op);
  w.u64(cmd.tag.origin);
  w.u64(cmd.tag.seq);
}

void encode(ByteWriter& w, const QueryCommand& cmd) {
  std::visit(overloaded{
                 [&](const CounterValue&) { w.u8(kCounterValueTag); },
                 [&](const SetContains& c) {
                   w.u8(kSetContainsTag);
                   w.str(c.element);
                 },
                 [&](const SetElements&) { w.u8(kSetElementsTag); },
             },
             cmd.op);
}

void encode(ByteWriter& w, const QueryResult& res) {
  std::visit(overloaded{
                 [&](std::uint64_t v) {
                   w.u8(kResultU64);
                   w.u64(v);
                 },
                 [&](bool b) {
                   w.u8(kResultBool);
                   w.u8(b ? 1 : 0);
                 },
                 [&](const std::vector<std::string>& list) {
                   w.u8(kResultList);
                   w.u32(static_cast<std::uint32_t>(list.size()));
                   for (const auto& e : list) w.str(e);
                 },
             },
             res);
}

UpdateCommand decode_update(ByteReader& r) {
  UpdateCommand cmd;
  switch (r.u8()) {
    case kIncrementTag:
      cmd.op = Increment{static_cast<std::size_t>(r.u64())};
      break;
    case kSetAddTag:
      cmd.op = SetAdd{r.str()};
      break;
    default:
      throw FrameError("unknown update command tag");
  }
  cmd.tag.origin = r.u64();
  cmd.tag.seq = r.u64();
  return cmd;
}

QueryCommand decode_query(ByteReader& r) {
  switch (r.u8()) {
    case kCounterValueTag:
      return QueryCommand::value();
    case kSetContainsTag:
      return QueryCommand::contains(r.str());
    case kSetElementsTag:
      return QueryCommand::elements();
    default:
      throw FrameError("unknown query command tag");
  }
}

QueryResult decode_result(ByteReader& r) {
  switch (r.u8()) {
    case kResultU64:
      return r.u64();
    case kResultBool: {
      const auto b = r.u8();
      if (b > 1) throw FrameError("bad bool encoding");
      return b == 1;
    }
    case kResultList: {
      const std::uint32_t n = r.u32();
      if (static_cast<std::size_t>(n) * 4 > r.remaining()) throw FrameError("result list exceeds input");
      std::vector<std::string> list;
      list.reserve(n);
      for (std::uint32_t i = 0; i < n; ++i) list.push_back(r.str());
      return list;
    }
    default:
      throw FrameError("unknown query result tag");
  }
}

// ---- rendering ----

std::string render(const GCounter& c) {
  std::string out = "[";
  for (std::size_t i = 0; i < c.size(); ++i) {
    if (i > 0) out += ",";
    out += std::to_string(c[i]);
  }
  return out + "]";
}

std::string render(const GSet& s) {
  std::string out = "{";
  bool first = true;
  for (const auto& e : s.elements()) {
    if (!first) out += ",";
    first = false;
    out += e;
  }
  return out + "}";
}

std::string render(const CrdtState& s) {
  return std::visit([](const auto& a) { return render(a); }, s.variant());
}

std::string render(const UpdateCommand& cmd) {
  return std::visit(overloaded{
                        [](const Increment& i) { return "incr(" + std::to_string(i.slot) + ")"; },
                        [](const SetAdd& a) { return "add(" + a.element + ")"; },
                    },
                    cmd.op);
}

std::string render(const QueryCommand& cmd) {
  return std::visit(overloaded{
                        [](const CounterValue&) { return std::string("get"); },
                        [](const SetContains& c) { return "contains(" + c.element + ")"; },
                        [](const SetElements&) { return std::string("elements"); },
                    },
                    cmd.op);
}

std::string render(const QueryResult& res) {
  return std::visit(overloaded{
                        [](std::uint64_t v) { return std::to_string(v); },
                        [](bool b) { return std::string(b ? "true" : "false"); },
                        [](const std::vector<std::string>& list) {
                          std::string out = "{";
                          for (std::size_t i = 0; i < list.size(); ++i) {
                            if (i > 0) out += ",";
                            out += list[i];
                          }
                          return out + "}";
                        },
                    },
                    res);
}

}  // namespace crdtpaxos
