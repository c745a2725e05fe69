#pragma once

#include <compare>
#include <cstdint>
#include <functional>
#include <string>

namespace crdtpaxos {

// Replica identifiers are dense, starting at 1. Zero is reserved for BOTTOM.
using ProcessId = std::uint64_t;

// Globally unique identity of one update command: (origin, per-origin sequence).
struct CausalTag {
  std::uint64_t origin = 0;
  std::uint64_t seq = 0;

  [[nodiscard]] bool is_bottom() const { return origin == 0 && seq == 0; }
  auto operator<=>(const CausalTag&) const = default;
};

// Correlates replies with the proposer request that caused them. 16 bytes on the wire.
struct RequestId {
  std::uint64_t origin = 0;
  std::uint64_t seq = 0;

  auto operator<=>(const RequestId&) const = default;
};

inline std::string to_string(const CausalTag& t) {
  return std::to_string(t.origin) + ":" + std::to_string(t.seq);
}

inline std::string to_string(const RequestId& r) {
  return std::to_string(r.origin) + ":" + std::to_string(r.seq);
}

}  // namespace crdtpaxos

template <>
struct std::hash<crdtpaxos::RequestId> {
  std::size_t operator()(const crdtpaxos::RequestId& r) const noexcept {
    return std::hash<std::uint64_t>{}(r.origin * 0x9E3779B97F4A7C15ULL ^ r.seq);
  }
};
