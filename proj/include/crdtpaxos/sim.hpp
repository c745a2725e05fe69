#pragma once

// Deterministic discrete-event simulator: N replicas, M closed-loop clients,
// an adversarial network (random delay, drop, duplicate) and crash-stop /
// partition fault injection. A run is a pure function of its SimConfig.

#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "crdtpaxos/history.hpp"
#include "crdtpaxos/ids.hpp"
#include "crdtpaxos/lattice.hpp"
#include "crdtpaxos/rng.hpp"

namespace crdtpaxos {

struct CrashSpec {
  ProcessId replica = 0;
  std::uint64_t at = 0;
  bool operator==(const CrashSpec&) const = default;
};

// Replicas in different groups exchange nothing during [start, end).
// A replica not listed in any group is isolated from everyone.
struct PartitionSpec {
  std::vector<std::vector<ProcessId>> groups;
  std::uint64_t start = 0;
  std::uint64_t end = 0;
  bool operator==(const PartitionSpec&) const = default;
};

struct SimConfig {
  std::size_t n_replicas = 3;
  std::size_t n_clients = 1;
  std::vector<std::set<ProcessId>> quorums;  // empty: majority
  double update_fraction = 0.5;
  std::size_t ops_per_client = 10;
  // Ops at index >= this value are queries. Unset: no cutoff.
  std::optional<std::size_t> updates_until_op;
  // Sequential updates issued by an extra client before the main workload;
  // main clients then start settle_time ticks after the last one completes.
  std::size_t warmup_updates = 0;
  std::uint64_t settle_time = 0;

  double drop_probability = 0.0;
  double duplicate_probability = 0.0;
  std::uint64_t delay_min = 1;
  std::uint64_t delay_max = 10;
  std::vector<CrashSpec> crashes;
  std::vector<PartitionSpec> partitions;

  bool batching = false;
  std::uint64_t seed = 1;
  std::uint64_t max_virtual_time = 1'000'000;
  CrdtKind crdt = CrdtKind::GCounter;

  bool instrumented = true;      // carry causal histories; required by the checker
  bool record_trace = true;
  bool check_invariants = true;  // per-step protocol invariants, see Metrics::invariant_violations
  bool check_liveness = false;   // reject configs where crashes leave no live quorum

  std::uint64_t timeout = 0;         // 0: 4 x the maximum round-trip time
  std::uint32_t max_retries = 50;
  std::uint64_t client_timeout = 0;  // 0: timeout x (max_retries + 2)

  // Throws ConfigError.
  void validate() const;
  [[nodiscard]] std::uint64_t effective_timeout() const { return timeout != 0 ? timeout : 8 * delay_max; }
  [[nodiscard]] std::uint64_t effective_client_timeout() const {
    return client_timeout != 0 ? client_timeout : effective_timeout() * (max_retries + 2ULL);
  }
};

struct ScriptedOp {
  bool update = false;
  ProcessId replica = 1;
  bool operator==(const ScriptedOp&) const = default;
};
using ClientScript = std::vector<ScriptedOp>;

// Closed-loop scripts, one per client: each op is an update with probability
// update_fraction, else a query; the target replica is uniform.
std::vector<ClientScript> workload_generate(const SimConfig& config, Rng& rng);

enum class TraceKind : std::uint8_t { Send, Deliver, Drop, Duplicate, Timer, Crash, Invoke, Respond };
const char* trace_kind_name(TraceKind k);

struct TraceEvent {
  std::uint64_t time = 0;
  TraceKind kind = TraceKind::Send;
  std::uint64_t msg = 0;  // message sequence number (network events)
  std::uint64_t from = 0;
  std::uint64_t to = 0;
  std::string type;       // message tag, or op kind for invoke/respond
  std::string request;
  std::string round;
  std::string state;
  std::uint64_t op = 0;   // client op id (invoke/respond)
  std::uint64_t sent_at = 0;
  std::string detail;

  [[nodiscard]] std::string to_json() const;
};

struct Trace {
  std::vector<TraceEvent> events;
  [[nodiscard]] std::string to_jsonl() const;
};

struct Metrics {
  std::uint64_t seed = 0;
  std::uint64_t end_time = 0;
  bool quiescent = false;  // event queue drained before the horizon

  std::size_t ops_invoked = 0;
  std::size_t ops_completed = 0;
  std::size_t ops_failed = 0;
  std::size_t ops_pending = 0;  // invoked, never answered
  std::size_t updates_completed = 0;
  std::size_t queries_completed = 0;

  std::size_t messages_sent = 0;
  std::size_t messages_delivered = 0;
  std::size_t messages_dropped = 0;
  std::size_t messages_duplicated = 0;
  std::size_t max_payload_bytes = 0;

  std::size_t max_update_round_trips = 0;
  std::size_t max_query_round_trips = 0;
  std::size_t queries_within_1_rt = 0;
  std::size_t queries_within_3_rt = 0;

  std::vector<std::string> invariant_violations;

  static std::string csv_header();
  [[nodiscard]] std::string csv_row() const;
};

struct SimResult {
  Trace trace;
  History history;
  Metrics metrics;
};

SimResult sim_run(const SimConfig& config);

// JSON form of SimConfig used by the CLI; unknown keys are a ConfigError.
SimConfig sim_config_from_json(const std::string& text);
std::string sim_config_to_json(const SimConfig& config);

}  // namespace crdtpaxos
