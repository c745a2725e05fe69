#pragma once

// Networked replica daemon and a blocking client.
//
// Cluster config is a plain text file, one setting per line, '#' comments:
//
//   crdt = gcounter          # or gset
//   quorum = majority        # or explicit quorums: 1,2 2,3 1,3
//   batching = off
//   timeout_ms = 200
//   max_retries = 50
//   replica 1 127.0.0.1 7001
//   replica 2 127.0.0.1 7002
//
// Replica ids must be dense 1..N and endpoints unique.

#include <atomic>
#include <chrono>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "crdtpaxos/history.hpp"
#include "crdtpaxos/lattice.hpp"
#include "crdtpaxos/quorum.hpp"
#include "crdtpaxos/wire.hpp"

namespace crdtpaxos {

struct Endpoint {
  std::string host;
  std::uint16_t port = 0;
  bool operator==(const Endpoint&) const = default;
};

// "host:port"; throws UsageError.
Endpoint parse_endpoint(std::string_view text);

struct ClusterConfig {
  std::map<ProcessId, Endpoint> replicas;
  std::vector<std::set<ProcessId>> quorums;  // empty: majority
  CrdtKind crdt = CrdtKind::GCounter;
  bool batching = false;
  std::uint64_t timeout_ms = 200;
  std::uint32_t max_retries = 50;

  // Both throw ConfigError.
  static ClusterConfig parse(std::string_view text);
  static ClusterConfig load(const std::string& path);
  void validate() const;

  [[nodiscard]] QuorumSystem quorum_system() const;
  [[nodiscard]] const Endpoint& endpoint(ProcessId id) const;  // UsageError on unknown id
  [[nodiscard]] std::string to_text() const;
};

class ReplicaServer {
 public:
  ReplicaServer(ClusterConfig config, ProcessId self);
  ~ReplicaServer();
  ReplicaServer(const ReplicaServer&) = delete;
  ReplicaServer& operator=(const ReplicaServer&) = delete;

  // Binds the listening socket. Throws ConnectionError.
  void bind();
  // Serves until stop() is called (from any thread or a signal handler).
  void run();
  void stop() { stop_.store(true); }

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
  std::atomic<bool> stop_{false};
};

struct ClientOutcome {
  enum class Status : std::uint8_t { Ok, Failed } status = Status::Ok;
  std::optional<CausalTag> tag;         // updates
  std::optional<QueryResult> result;    // queries
  std::optional<CrdtState> learned;     // queries
  std::string reason;                   // failures
  ReplyStats stats;
};

// One TCP session to one replica; requests are sequential.
class Client {
 public:
  Client(Endpoint endpoint, std::chrono::milliseconds timeout = std::chrono::milliseconds(5000));
  ~Client();
  Client(const Client&) = delete;
  Client& operator=(const Client&) = delete;

  // Throw ConnectionError when the replica is unreachable or the reply does not arrive.
  ClientOutcome update(const UpdateCommand& cmd);
  ClientOutcome query(const QueryCommand& cmd);

 private:
  ClientOutcome call(const Frame& request);
  void connect();

  Endpoint endpoint_;
  std::chrono::milliseconds timeout_;
  int fd_ = -1;
  std::uint64_t nonce_;
  std::uint64_t seq_ = 0;
};

// Records client operations against a live cluster in the checker's history
// format. Counter histories are exact: replica i's k-th increment carries tag
// (i, k), so a learned counter state determines its causal history.
class HistoryRecorder {
 public:
  std::uint64_t invoke(std::uint64_t client, ProcessId replica, OpKind kind, const std::string& command);
  void respond(std::uint64_t op, const ClientOutcome& outcome);
  void fail(std::uint64_t op, const std::string& reason);
  [[nodiscard]] const History& history() const { return history_; }

 private:
  History history_;
  std::uint64_t seq_ = 0;
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

}  // namespace crdtpaxos
