#pragma once

// Helpers for tests that run real replica daemons on loopback.

#include <chrono>
#include <cstdint>
#include <map>
#include <string>
#include <sys/types.h>

#include "crdtpaxos/service.hpp"

namespace crdtpaxos::testing {

// An unused TCP port on 127.0.0.1 (best effort: the port is released before returning).
std::uint16_t free_port();

ClusterConfig local_cluster(std::size_t n, CrdtKind crdt = CrdtKind::GCounter);

// True once every listed endpoint accepts a TCP connection.
bool wait_ready(const ClusterConfig& config, std::chrono::milliseconds limit = std::chrono::seconds(10));

// Each replica runs in a forked child. Children are killed on destruction.
class ForkedCluster {
 public:
  explicit ForkedCluster(ClusterConfig config, std::string log_dir = {});
  ~ForkedCluster();
  ForkedCluster(const ForkedCluster&) = delete;
  ForkedCluster& operator=(const ForkedCluster&) = delete;

  [[nodiscard]] const ClusterConfig& config() const { return config_; }
  [[nodiscard]] bool ready() const { return ready_; }
  void kill(ProcessId id);

 private:
  ClusterConfig config_;
  std::map<ProcessId, pid_t> children_;
  bool ready_ = false;
};

}  // namespace crdtpaxos::testing
