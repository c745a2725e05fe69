#include "support.hpp"

#include <arpa/inet.h>
#include <fcntl.h>
#include <netinet/in.h>
#include <signal.h>
#include <sys/socket.h>
#include <sys/wait.h>
#include <unistd.h>

#include <thread>

#include "crdtpaxos/errors.hpp"

namespace crdtpaxos::testing {

namespace {

bool can_connect(const Endpoint& ep) {
  const int fd = socket(AF_INET, SOCK_STREAM, 0);
  if (fd < 0) return false;
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_port = htons(ep.port);
  inet_pton(AF_INET, ep.host.c_str(), &addr.sin_addr);
  const bool ok = connect(fd, reinterpret_cast<sockaddr*>(&addr), sizeof addr) == 0;
  close(fd);
  return ok;
}

}  // namespace

std::uint16_t free_port() {
  const int fd = socket(AF_INET, SOCK_STREAM, 0);
  if (fd < 0) throw ConnectionError("socket failed");
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
  addr.sin_port = 0;
  socklen_t len = sizeof addr;
  if (bind(fd, reinterpret_cast<sockaddr*>(&addr), sizeof addr) != 0 ||
      getsockname(fd, reinterpret_cast<sockaddr*>(&addr), &len) != 0) {
    close(fd);
    throw ConnectionError("cannot reserve a port");
  }
  close(fd);
  return ntohs(addr.sin_port);
}

ClusterConfig local_cluster(std::size_t n, CrdtKind crdt) {
  ClusterConfig c;
  c.crdt = crdt;
  c.timeout_ms = 50;
  c.max_retries = 100;
  for (ProcessId id = 1; id <= n; ++id) c.replicas[id] = {"127.0.0.1", free_port()};
  c.validate();
  return c;
}

bool wait_ready(const ClusterConfig& config, std::chrono::milliseconds limit) {
  const auto deadline = std::chrono::steady_clock::now() + limit;
  for (const auto& [id, ep] : config.replicas) {
    while (!can_connect(ep)) {
      if (std::chrono::steady_clock::now() > deadline) return false;
      std::this_thread::sleep_for(std::chrono::milliseconds(20));
    }
  }
  return true;
}

ForkedCluster::ForkedCluster(ClusterConfig config, std::string log_dir) : config_(std::move(config)) {
  for (const auto& [id, ep] : config_.replicas) {
    const pid_t pid = fork();
    if (pid < 0) throw ConnectionError("fork failed");
    if (pid == 0) {
      const std::string log = log_dir.empty() ? "/dev/null" : log_dir + "/replica" + std::to_string(id) + ".log";
      const int fd = open(log.c_str(), O_WRONLY | O_CREAT | O_TRUNC, 0644);
      if (fd >= 0) {
        dup2(fd, STDERR_FILENO);
        close(fd);
      }
      int code = 0;
      try {
        ReplicaServer server(config_, id);
        server.bind();
        server.run();
      } catch (...) {
        code = 3;
      }
      _exit(code);
    }
    children_[id] = pid;
  }
  ready_ = wait_ready(config_);
}

ForkedCluster::~ForkedCluster() {
  for (const auto& [id, pid] : children_) ::kill(pid, SIGKILL);
  for (const auto& [id, pid] : children_) waitpid(pid, nullptr, 0);
}

void ForkedCluster::kill(ProcessId id) {
  auto it = children_.find(id);
  if (it == children_.end()) return;
  ::kill(it->second, SIGKILL);
  waitpid(it->second, nullptr, 0);
  children_.erase(it);
}

}  // namespace crdtpaxos::testing
