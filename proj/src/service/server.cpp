#include <arpa/inet.h>
#include <fcntl.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <deque>
#include <iostream>
#include <sstream>

#include "crdtpaxos/errors.hpp"
#include "crdtpaxos/replica.hpp"
#include "crdtpaxos/service.hpp"

namespace crdtpaxos {

namespace {

using Clock = std::chrono::steady_clock;
using std::chrono::milliseconds;

constexpr std::size_t kMaxOutbuf = 64U << 20;
constexpr milliseconds kBackoffMin{50};
constexpr milliseconds kBackoffMax{1000};

void set_nonblocking(int fd) {
  const int flags = fcntl(fd, F_GETFL, 0);
  fcntl(fd, F_SETFL, flags | O_NONBLOCK);
}

void set_nodelay(int fd) {
  int one = 1;
  setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
}

struct Conn {
  int fd = -1;
  Bytes in;
  Bytes out;
  std::optional<ProcessId> peer;  // set on outbound peer links
  bool connecting = false;
  std::string label;
};

struct Backoff {
  Clock::time_point retry_at{};
  milliseconds delay = kBackoffMin;
};

}  // namespace

struct ReplicaServer::Impl {
  Impl(ClusterConfig c, ProcessId s) : config(std::move(c)), self(s), replica(make_protocol(), initial()) {}

  ProtocolConfig make_protocol() const {
    (void)config.endpoint(self);
    ProtocolConfig pc;
    pc.self = self;
    pc.quorum = config.quorum_system();
    pc.batching = config.batching;
    pc.timeout = config.timeout_ms;
    pc.max_retries = config.max_retries;
    return pc;
  }
  CrdtState initial() const { return CrdtState::initial(config.crdt, config.replicas.size()); }

  template <class... KV>
  void log(const char* level, const char* event, const KV&... kv) const {
    std::ostringstream line;
    line << "level=" << level << " replica=" << self << " event=" << event;
    ((line << ' ' << kv), ...);
    line << '\n';
    std::cerr << line.str() << std::flush;
  }

  // ---- sockets ----

  void bind_listener() {
    const Endpoint& ep = config.endpoint(self);
    addrinfo hints{};
    hints.ai_family = AF_INET;
    hints.ai_socktype = SOCK_STREAM;
    hints.ai_flags = AI_PASSIVE;
    addrinfo* res = nullptr;
    const std::string port = std::to_string(ep.port);
    if (int rc = getaddrinfo(ep.host.c_str(), port.c_str(), &hints, &res); rc != 0) {
      throw ConnectionError("cannot resolve " + ep.host + ": " + gai_strerror(rc));
    }
    listen_fd = socket(res->ai_family, res->ai_socktype, res->ai_protocol);
    int one = 1;
    setsockopt(listen_fd, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
    const int rc = ::bind(listen_fd, res->ai_addr, res->ai_addrlen);
    freeaddrinfo(res);
    if (rc != 0 || listen(listen_fd, 64) != 0) {
      const std::string err = std::strerror(errno);
      close(listen_fd);
      listen_fd = -1;
      throw ConnectionError("cannot bind " + ep.host + ":" + port + ": " + err);
    }
    set_nonblocking(listen_fd);
    log("info", "listening", "host=" + ep.host, "port=" + port);
  }

  std::uint64_t add_conn(Conn c) {
    const std::uint64_t id = next_conn++;
    conns.emplace(id, std::move(c));
    return id;
  }

  void connect_peer(ProcessId peer) {
    const Endpoint& ep = config.endpoint(peer);
    addrinfo hints{};
    hints.ai_family = AF_INET;
    hints.ai_socktype = SOCK_STREAM;
    addrinfo* res = nullptr;
    const std::string port = std::to_string(ep.port);
    if (getaddrinfo(ep.host.c_str(), port.c_str(), &hints, &res) != 0) {
      schedule_reconnect(peer);
      return;
    }
    const int fd = socket(res->ai_family, res->ai_socktype, res->ai_protocol);
    set_nonblocking(fd);
    set_nodelay(fd);
    const int rc = ::connect(fd, res->ai_addr, res->ai_addrlen);
    freeaddrinfo(res);
    if (rc != 0 && errno != EINPROGRESS) {
      close(fd);
      schedule_reconnect(peer);
      return;
    }
    Conn c;
    c.fd = fd;
    c.peer = peer;
    c.connecting = rc != 0;
    c.label = "peer" + std::to_string(peer);
    peer_conn[peer] = add_conn(std::move(c));
  }

  void schedule_reconnect(ProcessId peer) {
    auto& b = backoff[peer];
    b.retry_at = Clock::now() + b.delay;
    b.delay = std::min(b.delay * 2, kBackoffMax);
  }

  void close_conn(std::uint64_t id, const std::string& reason) {
    auto it = conns.find(id);
    if (it == conns.end()) return;
    Conn& c = it->second;
    if (reason != "eof") log("warn", "connection_closed", "conn=" + c.label, "reason=\"" + reason + "\"");
    close(c.fd);
    if (c.peer) {
      peer_conn.erase(*c.peer);
      schedule_reconnect(*c.peer);
    }
    conns.erase(it);
  }

  void send_bytes(Conn& c, const Bytes& bytes) {
    if (c.out.size() + bytes.size() > kMaxOutbuf) return;
    c.out.insert(c.out.end(), bytes.begin(), bytes.end());
  }

  void send_peer(ProcessId to, const Bytes& bytes) {
    auto it = peer_conn.find(to);
    if (it == peer_conn.end()) {
      auto b = backoff.find(to);
      if (b != backoff.end() && Clock::now() < b->second.retry_at) return;
      connect_peer(to);
      it = peer_conn.find(to);
      if (it == peer_conn.end()) return;
    }
    send_bytes(conns.at(it->second), bytes);
  }

  // ---- protocol glue ----

  void apply(Effects<CrdtState>&& fx) {
    const auto now = Clock::now();
    for (const auto& c : fx.cancel) timers.erase(c);
    for (const auto& a : fx.arm) timers[a.request] = now + milliseconds(a.delay);
    for (auto& m : fx.messages) {
      if (m.to == self) {
        self_queue.push_back(std::move(m));
      } else {
        send_peer(m.to, encode_frame(from_peer_message(m)));
      }
    }
    for (const auto& r : fx.replies) {
      auto it = conns.find(r.client);
      if (it == conns.end()) continue;
      send_bytes(it->second, encode_frame(from_client_reply(r, self)));
    }
  }

  void handle_frame(std::uint64_t conn_id, const Frame& f) {
    if (const auto* u = std::get_if<ClientUpdate>(&f.body)) {
      apply(replica.on_client_update(conn_id, f.request, u->cmd));
      return;
    }
    if (const auto* q = std::get_if<ClientQuery>(&f.body)) {
      apply(replica.on_client_query(conn_id, f.request, q->cmd));
      return;
    }
    auto m = to_peer_message(f, self);
    if (!m) throw FrameError(std::string("unexpected ") + wire_tag_name(f.tag()) + " from a peer");
    if (config.replicas.count(m->from) == 0 || m->from == self) {
      throw FrameError("sender " + std::to_string(m->from) + " is not a peer");
    }
    apply(replica.on_message(*m));
  }

  void on_readable(std::uint64_t id) {
    Conn& c = conns.at(id);
    std::uint8_t buf[65536];
    std::optional<std::string> closed;
    while (true) {
      const ssize_t n = recv(c.fd, buf, sizeof buf, 0);
      if (n > 0) {
        c.in.insert(c.in.end(), buf, buf + n);
        continue;
      }
      if (n == 0) {
        closed = "eof";
        break;
      }
      if (errno == EAGAIN || errno == EWOULDBLOCK) break;
      if (errno == EINTR) continue;
      closed = std::strerror(errno);
      break;
    }
    try {
      std::size_t offset = 0;
      while (true) {
        std::span<const std::uint8_t> rest(c.in.data() + offset, c.in.size() - offset);
        auto extent = frame_extent(rest);
        if (!extent || rest.size() < *extent) break;
        const Frame f = decode_frame(rest.first(*extent));
        offset += *extent;
        handle_frame(id, f);
        if (conns.count(id) == 0) return;
      }
      Conn& again = conns.at(id);
      again.in.erase(again.in.begin(), again.in.begin() + static_cast<std::ptrdiff_t>(offset));
    } catch (const Error& e) {
      close_conn(id, e.what());
      return;
    }
    if (closed) close_conn(id, *closed);
  }

  void on_writable(std::uint64_t id) {
    Conn& c = conns.at(id);
    if (c.connecting) {
      int err = 0;
      socklen_t len = sizeof err;
      getsockopt(c.fd, SOL_SOCKET, SO_ERROR, &err, &len);
      if (err != 0) {
        close_conn(id, std::strerror(err));
        return;
      }
      c.connecting = false;
      if (c.peer) {
        backoff.erase(*c.peer);
        log("info", "peer_connected", "peer=" + std::to_string(*c.peer));
      }
    }
    while (!c.out.empty()) {
      const ssize_t n = send(c.fd, c.out.data(), c.out.size(), MSG_NOSIGNAL);
      if (n > 0) {
        c.out.erase(c.out.begin(), c.out.begin() + n);
        continue;
      }
      if (n < 0 && (errno == EAGAIN || errno == EWOULDBLOCK)) break;
      if (n < 0 && errno == EINTR) continue;
      close_conn(id, std::strerror(errno));
      return;
    }
  }

  void accept_all() {
    while (true) {
      sockaddr_in addr{};
      socklen_t len = sizeof addr;
      const int fd = accept(listen_fd, reinterpret_cast<sockaddr*>(&addr), &len);
      if (fd < 0) return;
      set_nonblocking(fd);
      set_nodelay(fd);
      Conn c;
      c.fd = fd;
      char host[INET_ADDRSTRLEN] = {};
      inet_ntop(AF_INET, &addr.sin_addr, host, sizeof host);
      c.label = std::string(host) + ":" + std::to_string(ntohs(addr.sin_port));
      add_conn(std::move(c));
    }
  }

  int poll_timeout_ms() const {
    auto deadline = Clock::now() + milliseconds(50);
    for (const auto& [req, t] : timers) deadline = std::min(deadline, t);
    const auto ms = std::chrono::duration_cast<milliseconds>(deadline - Clock::now()).count();
    return static_cast<int>(std::max<std::int64_t>(ms, 0));
  }

  void fire_timers() {
    const auto now = Clock::now();
    std::vector<RequestId> due;
    for (const auto& [req, t] : timers) {
      if (t <= now) due.push_back(req);
    }
    for (const auto& req : due) {
      timers.erase(req);
      apply(replica.on_timeout(req));
    }
  }

  void loop_once() {
    while (!self_queue.empty()) {
      auto m = std::move(self_queue.front());
      self_queue.pop_front();
      apply(replica.on_message(m));
    }
    fire_timers();

    std::vector<pollfd> fds;
    std::vector<std::uint64_t> ids;
    fds.push_back({listen_fd, POLLIN, 0});
    ids.push_back(0);
    for (const auto& [id, c] : conns) {
      short events = POLLIN;
      if (c.connecting || !c.out.empty()) events |= POLLOUT;
      fds.push_back({c.fd, events, 0});
      ids.push_back(id);
    }
    const int timeout = self_queue.empty() ? poll_timeout_ms() : 0;
    if (poll(fds.data(), fds.size(), timeout) < 0) {
      if (errno == EINTR) return;
      throw ConnectionError(std::string("poll failed: ") + std::strerror(errno));
    }
    if ((fds[0].revents & POLLIN) != 0) accept_all();
    for (std::size_t i = 1; i < fds.size(); ++i) {
      const auto id = ids[i];
      const short rev = fds[i].revents;
      if (rev == 0 || conns.count(id) == 0) continue;
      if ((rev & (POLLOUT | POLLERR | POLLHUP)) != 0 && conns.at(id).connecting) {
        on_writable(id);
        continue;
      }
      if ((rev & (POLLIN | POLLHUP | POLLERR)) != 0) on_readable(id);
      if (conns.count(id) != 0 && (rev & POLLOUT) != 0) on_writable(id);
    }
  }

  ClusterConfig config;
  ProcessId self;
  Replica<CrdtState> replica;
  int listen_fd = -1;
  std::map<std::uint64_t, Conn> conns;
  std::uint64_t next_conn = 1;
  std::map<ProcessId, std::uint64_t> peer_conn;
  std::map<ProcessId, Backoff> backoff;
  std::deque<PeerMessage<CrdtState>> self_queue;
  std::map<RequestId, Clock::time_point> timers;
};

ReplicaServer::ReplicaServer(ClusterConfig config, ProcessId self) {
  config.validate();
  (void)config.endpoint(self);
  impl_ = std::make_unique<Impl>(std::move(config), self);
}

ReplicaServer::~ReplicaServer() {
  if (!impl_) return;
  for (auto& [id, c] : impl_->conns) close(c.fd);
  if (impl_->listen_fd >= 0) close(impl_->listen_fd);
}

void ReplicaServer::bind() { impl_->bind_listener(); }

void ReplicaServer::run() {
  if (impl_->listen_fd < 0) bind();
  while (!stop_.load()) impl_->loop_once();
  impl_->log("info", "stopped");
}

}  // namespace crdtpaxos
