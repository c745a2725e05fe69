#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <sys/socket.h>
#include <sys/time.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <random>

#include "crdtpaxos/causal.hpp"
#include "crdtpaxos/errors.hpp"
#include "crdtpaxos/service.hpp"

namespace crdtpaxos {

Client::Client(Endpoint endpoint, std::chrono::milliseconds timeout)
    : endpoint_(std::move(endpoint)), timeout_(timeout), nonce_(std::random_device{}() | 1ULL << 40) {}

Client::~Client() {
  if (fd_ >= 0) close(fd_);
}

void Client::connect() {
  const std::string where = endpoint_.host + ":" + std::to_string(endpoint_.port);
  addrinfo hints{};
  hints.ai_family = AF_INET;
  hints.ai_socktype = SOCK_STREAM;
  addrinfo* res = nullptr;
  if (int rc = getaddrinfo(endpoint_.host.c_str(), std::to_string(endpoint_.port).c_str(), &hints, &res); rc != 0) {
    throw ConnectionError("cannot resolve " + endpoint_.host + ": " + gai_strerror(rc));
  }
  const int fd = socket(res->ai_family, res->ai_socktype, res->ai_protocol);
  timeval tv{};
  tv.tv_sec = timeout_.count() / 1000;
  tv.tv_usec = (timeout_.count() % 1000) * 1000;
  setsockopt(fd, SOL_SOCKET, SO_RCVTIMEO, &tv, sizeof tv);
  setsockopt(fd, SOL_SOCKET, SO_SNDTIMEO, &tv, sizeof tv);
  int one = 1;
  setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
  const int rc = ::connect(fd, res->ai_addr, res->ai_addrlen);
  freeaddrinfo(res);
  if (rc != 0) {
    const std::string err = std::strerror(errno);
    close(fd);
    throw ConnectionError("cannot connect to " + where + ": " + err);
  }
  fd_ = fd;
}

ClientOutcome Client::call(const Frame& request) {
  if (fd_ < 0) connect();
  auto drop = [&](const std::string& why) {
    close(fd_);
    fd_ = -1;
    return ConnectionError(endpoint_.host + ":" + std::to_string(endpoint_.port) + ": " + why);
  };
  const Bytes out = encode_frame(request);
  std::size_t sent = 0;
  while (sent < out.size()) {
    const ssize_t n = send(fd_, out.data() + sent, out.size() - sent, MSG_NOSIGNAL);
    if (n < 0 && errno == EINTR) continue;
    if (n <= 0) throw drop(std::string("send failed: ") + std::strerror(errno));
    sent += static_cast<std::size_t>(n);
  }

  Bytes in;
  std::uint8_t buf[65536];
  while (true) {
    auto extent = frame_extent(in);
    if (extent && in.size() >= *extent) {
      Frame reply = decode_frame(std::span<const std::uint8_t>(in).first(*extent));
      in.erase(in.begin(), in.begin() + static_cast<std::ptrdiff_t>(*extent));
      if (reply.request != request.request) continue;
      ClientOutcome o;
      if (auto* u = std::get_if<UpdateReply>(&reply.body)) {
        o.tag = u->tag;
        o.stats = u->stats;
      } else if (auto* q = std::get_if<QueryReply>(&reply.body)) {
        o.result = q->result;
        o.learned = q->learned;
        o.stats = q->stats;
      } else if (auto* f = std::get_if<FailedReply>(&reply.body)) {
        o.status = ClientOutcome::Status::Failed;
        o.reason = f->reason;
        o.stats = f->stats;
      } else {
        throw drop(std::string("unexpected ") + wire_tag_name(reply.tag()) + " reply");
      }
      return o;
    }
    const ssize_t n = recv(fd_, buf, sizeof buf, 0);
    if (n > 0) {
      in.insert(in.end(), buf, buf + n);
      continue;
    }
    if (n < 0 && errno == EINTR) continue;
    if (n == 0) throw drop("connection closed by replica");
    if (errno == EAGAIN || errno == EWOULDBLOCK) throw drop("timed out waiting for reply");
    throw drop(std::string("recv failed: ") + std::strerror(errno));
  }
}

ClientOutcome Client::update(const UpdateCommand& cmd) {
  Frame f;
  f.request = {nonce_, ++seq_};
  f.body = ClientUpdate{cmd};
  return call(f);
}

ClientOutcome Client::query(const QueryCommand& cmd) {
  Frame f;
  f.request = {nonce_, ++seq_};
  f.body = ClientQuery{cmd};
  return call(f);
}

// ---- history recording ----

std::uint64_t HistoryRecorder::invoke(std::uint64_t client, ProcessId replica, OpKind kind,
                                      const std::string& command) {
  Operation op;
  op.id = history_.ops.size() + 1;
  op.client = client;
  op.replica = replica;
  op.kind = kind;
  op.command = command;
  op.invoke_seq = ++seq_;
  op.invoke_time = static_cast<std::uint64_t>(
      std::chrono::duration_cast<std::chrono::microseconds>(std::chrono::steady_clock::now() - start_).count());
  history_.ops.push_back(std::move(op));
  return history_.ops.back().id;
}

void HistoryRecorder::respond(std::uint64_t id, const ClientOutcome& outcome) {
  Operation& op = history_.ops.at(id - 1);
  op.response_seq = ++seq_;
  op.response_time = static_cast<std::uint64_t>(
      std::chrono::duration_cast<std::chrono::microseconds>(std::chrono::steady_clock::now() - start_).count());
  op.round_trips = outcome.stats.round_trips;
  op.retries = outcome.stats.retries;
  if (outcome.status == ClientOutcome::Status::Failed) {
    op.failed = true;
    op.result = outcome.reason;
    return;
  }
  if (outcome.tag) {
    op.tag = outcome.tag;
    op.result = "ok";
  }
  if (outcome.result) op.result = render(*outcome.result);
  if (outcome.learned) {
    op.learned_state = render(*outcome.learned);
    op.learned = derived_history(*outcome.learned);
    if (!op.learned) history_.instrumented = false;
  }
}

void HistoryRecorder::fail(std::uint64_t id, const std::string& reason) {
  Operation& op = history_.ops.at(id - 1);
  op.failed = true;
  op.result = reason;
}

}  // namespace crdtpaxos
