#include <charconv>
#include <fstream>
#include <sstream>

#include "crdtpaxos/errors.hpp"
#include "crdtpaxos/service.hpp"

namespace crdtpaxos {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

template <class T>
std::optional<T> parse_number(std::string_view s) {
  T v{};
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) return std::nullopt;
  return v;
}

std::vector<std::string_view> words(std::string_view s) {
  std::vector<std::string_view> out;
  while (true) {
    s = trim(s);
    if (s.empty()) break;
    const auto end = s.find_first_of(" \t");
    out.push_back(s.substr(0, end));
    if (end == std::string_view::npos) break;
    s.remove_prefix(end);
  }
  return out;
}

std::set<ProcessId> parse_quorum(std::string_view text, std::size_t lineno) {
  std::set<ProcessId> q;
  while (!text.empty()) {
    const auto comma = text.find(',');
    auto id = parse_number<ProcessId>(text.substr(0, comma));
    if (!id) throw ConfigError("line " + std::to_string(lineno) + ": bad replica id in quorum");
    q.insert(*id);
    if (comma == std::string_view::npos) break;
    text.remove_prefix(comma + 1);
  }
  return q;
}

}  // namespace

Endpoint parse_endpoint(std::string_view text) {
  const auto colon = text.rfind(':');
  if (colon == std::string_view::npos || colon == 0) throw UsageError("endpoint must be host:port");
  auto port = parse_number<std::uint16_t>(text.substr(colon + 1));
  if (!port || *port == 0) throw UsageError("bad port in endpoint '" + std::string(text) + "'");
  return {std::string(text.substr(0, colon)), *port};
}

ClusterConfig ClusterConfig::parse(std::string_view text) {
  ClusterConfig c;
  std::istringstream in{std::string(text)};
  std::string raw;
  std::size_t lineno = 0;
  auto bad = [&](const std::string& what) { return ConfigError("line " + std::to_string(lineno) + ": " + what); };
  while (std::getline(in, raw)) {
    ++lineno;
    std::string_view line = raw;
    if (auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;

    if (line.starts_with("replica ") || line.starts_with("replica\t")) {
      auto w = words(line);
      if (w.size() != 4) throw bad("expected 'replica <id> <host> <port>'");
      auto id = parse_number<ProcessId>(w[1]);
      auto port = parse_number<std::uint16_t>(w[3]);
      if (!id || *id == 0) throw bad("bad replica id");
      if (!port || *port == 0) throw bad("bad port");
      if (!c.replicas.emplace(*id, Endpoint{std::string(w[2]), *port}).second) throw bad("duplicate replica id");
      continue;
    }

    const auto eq = line.find('=');
    if (eq == std::string_view::npos) throw bad("expected 'key = value'");
    const auto key = trim(line.substr(0, eq));
    const auto value = trim(line.substr(eq + 1));
    if (key == "crdt") {
      if (value == "gcounter") c.crdt = CrdtKind::GCounter;
      else if (value == "gset") c.crdt = CrdtKind::GSet;
      else throw bad("crdt must be gcounter or gset");
    } else if (key == "quorum") {
      c.quorums.clear();
      if (value != "majority") {
        for (auto w : words(value)) c.quorums.push_back(parse_quorum(w, lineno));
        if (c.quorums.empty()) throw bad("empty quorum list");
      }
    } else if (key == "batching") {
      if (value == "on" || value == "true") c.batching = true;
      else if (value == "off" || value == "false") c.batching = false;
      else throw bad("batching must be on or off");
    } else if (key == "timeout_ms") {
      auto v = parse_number<std::uint64_t>(value);
      if (!v || *v == 0) throw bad("timeout_ms must be a positive integer");
      c.timeout_ms = *v;
    } else if (key == "max_retries") {
      auto v = parse_number<std::uint32_t>(value);
      if (!v) throw bad("max_retries must be a non-negative integer");
      c.max_retries = *v;
    } else {
      throw bad("unknown key '" + std::string(key) + "'");
    }
  }
  c.validate();
  return c;
}

ClusterConfig ClusterConfig::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read cluster config " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse(buf.str());
}

void ClusterConfig::validate() const {
  if (replicas.empty()) throw ConfigError("cluster config lists no replicas");
  ProcessId expect = 1;
  for (const auto& [id, ep] : replicas) {
    if (id != expect++) throw ConfigError("replica ids must be dense 1..N");
  }
  std::set<std::pair<std::string, std::uint16_t>> seen;
  for (const auto& [id, ep] : replicas) {
    if (!seen.insert({ep.host, ep.port}).second) {
      throw ConfigError("endpoint " + ep.host + ":" + std::to_string(ep.port) + " listed twice");
    }
  }
  (void)quorum_system();
}

QuorumSystem ClusterConfig::quorum_system() const {
  std::vector<ProcessId> ids;
  for (const auto& [id, ep] : replicas) ids.push_back(id);
  return quorums.empty() ? QuorumSystem::majority(ids) : QuorumSystem::explicit_family(ids, quorums);
}

const Endpoint& ClusterConfig::endpoint(ProcessId id) const {
  auto it = replicas.find(id);
  if (it == replicas.end()) throw UsageError("replica " + std::to_string(id) + " is not in the cluster config");
  return it->second;
}

std::string ClusterConfig::to_text() const {
  std::ostringstream out;
  out << "crdt = " << (crdt == CrdtKind::GCounter ? "gcounter" : "gset") << '\n';
  out << "quorum = ";
  if (quorums.empty()) {
    out << "majority";
  } else {
    for (std::size_t i = 0; i < quorums.size(); ++i) {
      if (i != 0) out << ' ';
      bool first = true;
      for (auto id : quorums[i]) {
        out << (first ? "" : ",") << id;
        first = false;
      }
    }
  }
  out << '\n';
  out << "batching = " << (batching ? "on" : "off") << '\n';
  out << "timeout_ms = " << timeout_ms << '\n';
  out << "max_retries = " << max_retries << '\n';
  for (const auto& [id, ep] : replicas) out << "replica " << id << ' ' << ep.host << ' ' << ep.port << '\n';
  return out.str();
}

}  // namespace crdtpaxos
