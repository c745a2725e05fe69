#include "bench.hpp"

#include <algorithm>
#include <atomic>
#include <iomanip>
#include <mutex>
#include <random>
#include <sstream>
#include <thread>

#include "crdtpaxos/errors.hpp"

namespace crdtpaxos::bench {

namespace {

std::uint64_t percentile(std::vector<std::uint64_t> v, double p) {
  if (v.empty()) return 0;
  std::sort(v.begin(), v.end());
  const auto rank = static_cast<std::size_t>(p * static_cast<double>(v.size() - 1) + 0.5);
  return v[std::min(rank, v.size() - 1)];
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream in(s);
  while (std::getline(in, cur, sep)) out.push_back(cur);
  if (!s.empty() && s.back() == sep) out.emplace_back();
  return out;
}

}  // namespace

Summary summarize(const std::vector<Row>& rows) {
  Summary s;
  std::vector<std::uint64_t> lat;
  std::size_t q1 = 0, q3 = 0, u1 = 0, qok = 0, uok = 0;
  for (const auto& r : rows) {
    ++s.ops;
    (r.kind == "query" ? s.queries : s.updates)++;
    if (r.outcome != "ok") continue;
    ++s.ok;
    lat.push_back(r.latency);
    ++s.histogram[{r.kind, r.round_trips}];
    if (r.kind == "query") {
      ++qok;
      if (r.round_trips <= 1) ++q1;
      if (r.round_trips <= 3) ++q3;
    } else {
      ++uok;
      if (r.round_trips <= 1) ++u1;
    }
  }
  s.p50 = percentile(lat, 0.50);
  s.p95 = percentile(lat, 0.95);
  if (qok != 0) {
    s.queries_within_1_rt = static_cast<double>(q1) / static_cast<double>(qok);
    s.queries_within_3_rt = static_cast<double>(q3) / static_cast<double>(qok);
  }
  if (uok != 0) s.updates_within_1_rt = static_cast<double>(u1) / static_cast<double>(uok);
  return s;
}

void write_csv(std::ostream& out, const std::vector<Row>& rows) {
  out << "kind,latency,round_trips,outcome\n";
  for (const auto& r : rows) out << r.kind << ',' << r.latency << ',' << r.round_trips << ',' << r.outcome << '\n';
  const Summary s = summarize(rows);
  out << "summary," << s.p50 << ',' << s.p95 << ',';
  bool first = true;
  for (const auto& [key, n] : s.histogram) {
    out << (first ? "" : ";") << key.first << ':' << key.second << '=' << n;
    first = false;
  }
  out << '\n';
}

std::vector<Row> read_csv(std::istream& in) {
  std::vector<Row> rows;
  std::string line;
  std::size_t lineno = 0;
  if (!std::getline(in, line) || line != "kind,latency,round_trips,outcome") {
    throw ConfigError("not a bench CSV (bad header)");
  }
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    auto f = split(line, ',');
    if (f.size() != 4) throw ConfigError("bench CSV line " + std::to_string(lineno + 1) + ": expected 4 columns");
    if (f[0] == "summary") continue;
    if (f[0] != "query" && f[0] != "update") throw ConfigError("bench CSV: unknown op kind '" + f[0] + "'");
    try {
      rows.push_back({f[0], std::stoull(f[1]), static_cast<std::uint32_t>(std::stoul(f[2])), f[3]});
    } catch (const std::exception&) {
      throw ConfigError("bench CSV line " + std::to_string(lineno + 1) + ": bad number");
    }
  }
  return rows;
}

void write_report(std::ostream& out, const Summary& s) {
  out << "ops=" << s.ops << '\n'
      << "ok=" << s.ok << '\n'
      << "queries=" << s.queries << '\n'
      << "updates=" << s.updates << '\n'
      << "p50_latency=" << s.p50 << '\n'
      << "p95_latency=" << s.p95 << '\n'
      << std::fixed << std::setprecision(4) << "queries_within_1_rt=" << s.queries_within_1_rt << '\n'
      << "queries_within_3_rt=" << s.queries_within_3_rt << '\n'
      << "updates_within_1_rt=" << s.updates_within_1_rt << '\n';
  for (const auto& [key, n] : s.histogram) out << "rt_" << key.first << '_' << key.second << '=' << n << '\n';
}

std::vector<Row> rows_from_history(const History& h) {
  std::vector<Row> rows;
  rows.reserve(h.ops.size());
  for (const auto& op : h.ops) {
    Row r;
    r.kind = op.kind == OpKind::Query ? "query" : "update";
    r.round_trips = op.round_trips;
    if (!op.response_time) {
      r.outcome = "pending";
    } else {
      r.latency = *op.response_time - op.invoke_time;
      r.outcome = op.failed ? "failed" : "ok";
    }
    rows.push_back(std::move(r));
  }
  return rows;
}

std::vector<Row> run_cluster(const ClusterBench& b) {
  const std::size_t n = b.cluster.replicas.size();
  // Fail fast if some replica is down before the clock starts.
  for (const auto& [id, ep] : b.cluster.replicas) {
    Client probe(ep);
    probe.query(b.cluster.crdt == CrdtKind::GCounter ? QueryCommand::value() : QueryCommand::elements());
  }

  std::mutex mu;
  std::vector<Row> rows;
  const auto deadline = std::chrono::steady_clock::now() + std::chrono::duration<double>(b.duration_s);
  std::vector<std::thread> threads;
  for (std::size_t c = 0; c < b.clients; ++c) {
    threads.emplace_back([&, c] {
      std::mt19937_64 rng(b.seed * 1000003 + c);
      std::bernoulli_distribution is_update(b.update_fraction);
      const ProcessId target = c % n + 1;
      Client client(b.cluster.endpoint(target));
      std::vector<Row> mine;
      std::uint64_t seq = 0;
      while (std::chrono::steady_clock::now() < deadline) {
        const bool update = is_update(rng);
        Row r;
        r.kind = update ? "update" : "query";
        const auto t0 = std::chrono::steady_clock::now();
        try {
          ClientOutcome o;
          if (update) {
            o = b.cluster.crdt == CrdtKind::GCounter
                    ? client.update(UpdateCommand::increment(0))
                    : client.update(UpdateCommand::add("b" + std::to_string(c) + "-" + std::to_string(++seq)));
          } else {
            o = client.query(b.cluster.crdt == CrdtKind::GCounter ? QueryCommand::value() : QueryCommand::elements());
          }
          r.round_trips = o.stats.round_trips;
          r.outcome = o.status == ClientOutcome::Status::Ok ? "ok" : "failed";
        } catch (const ConnectionError&) {
          r.outcome = "error";
        }
        r.latency = static_cast<std::uint64_t>(
            std::chrono::duration_cast<std::chrono::microseconds>(std::chrono::steady_clock::now() - t0).count());
        mine.push_back(std::move(r));
      }
      std::lock_guard lock(mu);
      rows.insert(rows.end(), mine.begin(), mine.end());
    });
  }
  for (auto& t : threads) t.join();
  return rows;
}

}  // namespace crdtpaxos::bench
