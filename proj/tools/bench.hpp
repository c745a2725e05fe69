#pragma once

// Benchmark CSV, schema "kind,latency,round_trips,outcome":
//   query,14,1,ok
//   update,9,1,ok
//   summary,<p50 latency>,<p95 latency>,<histogram>
// The histogram is "query:1=900;query:2=12;update:1=100". Latency is in
// virtual ticks for --sim runs and microseconds against a live cluster.

#include <cstdint>
#include <istream>
#include <map>
#include <ostream>
#include <string>
#include <vector>

#include "crdtpaxos/service.hpp"
#include "crdtpaxos/sim.hpp"

namespace crdtpaxos::bench {

struct Row {
  std::string kind;  // "query" | "update"
  std::uint64_t latency = 0;
  std::uint32_t round_trips = 0;
  std::string outcome;  // "ok" | "failed" | "pending" | "error"
};

struct Summary {
  std::size_t ops = 0;
  std::size_t ok = 0;
  std::size_t queries = 0;
  std::size_t updates = 0;
  std::uint64_t p50 = 0;
  std::uint64_t p95 = 0;
  std::map<std::pair<std::string, std::uint32_t>, std::size_t> histogram;  // (kind, rt) -> ok ops
  double queries_within_1_rt = 0;
  double queries_within_3_rt = 0;
  double updates_within_1_rt = 0;
};

Summary summarize(const std::vector<Row>& rows);
void write_csv(std::ostream& out, const std::vector<Row>& rows);
std::vector<Row> read_csv(std::istream& in);  // ConfigError on a malformed file
void write_report(std::ostream& out, const Summary& s);

std::vector<Row> rows_from_history(const History& h);

struct ClusterBench {
  ClusterConfig cluster;
  std::size_t clients = 4;
  double update_fraction = 0.1;
  double duration_s = 5;
  std::uint64_t seed = 1;
};
// Throws ConnectionError when a replica cannot be reached at start.
std::vector<Row> run_cluster(const ClusterBench& b);

}  // namespace crdtpaxos::bench
