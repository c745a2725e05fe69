#include "crdtpaxos/sim.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <json.hpp>
#include <map>
#include <sstream>

#include "crdtpaxos/checker.hpp"
#include "crdtpaxos/errors.hpp"

using namespace crdtpaxos;

namespace {

SimConfig base(std::uint64_t seed = 1) {
  SimConfig c;
  c.n_replicas = 3;
  c.n_clients = 3;
  c.ops_per_client = 20;
  c.update_fraction = 0.5;
  c.seed = seed;
  return c;
}

void expect_gla(const History& h) {
  for (const auto& v : check_gla(h)) EXPECT_TRUE(v.pass) << v.to_json();
}

}  // namespace

TEST(Sim, SameSeedSameTrace) {
  auto c = base(42);
  c.drop_probability = 0.1;
  c.duplicate_probability = 0.2;
  const auto a = sim_run(c);
  const auto b = sim_run(c);
  EXPECT_EQ(a.trace.to_jsonl(), b.trace.to_jsonl());
  EXPECT_EQ(history_to_jsonl(a.history), history_to_jsonl(b.history));
  EXPECT_EQ(a.metrics.csv_row(), b.metrics.csv_row());
  c.seed = 43;
  EXPECT_NE(sim_run(c).trace.to_jsonl(), a.trace.to_jsonl());
}

TEST(Sim, UpdateTakesTwoMessageDelays) {
  SimConfig c;
  c.n_replicas = 3;
  c.n_clients = 1;
  c.ops_per_client = 1;
  c.update_fraction = 1.0;
  c.delay_min = c.delay_max = 7;
  const auto r = sim_run(c);
  ASSERT_EQ(r.history.ops.size(), 1U);
  const auto& op = r.history.ops[0];
  ASSERT_TRUE(op.completed());
  EXPECT_EQ(op.kind, OpKind::Update);
  EXPECT_EQ(op.round_trips, 1U);
  ASSERT_EQ(op.phases.size(), 1U);
  EXPECT_EQ(*op.proposer_done_time - op.phases[0].time, 2 * 7U);
  // client link adds one delay each way
  EXPECT_EQ(*op.response_time - op.invoke_time, 4 * 7U);
}

TEST(Sim, OneCrashOfThreeStaysAvailable) {
  auto c = base(5);
  c.crashes = {{2, 0}};
  const auto r = sim_run(c);
  EXPECT_TRUE(r.metrics.invariant_violations.empty());
  expect_gla(r.history);
  // clients aimed at the crashed replica time out; everything else completes
  for (const auto& op : r.history.ops) {
    if (op.replica == 2) {
      EXPECT_FALSE(op.response_seq.has_value());
    } else {
      EXPECT_TRUE(op.completed()) << "op " << op.id;
    }
  }
  EXPECT_GT(r.metrics.queries_completed, 0U);
}

TEST(Sim, TwoCrashesOfThreeStallQueries) {
  auto c = base(6);
  c.crashes = {{2, 0}, {3, 0}};
  c.update_fraction = 0.0;
  c.max_retries = 5;
  const auto r = sim_run(c);
  EXPECT_TRUE(r.metrics.invariant_violations.empty());
  EXPECT_EQ(r.metrics.queries_completed, 0U);
  EXPECT_GT(r.metrics.ops_pending + r.metrics.ops_failed, 0U);
  expect_gla(r.history);
}

TEST(Sim, HealedPartitionCompletesStalledRequests) {
  auto c = base(7);
  c.partitions = {{{{1}, {2}, {3}}, 0, 400}};
  const auto r = sim_run(c);
  EXPECT_TRUE(r.metrics.invariant_violations.empty());
  EXPECT_EQ(r.metrics.ops_completed, r.metrics.ops_invoked);
  bool retried = false;
  for (const auto& op : r.history.ops) retried = retried || op.retries > 0;
  EXPECT_TRUE(retried);
  // nothing can complete before the heal
  for (const auto& op : r.history.ops) EXPECT_GE(*op.proposer_done_time, 400U);
  expect_gla(r.history);
}

TEST(Sim, MajoritySideOfPartitionKeepsServing) {
  auto c = base(8);
  c.partitions = {{{{1, 2}, {3}}, 0, 100000}};
  c.client_timeout = 2000;
  const auto r = sim_run(c);
  for (const auto& op : r.history.ops) {
    if (op.replica != 3) {
      EXPECT_TRUE(op.completed());
    }
  }
  expect_gla(r.history);
}

TEST(Sim, LossyRunsKeepInvariants) {
  for (std::uint64_t seed = 1; seed <= 40; ++seed) {
    auto c = base(seed);
    c.n_replicas = seed % 2 ? 3 : 5;
    c.drop_probability = 0.2;
    c.duplicate_probability = 0.3;
    c.batching = seed % 3 == 0;
    const auto r = sim_run(c);
    EXPECT_TRUE(r.metrics.invariant_violations.empty()) << "seed " << seed << ": " << r.metrics.invariant_violations[0];
    EXPECT_EQ(r.metrics.ops_completed, r.metrics.ops_invoked) << "seed " << seed;
    expect_gla(r.history);
  }
}

TEST(Sim, GSetRuns) {
  auto c = base(9);
  c.crdt = CrdtKind::GSet;
  c.drop_probability = 0.05;
  const auto r = sim_run(c);
  EXPECT_TRUE(r.metrics.invariant_violations.empty());
  EXPECT_EQ(r.metrics.ops_completed, r.metrics.ops_invoked);
  expect_gla(r.history);
}

TEST(Sim, UninstrumentedRunMatchesInstrumentedSchedule) {
  auto c = base(10);
  c.drop_probability = 0.1;
  auto plain = c;
  plain.instrumented = false;
  const auto a = sim_run(c);
  const auto b = sim_run(plain);
  EXPECT_EQ(a.metrics.csv_row(), b.metrics.csv_row());
  EXPECT_FALSE(b.history.instrumented);
  EXPECT_THROW(check_validity(b.history), UnsupportedInput);
}

TEST(Sim, WarmupThenQueriesOnly) {
  auto c = base(11);
  c.update_fraction = 0.0;
  c.warmup_updates = 6;
  c.settle_time = 200;
  const auto r = sim_run(c);
  std::size_t updates = 0;
  for (const auto& op : r.history.ops) {
    if (op.kind == OpKind::Update) {
      ++updates;
      continue;
    }
    ASSERT_TRUE(op.completed());
    EXPECT_EQ(op.round_trips, 1U);
    EXPECT_EQ(*op.result, "6");
  }
  EXPECT_EQ(updates, 6U);
}

TEST(Sim, Workload) {
  SimConfig c;
  c.n_clients = 10;
  c.ops_per_client = 1000;
  c.n_replicas = 5;
  for (double f : {0.0, 1.0}) {
    c.update_fraction = f;
    Rng rng(1);
    for (const auto& s : workload_generate(c, rng)) {
      for (const auto& op : s) EXPECT_EQ(op.update, f == 1.0);
    }
  }
  c.update_fraction = 0.1;
  Rng rng(77);
  std::size_t updates = 0, total = 0;
  std::map<ProcessId, std::size_t> per_replica;
  for (const auto& s : workload_generate(c, rng)) {
    for (const auto& op : s) {
      updates += op.update ? 1 : 0;
      ++total;
      ++per_replica[op.replica];
    }
  }
  EXPECT_EQ(total, 10000U);
  const double share = static_cast<double>(updates) / static_cast<double>(total);
  EXPECT_NEAR(share, 0.1, 0.02);
  EXPECT_EQ(per_replica.size(), 5U);
  EXPECT_EQ(per_replica.begin()->first, 1U);
  EXPECT_EQ(per_replica.rbegin()->first, 5U);

  c.updates_until_op = 3;
  c.update_fraction = 1.0;
  Rng rng2(3);
  for (const auto& s : workload_generate(c, rng2)) {
    for (std::size_t i = 0; i < s.size(); ++i) EXPECT_EQ(s[i].update, i < 3);
  }
}

TEST(Sim, ConfigErrors) {
  auto bad = [](auto mutate) {
    auto c = base();
    mutate(c);
    return c;
  };
  EXPECT_THROW(sim_run(bad([](SimConfig& c) { c.drop_probability = 1.0; })), ConfigError);
  EXPECT_THROW(sim_run(bad([](SimConfig& c) { c.update_fraction = 1.5; })), ConfigError);
  EXPECT_THROW(sim_run(bad([](SimConfig& c) { c.duplicate_probability = -0.1; })), ConfigError);
  EXPECT_THROW(sim_run(bad([](SimConfig& c) { c.delay_min = 0; })), ConfigError);
  EXPECT_THROW(sim_run(bad([](SimConfig& c) { c.delay_max = 0; })), ConfigError);
  EXPECT_THROW(sim_run(bad([](SimConfig& c) { c.n_replicas = 0; })), ConfigError);
  EXPECT_THROW(sim_run(bad([](SimConfig& c) { c.crashes = {{9, 0}}; })), ConfigError);
  EXPECT_THROW(sim_run(bad([](SimConfig& c) { c.partitions = {{{{1}, {7}}, 0, 10}}; })), ConfigError);
  EXPECT_THROW(sim_run(bad([](SimConfig& c) { c.quorums = {{1}, {2}}; })), ConfigError);
  EXPECT_THROW(sim_run(bad([](SimConfig& c) {
                 c.crashes = {{1, 0}, {2, 0}};
                 c.check_liveness = true;
               })),
               ConfigError);
  auto ok = base();
  ok.crashes = {{1, 0}};
  ok.check_liveness = true;
  EXPECT_NO_THROW(ok.validate());
}

TEST(Sim, ConfigJson) {
  auto c = base(99);
  c.crashes = {{2, 30}};
  c.partitions = {{{{1, 2}, {3}}, 5, 50}};
  c.crdt = CrdtKind::GSet;
  c.batching = true;
  const std::string text = sim_config_to_json(c);
  EXPECT_EQ(sim_config_to_json(sim_config_from_json(text)), text);
  EXPECT_EQ(sim_config_from_json(R"({"n_replicas":5,"seed":3})").n_replicas, 5U);
  EXPECT_THROW(sim_config_from_json(R"({"replicas":5})"), ConfigError);
  EXPECT_THROW(sim_config_from_json("[1,2]"), ConfigError);
  EXPECT_THROW(sim_config_from_json("{"), ConfigError);
  EXPECT_THROW(sim_config_from_json(R"({"crdt":"orset"})"), ConfigError);
  EXPECT_THROW(sim_config_from_json(R"({"n_replicas":"three"})"), ConfigError);
}

TEST(Sim, MetricsCsv) {
  const auto r = sim_run(base());
  const auto header = Metrics::csv_header();
  const auto row = r.metrics.csv_row();
  EXPECT_EQ(std::count(header.begin(), header.end(), ','), std::count(row.begin(), row.end(), ','));
  EXPECT_TRUE(r.metrics.quiescent);
}

// ---- trace properties ----

namespace {

using nlohmann::json;

std::vector<json> parse_trace(const Trace& t) {
  std::vector<json> out;
  std::istringstream in(t.to_jsonl());
  std::string line;
  while (std::getline(in, line)) out.push_back(json::parse(line));
  return out;
}

}  // namespace

TEST(Trace, Properties) {
  for (std::uint64_t seed = 1; seed <= 15; ++seed) {
    auto c = base(seed);
    c.drop_probability = 0.15;
    c.duplicate_probability = 0.3;
    c.crashes = {{1 + seed % 3, 40 + seed * 7}};
    const auto r = sim_run(c);
    const auto events = parse_trace(r.trace);
    ASSERT_EQ(events.size(), r.trace.events.size());

    std::uint64_t last = 0;
    std::map<std::uint64_t, std::uint64_t> sent_at;
    std::map<std::uint64_t, int> deliveries;
    std::map<std::uint64_t, bool> duplicated;
    std::map<std::uint64_t, std::uint64_t> crashed_at;
    for (const auto& e : events) {
      const auto t = e.at("t").get<std::uint64_t>();
      ASSERT_GE(t, last);
      last = t;
      const auto ev = e.at("ev").get<std::string>();
      if (ev == "crash") crashed_at[e.at("from").get<std::uint64_t>()] = t;
      if (ev == "send") {
        const auto msg = e.at("msg").get<std::uint64_t>();
        ASSERT_EQ(sent_at.count(msg), 0U);
        sent_at[msg] = t;
        ASSERT_EQ(crashed_at.count(e.at("from").get<std::uint64_t>()), 0U) << "send from crashed replica";
      }
      if (ev == "duplicate") duplicated[e.at("msg").get<std::uint64_t>()] = true;
      if (ev == "deliver") {
        const auto msg = e.at("msg").get<std::uint64_t>();
        ASSERT_EQ(sent_at.count(msg), 1U) << "delivery of a message never sent";
        ASSERT_EQ(e.at("sent_at").get<std::uint64_t>(), sent_at[msg]);
        ASSERT_GT(t, sent_at[msg]);
        ++deliveries[msg];
        ASSERT_LE(deliveries[msg], duplicated[msg] ? 2 : 1);
        ASSERT_EQ(crashed_at.count(e.at("to").get<std::uint64_t>()), 0U) << "delivery to crashed replica";
      }
    }
    EXPECT_FALSE(crashed_at.empty());
  }
}

TEST(Trace, CanBeDisabled) {
  auto c = base();
  c.record_trace = false;
  const auto r = sim_run(c);
  EXPECT_TRUE(r.trace.events.empty());
  EXPECT_EQ(r.metrics.csv_row(), sim_run(base()).metrics.csv_row());
}
