// crdtpaxos: replica daemon, client, simulator, checker and benchmark.
//
// Exit codes: 0 ok, 1 check failed, 2 usage or config error, 3 connection error.

#include <csignal>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "bench.hpp"
#include "crdtpaxos/checker.hpp"
#include "crdtpaxos/errors.hpp"
#include "crdtpaxos/service.hpp"
#include "crdtpaxos/sim.hpp"

namespace fs = std::filesystem;
using namespace crdtpaxos;

namespace {

constexpr int kOk = 0;
constexpr int kCheckFailed = 1;
constexpr int kUsage = 2;
constexpr int kConnection = 3;

ReplicaServer* g_server = nullptr;

void on_signal(int) {
  if (g_server != nullptr) g_server->stop();
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_file(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write " + path.string());
  out << content;
}

std::pair<std::uint64_t, std::uint64_t> parse_seed_range(const std::string& s) {
  const auto dots = s.find("..");
  try {
    if (dots == std::string::npos) {
      const auto v = std::stoull(s);
      return {v, v};
    }
    const auto a = std::stoull(s.substr(0, dots));
    const auto b = std::stoull(s.substr(dots + 2));
    if (b < a) throw UsageError("seed range " + s + " is empty");
    return {a, b};
  } catch (const std::logic_error&) {
    throw UsageError("bad seed range '" + s + "', expected a..b");
  }
}

CrashSpec parse_crash(const std::string& s) {
  const auto at = s.find('@');
  try {
    if (at == std::string::npos) return {std::stoull(s), 0};
    return {std::stoull(s.substr(0, at)), std::stoull(s.substr(at + 1))};
  } catch (const std::logic_error&) {
    throw UsageError("bad crash spec '" + s + "', expected replica@time");
  }
}

struct SimFlags {
  std::string config;
  std::size_t replicas = 3;
  std::size_t clients = 1;
  std::size_t ops = 10;
  double update_fraction = 0.5;
  double drop = 0;
  double dup = 0;
  std::uint64_t delay_min = 1;
  std::uint64_t delay_max = 10;
  std::vector<std::string> crashes;
  bool batching = false;
  std::string crdt = "gcounter";
  std::size_t warmup = 0;
  std::uint64_t settle = 0;
  std::uint64_t horizon = 1'000'000;
  bool uninstrumented = false;
};

void add_sim_flags(CLI::App* app, SimFlags& f) {
  app->add_option("--config", f.config, "JSON simulator config; flags below override nothing when given");
  app->add_option("--replicas", f.replicas, "number of replicas")->check(CLI::PositiveNumber);
  app->add_option("--clients", f.clients, "closed-loop clients");
  app->add_option("--ops", f.ops, "operations per client");
  app->add_option("--update-fraction", f.update_fraction, "probability an op is an update")->check(CLI::Range(0.0, 1.0));
  app->add_option("--drop", f.drop, "message drop probability")->check(CLI::Range(0.0, 1.0));
  app->add_option("--dup", f.dup, "message duplication probability")->check(CLI::Range(0.0, 1.0));
  app->add_option("--delay-min", f.delay_min, "minimum message delay (ticks)");
  app->add_option("--delay-max", f.delay_max, "maximum message delay (ticks)");
  app->add_option("--crash", f.crashes, "crash a replica: id@time (repeatable)");
  app->add_flag("--batching", f.batching, "enable proposer batching");
  app->add_option("--crdt", f.crdt, "gcounter | gset")->check(CLI::IsMember({"gcounter", "gset"}));
  app->add_option("--warmup", f.warmup, "sequential updates issued before the workload");
  app->add_option("--settle", f.settle, "ticks between warmup and workload");
  app->add_option("--horizon", f.horizon, "virtual time limit");
  app->add_flag("--uninstrumented", f.uninstrumented, "drop causal histories (faster, not checkable)");
}

SimConfig sim_config_from(const SimFlags& f) {
  if (!f.config.empty()) return sim_config_from_json(read_file(f.config));
  SimConfig c;
  c.n_replicas = f.replicas;
  c.n_clients = f.clients;
  c.ops_per_client = f.ops;
  c.update_fraction = f.update_fraction;
  c.drop_probability = f.drop;
  c.duplicate_probability = f.dup;
  c.delay_min = f.delay_min;
  c.delay_max = f.delay_max;
  for (const auto& s : f.crashes) c.crashes.push_back(parse_crash(s));
  c.batching = f.batching;
  c.crdt = f.crdt == "gset" ? CrdtKind::GSet : CrdtKind::GCounter;
  c.warmup_updates = f.warmup;
  c.settle_time = f.settle;
  c.max_virtual_time = f.horizon;
  c.instrumented = !f.uninstrumented;
  return c;
}

// Verdict JSON for one history; returns whether every requested check passed.
bool check_history(const History& h, const std::string& mode, bool oracle, nlohmann::ordered_json& out) {
  bool ok = true;
  if (mode == "gla" || mode == "both") {
    out["gla"] = nlohmann::ordered_json::array();
    for (const auto& v : check_gla(h)) {
      out["gla"].push_back(nlohmann::ordered_json::parse(v.to_json()));
      ok = ok && v.pass;
    }
  }
  if (mode == "lin" || mode == "both") {
    const auto lin = linearize(h);
    out["linearize"] = nlohmann::ordered_json::parse(lin.to_json());
    ok = ok && lin.legal;
    if (oracle) {
      const bool o = linearizability_oracle(h);
      out["oracle"] = o;
      ok = ok && o;
    }
  }
  out["pass"] = ok;
  return ok;
}

int cmd_replica(const std::string& config_path, ProcessId id) {
  ClusterConfig cfg = ClusterConfig::load(config_path);
  if (cfg.replicas.count(id) == 0) throw UsageError("replica id " + std::to_string(id) + " is not in " + config_path);
  ReplicaServer server(std::move(cfg), id);
  server.bind();
  g_server = &server;
  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);
  server.run();
  g_server = nullptr;
  return kOk;
}

int cmd_client(const std::string& endpoint, const std::string& op, const std::string& arg, int timeout_ms) {
  Client client(parse_endpoint(endpoint), std::chrono::milliseconds(timeout_ms));
  ClientOutcome o;
  if (op == "incr") {
    o = client.update(UpdateCommand::increment(0));
  } else if (op == "get") {
    o = client.query(QueryCommand::value());
  } else if (op == "add") {
    if (arg.empty()) throw UsageError("add needs an element");
    o = client.update(UpdateCommand::add(arg));
  } else if (op == "contains") {
    if (arg.empty()) throw UsageError("contains needs an element");
    o = client.query(QueryCommand::contains(arg));
  } else if (op == "elements") {
    o = client.query(QueryCommand::elements());
  } else {
    throw UsageError("unknown client op '" + op + "'");
  }
  if (o.status == ClientOutcome::Status::Failed) {
    std::cerr << "request failed: " << o.reason << '\n';
    return kCheckFailed;
  }
  if (o.result) {
    std::cout << render(*o.result) << '\n';
  } else {
    std::cout << "ok\n";
  }
  return kOk;
}

int cmd_sim(const SimFlags& flags, const std::string& seed_arg, const std::string& seeds_arg, const std::string& out_dir,
            bool check) {
  SimConfig base = sim_config_from(flags);
  const bool sweep = !seeds_arg.empty();
  auto [lo, hi] = parse_seed_range(sweep ? seeds_arg : (seed_arg.empty() ? std::to_string(base.seed) : seed_arg));
  if (!sweep && lo != hi) throw UsageError("--seed takes a single value; use --seeds a..b for sweeps");
  if (check && !base.instrumented) throw UsageError("--check needs an instrumented run");
  fs::create_directories(out_dir);

  std::ostringstream metrics;
  metrics << Metrics::csv_header() << '\n';
  bool all_ok = true;
  for (std::uint64_t seed = lo; seed <= hi; ++seed) {
    SimConfig c = base;
    c.seed = seed;
    if (sweep) c.record_trace = false;
    const SimResult r = sim_run(c);
    metrics << r.metrics.csv_row() << '\n';
    if (!sweep) {
      write_file(fs::path(out_dir) / "trace.jsonl", r.trace.to_jsonl());
      write_file(fs::path(out_dir) / "history.jsonl", history_to_jsonl(r.history));
    }
    bool ok = r.metrics.invariant_violations.empty();
    for (const auto& v : r.metrics.invariant_violations) std::cerr << "seed " << seed << ": invariant: " << v << '\n';
    if (check) {
      nlohmann::ordered_json verdict;
      if (!check_history(r.history, "both", false, verdict)) {
        ok = false;
        std::cerr << "seed " << seed << ": " << verdict.dump() << '\n';
      }
    }
    all_ok = all_ok && ok;
  }
  write_file(fs::path(out_dir) / "metrics.csv", metrics.str());
  std::cout << "runs=" << (hi - lo + 1) << " out=" << out_dir << (all_ok ? " ok" : " FAILED") << '\n';
  return all_ok ? kOk : kCheckFailed;
}

int cmd_check(const std::string& path, const std::string& mode, bool oracle) {
  const History h = read_history(path);
  nlohmann::ordered_json out;
  out["history"] = path;
  out["ops"] = h.ops.size();
  const bool ok = check_history(h, mode, oracle, out);
  std::cout << out.dump(2) << '\n';
  return ok ? kOk : kCheckFailed;
}

struct BenchFlags {
  std::size_t clients = 4;
  double mix = 0.1;
  std::string batching = "off";
  double duration = 5;
  bool sim = false;
  std::string config;
  std::size_t ops = 160;
  std::size_t warmup = 0;
  std::uint64_t seed = 1;
  std::string out;
};

int cmd_bench(const BenchFlags& f) {
  std::vector<bench::Row> rows;
  if (f.sim) {
    SimConfig c;
    c.n_replicas = 3;
    c.n_clients = f.clients;
    c.update_fraction = f.mix;
    c.batching = f.batching == "on";
    c.ops_per_client = f.ops;
    c.seed = f.seed;
    c.warmup_updates = f.warmup;
    c.settle_time = f.warmup > 0 ? 100 : 0;
    c.instrumented = false;
    c.record_trace = false;
    c.check_invariants = false;
    rows = bench::rows_from_history(sim_run(c).history);
  } else {
    if (f.config.empty()) throw UsageError("bench needs --sim or --config <cluster config>");
    bench::ClusterBench b;
    b.cluster = ClusterConfig::load(f.config);
    b.clients = f.clients;
    b.update_fraction = f.mix;
    b.duration_s = f.duration;
    b.seed = f.seed;
    rows = bench::run_cluster(b);
  }
  if (f.out.empty()) {
    bench::write_csv(std::cout, rows);
  } else {
    std::ofstream out(f.out);
    if (!out) throw ConfigError("cannot write " + f.out);
    bench::write_csv(out, rows);
    bench::write_report(std::cerr, bench::summarize(rows));
  }
  return kOk;
}

int cmd_summary(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read " + path);
  bench::write_report(std::cout, bench::summarize(bench::read_csv(in)));
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Leaderless linearizable replication of state-based CRDTs"};
  app.require_subcommand(1);

  auto* replica = app.add_subcommand("replica", "run a replica daemon");
  std::string replica_config;
  ProcessId replica_id = 0;
  replica->add_option("--config", replica_config, "cluster config file")->required();
  replica->add_option("--id", replica_id, "replica id")->required();

  auto* client = app.add_subcommand("client", "issue one client operation");
  std::string endpoint;
  std::string op;
  std::string elem;
  int timeout_ms = 5000;
  client->add_option("--endpoint", endpoint, "replica host:port")->required();
  client->add_option("--timeout-ms", timeout_ms, "reply timeout");
  client->add_option("op", op, "incr | get | add | contains | elements")->required();
  client->add_option("element", elem, "set element for add/contains");

  auto* sim = app.add_subcommand("sim", "run the deterministic simulator");
  SimFlags sim_flags;
  std::string seed;
  std::string seeds;
  std::string out_dir = "sim-out";
  bool sim_check = false;
  add_sim_flags(sim, sim_flags);
  sim->add_option("--seed", seed, "seed for a single run");
  sim->add_option("--seeds", seeds, "sweep over seeds a..b (metrics only)");
  sim->add_option("--out", out_dir, "output directory");
  sim->add_flag("--check", sim_check, "run the GLA and linearizability checks on every history");

  auto* check = app.add_subcommand("check", "check a recorded history");
  std::string history_path;
  std::string mode = "both";
  bool oracle = false;
  check->add_option("history", history_path, "history.jsonl")->required();
  check->add_option("--mode", mode, "gla | lin | both")->check(CLI::IsMember({"gla", "lin", "both"}));
  check->add_flag("--oracle", oracle, "also run the exhaustive oracle (small histories)");

  auto* bench_cmd = app.add_subcommand("bench", "closed-loop benchmark, CSV output");
  BenchFlags bf;
  bench_cmd->add_option("--clients", bf.clients, "concurrent closed-loop clients");
  bench_cmd->add_option("--mix", bf.mix, "update fraction")->check(CLI::Range(0.0, 1.0));
  bench_cmd->add_option("--batching", bf.batching, "on | off")->check(CLI::IsMember({"on", "off"}));
  bench_cmd->add_option("--duration", bf.duration, "seconds (cluster mode)");
  bench_cmd->add_flag("--sim", bf.sim, "run against the simulator");
  bench_cmd->add_option("--config", bf.config, "cluster config (cluster mode)");
  bench_cmd->add_option("--ops", bf.ops, "ops per client (sim mode)");
  bench_cmd->add_option("--warmup", bf.warmup, "updates before the measured workload (sim mode)");
  bench_cmd->add_option("--seed", bf.seed, "workload seed");
  bench_cmd->add_option("--out", bf.out, "CSV file (default stdout)");

  auto* summary = app.add_subcommand("summary", "summarize a bench CSV");
  std::string csv_path;
  summary->add_option("csv", csv_path, "bench CSV")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsage;
  }

  try {
    if (replica->parsed()) return cmd_replica(replica_config, replica_id);
    if (client->parsed()) return cmd_client(endpoint, op, elem, timeout_ms);
    if (sim->parsed()) return cmd_sim(sim_flags, seed, seeds, out_dir, sim_check);
    if (check->parsed()) return cmd_check(history_path, mode, oracle);
    if (bench_cmd->parsed()) return cmd_bench(bf);
    if (summary->parsed()) return cmd_summary(csv_path);
  } catch (const ConnectionError& e) {
    std::cerr << "connection error: " << e.what() << '\n';
    return kConnection;
  } catch (const UnsupportedInput& e) {
    std::cerr << "unsupported input: " << e.what() << '\n';
    return kUsage;
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return kUsage;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kUsage;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsage;
  }
  return kUsage;
}
