#include "crdtpaxos/sim.hpp"

#include <algorithm>
#include <map>
#include <queue>
#include <sstream>
#include <unordered_map>
#include <variant>

#include <json.hpp>

#include "crdtpaxos/causal.hpp"
#include "crdtpaxos/errors.hpp"
#include "crdtpaxos/replica.hpp"

namespace crdtpaxos {

// ---- config ----

void SimConfig::validate() const {
  if (n_replicas == 0) throw ConfigError("n_replicas must be at least 1");
  if (!(update_fraction >= 0.0 && update_fraction <= 1.0)) throw ConfigError("update_fraction must be in [0,1]");
  if (!(drop_probability >= 0.0 && drop_probability < 1.0)) throw ConfigError("drop_probability must be in [0,1)");
  if (!(duplicate_probability >= 0.0 && duplicate_probability <= 1.0)) {
    throw ConfigError("duplicate_probability must be in [0,1]");
  }
  if (delay_min == 0) throw ConfigError("delay_min must be at least 1 tick");
  if (delay_max < delay_min) throw ConfigError("delay_max must be >= delay_min");
  auto known = [&](ProcessId p) { return p >= 1 && p <= n_replicas; };
  std::set<ProcessId> crashed;
  for (const auto& c : crashes) {
    if (!known(c.replica)) throw ConfigError("crash names unknown replica " + std::to_string(c.replica));
    if (c.at > max_virtual_time) throw ConfigError("crash time beyond the horizon");
    crashed.insert(c.replica);
  }
  for (const auto& p : partitions) {
    if (p.start > p.end || p.end > max_virtual_time) throw ConfigError("partition window outside the horizon");
    for (const auto& g : p.groups) {
      for (auto r : g) {
        if (!known(r)) throw ConfigError("partition names unknown replica " + std::to_string(r));
      }
    }
  }
  std::vector<ProcessId> ids(n_replicas);
  for (std::size_t i = 0; i < n_replicas; ++i) ids[i] = i + 1;
  const QuorumSystem q =
      quorums.empty() ? QuorumSystem::majority(ids) : QuorumSystem::explicit_family(ids, quorums);
  if (check_liveness && crashed.size() > n_replicas - q.min_quorum_size()) {
    throw ConfigError("crash schedule leaves no live quorum");
  }
}

std::vector<ClientScript> workload_generate(const SimConfig& config, Rng& rng) {
  std::vector<ClientScript> scripts(config.n_clients);
  for (auto& script : scripts) {
    script.reserve(config.ops_per_client);
    for (std::size_t i = 0; i < config.ops_per_client; ++i) {
      ScriptedOp op;
      const bool allowed = !config.updates_until_op || i < *config.updates_until_op;
      op.update = rng.bernoulli(config.update_fraction) && allowed;
      if (config.update_fraction >= 1.0 && allowed) op.update = true;
      op.replica = rng.uniform(1, config.n_replicas);
      script.push_back(op);
    }
  }
  return scripts;
}

// ---- trace ----

const char* trace_kind_name(TraceKind k) {
  static constexpr const char* kNames[] = {"send", "deliver", "drop", "duplicate",
                                           "timer", "crash", "invoke", "respond"};
  return kNames[static_cast<int>(k)];
}

std::string TraceEvent::to_json() const {
  nlohmann::ordered_json j;
  j["t"] = time;
  j["ev"] = trace_kind_name(kind);
  if (msg != 0) j["msg"] = msg;
  if (from != 0 || kind == TraceKind::Invoke) j["from"] = from;
  if (to != 0) j["to"] = to;
  if (!type.empty()) j["type"] = type;
  if (!request.empty()) j["req"] = request;
  if (!round.empty()) j["round"] = round;
  if (!state.empty()) j["state"] = state;
  if (op != 0) j["op"] = op;
  if (kind == TraceKind::Deliver || kind == TraceKind::Duplicate) j["sent_at"] = sent_at;
  if (!detail.empty()) j["detail"] = detail;
  return j.dump();
}

std::string Trace::to_jsonl() const {
  std::string out;
  for (const auto& e : events) {
    out += e.to_json();
    out += '\n';
  }
  return out;
}

std::string Metrics::csv_header() {
  return "seed,end_time,quiescent,ops_invoked,ops_completed,ops_failed,ops_pending,updates_completed,"
         "queries_completed,messages_sent,messages_delivered,messages_dropped,messages_duplicated,"
         "max_payload_bytes,max_update_round_trips,max_query_round_trips,queries_within_1_rt,"
         "queries_within_3_rt,invariant_violations";
}

std::string Metrics::csv_row() const {
  std::ostringstream out;
  out << seed << ',' << end_time << ',' << (quiescent ? 1 : 0) << ',' << ops_invoked << ',' << ops_completed << ','
      << ops_failed << ',' << ops_pending << ',' << updates_completed << ',' << queries_completed << ','
      << messages_sent << ',' << messages_delivered << ',' << messages_dropped << ',' << messages_duplicated << ','
      << max_payload_bytes << ',' << max_update_round_trips << ',' << max_query_round_trips << ','
      << queries_within_1_rt << ',' << queries_within_3_rt << ',' << invariant_violations.size();
  return out.str();
}

namespace {

using Tagged = CausalTaggedState<CrdtState>;

template <class L>
L initial_payload(const SimConfig& c);
template <>
CrdtState initial_payload<CrdtState>(const SimConfig& c) {
  return CrdtState::initial(c.crdt, c.n_replicas);
}
template <>
Tagged initial_payload<Tagged>(const SimConfig& c) {
  return Tagged{CrdtState::initial(c.crdt, c.n_replicas), {}};
}

std::optional<TagSet> learned_tags(const CrdtState&) { return std::nullopt; }
std::optional<TagSet> learned_tags(const Tagged& s) { return s.history; }

template <class L>
const L* body_state(const PeerBody<L>& body) {
  return std::visit(
      [](const auto& b) -> const L* {
        if constexpr (requires { b.state; }) {
          return &b.state;
        } else {
          return nullptr;
        }
      },
      body);
}

template <class L>
const Round* body_round(const PeerBody<L>& body) {
  return std::visit(
      [](const auto& b) -> const Round* {
        if constexpr (requires { b.round; }) {
          return &b.round;
        } else {
          return nullptr;
        }
      },
      body);
}

template <class L>
class Simulation {
 public:
  explicit Simulation(const SimConfig& config)
      : config_(config),
        net_(Rng::derive(config.seed, "network")),
        client_link_(Rng::derive(config.seed, "client-link")),
        workload_rng_(Rng::derive(config.seed, "workload")) {
    std::vector<ProcessId> ids(config.n_replicas);
    for (std::size_t i = 0; i < ids.size(); ++i) ids[i] = i + 1;
    quorum_ = config.quorums.empty() ? QuorumSystem::majority(ids) : QuorumSystem::explicit_family(ids, config.quorums);
    for (ProcessId id : ids) {
      ProtocolConfig pc;
      pc.self = id;
      pc.quorum = quorum_;
      pc.batching = config.batching;
      pc.timeout = config.effective_timeout();
      pc.max_retries = config.max_retries;
      replicas_.emplace_back(pc, initial_payload<L>(config));
    }
    crashed_.assign(ids.size(), false);
    last_ack_.resize(ids.size());

    auto scripts = workload_generate(config, workload_rng_);
    for (auto& s : scripts) clients_.push_back(ClientState{std::move(s), 0, std::nullopt});
    if (config.warmup_updates > 0) {
      ClientScript warm;
      for (std::size_t i = 0; i < config.warmup_updates; ++i) warm.push_back({true, i % config.n_replicas + 1});
      warmup_client_ = clients_.size();
      clients_.push_back(ClientState{std::move(warm), 0, std::nullopt});
    }
  }

  SimResult run() {
    for (const auto& c : config_.crashes) schedule(c.at, CrashEv{c.replica});
    if (warmup_client_) {
      schedule(0, ClientNext{*warmup_client_});
    } else {
      start_main_clients(0);
    }

    bool horizon = false;
    while (!queue_.empty()) {
      const auto [time, seq] = queue_.top();
      if (time > config_.max_virtual_time) {
        horizon = true;
        break;
      }
      queue_.pop();
      now_ = time;
      auto node = pending_.extract(seq);
      dispatch(std::move(node.mapped()));
    }
    return finish(!horizon);
  }

 private:
  struct NetDeliver {
    std::uint64_t msg;
    std::uint64_t sent_at;
    PeerMessage<L> m;
  };
  struct ClientToReplica {
    std::uint64_t client;
    std::uint64_t op;
    ProcessId replica;
  };
  struct ReplyToClient {
    ClientReply<L> reply;
    ProcessId replica;
    std::uint64_t produced_at;
  };
  struct TimerFire {
    ProcessId replica;
    RequestId request;
    std::uint64_t generation;
  };
  struct CrashEv {
    ProcessId replica;
  };
  struct ClientNext {
    std::uint64_t client;
  };
  struct ClientTimeout {
    std::uint64_t client;
    std::uint64_t op;
  };
  using Event = std::variant<NetDeliver, ClientToReplica, ReplyToClient, TimerFire, CrashEv, ClientNext, ClientTimeout>;

  struct ClientState {
    ClientScript script;
    std::size_t next = 0;
    std::optional<std::uint64_t> current;
  };
  struct OpCommand {
    std::variant<UpdateCommand, QueryCommand> cmd;
  };

  using Slot = std::pair<std::uint64_t, std::uint64_t>;  // (time, seq)

  void schedule(std::uint64_t time, Event ev) {
    const std::uint64_t seq = ++event_seq_;
    pending_.emplace(seq, std::move(ev));
    queue_.push({time, seq});
  }

  std::uint64_t net_delay() { return net_.uniform(config_.delay_min, config_.delay_max); }
  std::uint64_t client_delay() { return client_link_.uniform(config_.delay_min, config_.delay_max); }

  Replica<L>& replica(ProcessId id) { return replicas_[id - 1]; }
  bool crashed(ProcessId id) const { return crashed_[id - 1]; }

  bool partitioned(ProcessId a, ProcessId b, std::uint64_t t) const {
    for (const auto& p : config_.partitions) {
      if (t < p.start || t >= p.end) continue;
      auto group_of = [&](ProcessId x) -> std::ptrdiff_t {
        for (std::size_t g = 0; g < p.groups.size(); ++g) {
          if (std::find(p.groups[g].begin(), p.groups[g].end(), x) != p.groups[g].end()) {
            return static_cast<std::ptrdiff_t>(g);
          }
        }
        return -1;
      };
      const auto ga = group_of(a);
      const auto gb = group_of(b);
      if (ga < 0 || gb < 0 || ga != gb) return true;
    }
    return false;
  }

  void trace(TraceEvent e) {
    if (!config_.record_trace) return;
    e.time = now_;
    trace_.events.push_back(std::move(e));
  }

  TraceEvent net_event(TraceKind kind, std::uint64_t msg, const PeerMessage<L>& m) const {
    TraceEvent e;
    e.kind = kind;
    e.msg = msg;
    e.from = m.from;
    e.to = m.to;
    if (!config_.record_trace) return e;
    e.type = message_name<L>(m.body);
    e.request = to_string(m.request);
    if (const Round* r = body_round(m.body)) e.round = to_string(*r);
    if (const L* s = body_state(m.body)) e.state = render(*s);
    return e;
  }

  void violation(std::string what) { violations_.push_back("t=" + std::to_string(now_) + ": " + std::move(what)); }

  // ---- dispatch ----

  void dispatch(Event ev) {
    std::visit([this](auto&& e) { handle(std::move(e)); }, std::move(ev));
  }

  void handle(NetDeliver&& d) {
    const ProcessId to = d.m.to;
    if (crashed(to)) {
      auto e = net_event(TraceKind::Drop, d.msg, d.m);
      e.detail = "receiver crashed";
      trace(std::move(e));
      ++dropped_;
      return;
    }
    if (d.m.from != to && partitioned(d.m.from, to, now_)) {
      auto e = net_event(TraceKind::Drop, d.msg, d.m);
      e.detail = "partition";
      trace(std::move(e));
      ++dropped_;
      return;
    }
    auto e = net_event(TraceKind::Deliver, d.msg, d.m);
    e.sent_at = d.sent_at;
    trace(std::move(e));
    ++delivered_;
    step(to, [&](Replica<L>& r) { return r.on_message(d.m); });
  }

  void handle(ClientToReplica&& c) {
    if (crashed(c.replica)) {
      TraceEvent e;
      e.kind = TraceKind::Drop;
      e.to = c.replica;
      e.op = c.op;
      e.detail = "client request to crashed replica";
      trace(std::move(e));
      return;
    }
    const RequestId client_request{c.client, c.op};
    const auto& cmd = commands_.at(c.op).cmd;
    if (const auto* u = std::get_if<UpdateCommand>(&cmd)) {
      step(c.replica, [&](Replica<L>& r) { return r.on_client_update(c.client, client_request, *u); });
    } else {
      step(c.replica,
           [&](Replica<L>& r) { return r.on_client_query(c.client, client_request, std::get<QueryCommand>(cmd)); });
    }
  }

  void handle(ReplyToClient&& r) {
    const std::uint64_t op_id = r.reply.client_request.seq;
    Operation& op = ops_.at(op_id - 1);
    if (op.response_seq) return;
    op.response_time = now_;
    op.response_seq = ++event_seq_;
    op.round_trips = r.reply.round_trips;
    op.retries = r.reply.retries;
    op.proposer_done_time = r.produced_at;
    if (auto it = phases_.find({r.replica, r.reply.proposer_request}); it != phases_.end()) op.phases = it->second;
    std::visit(
        [&](const auto& body) {
          using B = std::decay_t<decltype(body)>;
          if constexpr (std::is_same_v<B, RequestFailed>) {
            op.failed = true;
            op.result = body.reason;
          } else if constexpr (std::is_same_v<B, UpdateDone>) {
            op.result = "ok";
          } else {
            op.result = render(body.result);
            op.learned = learned_tags(body.learned);
            op.learned_state = render(plain_value(body.learned));
          }
        },
        r.reply.body);

    TraceEvent e;
    e.kind = TraceKind::Respond;
    e.from = r.replica;
    e.op = op_id;
    e.type = op.kind == OpKind::Update ? "update" : "query";
    e.detail = op.failed ? "failed: " + *op.result : *op.result;
    trace(std::move(e));

    ClientState& client = clients_.at(op.client);
    if (client.current == op_id) {
      client.current.reset();
      issue(op.client);
    }
  }

  void handle(TimerFire&& t) {
    auto it = timers_.find({t.replica, t.request});
    if (it == timers_.end() || it->second != t.generation) return;
    timers_.erase(it);
    if (crashed(t.replica)) return;
    TraceEvent e;
    e.kind = TraceKind::Timer;
    e.from = t.replica;
    e.request = to_string(t.request);
    trace(std::move(e));
    step(t.replica, [&](Replica<L>& r) { return r.on_timeout(t.request); });
  }

  void handle(CrashEv&& c) {
    if (crashed(c.replica)) return;
    crashed_[c.replica - 1] = true;
    TraceEvent e;
    e.kind = TraceKind::Crash;
    e.from = c.replica;
    trace(std::move(e));
  }

  void handle(ClientNext&& c) { issue(c.client); }

  void handle(ClientTimeout&& t) {
    ClientState& client = clients_.at(t.client);
    if (client.current != t.op) return;
    TraceEvent e;
    e.kind = TraceKind::Drop;
    e.op = t.op;
    e.detail = "client gave up waiting";
    trace(std::move(e));
    client.current.reset();
    issue(t.client);
  }

  // ---- clients ----

  void start_main_clients(std::uint64_t at) {
    for (std::size_t c = 0; c < config_.n_clients; ++c) schedule(at, ClientNext{c});
  }

  void issue(std::uint64_t client_id) {
    ClientState& client = clients_.at(client_id);
    if (client.current) return;
    if (client.next >= client.script.size()) {
      if (warmup_client_ && client_id == *warmup_client_) start_main_clients(now_ + config_.settle_time);
      return;
    }
    const ScriptedOp& scripted = client.script[client.next++];
    Operation op;
    op.id = ops_.size() + 1;
    op.client = client_id;
    op.replica = scripted.replica;
    op.invoke_time = now_;
    op.invoke_seq = ++event_seq_;
    OpCommand cmd;
    if (scripted.update) {
      op.kind = OpKind::Update;
      const CausalTag tag{client_id + 1, client.next};
      op.tag = tag;
      if (config_.crdt == CrdtKind::GCounter) {
        cmd.cmd = UpdateCommand::increment(0, tag);
      } else {
        cmd.cmd = UpdateCommand::add("c" + std::to_string(client_id) + "-" + std::to_string(client.next), tag);
      }
      op.command = render(std::get<UpdateCommand>(cmd.cmd));
    } else {
      op.kind = OpKind::Query;
      cmd.cmd = config_.crdt == CrdtKind::GCounter ? QueryCommand::value() : QueryCommand::elements();
      op.command = render(std::get<QueryCommand>(cmd.cmd));
    }
    TraceEvent e;
    e.kind = TraceKind::Invoke;
    e.from = client_id;
    e.to = scripted.replica;
    e.op = op.id;
    e.type = op.kind == OpKind::Update ? "update" : "query";
    e.detail = op.command;
    trace(std::move(e));

    client.current = op.id;
    commands_.emplace(op.id, std::move(cmd));
    const std::uint64_t id = op.id;
    ops_.push_back(std::move(op));
    schedule(now_ + client_delay(), ClientToReplica{client_id, id, scripted.replica});
    schedule(now_ + config_.effective_client_timeout(), ClientTimeout{client_id, id});
  }

  // ---- replicas ----

  template <class F>
  void step(ProcessId id, F&& handler) {
    std::optional<AcceptorState<L>> before;
    if (config_.check_invariants) before = replica(id).acceptor().state();
    Effects<L> fx = handler(replica(id));
    if (before) check_step(id, *before, fx);
    apply(id, std::move(fx));
  }

  void check_step(ProcessId id, const AcceptorState<L>& before, const Effects<L>& fx) {
    const auto& after = replica(id).acceptor().state();
    if (!compare(before.state, after.state)) violation("acceptor " + std::to_string(id) + " payload decreased");
    if (after.round.nr < before.round.nr) violation("acceptor " + std::to_string(id) + " round number decreased");

    std::set<std::pair<std::int64_t, RoundId>> votes_now;
    for (const auto& m : fx.messages) {
      if (const auto* v = std::get_if<Vote<L>>(&m.body)) votes_now.insert({v->round.nr, v->round.id});
      if (const auto* a = std::get_if<Ack<L>>(&m.body)) {
        auto& last = last_ack_[m.from - 1];
        if (last && !compare(*last, a->state)) violation("acks of acceptor " + std::to_string(m.from) + " not monotone");
        last = a->state;
      }
    }
    for (const auto& key : votes_now) {
      if (!votes_sent_.insert({id, key.first, key.second}).second) {
        violation("proposer " + std::to_string(id) + " voted twice in one round");
      }
    }
    for (const auto& r : fx.replies) {
      const auto* done = std::get_if<QueryDone<L>>(&r.body);
      if (done == nullptr) continue;
      std::set<ProcessId> dominating;
      for (const auto& rep : replicas_) {
        if (compare(done->learned, rep.acceptor().payload())) dominating.insert(rep.id());
      }
      if (!quorum_.is_quorum(dominating)) violation("learned state not dominated by a quorum");
    }
  }

  void apply(ProcessId id, Effects<L>&& fx) {
    for (const auto& p : fx.phases) phases_[{id, p.request}].push_back({p.kind, now_});
    for (const auto& c : fx.cancel) timers_.erase({id, c});
    for (const auto& a : fx.arm) {
      const std::uint64_t gen = ++timer_gen_;
      timers_[{id, a.request}] = gen;
      schedule(now_ + a.delay, TimerFire{id, a.request, gen});
    }
    for (auto& m : fx.messages) send(std::move(m));
    for (auto& r : fx.replies) schedule(now_ + client_delay(), ReplyToClient{std::move(r), id, now_});
  }

  void send(PeerMessage<L> m) {
    const std::uint64_t msg = ++msg_seq_;
    ++sent_;
    if (const L* s = body_state(m.body)) max_payload_ = std::max(max_payload_, payload_size(*s));
    trace(net_event(TraceKind::Send, msg, m));
    if (m.to == m.from) {
      schedule(now_ + net_delay(), NetDeliver{msg, now_, std::move(m)});
      return;
    }
    if (partitioned(m.from, m.to, now_)) {
      auto e = net_event(TraceKind::Drop, msg, m);
      e.detail = "partition";
      trace(std::move(e));
      ++dropped_;
      return;
    }
    if (net_.bernoulli(config_.drop_probability)) {
      auto e = net_event(TraceKind::Drop, msg, m);
      e.detail = "loss";
      trace(std::move(e));
      ++dropped_;
      return;
    }
    const std::uint64_t delay = net_delay();
    if (net_.bernoulli(config_.duplicate_probability)) {
      auto e = net_event(TraceKind::Duplicate, msg, m);
      e.sent_at = now_;
      trace(std::move(e));
      ++duplicated_;
      schedule(now_ + net_delay(), NetDeliver{msg, now_, m});
    }
    schedule(now_ + delay, NetDeliver{msg, now_, std::move(m)});
  }

  SimResult finish(bool quiescent) {
    SimResult out;
    out.trace = std::move(trace_);
    out.history.instrumented = config_.instrumented;
    out.history.ops = std::move(ops_);
    Metrics& m = out.metrics;
    m.seed = config_.seed;
    m.end_time = now_;
    m.quiescent = quiescent;
    m.messages_sent = sent_;
    m.messages_delivered = delivered_;
    m.messages_dropped = dropped_;
    m.messages_duplicated = duplicated_;
    m.max_payload_bytes = max_payload_;
    m.invariant_violations = std::move(violations_);
    for (const auto& op : out.history.ops) {
      ++m.ops_invoked;
      if (!op.response_seq) {
        ++m.ops_pending;
        continue;
      }
      if (op.failed) {
        ++m.ops_failed;
        continue;
      }
      ++m.ops_completed;
      if (op.kind == OpKind::Update) {
        ++m.updates_completed;
        m.max_update_round_trips = std::max<std::size_t>(m.max_update_round_trips, op.round_trips);
      } else {
        ++m.queries_completed;
        m.max_query_round_trips = std::max<std::size_t>(m.max_query_round_trips, op.round_trips);
        if (op.round_trips <= 1) ++m.queries_within_1_rt;
        if (op.round_trips <= 3) ++m.queries_within_3_rt;
      }
    }
    return out;
  }

  SimConfig config_;
  Rng net_;
  Rng client_link_;
  Rng workload_rng_;
  QuorumSystem quorum_;
  std::vector<Replica<L>> replicas_;
  std::vector<bool> crashed_;
  std::vector<ClientState> clients_;
  std::optional<std::size_t> warmup_client_;

  std::priority_queue<Slot, std::vector<Slot>, std::greater<>> queue_;
  std::unordered_map<std::uint64_t, Event> pending_;
  std::uint64_t now_ = 0;
  std::uint64_t event_seq_ = 0;
  std::uint64_t msg_seq_ = 0;
  std::uint64_t timer_gen_ = 0;
  std::map<std::pair<ProcessId, RequestId>, std::uint64_t> timers_;
  std::map<std::pair<ProcessId, RequestId>, std::vector<PhaseRecord>> phases_;

  std::vector<Operation> ops_;
  std::unordered_map<std::uint64_t, OpCommand> commands_;
  Trace trace_;

  std::size_t sent_ = 0;
  std::size_t delivered_ = 0;
  std::size_t dropped_ = 0;
  std::size_t duplicated_ = 0;
  std::size_t max_payload_ = 0;
  std::vector<std::string> violations_;
  std::vector<std::optional<L>> last_ack_;
  std::set<std::tuple<ProcessId, std::int64_t, RoundId>> votes_sent_;
};

}  // namespace

SimResult sim_run(const SimConfig& config) {
  config.validate();
  if (config.instrumented) return Simulation<Tagged>(config).run();
  return Simulation<CrdtState>(config).run();
}

// ---- JSON config ----

SimConfig sim_config_from_json(const std::string& text) {
  using nlohmann::json;
  SimConfig c;
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("sim config is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) throw ConfigError("sim config must be a JSON object");
  try {
    for (const auto& [key, v] : j.items()) {
      if (key == "n_replicas") c.n_replicas = v.get<std::size_t>();
      else if (key == "n_clients") c.n_clients = v.get<std::size_t>();
      else if (key == "quorums") c.quorums = v.get<std::vector<std::set<ProcessId>>>();
      else if (key == "update_fraction") c.update_fraction = v.get<double>();
      else if (key == "ops_per_client") c.ops_per_client = v.get<std::size_t>();
      else if (key == "updates_until_op") c.updates_until_op = v.get<std::size_t>();
      else if (key == "warmup_updates") c.warmup_updates = v.get<std::size_t>();
      else if (key == "settle_time") c.settle_time = v.get<std::uint64_t>();
      else if (key == "drop_probability") c.drop_probability = v.get<double>();
      else if (key == "duplicate_probability") c.duplicate_probability = v.get<double>();
      else if (key == "delay_min") c.delay_min = v.get<std::uint64_t>();
      else if (key == "delay_max") c.delay_max = v.get<std::uint64_t>();
      else if (key == "crashes") {
        for (const auto& x : v) c.crashes.push_back({x.at("replica").get<ProcessId>(), x.at("at").get<std::uint64_t>()});
      } else if (key == "partitions") {
        for (const auto& x : v) {
          c.partitions.push_back({x.at("groups").get<std::vector<std::vector<ProcessId>>>(),
                                  x.at("start").get<std::uint64_t>(), x.at("end").get<std::uint64_t>()});
        }
      } else if (key == "batching") c.batching = v.get<bool>();
      else if (key == "seed") c.seed = v.get<std::uint64_t>();
      else if (key == "max_virtual_time") c.max_virtual_time = v.get<std::uint64_t>();
      else if (key == "crdt") {
        const auto name = v.get<std::string>();
        if (name == "gcounter") c.crdt = CrdtKind::GCounter;
        else if (name == "gset") c.crdt = CrdtKind::GSet;
        else throw ConfigError("unknown crdt '" + name + "'");
      } else if (key == "instrumented") c.instrumented = v.get<bool>();
      else if (key == "record_trace") c.record_trace = v.get<bool>();
      else if (key == "check_invariants") c.check_invariants = v.get<bool>();
      else if (key == "check_liveness") c.check_liveness = v.get<bool>();
      else if (key == "timeout") c.timeout = v.get<std::uint64_t>();
      else if (key == "max_retries") c.max_retries = v.get<std::uint32_t>();
      else if (key == "client_timeout") c.client_timeout = v.get<std::uint64_t>();
      else throw ConfigError("unknown sim config key '" + key + "'");
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("bad sim config value: ") + e.what());
  }
  return c;
}

std::string sim_config_to_json(const SimConfig& c) {
  nlohmann::ordered_json j;
  j["n_replicas"] = c.n_replicas;
  j["n_clients"] = c.n_clients;
  if (!c.quorums.empty()) j["quorums"] = c.quorums;
  j["update_fraction"] = c.update_fraction;
  j["ops_per_client"] = c.ops_per_client;
  if (c.updates_until_op) j["updates_until_op"] = *c.updates_until_op;
  j["warmup_updates"] = c.warmup_updates;
  j["settle_time"] = c.settle_time;
  j["drop_probability"] = c.drop_probability;
  j["duplicate_probability"] = c.duplicate_probability;
  j["delay_min"] = c.delay_min;
  j["delay_max"] = c.delay_max;
  j["crashes"] = nlohmann::ordered_json::array();
  for (const auto& x : c.crashes) j["crashes"].push_back({{"replica", x.replica}, {"at", x.at}});
  j["partitions"] = nlohmann::ordered_json::array();
  for (const auto& p : c.partitions) j["partitions"].push_back({{"groups", p.groups}, {"start", p.start}, {"end", p.end}});
  j["batching"] = c.batching;
  j["seed"] = c.seed;
  j["max_virtual_time"] = c.max_virtual_time;
  j["crdt"] = c.crdt == CrdtKind::GCounter ? "gcounter" : "gset";
  j["instrumented"] = c.instrumented;
  j["record_trace"] = c.record_trace;
  j["check_invariants"] = c.check_invariants;
  j["check_liveness"] = c.check_liveness;
  j["timeout"] = c.timeout;
  j["max_retries"] = c.max_retries;
  j["client_timeout"] = c.client_timeout;
  return j.dump(2);
}

}  // namespace crdtpaxos
