#include "crdtpaxos/history.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <sstream>

#include <json.hpp>

#include "crdtpaxos/errors.hpp"

namespace crdtpaxos {

namespace {

using nlohmann::json;

constexpr const char* kFormat = "crdtpaxos-history";
constexpr int kVersion = 1;

std::optional<PhaseKind> phase_from_name(const std::string& s) {
  for (auto k : {PhaseKind::Merge, PhaseKind::IncrementalPrepare, PhaseKind::FixedPrepare, PhaseKind::Vote}) {
    if (s == phase_name(k)) return k;
  }
  return std::nullopt;
}

json tags_to_json(const TagSet& tags) {
  json out = json::array();
  for (const auto& t : tags) out.push_back({t.origin, t.seq});
  return out;
}

TagSet tags_from_json(const json& j) {
  std::vector<CausalTag> tags;
  for (const auto& t : j) tags.push_back({t.at(0).get<std::uint64_t>(), t.at(1).get<std::uint64_t>()});
  return TagSet(std::move(tags));
}

}  // namespace

std::string history_to_jsonl(const History& h) {
  struct Line {
    std::uint64_t seq;
    json body;
  };
  std::vector<Line> lines;
  for (const auto& op : h.ops) {
    json inv = {{"event", "invoke"},
                {"op", op.id},
                {"client", op.client},
                {"replica", op.replica},
                {"kind", op.kind == OpKind::Update ? "update" : "query"},
                {"command", op.command},
                {"time", op.invoke_time},
                {"seq", op.invoke_seq}};
    if (op.tag) inv["tag"] = {op.tag->origin, op.tag->seq};
    lines.push_back({op.invoke_seq, std::move(inv)});
    if (!op.response_seq) continue;

    json resp = {{"event", "respond"},
                 {"op", op.id},
                 {"time", op.response_time.value_or(0)},
                 {"seq", *op.response_seq},
                 {"outcome", op.failed ? "failed" : "ok"},
                 {"round_trips", op.round_trips},
                 {"retries", op.retries}};
    if (op.result) resp["result"] = *op.result;
    if (op.learned) resp["learned"] = tags_to_json(*op.learned);
    if (op.learned_state) resp["state"] = *op.learned_state;
    if (!op.phases.empty()) {
      json phases = json::array();
      for (const auto& p : op.phases) phases.push_back({phase_name(p.kind), p.time});
      resp["phases"] = std::move(phases);
    }
    if (op.proposer_done_time) resp["proposer_done"] = *op.proposer_done_time;
    lines.push_back({*op.response_seq, std::move(resp)});
  }
  std::stable_sort(lines.begin(), lines.end(), [](const Line& a, const Line& b) { return a.seq < b.seq; });

  std::string out = json{{"format", kFormat}, {"version", kVersion}, {"instrumented", h.instrumented}}.dump();
  out += '\n';
  for (const auto& l : lines) {
    out += l.body.dump();
    out += '\n';
  }
  return out;
}

History history_from_jsonl(std::string_view text) {
  History h;
  std::map<std::uint64_t, std::size_t> index;
  std::istringstream in{std::string(text)};
  std::string line;
  bool header_seen = false;
  std::size_t lineno = 0;
  try {
    while (std::getline(in, line)) {
      ++lineno;
      if (line.empty()) continue;
      const json j = json::parse(line);
      if (!header_seen) {
        if (j.value("format", "") != kFormat) throw UnsupportedInput("not a crdtpaxos history file");
        if (j.value("version", 0) != kVersion) throw UnsupportedInput("unsupported history version");
        h.instrumented = j.value("instrumented", false);
        header_seen = true;
        continue;
      }
      const std::string event = j.at("event").get<std::string>();
      const auto id = j.at("op").get<std::uint64_t>();
      if (event == "invoke") {
        if (index.count(id) != 0) throw UnsupportedInput("duplicate op id " + std::to_string(id));
        Operation op;
        op.id = id;
        op.client = j.at("client").get<std::uint64_t>();
        op.replica = j.at("replica").get<std::uint64_t>();
        op.kind = j.at("kind").get<std::string>() == "update" ? OpKind::Update : OpKind::Query;
        op.command = j.value("command", "");
        op.invoke_time = j.at("time").get<std::uint64_t>();
        op.invoke_seq = j.at("seq").get<std::uint64_t>();
        if (j.contains("tag")) op.tag = CausalTag{j["tag"].at(0).get<std::uint64_t>(), j["tag"].at(1).get<std::uint64_t>()};
        index[id] = h.ops.size();
        h.ops.push_back(std::move(op));
      } else if (event == "respond") {
        auto it = index.find(id);
        if (it == index.end()) throw UnsupportedInput("response before invoke for op " + std::to_string(id));
        Operation& op = h.ops[it->second];
        op.response_time = j.at("time").get<std::uint64_t>();
        op.response_seq = j.at("seq").get<std::uint64_t>();
        op.failed = j.value("outcome", "ok") != "ok";
        op.round_trips = j.value("round_trips", 0U);
        op.retries = j.value("retries", 0U);
        if (j.contains("result")) op.result = j["result"].get<std::string>();
        if (j.contains("learned")) op.learned = tags_from_json(j["learned"]);
        if (j.contains("state")) op.learned_state = j["state"].get<std::string>();
        if (j.contains("phases")) {
          for (const auto& p : j["phases"]) {
            auto kind = phase_from_name(p.at(0).get<std::string>());
            if (!kind) throw UnsupportedInput("unknown phase name");
            op.phases.push_back({*kind, p.at(1).get<std::uint64_t>()});
          }
        }
        if (j.contains("proposer_done")) op.proposer_done_time = j["proposer_done"].get<std::uint64_t>();
      } else {
        throw UnsupportedInput("unknown history event '" + event + "'");
      }
    }
  } catch (const json::exception& e) {
    throw UnsupportedInput("history line " + std::to_string(lineno) + ": " + e.what());
  }
  if (!header_seen) throw UnsupportedInput("empty history file");
  return h;
}

void write_history(const History& h, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write " + path);
  out << history_to_jsonl(h);
}

History read_history(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return history_from_jsonl(buf.str());
}

}  // namespace crdtpaxos
