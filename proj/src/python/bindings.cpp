#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <json.hpp>

#include "crdtpaxos/checker.hpp"
#include "crdtpaxos/errors.hpp"
#include "crdtpaxos/history.hpp"
#include "crdtpaxos/service.hpp"
#include "crdtpaxos/sim.hpp"
#include "crdtpaxos/wire.hpp"

namespace py = pybind11;
using namespace crdtpaxos;

namespace {

py::object to_python(const QueryResult& r) {
  return std::visit([](const auto& v) -> py::object { return py::cast(v); }, r);
}

py::dict metrics_dict(const Metrics& m) {
  py::dict d;
  d["seed"] = m.seed;
  d["end_time"] = m.end_time;
  d["quiescent"] = m.quiescent;
  d["ops_invoked"] = m.ops_invoked;
  d["ops_completed"] = m.ops_completed;
  d["ops_failed"] = m.ops_failed;
  d["ops_pending"] = m.ops_pending;
  d["updates_completed"] = m.updates_completed;
  d["queries_completed"] = m.queries_completed;
  d["messages_sent"] = m.messages_sent;
  d["messages_delivered"] = m.messages_delivered;
  d["messages_dropped"] = m.messages_dropped;
  d["messages_duplicated"] = m.messages_duplicated;
  d["max_payload_bytes"] = m.max_payload_bytes;
  d["max_update_round_trips"] = m.max_update_round_trips;
  d["max_query_round_trips"] = m.max_query_round_trips;
  d["queries_within_1_rt"] = m.queries_within_1_rt;
  d["queries_within_3_rt"] = m.queries_within_3_rt;
  d["invariant_violations"] = m.invariant_violations;
  return d;
}

py::dict check_history(const std::string& jsonl, const std::string& mode, bool oracle) {
  if (mode != "gla" && mode != "lin" && mode != "both") throw UsageError("mode must be gla, lin or both");
  const History h = history_from_jsonl(jsonl);
  py::dict out;
  bool ok = true;
  auto json_loads = py::module_::import("json").attr("loads");
  if (mode != "lin") {
    py::list gla;
    for (const auto& v : check_gla(h)) {
      gla.append(json_loads(v.to_json()));
      ok = ok && v.pass;
    }
    out["gla"] = gla;
  }
  if (mode != "gla") {
    const auto lin = linearize(h);
    out["linearize"] = json_loads(lin.to_json());
    ok = ok && lin.legal;
    if (oracle) {
      const bool o = linearizability_oracle(h);
      out["oracle"] = o;
      ok = ok && o;
    }
  }
  out["pass"] = ok;
  return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "CRDT replication over generalized lattice agreement";

  auto base = py::register_exception<Error>(m, "Error");
  py::register_exception<ConfigError>(m, "ConfigError", base.ptr());
  py::register_exception<UsageError>(m, "UsageError", base.ptr());
  py::register_exception<UnsupportedInput>(m, "UnsupportedInput", base.ptr());
  py::register_exception<FrameError>(m, "FrameError", base.ptr());
  py::register_exception<ConnectionError>(m, "ConnectionError", base.ptr());

  py::class_<GCounter>(m, "GCounter")
      .def(py::init<std::size_t>(), py::arg("slots"))
      .def(py::init([](const std::vector<std::uint64_t>& v) { return GCounter(v); }), py::arg("counts"))
      .def_property_readonly("counts", [](const GCounter& c) {
        return std::vector<std::uint64_t>(c.counts().begin(), c.counts().end());
      })
      .def("value", [](const GCounter& c) { return std::get<std::uint64_t>(apply_query(QueryCommand::value(), c)); })
      .def("increment", [](const GCounter& c, std::size_t slot) { return apply_update(UpdateCommand::increment(slot), c); })
      .def("merge", [](const GCounter& a, const GCounter& b) { return merge(a, b); })
      .def("__le__", [](const GCounter& a, const GCounter& b) { return compare(a, b); })
      .def("__eq__", [](const GCounter& a, const GCounter& b) { return a == b; })
      .def("to_bytes", [](const GCounter& c) {
        ByteWriter w;
        encode(w, c);
        return py::bytes(reinterpret_cast<const char*>(w.bytes().data()), w.bytes().size());
      })
      .def_static("from_bytes", [](const py::bytes& b) {
        const std::string s = b;
        ByteReader r(std::span(reinterpret_cast<const std::uint8_t*>(s.data()), s.size()));
        auto c = decode_gcounter(r);
        r.expect_done();
        return c;
      })
      .def("__repr__", [](const GCounter& c) { return "GCounter(" + render(CrdtState(c)) + ")"; });

  py::class_<GSet>(m, "GSet")
      .def(py::init<>())
      .def(py::init([](const std::set<std::string>& s) { return GSet(s); }), py::arg("elements"))
      .def_property_readonly("elements", [](const GSet& s) { return s.elements(); })
      .def("add", [](const GSet& s, const std::string& e) { return apply_update(UpdateCommand::add(e), s); })
      .def("__contains__", [](const GSet& s, const std::string& e) {
        return std::get<bool>(apply_query(QueryCommand::contains(e), s));
      })
      .def("merge", [](const GSet& a, const GSet& b) { return merge(a, b); })
      .def("__le__", [](const GSet& a, const GSet& b) { return compare(a, b); })
      .def("__eq__", [](const GSet& a, const GSet& b) { return a == b; })
      .def("to_bytes", [](const GSet& s) {
        ByteWriter w;
        encode(w, s);
        return py::bytes(reinterpret_cast<const char*>(w.bytes().data()), w.bytes().size());
      })
      .def_static("from_bytes", [](const py::bytes& b) {
        const std::string s = b;
        ByteReader r(std::span(reinterpret_cast<const std::uint8_t*>(s.data()), s.size()));
        auto g = decode_gset(r);
        r.expect_done();
        return g;
      })
      .def("__repr__", [](const GSet& s) { return "GSet(" + render(CrdtState(s)) + ")"; });

  m.def(
      "simulate",
      [](const std::string& config_json) {
        const SimResult r = sim_run(sim_config_from_json(config_json));
        py::dict out;
        out["history"] = history_to_jsonl(r.history);
        out["trace"] = r.trace.to_jsonl();
        out["metrics"] = metrics_dict(r.metrics);
        return out;
      },
      py::arg("config_json"), "Run the simulator on a JSON config; returns history, trace and metrics.");

  m.def("default_sim_config", [] { return sim_config_to_json(SimConfig{}); });

  m.def("check", &check_history, py::arg("history_jsonl"), py::arg("mode") = "both", py::arg("oracle") = false,
        "Check a JSONL history; returns the verdicts and an overall pass flag.");

  m.def("frame_round_trip", [](const py::bytes& b) {
    const std::string s = b;
    const Frame f = decode_frame(std::span(reinterpret_cast<const std::uint8_t*>(s.data()), s.size()));
    const Bytes again = encode_frame(f);
    return py::make_tuple(wire_tag_name(f.tag()), py::bytes(reinterpret_cast<const char*>(again.data()), again.size()));
  });

  py::class_<Client>(m, "Client")
      .def(py::init([](const std::string& endpoint, int timeout_ms) {
             return std::make_unique<Client>(parse_endpoint(endpoint), std::chrono::milliseconds(timeout_ms));
           }),
           py::arg("endpoint"), py::arg("timeout_ms") = 5000)
      .def("incr", [](Client& c) { return c.update(UpdateCommand::increment(0)).status == ClientOutcome::Status::Ok; })
      .def("add", [](Client& c, const std::string& e) {
        return c.update(UpdateCommand::add(e)).status == ClientOutcome::Status::Ok;
      })
      .def("get", [](Client& c) -> py::object {
        const auto o = c.query(QueryCommand::value());
        if (o.status != ClientOutcome::Status::Ok) throw Error(o.reason);
        return to_python(*o.result);
      })
      .def("contains", [](Client& c, const std::string& e) -> py::object {
        const auto o = c.query(QueryCommand::contains(e));
        if (o.status != ClientOutcome::Status::Ok) throw Error(o.reason);
        return to_python(*o.result);
      });
}
