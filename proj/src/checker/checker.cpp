#include "crdtpaxos/checker.hpp"

#include <algorithm>
#include <limits>
#include <map>
#include <set>
#include <sstream>

#include <json.hpp>

#include "crdtpaxos/errors.hpp"

namespace crdtpaxos {

const char* condition_name(Condition c) {
  static constexpr const char* kNames[] = {"validity", "stability", "consistency", "update_stability",
                                           "update_visibility"};
  return kNames[static_cast<int>(c)];
}

std::string Verdict::to_json() const {
  nlohmann::ordered_json j;
  j["condition"] = condition_name(condition);
  j["pass"] = pass;
  if (!pass) {
    j["witness"] = witness;
    j["detail"] = detail;
  }
  return j.dump();
}

std::string Linearization::to_json() const {
  nlohmann::ordered_json j;
  j["legal"] = legal;
  if (witness) j["order"] = witness->order;
  if (refused) j["refused"] = nlohmann::ordered_json::parse(refused->to_json());
  if (!detail.empty()) j["detail"] = detail;
  return j.dump();
}

namespace {

constexpr std::uint64_t kNever = std::numeric_limits<std::uint64_t>::max();

struct View {
  std::vector<const Operation*> updates;
  std::vector<const Operation*> queries;  // completed, with learned tags
  std::map<CausalTag, const Operation*> by_tag;
};

std::string tag_str(const CausalTag& t) { return to_string(t); }

std::string op_str(const Operation& op) { return "op " + std::to_string(op.id); }

std::uint64_t end_seq(const Operation& op) { return op.completed() ? *op.response_seq : kNever; }

bool inv_before(const Operation* a, const Operation* b) {
  if (a->invoke_seq != b->invoke_seq) return a->invoke_seq < b->invoke_seq;
  if (a->client != b->client) return a->client < b->client;
  return a->id < b->id;
}

View build_view(const History& h) {
  if (!h.instrumented) throw UnsupportedInput("history is not instrumented with causal tags");
  View v;
  for (const auto& op : h.ops) {
    if (op.kind == OpKind::Update) {
      if (!op.tag) throw UnsupportedInput(op_str(op) + " is an update without a causal tag");
      if (!v.by_tag.emplace(*op.tag, &op).second) throw UnsupportedInput("duplicate update tag " + tag_str(*op.tag));
      v.updates.push_back(&op);
    } else if (op.completed()) {
      if (!op.learned) throw UnsupportedInput(op_str(op) + " is a completed query without learned tags");
      v.queries.push_back(&op);
    }
  }
  return v;
}

Verdict pass(Condition c) { return Verdict{c, true, {}, {}}; }

Verdict fail(Condition c, std::vector<std::uint64_t> witness, std::string detail) {
  return Verdict{c, false, std::move(witness), std::move(detail)};
}

Verdict validity(const View& v) {
  for (const auto* q : v.queries) {
    for (const auto& t : *q->learned) {
      auto it = v.by_tag.find(t);
      if (it == v.by_tag.end()) {
        return fail(Condition::Validity, {q->id}, op_str(*q) + " learned " + tag_str(t) + ", which no update carries");
      }
      const Operation* u = it->second;
      if (u->invoke_seq >= *q->response_seq) {
        return fail(Condition::Validity, {u->id, q->id},
                    op_str(*q) + " learned " + tag_str(t) + " of " + op_str(*u) + " before it was invoked");
      }
    }
  }
  return pass(Condition::Validity);
}

Verdict stability(const View& v) {
  std::vector<const Operation*> by_response = v.queries;
  std::sort(by_response.begin(), by_response.end(),
            [](const Operation* a, const Operation* b) { return *a->response_seq < *b->response_seq; });
  std::vector<const Operation*> by_invoke = v.queries;
  std::sort(by_invoke.begin(), by_invoke.end(), inv_before);

  // Union of everything learned by queries that responded before q2 was invoked.
  std::set<CausalTag> prefix;
  std::size_t next = 0;
  for (const auto* q2 : by_invoke) {
    while (next < by_response.size() && *by_response[next]->response_seq < q2->invoke_seq) {
      prefix.insert(by_response[next]->learned->begin(), by_response[next]->learned->end());
      ++next;
    }
    const bool covered =
        std::all_of(prefix.begin(), prefix.end(), [&](const CausalTag& t) { return q2->learned->contains(t); });
    if (covered) continue;
    for (std::size_t i = 0; i < next; ++i) {
      const auto* q1 = by_response[i];
      if (!q1->learned->subset_of(*q2->learned)) {
        return fail(Condition::Stability, {q1->id, q2->id},
                    op_str(*q1) + " precedes " + op_str(*q2) + " but its learned state is not included");
      }
    }
  }
  return pass(Condition::Stability);
}

Verdict consistency(const View& v) {
  std::vector<const Operation*> qs = v.queries;
  std::stable_sort(qs.begin(), qs.end(),
                   [](const Operation* a, const Operation* b) { return a->learned->size() < b->learned->size(); });
  for (std::size_t i = 1; i < qs.size(); ++i) {
    if (!qs[i - 1]->learned->subset_of(*qs[i]->learned)) {
      return fail(Condition::Consistency, {qs[i - 1]->id, qs[i]->id},
                  op_str(*qs[i - 1]) + " and " + op_str(*qs[i]) + " learned incomparable states");
    }
  }
  return pass(Condition::Consistency);
}

Verdict update_stability(const View& v) {
  std::vector<const Operation*> done;
  for (const auto* u : v.updates) {
    if (u->completed()) done.push_back(u);
  }
  std::sort(done.begin(), done.end(),
            [](const Operation* a, const Operation* b) { return *a->response_seq < *b->response_seq; });
  for (const auto* q : v.queries) {
    // Latest-invoked update included in q; every update preceding it must be included too.
    const Operation* last = nullptr;
    for (const auto& t : *q->learned) {
      auto it = v.by_tag.find(t);
      if (it == v.by_tag.end()) continue;
      if (last == nullptr || it->second->invoke_seq > last->invoke_seq) last = it->second;
    }
    if (last == nullptr) continue;
    for (const auto* u1 : done) {
      if (*u1->response_seq >= last->invoke_seq) break;
      if (!q->learned->contains(*u1->tag)) {
        return fail(Condition::UpdateStability, {u1->id, last->id, q->id},
                    op_str(*u1) + " precedes " + op_str(*last) + " but " + op_str(*q) + " includes only the latter");
      }
    }
  }
  return pass(Condition::UpdateStability);
}

Verdict update_visibility(const View& v) {
  std::vector<const Operation*> done;
  for (const auto* u : v.updates) {
    if (u->completed()) done.push_back(u);
  }
  std::sort(done.begin(), done.end(),
            [](const Operation* a, const Operation* b) { return *a->response_seq < *b->response_seq; });
  for (const auto* q : v.queries) {
    for (const auto* u : done) {
      if (*u->response_seq >= q->invoke_seq) break;
      if (!q->learned->contains(*u->tag)) {
        return fail(Condition::UpdateVisibility, {u->id, q->id},
                    op_str(*u) + " precedes " + op_str(*q) + " but is missing from its learned state");
      }
    }
  }
  return pass(Condition::UpdateVisibility);
}

std::vector<Verdict> all_checks(const View& v) {
  return {validity(v), stability(v), consistency(v), update_stability(v), update_visibility(v)};
}

}  // namespace

Verdict check_validity(const History& h) { return validity(build_view(h)); }
Verdict check_stability(const History& h) { return stability(build_view(h)); }
Verdict check_consistency(const History& h) { return consistency(build_view(h)); }
Verdict check_update_stability(const History& h) { return update_stability(build_view(h)); }
Verdict check_update_visibility(const History& h) { return update_visibility(build_view(h)); }
std::vector<Verdict> check_gla(const History& h) { return all_checks(build_view(h)); }

History restrict_history(const History& h, const std::vector<std::uint64_t>& ids) {
  const std::set<std::uint64_t> keep(ids.begin(), ids.end());
  History out;
  out.instrumented = h.instrumented;
  for (const auto& op : h.ops) {
    if (keep.count(op.id) != 0) out.ops.push_back(op);
  }
  return out;
}

Linearization linearize(const History& h) {
  const View v = build_view(h);
  Linearization out;
  for (auto& verdict : all_checks(v)) {
    if (!verdict.pass) {
      out.detail = std::string("refused: ") + condition_name(verdict.condition) + " check fails";
      out.refused = std::move(verdict);
      return out;
    }
  }

  // Queries form a chain under inclusion; equal states are ordered by invocation.
  std::vector<const Operation*> qs = v.queries;
  std::sort(qs.begin(), qs.end(), [](const Operation* a, const Operation* b) {
    if (a->learned->size() != b->learned->size()) return a->learned->size() < b->learned->size();
    return inv_before(a, b);
  });

  // Each update goes right before the first query that includes it; the rest
  // trail after the last query. Within a group, invocation order decides.
  std::vector<std::vector<const Operation*>> groups(qs.size() + 1);
  std::set<CausalTag> placed;
  for (std::size_t i = 0; i < qs.size(); ++i) {
    for (const auto& t : *qs[i]->learned) {
      if (placed.insert(t).second) groups[i].push_back(v.by_tag.at(t));
    }
  }
  for (const auto* u : v.updates) {
    if (placed.count(*u->tag) == 0) groups[qs.size()].push_back(u);
  }

  std::vector<const Operation*> seq;
  for (std::size_t i = 0; i <= qs.size(); ++i) {
    std::sort(groups[i].begin(), groups[i].end(), inv_before);
    seq.insert(seq.end(), groups[i].begin(), groups[i].end());
    if (i < qs.size()) seq.push_back(qs[i]);
  }

  // Legality: each query observes exactly the updates placed before it.
  TagSet so_far;
  for (const auto* op : seq) {
    if (op->kind == OpKind::Update) {
      so_far.insert(*op->tag);
    } else if (!(so_far == *op->learned)) {
      out.detail = op_str(*op) + " is not legal at its position";
      return out;
    }
  }

  // Real-time order must be preserved: everything that responded before b was
  // invoked sits before b.
  std::map<std::uint64_t, std::size_t> pos;
  for (std::size_t i = 0; i < seq.size(); ++i) pos[seq[i]->id] = i;
  std::vector<const Operation*> by_end = seq;
  std::sort(by_end.begin(), by_end.end(),
            [](const Operation* a, const Operation* b) { return end_seq(*a) < end_seq(*b); });
  std::vector<std::size_t> prefix_max(by_end.size());
  for (std::size_t i = 0; i < by_end.size(); ++i) {
    prefix_max[i] = std::max(i == 0 ? 0 : prefix_max[i - 1], pos[by_end[i]->id]);
  }
  std::vector<std::uint64_t> ends(by_end.size());
  for (std::size_t i = 0; i < by_end.size(); ++i) ends[i] = end_seq(*by_end[i]);
  for (const auto* b : seq) {
    const auto n = static_cast<std::size_t>(std::lower_bound(ends.begin(), ends.end(), b->invoke_seq) - ends.begin());
    if (n > 0 && prefix_max[n - 1] >= pos[b->id]) {
      out.detail = "witness breaks real-time order before " + op_str(*b);
      return out;
    }
  }

  out.legal = true;
  SequentialWitness w;
  for (const auto* op : seq) w.order.push_back(op->id);
  out.witness = std::move(w);
  return out;
}

bool linearizability_oracle(const History& h, std::size_t bound) {
  const View v = build_view(h);
  std::vector<const Operation*> ops = v.updates;
  ops.insert(ops.end(), v.queries.begin(), v.queries.end());
  const std::size_t n = ops.size();
  if (n > bound) {
    throw UnsupportedInput("history has " + std::to_string(n) + " ops, oracle bound is " + std::to_string(bound));
  }
  if (n > 24) throw UnsupportedInput("oracle bound above 24 ops is not supported");
  if (n == 0) return true;

  const std::size_t n_updates = v.updates.size();
  const std::uint32_t update_mask = (1U << n_updates) - 1;
  std::vector<std::uint32_t> preds(n, 0);
  for (std::size_t b = 0; b < n; ++b) {
    for (std::size_t a = 0; a < n; ++a) {
      if (a != b && precedes(*ops[a], *ops[b])) preds[b] |= 1U << a;
    }
  }
  // Update mask a query must observe exactly; nullopt if it names a tag no update carries.
  std::vector<std::optional<std::uint32_t>> need(n);
  for (std::size_t i = n_updates; i < n; ++i) {
    std::uint32_t m = 0;
    bool ok = true;
    for (const auto& t : *ops[i]->learned) {
      auto it = std::find_if(v.updates.begin(), v.updates.end(), [&](const Operation* u) { return *u->tag == t; });
      if (it == v.updates.end()) {
        ok = false;
        break;
      }
      m |= 1U << (it - v.updates.begin());
    }
    if (ok) need[i] = m;
  }

  const std::uint32_t full = n == 32 ? ~0U : (1U << n) - 1;
  std::vector<char> dead(std::size_t{1} << n, 0);
  std::vector<std::pair<std::uint32_t, std::size_t>> stack;  // (mask, next candidate)
  stack.push_back({0, 0});
  while (!stack.empty()) {
    auto& [mask, cand] = stack.back();
    if (mask == full) return true;
    bool pushed = false;
    while (cand < n) {
      const std::size_t i = cand++;
      const std::uint32_t bit = 1U << i;
      if ((mask & bit) != 0 || (preds[i] & ~mask) != 0) continue;
      if (i >= n_updates && (!need[i] || (mask & update_mask) != *need[i])) continue;
      const std::uint32_t next = mask | bit;
      if (dead[next] != 0) continue;
      stack.push_back({next, 0});
      pushed = true;
      break;
    }
    if (!pushed) {
      dead[stack.back().first] = 1;
      stack.pop_back();
    }
  }
  return false;
}

}  // namespace crdtpaxos
