#include "crdtpaxos/checker.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <json.hpp>
#include <numeric>
#include <random>

#include "crdtpaxos/errors.hpp"
#include "crdtpaxos/sim.hpp"

using namespace crdtpaxos;

namespace {

// Tiny builder: ops get explicit invoke/response positions in the global order.
struct Builder {
  History h;
  std::uint64_t next_id = 1;

  std::uint64_t update(std::uint64_t inv, std::optional<std::uint64_t> resp, std::uint64_t n) {
    Operation op;
    op.id = next_id++;
    op.kind = OpKind::Update;
    op.tag = CausalTag{1, n};
    op.invoke_seq = op.invoke_time = inv;
    if (resp) op.response_seq = op.response_time = *resp;
    h.ops.push_back(op);
    return op.id;
  }
  std::uint64_t query(std::uint64_t inv, std::optional<std::uint64_t> resp, std::vector<std::uint64_t> learned) {
    Operation op;
    op.id = next_id++;
    op.kind = OpKind::Query;
    op.invoke_seq = op.invoke_time = inv;
    if (resp) {
      op.response_seq = op.response_time = *resp;
      std::vector<CausalTag> tags;
      for (auto n : learned) tags.push_back({1, n});
      op.learned = TagSet(tags);
    }
    h.ops.push_back(op);
    return op.id;
  }
};

const Operation& by_id(const History& h, std::uint64_t id) {
  return *std::find_if(h.ops.begin(), h.ops.end(), [&](const Operation& o) { return o.id == id; });
}

// ---- brute-force reference definitions ----

bool has(const Operation& q, const CausalTag& t) { return q.learned->contains(t); }

bool ref_validity(const History& h) {
  for (const auto& q : h.ops) {
    if (q.kind != OpKind::Query || !q.completed()) continue;
    for (const auto& t : *q.learned) {
      bool ok = false;
      for (const auto& u : h.ops) ok = ok || (u.kind == OpKind::Update && *u.tag == t && u.invoke_seq < *q.response_seq);
      if (!ok) return false;
    }
  }
  return true;
}
bool ref_stability(const History& h) {
  for (const auto& a : h.ops)
    for (const auto& b : h.ops) {
      if (a.kind != OpKind::Query || b.kind != OpKind::Query || !a.completed() || !b.completed()) continue;
      if (precedes(a, b) && !a.learned->subset_of(*b.learned)) return false;
    }
  return true;
}
bool ref_consistency(const History& h) {
  for (const auto& a : h.ops)
    for (const auto& b : h.ops) {
      if (a.kind != OpKind::Query || b.kind != OpKind::Query || !a.completed() || !b.completed()) continue;
      if (!a.learned->subset_of(*b.learned) && !b.learned->subset_of(*a.learned)) return false;
    }
  return true;
}
bool ref_update_stability(const History& h) {
  for (const auto& u1 : h.ops)
    for (const auto& u2 : h.ops) {
      if (u1.kind != OpKind::Update || u2.kind != OpKind::Update || !precedes(u1, u2)) continue;
      for (const auto& q : h.ops) {
        if (q.kind == OpKind::Query && q.completed() && has(q, *u2.tag) && !has(q, *u1.tag)) return false;
      }
    }
  return true;
}
bool ref_visibility(const History& h) {
  for (const auto& u : h.ops)
    for (const auto& q : h.ops) {
      if (u.kind != OpKind::Update || q.kind != OpKind::Query || !q.completed()) continue;
      if (precedes(u, q) && !has(q, *u.tag)) return false;
    }
  return true;
}

// Checks a sequential witness independently of the checker.
bool valid_witness(const History& h, const std::vector<std::uint64_t>& order) {
  std::vector<const Operation*> ops;
  for (const auto& op : h.ops) {
    if (op.kind == OpKind::Update || op.completed()) ops.push_back(&op);
  }
  if (order.size() != ops.size()) return false;
  std::map<std::uint64_t, std::size_t> pos;
  for (std::size_t i = 0; i < order.size(); ++i) pos[order[i]] = i;
  if (pos.size() != order.size()) return false;
  for (const auto* a : ops)
    for (const auto* b : ops) {
      if (!pos.count(a->id) || !pos.count(b->id)) return false;
      if (precedes(*a, *b) && pos[a->id] > pos[b->id]) return false;
    }
  TagSet seen;
  for (auto id : order) {
    const auto& op = by_id(h, id);
    if (op.kind == OpKind::Update) {
      seen.insert(*op.tag);
    } else if (!(seen == *op.learned)) {
      return false;
    }
  }
  return true;
}

// Random small history: ops get random intervals; queries learn either a
// random subset or a prefix of a random update order (closer to legal).
History random_history(std::mt19937_64& rng, std::size_t max_ops) {
  const std::size_t n = 1 + rng() % max_ops;
  std::vector<std::uint64_t> points(2 * n);
  std::iota(points.begin(), points.end(), 1);
  std::shuffle(points.begin(), points.end(), rng);
  std::vector<std::uint64_t> perm_tags;
  Builder b;
  std::size_t n_updates = 0;
  std::vector<bool> is_update(n);
  for (std::size_t i = 0; i < n; ++i) {
    is_update[i] = rng() % 2 == 0;
    n_updates += is_update[i] ? 1 : 0;
  }
  std::vector<std::uint64_t> order(n_updates);
  std::iota(order.begin(), order.end(), 1);
  std::shuffle(order.begin(), order.end(), rng);
  std::uint64_t tag = 0;
  for (std::size_t i = 0; i < n; ++i) {
    auto inv = std::min(points[2 * i], points[2 * i + 1]);
    auto resp = std::max(points[2 * i], points[2 * i + 1]);
    const bool pending = rng() % 6 == 0;
    if (is_update[i]) {
      b.update(inv, pending ? std::nullopt : std::optional<std::uint64_t>(resp), ++tag);
    } else {
      std::vector<std::uint64_t> learned;
      if (rng() % 3 == 0) {
        for (std::uint64_t t = 1; t <= n_updates; ++t) {
          if (rng() % 2) learned.push_back(t);
        }
      } else if (n_updates > 0) {
        const auto k = rng() % (n_updates + 1);
        learned.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k));
      }
      b.query(inv, pending ? std::nullopt : std::optional<std::uint64_t>(resp), learned);
    }
  }
  return b.h;
}

using CheckFn = Verdict (*)(const History&);

}  // namespace

TEST(Validity, Examples) {
  EXPECT_TRUE(check_validity(History{}).pass);
  Builder b;
  b.update(1, 2, 1);
  const auto q = b.query(3, 4, {1, 7});
  const auto v = check_validity(b.h);
  EXPECT_FALSE(v.pass);
  EXPECT_EQ(v.witness, std::vector<std::uint64_t>{q});
  EXPECT_FALSE(check_validity(restrict_history(b.h, v.witness)).pass);
}

TEST(Validity, LearnedBeforeInvoked) {
  Builder b;
  const auto q = b.query(1, 2, {1});
  const auto u = b.update(3, 4, 1);
  const auto v = check_validity(b.h);
  EXPECT_FALSE(v.pass);
  EXPECT_EQ(v.witness, (std::vector<std::uint64_t>{u, q}));
}

TEST(Stability, Examples) {
  Builder one;
  one.update(1, 2, 1);
  one.query(3, 4, {1});
  EXPECT_TRUE(check_stability(one.h).pass);

  Builder b;
  b.update(1, 2, 1);
  b.update(1, 3, 2);
  const auto q1 = b.query(4, 5, {1, 2});
  const auto q2 = b.query(6, 7, {1});
  const auto v = check_stability(b.h);
  EXPECT_FALSE(v.pass);
  EXPECT_EQ(v.witness, (std::vector<std::uint64_t>{q1, q2}));
  EXPECT_FALSE(check_stability(restrict_history(b.h, v.witness)).pass);
}

TEST(Consistency, Examples) {
  Builder b;
  b.update(1, 6, 1);
  b.update(2, 7, 2);
  b.query(3, 8, {1});
  b.query(4, 9, {2});
  const auto v = check_consistency(b.h);
  EXPECT_FALSE(v.pass);
  EXPECT_EQ(v.witness.size(), 2U);
  EXPECT_FALSE(check_consistency(restrict_history(b.h, v.witness)).pass);

  Builder ok;
  ok.update(1, 6, 1);
  ok.update(2, 7, 2);
  ok.query(3, 8, {1});
  ok.query(4, 9, {1, 2});
  EXPECT_TRUE(check_consistency(ok.h).pass);
}

TEST(UpdateStability, Examples) {
  Builder b;
  const auto u1 = b.update(1, 2, 1);
  const auto u2 = b.update(3, 6, 2);
  const auto q = b.query(4, 5, {2});
  const auto v = check_update_stability(b.h);
  EXPECT_FALSE(v.pass);
  EXPECT_EQ(v.witness, (std::vector<std::uint64_t>{u1, u2, q}));
  EXPECT_FALSE(check_update_stability(restrict_history(b.h, v.witness)).pass);
}

TEST(UpdateVisibility, Examples) {
  Builder b;
  const auto u = b.update(1, 2, 1);
  const auto q = b.query(3, 4, {});
  const auto v = check_update_visibility(b.h);
  EXPECT_FALSE(v.pass);
  EXPECT_EQ(v.witness, (std::vector<std::uint64_t>{u, q}));
  EXPECT_FALSE(check_update_visibility(restrict_history(b.h, v.witness)).pass);
}

TEST(Checks, PendingAndFailedOpsDoNotConstrain) {
  Builder b;
  b.update(1, std::nullopt, 1);
  b.update(2, 3, 2);
  b.h.ops.back().failed = true;
  b.query(5, 6, {});
  b.query(7, std::nullopt, {});
  for (const auto& v : check_gla(b.h)) EXPECT_TRUE(v.pass) << v.to_json();
  EXPECT_TRUE(linearize(b.h).legal);
  EXPECT_TRUE(linearizability_oracle(b.h));
}

TEST(Checks, UnsupportedInputs) {
  History plain;
  plain.instrumented = false;
  EXPECT_THROW(check_validity(plain), UnsupportedInput);
  EXPECT_THROW(check_gla(plain), UnsupportedInput);
  EXPECT_THROW(linearize(plain), UnsupportedInput);

  Builder untagged;
  untagged.update(1, 2, 1);
  untagged.h.ops[0].tag.reset();
  EXPECT_THROW(check_consistency(untagged.h), UnsupportedInput);

  Builder dup;
  dup.update(1, 2, 1);
  dup.update(3, 4, 1);
  EXPECT_THROW(check_stability(dup.h), UnsupportedInput);

  Builder no_learned;
  no_learned.query(1, 2, {});
  no_learned.h.ops[0].learned.reset();
  EXPECT_THROW(check_update_visibility(no_learned.h), UnsupportedInput);
}

TEST(Checks, VerdictJson) {
  Builder b;
  b.update(1, 2, 1);
  b.query(3, 4, {});
  const auto j = nlohmann::json::parse(check_update_visibility(b.h).to_json());
  EXPECT_EQ(j["condition"], "update_visibility");
  EXPECT_EQ(j["pass"], false);
  EXPECT_EQ(j["witness"].size(), 2U);
  EXPECT_EQ(nlohmann::json::parse(check_validity(b.h).to_json())["pass"], true);
}

TEST(Checks, AgreeWithReferenceDefinitions) {
  std::mt19937_64 rng(2024);
  const std::vector<std::pair<CheckFn, bool (*)(const History&)>> pairs = {
      {check_validity, ref_validity},
      {check_stability, ref_stability},
      {check_consistency, ref_consistency},
      {check_update_stability, ref_update_stability},
      {check_update_visibility, ref_visibility},
  };
  std::size_t fails = 0;
  for (int i = 0; i < 3000; ++i) {
    const History h = random_history(rng, 9);
    for (const auto& [check, ref] : pairs) {
      const Verdict v = check(h);
      ASSERT_EQ(v.pass, ref(h)) << history_to_jsonl(h) << v.to_json();
      if (!v.pass) {
        ++fails;
        ASSERT_FALSE(check(restrict_history(h, v.witness)).pass) << "witness does not re-trigger " << v.to_json();
        ASSERT_FALSE(ref(restrict_history(h, v.witness)));
      }
    }
  }
  EXPECT_GT(fails, 100U);
}

TEST(Linearize, UpdateThenQuery) {
  Builder b;
  const auto u = b.update(1, 2, 1);
  const auto q = b.query(3, 4, {1});
  const auto lin = linearize(b.h);
  ASSERT_TRUE(lin.legal);
  EXPECT_EQ(lin.witness->order, (std::vector<std::uint64_t>{u, q}));
}

TEST(Linearize, ConcurrentQueryMissingUpdateGoesFirst) {
  Builder b;
  const auto u = b.update(1, 4, 1);
  const auto q = b.query(2, 3, {});
  const auto lin = linearize(b.h);
  ASSERT_TRUE(lin.legal);
  EXPECT_EQ(lin.witness->order, (std::vector<std::uint64_t>{q, u}));
}

TEST(Linearize, RefusesWhenGlaFails) {
  Builder b;
  b.update(1, 2, 1);
  b.query(3, 4, {});
  const auto lin = linearize(b.h);
  EXPECT_FALSE(lin.legal);
  ASSERT_TRUE(lin.refused.has_value());
  EXPECT_EQ(lin.refused->condition, Condition::UpdateVisibility);
  const auto j = nlohmann::json::parse(lin.to_json());
  EXPECT_EQ(j["refused"]["condition"], "update_visibility");
}

TEST(Oracle, Examples) {
  EXPECT_TRUE(linearizability_oracle(History{}));
  Builder b;
  b.update(1, 6, 1);
  b.update(2, 7, 2);
  b.query(3, 8, {1});
  b.query(4, 9, {2});
  EXPECT_FALSE(linearizability_oracle(b.h));
}

TEST(Oracle, Bound) {
  Builder b;
  for (std::uint64_t i = 0; i < 13; ++i) b.update(2 * i + 1, 2 * i + 2, i + 1);
  EXPECT_THROW(linearizability_oracle(b.h), UnsupportedInput);
  EXPECT_TRUE(linearizability_oracle(b.h, 13));
  Builder big;
  for (std::uint64_t i = 0; i < 25; ++i) big.update(2 * i + 1, 2 * i + 2, i + 1);
  EXPECT_THROW(linearizability_oracle(big.h, 30), UnsupportedInput);
}

TEST(Oracle, AgreesWithLinearizeOnRandomHistories) {
  std::mt19937_64 rng(77);
  std::size_t legal = 0, illegal = 0;
  for (int i = 0; i < 500; ++i) {
    const History h = random_history(rng, 8);
    const bool oracle = linearizability_oracle(h);
    const auto lin = linearize(h);
    ASSERT_EQ(lin.legal, oracle) << history_to_jsonl(h) << lin.to_json();
    if (lin.legal) {
      ASSERT_TRUE(valid_witness(h, lin.witness->order)) << lin.to_json();
      ++legal;
    } else {
      ++illegal;
    }
  }
  EXPECT_GT(legal, 50U);
  EXPECT_GT(illegal, 50U);
}

TEST(Oracle, AgreesOnSmallSimHistories) {
  for (std::uint64_t seed = 1; seed <= 60; ++seed) {
    SimConfig c;
    c.n_clients = 3;
    c.ops_per_client = 4;
    c.seed = seed;
    c.drop_probability = 0.1;
    const auto r = sim_run(c);
    const auto lin = linearize(r.history);
    ASSERT_TRUE(lin.legal) << lin.to_json();
    ASSERT_TRUE(valid_witness(r.history, lin.witness->order));
    ASSERT_TRUE(linearizability_oracle(r.history));
  }
}
