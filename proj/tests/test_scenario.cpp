#include <doctest.h>

#include "qhsm/bench.hpp"
#include "qhsm/errors.hpp"
#include "qhsm/scenario.hpp"
#include "support.hpp"

using namespace qhsm;
using namespace qhsm::test;

TEST_SUITE_BEGIN("scenario");

namespace {

Scenario honest_scenario(uint64_t seed) {
    Scenario sc;
    sc.backend = Backend::Transparent;
    sc.order = 257;
    sc.seed = seed;
    QuorumSpec q;
    q.id = "q1";
    q.members = {1, 2, 3};
    q.threshold_k = 3;
    sc.quorums.push_back(q);
    sc.script = {{.op = "keygen", .quorum = "q1"},
                 {.op = "encrypt", .quorum = "q1", .message_hex = "c0ffee"},
                 {.op = "decrypt", .quorum = "q1"},
                 {.op = "sign", .quorum = "q1", .message_hex = "aa55"},
                 {.op = "rng", .quorum = "q1"}};
    return sc;
}

}  // namespace

TEST_CASE("honest scenario succeeds") {
    ScenarioResult r = run_scenario(honest_scenario(101));
    CHECK(r.outcome == Outcome::Success);
    CHECK(!r.transcript_bytes.empty());
    CHECK(r.summary_json.find("\"outcome\": \"success\"") != std::string::npos);
}

TEST_CASE("scenario reruns are byte-identical") {
    ScenarioResult a = run_scenario(honest_scenario(202));
    ScenarioResult b = run_scenario(honest_scenario(202));
    CHECK(a.transcript_bytes == b.transcript_bytes);
    CHECK(a.summary_json == b.summary_json);
    ScenarioResult c = run_scenario(honest_scenario(203));
    CHECK(c.transcript_bytes != a.transcript_bytes);
}

TEST_CASE("rogue-key craft aborts with a commitment failure") {
    Scenario sc = honest_scenario(303);
    sc.script = {{.op = "keygen", .quorum = "q1"}};
    sc.adversary.malicious[2] = NodeAttackSpec{NodeAttack::RogueKeyCraft};
    ScenarioResult r = run_scenario(sc);
    CHECK(r.outcome == Outcome::Abort);
    CHECK(r.reason.find("commitment-failure") != std::string::npos);
}

TEST_CASE("rogue-key withholding stalls into a timeout, never a biased key") {
    Scenario sc = honest_scenario(304);
    sc.script = {{.op = "keygen", .quorum = "q1"}};
    sc.adversary.malicious[3] = NodeAttackSpec{NodeAttack::RogueKeyWithhold};
    ScenarioResult r = run_scenario(sc);
    CHECK(r.outcome == Outcome::Abort);
}

TEST_CASE("replayed index aborts with replay-rejected") {
    Scenario sc = honest_scenario(305);
    sc.script = {{.op = "keygen", .quorum = "q1"},
                 {.op = "sign", .quorum = "q1", .message_hex = "01"},
                 {.op = "sign-reuse", .quorum = "q1", .message_hex = "02"}};
    ScenarioResult r = run_scenario(sc);
    CHECK(r.outcome == Outcome::Abort);
    CHECK(r.reason.find("replay-rejected") != std::string::npos);
}

TEST_CASE("posterior oracle: t-1 colluding insiders learn nothing") {
    Scenario sc = honest_scenario(306);
    sc.order = 257;
    // nodes 2 and 3 are passive insiders; node 1 is the honest survivor
    sc.adversary.malicious[2] = NodeAttackSpec{NodeAttack::None};
    sc.adversary.malicious[3] = NodeAttackSpec{NodeAttack::None};
    sc.script = {{.op = "keygen", .quorum = "q1"},
                 {.op = "sign", .quorum = "q1", .message_hex = "11"},
                 {.op = "sign", .quorum = "q1", .message_hex = "22"},
                 {.op = "sign", .quorum = "q1", .message_hex = "33"}};
    sc.secrecy_honest_node = 1;
    auto world = build_world(sc);
    ScenarioResult r = run_script(*world, sc);
    CHECK(r.outcome == Outcome::Success);

    SecrecyReport rep = secrecy_posterior(*world, 1, key_handle_id("key"));
    CHECK(rep.uniform);
    CHECK(rep.candidate_count == 257);
    CHECK_FALSE(rep.recovered);
}

TEST_CASE("posterior oracle: a replay-guard failure would pin the share") {
    // Synthetic observations with a repeated index and different challenges:
    // exactly one candidate remains. This is what the j-ledger prevents.
    Group g = Group::transparent(257);
    uint64_t x = 87, r9 = 140;
    std::vector<ScalarObservation> obs;
    auto sigma = [&](uint64_t eps) { return mpz_class((r9 + 257 * 257 - x * eps) % 257); };
    obs.push_back({9, sigma(10), 10});
    obs.push_back({9, sigma(33), 33});
    SecrecyReport rep = enumerate_posterior(g, obs, 0, true);
    CHECK(rep.candidate_count == 1);
    CHECK(rep.recovered);
    CHECK(rep.recovered_x == x);
}

TEST_CASE("posterior oracle: all-malicious quorum recovers the key (bound is tight)") {
    Scenario sc = honest_scenario(307);
    sc.adversary.malicious[1] = NodeAttackSpec{NodeAttack::None};
    sc.adversary.malicious[2] = NodeAttackSpec{NodeAttack::None};
    sc.adversary.malicious[3] = NodeAttackSpec{NodeAttack::None};
    sc.script = {{.op = "keygen", .quorum = "q1"}};
    auto world = build_world(sc);
    ScenarioResult r = run_script(*world, sc);
    REQUIRE(r.outcome == Outcome::Success);
    SecrecyReport rep = secrecy_posterior(*world, 1, key_handle_id("key"));
    CHECK(rep.recovered);
    // tightness: the recovered secret reproduces the aggregate key
    Element Y = world->host->quorum_key("q1", key_handle_id("key"))->Y_agg;
    CHECK(world->group.mul_gen(world->group.scalar(rep.recovered_x)) == Y);
}

TEST_CASE("scenario json parsing and validation") {
    SUBCASE("valid document") {
        std::string text = R"({
            "seed": 7,
            "backend": "transparent",
            "order": 257,
            "quorums": [{"id": "q1", "members": [1, 2, 3]}],
            "adversary": {
                "malicious": [{"node": 2, "attack": "rogue-key-craft"}],
                "rules": [{"action": "drop",
                           "match": {"opcode": "DEC_SHARE", "src": 1}}]
            },
            "script": [{"op": "keygen", "quorum": "q1"}]
        })";
        Scenario sc = scenario_from_json(text);
        CHECK(sc.seed == 7);
        CHECK(sc.quorums.size() == 1);
        CHECK(sc.quorums[0].threshold_k == 3);  // defaults to quorum size
        CHECK(sc.adversary.malicious.count(2) == 1);
        REQUIRE(sc.adversary.rules.size() == 1);
        CHECK(sc.adversary.rules[0].action == RuleAction::Drop);
        CHECK(*sc.adversary.rules[0].match.opcode == OpCode::DecShare);
    }
    SUBCASE("missing seed names the field") {
        std::string text = R"({"quorums": [{"id": "q", "members": [1]}], "script": []})";
        CHECK_THROWS_WITH_AS((void)scenario_from_json(text),
                             doctest::Contains("seed"), Error);
    }
    SUBCASE("k below quorum size is rejected") {
        std::string text = R"({
            "seed": 1,
            "quorums": [{"id": "q", "members": [1, 2, 3], "k": 2}],
            "script": []
        })";
        CHECK_THROWS_WITH_AS((void)scenario_from_json(text),
                             doctest::Contains("k"), Error);
    }
    SUBCASE("bad opcode names the rule index") {
        std::string text = R"({
            "seed": 1,
            "quorums": [{"id": "q", "members": [1]}],
            "adversary": {"rules": [{"action": "drop", "match": {"opcode": "NOPE"}}]},
            "script": []
        })";
        CHECK_THROWS_WITH_AS((void)scenario_from_json(text),
                             doctest::Contains("rules[0]"), Error);
    }
    SUBCASE("unparsable json reports a parse error") {
        CHECK_THROWS_WITH_AS((void)scenario_from_json("{nope"),
                             doctest::Contains("parse error"), Error);
    }
}

TEST_CASE("bench model shapes") {
    CostTable costs;
    BenchReport rep = run_bench({1, 2, 3, 4, 5}, {1, 2, 3}, costs, 404);
    REQUIRE(rep.latency.size() == 5);
    // decryption latency is flat in t; keygen grows with t
    CHECK(rep.decrypt_latency_spread == 0.0);
    for (size_t i = 1; i < rep.latency.size(); ++i) {
        CHECK(rep.latency[i].keygen_ms > rep.latency[i - 1].keygen_ms);
    }
    // commitment/reveal exchanges are quadratic: t*(t-1) messages per round
    CHECK(rep.keygen_exchange_quadratic);
    for (const LatencyRow& row : rep.latency) {
        CHECK(row.store_hash_msgs == static_cast<size_t>(row.t) * (row.t - 1));
        CHECK(row.store_pubkey_msgs == static_cast<size_t>(row.t) * (row.t - 1));
    }
    // throughput grows linearly with quorum count
    REQUIRE(rep.throughput.size() == 3);
    CHECK(rep.throughput_fit_residual < 0.01);
    CHECK(rep.throughput[2].decrypt_ops_per_sec >
          rep.throughput[0].decrypt_ops_per_sec * 2.5);
    CHECK(!rep.text.empty());
    CHECK(!rep.json.empty());
}

TEST_SUITE_END();
