// Acceptance suite: runs every shipped correctness and tolerance criterion
// at its stated threshold and prints one pass/fail line per criterion.

#include <chrono>
#include <cstdio>
#include <functional>
#include <iostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "qhsm/bench.hpp"
#include "qhsm/elgamal.hpp"
#include "qhsm/scenario.hpp"
#include "qhsm/tolerance.hpp"
#include "support.hpp"

using namespace qhsm;
using namespace qhsm::test;

namespace {

struct Criterion {
    int num;
    std::string name;
    bool pass = false;
    std::string detail;
    double seconds = 0;
};

std::vector<Criterion> g_results;

void run_criterion(int num, const std::string& name,
                   const std::function<std::string()>& body) {
    Criterion c;
    c.num = num;
    c.name = name;
    auto t0 = std::chrono::steady_clock::now();
    try {
        c.detail = body();
        c.pass = true;
    } catch (const std::exception& e) {
        c.pass = false;
        c.detail = e.what();
    }
    c.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::printf("[%s] criterion %d: %s — %s (%.1fs)\n", c.pass ? "PASS" : "FAIL", c.num,
                c.name.c_str(), c.detail.c_str(), c.seconds);
    std::fflush(stdout);
    g_results.push_back(std::move(c));
}

[[noreturn]] void fail(const std::string& msg) { throw std::runtime_error(msg); }

// --- criterion 1 ---

std::string round_trip_correctness() {
    auto start = std::chrono::steady_clock::now();
    size_t total = 0;
    for (Backend backend : {Backend::Transparent, Backend::Curve}) {
        Group g = backend == Backend::Curve ? Group::p256() : Group::transparent(257);
        for (uint16_t t = 1; t <= 10; ++t) {
            HostConfig cfg;
            cfg.seal_responses = false;  // round-trip path; sealing covered elsewhere
            auto b = make_bench(g, t, 1000 + t, {}, {}, cfg);
            Id16 key = test_key();
            if (b->host->dkpg(b->quorum, key).status != OpStatus::Ok) {
                fail("keygen failed at t=" + std::to_string(t));
            }
            Element Y = b->host->quorum_key("q1", key)->Y_agg;
            Drbg rng(2000 + t + (backend == Backend::Curve ? 500 : 0));
            for (int i = 0; i < 100; ++i) {
                Element m = g.mul_gen(g.scalar_rand(rng));
                Ciphertext ct = encrypt(g, m, Y, rng);
                DecryptResult r = b->host->decrypt(b->quorum, key, ct);
                if (r.status != OpStatus::Ok || !(r.plaintext == m)) {
                    fail("round-trip failed at t=" + std::to_string(t) + " message " +
                         std::to_string(i));
                }
                ++total;
            }
        }
    }
    double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (secs >= 60.0) fail("runtime " + std::to_string(secs) + "s exceeds the 60s budget");
    std::ostringstream os;
    os << total << " round-trips across t=1..10 on both backends in " << std::fixed;
    os.precision(1);
    os << secs << "s";
    return os.str();
}

// --- criterion 2 ---

std::string dkpg_oracle_equivalence() {
    size_t runs = 0;
    for (uint64_t seed = 1; seed <= 1000; ++seed) {
        uint64_t order = (seed % 2 == 0) ? 257 : 13;
        uint16_t t = static_cast<uint16_t>(1 + seed % 10);
        Group g = Group::transparent(order);
        auto b = make_bench(g, t, seed);
        Id16 key = test_key();
        DkpgResult r = b->host->dkpg(b->quorum, key);
        if (r.status != OpStatus::Ok) fail("honest keygen failed, seed " + std::to_string(seed));
        // Independent oracle: sum the shares read out of the nodes and
        // multiply the base element directly.
        mpz_class sum = 0;
        for (NodeId id : b->quorum.members) {
            const KeySlot* slot = b->ic(id)->key_slot(key);
            if (slot == nullptr) fail("missing slot");
            sum += slot->x.v;
        }
        if (!(g.mul_gen(g.scalar(sum)) == r.key.Y_agg)) {
            fail("aggregate mismatch, seed " + std::to_string(seed));
        }
        ++runs;
    }

    // Any single tampered reveal or commitment aborts, every time.
    size_t tampered = 0;
    for (uint64_t seed = 1; seed <= 300; ++seed) {
        Group g = Group::transparent(257);
        bool tamper_reveal = seed % 2 == 0;
        ControllerRule rule;
        rule.match.src = 2;
        rule.match.kind = BodyKind::Command;
        rule.match.opcode =
            tamper_reveal ? OpCode::KeygenStorePubkey : OpCode::KeygenStoreHash;
        rule.action = RuleAction::Modify;
        rule.max_hits = 1;
        if (tamper_reveal) {
            rule.replace_payload = g.encode(g.mul_gen(g.scalar_u64(11 + seed % 200)));
        } else {
            rule.replace_payload = g.commit_digest(g.encode(g.mul_gen(g.scalar_u64(7))));
        }
        // node 2 counts as compromised so the controller can re-sign
        auto b = make_bench(g, 3, 3000 + seed, {}, {{2, NodeAttackSpec{NodeAttack::None}}});
        b->fabric->set_rules({rule});
        DkpgResult r = b->host->dkpg(b->quorum, test_key());
        if (r.status == OpStatus::Ok) {
            fail("tampered run completed, seed " + std::to_string(seed));
        }
        ++tampered;
    }
    return std::to_string(runs) + " randomized runs match the share-sum oracle; " +
           std::to_string(tampered) + "/300 tampered runs aborted";
}

// --- criterion 3 ---

std::string multisig_completeness_and_guards() {
    // honest completeness on the curve backend for every quorum size
    Group curve = Group::p256();
    for (uint16_t t = 1; t <= 10; ++t) {
        auto b = make_bench(curve, t, 4000 + t);
        Id16 key = test_key();
        if (b->host->dkpg(b->quorum, key).status != OpStatus::Ok) fail("keygen failed");
        if (b->host->cache_nonces(b->quorum, key, 1, 2) != OpStatus::Ok) fail("cache failed");
        Bytes msg{'m', static_cast<uint8_t>(t)};
        SignResult r = b->host->sign(b->quorum, key, msg);
        if (r.status != OpStatus::Ok) fail("sign failed at t=" + std::to_string(t));
        if (!verify(curve, b->host->quorum_key("q1", key)->Y_agg, msg, r.sig.j, r.sig)) {
            fail("verify failed at t=" + std::to_string(t));
        }
    }

    // replay guard: a consumed index is rejected by every node, 100/100
    Group g = Group::transparent(257);
    auto b = make_bench(g, 3, 4100);
    Id16 key = test_key();
    if (b->host->dkpg(b->quorum, key).status != OpStatus::Ok) fail("keygen failed");
    if (b->host->cache_nonces(b->quorum, key, 1, 120) != OpStatus::Ok) fail("cache failed");
    size_t reuse_ok = 0;
    for (int i = 0; i < 100; ++i) {
        Bytes msg{static_cast<uint8_t>(i)};
        SignResult first = b->host->sign(b->quorum, key, msg);
        if (first.status != OpStatus::Ok) fail("sign failed");
        size_t mark = b->fabric->transcript().size();
        Bytes other{static_cast<uint8_t>(i), 0xFF};
        SignResult reuse = b->host->sign_with_index(b->quorum, key, other, first.sig.j);
        if (reuse.status != OpStatus::ReplayRejected) fail("reuse accepted");
        size_t rejected = 0;
        const auto& recs = b->fabric->transcript().records();
        for (size_t r2 = mark; r2 < recs.size(); ++r2) {
            if (recs[r2].action == FabricAction::Delivered &&
                recs[r2].handler_status == Status::ReplayRejected) {
                ++rejected;
            }
        }
        if (rejected != 3) fail("not every node rejected the reused index");
        ++reuse_ok;
    }

    // tampered verification inputs fail 100/100 on the curve backend
    auto bc = make_bench(curve, 3, 4200);
    Id16 ckey = test_key();
    if (bc->host->dkpg(bc->quorum, ckey).status != OpStatus::Ok) fail("keygen failed");
    if (bc->host->cache_nonces(bc->quorum, ckey, 1, 110) != OpStatus::Ok) fail("cache failed");
    Element Y = bc->host->quorum_key("q1", ckey)->Y_agg;
    Drbg frng(4300);
    size_t flip_rejected = 0, wrong_key_rejected = 0;
    for (int i = 0; i < 100; ++i) {
        Bytes msg = frng.bytes(24);
        SignResult r = bc->host->sign(bc->quorum, ckey, msg);
        if (r.status != OpStatus::Ok) fail("sign failed");
        Bytes flipped = msg;
        size_t pos = frng.bytes(1)[0] % flipped.size();
        uint8_t bit = static_cast<uint8_t>(1 << (frng.bytes(1)[0] % 8));
        flipped[pos] ^= bit;
        if (!verify(curve, Y, flipped, r.sig.j, r.sig)) ++flip_rejected;
        Element wrong = curve.add(Y, curve.mul_gen(curve.scalar_rand(frng)));
        if (!verify(curve, wrong, msg, r.sig.j, r.sig)) ++wrong_key_rejected;
    }
    if (flip_rejected != 100) fail("a bit-flipped message verified");
    if (wrong_key_rejected != 100) fail("a wrong key verified");
    return "honest t=1..10 verified; replay " + std::to_string(reuse_ok) +
           "/100 rejected by all nodes; 100/100 flips and wrong keys rejected";
}

// --- criterion 4 ---

std::string rogue_key_scenarios() {
    size_t bias_events = 0, runs = 0, craft_aborts = 0, withhold_stalls = 0;
    for (uint64_t seed = 1; seed <= 500; ++seed) {
        bool withhold = seed % 2 == 0;
        Scenario sc;
        sc.backend = Backend::Transparent;
        sc.order = 257;
        sc.seed = 5000 + seed;
        QuorumSpec q;
        q.id = "q1";
        q.members = {1, 2, 3};
        q.threshold_k = 3;
        sc.quorums.push_back(q);
        sc.adversary.malicious[2] = NodeAttackSpec{
            withhold ? NodeAttack::RogueKeyWithhold : NodeAttack::RogueKeyCraft};
        sc.script = {{.op = "keygen", .quorum = "q1"}};
        auto world = build_world(sc);
        ScenarioResult r = run_script(*world, sc);
        ++runs;
        if (r.outcome == Outcome::Success) {
            const QuorumKey* key = world->host->quorum_key("q1", key_handle_id("key"));
            if (key != nullptr && key->Y_agg == world->rogue_target) ++bias_events;
            fail("rogue-key run completed, seed " + std::to_string(seed));
        }
        if (withhold) {
            // Phase machine: honest nodes must never have released a share.
            for (const auto& rec : world->fabric->transcript().records()) {
                if (rec.action != FabricAction::Delivered) continue;
                Envelope env = Envelope::decode(rec.envelope);
                if (env.kind != BodyKind::Command) continue;
                Command cmd = Command::decode(env.body);
                if (cmd.opcode == OpCode::KeygenStorePubkey) {
                    fail("a reveal escaped while the commitment was withheld");
                }
            }
            ++withhold_stalls;
        } else {
            if (r.reason.find("commitment-failure") == std::string::npos) {
                fail("crafted reveal was not caught by commitment verification");
            }
            ++craft_aborts;
        }
    }
    return std::to_string(bias_events) + " bias events over " + std::to_string(runs) +
           " runs (" + std::to_string(craft_aborts) + " crafted aborts, " +
           std::to_string(withhold_stalls) + " stalls without any reveal)";
}

// --- criterion 5 ---

std::string tolerance_matrix_secrecy() {
    // t-1 colluding insiders with full transcript access: posterior uniform.
    for (auto [order, t] : std::vector<std::pair<uint64_t, uint16_t>>{{13, 2}, {257, 3}}) {
        Scenario sc;
        sc.backend = Backend::Transparent;
        sc.order = order;
        sc.seed = 6000 + order + t;
        QuorumSpec q;
        q.id = "q1";
        for (uint16_t i = 1; i <= t; ++i) q.members.push_back(i);
        q.threshold_k = t;
        sc.quorums.push_back(q);
        for (uint16_t i = 2; i <= t; ++i) {
            sc.adversary.malicious[i] = NodeAttackSpec{NodeAttack::None};
        }
        sc.script = {{.op = "keygen", .quorum = "q1"},
                     {.op = "encrypt", .quorum = "q1", .message_hex = "aa"},
                     {.op = "decrypt", .quorum = "q1"},
                     {.op = "sign", .quorum = "q1", .message_hex = "01"},
                     {.op = "sign", .quorum = "q1", .message_hex = "02"},
                     {.op = "sign", .quorum = "q1", .message_hex = "03"}};
        auto world = build_world(sc);
        ScenarioResult r = run_script(*world, sc);
        if (r.outcome != Outcome::Success) fail("insider run failed: " + r.reason);
        SecrecyReport rep = secrecy_posterior(*world, 1, key_handle_id("key"));
        if (!rep.uniform || rep.candidate_count != order) {
            fail("posterior not uniform with t-1 insiders (n=" + std::to_string(order) +
                 "): " + std::to_string(rep.candidate_count) + " candidates");
        }
    }

    // All t members malicious: the oracle recovers x, and x*G == Y_agg.
    Scenario sc;
    sc.backend = Backend::Transparent;
    sc.order = 257;
    sc.seed = 6600;
    QuorumSpec q;
    q.id = "q1";
    q.members = {1, 2, 3};
    q.threshold_k = 3;
    sc.quorums.push_back(q);
    for (uint16_t i = 1; i <= 3; ++i) {
        sc.adversary.malicious[i] = NodeAttackSpec{NodeAttack::None};
    }
    sc.script = {{.op = "keygen", .quorum = "q1"}};
    auto world = build_world(sc);
    ScenarioResult r = run_script(*world, sc);
    if (r.outcome != Outcome::Success) fail("all-malicious keygen failed");
    SecrecyReport rep = secrecy_posterior(*world, 1, key_handle_id("key"));
    if (!rep.recovered) fail("all-malicious quorum did not recover the key");
    Element Y = world->host->quorum_key("q1", key_handle_id("key"))->Y_agg;
    if (!(world->group.mul_gen(world->group.scalar(rep.recovered_x)) == Y)) {
        fail("recovered secret does not reproduce the aggregate key");
    }
    return "posterior uniform with t-1 insiders (n=13 and n=257); bound tight with t";
}

// --- criterion 6 ---

std::string key_propagation() {
    Group g = Group::p256();
    size_t runs = 0;
    for (uint64_t seed = 1; seed <= 100; ++seed) {
        auto b = make_bench(g, 5, 7000 + seed);  // Q1 = {1,2,3}, Q2 = {4,5}
        QuorumConfig q1{"q1", {1, 2, 3}, 3, {}};
        QuorumConfig q2{"q2", {4, 5}, 2, {}};
        Id16 key = test_key();
        if (b->host->dkpg(q1, key).status != OpStatus::Ok) fail("keygen failed");
        Element Y = b->host->quorum_key("q1", key)->Y_agg;
        Drbg rng(7100 + seed);
        Element m = g.mul_gen(g.scalar_rand(rng));
        Ciphertext ct = encrypt(g, m, Y, rng);

        if (b->host->propagate(q1, q2, key).status != OpStatus::Ok) fail("propagate failed");
        DecryptResult dr = b->host->decrypt(q2, key, ct);
        if (dr.status != OpStatus::Ok || !(dr.plaintext == m)) {
            fail("propagated quorum cannot decrypt, seed " + std::to_string(seed));
        }
        if (b->host->cache_nonces(q2, key, 1, 1) != OpStatus::Ok) fail("cache failed");
        Bytes msg{static_cast<uint8_t>(seed)};
        SignResult sr = b->host->sign(q2, key, msg);
        if (sr.status != OpStatus::Ok || !verify(g, Y, msg, sr.sig.j, sr.sig)) {
            fail("propagated quorum cannot sign, seed " + std::to_string(seed));
        }

        // No single envelope may carry a complete share of the source era.
        for (NodeId id : q1.members) {
            Bytes needle = g.encode(b->ic(id)->key_slot(key)->x);
            for (const auto& rec : b->fabric->transcript().records()) {
                if (contains_subsequence(rec.envelope, needle)) {
                    fail("an envelope carries a complete source share");
                }
            }
        }
        ++runs;
    }
    return std::to_string(runs) + "/100 propagations preserve decrypt+sign; no envelope " +
           "carries a complete share";
}

// --- criterion 7 ---

std::string dleq_share_proofs() {
    size_t honest_ok = 0, perturbed_rejected = 0, perturbed_total = 0;

    // exhaustive on the transparent group of order 13
    Group g13 = Group::transparent(13);
    Drbg rng(8000);
    for (uint64_t x = 0; x < 13; ++x) {
        for (uint64_t c1v = 0; c1v < 13; ++c1v) {
            Scalar xs = g13.scalar_u64(x);
            Element c1 = g13.mul_gen(g13.scalar_u64(c1v));
            Element Y = g13.mul_gen(xs);
            Element A = dec_share(g13, c1, xs);
            DleqProof pf = dleq_prove(g13, xs, c1, Y, A, rng);
            if (!dleq_verify(g13, pf, Y, c1, A)) fail("honest proof rejected (n=13)");
            ++honest_ok;
            for (uint64_t k = 1; k < 13; ++k) {
                Element forged = g13.add(A, g13.mul_gen(g13.scalar_u64(k)));
                ++perturbed_total;
                if (dleq_verify(g13, pf, Y, c1, forged)) fail("false accept (n=13)");
                ++perturbed_rejected;
            }
        }
    }

    // randomized on a larger transparent group, up to 1000 honest proofs
    Group g257 = Group::transparent(257);
    Drbg rng2(8100);
    while (honest_ok < 1000) {
        Scalar x = g257.scalar_rand(rng2);
        Element c1 = g257.mul_gen(g257.scalar_rand(rng2));
        Element Y = g257.mul_gen(x);
        Element A = dec_share(g257, c1, x);
        DleqProof pf = dleq_prove(g257, x, c1, Y, A, rng2);
        if (!dleq_verify(g257, pf, Y, c1, A)) fail("honest proof rejected (n=257)");
        ++honest_ok;
        Element forged = g257.add(A, g257.generator());
        ++perturbed_total;
        if (dleq_verify(g257, pf, Y, c1, forged)) fail("false accept (n=257)");
        ++perturbed_rejected;
    }

    // randomized on the curve backend
    Group curve = Group::p256();
    Drbg rng3(8200);
    for (int i = 0; i < 40; ++i) {
        Scalar x = curve.scalar_rand(rng3);
        Element c1 = curve.mul_gen(curve.scalar_rand(rng3));
        Element Y = curve.mul_gen(x);
        Element A = dec_share(curve, c1, x);
        DleqProof pf = dleq_prove(curve, x, c1, Y, A, rng3);
        if (!dleq_verify(curve, pf, Y, c1, A)) fail("honest proof rejected (curve)");
        ++honest_ok;
        Element forged = curve.add(A, curve.mul_gen(curve.scalar_rand(rng3)));
        ++perturbed_total;
        if (dleq_verify(curve, pf, Y, c1, forged)) fail("false accept (curve)");
        ++perturbed_rejected;
    }
    return std::to_string(honest_ok) + " honest proofs verified; " +
           std::to_string(perturbed_rejected) + "/" + std::to_string(perturbed_total) +
           " perturbed shares rejected";
}

// --- criterion 8 ---

std::string scaling_shapes() {
    CostTable costs;
    BenchReport rep =
        run_bench({1, 2, 3, 4, 5, 6, 7, 8, 9, 10}, {1, 2, 3, 4, 5, 6, 7, 8}, costs, 9000);
    if (rep.decrypt_latency_spread >= 0.008) {
        fail("decrypt latency spread " + std::to_string(rep.decrypt_latency_spread));
    }
    if (rep.throughput_fit_residual >= 0.01) {
        fail("throughput fit residual " + std::to_string(rep.throughput_fit_residual));
    }
    if (!rep.keygen_exchange_quadratic) fail("exchange counts do not match t*(t-1)");
    for (const LatencyRow& row : rep.latency) {
        size_t expected = static_cast<size_t>(row.t) * (row.t - 1);
        if (row.store_hash_msgs != expected || row.store_pubkey_msgs != expected) {
            fail("exchange count mismatch at t=" + std::to_string(row.t));
        }
    }
    std::ostringstream os;
    os << "decrypt spread " << rep.decrypt_latency_spread * 100 << "% (<0.8%), fit residual "
       << rep.throughput_fit_residual * 100 << "% (<1%), exchanges = t*(t-1)";
    return os.str();
}

// --- criterion 9 ---

std::string reliability_formula() {
    if (k_tolerance(0.1, 3) != 0.999) fail("k_tolerance(0.1, 3) != 0.999");
    if (k_tolerance(1.0, 4) != 0.0) fail("k_tolerance(1.0, k) != 0");
    if (k_tolerance(0.0, 1) != 1.0) fail("k_tolerance(0.0, 1) != 1");
    for (int i = 1; i <= 100; ++i) {
        double p = static_cast<double>(i) / 101.0;
        double prev = k_tolerance(p, 1);
        for (unsigned k = 2; k <= 10; ++k) {
            double cur = k_tolerance(p, k);
            if (cur < prev) fail("not monotone at p=" + std::to_string(p));
            prev = cur;
        }
    }
    return "k_tolerance(0.1, 3) == 0.999 exactly; monotone over a 100-point grid";
}

// --- criterion 10 ---

std::string determinism() {
    const std::string scenario_text = R"({
        "seed": 97,
        "backend": "transparent",
        "order": 257,
        "quorums": [{"id": "q1", "members": [1, 2, 3]}],
        "adversary": {
            "malicious": [{"node": 3, "attack": "none"}],
            "rules": [{"action": "duplicate",
                       "match": {"opcode": "SIG_SHARE", "kind": "command"}}]
        },
        "script": [
            {"op": "keygen", "quorum": "q1"},
            {"op": "encrypt", "quorum": "q1", "message_hex": "feed"},
            {"op": "decrypt", "quorum": "q1"},
            {"op": "sign", "quorum": "q1", "message_hex": "beef"},
            {"op": "rng", "quorum": "q1"}
        ]
    })";
    Scenario sc = scenario_from_json(scenario_text);
    ScenarioResult a = run_scenario(sc);
    ScenarioResult b = run_scenario(sc);
    if (a.transcript_bytes != b.transcript_bytes) fail("transcripts differ across reruns");
    if (a.summary_json != b.summary_json) fail("summaries differ across reruns");
    if (a.transcript_bytes.empty()) fail("empty transcript");
    return "re-run transcripts are byte-identical (" +
           std::to_string(a.transcript_bytes.size()) + " bytes)";
}

}  // namespace

int main() {
    run_criterion(1, "round-trip correctness", round_trip_correctness);
    run_criterion(2, "keygen oracle equivalence and tamper aborts", dkpg_oracle_equivalence);
    run_criterion(3, "multi-signature completeness and guards",
                  multisig_completeness_and_guards);
    run_criterion(4, "rogue-key scenarios", rogue_key_scenarios);
    run_criterion(5, "tolerance matrix secrecy bounds", tolerance_matrix_secrecy);
    run_criterion(6, "key propagation", key_propagation);
    run_criterion(7, "decryption share proofs", dleq_share_proofs);
    run_criterion(8, "scaling shapes", scaling_shapes);
    run_criterion(9, "reliability formula", reliability_formula);
    run_criterion(10, "transcript determinism", determinism);

    size_t passed = 0;
    for (const Criterion& c : g_results) passed += c.pass ? 1 : 0;
    std::printf("%zu/%zu criteria passed\n", passed, g_results.size());
    return passed == g_results.size() ? 0 : 1;
}
