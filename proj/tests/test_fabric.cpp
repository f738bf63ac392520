#include <doctest.h>

#include "qhsm/errors.hpp"
#include "qhsm/fabric.hpp"
#include "support.hpp"

using namespace qhsm;
using namespace qhsm::test;

TEST_SUITE_BEGIN("fabric");

namespace {

Envelope raw_host_broadcast(Bench& b, OpCode op, const Id16& id, Bytes payload,
                            RandomSource& rng, uint64_t seq) {
    Command cmd = make_signed_command(b.group, op, id, std::move(payload),
                                      b.ident.sign_secret, rng);
    return make_signed_envelope(b.group, kHostId, kBroadcastId, seq, BodyKind::Command,
                                cmd.encode(), b.ident.sign_secret, rng);
}

}  // namespace

TEST_CASE("broadcast reaches every node and collects every response") {
    Group g = Group::transparent(257);
    auto b = make_bench(g, 3, 30);
    Drbg rng(2);
    Envelope env = raw_host_broadcast(*b, OpCode::RngShare, test_key(), Bytes{0}, rng, 1);
    REQUIRE(b->fabric->submit(env));
    b->fabric->run(8);
    auto inbox = b->fabric->take_host_inbox();
    CHECK(inbox.size() == 3);  // 3 deliveries, 3 responses
    size_t delivered = 0;
    for (const auto& rec : b->fabric->transcript().records()) {
        if (rec.action == FabricAction::Delivered && rec.handled_by != kHostId) ++delivered;
    }
    CHECK(delivered == 3);
}

TEST_CASE("unknown destination is a routing error back to the submitter") {
    Group g = Group::transparent(257);
    auto b = make_bench(g, 2, 31);
    Drbg rng(2);
    Command cmd = make_signed_command(g, OpCode::RngShare, test_key(), Bytes{0},
                                      b->ident.sign_secret, rng);
    Envelope env = make_signed_envelope(g, kHostId, 99, 1, BodyKind::Command, cmd.encode(),
                                        b->ident.sign_secret, rng);
    CHECK_FALSE(b->fabric->submit(env));
    bool found = false;
    for (const auto& rec : b->fabric->transcript().records()) {
        if (rec.action == FabricAction::RoutingError) found = true;
    }
    CHECK(found);
}

TEST_CASE("drop rule starves the host into incomplete-quorum") {
    Group g = Group::transparent(257);
    ControllerRule rule;
    rule.match.src = 2;
    rule.match.kind = BodyKind::Response;
    rule.match.opcode = OpCode::DecShare;
    rule.action = RuleAction::Drop;
    auto b = make_bench(g, 3, 32);
    b->fabric->set_rules({rule});
    Id16 key = test_key();
    REQUIRE(b->host->dkpg(b->quorum, key).status == OpStatus::Ok);
    Drbg erng(3);
    Element m = g.mul_gen(g.scalar_rand(erng));
    Ciphertext ct = encrypt(g, m, b->host->quorum_key("q1", key)->Y_agg, erng);
    DecryptResult r = b->host->decrypt(b->quorum, key, ct);
    CHECK(r.status == OpStatus::IncompleteQuorum);
    CHECK(r.offender == 2);
}

TEST_CASE("controller modification of an honest envelope is caught by signatures") {
    Group g = Group::transparent(257);
    ControllerRule rule;
    rule.match.kind = BodyKind::Response;
    rule.match.src = 1;
    rule.action = RuleAction::Modify;
    rule.xor_offset = 30;  // somewhere in the signed body
    auto b = make_bench(g, 2, 33);
    b->fabric->set_rules({rule});
    Drbg rng(4);
    Id16 req = test_key(9);
    Envelope env = raw_host_broadcast(*b, OpCode::RngShare, req, Bytes{0}, rng, 1);
    b->fabric->submit(env);
    b->fabric->run(8);
    // The host-side verification (run_round) is exercised in host tests;
    // here, verify directly that the tampered envelope no longer checks out.
    bool modified_seen = false;
    for (const auto& rec : b->fabric->transcript().records()) {
        if (rec.action != FabricAction::Modified) continue;
        modified_seen = true;
        Envelope tampered = Envelope::decode(rec.envelope);
        CHECK_FALSE(verify_envelope(g, tampered, b->directory.at(1)));
    }
    CHECK(modified_seen);
}

TEST_CASE("mutation fuzz corpus: every controller modification is detected") {
    // Curve backend: challenge scalars are 256 bits wide, so detection does
    // not hinge on the corpus dodging short-hash collisions.
    Group g = Group::p256();
    auto b = make_bench(g, 2, 34);
    Drbg rng(5);
    // an authentic node response to mutate
    Envelope probe = raw_host_broadcast(*b, OpCode::RngShare, test_key(8), Bytes{0}, rng, 1);
    b->fabric->submit(probe);
    b->fabric->run(8);
    auto inbox = b->fabric->take_host_inbox();
    REQUIRE(!inbox.empty());
    const Envelope authentic = inbox.front();
    REQUIRE(verify_envelope(g, authentic, b->directory.at(authentic.src)));

    Drbg fuzz(6);
    size_t detected = 0, total = 0;
    for (int i = 0; i < 200; ++i) {
        Bytes pos_bytes = fuzz.bytes(3);
        Envelope mutated = authentic;
        size_t pos = (pos_bytes[0] << 8 | pos_bytes[1]) % mutated.body.size();
        uint8_t mask = pos_bytes[2] ? pos_bytes[2] : 1;
        mutated.body[pos] ^= mask;
        ++total;
        bool env_sig_ok = verify_envelope(g, mutated, b->directory.at(mutated.src));
        bool resp_ok = false;
        if (env_sig_ok) {
            try {
                Response r = Response::decode(mutated.body);
                resp_ok = verify_response(g, r, b->directory.at(mutated.src));
            } catch (const EncodingError&) {
                resp_ok = false;
            }
        }
        if (!env_sig_ok || !resp_ok) ++detected;
    }
    CHECK(detected == total);
}

TEST_CASE("determinism: same seed gives byte-identical transcripts") {
    auto run_once = [] {
        Group g = Group::transparent(257);
        auto b = make_bench(g, 3, 77);
        Id16 key = test_key();
        REQUIRE(b->host->dkpg(b->quorum, key).status == OpStatus::Ok);
        Drbg erng(3);
        Element m = g.mul_gen(g.scalar_rand(erng));
        Ciphertext ct = encrypt(g, m, b->host->quorum_key("q1", key)->Y_agg, erng);
        REQUIRE(b->host->decrypt(b->quorum, key, ct).status == OpStatus::Ok);
        REQUIRE(b->host->gen_random(b->quorum, 16).status == OpStatus::Ok);
        return b->fabric->transcript().serialize();
    };
    Bytes t1 = run_once();
    Bytes t2 = run_once();
    CHECK(t1 == t2);

    // and a different seed diverges
    Group g = Group::transparent(257);
    auto b = make_bench(g, 3, 78);
    Id16 key = test_key();
    REQUIRE(b->host->dkpg(b->quorum, key).status == OpStatus::Ok);
    CHECK(b->fabric->transcript().serialize() != t1);
}

TEST_CASE("transcript serialization round-trips and renders") {
    Group g = Group::transparent(257);
    auto b = make_bench(g, 2, 35);
    Id16 key = test_key();
    REQUIRE(b->host->dkpg(b->quorum, key).status == OpStatus::Ok);
    const Transcript& tr = b->fabric->transcript();
    Bytes wire = tr.serialize();
    auto records = Transcript::parse(wire);
    REQUIRE(records.size() == tr.records().size());
    for (size_t i = 0; i < records.size(); ++i) {
        CHECK(records[i].slot == tr.records()[i].slot);
        CHECK(records[i].action == tr.records()[i].action);
        CHECK(records[i].envelope == tr.records()[i].envelope);
    }
    std::string log = tr.to_log();
    CHECK(log.find("KEYGEN_STORE_HASH") != std::string::npos);
    CHECK(log.find("deliver") != std::string::npos);
}

TEST_CASE("delay rule defers delivery by the configured slots") {
    Group g = Group::transparent(257);
    ControllerRule rule;
    rule.match.opcode = OpCode::RngShare;
    rule.match.kind = BodyKind::Command;
    rule.action = RuleAction::Delay;
    rule.delay_slots = 3;
    rule.max_hits = 1;
    auto b = make_bench(g, 1, 36);
    b->fabric->set_rules({rule});
    Drbg rng(7);
    Envelope env = raw_host_broadcast(*b, OpCode::RngShare, test_key(), Bytes{0}, rng, 1);
    b->fabric->submit(env);
    b->fabric->step();
    CHECK(b->fabric->take_host_inbox().empty());  // still in flight
    b->fabric->run(8);
    CHECK(b->fabric->take_host_inbox().size() == 1);
}

TEST_CASE("duplicate rule delivers twice and the replay guard holds") {
    Group g = Group::transparent(257);
    ControllerRule rule;
    rule.match.opcode = OpCode::SigShare;
    rule.match.kind = BodyKind::Command;
    rule.action = RuleAction::Duplicate;
    auto b = make_bench(g, 1, 37);
    b->fabric->set_rules({rule});
    Id16 key = test_key();
    REQUIRE(b->host->dkpg(b->quorum, key).status == OpStatus::Ok);
    REQUIRE(b->host->cache_nonces(b->quorum, key, 1, 2) == OpStatus::Ok);
    Bytes msg{'d', 'u', 'p'};
    SignResult r = b->host->sign(b->quorum, key, msg);
    CHECK(r.status == OpStatus::Ok);  // first delivery signs
    // the duplicated delivery must have been replay-rejected
    size_t rejected = 0;
    for (const auto& rec : b->fabric->transcript().records()) {
        if (rec.action == FabricAction::Delivered &&
            rec.handler_status == Status::ReplayRejected) {
            ++rejected;
        }
    }
    CHECK(rejected == 1);
}

TEST_SUITE_END();
