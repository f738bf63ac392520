#include "qhsm/scenario.hpp"

#include <json.hpp>

#include <algorithm>
#include <set>
#include <sstream>

#include "qhsm/errors.hpp"

namespace qhsm {

using nlohmann::json;

const char* outcome_name(Outcome o) {
    switch (o) {
        case Outcome::Success: return "success";
        case Outcome::Abort: return "abort";
        case Outcome::ForgeryDetected: return "forgery-detected";
        case Outcome::SecrecyViolated: return "secrecy-violated";
        case Outcome::SetupError: return "setup-error";
    }
    return "?";
}

Id16 key_handle_id(const std::string& handle) {
    Bytes d = sha3_256(Bytes(handle.begin(), handle.end()));
    Id16 id;
    std::copy(d.begin(), d.begin() + 16, id.begin());
    return id;
}

IcNode* World::ic(NodeId id) {
    for (auto& n : node_storage) {
        if (n->id() != id) continue;
        if (auto* honest = dynamic_cast<IcNode*>(n.get())) return honest;
        if (auto* mal = dynamic_cast<MaliciousNode*>(n.get())) return &mal->inner();
    }
    return nullptr;
}

MaliciousNode* World::malicious(NodeId id) {
    for (auto& n : node_storage) {
        if (n->id() == id) return dynamic_cast<MaliciousNode*>(n.get());
    }
    return nullptr;
}

std::unique_ptr<World> build_world(const Scenario& sc) {
    Group g = sc.backend == Backend::Curve ? Group::p256() : Group::transparent(sc.order);
    auto world = std::make_unique<World>(g);
    Drbg master(sc.seed);

    std::set<NodeId> ids;
    std::set<std::string> quorum_ids;
    for (const QuorumSpec& qs : sc.quorums) {
        if (!quorum_ids.insert(qs.id).second) throw Error("duplicate quorum id: " + qs.id);
        for (NodeId m : qs.members) {
            if (m == 0 || m >= kHostId) throw Error("node ids must be in [1, 0xFFFD]");
            ids.insert(m);
        }
        world->quorums[qs.id] = QuorumConfig{qs.id, qs.members, qs.threshold_k, qs.vendors};
    }
    if (ids.empty()) throw Error("scenario defines no nodes");

    Drbg ident_rng = master.fork("host-identity");
    world->host_ident = HostIdentity::generate(g, ident_rng);

    Drbg prov_rng = master.fork("provision");
    std::vector<NodeId> id_list(ids.begin(), ids.end());
    auto provisioning =
        make_provisioning(g, id_list, {world->host_ident.acl_entry()}, prov_rng);

    world->fabric = std::make_unique<Fabric>(g, sc.seed);
    world->fabric->set_rules(sc.adversary.rules);

    // The aggregate key a rogue-key attacker tries to steer the quorum to:
    // one whose discrete log the adversary knows.
    Drbg target_rng = master.fork("rogue-target");
    world->rogue_target = g.mul_gen(g.scalar_rand(target_rng));

    for (NodeId id : id_list) {
        Drbg node_rng = master.fork("node/" + std::to_string(id));
        const NodeProvision& prov = provisioning.at(id);
        auto attack = sc.adversary.malicious.find(id);
        if (attack != sc.adversary.malicious.end()) {
            NodeAttackSpec spec = attack->second;
            if (spec.kind == NodeAttack::RogueKeyCraft && !spec.rogue_target) {
                spec.rogue_target = world->rogue_target;
            }
            auto node = std::make_unique<MaliciousNode>(
                id, std::make_unique<Drbg>(std::move(node_rng)), spec);
            node->inner().provision(prov);
            world->fabric->set_compromised(id, prov.identity_secret);
            world->fabric->attach(node.get());
            world->node_storage.push_back(std::move(node));
        } else {
            auto node = std::make_unique<IcNode>(id, std::make_unique<Drbg>(std::move(node_rng)));
            node->provision(prov);
            world->fabric->attach(node.get());
            world->node_storage.push_back(std::move(node));
        }
        world->directory[id] = prov.certificate.pub;
    }

    HostConfig hc;
    hc.seal_responses = sc.seal_responses;
    hc.require_dec_proofs = sc.require_dec_proofs;
    world->host = std::make_unique<Host>(g, *world->fabric, world->host_ident,
                                         world->directory, master.fork("host-ops"), hc);
    return world;
}

namespace {

Outcome outcome_for(OpStatus st) {
    switch (st) {
        case OpStatus::Ok: return Outcome::Success;
        case OpStatus::VerifyFailed:
        case OpStatus::BadSignature:
        case OpStatus::ShareProofFailure:
        case OpStatus::InconsistentShare: return Outcome::ForgeryDetected;
        case OpStatus::SetupError: return Outcome::SetupError;
        default: return Outcome::Abort;
    }
}

struct CipherRecord {
    Bytes plaintext;
    std::vector<Ciphertext> blocks;
};

}  // namespace

ScenarioResult run_script(World& world, const Scenario& sc) {
    ScenarioResult res;
    std::map<std::string, CipherRecord> ciphers;
    std::map<std::string, uint64_t> next_j;
    std::map<std::string, uint64_t> last_j;
    Outcome outcome = Outcome::Success;
    std::string reason = "all operations completed";

    auto fail = [&](OpStatus st, const std::string& what, const std::string& detail) {
        outcome = outcome_for(st);
        reason = what + ": " + op_status_name(st) + (detail.empty() ? "" : " (" + detail + ")");
    };

    for (const ScriptOp& op : sc.script) {
        auto q_it = world.quorums.find(op.quorum);
        if (q_it == world.quorums.end()) {
            outcome = Outcome::SetupError;
            reason = "unknown quorum: " + op.quorum;
            break;
        }
        const QuorumConfig& q = q_it->second;
        const Id16 key_id = key_handle_id(op.key);

        if (op.op == "keygen") {
            DkpgResult r = world.host->dkpg(q, key_id);
            if (r.status != OpStatus::Ok) {
                fail(r.status, "keygen", r.detail);
                break;
            }
        } else if (op.op == "encrypt") {
            const QuorumKey* key = world.host->quorum_key(q.quorum_id, key_id);
            if (key == nullptr) {
                outcome = Outcome::SetupError;
                reason = "encrypt before keygen";
                break;
            }
            CipherRecord rec;
            rec.plaintext = from_hex(op.message_hex.empty() ? "00112233" : op.message_hex);
            Drbg enc_rng = Drbg(sc.seed).fork("encrypt/" + op.key);
            for (const Element& m : elements_from_bytes(world.group, rec.plaintext)) {
                rec.blocks.push_back(encrypt(world.group, m, key->Y_agg, enc_rng));
            }
            ciphers[op.key] = std::move(rec);
        } else if (op.op == "decrypt") {
            auto c_it = ciphers.find(op.key);
            if (c_it == ciphers.end()) {
                outcome = Outcome::SetupError;
                reason = "decrypt before encrypt";
                break;
            }
            std::vector<Element> elems;
            OpStatus st = OpStatus::Ok;
            std::string detail;
            for (const Ciphertext& ct : c_it->second.blocks) {
                DecryptResult r = world.host->decrypt(q, key_id, ct);
                if (r.status != OpStatus::Ok) {
                    st = r.status;
                    detail = r.detail;
                    break;
                }
                elems.push_back(r.plaintext);
            }
            if (st != OpStatus::Ok) {
                fail(st, "decrypt", detail);
                break;
            }
            Bytes recovered;
            bool mismatch = false;
            try {
                recovered = bytes_from_elements(world.group, elems,
                                                c_it->second.plaintext.size());
            } catch (const EncodingError&) {
                mismatch = true;
            }
            if (mismatch || recovered != c_it->second.plaintext) {
                outcome = Outcome::Abort;
                reason = "decrypt: plaintext-mismatch";
                break;
            }
        } else if (op.op == "cache") {
            OpStatus st = world.host->cache_nonces(q, key_id, op.j_start, op.count);
            next_j[op.key] = std::max(next_j[op.key], op.j_start + op.count);
            if (st != OpStatus::Ok) {
                fail(st, "cache", "");
                break;
            }
        } else if (op.op == "sign" || op.op == "sign-reuse") {
            Bytes msg = from_hex(op.message_hex.empty() ? "abad1dea" : op.message_hex);
            SignResult r;
            if (op.op == "sign-reuse") {
                uint64_t j = last_j.count(op.key) ? last_j[op.key] : 1;
                r = world.host->sign_with_index(q, key_id, msg, j);
            } else {
                if (world.host->nonce_cache(q.quorum_id, key_id) == nullptr) {
                    uint64_t start = std::max<uint64_t>(1, next_j[op.key]);
                    OpStatus cst = world.host->cache_nonces(q, key_id, start, 8);
                    next_j[op.key] = start + 8;
                    if (cst != OpStatus::Ok) {
                        fail(cst, "cache", "");
                        break;
                    }
                }
                r = world.host->sign(q, key_id, msg);
                if (r.status == OpStatus::Ok) last_j[op.key] = r.sig.j;
            }
            if (r.status != OpStatus::Ok) {
                fail(r.status, op.op, r.detail);
                break;
            }
        } else if (op.op == "rng") {
            RngResult r = world.host->gen_random(q, op.length);
            if (r.status != OpStatus::Ok) {
                fail(r.status, "rng", r.detail);
                break;
            }
        } else if (op.op == "propagate") {
            auto to_it = world.quorums.find(op.to_quorum);
            if (to_it == world.quorums.end()) {
                outcome = Outcome::SetupError;
                reason = "unknown target quorum: " + op.to_quorum;
                break;
            }
            PropagateResult r = world.host->propagate(q, to_it->second, key_id);
            if (r.status != OpStatus::Ok) {
                fail(r.status, "propagate", r.detail);
                break;
            }
        } else {
            outcome = Outcome::SetupError;
            reason = "unknown script op: " + op.op;
            break;
        }
    }

    // Post-run posterior oracle.
    SecrecyReport secrecy;
    bool secrecy_ran = false;
    if (outcome != Outcome::SetupError && sc.secrecy_honest_node) {
        secrecy = secrecy_posterior(world, *sc.secrecy_honest_node,
                                    key_handle_id(sc.secrecy_key));
        secrecy_ran = true;
        if (!secrecy.uniform && !secrecy.recovered) {
            outcome = Outcome::SecrecyViolated;
            reason = "posterior over the honest share is not uniform";
        } else if (secrecy.recovered && world.malicious(*sc.secrecy_honest_node) == nullptr) {
            outcome = Outcome::SecrecyViolated;
            reason = "adversary view pins the honest share";
        }
    }

    res.outcome = outcome;
    res.reason = reason;
    res.transcript_bytes = world.fabric->transcript().serialize();
    res.transcript_log = world.fabric->transcript().to_log();

    json summary;
    summary["outcome"] = outcome_name(outcome);
    summary["reason"] = reason;
    summary["seed"] = sc.seed;
    summary["slots"] = world.fabric->slot();
    summary["transcript_records"] = world.fabric->transcript().size();
    summary["transcript_sha3"] = to_hex(sha3_256(res.transcript_bytes));
    if (secrecy_ran) {
        summary["secrecy"] = {{"candidates", secrecy.candidate_count},
                              {"uniform", secrecy.uniform},
                              {"recovered", secrecy.recovered}};
    }
    res.summary_json = summary.dump(2);
    return res;
}

ScenarioResult run_scenario(const Scenario& sc) {
    std::unique_ptr<World> world;
    try {
        world = build_world(sc);
    } catch (const Error& e) {
        ScenarioResult res;
        res.outcome = Outcome::SetupError;
        res.reason = e.what();
        res.summary_json = json{{"outcome", "setup-error"}, {"reason", e.what()}}.dump(2);
        return res;
    }
    return run_script(*world, sc);
}

// --- posterior oracle ---

SecrecyReport enumerate_posterior(const Group& g,
                                  const std::vector<ScalarObservation>& obs,
                                  const mpz_class& malicious_share_sum,
                                  bool honest_node_exists) {
    SecrecyReport rep;
    const mpz_class& n = g.order();
    if (n > 100000) throw Error("posterior enumeration needs a small transparent group");
    if (!honest_node_exists) {
        rep.candidate_count = 1;
        rep.recovered = true;
        rep.recovered_x = malicious_share_sum % n;
        rep.uniform = false;
        return rep;
    }
    const unsigned long order = n.get_ui();
    mpz_class only_candidate = -1;
    for (unsigned long cand = 0; cand < order; ++cand) {
        // Candidate is consistent iff one nonce value per index explains
        // every observed share equation sigma = r_j - x * eps.
        std::map<uint64_t, mpz_class> nonce;
        bool ok = true;
        for (const ScalarObservation& ob : obs) {
            mpz_class r = (ob.sigma + cand * ob.eps) % n;
            auto it = nonce.find(ob.j);
            if (it == nonce.end()) {
                nonce.emplace(ob.j, r);
            } else if (it->second != r) {
                ok = false;
                break;
            }
        }
        if (ok) {
            ++rep.candidate_count;
            only_candidate = cand;
        }
    }
    rep.uniform = rep.candidate_count == order;
    if (rep.candidate_count == 1) {
        rep.recovered = true;
        rep.recovered_x = (malicious_share_sum + only_candidate) % n;
    }
    return rep;
}

std::vector<ScalarObservation> extract_sign_observations(const Group& g,
                                                         const Transcript& tr,
                                                         NodeId honest_node) {
    std::vector<uint64_t> requests;
    std::vector<std::pair<mpz_class, mpz_class>> replies;
    const size_t w = g.scalar_size();
    for (const TranscriptRecord& rec : tr.records()) {
        if (rec.action != FabricAction::Delivered) continue;
        Envelope env;
        try {
            env = Envelope::decode(rec.envelope);
        } catch (const EncodingError&) {
            continue;
        }
        if (env.kind == BodyKind::Command && rec.handled_by == honest_node) {
            try {
                Command cmd = Command::decode(env.body);
                if (cmd.opcode == OpCode::SigShare) {
                    requests.push_back(decode_sig_share(g, cmd.payload).j);
                }
            } catch (const EncodingError&) {
            }
        } else if (env.kind == BodyKind::Response && env.src == honest_node &&
                   rec.handled_by == kHostId) {
            try {
                Response r = Response::decode(env.body);
                if (r.opcode != OpCode::SigShare) continue;
                if (r.status != Status::Ok) {
                    replies.emplace_back(-1, -1);  // placeholder, keeps pairing aligned
                    continue;
                }
                Scalar sigma = g.decode_scalar(ByteView(r.payload).subspan(0, w));
                Scalar eps = g.decode_scalar(ByteView(r.payload).subspan(w, w));
                replies.emplace_back(sigma.v, eps.v);
            } catch (const EncodingError&) {
            }
        }
    }
    std::vector<ScalarObservation> obs;
    for (size_t i = 0; i < requests.size() && i < replies.size(); ++i) {
        if (replies[i].first < 0) continue;  // rejected request produced no share
        obs.push_back(ScalarObservation{requests[i], replies[i].first, replies[i].second});
    }
    return obs;
}

SecrecyReport secrecy_posterior(World& world, NodeId honest_node, const Id16& key_id) {
    const Group& g = world.group;
    std::vector<ScalarObservation> obs =
        extract_sign_observations(g, world.fabric->transcript(), honest_node);
    mpz_class mal_sum = 0;
    for (auto& n : world.node_storage) {
        auto* mal = world.malicious(n->id());
        if (mal == nullptr) continue;
        const KeySlot* slot = mal->inner().key_slot(key_id);
        if (slot != nullptr) mal_sum += slot->x.v;
    }
    bool honest_exists = world.malicious(honest_node) == nullptr;
    return enumerate_posterior(g, obs, mal_sum, honest_exists);
}

// --- JSON parsing ---

namespace {

[[noreturn]] void schema_error(const std::string& path, const std::string& what) {
    throw Error("scenario schema: " + path + ": " + what);
}

OpCode opcode_from_name(const std::string& name, const std::string& path) {
    static const std::map<std::string, OpCode> table = {
        {"KEYGEN_INIT", OpCode::KeygenInit},
        {"KEYGEN_STORE_HASH", OpCode::KeygenStoreHash},
        {"KEYGEN_STORE_PUBKEY", OpCode::KeygenStorePubkey},
        {"KEYGEN_FINALIZE", OpCode::KeygenFinalize},
        {"DEC_SHARE", OpCode::DecShare},
        {"CACHE_NONCE", OpCode::CacheNonce},
        {"SIG_SHARE", OpCode::SigShare},
        {"RNG_SHARE", OpCode::RngShare},
        {"KEYPROP_INSTALL", OpCode::KeypropInstall},
        {"KEYPROP_SPLIT", OpCode::KeypropSplit},
        {"KEYPROP_SHARE", OpCode::KeypropShare},
        {"KEYPROP_FINALIZE", OpCode::KeypropFinalize},
    };
    auto it = table.find(name);
    if (it == table.end()) schema_error(path, "unknown opcode '" + name + "'");
    return it->second;
}

NodeAttack attack_from_name(const std::string& name, const std::string& path) {
    static const std::map<std::string, NodeAttack> table = {
        {"none", NodeAttack::None},
        {"rogue-key-withhold", NodeAttack::RogueKeyWithhold},
        {"rogue-key-craft", NodeAttack::RogueKeyCraft},
        {"tamper-dec-share", NodeAttack::TamperDecShare},
        {"wrong-finalize", NodeAttack::WrongFinalize},
        {"garbage-sig-share", NodeAttack::GarbageSigShare},
        {"refuse-op", NodeAttack::RefuseOp},
    };
    auto it = table.find(name);
    if (it == table.end()) schema_error(path, "unknown attack '" + name + "'");
    return it->second;
}

RuleAction action_from_name(const std::string& name, const std::string& path) {
    static const std::map<std::string, RuleAction> table = {
        {"drop", RuleAction::Drop},         {"modify", RuleAction::Modify},
        {"duplicate", RuleAction::Duplicate}, {"delay", RuleAction::Delay},
        {"inject", RuleAction::Inject},
    };
    auto it = table.find(name);
    if (it == table.end()) schema_error(path, "unknown rule action '" + name + "'");
    return it->second;
}

}  // namespace

Scenario scenario_from_json(const std::string& text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw Error(std::string("scenario parse error: ") + e.what());
    }
    Scenario sc;
    if (!doc.is_object()) schema_error("$", "document must be an object");
    if (!doc.contains("seed") || !doc["seed"].is_number_unsigned()) {
        schema_error("seed", "required unsigned integer (runs must be reproducible)");
    }
    sc.seed = doc["seed"].get<uint64_t>();
    std::string backend = doc.value("backend", "transparent");
    if (backend == "curve") {
        sc.backend = Backend::Curve;
    } else if (backend == "transparent") {
        sc.backend = Backend::Transparent;
    } else {
        schema_error("backend", "must be 'curve' or 'transparent'");
    }
    sc.order = doc.value("order", static_cast<uint64_t>(257));
    sc.seal_responses = doc.value("seal_responses", true);
    sc.require_dec_proofs = doc.value("require_dec_proofs", false);

    if (!doc.contains("quorums") || !doc["quorums"].is_array() || doc["quorums"].empty()) {
        schema_error("quorums", "required nonempty array");
    }
    size_t qi = 0;
    for (const json& jq : doc["quorums"]) {
        std::string path = "quorums[" + std::to_string(qi++) + "]";
        QuorumSpec qs;
        if (!jq.contains("id") || !jq["id"].is_string()) schema_error(path + ".id", "required string");
        qs.id = jq["id"].get<std::string>();
        if (!jq.contains("members") || !jq["members"].is_array() || jq["members"].empty()) {
            schema_error(path + ".members", "required nonempty array of node ids");
        }
        for (const json& m : jq["members"]) {
            if (!m.is_number_unsigned()) schema_error(path + ".members", "node ids must be unsigned");
            qs.members.push_back(m.get<NodeId>());
        }
        qs.threshold_k = jq.value("k", static_cast<uint16_t>(qs.members.size()));
        if (qs.threshold_k != qs.members.size()) {
            schema_error(path + ".k", "only k == quorum size is supported");
        }
        if (jq.contains("vendors")) {
            for (auto& [node, vendor] : jq["vendors"].items()) {
                qs.vendors[static_cast<NodeId>(std::stoul(node))] = vendor.get<std::string>();
            }
        }
        sc.quorums.push_back(std::move(qs));
    }

    if (doc.contains("adversary")) {
        const json& ja = doc["adversary"];
        sc.adversary.collusion_channel = ja.value("collusion", true);
        if (ja.contains("malicious")) {
            size_t mi = 0;
            for (const json& jm : ja["malicious"]) {
                std::string path = "adversary.malicious[" + std::to_string(mi++) + "]";
                if (!jm.contains("node")) schema_error(path + ".node", "required");
                NodeId node = jm["node"].get<NodeId>();
                NodeAttackSpec spec;
                spec.kind = attack_from_name(jm.value("attack", "none"), path + ".attack");
                if (jm.contains("refuse_opcode")) {
                    spec.refuse_opcode = opcode_from_name(jm["refuse_opcode"].get<std::string>(),
                                                          path + ".refuse_opcode");
                }
                sc.adversary.malicious[node] = spec;
            }
        }
        if (ja.contains("rules")) {
            size_t ri = 0;
            for (const json& jr : ja["rules"]) {
                std::string path = "adversary.rules[" + std::to_string(ri++) + "]";
                ControllerRule rule;
                if (!jr.contains("action")) schema_error(path + ".action", "required");
                rule.action = action_from_name(jr["action"].get<std::string>(), path + ".action");
                if (jr.contains("match")) {
                    const json& jm = jr["match"];
                    if (jm.contains("opcode")) {
                        rule.match.opcode =
                            opcode_from_name(jm["opcode"].get<std::string>(), path + ".match.opcode");
                    }
                    if (jm.contains("kind")) {
                        std::string k = jm["kind"].get<std::string>();
                        if (k == "command") {
                            rule.match.kind = BodyKind::Command;
                        } else if (k == "response") {
                            rule.match.kind = BodyKind::Response;
                        } else {
                            schema_error(path + ".match.kind", "must be 'command' or 'response'");
                        }
                    }
                    if (jm.contains("src")) rule.match.src = jm["src"].get<NodeId>();
                    if (jm.contains("dst")) rule.match.dst = jm["dst"].get<NodeId>();
                    if (jm.contains("min_slot")) rule.match.min_slot = jm["min_slot"].get<uint64_t>();
                    if (jm.contains("max_slot")) rule.match.max_slot = jm["max_slot"].get<uint64_t>();
                }
                rule.delay_slots = jr.value("delay", 1u);
                rule.max_hits = jr.value("max_hits", UINT32_MAX);
                if (jr.contains("xor_offset")) rule.xor_offset = jr["xor_offset"].get<size_t>();
                rule.xor_value = jr.value("xor_value", 1);
                if (jr.contains("replace_payload_hex")) {
                    rule.replace_payload = from_hex(jr["replace_payload_hex"].get<std::string>());
                }
                sc.adversary.rules.push_back(std::move(rule));
            }
        }
    }

    if (!doc.contains("script") || !doc["script"].is_array()) {
        schema_error("script", "required array");
    }
    size_t si = 0;
    for (const json& jo : doc["script"]) {
        std::string path = "script[" + std::to_string(si++) + "]";
        ScriptOp op;
        if (!jo.contains("op") || !jo["op"].is_string()) schema_error(path + ".op", "required string");
        op.op = jo["op"].get<std::string>();
        op.quorum = jo.value("quorum", sc.quorums.front().id);
        op.to_quorum = jo.value("to_quorum", "");
        op.key = jo.value("key", "key");
        op.message_hex = jo.value("message_hex", "");
        op.length = jo.value("length", 32u);
        op.j_start = jo.value("j_start", static_cast<uint64_t>(1));
        op.count = jo.value("count", static_cast<uint16_t>(8));
        sc.script.push_back(std::move(op));
    }

    if (doc.contains("costs")) {
        const json& jc = doc["costs"];
        CostTable& c = sc.costs;
        c.keygen_init_ms = jc.value("keygen_init_ms", c.keygen_init_ms);
        c.store_hash_ms = jc.value("store_hash_ms", c.store_hash_ms);
        c.store_pubkey_ms = jc.value("store_pubkey_ms", c.store_pubkey_ms);
        c.keygen_finalize_ms = jc.value("keygen_finalize_ms", c.keygen_finalize_ms);
        c.decrypt_ms = jc.value("decrypt_ms", c.decrypt_ms);
        c.sign_ms = jc.value("sign_ms", c.sign_ms);
        c.cache_ms = jc.value("cache_ms", c.cache_ms);
        c.rng_ms = jc.value("rng_ms", c.rng_ms);
        c.keyprop_ms = jc.value("keyprop_ms", c.keyprop_ms);
        c.bus_ms = jc.value("bus_ms", c.bus_ms);
    }

    if (doc.contains("secrecy_check")) {
        const json& js = doc["secrecy_check"];
        if (!js.contains("honest_node")) schema_error("secrecy_check.honest_node", "required");
        if (sc.backend != Backend::Transparent) {
            schema_error("secrecy_check", "posterior enumeration requires the transparent backend");
        }
        sc.secrecy_honest_node = js["honest_node"].get<NodeId>();
        sc.secrecy_key = js.value("key", "key");
    }
    return sc;
}

}  // namespace qhsm
