// Operator CLI: emulated-device lifecycle (keygen, encrypt, decrypt, sign,
// verify, rng, propagate), adversarial scenario runs, reliability estimates
// and the desk-scale performance model.

#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

#include "qhsm/bench.hpp"
#include "qhsm/elgamal.hpp"
#include "qhsm/errors.hpp"
#include "qhsm/scenario.hpp"
#include "qhsm/tolerance.hpp"

using namespace qhsm;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

// ---------------------------------------------------------------------------
// keystore: persisted emulation state (device flash + operator bookkeeping)
// ---------------------------------------------------------------------------

struct NodeState {
    NodeId node = 0;
    std::string x_hex;
    std::string prf_secret_hex;
    uint64_t j_hwm = 0;
    std::vector<uint64_t> j_window;
};

struct Keystore {
    std::string backend = "transparent";
    uint64_t order = 257;
    uint64_t seed = 1;
    QuorumConfig quorum;
    Id16 key_id{};
    std::string y_agg_hex;
    std::map<NodeId, std::string> share_hex;
    std::vector<NodeState> nodes;
    uint64_t next_j = 1;

    Group group() const {
        return backend == "curve" ? Group::p256() : Group::transparent(order);
    }
};

json keystore_to_json(const Keystore& ks) {
    json j;
    j["backend"] = ks.backend;
    j["order"] = ks.order;
    j["seed"] = ks.seed;
    j["quorum"] = {{"id", ks.quorum.quorum_id},
                   {"members", ks.quorum.members},
                   {"k", ks.quorum.threshold_k}};
    json vendors = json::object();
    for (auto& [id, v] : ks.quorum.vendors) vendors[std::to_string(id)] = v;
    j["quorum"]["vendors"] = vendors;
    j["key_id"] = id_to_hex(ks.key_id);
    j["y_agg"] = ks.y_agg_hex;
    json shares = json::object();
    for (auto& [id, hex] : ks.share_hex) shares[std::to_string(id)] = hex;
    j["shares"] = shares;
    j["next_j"] = ks.next_j;
    // Emulated per-IC flash contents. A real deployment never exports these;
    // the emulator persists them so separate CLI invocations continue from
    // the same device state.
    json nodes = json::array();
    for (const NodeState& n : ks.nodes) {
        nodes.push_back({{"node", n.node},
                         {"x", n.x_hex},
                         {"prf_secret", n.prf_secret_hex},
                         {"j_hwm", n.j_hwm},
                         {"j_window", n.j_window}});
    }
    j["node_states"] = nodes;
    return j;
}

Keystore keystore_from_json(const json& j) {
    Keystore ks;
    ks.backend = j.at("backend").get<std::string>();
    ks.order = j.value("order", static_cast<uint64_t>(257));
    ks.seed = j.at("seed").get<uint64_t>();
    ks.quorum.quorum_id = j.at("quorum").at("id").get<std::string>();
    ks.quorum.members = j.at("quorum").at("members").get<std::vector<NodeId>>();
    ks.quorum.threshold_k = j.at("quorum").at("k").get<uint16_t>();
    if (j.at("quorum").contains("vendors")) {
        for (auto& [id, v] : j.at("quorum").at("vendors").items()) {
            ks.quorum.vendors[static_cast<NodeId>(std::stoul(id))] = v.get<std::string>();
        }
    }
    ks.key_id = id_from_hex(j.at("key_id").get<std::string>());
    ks.y_agg_hex = j.at("y_agg").get<std::string>();
    for (auto& [id, hex] : j.at("shares").items()) {
        ks.share_hex[static_cast<NodeId>(std::stoul(id))] = hex.get<std::string>();
    }
    ks.next_j = j.value("next_j", static_cast<uint64_t>(1));
    for (const json& n : j.at("node_states")) {
        NodeState st;
        st.node = n.at("node").get<NodeId>();
        st.x_hex = n.at("x").get<std::string>();
        st.prf_secret_hex = n.at("prf_secret").get<std::string>();
        st.j_hwm = n.value("j_hwm", static_cast<uint64_t>(0));
        st.j_window = n.value("j_window", std::vector<uint64_t>{});
        ks.nodes.push_back(std::move(st));
    }
    return ks;
}

void save_keystore(const Keystore& ks, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write keystore: " + path);
    out << keystore_to_json(ks).dump(2) << "\n";
}

Keystore load_keystore(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot read keystore: " + path);
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw Error(std::string("keystore parse error: ") + e.what());
    }
    return keystore_from_json(j);
}

// ---------------------------------------------------------------------------
// deterministic device fleet keyed by (seed, node id)
// ---------------------------------------------------------------------------

struct CliWorld {
    Group group;
    std::unique_ptr<Fabric> fabric;
    std::vector<std::unique_ptr<IcNode>> nodes;
    std::map<NodeId, Element> directory;
    HostIdentity ident;
    std::unique_ptr<Host> host;

    explicit CliWorld(Group g) : group(std::move(g)) {}
    IcNode* ic(NodeId id) {
        for (auto& n : nodes) {
            if (n->id() == id) return n.get();
        }
        return nullptr;
    }
};

/// Provisions a fleet. Node identities derive from per-node forks so a fleet
/// can grow (propagation targets) without disturbing existing identities.
std::unique_ptr<CliWorld> build_cli_world(const Group& g, uint64_t seed,
                                          const std::vector<NodeId>& ids) {
    auto w = std::make_unique<CliWorld>(g);
    Drbg master(seed);
    Drbg ident_rng = master.fork("host-identity");
    w->ident = HostIdentity::generate(g, ident_rng);
    std::map<NodeId, Scalar> identity_secrets;
    for (NodeId id : ids) {
        Drbg r = master.fork("node-identity/" + std::to_string(id));
        identity_secrets.emplace(id, g.scalar_rand(r));
        w->directory[id] = g.mul_gen(identity_secrets.at(id));
    }
    w->fabric = std::make_unique<Fabric>(g, seed);
    for (NodeId id : ids) {
        NodeProvision prov{g,
                           {w->ident.acl_entry()},
                           w->directory,
                           identity_secrets.at(id),
                           Certificate{w->directory.at(id), "factory"}};
        auto node = std::make_unique<IcNode>(
            id, std::make_unique<Drbg>(master.fork("node/" + std::to_string(id))));
        node->provision(prov);
        w->fabric->attach(node.get());
        w->nodes.push_back(std::move(node));
    }
    w->host = std::make_unique<Host>(g, *w->fabric, w->ident, w->directory,
                                     master.fork("host-ops"), HostConfig{});
    return w;
}

/// Rebuilds the fleet from a keystore and loads the persisted key slots.
std::unique_ptr<CliWorld> restore_world(const Keystore& ks,
                                        const std::vector<NodeId>& extra_ids = {}) {
    Group g = ks.group();
    std::vector<NodeId> ids = ks.quorum.members;
    for (NodeId id : extra_ids) ids.push_back(id);
    auto w = build_cli_world(g, ks.seed, ids);
    Element y_agg = g.decode_element(from_hex(ks.y_agg_hex));
    QuorumKey key;
    key.quorum_id = ks.quorum.quorum_id;
    key.threshold_k = ks.quorum.threshold_k;
    key.size_t_ = ks.quorum.size();
    key.Y_agg = y_agg;
    for (auto& [id, hex] : ks.share_hex) {
        key.shares[id] = g.decode_element(from_hex(hex));
    }
    w->host->install_key(ks.quorum.quorum_id, ks.key_id, key);
    for (const NodeState& st : ks.nodes) {
        IcNode* node = w->ic(st.node);
        if (node == nullptr) throw Error("keystore names an unknown node");
        KeySlot slot;
        slot.x = g.decode_scalar(from_hex(st.x_hex));
        slot.Y_own = g.mul_gen(slot.x);
        slot.Y_agg = y_agg;
        slot.prf_secret = from_hex(st.prf_secret_hex);
        slot.ledger.restore(st.j_hwm,
                            std::set<uint64_t>(st.j_window.begin(), st.j_window.end()));
        node->restore_key_slot(ks.key_id, std::move(slot));
    }
    return w;
}

void persist_node_states(Keystore& ks, CliWorld& w) {
    ks.nodes.clear();
    for (NodeId id : ks.quorum.members) {
        const KeySlot* slot = w.ic(id)->key_slot(ks.key_id);
        if (slot == nullptr) throw Error("node lost its key slot");
        NodeState st;
        st.node = id;
        st.x_hex = to_hex(w.group.encode(slot->x));
        st.prf_secret_hex = to_hex(slot->prf_secret);
        st.j_hwm = slot->ledger.high_water_mark();
        st.j_window.assign(slot->ledger.window().begin(), slot->ledger.window().end());
        ks.nodes.push_back(std::move(st));
    }
}

Bytes message_bytes(const std::string& text, const std::string& hex) {
    if (!hex.empty()) return from_hex(hex);
    return Bytes(text.begin(), text.end());
}

void write_file(const fs::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write " + path.string());
    out << content;
}

void write_file(const fs::path& path, const Bytes& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write " + path.string());
    out.write(reinterpret_cast<const char*>(content.data()),
              static_cast<std::streamsize>(content.size()));
}

int op_status_exit(OpStatus st) { return st == OpStatus::Ok ? 0 : 2; }

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"quorum-of-untrusted-ICs cryptographic module emulator"};
    app.require_subcommand(1);

    uint64_t seed = 1;
    std::string backend = "transparent";
    uint64_t order = 257;
    std::string out_dir;
    app.add_option("--seed", seed, "deterministic run seed");
    app.add_option("--backend", backend, "group backend: curve | transparent")
        ->check(CLI::IsMember({"curve", "transparent"}));
    app.add_option("--order", order, "transparent group order (prime, < 2^32)");
    app.add_option("--out", out_dir, "directory for output artifacts");

    // keygen
    auto* keygen = app.add_subcommand("keygen", "distributed key generation");
    uint16_t kg_t = 3;
    std::string kg_keystore = "keystore.json";
    std::vector<std::string> kg_vendors;
    keygen->add_option("--t", kg_t, "quorum size (= secrecy threshold)");
    keygen->add_option("--keystore", kg_keystore, "keystore output path");
    keygen->add_option("--vendor", kg_vendors, "vendor label per member, in order");

    // encrypt
    auto* enc = app.add_subcommand("encrypt", "encrypt under the quorum public key");
    std::string enc_keystore = "keystore.json", enc_msg, enc_msg_hex, enc_out = "ciphertext.json";
    enc->add_option("--keystore", enc_keystore, "keystore path");
    enc->add_option("--message", enc_msg, "plaintext (text)");
    enc->add_option("--message-hex", enc_msg_hex, "plaintext (hex)");
    enc->add_option("--ciphertext", enc_out, "ciphertext output path");

    // decrypt
    auto* dec = app.add_subcommand("decrypt", "distributed decryption");
    std::string dec_keystore = "keystore.json", dec_ct = "ciphertext.json";
    bool dec_proofs = false;
    dec->add_option("--keystore", dec_keystore, "keystore path");
    dec->add_option("--ciphertext", dec_ct, "ciphertext path");
    dec->add_flag("--proofs", dec_proofs, "require decryption-share proofs");

    // sign
    auto* sign_cmd = app.add_subcommand("sign", "distributed signature");
    std::string sg_keystore = "keystore.json", sg_msg, sg_msg_hex;
    sign_cmd->add_option("--keystore", sg_keystore, "keystore path");
    sign_cmd->add_option("--message", sg_msg, "message (text)");
    sign_cmd->add_option("--message-hex", sg_msg_hex, "message (hex)");

    // verify
    auto* ver = app.add_subcommand("verify", "verify an aggregate signature");
    std::string vf_keystore = "keystore.json", vf_msg, vf_msg_hex, vf_sig;
    ver->add_option("--keystore", vf_keystore, "keystore path");
    ver->add_option("--message", vf_msg, "message (text)");
    ver->add_option("--message-hex", vf_msg_hex, "message (hex)");
    ver->add_option("--signature", vf_sig, "signature hex")->required();

    // rng
    auto* rng_cmd = app.add_subcommand("rng", "distributed randomness");
    std::string rng_keystore = "keystore.json";
    size_t rng_len = 32;
    rng_cmd->add_option("--keystore", rng_keystore, "keystore path");
    rng_cmd->add_option("--length", rng_len, "output length in bytes");

    // propagate
    auto* prop = app.add_subcommand("propagate", "re-share a key to a second quorum");
    std::string pr_keystore = "keystore.json", pr_out_keystore = "keystore2.json";
    uint16_t pr_to_size = 2;
    prop->add_option("--keystore", pr_keystore, "source keystore path");
    prop->add_option("--to-size", pr_to_size, "target quorum size");
    prop->add_option("--out-keystore", pr_out_keystore, "target keystore path");

    // tolerance
    auto* tol = app.add_subcommand("tolerance", "reliability estimate and tolerance matrix");
    double tol_p = 0.1;
    unsigned tol_k = 3, tol_t = 3, tol_n = 1;
    tol->add_option("--p", tol_p, "independent per-source error probability");
    tol->add_option("--k", tol_k, "number of independent sources");
    tol->add_option("--t", tol_t, "quorum size for the matrix rows");
    tol->add_option("--quorums", tol_n, "replicated quorum count");

    // run
    auto* run = app.add_subcommand("run", "execute a scenario file");
    std::string run_path;
    run->add_option("scenario", run_path, "scenario JSON path")->required();

    // bench
    auto* bench = app.add_subcommand("bench", "desk-scale performance model");
    std::vector<uint16_t> bench_sizes{1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
    std::vector<unsigned> bench_counts{1, 2, 3, 4, 5, 6, 7, 8};
    bench->add_option("--sizes", bench_sizes, "quorum sizes to model");
    bench->add_option("--counts", bench_counts, "quorum counts to model");

    // Global flags may appear after the subcommand name.
    for (CLI::App* sub : app.get_subcommands({})) sub->fallthrough();

    CLI11_PARSE(app, argc, argv);

    try {
        if (!out_dir.empty()) fs::create_directories(out_dir);

        if (*keygen) {
            if (kg_t < 1 || kg_t > 64) throw Error("quorum size must be in [1, 64]");
            Group g = backend == "curve" ? Group::p256() : Group::transparent(order);
            std::vector<NodeId> ids;
            for (uint16_t i = 1; i <= kg_t; ++i) ids.push_back(i);
            auto w = build_cli_world(g, seed, ids);
            Keystore ks;
            ks.backend = backend;
            ks.order = order;
            ks.seed = seed;
            ks.quorum = QuorumConfig{"q1", ids, kg_t, {}};
            for (size_t i = 0; i < kg_vendors.size() && i < ids.size(); ++i) {
                ks.quorum.vendors[ids[i]] = kg_vendors[i];
            }
            Drbg key_rng(seed);
            ks.key_id = random_id(key_rng);
            DkpgResult r = w->host->dkpg(ks.quorum, ks.key_id);
            if (r.status != OpStatus::Ok) {
                std::cerr << "keygen failed: " << op_status_name(r.status) << " ("
                          << r.detail << ")\n";
                return 2;
            }
            ks.y_agg_hex = to_hex(g.encode(r.key.Y_agg));
            for (auto& [id, Y] : r.key.shares) ks.share_hex[id] = to_hex(g.encode(Y));
            persist_node_states(ks, *w);
            save_keystore(ks, kg_keystore);
            std::cout << "aggregate public key: " << ks.y_agg_hex << "\n"
                      << "keystore written to " << kg_keystore << "\n";
            return 0;
        }

        if (*enc) {
            Keystore ks = load_keystore(enc_keystore);
            Group g = ks.group();
            Bytes msg = message_bytes(enc_msg, enc_msg_hex);
            Element y_agg = g.decode_element(from_hex(ks.y_agg_hex));
            Drbg rng = Drbg(seed).fork("cli-encrypt");
            json ct_doc;
            ct_doc["length"] = msg.size();
            ct_doc["blocks"] = json::array();
            for (const Element& m : elements_from_bytes(g, msg)) {
                Ciphertext ct = encrypt(g, m, y_agg, rng);
                ct_doc["blocks"].push_back(to_hex(encode(g, ct)));
            }
            write_file(enc_out, ct_doc.dump(2) + "\n");
            std::cout << "ciphertext (" << ct_doc["blocks"].size() << " blocks) written to "
                      << enc_out << "\n";
            return 0;
        }

        if (*dec) {
            Keystore ks = load_keystore(dec_keystore);
            Group g = ks.group();
            auto w = restore_world(ks);
            w->host->config().require_dec_proofs = dec_proofs;
            std::ifstream in(dec_ct);
            if (!in) throw Error("cannot read ciphertext: " + dec_ct);
            json ct_doc;
            in >> ct_doc;
            std::vector<Element> elems;
            for (const json& blk : ct_doc.at("blocks")) {
                Ciphertext ct = decode_ciphertext(g, from_hex(blk.get<std::string>()));
                DecryptResult r = w->host->decrypt(ks.quorum, ks.key_id, ct);
                if (r.status != OpStatus::Ok) {
                    std::cerr << "decrypt failed: " << op_status_name(r.status) << " ("
                              << r.detail << ", node " << r.offender << ")\n";
                    return 2;
                }
                elems.push_back(r.plaintext);
            }
            Bytes msg = bytes_from_elements(g, elems, ct_doc.at("length").get<size_t>());
            std::cout << "plaintext hex: " << to_hex(msg) << "\n";
            bool printable = !msg.empty();
            for (uint8_t b : msg) printable = printable && b >= 0x20 && b < 0x7F;
            if (printable) {
                std::cout << "plaintext text: " << std::string(msg.begin(), msg.end())
                          << "\n";
            }
            return 0;
        }

        if (*sign_cmd) {
            Keystore ks = load_keystore(sg_keystore);
            Group g = ks.group();
            auto w = restore_world(ks);
            Bytes msg = message_bytes(sg_msg, sg_msg_hex);
            constexpr uint16_t kBatch = 8;
            OpStatus cst = w->host->cache_nonces(ks.quorum, ks.key_id, ks.next_j, kBatch);
            if (cst != OpStatus::Ok) {
                std::cerr << "nonce caching failed: " << op_status_name(cst) << "\n";
                return 2;
            }
            ks.next_j += kBatch;
            SignResult r = w->host->sign(ks.quorum, ks.key_id, msg);
            if (r.status != OpStatus::Ok) {
                std::cerr << "sign failed: " << op_status_name(r.status) << " (" << r.detail
                          << ")\n";
                return 2;
            }
            persist_node_states(ks, *w);
            save_keystore(ks, sg_keystore);
            std::cout << "signature: " << to_hex(encode(g, r.sig)) << "\n";
            return 0;
        }

        if (*ver) {
            Keystore ks = load_keystore(vf_keystore);
            Group g = ks.group();
            Bytes msg = message_bytes(vf_msg, vf_msg_hex);
            AggregateSignature sig = decode_signature(g, from_hex(vf_sig));
            Element y_agg = g.decode_element(from_hex(ks.y_agg_hex));
            bool ok = verify(g, y_agg, msg, sig.j, sig);
            std::cout << (ok ? "valid" : "INVALID") << "\n";
            return ok ? 0 : 1;
        }

        if (*rng_cmd) {
            Keystore ks = load_keystore(rng_keystore);
            auto w = restore_world(ks);
            RngResult r = w->host->gen_random(ks.quorum, rng_len);
            if (r.status != OpStatus::Ok) {
                std::cerr << "rng failed: " << op_status_name(r.status) << "\n";
                return 2;
            }
            std::cout << to_hex(r.value) << "\n";
            return 0;
        }

        if (*prop) {
            Keystore ks = load_keystore(pr_keystore);
            Group g = ks.group();
            NodeId next = 0;
            for (NodeId id : ks.quorum.members) next = std::max(next, id);
            std::vector<NodeId> q2_ids;
            for (uint16_t i = 1; i <= pr_to_size; ++i) {
                q2_ids.push_back(static_cast<NodeId>(next + i));
            }
            auto w = restore_world(ks, q2_ids);
            QuorumConfig q2{"q2", q2_ids, pr_to_size, {}};
            PropagateResult r = w->host->propagate(ks.quorum, q2, ks.key_id);
            if (r.status != OpStatus::Ok) {
                std::cerr << "propagate failed: " << op_status_name(r.status) << " ("
                          << r.detail << ")\n";
                return 2;
            }
            Keystore ks2;
            ks2.backend = ks.backend;
            ks2.order = ks.order;
            ks2.seed = ks.seed;
            ks2.quorum = q2;
            ks2.key_id = ks.key_id;
            ks2.y_agg_hex = ks.y_agg_hex;
            for (auto& [id, Y] : r.key.shares) ks2.share_hex[id] = to_hex(g.encode(Y));
            ks2.nodes.clear();
            for (NodeId id : q2_ids) {
                const KeySlot* slot = w->ic(id)->key_slot(ks.key_id);
                NodeState st;
                st.node = id;
                st.x_hex = to_hex(g.encode(slot->x));
                st.prf_secret_hex = to_hex(slot->prf_secret);
                ks2.nodes.push_back(std::move(st));
            }
            save_keystore(ks2, pr_out_keystore);
            std::cout << "key re-shared to quorum of " << pr_to_size << "; keystore written"
                      << " to " << pr_out_keystore << "\n";
            return 0;
        }

        if (*tol) {
            double p = k_tolerance(tol_p, tol_k);
            std::cout << "P[at least one honest source] = " << p << "  (p_error=" << tol_p
                      << ", k=" << tol_k << ")\n\n";
            std::cout << "tolerated malicious/faulty members (t=" << tol_t
                      << ", quorums=" << tol_n << "):\n";
            ToleranceRow single = tolerance_single_ic();
            std::cout << "  single IC : leakage " << single.leakage << ", denial "
                      << single.denial << ", failures " << single.ic_failures << "\n";
            ToleranceRow kt = tolerance_k_equals_t(tol_t, tol_n);
            std::cout << "  k = t     : leakage " << kt.leakage << ", denial " << kt.denial
                      << ", failures " << kt.ic_failures << "\n";
            if (tol_k < tol_t) {
                ToleranceRow klt = tolerance_k_less_t(tol_k, tol_t, tol_n);
                std::cout << "  k < t     : leakage " << klt.leakage << ", denial "
                          << klt.denial << ", failures " << klt.ic_failures
                          << " (not implemented by this module; estimate only)\n";
            }
            return 0;
        }

        if (*run) {
            std::ifstream in(run_path);
            if (!in) throw Error("cannot read scenario: " + run_path);
            std::string text((std::istreambuf_iterator<char>(in)),
                             std::istreambuf_iterator<char>());
            Scenario sc = scenario_from_json(text);
            ScenarioResult r = run_scenario(sc);
            std::cout << r.summary_json << "\n";
            if (!out_dir.empty()) {
                write_file(fs::path(out_dir) / "transcript.bin", r.transcript_bytes);
                write_file(fs::path(out_dir) / "transcript.log", r.transcript_log);
                write_file(fs::path(out_dir) / "summary.json", r.summary_json + "\n");
                std::cout << "artifacts written to " << out_dir << "\n";
            }
            switch (r.outcome) {
                case Outcome::Success: return 0;
                case Outcome::Abort: return 2;
                case Outcome::ForgeryDetected: return 3;
                case Outcome::SecrecyViolated: return 4;
                case Outcome::SetupError: return 5;
            }
            return 5;
        }

        if (*bench) {
            CostTable costs;
            BenchReport rep = run_bench(bench_sizes, bench_counts, costs, seed);
            std::cout << rep.text;
            if (!out_dir.empty()) {
                write_file(fs::path(out_dir) / "bench.txt", rep.text);
                write_file(fs::path(out_dir) / "bench.json", rep.json + "\n");
                std::cout << "report written to " << out_dir << "\n";
            }
            return 0;
        }
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 5;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 5;
    }
    return 0;
}
