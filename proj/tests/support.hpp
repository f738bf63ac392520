#pragma once

#include <algorithm>
#include <cstdint>
#include <memory>
#include <vector>

#include "qhsm/fabric.hpp"
#include "qhsm/host.hpp"
#include "qhsm/node.hpp"
#include "qhsm/rng.hpp"

namespace qhsm::test {

/// Emits scripted values (big-endian, right-aligned per fill) and then falls
/// back to a seeded stream. Lets a test force the next scalar draws.
class ScriptedRng final : public RandomSource {
public:
    explicit ScriptedRng(std::vector<uint64_t> script, uint64_t fallback_seed = 9999)
        : script_(std::move(script)), fallback_(fallback_seed) {}

    void fill(std::span<uint8_t> out) override {
        if (next_ < script_.size()) {
            uint64_t v = script_[next_++];
            std::fill(out.begin(), out.end(), 0);
            for (size_t i = 0; i < out.size() && i < 8; ++i) {
                out[out.size() - 1 - i] = static_cast<uint8_t>(v >> (8 * i));
            }
            return;
        }
        fallback_.fill(out);
    }

private:
    std::vector<uint64_t> script_;
    size_t next_ = 0;
    Drbg fallback_;
};

inline std::unique_ptr<ScriptedRng> scripted(std::vector<uint64_t> script,
                                             uint64_t fallback_seed = 9999) {
    return std::make_unique<ScriptedRng>(std::move(script), fallback_seed);
}

/// Independent modular-arithmetic oracle used to freeze expected values.
inline uint64_t mod_add(uint64_t a, uint64_t b, uint64_t n) { return (a + b) % n; }
inline uint64_t mod_sub(uint64_t a, uint64_t b, uint64_t n) { return (a + n - b % n) % n; }
inline uint64_t mod_mul(uint64_t a, uint64_t b, uint64_t n) { return (a * b) % n; }

/// Hand-built world: honest nodes, one host, one quorum, no adversary.
struct Bench {
    Group group;
    std::unique_ptr<Fabric> fabric;
    std::vector<std::unique_ptr<Node>> nodes;
    std::map<NodeId, Element> directory;
    HostIdentity ident;
    std::unique_ptr<Host> host;
    QuorumConfig quorum;

    explicit Bench(Group g) : group(std::move(g)) {}

    IcNode* ic(NodeId id) {
        for (auto& n : nodes) {
            if (n->id() != id) continue;
            if (auto* honest = dynamic_cast<IcNode*>(n.get())) return honest;
            if (auto* mal = dynamic_cast<MaliciousNode*>(n.get())) return &mal->inner();
        }
        return nullptr;
    }
};

/// Builds a provisioned world. node_scripts[i] (when present) forces the
/// first scalar draws of node i+1. Malicious members are created per
/// |attacks|; everyone else is honest.
inline std::unique_ptr<Bench> make_bench(
    Group g, uint16_t t, uint64_t seed = 7,
    const std::vector<std::vector<uint64_t>>& node_scripts = {},
    const std::map<NodeId, NodeAttackSpec>& attacks = {}, HostConfig cfg = {}) {
    auto b = std::make_unique<Bench>(g);
    Drbg master(seed);
    Drbg ident_rng = master.fork("host-identity");
    b->ident = HostIdentity::generate(g, ident_rng);
    std::vector<NodeId> ids;
    for (uint16_t i = 1; i <= t; ++i) ids.push_back(i);
    Drbg prov_rng = master.fork("provision");
    auto provisioning = make_provisioning(g, ids, {b->ident.acl_entry()}, prov_rng);
    b->fabric = std::make_unique<Fabric>(g, seed);
    for (NodeId id : ids) {
        std::unique_ptr<RandomSource> rng;
        if (id <= node_scripts.size() && !node_scripts[id - 1].empty()) {
            rng = scripted(node_scripts[id - 1], seed * 1000 + id);
        } else {
            rng = std::make_unique<Drbg>(master.fork("node/" + std::to_string(id)));
        }
        auto attack = attacks.find(id);
        if (attack != attacks.end()) {
            auto node = std::make_unique<MaliciousNode>(id, std::move(rng), attack->second);
            node->inner().provision(provisioning.at(id));
            b->fabric->set_compromised(id, provisioning.at(id).identity_secret);
            b->fabric->attach(node.get());
            b->nodes.push_back(std::move(node));
        } else {
            auto node = std::make_unique<IcNode>(id, std::move(rng));
            node->provision(provisioning.at(id));
            b->fabric->attach(node.get());
            b->nodes.push_back(std::move(node));
        }
        b->directory[id] = provisioning.at(id).certificate.pub;
    }
    b->host = std::make_unique<Host>(g, *b->fabric, b->ident, b->directory,
                                     master.fork("host-ops"), cfg);
    b->quorum = QuorumConfig{"q1", ids, t, {}};
    return b;
}

inline Id16 test_key(uint8_t tag = 1) {
    Id16 id{};
    id[15] = tag;
    return id;
}

}  // namespace qhsm::test
