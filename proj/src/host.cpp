#include "qhsm/host.hpp"

#include <algorithm>
#include <set>
#include <sstream>

#include "qhsm/errors.hpp"

namespace qhsm {

const char* op_status_name(OpStatus s) {
    switch (s) {
        case OpStatus::Ok: return "ok";
        case OpStatus::Timeout: return "timeout";
        case OpStatus::Aborted: return "aborted";
        case OpStatus::AccessDenied: return "access-denied";
        case OpStatus::IncompleteQuorum: return "incomplete-quorum";
        case OpStatus::ShareProofFailure: return "share-proof-failure";
        case OpStatus::InconsistentShare: return "inconsistent-share";
        case OpStatus::SigningFailed: return "signing-failed";
        case OpStatus::VerifyFailed: return "verify-failed";
        case OpStatus::ReplayRejected: return "replay-rejected";
        case OpStatus::SetupError: return "setup-error";
        case OpStatus::BadSignature: return "bad-signature";
    }
    return "?";
}

HostIdentity HostIdentity::generate(const Group& g, RandomSource& rng) {
    HostIdentity h;
    h.sign_secret = g.scalar_rand(rng);
    h.sign_pub = g.mul_gen(h.sign_secret);
    h.enc_secret = g.scalar_rand(rng);
    h.enc_pub = g.mul_gen(h.enc_secret);
    return h;
}

AclEntry HostIdentity::acl_entry(uint32_t permissions) const {
    return AclEntry{sign_pub, enc_pub, permissions};
}

Host::Host(Group g, Fabric& fabric, HostIdentity ident,
           std::map<NodeId, Element> directory, Drbg rng, HostConfig cfg)
    : g_(std::move(g)),
      fabric_(fabric),
      ident_(std::move(ident)),
      directory_(std::move(directory)),
      rng_(std::move(rng)),
      cfg_(cfg) {}

std::string Host::key_of(const std::string& quorum_id, const Id16& key_id) const {
    return quorum_id + "/" + id_to_hex(key_id);
}

const QuorumKey* Host::quorum_key(const std::string& quorum_id, const Id16& key_id) const {
    auto it = keys_.find(key_of(quorum_id, key_id));
    return it == keys_.end() ? nullptr : &it->second;
}

const std::map<uint64_t, NonceCacheEntry>* Host::nonce_cache(const std::string& quorum_id,
                                                             const Id16& key_id) const {
    auto it = caches_.find(key_of(quorum_id, key_id));
    return it == caches_.end() ? nullptr : &it->second;
}

void Host::install_key(const std::string& quorum_id, const Id16& key_id, QuorumKey key) {
    keys_.insert_or_assign(key_of(quorum_id, key_id), std::move(key));
}

OpStatus Host::validate_quorum(const QuorumConfig& q) {
    if (q.members.empty()) return OpStatus::SetupError;
    std::set<NodeId> dedup(q.members.begin(), q.members.end());
    if (dedup.size() != q.members.size()) return OpStatus::SetupError;
    // k < t secret sharing is intentionally not implemented; reject configs
    // that ask for it instead of silently degrading.
    if (q.threshold_k != q.members.size()) return OpStatus::SetupError;
    return OpStatus::Ok;
}

Envelope Host::command_envelope(NodeId dst, OpCode op, const Id16& id, Bytes payload) {
    Command cmd = make_signed_command(g_, op, id, std::move(payload), ident_.sign_secret, rng_);
    return make_signed_envelope(g_, kHostId, dst, ++seq_, BodyKind::Command, cmd.encode(),
                                ident_.sign_secret, rng_);
}

Host::Round Host::run_round(const QuorumConfig& q, OpCode op, const Id16& id,
                            const std::function<Bytes(NodeId)>& payload_for,
                            uint64_t budget) {
    Round round;
    fabric_.take_host_inbox();  // discard stragglers from a previous phase
    for (NodeId m : q.members) {
        fabric_.submit(command_envelope(m, op, id, payload_for(m)));
    }
    std::set<NodeId> expected(q.members.begin(), q.members.end());
    uint64_t start = fabric_.slot();
    while (!expected.empty() && fabric_.slot() - start < budget) {
        fabric_.step();
        for (const Envelope& env : fabric_.take_host_inbox()) {
            if (env.kind != BodyKind::Response) continue;
            if (!expected.count(env.src)) continue;
            auto dir = directory_.find(env.src);
            if (dir == directory_.end()) continue;
            Response resp;
            try {
                resp = Response::decode(env.body);
            } catch (const EncodingError&) {
                round.bad_sig.push_back(env.src);
                expected.erase(env.src);
                continue;
            }
            if (resp.opcode != op || resp.id != id) continue;
            if (!verify_envelope(g_, env, dir->second) ||
                !verify_response(g_, resp, dir->second)) {
                round.bad_sig.push_back(env.src);
                expected.erase(env.src);
                continue;
            }
            if (resp.status == Status::Ok) {
                round.ok.emplace(env.src, std::move(resp));
            } else {
                round.errors.emplace(env.src, resp.status);
            }
            expected.erase(env.src);
        }
    }
    round.missing.assign(expected.begin(), expected.end());
    return round;
}

OpStatus Host::round_status(const Round& r, NodeId* offender, std::string* detail) const {
    if (!r.bad_sig.empty()) {
        if (offender) *offender = r.bad_sig.front();
        if (detail) *detail = "response signature failure";
        return OpStatus::BadSignature;
    }
    if (!r.errors.empty()) {
        auto [node, st] = *r.errors.begin();
        if (offender) *offender = node;
        if (detail) *detail = status_name(st);
        switch (st) {
            case Status::AccessDenied: return OpStatus::AccessDenied;
            case Status::ReplayRejected: return OpStatus::ReplayRejected;
            case Status::CommitmentFailure: return OpStatus::Aborted;
            case Status::ProtocolOrder: return OpStatus::Timeout;  // session stalled
            default: return OpStatus::Aborted;
        }
    }
    if (!r.missing.empty()) {
        if (offender) *offender = r.missing.front();
        if (detail) *detail = "no response within slot budget";
        return OpStatus::IncompleteQuorum;
    }
    return OpStatus::Ok;
}

DkpgResult Host::dkpg(const QuorumConfig& q, const Id16& key_id) {
    DkpgResult out;
    if (validate_quorum(q) != OpStatus::Ok) {
        out.status = OpStatus::SetupError;
        out.detail = "invalid quorum configuration";
        return out;
    }
    const uint64_t budget = cfg_.slot_budget_factor * std::max<uint64_t>(q.size(), 2);
    Id16 sid = random_id(rng_);
    KeygenInitPayload init{key_id, q.members};
    Bytes init_payload = encode(init);

    Round r1 = run_round(q, OpCode::KeygenInit, sid, [&](NodeId) { return init_payload; },
                         budget);
    out.status = round_status(r1, &out.offender, &out.detail);
    if (out.status != OpStatus::Ok) return out;

    // The pairwise exchange runs by itself; give it one phase budget.
    fabric_.run(budget);

    Round r2 = run_round(q, OpCode::KeygenFinalize, sid, [&](NodeId) { return Bytes{}; },
                         budget);
    out.status = round_status(r2, &out.offender, &out.detail);
    if (out.status != OpStatus::Ok) {
        if (out.status == OpStatus::Aborted) out.detail = "commitment-failure";
        return out;
    }

    QuorumKey key;
    key.quorum_id = q.quorum_id;
    key.threshold_k = q.threshold_k;
    key.size_t_ = q.size();
    const size_t w = g_.element_size();
    bool first = true;
    for (NodeId m : q.members) {
        const Response& resp = r2.ok.at(m);
        if (resp.payload.size() != 2 * w) {
            out.status = OpStatus::Aborted;
            out.offender = m;
            out.detail = "malformed finalize payload";
            return out;
        }
        Element y_agg, y_own;
        try {
            y_agg = g_.decode_element(ByteView(resp.payload).subspan(0, w));
            y_own = g_.decode_element(ByteView(resp.payload).subspan(w, w));
        } catch (const EncodingError&) {
            out.status = OpStatus::Aborted;
            out.offender = m;
            out.detail = "undecodable finalize payload";
            return out;
        }
        if (first) {
            key.Y_agg = y_agg;
            first = false;
        } else if (!(key.Y_agg == y_agg)) {
            out.status = OpStatus::Aborted;
            out.offender = m;
            out.detail = "aggregate key mismatch across nodes";
            return out;
        }
        key.shares[m] = y_own;
    }
    // Cross-check from public data: the aggregate must equal the sum of the
    // reported public shares.
    std::vector<Element> shares;
    for (NodeId m : q.members) shares.push_back(key.shares.at(m));
    if (!(share_aggr(g_, shares) == key.Y_agg)) {
        out.status = OpStatus::Aborted;
        out.detail = "aggregate does not match share sum";
        return out;
    }
    keys_.insert_or_assign(key_of(q.quorum_id, key_id), key);
    out.key = key;
    out.status = OpStatus::Ok;
    return out;
}

DecryptResult Host::decrypt(const QuorumConfig& q, const Id16& key_id, const Ciphertext& ct) {
    DecryptResult out;
    if (validate_quorum(q) != OpStatus::Ok) {
        out.detail = "invalid quorum configuration";
        return out;
    }
    const QuorumKey* key = quorum_key(q.quorum_id, key_id);
    if (key == nullptr) {
        out.detail = "unknown key";
        return out;
    }
    DecSharePayload p;
    p.flags = 0;
    if (cfg_.require_dec_proofs) p.flags |= kFlagProof;
    if (cfg_.seal_responses) p.flags |= kFlagSeal;
    p.c1 = ct.c1;
    Bytes payload = encode(g_, p);
    const uint64_t budget = cfg_.slot_budget_factor * std::max<uint64_t>(q.size(), 2);
    Round r = run_round(q, OpCode::DecShare, key_id, [&](NodeId) { return payload; }, budget);
    out.status = round_status(r, &out.offender, &out.detail);
    if (out.status != OpStatus::Ok) {
        if (out.status == OpStatus::IncompleteQuorum) out.detail = "missing decryption share";
        return out;
    }

    std::vector<Element> shares;
    for (NodeId m : q.members) {
        DecShareResponse dr;
        try {
            dr = decode_dec_share_response(g_, r.ok.at(m).payload);
        } catch (const EncodingError&) {
            out.status = OpStatus::Aborted;
            out.offender = m;
            out.detail = "malformed decryption share";
            return out;
        }
        Element A;
        if (dr.flags & kFlagSeal) {
            try {
                A = g_.decode_element(open_bytes(g_, dr.sealed_A, ident_.enc_secret));
            } catch (const EncodingError&) {
                out.status = OpStatus::Aborted;
                out.offender = m;
                out.detail = "unsealable decryption share";
                return out;
            }
        } else {
            A = dr.A;
        }
        if (cfg_.require_dec_proofs) {
            if (!dr.proof || !dleq_verify(g_, *dr.proof, key->shares.at(m), ct.c1, A)) {
                out.status = OpStatus::ShareProofFailure;
                out.offender = m;
                out.detail = "decryption share proof rejected";
                return out;
            }
        }
        shares.push_back(A);
    }
    out.plaintext = aggr_dec(g_, ct.c2, shares);
    out.status = OpStatus::Ok;
    return out;
}

DecryptResult Host::decrypt_any(const std::vector<QuorumConfig>& quorums, const Id16& key_id,
                                const Ciphertext& ct) {
    DecryptResult last;
    for (const QuorumConfig& q : quorums) {
        last = decrypt(q, key_id, ct);
        if (last.status == OpStatus::Ok) return last;
    }
    return last;
}

OpStatus Host::cache_nonces(const QuorumConfig& q, const Id16& key_id, uint64_t j_start,
                            uint16_t count) {
    if (validate_quorum(q) != OpStatus::Ok || count == 0) return OpStatus::SetupError;
    CacheNoncePayload p{j_start, count};
    Bytes payload = encode(p);
    const uint64_t budget = cfg_.slot_budget_factor * std::max<uint64_t>(q.size(), 2);
    Round r = run_round(q, OpCode::CacheNonce, key_id, [&](NodeId) { return payload; },
                        budget);
    OpStatus st = round_status(r, nullptr, nullptr);
    if (st != OpStatus::Ok) return st;

    const size_t w = g_.element_size();
    auto& cache = caches_[key_of(q.quorum_id, key_id)];
    for (uint16_t i = 0; i < count; ++i) {
        NonceCacheEntry entry;
        entry.j = j_start + i;
        Element sum = g_.identity();
        for (NodeId m : q.members) {
            const Bytes& pl = r.ok.at(m).payload;
            if (pl.size() != static_cast<size_t>(count) * w) return OpStatus::Aborted;
            Element R_im;
            try {
                R_im = g_.decode_element(ByteView(pl).subspan(i * w, w));
            } catch (const EncodingError&) {
                return OpStatus::Aborted;
            }
            entry.per_node.emplace_back(m, R_im);
            sum = g_.add(sum, R_im);
        }
        entry.R = sum;
        cache.insert_or_assign(entry.j, std::move(entry));
    }
    return OpStatus::Ok;
}

SignResult Host::attempt_sign(const QuorumConfig& q, const Id16& key_id, ByteView message,
                              const Bytes& hm, const NonceCacheEntry& entry,
                              const QuorumKey& key) {
    SignResult out;
    const uint64_t budget = cfg_.slot_budget_factor * std::max<uint64_t>(q.size(), 2);
    SigSharePayload p{hm, entry.j, entry.R};
    Bytes payload = encode(g_, p);
    Round r = run_round(q, OpCode::SigShare, key_id, [&](NodeId) { return payload; }, budget);
    for (auto& [node, st] : r.errors) {
        if (st == Status::ReplayRejected) {
            out.status = OpStatus::ReplayRejected;
            out.offender = node;
            out.detail = "index already consumed";
            return out;
        }
    }
    out.status = round_status(r, &out.offender, &out.detail);
    if (out.status != OpStatus::Ok) return out;

    const size_t w = g_.scalar_size();
    std::vector<SignatureShare> shares;
    for (NodeId m : q.members) {
        const Bytes& pl = r.ok.at(m).payload;
        if (pl.size() != 2 * w) {
            out.status = OpStatus::Aborted;
            out.offender = m;
            out.detail = "malformed signature share";
            return out;
        }
        SignatureShare s;
        s.node_id = m;
        s.j = entry.j;
        try {
            s.sigma = g_.decode_scalar(ByteView(pl).subspan(0, w));
            s.eps = g_.decode_scalar(ByteView(pl).subspan(w, w));
        } catch (const EncodingError&) {
            out.status = OpStatus::Aborted;
            out.offender = m;
            out.detail = "undecodable signature share";
            return out;
        }
        shares.push_back(std::move(s));
    }
    for (const SignatureShare& s : shares) {
        if (!(s.eps == shares.front().eps)) {
            out.status = OpStatus::InconsistentShare;
            out.offender = s.node_id;
            out.detail = "challenge mismatch across shares";
            return out;
        }
    }
    AggregateSignature sig = aggregate(g_, shares);
    if (!verify(g_, key.Y_agg, message, entry.j, sig)) {
        // Audit individual shares against the cached per-node nonce points
        // to name the offender.
        out.status = OpStatus::VerifyFailed;
        out.detail = "aggregate signature failed verification";
        for (const SignatureShare& s : shares) {
            for (const auto& [node, R_i] : entry.per_node) {
                if (node != s.node_id) continue;
                Element lhs =
                    g_.add(g_.mul_gen(s.sigma), g_.mul(s.eps, key.shares.at(node)));
                if (!(lhs == R_i)) {
                    out.offender = node;
                    out.detail = "signature share failed audit";
                }
            }
        }
        return out;
    }
    out.sig = sig;
    out.status = OpStatus::Ok;
    return out;
}

SignResult Host::sign(const QuorumConfig& q, const Id16& key_id, ByteView message) {
    SignResult out;
    if (validate_quorum(q) != OpStatus::Ok) {
        out.detail = "invalid quorum configuration";
        return out;
    }
    const QuorumKey* key = quorum_key(q.quorum_id, key_id);
    if (key == nullptr) {
        out.detail = "unknown key";
        return out;
    }
    auto cache_it = caches_.find(key_of(q.quorum_id, key_id));
    if (cache_it == caches_.end()) {
        out.status = OpStatus::SigningFailed;
        out.detail = "no cached nonces";
        return out;
    }
    Bytes hm = sha3_256(message);
    for (size_t attempt = 0; attempt < cfg_.sign_retry_limit; ++attempt) {
        NonceCacheEntry* entry = nullptr;
        for (auto& [j, e] : cache_it->second) {
            if (!e.consumed) {
                entry = &e;
                break;
            }
        }
        if (entry == nullptr) {
            out.status = OpStatus::SigningFailed;
            out.detail = "cached nonces exhausted";
            return out;
        }
        // The index is burned on any attempt: a node that accepted it will
        // never sign with it again, so retrying the same j cannot succeed.
        entry->consumed = true;
        out = attempt_sign(q, key_id, message, hm, *entry, *key);
        if (out.status != OpStatus::ReplayRejected) return out;
        // Some node already holds this index as consumed: advance.
    }
    out.status = OpStatus::SigningFailed;
    out.detail = "retry limit reached";
    return out;
}

SignResult Host::sign_with_index(const QuorumConfig& q, const Id16& key_id, ByteView message,
                                 uint64_t j) {
    SignResult out;
    if (validate_quorum(q) != OpStatus::Ok) {
        out.detail = "invalid quorum configuration";
        return out;
    }
    const QuorumKey* key = quorum_key(q.quorum_id, key_id);
    if (key == nullptr) {
        out.detail = "unknown key";
        return out;
    }
    auto cache_it = caches_.find(key_of(q.quorum_id, key_id));
    if (cache_it == caches_.end() || !cache_it->second.count(j)) {
        out.status = OpStatus::SigningFailed;
        out.detail = "index not cached";
        return out;
    }
    NonceCacheEntry& entry = cache_it->second.at(j);
    entry.consumed = true;
    return attempt_sign(q, key_id, message, sha3_256(message), entry, *key);
}

RngResult Host::gen_random(const QuorumConfig& q, size_t out_len) {
    RngResult out;
    if (validate_quorum(q) != OpStatus::Ok || out_len == 0) {
        out.detail = "invalid configuration";
        return out;
    }
    Id16 req = random_id(rng_);
    Bytes payload;
    payload.push_back(cfg_.seal_responses ? kFlagSeal : 0);
    const uint64_t budget = cfg_.slot_budget_factor * std::max<uint64_t>(q.size(), 2);
    Round r = run_round(q, OpCode::RngShare, req, [&](NodeId) { return payload; }, budget);
    NodeId offender = 0;
    out.status = round_status(r, &offender, &out.detail);
    if (out.status != OpStatus::Ok) {
        if (out.status == OpStatus::IncompleteQuorum) out.detail = "missing randomness share";
        return out;
    }
    std::vector<Bytes> shares;
    for (NodeId m : q.members) {
        const Bytes& pl = r.ok.at(m).payload;
        try {
            size_t off = 0;
            if (pl.empty()) throw EncodingError("empty rng payload");
            uint8_t flags = pl[off++];
            if (flags & kFlagSeal) {
                SealedBytes sealed = decode_sealed(g_, pl, off);
                shares.push_back(open_bytes(g_, sealed, ident_.enc_secret));
            } else {
                shares.push_back(read_exact(pl, off, 32));
            }
        } catch (const EncodingError&) {
            out.status = OpStatus::Aborted;
            out.detail = "malformed randomness share";
            return out;
        }
    }
    out.value = drng_combine(shares, out_len);
    out.status = OpStatus::Ok;
    return out;
}

PropagateResult Host::propagate(const QuorumConfig& from, const QuorumConfig& to,
                                const Id16& key_id) {
    PropagateResult out;
    if (validate_quorum(from) != OpStatus::Ok || validate_quorum(to) != OpStatus::Ok) {
        out.detail = "invalid quorum configuration";
        return out;
    }
    const QuorumKey* key = quorum_key(from.quorum_id, key_id);
    if (key == nullptr) {
        out.detail = "unknown key on source quorum";
        return out;
    }
    const uint64_t budget =
        cfg_.slot_budget_factor * std::max<uint64_t>(from.size() + to.size(), 2);

    KeypropInstallPayload install{key->Y_agg, from.members};
    Bytes install_payload = encode(g_, install);
    Round r1 = run_round(to, OpCode::KeypropInstall, key_id,
                         [&](NodeId) { return install_payload; }, budget);
    out.status = round_status(r1, nullptr, &out.detail);
    if (out.status != OpStatus::Ok) return out;

    KeypropSplitPayload split{to.members};
    Bytes split_payload = encode(split);
    Round r2 = run_round(from, OpCode::KeypropSplit, key_id,
                         [&](NodeId) { return split_payload; }, budget);
    out.status = round_status(r2, nullptr, &out.detail);
    if (out.status != OpStatus::Ok) return out;

    // Fragments flow source -> target; let them settle.
    fabric_.run(budget);

    Round r3 = run_round(to, OpCode::KeypropFinalize, key_id, [&](NodeId) { return Bytes{}; },
                         budget);
    out.status = round_status(r3, nullptr, &out.detail);
    if (out.status != OpStatus::Ok) {
        if (out.status == OpStatus::Timeout) out.detail = "share fragments incomplete";
        return out;
    }

    QuorumKey new_key;
    new_key.quorum_id = to.quorum_id;
    new_key.threshold_k = to.threshold_k;
    new_key.size_t_ = to.size();
    new_key.Y_agg = key->Y_agg;
    std::vector<Element> shares;
    for (NodeId m : to.members) {
        Element y;
        try {
            y = g_.decode_element(r3.ok.at(m).payload);
        } catch (const EncodingError&) {
            out.status = OpStatus::Aborted;
            out.detail = "malformed propagate acknowledgment";
            return out;
        }
        new_key.shares[m] = y;
        shares.push_back(y);
    }
    if (!(share_aggr(g_, shares) == key->Y_agg)) {
        out.status = OpStatus::Aborted;
        out.detail = "propagated shares do not reassemble the key";
        return out;
    }
    keys_.insert_or_assign(key_of(to.quorum_id, key_id), new_key);
    out.key = new_key;
    out.status = OpStatus::Ok;
    return out;
}

}  // namespace qhsm
