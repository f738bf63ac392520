#include "qhsm/node.hpp"

#include <algorithm>

#include "qhsm/errors.hpp"

namespace qhsm {

// --- payload codecs ---

Bytes encode(const KeygenInitPayload& p) {
    Bytes out(p.key_id.begin(), p.key_id.end());
    append_u16(out, static_cast<uint16_t>(p.members.size()));
    for (NodeId m : p.members) append_u16(out, m);
    return out;
}

KeygenInitPayload decode_keygen_init(ByteView data) {
    size_t off = 0;
    KeygenInitPayload p;
    Bytes idb = read_exact(data, off, 16);
    std::copy(idb.begin(), idb.end(), p.key_id.begin());
    uint16_t count = read_u16(data, off);
    for (uint16_t i = 0; i < count; ++i) p.members.push_back(read_u16(data, off));
    if (off != data.size()) throw EncodingError("trailing bytes in keygen-init payload");
    return p;
}

Bytes encode(const Group& g, const DecSharePayload& p) {
    Bytes out;
    out.push_back(p.flags);
    append(out, g.encode(p.c1));
    return out;
}

DecSharePayload decode_dec_share(const Group& g, ByteView data) {
    size_t off = 0;
    DecSharePayload p;
    if (data.empty()) throw EncodingError("empty dec-share payload");
    p.flags = data[off++];
    Bytes e = read_exact(data, off, g.element_size());
    p.c1 = g.decode_element(e);
    if (off != data.size()) throw EncodingError("trailing bytes in dec-share payload");
    return p;
}

Bytes encode(const Group& g, const DleqProof& p) {
    Bytes out = g.encode(p.t1);
    append(out, g.encode(p.t2));
    append(out, g.encode(p.c));
    append(out, g.encode(p.z));
    return out;
}

DleqProof decode_proof(const Group& g, ByteView data, size_t& off) {
    DleqProof p;
    p.t1 = g.decode_element(read_exact(data, off, g.element_size()));
    p.t2 = g.decode_element(read_exact(data, off, g.element_size()));
    p.c = g.decode_scalar(read_exact(data, off, g.scalar_size()));
    p.z = g.decode_scalar(read_exact(data, off, g.scalar_size()));
    return p;
}

Bytes encode(const Group& g, const DecShareResponse& p) {
    Bytes out;
    out.push_back(p.flags);
    if (p.flags & kFlagSeal) {
        append(out, encode(g, p.sealed_A));
    } else {
        append(out, g.encode(p.A));
    }
    if (p.proof) append(out, encode(g, *p.proof));
    return out;
}

DecShareResponse decode_dec_share_response(const Group& g, ByteView data) {
    size_t off = 0;
    DecShareResponse p;
    if (data.empty()) throw EncodingError("empty dec-share response");
    p.flags = data[off++];
    if (p.flags & kFlagSeal) {
        p.sealed_A = decode_sealed(g, data, off);
    } else {
        p.A = g.decode_element(read_exact(data, off, g.element_size()));
    }
    if (p.flags & kFlagProof) p.proof = decode_proof(g, data, off);
    if (off != data.size()) throw EncodingError("trailing bytes in dec-share response");
    return p;
}

Bytes encode(const Group& g, const SigSharePayload& p) {
    Bytes out = p.hm;
    append_u64(out, p.j);
    append(out, g.encode(p.R));
    return out;
}

SigSharePayload decode_sig_share(const Group& g, ByteView data) {
    size_t off = 0;
    SigSharePayload p;
    p.hm = read_exact(data, off, 32);
    p.j = read_u64(data, off);
    p.R = g.decode_element(read_exact(data, off, g.element_size()));
    if (off != data.size()) throw EncodingError("trailing bytes in sig-share payload");
    return p;
}

Bytes encode(const CacheNoncePayload& p) {
    Bytes out;
    append_u64(out, p.j_start);
    append_u16(out, p.count);
    return out;
}

CacheNoncePayload decode_cache_nonce(ByteView data) {
    size_t off = 0;
    CacheNoncePayload p;
    p.j_start = read_u64(data, off);
    p.count = read_u16(data, off);
    if (off != data.size()) throw EncodingError("trailing bytes in cache-nonce payload");
    return p;
}

Bytes encode(const Group& g, const KeypropInstallPayload& p) {
    Bytes out = g.encode(p.Y_agg);
    append_u16(out, static_cast<uint16_t>(p.sources.size()));
    for (NodeId s : p.sources) append_u16(out, s);
    return out;
}

KeypropInstallPayload decode_keyprop_install(const Group& g, ByteView data) {
    size_t off = 0;
    KeypropInstallPayload p;
    p.Y_agg = g.decode_element(read_exact(data, off, g.element_size()));
    uint16_t count = read_u16(data, off);
    for (uint16_t i = 0; i < count; ++i) p.sources.push_back(read_u16(data, off));
    if (off != data.size()) throw EncodingError("trailing bytes in keyprop-install payload");
    return p;
}

Bytes encode(const KeypropSplitPayload& p) {
    Bytes out;
    append_u16(out, static_cast<uint16_t>(p.targets.size()));
    for (NodeId t : p.targets) append_u16(out, t);
    return out;
}

KeypropSplitPayload decode_keyprop_split(ByteView data) {
    size_t off = 0;
    KeypropSplitPayload p;
    uint16_t count = read_u16(data, off);
    for (uint16_t i = 0; i < count; ++i) p.targets.push_back(read_u16(data, off));
    if (off != data.size()) throw EncodingError("trailing bytes in keyprop-split payload");
    return p;
}

// --- signing helpers ---

Command make_signed_command(const Group& g, OpCode op, const Id16& id, Bytes payload,
                            const Scalar& secret, RandomSource& rng) {
    Command cmd;
    cmd.opcode = op;
    cmd.id = id;
    cmd.payload = std::move(payload);
    cmd.signature = encode_byte_sig(g, sign_bytes(g, secret, cmd.signed_span(), rng));
    return cmd;
}

bool verify_command(const Group& g, const Command& cmd, const Element& pub) {
    auto sig = decode_byte_sig(g, cmd.signature);
    return sig && verify_bytes(g, pub, cmd.signed_span(), *sig);
}

Response make_signed_response(const Group& g, OpCode op, const Id16& id, Status st,
                              Bytes payload, const Scalar& secret, RandomSource& rng) {
    Response r;
    r.opcode = op;
    r.id = id;
    r.status = st;
    r.payload = std::move(payload);
    r.signature = encode_byte_sig(g, sign_bytes(g, secret, r.signed_span(), rng));
    return r;
}

bool verify_response(const Group& g, const Response& r, const Element& pub) {
    auto sig = decode_byte_sig(g, r.signature);
    return sig && verify_bytes(g, pub, r.signed_span(), *sig);
}

Envelope make_signed_envelope(const Group& g, NodeId src, NodeId dst, uint64_t seq,
                              BodyKind kind, Bytes body, const Scalar& secret,
                              RandomSource& rng) {
    Envelope env;
    env.src = src;
    env.dst = dst;
    env.seq = seq;
    env.kind = kind;
    env.body = std::move(body);
    env.signature = encode_byte_sig(g, sign_bytes(g, secret, env.signed_span(), rng));
    return env;
}

bool verify_envelope(const Group& g, const Envelope& env, const Element& pub) {
    auto sig = decode_byte_sig(g, env.signature);
    return sig && verify_bytes(g, pub, env.signed_span(), *sig);
}

// --- provisioning ---

std::map<NodeId, NodeProvision> make_provisioning(const Group& g,
                                                  const std::vector<NodeId>& ids,
                                                  const std::vector<AclEntry>& acl,
                                                  RandomSource& rng) {
    std::map<NodeId, NodeProvision> out;
    std::map<NodeId, Element> directory;
    for (NodeId id : ids) {
        NodeProvision p{g, acl, {}, g.scalar_rand(rng), {}};
        p.certificate.pub = g.mul_gen(p.identity_secret);
        p.certificate.issuer = "factory";
        directory[id] = p.certificate.pub;
        out.emplace(id, std::move(p));
    }
    for (auto& [id, p] : out) p.directory = directory;
    return out;
}

// --- IcNode ---

IcNode::IcNode(NodeId id, std::unique_ptr<RandomSource> rng)
    : id_(id), rng_(std::move(rng)) {}

Status IcNode::provision(const NodeProvision& cfg) {
    if (lifecycle_ == Lifecycle::Operational) {
        last_status_ = Status::Lifecycle;
        return Status::Lifecycle;
    }
    if (cfg.certificate.pub != cfg.group.mul_gen(cfg.identity_secret)) {
        last_status_ = Status::BadRequest;
        return Status::BadRequest;
    }
    group_ = cfg.group;
    identity_.id = id_;
    identity_.secret = cfg.identity_secret;
    identity_.cert = cfg.certificate;
    acl_ = cfg.acl;
    directory_ = cfg.directory;
    lifecycle_ = Lifecycle::Operational;
    last_status_ = Status::Ok;
    return Status::Ok;
}

void IcNode::reset() {
    lifecycle_ = Lifecycle::Uninitialized;
    group_.reset();
    identity_ = NodeIdentity{};
    acl_.clear();
    directory_.clear();
    slots_.clear();
    sessions_.clear();
    pending_.clear();
}

const KeySlot* IcNode::key_slot(const Id16& key_id) const {
    auto it = slots_.find(id_to_hex(key_id));
    return it == slots_.end() ? nullptr : &it->second;
}

const DkpgSession* IcNode::session(const Id16& sid) const {
    auto it = sessions_.find(id_to_hex(sid));
    return it == sessions_.end() ? nullptr : &it->second;
}

void IcNode::restore_key_slot(const Id16& key_id, KeySlot slot) {
    slots_.insert_or_assign(id_to_hex(key_id), std::move(slot));
}

Envelope IcNode::wrap(NodeId dst, BodyKind kind, Bytes body) {
    return make_signed_envelope(*group_, id_, dst, next_seq(), kind, std::move(body),
                                identity_.secret, *rng_);
}

Response IcNode::respond(const Command& cmd, Status st, Bytes payload) {
    last_status_ = st;
    return make_signed_response(*group_, cmd.opcode, cmd.id, st, std::move(payload),
                                identity_.secret, *rng_);
}

const AclEntry* IcNode::match_host(const Envelope& env, const Command& cmd) const {
    for (const AclEntry& e : acl_) {
        if (verify_envelope(*group_, env, e.sign_pub) &&
            verify_command(*group_, cmd, e.sign_pub)) {
            return &e;
        }
    }
    return nullptr;
}

std::vector<Envelope> IcNode::deliver(const Envelope& env) {
    std::vector<Envelope> out;
    if (lifecycle_ != Lifecycle::Operational) {
        // Not provisioned: refuse everything. The response cannot be signed
        // yet (no identity), which is fine for an error path.
        last_status_ = Status::NonOperational;
        if (env.kind == BodyKind::Command && env.src == kHostId) {
            Response r;
            r.id = Id16{};
            r.status = Status::NonOperational;
            r.signature = Bytes(kByteSigSize, 0);
            Envelope re;
            re.src = id_;
            re.dst = env.src;
            re.seq = ++seq_;
            re.kind = BodyKind::Response;
            re.body = r.encode();
            re.signature = Bytes(kByteSigSize, 0);
            out.push_back(std::move(re));
        }
        return out;
    }

    if (env.kind != BodyKind::Command) {
        last_status_ = Status::BadRequest;  // nodes only consume commands
        return out;
    }

    Command cmd;
    try {
        cmd = Command::decode(env.body);
    } catch (const EncodingError&) {
        last_status_ = Status::BadRequest;
        return out;
    }

    // Authentication. Host commands must match an ACL entry; peer commands
    // must verify against the sender's directory certificate.
    const AclEntry* host = nullptr;
    if (env.src == kHostId) {
        host = match_host(env, cmd);
        if (host == nullptr) {
            out.push_back(wrap(env.src, BodyKind::Response,
                               respond(cmd, Status::AccessDenied).encode()));
            return out;
        }
    } else {
        auto it = directory_.find(env.src);
        if (it == directory_.end() || !verify_envelope(*group_, env, it->second) ||
            !verify_command(*group_, cmd, it->second)) {
            last_status_ = Status::AccessDenied;
            return out;
        }
    }

    auto perm = [&](uint32_t bit) { return host != nullptr && (host->permissions & bit); };
    auto deny = [&](const Command& c) { return respond(c, Status::AccessDenied); };

    std::optional<Response> resp;
    switch (cmd.opcode) {
        case OpCode::KeygenInit:
            resp = perm(kPermKeyGen) ? op_keygen_init(cmd, out) : deny(cmd);
            break;
        case OpCode::KeygenStoreHash:
            if (env.src == kHostId) {
                resp = respond(cmd, Status::BadRequest);
            } else {
                last_status_ = op_store_hash(cmd, env.src, out);
            }
            break;
        case OpCode::KeygenStorePubkey:
            if (env.src == kHostId) {
                resp = respond(cmd, Status::BadRequest);
            } else {
                last_status_ = op_store_pubkey(cmd, env.src);
            }
            break;
        case OpCode::KeygenFinalize:
            // Also answerable to quorum peers; premature requests are the
            // "early reveal" case and get a protocol-order error.
            if (env.src != kHostId) {
                auto it = sessions_.find(id_to_hex(cmd.id));
                bool member = it != sessions_.end() &&
                              std::find(it->second.members.begin(), it->second.members.end(),
                                        env.src) != it->second.members.end();
                resp = member ? op_keygen_finalize(cmd) : respond(cmd, Status::AccessDenied);
            } else {
                resp = perm(kPermKeyGen) ? op_keygen_finalize(cmd) : deny(cmd);
            }
            break;
        case OpCode::DecShare:
            resp = perm(kPermDecrypt) ? op_dec_share(cmd, *host) : deny(cmd);
            break;
        case OpCode::CacheNonce:
            resp = perm(kPermSign) ? op_cache_nonce(cmd) : deny(cmd);
            break;
        case OpCode::SigShare:
            resp = perm(kPermSign) ? op_sig_share(cmd) : deny(cmd);
            break;
        case OpCode::RngShare:
            resp = perm(kPermRng) ? op_rng_share(cmd, *host) : deny(cmd);
            break;
        case OpCode::KeypropInstall:
            resp = perm(kPermKeyProp) ? op_keyprop_install(cmd) : deny(cmd);
            break;
        case OpCode::KeypropSplit:
            resp = perm(kPermKeyProp) ? op_keyprop_split(cmd, out) : deny(cmd);
            break;
        case OpCode::KeypropShare:
            if (env.src == kHostId) {
                resp = respond(cmd, Status::BadRequest);
            } else {
                last_status_ = op_keyprop_share(cmd, env.src);
            }
            break;
        case OpCode::KeypropFinalize:
            resp = perm(kPermKeyProp) ? op_keyprop_finalize(cmd) : deny(cmd);
            break;
    }

    if (resp) {
        out.push_back(wrap(env.src, BodyKind::Response, resp->encode()));
    }
    return out;
}

std::optional<Response> IcNode::handle(const Command& cmd, NodeId src,
                                       std::vector<Envelope>& out) {
    // Test entry that skips transport authentication.
    switch (cmd.opcode) {
        case OpCode::KeygenInit: return op_keygen_init(cmd, out);
        case OpCode::KeygenStoreHash:
            last_status_ = op_store_hash(cmd, src, out);
            return std::nullopt;
        case OpCode::KeygenStorePubkey:
            last_status_ = op_store_pubkey(cmd, src);
            return std::nullopt;
        case OpCode::KeygenFinalize: return op_keygen_finalize(cmd);
        case OpCode::DecShare: return op_dec_share(cmd, acl_.front());
        case OpCode::CacheNonce: return op_cache_nonce(cmd);
        case OpCode::SigShare: return op_sig_share(cmd);
        case OpCode::RngShare: return op_rng_share(cmd, acl_.front());
        case OpCode::KeypropInstall: return op_keyprop_install(cmd);
        case OpCode::KeypropSplit: return op_keyprop_split(cmd, out);
        case OpCode::KeypropShare:
            last_status_ = op_keyprop_share(cmd, src);
            return std::nullopt;
        case OpCode::KeypropFinalize: return op_keyprop_finalize(cmd);
    }
    return std::nullopt;
}

Response IcNode::op_keygen_init(const Command& cmd, std::vector<Envelope>& out) {
    KeygenInitPayload p;
    try {
        p = decode_keygen_init(cmd.payload);
    } catch (const EncodingError&) {
        return respond(cmd, Status::BadRequest);
    }
    const std::string sid = id_to_hex(cmd.id);
    if (sessions_.count(sid)) return respond(cmd, Status::BadRequest);
    if (slots_.count(id_to_hex(p.key_id))) return respond(cmd, Status::KeyExists);
    std::vector<NodeId> members = p.members;
    std::sort(members.begin(), members.end());
    if (members.empty() || std::adjacent_find(members.begin(), members.end()) != members.end()) {
        return respond(cmd, Status::BadRequest);
    }
    bool self_in = false;
    for (NodeId m : members) {
        if (m == id_) {
            self_in = true;
        } else if (!directory_.count(m)) {
            return respond(cmd, Status::BadRequest);
        }
    }
    if (!self_in) return respond(cmd, Status::BadRequest);

    DkpgSession s;
    s.sid = cmd.id;
    s.key_id = p.key_id;
    s.t = static_cast<uint16_t>(members.size());
    s.members = std::move(members);
    KeyTriplet trip = triplet_gen(*group_, *rng_);
    s.x = trip.x;
    s.Y = trip.Y;
    s.h = trip.h;
    s.hashes[id_] = s.h;
    s.phase = DkpgPhase::Committed;

    // Pairwise commitment exchange.
    for (NodeId m : s.members) {
        if (m == id_) continue;
        Command store = make_signed_command(*group_, OpCode::KeygenStoreHash, cmd.id, s.h,
                                            identity_.secret, *rng_);
        out.push_back(wrap(m, BodyKind::Command, store.encode()));
    }
    Bytes ack = s.h;
    DkpgSession& stored = sessions_.emplace(sid, std::move(s)).first->second;
    if (stored.t == 1) complete_reveal(stored, out);
    return respond(cmd, Status::Ok, ack);
}

void IcNode::complete_reveal(DkpgSession& s, std::vector<Envelope>& out) {
    // All commitments held: release the public share.
    s.phase = DkpgPhase::Revealed;
    for (NodeId m : s.members) {
        if (m == id_) continue;
        Command store = make_signed_command(*group_, OpCode::KeygenStorePubkey, s.sid,
                                            group_->encode(s.Y), identity_.secret, *rng_);
        out.push_back(wrap(m, BodyKind::Command, store.encode()));
    }
    s.pubkeys[id_] = s.Y;
    if (s.pubkeys.size() == s.t) finish_session(s);
}

void IcNode::finish_session(DkpgSession& s) {
    std::vector<Element> Y;
    std::vector<Bytes> H;
    for (NodeId m : s.members) {
        Y.push_back(s.pubkeys.at(m));
        H.push_back(s.hashes.at(m));
    }
    if (!commit_verify(*group_, Y, H)) {
        // Terminated: discard the triplet along with everything collected.
        s.phase = DkpgPhase::Aborted;
        s.x = Scalar{};
        s.Y = Element{};
        s.h.clear();
        s.hashes.clear();
        s.pubkeys.clear();
        last_status_ = Status::CommitmentFailure;
        return;
    }
    KeySlot slot;
    slot.x = s.x;
    slot.Y_own = s.Y;
    slot.Y_agg = share_aggr(*group_, Y);
    slot.prf_secret = rng_->bytes(32);
    slots_.insert_or_assign(id_to_hex(s.key_id), std::move(slot));
    s.phase = DkpgPhase::Done;
}

Status IcNode::op_store_hash(const Command& cmd, NodeId src, std::vector<Envelope>& out) {
    auto it = sessions_.find(id_to_hex(cmd.id));
    if (it == sessions_.end()) return Status::UnknownSession;
    DkpgSession& s = it->second;
    if (std::find(s.members.begin(), s.members.end(), src) == s.members.end()) {
        return Status::AccessDenied;
    }
    if (s.phase == DkpgPhase::Aborted) return Status::SessionAborted;
    if (s.phase != DkpgPhase::Committed) return Status::ProtocolOrder;
    if (cmd.payload.empty() || cmd.payload.size() > 64) return Status::BadRequest;
    auto existing = s.hashes.find(src);
    if (existing != s.hashes.end()) {
        if (existing->second == cmd.payload) return Status::Ok;  // redelivery
        s.phase = DkpgPhase::Aborted;  // equivocation
        return Status::CommitmentFailure;
    }
    s.hashes[src] = cmd.payload;
    if (s.hashes.size() == s.t) complete_reveal(s, out);
    return Status::Ok;
}

Status IcNode::op_store_pubkey(const Command& cmd, NodeId src) {
    auto it = sessions_.find(id_to_hex(cmd.id));
    if (it == sessions_.end()) return Status::UnknownSession;
    DkpgSession& s = it->second;
    if (std::find(s.members.begin(), s.members.end(), src) == s.members.end()) {
        return Status::AccessDenied;
    }
    if (s.phase == DkpgPhase::Aborted) return Status::SessionAborted;
    // Shares are only accepted once every commitment is held.
    if (s.phase != DkpgPhase::Revealed) return Status::ProtocolOrder;
    Element Y;
    try {
        Y = group_->decode_element(cmd.payload);
    } catch (const EncodingError&) {
        return Status::BadRequest;
    }
    auto existing = s.pubkeys.find(src);
    if (existing != s.pubkeys.end()) {
        if (existing->second == Y) return Status::Ok;
        s.phase = DkpgPhase::Aborted;
        return Status::CommitmentFailure;
    }
    s.pubkeys[src] = Y;
    if (s.pubkeys.size() == s.t) {
        finish_session(s);
        if (s.phase == DkpgPhase::Aborted) return Status::CommitmentFailure;
    }
    return Status::Ok;
}

Response IcNode::op_keygen_finalize(const Command& cmd) {
    auto it = sessions_.find(id_to_hex(cmd.id));
    if (it == sessions_.end()) return respond(cmd, Status::UnknownSession);
    DkpgSession& s = it->second;
    if (s.phase == DkpgPhase::Aborted) return respond(cmd, Status::CommitmentFailure);
    if (s.phase != DkpgPhase::Done) return respond(cmd, Status::ProtocolOrder);
    Bytes payload = group_->encode(slots_.at(id_to_hex(s.key_id)).Y_agg);
    append(payload, group_->encode(s.Y));
    return respond(cmd, Status::Ok, payload);
}

Response IcNode::op_dec_share(const Command& cmd, const AclEntry& host) {
    auto slot = slots_.find(id_to_hex(cmd.id));
    if (slot == slots_.end()) return respond(cmd, Status::UnknownKey);
    DecSharePayload p;
    try {
        p = decode_dec_share(*group_, cmd.payload);
    } catch (const EncodingError&) {
        return respond(cmd, Status::BadRequest);
    }
    const KeySlot& ks = slot->second;
    Element A = dec_share(*group_, p.c1, ks.x);
    DecShareResponse r;
    r.flags = p.flags;
    if (p.flags & kFlagProof) {
        r.proof = dleq_prove(*group_, ks.x, p.c1, ks.Y_own, A, *rng_);
    }
    if (p.flags & kFlagSeal) {
        r.sealed_A = seal_bytes(*group_, group_->encode(A), host.enc_pub, *rng_);
    } else {
        r.A = A;
    }
    return respond(cmd, Status::Ok, encode(*group_, r));
}

Response IcNode::op_cache_nonce(const Command& cmd) {
    auto slot = slots_.find(id_to_hex(cmd.id));
    if (slot == slots_.end()) return respond(cmd, Status::UnknownKey);
    CacheNoncePayload p;
    try {
        p = decode_cache_nonce(cmd.payload);
    } catch (const EncodingError&) {
        return respond(cmd, Status::BadRequest);
    }
    if (p.count == 0 || p.count > 1024 || p.j_start == 0 ||
        p.j_start > UINT64_MAX - p.count) {
        return respond(cmd, Status::BadRequest);
    }
    const KeySlot& ks = slot->second;
    Bytes payload;
    for (uint64_t j = p.j_start; j < p.j_start + p.count; ++j) {
        if (ks.ledger.consumed(j)) return respond(cmd, Status::ReplayRejected);
        Element R = group_->mul_gen(group_->prf(ks.prf_secret, j));
        append(payload, group_->encode(R));
    }
    return respond(cmd, Status::Ok, payload);
}

Response IcNode::op_sig_share(const Command& cmd) {
    auto slot = slots_.find(id_to_hex(cmd.id));
    if (slot == slots_.end()) return respond(cmd, Status::UnknownKey);
    SigSharePayload p;
    try {
        p = decode_sig_share(*group_, cmd.payload);
    } catch (const EncodingError&) {
        return respond(cmd, Status::BadRequest);
    }
    KeySlot& ks = slot->second;
    // The index is burned before any share bytes exist.
    if (!ks.ledger.consume(p.j)) return respond(cmd, Status::ReplayRejected);
    Scalar eps = sig_challenge(*group_, p.R, p.hm, p.j);
    Scalar r_ij = group_->prf(ks.prf_secret, p.j);
    Scalar sigma = sig_share_value(*group_, r_ij, ks.x, eps);
    Bytes payload = group_->encode(sigma);
    append(payload, group_->encode(eps));
    return respond(cmd, Status::Ok, payload);
}

Response IcNode::op_rng_share(const Command& cmd, const AclEntry& host) {
    uint8_t flags = cmd.payload.size() == 1 ? cmd.payload[0] : 0;
    if (cmd.payload.size() > 1) return respond(cmd, Status::BadRequest);
    Bytes b = rng_->bytes(32);
    Bytes payload;
    payload.push_back(flags);
    if (flags & kFlagSeal) {
        append(payload, encode(*group_, seal_bytes(*group_, b, host.enc_pub, *rng_)));
    } else {
        append(payload, b);
    }
    return respond(cmd, Status::Ok, payload);
}

Response IcNode::op_keyprop_install(const Command& cmd) {
    const std::string key = id_to_hex(cmd.id);
    if (slots_.count(key)) return respond(cmd, Status::KeyExists);
    KeypropInstallPayload p;
    try {
        p = decode_keyprop_install(*group_, cmd.payload);
    } catch (const EncodingError&) {
        return respond(cmd, Status::BadRequest);
    }
    if (p.sources.empty()) return respond(cmd, Status::BadRequest);
    KeypropPending pending;
    pending.Y_agg = p.Y_agg;
    pending.sources = p.sources;
    std::sort(pending.sources.begin(), pending.sources.end());
    pending_.insert_or_assign(key, std::move(pending));
    return respond(cmd, Status::Ok);
}

Response IcNode::op_keyprop_split(const Command& cmd, std::vector<Envelope>& out) {
    auto slot = slots_.find(id_to_hex(cmd.id));
    if (slot == slots_.end()) return respond(cmd, Status::UnknownKey);
    KeypropSplitPayload p;
    try {
        p = decode_keyprop_split(cmd.payload);
    } catch (const EncodingError&) {
        return respond(cmd, Status::BadRequest);
    }
    if (p.targets.empty()) return respond(cmd, Status::BadRequest);
    for (NodeId t : p.targets) {
        if (!directory_.count(t)) return respond(cmd, Status::BadRequest);
    }
    const KeySlot& ks = slot->second;
    std::vector<Scalar> shares;
    if (p.targets.size() == 1) {
        shares.push_back(ks.x);  // degenerate re-sharing: plain transfer
    } else {
        shares = secret_share(*group_, ks.x, p.targets.size(), *rng_).v;
    }
    // One fragment per target, sealed end to end: no single envelope may
    // carry a complete share of x.
    for (size_t i = 0; i < p.targets.size(); ++i) {
        SealedBytes sealed = seal_bytes(*group_, group_->encode(shares[i]),
                                        directory_.at(p.targets[i]), *rng_);
        Command share_cmd = make_signed_command(*group_, OpCode::KeypropShare, cmd.id,
                                                encode(*group_, sealed), identity_.secret,
                                                *rng_);
        out.push_back(wrap(p.targets[i], BodyKind::Command, share_cmd.encode()));
    }
    return respond(cmd, Status::Ok);
}

Status IcNode::op_keyprop_share(const Command& cmd, NodeId src) {
    auto it = pending_.find(id_to_hex(cmd.id));
    if (it == pending_.end()) return Status::ProtocolOrder;
    KeypropPending& pending = it->second;
    if (!std::binary_search(pending.sources.begin(), pending.sources.end(), src)) {
        return Status::AccessDenied;
    }
    if (pending.received.count(src)) return Status::ProtocolOrder;
    Scalar share;
    try {
        size_t off = 0;
        SealedBytes sealed = decode_sealed(*group_, cmd.payload, off);
        if (off != cmd.payload.size()) return Status::BadRequest;
        share = group_->decode_scalar(open_bytes(*group_, sealed, identity_.secret));
    } catch (const EncodingError&) {
        return Status::BadRequest;
    }
    pending.received[src] = share;
    if (pending.received.size() == pending.sources.size()) {
        std::vector<Scalar> incoming;
        for (NodeId s : pending.sources) incoming.push_back(pending.received.at(s));
        return keyprop_absorb(cmd.id, incoming);
    }
    return Status::Ok;
}

Status IcNode::keyprop_absorb(const Id16& key_id, const std::vector<Scalar>& incoming) {
    const std::string key = id_to_hex(key_id);
    auto it = pending_.find(key);
    if (it == pending_.end()) {
        last_status_ = Status::ProtocolOrder;  // metadata not installed
        return last_status_;
    }
    if (incoming.size() != it->second.sources.size()) {
        last_status_ = Status::WrongCount;
        return last_status_;
    }
    KeySlot slot;
    slot.x = share_aggr(*group_, incoming);
    slot.Y_own = group_->mul_gen(slot.x);
    slot.Y_agg = it->second.Y_agg;
    slot.prf_secret = rng_->bytes(32);
    slots_.insert_or_assign(key, std::move(slot));
    pending_.erase(it);
    last_status_ = Status::Ok;
    return Status::Ok;
}

Response IcNode::op_keyprop_finalize(const Command& cmd) {
    const std::string key = id_to_hex(cmd.id);
    if (pending_.count(key)) return respond(cmd, Status::ProtocolOrder);  // still waiting
    auto slot = slots_.find(key);
    if (slot == slots_.end()) return respond(cmd, Status::UnknownKey);
    return respond(cmd, Status::Ok, group_->encode(slot->second.Y_own));
}

}  // namespace qhsm
