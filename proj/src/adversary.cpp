#include "qhsm/adversary.hpp"

#include <algorithm>

#include "qhsm/errors.hpp"

namespace qhsm {

const char* attack_name(NodeAttack a) {
    switch (a) {
        case NodeAttack::None: return "none";
        case NodeAttack::RogueKeyWithhold: return "rogue-key-withhold";
        case NodeAttack::RogueKeyCraft: return "rogue-key-craft";
        case NodeAttack::TamperDecShare: return "tamper-dec-share";
        case NodeAttack::WrongFinalize: return "wrong-finalize";
        case NodeAttack::GarbageSigShare: return "garbage-sig-share";
        case NodeAttack::RefuseOp: return "refuse-op";
    }
    return "?";
}

const char* rule_action_name(RuleAction a) {
    switch (a) {
        case RuleAction::Drop: return "drop";
        case RuleAction::Modify: return "modify";
        case RuleAction::Duplicate: return "duplicate";
        case RuleAction::Delay: return "delay";
        case RuleAction::Inject: return "inject";
    }
    return "?";
}

bool RuleMatch::matches(const Envelope& env, uint64_t slot) const {
    if (src && env.src != *src) return false;
    if (dst && env.dst != *dst) return false;
    if (min_slot && slot < *min_slot) return false;
    if (max_slot && slot > *max_slot) return false;
    if (kind && env.kind != *kind) return false;
    if (opcode) {
        try {
            uint8_t op = env.kind == BodyKind::Command
                             ? static_cast<uint8_t>(Command::decode(env.body).opcode)
                             : static_cast<uint8_t>(Response::decode(env.body).opcode);
            if (op != static_cast<uint8_t>(*opcode)) return false;
        } catch (const EncodingError&) {
            return false;
        }
    }
    return true;
}

MaliciousNode::MaliciousNode(NodeId id, std::unique_ptr<RandomSource> rng,
                             NodeAttackSpec spec)
    : inner_(id, std::move(rng)), spec_(spec) {}

std::vector<Envelope> MaliciousNode::filter_outbound(std::vector<Envelope> out,
                                                     OpCode drop_op) {
    std::vector<Envelope> kept;
    for (Envelope& e : out) {
        bool drop = false;
        if (e.kind == BodyKind::Command) {
            try {
                drop = Command::decode(e.body).opcode == drop_op;
            } catch (const EncodingError&) {
            }
        }
        if (!drop) kept.push_back(std::move(e));
    }
    return kept;
}

void MaliciousNode::maybe_craft_reveal(const Envelope& env, std::vector<Envelope>& out) {
    if (!spec_.rogue_target) return;
    Command cmd;
    try {
        cmd = Command::decode(env.body);
    } catch (const EncodingError&) {
        return;
    }
    if (cmd.opcode != OpCode::KeygenStorePubkey) return;
    const std::string sid = id_to_hex(cmd.id);
    if (crafted_.count(sid)) return;
    const DkpgSession* s = inner_.session(cmd.id);
    if (s == nullptr || s->pubkeys.size() != s->t) return;
    // All honest reveals are visible: choose our share so the aggregate
    // would land on the target, and release it late.
    const Group& g = inner_.group();
    Element sum_honest = g.identity();
    for (const auto& [nid, Y] : s->pubkeys) {
        if (nid != inner_.id()) sum_honest = g.add(sum_honest, Y);
    }
    Element crafted = g.sub(*spec_.rogue_target, sum_honest);
    for (NodeId m : s->members) {
        if (m == inner_.id()) continue;
        Command store = make_signed_command(g, OpCode::KeygenStorePubkey, cmd.id,
                                            g.encode(crafted), inner_.identity_secret(),
                                            inner_.rng());
        out.push_back(inner_.wrap(m, BodyKind::Command, store.encode()));
    }
    crafted_.insert(sid);
}

std::vector<Envelope> MaliciousNode::tampered_dec_share(const Envelope& env) {
    std::vector<Envelope> out;
    Command cmd;
    try {
        cmd = Command::decode(env.body);
    } catch (const EncodingError&) {
        return out;
    }
    const KeySlot* slot = inner_.key_slot(cmd.id);
    if (slot == nullptr) return out;
    const Group& g = inner_.group();
    DecSharePayload p;
    try {
        p = decode_dec_share(g, cmd.payload);
    } catch (const EncodingError&) {
        return out;
    }
    Element honest = dec_share(g, p.c1, slot->x);
    Element forged = g.add(honest, g.generator());
    DecShareResponse r;
    r.flags = p.flags;
    if (p.flags & kFlagProof) {
        // A proof made for the forged share; it cannot verify, which is
        // exactly what the host-side check must expose.
        r.proof = dleq_prove(g, slot->x, p.c1, slot->Y_own, forged, inner_.rng());
    }
    if (p.flags & kFlagSeal) {
        r.sealed_A = seal_bytes(g, g.encode(forged), inner_.acl().front().enc_pub,
                                inner_.rng());
    } else {
        r.A = forged;
    }
    Response resp = make_signed_response(g, cmd.opcode, cmd.id, Status::Ok, encode(g, r),
                                         inner_.identity_secret(), inner_.rng());
    out.push_back(inner_.wrap(env.src, BodyKind::Response, resp.encode()));
    return out;
}

void MaliciousNode::rewrite_finalize(std::vector<Envelope>& out) {
    const Group& g = inner_.group();
    for (Envelope& e : out) {
        if (e.kind != BodyKind::Response) continue;
        try {
            Response r = Response::decode(e.body);
            if (r.opcode != OpCode::KeygenFinalize || r.status != Status::Ok) continue;
            size_t w = g.element_size();
            Element y_agg = g.decode_element(ByteView(r.payload).subspan(0, w));
            Element y_own = g.decode_element(ByteView(r.payload).subspan(w, w));
            Bytes payload = g.encode(g.add(y_agg, g.generator()));
            append(payload, g.encode(y_own));
            Response forged = make_signed_response(g, r.opcode, r.id, r.status, payload,
                                                   inner_.identity_secret(), inner_.rng());
            e = inner_.wrap(e.dst, BodyKind::Response, forged.encode());
        } catch (const EncodingError&) {
        }
    }
}

void MaliciousNode::rewrite_sig_share(std::vector<Envelope>& out) {
    const Group& g = inner_.group();
    for (Envelope& e : out) {
        if (e.kind != BodyKind::Response) continue;
        try {
            Response r = Response::decode(e.body);
            if (r.opcode != OpCode::SigShare || r.status != Status::Ok) continue;
            size_t w = g.scalar_size();
            Scalar sigma = g.decode_scalar(ByteView(r.payload).subspan(0, w));
            Scalar eps = g.decode_scalar(ByteView(r.payload).subspan(w, w));
            Bytes payload = g.encode(g.add(sigma, g.scalar_u64(1)));
            append(payload, g.encode(eps));
            Response forged = make_signed_response(g, r.opcode, r.id, r.status, payload,
                                                   inner_.identity_secret(), inner_.rng());
            e = inner_.wrap(e.dst, BodyKind::Response, forged.encode());
        } catch (const EncodingError&) {
        }
    }
}

std::vector<Envelope> MaliciousNode::deliver(const Envelope& env) {
    if (spec_.kind == NodeAttack::RefuseOp && env.kind == BodyKind::Command) {
        try {
            if (Command::decode(env.body).opcode == spec_.refuse_opcode) {
                return {};  // silent denial
            }
        } catch (const EncodingError&) {
        }
    }
    if (spec_.kind == NodeAttack::TamperDecShare && env.kind == BodyKind::Command) {
        try {
            if (Command::decode(env.body).opcode == OpCode::DecShare &&
                inner_.lifecycle() == Lifecycle::Operational) {
                return tampered_dec_share(env);
            }
        } catch (const EncodingError&) {
        }
    }

    std::vector<Envelope> out = inner_.deliver(env);

    switch (spec_.kind) {
        case NodeAttack::RogueKeyWithhold:
            out = filter_outbound(std::move(out), OpCode::KeygenStoreHash);
            out = filter_outbound(std::move(out), OpCode::KeygenStorePubkey);
            break;
        case NodeAttack::RogueKeyCraft:
            out = filter_outbound(std::move(out), OpCode::KeygenStorePubkey);
            maybe_craft_reveal(env, out);
            break;
        case NodeAttack::WrongFinalize:
            rewrite_finalize(out);
            break;
        case NodeAttack::GarbageSigShare:
            rewrite_sig_share(out);
            break;
        default:
            break;
    }
    return out;
}

}  // namespace qhsm
