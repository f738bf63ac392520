#include "qhsm/fabric.hpp"

#include <algorithm>
#include <sstream>

#include "qhsm/errors.hpp"

namespace qhsm {

const char* fabric_action_name(FabricAction a) {
    switch (a) {
        case FabricAction::Submitted: return "submit";
        case FabricAction::Delivered: return "deliver";
        case FabricAction::Dropped: return "drop";
        case FabricAction::Modified: return "modify";
        case FabricAction::Duplicated: return "duplicate";
        case FabricAction::Delayed: return "delay";
        case FabricAction::Injected: return "inject";
        case FabricAction::RoutingError: return "routing-error";
    }
    return "?";
}

void Transcript::append(TranscriptRecord rec) { records_.push_back(std::move(rec)); }

Bytes Transcript::serialize() const {
    Bytes out;
    for (const TranscriptRecord& r : records_) {
        Bytes rec;
        append_u64(rec, r.slot);
        rec.push_back(static_cast<uint8_t>(r.action));
        rec.push_back(static_cast<uint8_t>(r.handler_status));
        append_u16(rec, r.handled_by);
        append_u32(rec, static_cast<uint32_t>(r.envelope.size()));
        qhsm::append(rec, r.envelope);
        append_u32(out, static_cast<uint32_t>(rec.size()));
        qhsm::append(out, rec);
    }
    return out;
}

std::vector<TranscriptRecord> Transcript::parse(ByteView data) {
    std::vector<TranscriptRecord> out;
    size_t off = 0;
    while (off < data.size()) {
        uint32_t len = read_u32(data, off);
        Bytes rec = read_exact(data, off, len);
        size_t ro = 0;
        TranscriptRecord r;
        r.slot = read_u64(rec, ro);
        r.action = static_cast<FabricAction>(rec.at(ro++));
        r.handler_status = static_cast<Status>(rec.at(ro++));
        r.handled_by = read_u16(rec, ro);
        uint32_t env_len = read_u32(rec, ro);
        r.envelope = read_exact(rec, ro, env_len);
        out.push_back(std::move(r));
    }
    return out;
}

namespace {

std::string describe_envelope(ByteView bytes) {
    std::ostringstream os;
    try {
        Envelope env = Envelope::decode(bytes);
        os << "src=" << env.src << " dst=" << env.dst << " seq=" << env.seq;
        if (env.kind == BodyKind::Command) {
            Command cmd = Command::decode(env.body);
            os << " cmd=" << opcode_name(cmd.opcode) << " id=" << id_to_hex(cmd.id).substr(0, 8);
        } else {
            Response r = Response::decode(env.body);
            os << " resp=" << opcode_name(r.opcode) << " status=" << status_name(r.status)
               << " id=" << id_to_hex(r.id).substr(0, 8);
        }
    } catch (const EncodingError&) {
        os << "unparsable len=" << bytes.size();
    }
    return os.str();
}

}  // namespace

std::string Transcript::to_log() const {
    std::ostringstream os;
    for (const TranscriptRecord& r : records_) {
        os << "slot=" << r.slot << " " << fabric_action_name(r.action);
        if (r.action == FabricAction::Delivered && r.handled_by != kHostId) {
            os << " node=" << r.handled_by << " handler=" << status_name(r.handler_status);
        }
        os << " | " << describe_envelope(r.envelope) << "\n";
    }
    return os.str();
}

bool Transcript::contains_bytes(ByteView needle) const {
    for (const TranscriptRecord& r : records_) {
        if (contains_subsequence(r.envelope, needle)) return true;
    }
    return false;
}

Fabric::Fabric(Group group, uint64_t seed)
    : group_(std::move(group)), rng_(Drbg(seed).fork("fabric")) {}

void Fabric::set_rules(std::vector<ControllerRule> rules) {
    rules_ = std::move(rules);
    rule_hits_.assign(rules_.size(), 0);
}

void Fabric::set_compromised(NodeId id, Scalar identity_secret) {
    compromised_.insert_or_assign(id, std::move(identity_secret));
}

void Fabric::attach(Node* node) { nodes_[node->id()] = node; }

void Fabric::record(FabricAction action, const Envelope& env, Status st, NodeId by) {
    transcript_.append(TranscriptRecord{slot_, action, env.encode(), st, by});
}

Envelope Fabric::mutate(const Envelope& env, const ControllerRule& rule) {
    Envelope m = env;
    if (rule.replace_payload) {
        try {
            if (m.kind == BodyKind::Command) {
                Command cmd = Command::decode(m.body);
                cmd.payload = *rule.replace_payload;
                auto key = compromised_.find(m.src);
                if (key != compromised_.end()) {
                    cmd.signature = encode_byte_sig(
                        group_, sign_bytes(group_, key->second, cmd.signed_span(), rng_));
                }
                m.body = cmd.encode();
            } else {
                Response r = Response::decode(m.body);
                r.payload = *rule.replace_payload;
                auto key = compromised_.find(m.src);
                if (key != compromised_.end()) {
                    r.signature = encode_byte_sig(
                        group_, sign_bytes(group_, key->second, r.signed_span(), rng_));
                }
                m.body = r.encode();
            }
        } catch (const EncodingError&) {
            // leave body as is; the flip below may still apply
        }
    }
    if (rule.xor_offset && !m.body.empty()) {
        m.body[*rule.xor_offset % m.body.size()] ^= rule.xor_value;
    }
    auto key = compromised_.find(m.src);
    if (key != compromised_.end()) {
        m.signature =
            encode_byte_sig(group_, sign_bytes(group_, key->second, m.signed_span(), rng_));
    }
    return m;
}

bool Fabric::enqueue_checked(const Envelope& env, uint64_t delay) {
    if (env.dst == kBroadcastId) {
        for (auto& [id, node] : nodes_) {
            if (id == env.src) continue;
            pending_.push_back(Pending{slot_ + delay, order_counter_++, id, env});
        }
        return true;
    }
    if (env.dst == kHostId) {
        pending_.push_back(Pending{slot_ + delay, order_counter_++, kHostId, env});
        return true;
    }
    auto it = nodes_.find(env.dst);
    if (it == nodes_.end()) return false;
    pending_.push_back(Pending{slot_ + delay, order_counter_++, env.dst, env});
    return true;
}

void Fabric::enqueue(const Envelope& env, uint64_t delay) {
    if (!enqueue_checked(env, delay)) record(FabricAction::RoutingError, env);
}

bool Fabric::submit(const Envelope& env) {
    record(FabricAction::Submitted, env);
    for (size_t i = 0; i < rules_.size(); ++i) {
        const ControllerRule& rule = rules_[i];
        if (rule_hits_[i] >= rule.max_hits) continue;
        if (!rule.match.matches(env, slot_)) continue;
        ++rule_hits_[i];
        switch (rule.action) {
            case RuleAction::Drop:
                record(FabricAction::Dropped, env);
                return true;
            case RuleAction::Delay: {
                record(FabricAction::Delayed, env);
                enqueue(env, 1 + rule.delay_slots);
                return true;
            }
            case RuleAction::Duplicate: {
                record(FabricAction::Duplicated, env);
                enqueue(env, 1);
                enqueue(env, 1);
                return true;
            }
            case RuleAction::Modify: {
                Envelope m = mutate(env, rule);
                record(FabricAction::Modified, m);
                enqueue(m, 1);
                return true;
            }
            case RuleAction::Inject: {
                enqueue(env, 1);
                if (rule.inject) {
                    record(FabricAction::Injected, *rule.inject);
                    enqueue(*rule.inject, 1);
                }
                return true;
            }
        }
    }
    if (!enqueue_checked(env, 1)) {
        record(FabricAction::RoutingError, env);
        return false;
    }
    return true;
}

void Fabric::step() {
    ++slot_;
    std::vector<Pending> due;
    std::vector<Pending> rest;
    for (Pending& p : pending_) {
        (p.deliver_slot <= slot_ ? due : rest).push_back(std::move(p));
    }
    pending_ = std::move(rest);
    std::sort(due.begin(), due.end(),
              [](const Pending& a, const Pending& b) { return a.order < b.order; });
    for (const Pending& p : due) {
        if (p.recipient == kHostId) {
            record(FabricAction::Delivered, p.env, Status::Ok, kHostId);
            host_inbox_.push_back(p.env);
            continue;
        }
        Node* node = nodes_.at(p.recipient);
        std::vector<Envelope> out = node->deliver(p.env);
        record(FabricAction::Delivered, p.env, node->last_status(), p.recipient);
        for (const Envelope& e : out) submit(e);
    }
}

void Fabric::run(uint64_t max_slots) {
    uint64_t start = slot_;
    while (!idle() && slot_ - start < max_slots) step();
}

std::vector<Envelope> Fabric::take_host_inbox() {
    std::vector<Envelope> out = std::move(host_inbox_);
    host_inbox_.clear();
    return out;
}

}  // namespace qhsm
