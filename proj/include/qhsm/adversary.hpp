#pragma once

#include <optional>
#include <set>

#include "qhsm/node.hpp"

namespace qhsm {

/// Behaviors a compromised node can mount. A node listed as malicious with
/// attack None is a passive insider: it follows the protocol but its
/// secrets count as known to the adversary.
enum class NodeAttack : uint8_t {
    None,
    RogueKeyWithhold,  // never release the commitment; stall the quorum
    RogueKeyCraft,     // commit honestly, then reveal a crafted share
    TamperDecShare,    // return A_i + G instead of the true share
    WrongFinalize,     // report a wrong aggregate key
    GarbageSigShare,   // return a corrupted signature share
    RefuseOp,          // drop commands with a chosen opcode (denial of service)
};

struct NodeAttackSpec {
    NodeAttack kind = NodeAttack::None;
    OpCode refuse_opcode = OpCode::DecShare;   // for RefuseOp
    std::optional<Element> rogue_target;       // for RogueKeyCraft
};

const char* attack_name(NodeAttack a);

/// Predicate over envelopes for controller rules.
struct RuleMatch {
    std::optional<OpCode> opcode;
    std::optional<BodyKind> kind;
    std::optional<NodeId> src;
    std::optional<NodeId> dst;
    std::optional<uint64_t> min_slot;
    std::optional<uint64_t> max_slot;

    bool matches(const Envelope& env, uint64_t slot) const;
};

enum class RuleAction : uint8_t { Drop, Modify, Duplicate, Delay, Inject };

const char* rule_action_name(RuleAction a);

/// One controller misbehavior: the first matching rule is applied to a
/// routed envelope, at most max_hits times.
struct ControllerRule {
    RuleMatch match;
    RuleAction action = RuleAction::Drop;
    uint32_t delay_slots = 1;
    uint32_t max_hits = UINT32_MAX;
    // Modify parameters: flip a body byte and/or replace the command
    // payload. Re-signing only succeeds when the adversary holds the
    // sender's key (compromised node); otherwise the recipient will see a
    // signature failure.
    std::optional<size_t> xor_offset;
    uint8_t xor_value = 0x01;
    std::optional<Bytes> replace_payload;
    std::optional<Envelope> inject;
};

struct AdversarySpec {
    std::map<NodeId, NodeAttackSpec> malicious;
    std::vector<ControllerRule> rules;
    bool collusion_channel = true;
    uint64_t seed = 0;
};

/// A compromised IC: wraps the honest implementation and deviates per the
/// attack spec. The wrapper has full access to the inner state, modeling
/// malicious firmware on the same die.
class MaliciousNode : public Node {
public:
    MaliciousNode(NodeId id, std::unique_ptr<RandomSource> rng, NodeAttackSpec spec);

    IcNode& inner() { return inner_; }
    const IcNode& inner() const { return inner_; }
    const NodeAttackSpec& attack() const { return spec_; }

    NodeId id() const override { return inner_.id(); }
    const Certificate& certificate() const override { return inner_.certificate(); }
    std::vector<Envelope> deliver(const Envelope& env) override;
    Status last_status() const override { return inner_.last_status(); }

private:
    std::vector<Envelope> filter_outbound(std::vector<Envelope> out, OpCode drop_op);
    void maybe_craft_reveal(const Envelope& env, std::vector<Envelope>& out);
    std::vector<Envelope> tampered_dec_share(const Envelope& env);
    void rewrite_finalize(std::vector<Envelope>& out);
    void rewrite_sig_share(std::vector<Envelope>& out);

    IcNode inner_;
    NodeAttackSpec spec_;
    std::set<std::string> crafted_;  // sessions where the forged reveal went out
};

}  // namespace qhsm
