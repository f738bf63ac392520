#pragma once

#include <map>
#include <vector>

#include "qhsm/adversary.hpp"
#include "qhsm/wire.hpp"

namespace qhsm {

enum class FabricAction : uint8_t {
    Submitted = 0,
    Delivered = 1,
    Dropped = 2,
    Modified = 3,
    Duplicated = 4,
    Delayed = 5,
    Injected = 6,
    RoutingError = 7,
};

const char* fabric_action_name(FabricAction a);

struct TranscriptRecord {
    uint64_t slot = 0;
    FabricAction action = FabricAction::Submitted;
    Bytes envelope;
    Status handler_status = Status::Ok;
    NodeId handled_by = 0;
};

/// Append-only, totally ordered record of everything the controller saw and
/// did. Byte-identical across runs with the same configuration and seed.
class Transcript {
public:
    void append(TranscriptRecord rec);
    const std::vector<TranscriptRecord>& records() const { return records_; }
    size_t size() const { return records_.size(); }

    /// Length-prefixed binary export.
    Bytes serialize() const;
    static std::vector<TranscriptRecord> parse(ByteView data);
    /// Line-oriented human-readable log.
    std::string to_log() const;
    /// True if any recorded envelope contains the byte pattern. This is the
    /// secrecy tap used to assert that secrets never leave a node.
    bool contains_bytes(ByteView needle) const;

private:
    std::vector<TranscriptRecord> records_;
};

/// The untrusted controller: routes unicast/broadcast envelopes on a logical
/// slot clock, records the transcript, and executes the adversary rules.
class Fabric {
public:
    Fabric(Group group, uint64_t seed);

    void set_rules(std::vector<ControllerRule> rules);
    /// Registers an identity key the adversary holds (compromised node);
    /// enables re-signing in Modify rules.
    void set_compromised(NodeId id, Scalar identity_secret);

    void attach(Node* node);

    /// Routes one envelope through adversary processing. Returns false on a
    /// routing error (unknown destination).
    bool submit(const Envelope& env);

    /// Advances one slot: delivers everything due, collects node output.
    void step();
    /// Steps until no deliveries are pending or max_slots have elapsed.
    void run(uint64_t max_slots);

    uint64_t slot() const { return slot_; }
    bool idle() const { return pending_.empty(); }
    std::vector<Envelope> take_host_inbox();

    Transcript& transcript() { return transcript_; }
    const Transcript& transcript() const { return transcript_; }
    const std::map<NodeId, Node*>& nodes() const { return nodes_; }

private:
    struct Pending {
        uint64_t deliver_slot = 0;
        uint64_t order = 0;
        NodeId recipient = 0;
        Envelope env;
    };

    void enqueue(const Envelope& env, uint64_t delay);
    bool enqueue_checked(const Envelope& env, uint64_t delay);
    Envelope mutate(const Envelope& env, const ControllerRule& rule);
    void record(FabricAction action, const Envelope& env, Status st = Status::Ok,
                NodeId by = 0);

    Group group_;
    uint64_t slot_ = 0;
    uint64_t order_counter_ = 0;
    std::map<NodeId, Node*> nodes_;
    std::vector<Pending> pending_;
    std::vector<Envelope> host_inbox_;
    std::vector<ControllerRule> rules_;
    std::vector<uint32_t> rule_hits_;
    std::map<NodeId, Scalar> compromised_;
    Transcript transcript_;
    Drbg rng_;
};

}  // namespace qhsm
