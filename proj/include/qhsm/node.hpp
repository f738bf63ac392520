#pragma once

#include <map>
#include <memory>
#include <optional>
#include <vector>

#include "qhsm/elgamal.hpp"
#include "qhsm/group.hpp"
#include "qhsm/multisig.hpp"
#include "qhsm/threshold.hpp"
#include "qhsm/wire.hpp"

namespace qhsm {

enum class Lifecycle { Uninitialized, Operational };

enum Permission : uint32_t {
    kPermKeyGen = 1u << 0,
    kPermDecrypt = 1u << 1,
    kPermSign = 1u << 2,
    kPermRng = 1u << 3,
    kPermKeyProp = 1u << 4,
    kPermAll = 0x1F,
};

struct AclEntry {
    Element sign_pub;  // host command authentication key
    Element enc_pub;   // host key for sealed response payloads
    uint32_t permissions = kPermAll;
};

struct Certificate {
    Element pub;
    std::string issuer;
};

struct NodeIdentity {
    NodeId id = 0;
    Scalar secret;
    Certificate cert;
};

/// Everything loaded in the trusted provisioning step: domain parameters,
/// host ACL, peer directory, and the factory-issued identity.
struct NodeProvision {
    Group group;
    std::vector<AclEntry> acl;
    std::map<NodeId, Element> directory;
    Scalar identity_secret;
    Certificate certificate;
};

/// Builds consistent provisioning bundles for a set of nodes: a fresh
/// identity per node (derived from rng), one shared directory, one ACL.
std::map<NodeId, NodeProvision> make_provisioning(const Group& g,
                                                  const std::vector<NodeId>& ids,
                                                  const std::vector<AclEntry>& acl,
                                                  RandomSource& rng);

struct KeySlot {
    Scalar x;
    Element Y_own;
    Element Y_agg;
    Bytes prf_secret;
    NonceLedger ledger;
};

enum class DkpgPhase { Idle, Committed, Revealed, Done, Aborted };

struct DkpgSession {
    Id16 sid{};
    Id16 key_id{};
    uint16_t t = 0;
    std::vector<NodeId> members;  // sorted, includes self
    Scalar x;
    Element Y;
    Bytes h;
    std::map<NodeId, Bytes> hashes;
    std::map<NodeId, Element> pubkeys;
    DkpgPhase phase = DkpgPhase::Idle;
};

/// Fabric-facing interface; honest and compromised nodes both implement it.
class Node {
public:
    virtual ~Node() = default;
    virtual NodeId id() const = 0;
    virtual const Certificate& certificate() const = 0;
    /// Processes one delivered envelope, returns outbound envelopes.
    virtual std::vector<Envelope> deliver(const Envelope& env) = 0;
    /// Status of the most recent delivery (recorded into the transcript).
    virtual Status last_status() const = 0;
};

/// The emulated processing IC: a strictly sequential state machine holding
/// key shares, PRF secrets, the ACL and the signing-index ledger.
class IcNode : public Node {
public:
    IcNode(NodeId id, std::unique_ptr<RandomSource> rng);

    // Trusted operator surface (not fabric traffic).
    Status provision(const NodeProvision& cfg);
    void reset();
    Lifecycle lifecycle() const { return lifecycle_; }

    NodeId id() const override { return id_; }
    const Certificate& certificate() const override { return identity_.cert; }
    std::vector<Envelope> deliver(const Envelope& env) override;
    Status last_status() const override { return last_status_; }

    /// Direct command entry used by the message path and by tests.
    /// Returns the response (if the opcode produces one) and appends any
    /// node-originated envelopes to |out|.
    std::optional<Response> handle(const Command& cmd, NodeId src,
                                   std::vector<Envelope>& out);

    /// Combines incoming re-sharing fragments into this node's new share.
    Status keyprop_absorb(const Id16& key_id, const std::vector<Scalar>& incoming);

    // Emulator introspection: lets the bench play colluding insiders and
    // auditors, and lets the CLI persist device state.
    const KeySlot* key_slot(const Id16& key_id) const;
    const DkpgSession* session(const Id16& sid) const;
    const Scalar& identity_secret() const { return identity_.secret; }
    const Group& group() const { return *group_; }
    const std::vector<AclEntry>& acl() const { return acl_; }
    const std::map<NodeId, Element>& directory() const { return directory_; }
    void restore_key_slot(const Id16& key_id, KeySlot slot);
    RandomSource& rng() { return *rng_; }
    uint64_t next_seq() { return ++seq_; }

    Envelope wrap(NodeId dst, BodyKind kind, Bytes body);

private:
    struct KeypropPending {
        Element Y_agg;
        std::vector<NodeId> sources;
        std::map<NodeId, Scalar> received;
    };

    Response respond(const Command& cmd, Status st, Bytes payload = {});
    const AclEntry* match_host(const Envelope& env, const Command& cmd) const;

    Response op_keygen_init(const Command& cmd, std::vector<Envelope>& out);
    Status op_store_hash(const Command& cmd, NodeId src, std::vector<Envelope>& out);
    Status op_store_pubkey(const Command& cmd, NodeId src);
    Response op_keygen_finalize(const Command& cmd);
    Response op_dec_share(const Command& cmd, const AclEntry& host);
    Response op_cache_nonce(const Command& cmd);
    Response op_sig_share(const Command& cmd);
    Response op_rng_share(const Command& cmd, const AclEntry& host);
    Response op_keyprop_install(const Command& cmd);
    Response op_keyprop_split(const Command& cmd, std::vector<Envelope>& out);
    Status op_keyprop_share(const Command& cmd, NodeId src);
    Response op_keyprop_finalize(const Command& cmd);

    void complete_reveal(DkpgSession& s, std::vector<Envelope>& out);
    void finish_session(DkpgSession& s);

    NodeId id_;
    std::unique_ptr<RandomSource> rng_;
    Lifecycle lifecycle_ = Lifecycle::Uninitialized;
    std::optional<Group> group_;
    NodeIdentity identity_;
    std::vector<AclEntry> acl_;
    std::map<NodeId, Element> directory_;
    std::map<std::string, KeySlot> slots_;            // key: hex key id
    std::map<std::string, DkpgSession> sessions_;     // key: hex session id
    std::map<std::string, KeypropPending> pending_;   // key: hex key id
    uint64_t seq_ = 0;
    Status last_status_ = Status::Ok;
};

// Payload codecs shared by node, host and tests.
constexpr uint8_t kFlagProof = 0x01;
constexpr uint8_t kFlagSeal = 0x02;

struct KeygenInitPayload {
    Id16 key_id{};
    std::vector<NodeId> members;
};
Bytes encode(const KeygenInitPayload& p);
KeygenInitPayload decode_keygen_init(ByteView data);

struct DecSharePayload {
    uint8_t flags = 0;
    Element c1;
};
Bytes encode(const Group& g, const DecSharePayload& p);
DecSharePayload decode_dec_share(const Group& g, ByteView data);

struct DecShareResponse {
    uint8_t flags = 0;
    Element A;               // when not sealed
    SealedBytes sealed_A;    // when sealed
    std::optional<DleqProof> proof;
};
Bytes encode(const Group& g, const DecShareResponse& p);
DecShareResponse decode_dec_share_response(const Group& g, ByteView data);

struct SigSharePayload {
    Bytes hm;  // 32-byte message digest
    uint64_t j = 0;
    Element R;
};
Bytes encode(const Group& g, const SigSharePayload& p);
SigSharePayload decode_sig_share(const Group& g, ByteView data);

struct CacheNoncePayload {
    uint64_t j_start = 1;
    uint16_t count = 1;
};
Bytes encode(const CacheNoncePayload& p);
CacheNoncePayload decode_cache_nonce(ByteView data);

struct KeypropInstallPayload {
    Element Y_agg;
    std::vector<NodeId> sources;
};
Bytes encode(const Group& g, const KeypropInstallPayload& p);
KeypropInstallPayload decode_keyprop_install(const Group& g, ByteView data);

struct KeypropSplitPayload {
    std::vector<NodeId> targets;
};
Bytes encode(const KeypropSplitPayload& p);
KeypropSplitPayload decode_keyprop_split(ByteView data);

Bytes encode(const Group& g, const DleqProof& p);
DleqProof decode_proof(const Group& g, ByteView data, size_t& off);

// Envelope / command / response signing helpers.
Command make_signed_command(const Group& g, OpCode op, const Id16& id, Bytes payload,
                            const Scalar& secret, RandomSource& rng);
bool verify_command(const Group& g, const Command& cmd, const Element& pub);
Response make_signed_response(const Group& g, OpCode op, const Id16& id, Status st,
                              Bytes payload, const Scalar& secret, RandomSource& rng);
bool verify_response(const Group& g, const Response& r, const Element& pub);
Envelope make_signed_envelope(const Group& g, NodeId src, NodeId dst, uint64_t seq,
                              BodyKind kind, Bytes body, const Scalar& secret,
                              RandomSource& rng);
bool verify_envelope(const Group& g, const Envelope& env, const Element& pub);

}  // namespace qhsm
