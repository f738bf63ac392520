#pragma once

#include <functional>
#include <map>
#include <string>

#include "qhsm/elgamal.hpp"
#include "qhsm/fabric.hpp"
#include "qhsm/multisig.hpp"
#include "qhsm/node.hpp"
#include "qhsm/tolerance.hpp"

namespace qhsm {

struct HostIdentity {
    Scalar sign_secret;
    Element sign_pub;
    Scalar enc_secret;  // for confidential response payloads
    Element enc_pub;

    static HostIdentity generate(const Group& g, RandomSource& rng);
    AclEntry acl_entry(uint32_t permissions = kPermAll) const;
};

struct QuorumConfig {
    std::string quorum_id;
    std::vector<NodeId> members;
    uint16_t threshold_k = 0;  // this design supports k == members.size() only
    std::map<NodeId, std::string> vendors;

    uint16_t size() const { return static_cast<uint16_t>(members.size()); }
};

enum class OpStatus : uint8_t {
    Ok,
    Timeout,
    Aborted,
    AccessDenied,
    IncompleteQuorum,
    ShareProofFailure,
    InconsistentShare,
    SigningFailed,
    VerifyFailed,
    ReplayRejected,
    SetupError,
    BadSignature,
};

const char* op_status_name(OpStatus s);

struct DkpgResult {
    OpStatus status = OpStatus::SetupError;
    QuorumKey key;
    NodeId offender = 0;
    std::string detail;
};

struct DecryptResult {
    OpStatus status = OpStatus::SetupError;
    Element plaintext;
    NodeId offender = 0;
    std::string detail;
};

struct SignResult {
    OpStatus status = OpStatus::SetupError;
    AggregateSignature sig;
    NodeId offender = 0;
    std::string detail;
};

struct RngResult {
    OpStatus status = OpStatus::SetupError;
    Bytes value;
    std::string detail;
};

struct PropagateResult {
    OpStatus status = OpStatus::SetupError;
    QuorumKey key;  // the target quorum's view of the propagated key
    std::string detail;
};

struct HostConfig {
    bool seal_responses = true;    // encrypt confidential response fields
    bool require_dec_proofs = false;
    uint32_t slot_budget_factor = 4;  // slots per protocol phase = factor * t
    size_t sign_retry_limit = 8;      // cached indices tried before giving up
};

/// The remote host: drives every protocol end to end over the fabric,
/// combines shares, and re-verifies all combined results from public data.
class Host {
public:
    Host(Group g, Fabric& fabric, HostIdentity ident,
         std::map<NodeId, Element> directory, Drbg rng, HostConfig cfg = {});

    HostConfig& config() { return cfg_; }
    const HostIdentity& identity() const { return ident_; }

    DkpgResult dkpg(const QuorumConfig& q, const Id16& key_id);
    DecryptResult decrypt(const QuorumConfig& q, const Id16& key_id, const Ciphertext& ct);
    /// Tries quorums in order until one serves the ciphertext (availability
    /// failover across replicated quorums).
    DecryptResult decrypt_any(const std::vector<QuorumConfig>& quorums, const Id16& key_id,
                              const Ciphertext& ct);
    OpStatus cache_nonces(const QuorumConfig& q, const Id16& key_id, uint64_t j_start,
                          uint16_t count);
    SignResult sign(const QuorumConfig& q, const Id16& key_id, ByteView message);
    /// Signs with an explicit cached index; a consumed index is rejected by
    /// every node (the replay guard this exercises).
    SignResult sign_with_index(const QuorumConfig& q, const Id16& key_id, ByteView message,
                               uint64_t j);
    RngResult gen_random(const QuorumConfig& q, size_t out_len);
    PropagateResult propagate(const QuorumConfig& from, const QuorumConfig& to,
                              const Id16& key_id);

    static double k_tolerance(double p_error, unsigned k) {
        return qhsm::k_tolerance(p_error, k);
    }

    const QuorumKey* quorum_key(const std::string& quorum_id, const Id16& key_id) const;
    const std::map<uint64_t, NonceCacheEntry>* nonce_cache(const std::string& quorum_id,
                                                           const Id16& key_id) const;
    /// Installs a key record directly (restored emulation state).
    void install_key(const std::string& quorum_id, const Id16& key_id, QuorumKey key);

private:
    struct Round {
        std::map<NodeId, Response> ok;
        std::map<NodeId, Status> errors;
        std::vector<NodeId> missing;
        std::vector<NodeId> bad_sig;
    };

    static OpStatus validate_quorum(const QuorumConfig& q);
    std::string key_of(const std::string& quorum_id, const Id16& key_id) const;
    Envelope command_envelope(NodeId dst, OpCode op, const Id16& id, Bytes payload);
    Round run_round(const QuorumConfig& q, OpCode op, const Id16& id,
                    const std::function<Bytes(NodeId)>& payload_for, uint64_t budget);
    /// Maps a round with errors/missing/bad signatures onto an OpStatus;
    /// returns Ok when every member answered Ok.
    OpStatus round_status(const Round& r, NodeId* offender, std::string* detail) const;
    SignResult attempt_sign(const QuorumConfig& q, const Id16& key_id, ByteView message,
                            const Bytes& hm, const NonceCacheEntry& entry,
                            const QuorumKey& key);

    Group g_;
    Fabric& fabric_;
    HostIdentity ident_;
    std::map<NodeId, Element> directory_;
    Drbg rng_;
    HostConfig cfg_;
    uint64_t seq_ = 0;
    std::map<std::string, QuorumKey> keys_;
    std::map<std::string, std::map<uint64_t, NonceCacheEntry>> caches_;
};

}  // namespace qhsm
