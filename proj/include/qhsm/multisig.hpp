#pragma once

#include <cstdint>
#include <optional>
#include <set>
#include <vector>

#include "qhsm/group.hpp"
#include "qhsm/threshold.hpp"

namespace qhsm {

/// Host-side cache entry from the offline phase: the aggregate nonce point
/// for index j, optionally the per-node points for auditing bad shares.
struct NonceCacheEntry {
    uint64_t j = 0;
    Element R;
    std::vector<std::pair<NodeId, Element>> per_node;
    bool consumed = false;
};

struct SignatureShare {
    NodeId node_id = 0;
    uint64_t j = 0;
    Scalar sigma;  // r_ij - x_i * eps mod n
    Scalar eps;
};

struct AggregateSignature {
    Scalar sigma;
    Scalar eps;
    uint64_t j = 0;
};

/// Per-(node, key) record of consumed signing indices. Keeps O(1) state:
/// a high-water mark plus a bounded window of still-unused indices below
/// it. Indices that fall out of the window are burned.
class NonceLedger {
public:
    explicit NonceLedger(size_t window_capacity = 64);

    bool consumed(uint64_t j) const;
    /// Marks j consumed. Returns false when j was already consumed (or j==0,
    /// which is reserved).
    bool consume(uint64_t j);

    uint64_t high_water_mark() const { return hwm_; }
    const std::set<uint64_t>& window() const { return window_; }
    void restore(uint64_t hwm, std::set<uint64_t> window);

private:
    uint64_t hwm_ = 0;
    std::set<uint64_t> window_;
    size_t capacity_;
};

/// Challenge for (R_j, Hash(m), j): hash_to_scalar over
/// encode(R) || Hm || BE64(j) with the challenge domain tag.
Scalar sig_challenge(const Group& g, const Element& R, ByteView hm, uint64_t j);

/// sigma_ij = r_ij - x_i * eps mod n.
Scalar sig_share_value(const Group& g, const Scalar& r_ij, const Scalar& x_i,
                       const Scalar& eps);

/// Sums share sigmas; all shares must carry the same (j, eps) and there must
/// be at least one. Throws ProtocolError on inconsistent eps or j.
AggregateSignature aggregate(const Group& g, const std::vector<SignatureShare>& shares);

/// Recomputes R = sigma*G + eps*Y and accepts iff the challenge over
/// (R, Hash(m), j) equals eps.
bool verify(const Group& g, const Element& Y, ByteView message, uint64_t j,
            const AggregateSignature& sig);

Bytes encode(const Group& g, const AggregateSignature& sig);
AggregateSignature decode_signature(const Group& g, ByteView data);

// --- single-key byte signing ---
// The same Schnorr verification equation applied to one key; used for
// envelope and response authentication. Wire form is 64 bytes:
// 32-byte sigma || 32-byte eps, each left-padded big-endian.
struct ByteSig {
    Scalar sigma;
    Scalar eps;
};

constexpr size_t kByteSigSize = 64;

ByteSig sign_bytes(const Group& g, const Scalar& secret, ByteView message,
                   RandomSource& rng);
bool verify_bytes(const Group& g, const Element& pub, ByteView message,
                  const ByteSig& sig);

Bytes encode_byte_sig(const Group& g, const ByteSig& sig);
std::optional<ByteSig> decode_byte_sig(const Group& g, ByteView data);

}  // namespace qhsm
