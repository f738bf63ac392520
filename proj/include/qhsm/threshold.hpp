#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "qhsm/group.hpp"

namespace qhsm {

using NodeId = uint16_t;

/// One member's key-generation output: secret share, public share and the
/// commitment digest of the public share.
struct KeyTriplet {
    Scalar x;
    Element Y;
    Bytes h;
};

/// Aggregate public key and the per-member public shares it was built from.
/// In this design the secrecy threshold k always equals the quorum size t.
struct QuorumKey {
    Element Y_agg;
    std::map<NodeId, Element> shares;
    std::string quorum_id;
    uint16_t threshold_k = 0;
    uint16_t size_t_ = 0;
};

/// Additive split of a secret: the entries sum to the secret mod n.
struct ShareVector {
    std::vector<Scalar> v;
};

/// Fresh (x, Y = xG, h = Hash(encode(Y))) triplet.
KeyTriplet triplet_gen(const Group& g, RandomSource& rng);

/// Checks each public share against its commitment. Lists must be
/// position-aligned; a length mismatch is a protocol error, distinct
/// from a clean false. Empty lists are vacuously true.
bool commit_verify(const Group& g, const std::vector<Element>& Y,
                   const std::vector<Bytes>& H);

Scalar share_aggr(const Group& g, const std::vector<Scalar>& shares);
Element share_aggr(const Group& g, const std::vector<Element>& shares);

/// Splits s into k additive shares; the first k-1 are uniform and the
/// last makes the sum come out. k must be at least 2.
ShareVector secret_share(const Group& g, const Scalar& s, size_t k, RandomSource& rng);

/// Distributed-RNG combiner: one-way(XOR of all shares), sized to out_len.
/// All shares must have the same nonzero length.
Bytes drng_combine(const std::vector<Bytes>& shares, size_t out_len);

}  // namespace qhsm
