#pragma once

#include <optional>
#include <vector>

#include "qhsm/group.hpp"
#include "qhsm/threshold.hpp"

namespace qhsm {

struct Ciphertext {
    Element c1;
    Element c2;
};

/// Chaum-Pedersen style proof that a decryption share was derived from the
/// same secret as the prover's public share: links (G, Y_i) and (C1, -A_i).
struct DleqProof {
    Element t1;  // commitment w * G
    Element t2;  // commitment w * C1
    Scalar c;    // Fiat-Shamir challenge, always in [1, n)
    Scalar z;    // response w + c * x
};

struct DecryptionShare {
    NodeId node_id = 0;
    Element A;
    std::optional<DleqProof> proof;
};

Ciphertext encrypt(const Group& g, const Element& m, const Element& Y_agg,
                   RandomSource& rng);

/// A_i = (-x_i) * C1.
Element dec_share(const Group& g, const Element& c1, const Scalar& x);

/// m = C2 + sum(A_i). The caller is responsible for supplying one share per
/// quorum member; an empty set is rejected.
Element aggr_dec(const Group& g, const Element& c2, const std::vector<Element>& shares);

DleqProof dleq_prove(const Group& g, const Scalar& x, const Element& c1,
                     const Element& Y, const Element& A, RandomSource& rng);
bool dleq_verify(const Group& g, const DleqProof& proof, const Element& Y,
                 const Element& c1, const Element& A);

Bytes encode(const Group& g, const Ciphertext& ct);
Ciphertext decode_ciphertext(const Group& g, ByteView data);

// --- plaintext embedding ---
// Maps short byte strings to group elements invertibly: on the transparent
// backend by direct integer encoding, on the curve backend by
// try-and-increment inside the x coordinate.
size_t embed_capacity(const Group& g);            // bytes per element
Element element_from_bytes(const Group& g, ByteView data);
Bytes bytes_from_element(const Group& g, const Element& e);

// Arbitrary-length byte strings as element sequences (chunked embedding).
std::vector<Element> elements_from_bytes(const Group& g, ByteView data);
Bytes bytes_from_elements(const Group& g, const std::vector<Element>& elems,
                          size_t byte_len);

// --- confidential byte payloads ---
// Chunked ElGamal under a recipient public key; used for end-to-end
// confidential envelope fields (decryption shares, RNG shares, re-sharing).
struct SealedBytes {
    uint32_t byte_len = 0;
    std::vector<Ciphertext> blocks;
};

SealedBytes seal_bytes(const Group& g, ByteView data, const Element& recipient_pub,
                       RandomSource& rng);
Bytes open_bytes(const Group& g, const SealedBytes& sealed, const Scalar& recipient_secret);

Bytes encode(const Group& g, const SealedBytes& sealed);
SealedBytes decode_sealed(const Group& g, ByteView data, size_t& off);

}  // namespace qhsm
