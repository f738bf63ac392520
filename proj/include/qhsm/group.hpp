#pragma once

#include <gmpxx.h>

#include <cstdint>
#include <memory>
#include <string>

#include "qhsm/bytes.hpp"
#include "qhsm/hash.hpp"
#include "qhsm/rng.hpp"

namespace qhsm {

enum class Backend { Curve, Transparent };

/// Scalar in [0, n) where n is the order of the owning group. Always reduced.
struct Scalar {
    mpz_class v;
    uint64_t gid = 0;

    bool operator==(const Scalar& o) const { return gid == o.gid && v == o.v; }
    bool operator!=(const Scalar& o) const { return !(*this == o); }
    bool is_zero() const { return v == 0; }
};

/// Element of the group generated by G. On the curve backend this is an
/// affine point (or infinity); on the transparent backend it is a residue
/// mod n stored in |x| (the group is (Z_n, +) with G = 1, so discrete logs
/// are free — that is the point of the backend).
struct Element {
    mpz_class x;
    mpz_class y;
    bool inf = true;
    uint64_t gid = 0;

    bool operator==(const Element& o) const {
        if (gid != o.gid) return false;
        if (inf || o.inf) return inf == o.inf;
        return x == o.x && y == o.y;
    }
    bool operator!=(const Element& o) const { return !(*this == o); }
    bool is_identity() const { return inf; }
};

/// Immutable group context: domain parameters T = (p, a, b, G, n, h) plus
/// backend selection. Cheap to copy (shared impl). Operations on values
/// from different Group instances throw ParamMismatchError.
class Group {
public:
    /// NIST P-256 short-Weierstrass curve, the production backend.
    static Group p256();

    /// Test backend: additive integers mod n (n prime, n < 2^32), G = 1.
    /// toy_hash selects the hand-checkable byte-sum hash for scalar
    /// derivation; it is never used outside tests.
    static Group transparent(uint64_t order, bool toy_hash = false);

    Backend backend() const;
    bool toy_hash() const;
    uint64_t id() const;

    // Domain parameters.
    const mpz_class& field_prime() const;  // p
    const mpz_class& curve_a() const;
    const mpz_class& curve_b() const;
    const mpz_class& order() const;  // n
    unsigned cofactor() const;       // h
    Element generator() const;       // G
    Element identity() const;

    size_t scalar_size() const;   // canonical scalar width in bytes
    size_t element_size() const;  // canonical element width in bytes

    // --- scalar arithmetic (mod n) ---
    Scalar scalar(const mpz_class& value) const;  // reduces
    Scalar scalar_u64(uint64_t value) const;
    Scalar scalar_rand(RandomSource& rng) const;
    Scalar add(const Scalar& a, const Scalar& b) const;
    Scalar sub(const Scalar& a, const Scalar& b) const;
    Scalar mul(const Scalar& a, const Scalar& b) const;
    Scalar neg(const Scalar& a) const;
    Scalar inv(const Scalar& a) const;  // throws on zero

    // --- group operations ---
    Element mul(const Scalar& k, const Element& p) const;
    Element add(const Element& p, const Element& q) const;
    Element sub(const Element& p, const Element& q) const;
    Element neg(const Element& p) const;
    Element mul_gen(const Scalar& k) const;  // k * G

    // --- canonical encodings ---
    // Curve: 33 bytes, 0x02/0x03 || x (identity = 33 zero bytes).
    // Transparent: 4-byte big-endian residue.
    Bytes encode(const Element& p) const;
    Element decode_element(ByteView data) const;
    // Fixed-width big-endian, width = scalar_size().
    Bytes encode(const Scalar& s) const;
    Scalar decode_scalar(ByteView data) const;

    // --- hashing ---
    /// Digest interpreted as a big-endian integer, reduced mod n. The toy
    /// variant is sum-of-data-bytes mod n (tag ignored).
    Scalar hash_to_scalar(ByteView data, HashTag tag = HashTag::Generic) const;
    /// Same, but mapped into [1, n); used where a zero challenge would
    /// degenerate a verification equation.
    Scalar hash_to_scalar_nonzero(ByteView data, HashTag tag) const;
    /// Commitment digest for an encoded element (byte-string, not scalar).
    Bytes commit_digest(ByteView data) const;
    /// Keyed PRF: scalar derived from Hash(s || BE64(j)). s must be nonempty.
    Scalar prf(ByteView s, uint64_t j) const;

private:
    struct Impl;
    explicit Group(std::shared_ptr<const Impl> impl);
    std::shared_ptr<const Impl> impl_;
};

}  // namespace qhsm
