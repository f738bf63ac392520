#include "qhsm/elgamal.hpp"

#include "qhsm/errors.hpp"

namespace qhsm {

Ciphertext encrypt(const Group& g, const Element& m, const Element& Y_agg,
                   RandomSource& rng) {
    Scalar r = g.scalar_rand(rng);
    Ciphertext ct;
    ct.c1 = g.mul_gen(r);
    ct.c2 = g.add(m, g.mul(r, Y_agg));
    return ct;
}

Element dec_share(const Group& g, const Element& c1, const Scalar& x) {
    return g.mul(g.neg(x), c1);
}

Element aggr_dec(const Group& g, const Element& c2, const std::vector<Element>& shares) {
    if (shares.empty()) throw ProtocolError("aggr_dec: no decryption shares");
    Element acc = c2;
    for (const Element& a : shares) acc = g.add(acc, a);
    return acc;
}

namespace {

Scalar dleq_challenge(const Group& g, const Element& Y, const Element& c1,
                      const Element& B, const Element& t1, const Element& t2) {
    Bytes in;
    append(in, g.encode(g.generator()));
    append(in, g.encode(Y));
    append(in, g.encode(c1));
    append(in, g.encode(B));
    append(in, g.encode(t1));
    append(in, g.encode(t2));
    return g.hash_to_scalar_nonzero(in, HashTag::Dleq);
}

}  // namespace

DleqProof dleq_prove(const Group& g, const Scalar& x, const Element& c1,
                     const Element& Y, const Element& A, RandomSource& rng) {
    Scalar w = g.scalar_rand(rng);
    while (w.is_zero()) w = g.scalar_rand(rng);
    DleqProof pf;
    pf.t1 = g.mul_gen(w);
    pf.t2 = g.mul(w, c1);
    Element B = g.neg(A);
    pf.c = dleq_challenge(g, Y, c1, B, pf.t1, pf.t2);
    pf.z = g.add(w, g.mul(pf.c, x));
    return pf;
}

bool dleq_verify(const Group& g, const DleqProof& proof, const Element& Y,
                 const Element& c1, const Element& A) {
    Element B = g.neg(A);
    Scalar expect = dleq_challenge(g, Y, c1, B, proof.t1, proof.t2);
    if (expect != proof.c) return false;
    // z*G == t1 + c*Y  and  z*C1 == t2 + c*B.
    if (g.mul_gen(proof.z) != g.add(proof.t1, g.mul(proof.c, Y))) return false;
    if (g.mul(proof.z, c1) != g.add(proof.t2, g.mul(proof.c, B))) return false;
    return true;
}

Bytes encode(const Group& g, const Ciphertext& ct) {
    Bytes out = g.encode(ct.c1);
    append(out, g.encode(ct.c2));
    return out;
}

Ciphertext decode_ciphertext(const Group& g, ByteView data) {
    const size_t w = g.element_size();
    if (data.size() != 2 * w) throw EncodingError("ciphertext length mismatch");
    Ciphertext ct;
    ct.c1 = g.decode_element(data.subspan(0, w));
    ct.c2 = g.decode_element(data.subspan(w, w));
    return ct;
}

// --- embedding ---

namespace {

constexpr size_t kCurveEmbedCapacity = 29;  // data bytes per 32-byte x block

size_t transparent_chunk_bits(const Group& g) {
    return mpz_sizeinbase(g.order().get_mpz_t(), 2) - 1;
}

Element curve_embed(const Group& g, ByteView data) {
    if (data.size() > kCurveEmbedCapacity) throw EncodingError("message too long to embed");
    // x candidate layout: 0x00 | data (zero padded to 29) | len | counter.
    Bytes block(32, 0);
    std::copy(data.begin(), data.end(), block.begin() + 1);
    block[30] = static_cast<uint8_t>(data.size());
    for (int ctr = 0; ctr < 256; ++ctr) {
        block[31] = static_cast<uint8_t>(ctr);
        Bytes candidate(33, 0);
        candidate[0] = 0x02;
        std::copy(block.begin(), block.end(), candidate.begin() + 1);
        try {
            return g.decode_element(candidate);
        } catch (const EncodingError&) {
            continue;  // x not on curve, bump counter
        }
    }
    throw EncodingError("no embeddable point found");
}

Bytes curve_extract(const Group& g, const Element& e) {
    if (e.inf) throw EncodingError("identity carries no embedded message");
    Bytes enc = g.encode(e);
    ByteView xb = ByteView(enc).subspan(1);  // 32-byte x
    if (xb[0] != 0) throw EncodingError("element does not carry an embedded message");
    size_t len = xb[30];
    if (len > kCurveEmbedCapacity) throw EncodingError("embedded length out of range");
    for (size_t i = 1 + len; i < 30; ++i) {
        if (xb[i] != 0) throw EncodingError("embedded padding not canonical");
    }
    return Bytes(xb.begin() + 1, xb.begin() + 1 + len);
}

}  // namespace

size_t embed_capacity(const Group& g) {
    if (g.backend() == Backend::Curve) return kCurveEmbedCapacity;
    size_t bits = mpz_sizeinbase(g.order().get_mpz_t(), 2);
    return bits >= 17 ? (bits - 9) / 8 : 0;
}

Element element_from_bytes(const Group& g, ByteView data) {
    if (g.backend() == Backend::Curve) return curve_embed(g, data);
    // Transparent: value of (0x01 || data) as an integer, must fit below n.
    mpz_class v = 1;
    for (uint8_t b : data) {
        v <<= 8;
        v += b;
    }
    if (v >= g.order()) throw EncodingError("message too long to embed");
    return g.mul_gen(g.scalar(v));
}

Bytes bytes_from_element(const Group& g, const Element& e) {
    if (g.backend() == Backend::Curve) return curve_extract(g, e);
    mpz_class v = e.x;
    Bytes rev;
    while (v > 1) {
        rev.push_back(static_cast<uint8_t>(mpz_class(v & 0xFF).get_ui()));
        v >>= 8;
    }
    if (v != 1) throw EncodingError("element does not carry an embedded message");
    return Bytes(rev.rbegin(), rev.rend());
}

std::vector<Element> elements_from_bytes(const Group& g, ByteView data) {
    std::vector<Element> out;
    if (g.backend() == Backend::Curve) {
        size_t off = 0;
        while (off < data.size()) {
            size_t take = std::min(kCurveEmbedCapacity, data.size() - off);
            out.push_back(curve_embed(g, data.subspan(off, take)));
            off += take;
        }
        if (data.empty()) out.push_back(curve_embed(g, {}));
        return out;
    }
    // Transparent: big-endian bit stream in chunks of (bitlen(n) - 1) bits.
    const size_t chunk_bits = transparent_chunk_bits(g);
    const size_t total_bits = data.size() * 8;
    for (size_t start = 0; start < total_bits || out.empty(); start += chunk_bits) {
        mpz_class v = 0;
        for (size_t b = 0; b < chunk_bits; ++b) {
            size_t bit = start + b;
            int val = 0;
            if (bit < total_bits) {
                val = (data[bit / 8] >> (7 - bit % 8)) & 1;
            }
            v = (v << 1) | val;
        }
        out.push_back(g.mul_gen(g.scalar(v)));
        if (total_bits == 0) break;
    }
    return out;
}

Bytes bytes_from_elements(const Group& g, const std::vector<Element>& elems,
                          size_t byte_len) {
    if (g.backend() == Backend::Curve) {
        Bytes out;
        for (const Element& e : elems) append(out, curve_extract(g, e));
        if (out.size() != byte_len) throw EncodingError("embedded length mismatch");
        return out;
    }
    const size_t chunk_bits = transparent_chunk_bits(g);
    const size_t total_bits = byte_len * 8;
    if (elems.size() * chunk_bits < total_bits) {
        throw EncodingError("not enough elements for declared length");
    }
    Bytes out(byte_len, 0);
    size_t bit = 0;
    for (const Element& e : elems) {
        for (size_t b = 0; b < chunk_bits && bit < total_bits; ++b, ++bit) {
            size_t shift = chunk_bits - 1 - b;
            int val = mpz_tstbit(e.x.get_mpz_t(), shift);
            if (val) out[bit / 8] |= static_cast<uint8_t>(1 << (7 - bit % 8));
        }
        if (bit >= total_bits) break;
    }
    return out;
}

SealedBytes seal_bytes(const Group& g, ByteView data, const Element& recipient_pub,
                       RandomSource& rng) {
    SealedBytes out;
    out.byte_len = static_cast<uint32_t>(data.size());
    for (const Element& m : elements_from_bytes(g, data)) {
        out.blocks.push_back(encrypt(g, m, recipient_pub, rng));
    }
    return out;
}

Bytes open_bytes(const Group& g, const SealedBytes& sealed, const Scalar& recipient_secret) {
    std::vector<Element> elems;
    elems.reserve(sealed.blocks.size());
    for (const Ciphertext& ct : sealed.blocks) {
        elems.push_back(aggr_dec(g, ct.c2, {dec_share(g, ct.c1, recipient_secret)}));
    }
    return bytes_from_elements(g, elems, sealed.byte_len);
}

Bytes encode(const Group& g, const SealedBytes& sealed) {
    Bytes out;
    append_u32(out, sealed.byte_len);
    append_u16(out, static_cast<uint16_t>(sealed.blocks.size()));
    for (const Ciphertext& ct : sealed.blocks) append(out, encode(g, ct));
    return out;
}

SealedBytes decode_sealed(const Group& g, ByteView data, size_t& off) {
    SealedBytes out;
    out.byte_len = read_u32(data, off);
    uint16_t count = read_u16(data, off);
    const size_t w = 2 * g.element_size();
    for (uint16_t i = 0; i < count; ++i) {
        Bytes blk = read_exact(data, off, w);
        out.blocks.push_back(decode_ciphertext(g, blk));
    }
    return out;
}

}  // namespace qhsm
