#include "qhsm/multisig.hpp"

#include "qhsm/errors.hpp"

namespace qhsm {

NonceLedger::NonceLedger(size_t window_capacity) : capacity_(window_capacity) {}

bool NonceLedger::consumed(uint64_t j) const {
    if (j == 0) return true;
    if (j > hwm_) return false;
    return window_.find(j) == window_.end();
}

bool NonceLedger::consume(uint64_t j) {
    if (j == 0) return false;
    if (j > hwm_) {
        // Indices skipped over stay usable while they fit in the window;
        // older ones are burned.
        uint64_t first = hwm_ + 1;
        if (j - first > capacity_) first = j - capacity_;
        for (uint64_t k = first; k < j; ++k) window_.insert(k);
        while (window_.size() > capacity_) window_.erase(window_.begin());
        hwm_ = j;
        return true;
    }
    return window_.erase(j) > 0;
}

void NonceLedger::restore(uint64_t hwm, std::set<uint64_t> window) {
    hwm_ = hwm;
    window_ = std::move(window);
}

Scalar sig_challenge(const Group& g, const Element& R, ByteView hm, uint64_t j) {
    Bytes in = g.encode(R);
    append(in, hm);
    append_u64(in, j);
    return g.hash_to_scalar(in, HashTag::Challenge);
}

Scalar sig_share_value(const Group& g, const Scalar& r_ij, const Scalar& x_i,
                       const Scalar& eps) {
    return g.sub(r_ij, g.mul(x_i, eps));
}

AggregateSignature aggregate(const Group& g, const std::vector<SignatureShare>& shares) {
    if (shares.empty()) throw ProtocolError("aggregate: no signature shares");
    AggregateSignature out;
    out.j = shares.front().j;
    out.eps = shares.front().eps;
    std::vector<Scalar> sigmas;
    sigmas.reserve(shares.size());
    for (const SignatureShare& s : shares) {
        if (s.j != out.j) throw ProtocolError("aggregate: index mismatch across shares");
        if (s.eps != out.eps) throw ProtocolError("aggregate: challenge mismatch across shares");
        sigmas.push_back(s.sigma);
    }
    out.sigma = share_aggr(g, sigmas);
    return out;
}

bool verify(const Group& g, const Element& Y, ByteView message, uint64_t j,
            const AggregateSignature& sig) {
    if (sig.j != j) return false;
    Element R = g.add(g.mul_gen(sig.sigma), g.mul(sig.eps, Y));
    Bytes hm = sha3_256(message);
    return sig_challenge(g, R, hm, j) == sig.eps;
}

Bytes encode(const Group& g, const AggregateSignature& sig) {
    Bytes out = g.encode(sig.sigma);
    append(out, g.encode(sig.eps));
    append_u64(out, sig.j);
    return out;
}

AggregateSignature decode_signature(const Group& g, ByteView data) {
    const size_t w = g.scalar_size();
    if (data.size() != 2 * w + 8) throw EncodingError("signature length mismatch");
    AggregateSignature sig;
    sig.sigma = g.decode_scalar(data.subspan(0, w));
    sig.eps = g.decode_scalar(data.subspan(w, w));
    size_t off = 2 * w;
    sig.j = read_u64(data, off);
    return sig;
}

namespace {

Scalar byte_sig_challenge(const Group& g, const Element& R, ByteView message) {
    Bytes in = g.encode(R);
    append(in, sha3_256(message));
    append_u64(in, 0);
    return g.hash_to_scalar(in, HashTag::Envelope);
}

}  // namespace

ByteSig sign_bytes(const Group& g, const Scalar& secret, ByteView message,
                   RandomSource& rng) {
    Scalar r = g.scalar_rand(rng);
    Element R = g.mul_gen(r);
    ByteSig sig;
    sig.eps = byte_sig_challenge(g, R, message);
    sig.sigma = g.sub(r, g.mul(secret, sig.eps));
    return sig;
}

bool verify_bytes(const Group& g, const Element& pub, ByteView message,
                  const ByteSig& sig) {
    Element R = g.add(g.mul_gen(sig.sigma), g.mul(sig.eps, pub));
    return byte_sig_challenge(g, R, message) == sig.eps;
}

Bytes encode_byte_sig(const Group& g, const ByteSig& sig) {
    Bytes out(kByteSigSize, 0);
    Bytes sb = g.encode(sig.sigma);
    Bytes eb = g.encode(sig.eps);
    std::copy(sb.begin(), sb.end(), out.begin() + (32 - sb.size()));
    std::copy(eb.begin(), eb.end(), out.begin() + 32 + (32 - eb.size()));
    return out;
}

std::optional<ByteSig> decode_byte_sig(const Group& g, ByteView data) {
    if (data.size() != kByteSigSize) return std::nullopt;
    const size_t w = g.scalar_size();
    // Scalars are left-padded into the fixed 32-byte halves.
    for (size_t i = 0; i < 32 - w; ++i) {
        if (data[i] != 0 || data[32 + i] != 0) return std::nullopt;
    }
    ByteSig sig;
    try {
        sig.sigma = g.decode_scalar(data.subspan(32 - w, w));
        sig.eps = g.decode_scalar(data.subspan(64 - w, w));
    } catch (const EncodingError&) {
        return std::nullopt;
    }
    return sig;
}

}  // namespace qhsm
