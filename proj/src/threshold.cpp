#include "qhsm/threshold.hpp"

#include "qhsm/errors.hpp"

namespace qhsm {

KeyTriplet triplet_gen(const Group& g, RandomSource& rng) {
    KeyTriplet t;
    t.x = g.scalar_rand(rng);
    t.Y = g.mul_gen(t.x);
    t.h = g.commit_digest(g.encode(t.Y));
    return t;
}

bool commit_verify(const Group& g, const std::vector<Element>& Y,
                   const std::vector<Bytes>& H) {
    if (Y.size() != H.size()) {
        throw ProtocolError("commit_verify: share/commitment count mismatch");
    }
    for (size_t i = 0; i < Y.size(); ++i) {
        if (g.commit_digest(g.encode(Y[i])) != H[i]) return false;
    }
    return true;
}

Scalar share_aggr(const Group& g, const std::vector<Scalar>& shares) {
    if (shares.empty()) throw ProtocolError("share_aggr: empty share set");
    Scalar acc = g.scalar_u64(0);
    for (const Scalar& s : shares) acc = g.add(acc, s);
    return acc;
}

Element share_aggr(const Group& g, const std::vector<Element>& shares) {
    if (shares.empty()) throw ProtocolError("share_aggr: empty share set");
    Element acc = g.identity();
    for (const Element& e : shares) acc = g.add(acc, e);
    return acc;
}

ShareVector secret_share(const Group& g, const Scalar& s, size_t k, RandomSource& rng) {
    if (k < 2) throw ProtocolError("secret_share: need at least 2 shares");
    ShareVector out;
    out.v.reserve(k);
    Scalar rest = s;
    for (size_t i = 0; i + 1 < k; ++i) {
        Scalar r = g.scalar_rand(rng);
        out.v.push_back(r);
        rest = g.sub(rest, r);
    }
    out.v.push_back(rest);
    return out;
}

Bytes drng_combine(const std::vector<Bytes>& shares, size_t out_len) {
    if (shares.empty()) throw ProtocolError("drng_combine: no shares");
    const size_t len = shares.front().size();
    if (len == 0) throw ProtocolError("drng_combine: empty share");
    Bytes acc(len, 0);
    for (const Bytes& s : shares) {
        if (s.size() != len) throw ProtocolError("drng_combine: share length mismatch");
        for (size_t i = 0; i < len; ++i) acc[i] ^= s[i];
    }
    return one_way(acc, out_len);
}

}  // namespace qhsm
