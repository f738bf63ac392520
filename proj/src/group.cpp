#include "qhsm/group.hpp"

#include <array>
#include <cstring>
#include <stdexcept>

#include "qhsm/errors.hpp"

namespace qhsm {

namespace {

mpz_class mpz_from_be(ByteView data) {
    mpz_class v;
    if (!data.empty()) {
        mpz_import(v.get_mpz_t(), data.size(), 1, 1, 1, 0, data.data());
    }
    return v;
}

Bytes mpz_to_be(const mpz_class& v, size_t width) {
    Bytes out(width, 0);
    size_t count = 0;
    if (v != 0) {
        size_t need = (mpz_sizeinbase(v.get_mpz_t(), 2) + 7) / 8;
        if (need > width) throw EncodingError("integer too wide for field");
        mpz_export(out.data() + (width - need), &count, 1, 1, 1, 0, v.get_mpz_t());
    }
    return out;
}

// P-256 domain parameters.
const char* kP256P = "ffffffff00000001000000000000000000000000ffffffffffffffffffffffff";
const char* kP256B = "5ac635d8aa3a93e7b3ebbd55769886bc651d06b0cc53b0f63bce3c3e27d2604b";
const char* kP256Gx = "6b17d1f2e12c4247f8bce6e563a440f277037d812deb33a0f4a13945d898c296";
const char* kP256Gy = "4fe342e2fe1a7f9b8ee7eb4a7c0f9e162bce33576b315ececbb6406837bf51f5";
const char* kP256N = "ffffffff00000000ffffffffffffffffbce6faada7179e84f3b9cac2fc632551";

}  // namespace

struct Group::Impl {
    Backend backend;
    bool toy = false;
    uint64_t gid = 0;

    mpz_class p, a, b, n;
    mpz_class gx, gy;
    unsigned h = 1;
    size_t scalar_width = 0;
    size_t element_width = 0;
    mpz_class sqrt_exp;  // (p+1)/4, curve backend only

    // --- field helpers (mod p) ---
    void fmul(mpz_class& r, const mpz_class& x, const mpz_class& y) const {
        mpz_mul(r.get_mpz_t(), x.get_mpz_t(), y.get_mpz_t());
        mpz_mod(r.get_mpz_t(), r.get_mpz_t(), p.get_mpz_t());
    }
    void fsqr(mpz_class& r, const mpz_class& x) const {
        mpz_mul(r.get_mpz_t(), x.get_mpz_t(), x.get_mpz_t());
        mpz_mod(r.get_mpz_t(), r.get_mpz_t(), p.get_mpz_t());
    }
    void fadd(mpz_class& r, const mpz_class& x, const mpz_class& y) const {
        mpz_add(r.get_mpz_t(), x.get_mpz_t(), y.get_mpz_t());
        if (r >= p) r -= p;
    }
    void fsub(mpz_class& r, const mpz_class& x, const mpz_class& y) const {
        mpz_sub(r.get_mpz_t(), x.get_mpz_t(), y.get_mpz_t());
        if (r < 0) r += p;
    }
    mpz_class finv(const mpz_class& x) const {
        mpz_class r;
        if (mpz_invert(r.get_mpz_t(), x.get_mpz_t(), p.get_mpz_t()) == 0) {
            throw Error("field inversion of zero");
        }
        return r;
    }

    // --- Jacobian point arithmetic, curve backend ---
    struct Jac {
        mpz_class X, Y, Z;  // Z == 0 encodes infinity
    };

    Jac to_jac(const Element& e) const {
        if (e.inf) return Jac{0, 1, 0};
        return Jac{e.x, e.y, 1};
    }

    Element from_jac(const Jac& j, uint64_t gid_) const {
        Element e;
        e.gid = gid_;
        if (j.Z == 0) return e;
        mpz_class zi = finv(j.Z), zi2, zi3;
        fsqr(zi2, zi);
        fmul(zi3, zi2, zi);
        fmul(e.x, j.X, zi2);
        fmul(e.y, j.Y, zi3);
        e.inf = false;
        return e;
    }

    void jac_dbl(Jac& r, const Jac& q) const {
        if (q.Z == 0 || q.Y == 0) {
            r = Jac{0, 1, 0};
            return;
        }
        mpz_class y2, s, m, t, z4;
        fsqr(y2, q.Y);          // Y^2
        fmul(s, q.X, y2);       // X*Y^2
        fadd(s, s, s);
        fadd(s, s, s);          // S = 4*X*Y^2
        fsqr(m, q.X);
        fadd(t, m, m);
        fadd(m, t, m);          // 3*X^2
        fsqr(z4, q.Z);
        fsqr(z4, z4);           // Z^4
        fmul(t, a, z4);
        fadd(m, m, t);          // M = 3*X^2 + a*Z^4
        mpz_class x3, y3, z3;
        fsqr(x3, m);
        fsub(x3, x3, s);
        fsub(x3, x3, s);        // X' = M^2 - 2S
        fsqr(t, y2);
        fadd(t, t, t);
        fadd(t, t, t);
        fadd(t, t, t);          // 8*Y^4
        fsub(y3, s, x3);
        fmul(y3, m, y3);
        fsub(y3, y3, t);        // Y' = M*(S-X') - 8*Y^4
        fmul(z3, q.Y, q.Z);
        fadd(z3, z3, z3);       // Z' = 2*Y*Z
        r.X = x3;
        r.Y = y3;
        r.Z = z3;
    }

    void jac_add(Jac& r, const Jac& p1, const Jac& p2) const {
        if (p1.Z == 0) {
            r = p2;
            return;
        }
        if (p2.Z == 0) {
            r = p1;
            return;
        }
        mpz_class z1s, z2s, u1, u2, s1, s2, t;
        fsqr(z1s, p1.Z);
        fsqr(z2s, p2.Z);
        fmul(u1, p1.X, z2s);
        fmul(u2, p2.X, z1s);
        fmul(t, z2s, p2.Z);
        fmul(s1, p1.Y, t);
        fmul(t, z1s, p1.Z);
        fmul(s2, p2.Y, t);
        if (u1 == u2) {
            if (s1 != s2) {
                r = Jac{0, 1, 0};
                return;
            }
            jac_dbl(r, p1);
            return;
        }
        mpz_class hd, rr, h2, h3, u1h2;
        fsub(hd, u2, u1);
        fsub(rr, s2, s1);
        fsqr(h2, hd);
        fmul(h3, h2, hd);
        fmul(u1h2, u1, h2);
        mpz_class x3, y3, z3;
        fsqr(x3, rr);
        fsub(x3, x3, h3);
        fsub(x3, x3, u1h2);
        fsub(x3, x3, u1h2);     // X3 = R^2 - H^3 - 2*U1*H^2
        fsub(y3, u1h2, x3);
        fmul(y3, rr, y3);
        fmul(t, s1, h3);
        fsub(y3, y3, t);        // Y3 = R*(U1*H^2 - X3) - S1*H^3
        fmul(z3, p1.Z, p2.Z);
        fmul(z3, z3, hd);       // Z3 = Z1*Z2*H
        r.X = x3;
        r.Y = y3;
        r.Z = z3;
    }

    // Windowed (w = 4) scalar multiplication.
    Jac jac_mul(const mpz_class& k, const Jac& base) const {
        Jac acc{0, 1, 0};
        if (k == 0 || base.Z == 0) return acc;
        std::array<Jac, 16> table;
        table[0] = Jac{0, 1, 0};
        table[1] = base;
        for (int i = 2; i < 16; ++i) jac_add(table[i], table[i - 1], base);
        size_t bits = mpz_sizeinbase(k.get_mpz_t(), 2);
        size_t nibbles = (bits + 3) / 4;
        for (size_t i = nibbles; i-- > 0;) {
            for (int d = 0; d < 4; ++d) jac_dbl(acc, acc);
            unsigned idx = 0;
            for (int bb = 3; bb >= 0; --bb) {
                idx = (idx << 1) | mpz_tstbit(k.get_mpz_t(), i * 4 + bb);
            }
            if (idx != 0) jac_add(acc, acc, table[idx]);
        }
        return acc;
    }

    // Fixed-base table: window w = 4 over 64 nibble positions,
    // fixed_base[i][d-1] = d * 16^i * G. Built once for the curve backend.
    std::vector<std::array<Jac, 15>> fixed_base;

    void build_fixed_base() {
        Jac window_base{gx, gy, 1};
        fixed_base.resize(64);
        for (size_t i = 0; i < 64; ++i) {
            fixed_base[i][0] = window_base;
            for (int d = 1; d < 15; ++d) {
                jac_add(fixed_base[i][d], fixed_base[i][d - 1], window_base);
            }
            Jac next;
            jac_add(next, fixed_base[i][14], window_base);  // 16^(i+1) * G
            window_base = next;
        }
    }

    Jac jac_mul_gen(const mpz_class& k) const {
        Jac acc{0, 1, 0};
        if (k == 0) return acc;
        size_t bits = mpz_sizeinbase(k.get_mpz_t(), 2);
        size_t nibbles = (bits + 3) / 4;
        for (size_t i = 0; i < nibbles && i < fixed_base.size(); ++i) {
            unsigned idx = 0;
            for (int bb = 3; bb >= 0; --bb) {
                idx = (idx << 1) | mpz_tstbit(k.get_mpz_t(), i * 4 + bb);
            }
            if (idx != 0) {
                Jac next;
                jac_add(next, acc, fixed_base[i][idx - 1]);
                acc = next;
            }
        }
        return acc;
    }

    bool on_curve(const mpz_class& x, const mpz_class& y) const {
        mpz_class lhs, rhs, t;
        fsqr(lhs, y);
        fsqr(rhs, x);
        fmul(rhs, rhs, x);
        fmul(t, a, x);
        fadd(rhs, rhs, t);
        fadd(rhs, rhs, b);
        return lhs == rhs;
    }
};

namespace {

uint64_t derive_gid(Backend backend, const mpz_class& n, bool toy) {
    Bytes in;
    in.push_back(backend == Backend::Curve ? 1 : 2);
    in.push_back(toy ? 1 : 0);
    std::string ns = n.get_str(16);
    in.insert(in.end(), ns.begin(), ns.end());
    Bytes d = sha3_256(in);
    uint64_t gid = 0;
    for (int i = 0; i < 8; ++i) gid = (gid << 8) | d[i];
    return gid;
}

}  // namespace

Group::Group(std::shared_ptr<const Impl> impl) : impl_(std::move(impl)) {}

Group Group::p256() {
    static const std::shared_ptr<const Impl> cached = [] {
        auto impl = std::make_shared<Impl>();
        impl->backend = Backend::Curve;
        impl->p = mpz_class(kP256P, 16);
        impl->a = impl->p - 3;
        impl->b = mpz_class(kP256B, 16);
        impl->gx = mpz_class(kP256Gx, 16);
        impl->gy = mpz_class(kP256Gy, 16);
        impl->n = mpz_class(kP256N, 16);
        impl->h = 1;
        impl->scalar_width = 32;
        impl->element_width = 33;
        impl->sqrt_exp = (impl->p + 1) / 4;
        impl->gid = derive_gid(Backend::Curve, impl->n, false);
        if (!impl->on_curve(impl->gx, impl->gy)) throw Error("generator not on curve");
        // Order check: n * G must be the identity.
        Impl::Jac g{impl->gx, impl->gy, 1};
        if (impl->jac_mul(impl->n, g).Z != 0) throw Error("generator order mismatch");
        impl->build_fixed_base();
        return std::shared_ptr<const Impl>(impl);
    }();
    return Group(cached);
}

Group Group::transparent(uint64_t order, bool toy_hash) {
    if (order < 2 || order > 0xFFFFFFFFull) {
        throw Error("transparent order must be in [2, 2^32)");
    }
    auto impl = std::make_shared<Impl>();
    impl->backend = Backend::Transparent;
    impl->toy = toy_hash;
    impl->n = mpz_class(static_cast<unsigned long>(order));
    if (mpz_probab_prime_p(impl->n.get_mpz_t(), 32) == 0) {
        throw Error("transparent order must be prime");
    }
    impl->p = impl->n;
    impl->a = 0;
    impl->b = 0;
    impl->gx = 1;
    impl->gy = 0;
    impl->h = 1;
    mpz_class top = impl->n - 1;
    impl->scalar_width = std::max<size_t>(1, (mpz_sizeinbase(top.get_mpz_t(), 2) + 7) / 8);
    impl->element_width = 4;
    impl->gid = derive_gid(Backend::Transparent, impl->n, toy_hash);
    return Group(impl);
}

Backend Group::backend() const { return impl_->backend; }
bool Group::toy_hash() const { return impl_->toy; }
uint64_t Group::id() const { return impl_->gid; }
const mpz_class& Group::field_prime() const { return impl_->p; }
const mpz_class& Group::curve_a() const { return impl_->a; }
const mpz_class& Group::curve_b() const { return impl_->b; }
const mpz_class& Group::order() const { return impl_->n; }
unsigned Group::cofactor() const { return impl_->h; }
size_t Group::scalar_size() const { return impl_->scalar_width; }
size_t Group::element_size() const { return impl_->element_width; }

Element Group::generator() const {
    Element e;
    e.gid = impl_->gid;
    e.inf = false;
    e.x = impl_->gx;
    e.y = impl_->gy;
    return e;
}

Element Group::identity() const {
    Element e;
    e.gid = impl_->gid;
    if (impl_->backend == Backend::Transparent) {
        e.inf = false;
        e.x = 0;
    }
    return e;
}

namespace {

void check_gid(uint64_t a, uint64_t b) {
    if (a != b) throw ParamMismatchError("operands from different domain parameters");
}

}  // namespace

Scalar Group::scalar(const mpz_class& value) const {
    Scalar s;
    s.gid = impl_->gid;
    mpz_mod(s.v.get_mpz_t(), value.get_mpz_t(), impl_->n.get_mpz_t());
    return s;
}

Scalar Group::scalar_u64(uint64_t value) const {
    return scalar(mpz_class(static_cast<unsigned long>(value)));
}

Scalar Group::scalar_rand(RandomSource& rng) const {
    Bytes buf = rng.bytes(impl_->scalar_width + 16);
    return scalar(mpz_from_be(buf));
}

Scalar Group::add(const Scalar& a, const Scalar& b) const {
    check_gid(a.gid, impl_->gid);
    check_gid(b.gid, impl_->gid);
    return scalar(a.v + b.v);
}

Scalar Group::sub(const Scalar& a, const Scalar& b) const {
    check_gid(a.gid, impl_->gid);
    check_gid(b.gid, impl_->gid);
    return scalar(a.v - b.v);
}

Scalar Group::mul(const Scalar& a, const Scalar& b) const {
    check_gid(a.gid, impl_->gid);
    check_gid(b.gid, impl_->gid);
    return scalar(a.v * b.v);
}

Scalar Group::neg(const Scalar& a) const {
    check_gid(a.gid, impl_->gid);
    return scalar(-a.v);
}

Scalar Group::inv(const Scalar& a) const {
    check_gid(a.gid, impl_->gid);
    Scalar r;
    r.gid = impl_->gid;
    if (mpz_invert(r.v.get_mpz_t(), a.v.get_mpz_t(), impl_->n.get_mpz_t()) == 0) {
        throw Error("scalar inversion of zero");
    }
    return r;
}

Element Group::mul(const Scalar& k, const Element& p) const {
    check_gid(k.gid, impl_->gid);
    check_gid(p.gid, impl_->gid);
    Element out;
    out.gid = impl_->gid;
    if (impl_->backend == Backend::Transparent) {
        out.inf = false;
        out.x = (k.v * p.x) % impl_->n;
        return out;
    }
    return impl_->from_jac(impl_->jac_mul(k.v, impl_->to_jac(p)), impl_->gid);
}

Element Group::add(const Element& p, const Element& q) const {
    check_gid(p.gid, impl_->gid);
    check_gid(q.gid, impl_->gid);
    Element out;
    out.gid = impl_->gid;
    if (impl_->backend == Backend::Transparent) {
        out.inf = false;
        out.x = (p.x + q.x) % impl_->n;
        return out;
    }
    if (p.inf) return q;
    if (q.inf) return p;
    if (p.x == q.x) {
        mpz_class ysum;
        impl_->fadd(ysum, p.y, q.y);
        if (ysum == 0) return out;  // P + (-P)
    }
    mpz_class lam, t;
    if (p.x == q.x && p.y == q.y) {
        if (p.y == 0) return out;
        mpz_class num, den;
        impl_->fsqr(num, p.x);
        impl_->fadd(t, num, num);
        impl_->fadd(num, t, num);          // 3x^2
        impl_->fadd(num, num, impl_->a);   // + a
        impl_->fadd(den, p.y, p.y);
        impl_->fmul(lam, num, impl_->finv(den));
    } else {
        mpz_class num, den;
        impl_->fsub(num, q.y, p.y);
        impl_->fsub(den, q.x, p.x);
        impl_->fmul(lam, num, impl_->finv(den));
    }
    mpz_class x3, y3;
    impl_->fsqr(x3, lam);
    impl_->fsub(x3, x3, p.x);
    impl_->fsub(x3, x3, q.x);
    impl_->fsub(y3, p.x, x3);
    impl_->fmul(y3, lam, y3);
    impl_->fsub(y3, y3, p.y);
    out.inf = false;
    out.x = x3;
    out.y = y3;
    return out;
}

Element Group::neg(const Element& p) const {
    check_gid(p.gid, impl_->gid);
    Element out = p;
    if (impl_->backend == Backend::Transparent) {
        out.x = (impl_->n - p.x) % impl_->n;
        return out;
    }
    if (!p.inf && p.y != 0) out.y = impl_->p - p.y;
    return out;
}

Element Group::sub(const Element& p, const Element& q) const { return add(p, neg(q)); }

Element Group::mul_gen(const Scalar& k) const {
    check_gid(k.gid, impl_->gid);
    if (impl_->backend == Backend::Transparent) {
        Element out;
        out.gid = impl_->gid;
        out.inf = false;
        out.x = k.v;
        return out;
    }
    return impl_->from_jac(impl_->jac_mul_gen(k.v), impl_->gid);
}

Bytes Group::encode(const Element& p) const {
    check_gid(p.gid, impl_->gid);
    if (impl_->backend == Backend::Transparent) {
        Bytes out;
        append_u32(out, static_cast<uint32_t>(p.x.get_ui()));
        return out;
    }
    Bytes out(impl_->element_width, 0);
    if (p.inf) return out;
    out[0] = mpz_tstbit(p.y.get_mpz_t(), 0) ? 0x03 : 0x02;
    Bytes xb = mpz_to_be(p.x, 32);
    std::copy(xb.begin(), xb.end(), out.begin() + 1);
    return out;
}

Element Group::decode_element(ByteView data) const {
    Element out;
    out.gid = impl_->gid;
    if (impl_->backend == Backend::Transparent) {
        if (data.size() != 4) throw EncodingError("transparent element must be 4 bytes");
        size_t off = 0;
        mpz_class v(read_u32(data, off));
        if (v >= impl_->n) throw EncodingError("transparent element out of range");
        out.inf = false;
        out.x = v;
        return out;
    }
    if (data.size() != impl_->element_width) throw EncodingError("element must be 33 bytes");
    bool all_zero = true;
    for (uint8_t b : data) {
        if (b != 0) {
            all_zero = false;
            break;
        }
    }
    if (all_zero) return out;  // identity
    if (data[0] != 0x02 && data[0] != 0x03) throw EncodingError("bad element prefix");
    mpz_class x = mpz_from_be(data.subspan(1));
    if (x >= impl_->p) throw EncodingError("element coordinate out of range");
    mpz_class rhs, t;
    impl_->fsqr(rhs, x);
    impl_->fmul(rhs, rhs, x);
    impl_->fmul(t, impl_->a, x);
    impl_->fadd(rhs, rhs, t);
    impl_->fadd(rhs, rhs, impl_->b);
    mpz_class y;
    mpz_powm(y.get_mpz_t(), rhs.get_mpz_t(), impl_->sqrt_exp.get_mpz_t(), impl_->p.get_mpz_t());
    mpz_class y2;
    impl_->fsqr(y2, y);
    if (y2 != rhs) throw EncodingError("x coordinate not on curve");
    bool want_odd = data[0] == 0x03;
    if (mpz_tstbit(y.get_mpz_t(), 0) != static_cast<int>(want_odd)) y = impl_->p - y;
    out.inf = false;
    out.x = x;
    out.y = y;
    return out;
}

Bytes Group::encode(const Scalar& s) const {
    check_gid(s.gid, impl_->gid);
    return mpz_to_be(s.v, impl_->scalar_width);
}

Scalar Group::decode_scalar(ByteView data) const {
    if (data.size() != impl_->scalar_width) throw EncodingError("scalar width mismatch");
    mpz_class v = mpz_from_be(data);
    if (v >= impl_->n) throw EncodingError("scalar out of range");
    Scalar s;
    s.gid = impl_->gid;
    s.v = v;
    return s;
}

Scalar Group::hash_to_scalar(ByteView data, HashTag tag) const {
    if (impl_->toy) {
        mpz_class sum = 0;
        for (uint8_t b : data) sum += b;
        return scalar(sum);
    }
    Bytes d = sha3_256_tagged(tag, data);
    return scalar(mpz_from_be(d));
}

Scalar Group::hash_to_scalar_nonzero(ByteView data, HashTag tag) const {
    mpz_class v;
    if (impl_->toy) {
        for (uint8_t b : data) v += b;
    } else {
        v = mpz_from_be(sha3_256_tagged(tag, data));
    }
    mpz_class nm1 = impl_->n - 1;
    mpz_mod(v.get_mpz_t(), v.get_mpz_t(), nm1.get_mpz_t());
    v += 1;
    Scalar s;
    s.gid = impl_->gid;
    s.v = v;
    return s;
}

Bytes Group::commit_digest(ByteView data) const {
    if (impl_->toy) {
        return encode(hash_to_scalar(data, HashTag::Commitment));
    }
    return sha3_256_tagged(HashTag::Commitment, data);
}

Scalar Group::prf(ByteView s, uint64_t j) const {
    if (s.empty()) throw std::invalid_argument("prf key must be nonempty");
    Bytes in(s.begin(), s.end());
    append_u64(in, j);
    return hash_to_scalar(in, HashTag::Prf);
}

}  // namespace qhsm
