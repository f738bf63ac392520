#include "qhsm/hash.hpp"

#include <openssl/evp.h>

#include <stdexcept>

#include "qhsm/errors.hpp"

namespace qhsm {

static Bytes evp_digest(const EVP_MD* md, ByteView data) {
    Bytes out(EVP_MD_size(md));
    unsigned int len = 0;
    if (EVP_Digest(data.data(), data.size(), out.data(), &len, md, nullptr) != 1) {
        throw Error("digest computation failed");
    }
    out.resize(len);
    return out;
}

Bytes sha3_256(ByteView data) { return evp_digest(EVP_sha3_256(), data); }
Bytes sha3_512(ByteView data) { return evp_digest(EVP_sha3_512(), data); }

static Bytes tagged_input(HashTag tag, ByteView data) {
    Bytes in;
    in.reserve(data.size() + 1);
    in.push_back(static_cast<uint8_t>(tag));
    append(in, data);
    return in;
}

Bytes sha3_256_tagged(HashTag tag, ByteView data) {
    return sha3_256(tagged_input(tag, data));
}

Bytes sha3_512_tagged(HashTag tag, ByteView data) {
    return sha3_512(tagged_input(tag, data));
}

Bytes one_way(ByteView data, size_t out_len) {
    Bytes out;
    out.reserve(out_len);
    uint32_t block = 0;
    while (out.size() < out_len) {
        Bytes in;
        in.push_back(static_cast<uint8_t>(HashTag::OneWay));
        append(in, data);
        append_u32(in, block++);
        Bytes d = sha3_512(in);
        size_t take = std::min(d.size(), out_len - out.size());
        out.insert(out.end(), d.begin(), d.begin() + take);
    }
    return out;
}

}  // namespace qhsm
