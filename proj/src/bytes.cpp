#include "qhsm/bytes.hpp"

#include <algorithm>
#include <stdexcept>

#include "qhsm/errors.hpp"

namespace qhsm {

Bytes be64(uint64_t v) {
    Bytes out;
    append_u64(out, v);
    return out;
}

uint16_t read_u16(ByteView in, size_t& off) {
    if (off + 2 > in.size()) throw EncodingError("truncated u16");
    uint16_t v = static_cast<uint16_t>((in[off] << 8) | in[off + 1]);
    off += 2;
    return v;
}

uint32_t read_u32(ByteView in, size_t& off) {
    if (off + 4 > in.size()) throw EncodingError("truncated u32");
    uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v = (v << 8) | in[off + i];
    off += 4;
    return v;
}

uint64_t read_u64(ByteView in, size_t& off) {
    if (off + 8 > in.size()) throw EncodingError("truncated u64");
    uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v = (v << 8) | in[off + i];
    off += 8;
    return v;
}

Bytes read_exact(ByteView in, size_t& off, size_t len) {
    if (off + len > in.size()) throw EncodingError("truncated field");
    Bytes out(in.begin() + off, in.begin() + off + len);
    off += len;
    return out;
}

Bytes xor_bytes(ByteView a, ByteView b) {
    if (a.size() != b.size()) throw EncodingError("xor operands differ in length");
    Bytes out(a.size());
    for (size_t i = 0; i < a.size(); ++i) out[i] = a[i] ^ b[i];
    return out;
}

std::string to_hex(ByteView data) {
    static const char* digits = "0123456789abcdef";
    std::string out;
    out.reserve(data.size() * 2);
    for (uint8_t b : data) {
        out.push_back(digits[b >> 4]);
        out.push_back(digits[b & 0x0F]);
    }
    return out;
}

static int hex_nibble(char c) {
    if (c >= '0' && c <= '9') return c - '0';
    if (c >= 'a' && c <= 'f') return c - 'a' + 10;
    if (c >= 'A' && c <= 'F') return c - 'A' + 10;
    return -1;
}

Bytes from_hex(const std::string& hex) {
    if (hex.size() % 2 != 0) throw EncodingError("hex string has odd length");
    Bytes out;
    out.reserve(hex.size() / 2);
    for (size_t i = 0; i < hex.size(); i += 2) {
        int hi = hex_nibble(hex[i]);
        int lo = hex_nibble(hex[i + 1]);
        if (hi < 0 || lo < 0) throw EncodingError("invalid hex digit");
        out.push_back(static_cast<uint8_t>((hi << 4) | lo));
    }
    return out;
}

bool contains_subsequence(ByteView hay, ByteView needle) {
    if (needle.empty()) return true;
    if (needle.size() > hay.size()) return false;
    auto it = std::search(hay.begin(), hay.end(), needle.begin(), needle.end());
    return it != hay.end();
}

}  // namespace qhsm
