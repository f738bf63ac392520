#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace qhsm {

using Bytes = std::vector<uint8_t>;
using ByteView = std::span<const uint8_t>;

inline void append(Bytes& out, ByteView data) {
    out.insert(out.end(), data.begin(), data.end());
}

inline void append_u8(Bytes& out, uint8_t v) { out.push_back(v); }

inline void append_u16(Bytes& out, uint16_t v) {
    out.push_back(static_cast<uint8_t>(v >> 8));
    out.push_back(static_cast<uint8_t>(v));
}

inline void append_u32(Bytes& out, uint32_t v) {
    for (int s = 24; s >= 0; s -= 8) out.push_back(static_cast<uint8_t>(v >> s));
}

inline void append_u64(Bytes& out, uint64_t v) {
    for (int s = 56; s >= 0; s -= 8) out.push_back(static_cast<uint8_t>(v >> s));
}

Bytes be64(uint64_t v);

uint16_t read_u16(ByteView in, size_t& off);
uint32_t read_u32(ByteView in, size_t& off);
uint64_t read_u64(ByteView in, size_t& off);
Bytes read_exact(ByteView in, size_t& off, size_t len);

Bytes xor_bytes(ByteView a, ByteView b);

std::string to_hex(ByteView data);
Bytes from_hex(const std::string& hex);

// True if |needle| occurs as a contiguous substring of |hay|.
bool contains_subsequence(ByteView hay, ByteView needle);

}  // namespace qhsm
