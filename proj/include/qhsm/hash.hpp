#pragma once

#include <cstdint>

#include "qhsm/bytes.hpp"

namespace qhsm {

/// Domain-separation tags. Every digest computed by the library is prefixed
/// with one of these so the same bytes can never collide across uses.
enum class HashTag : uint8_t {
    Generic = 0x00,
    Commitment = 0x01,
    Challenge = 0x02,
    Prf = 0x03,
    Envelope = 0x04,
    Dleq = 0x05,
    OneWay = 0x06,
    Drbg = 0x07,
};

Bytes sha3_256(ByteView data);
Bytes sha3_512(ByteView data);

Bytes sha3_256_tagged(HashTag tag, ByteView data);
Bytes sha3_512_tagged(HashTag tag, ByteView data);

/// One-way conditioning used by the distributed RNG: stretches or truncates
/// SHA3-512(tag || data || BE32(block)) output to exactly out_len bytes.
Bytes one_way(ByteView data, size_t out_len);

}  // namespace qhsm
