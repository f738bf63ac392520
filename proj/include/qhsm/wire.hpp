#pragma once

#include <array>
#include <cstdint>
#include <string>

#include "qhsm/bytes.hpp"
#include "qhsm/group.hpp"
#include "qhsm/multisig.hpp"

namespace qhsm {

constexpr NodeId kHostId = 0xFFFE;
constexpr NodeId kBroadcastId = 0xFFFF;

/// 16-byte session / key identifier. Session ids are host-chosen nonces
/// echoed in every step of a protocol run.
using Id16 = std::array<uint8_t, 16>;

std::string id_to_hex(const Id16& id);
Id16 id_from_hex(const std::string& hex);
Id16 random_id(RandomSource& rng);

enum class OpCode : uint8_t {
    KeygenInit = 0x10,
    KeygenStoreHash = 0x11,
    KeygenStorePubkey = 0x12,
    KeygenFinalize = 0x13,
    DecShare = 0x20,
    CacheNonce = 0x30,
    SigShare = 0x31,
    RngShare = 0x40,
    KeypropInstall = 0x50,
    KeypropSplit = 0x51,
    KeypropShare = 0x52,
    KeypropFinalize = 0x53,
};

const char* opcode_name(OpCode op);

enum class Status : uint8_t {
    Ok = 0x00,
    AccessDenied = 0x01,
    NonOperational = 0x02,
    Lifecycle = 0x03,
    ProtocolOrder = 0x04,
    CommitmentFailure = 0x05,
    ReplayRejected = 0x06,
    UnknownKey = 0x07,
    UnknownSession = 0x08,
    BadRequest = 0x09,
    WrongCount = 0x0A,
    SessionAborted = 0x0B,
    BadSignature = 0x0C,
    KeyExists = 0x0D,
};

const char* status_name(Status s);

/// Authenticated command. Wire layout (bit-exact):
///   4-byte BE total length | 1-byte opcode | 16-byte session/key id |
///   payload | 64-byte requester signature
/// The signature covers opcode || id || payload; the id field carries the
/// session nonce (or key id) that binds the command to its protocol run.
struct Command {
    OpCode opcode = OpCode::KeygenInit;
    Id16 id{};
    Bytes payload;
    Bytes signature;  // 64 bytes

    Bytes signed_span() const;
    Bytes encode() const;
    static Command decode(ByteView data);
};

/// Signed node response; mirrors the command layout with a status byte
/// prepended to the payload section.
struct Response {
    OpCode opcode = OpCode::KeygenInit;
    Id16 id{};
    Status status = Status::Ok;
    Bytes payload;
    Bytes signature;  // 64 bytes

    Bytes signed_span() const;
    Bytes encode() const;
    static Response decode(ByteView data);
};

enum class BodyKind : uint8_t { Command = 0, Response = 1 };

/// Routed message: header, body (a command or response) and the sender's
/// signature over src || dst || seq || body.
struct Envelope {
    NodeId src = 0;
    NodeId dst = 0;
    uint64_t seq = 0;
    BodyKind kind = BodyKind::Command;
    Bytes body;       // encoded Command or Response
    Bytes signature;  // 64 bytes

    Bytes signed_span() const;
    Bytes encode() const;
    static Envelope decode(ByteView data);
};

constexpr size_t kMaxBodyLen = 1 << 20;

}  // namespace qhsm
