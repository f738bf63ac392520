#include "qhsm/wire.hpp"

#include <algorithm>

#include "qhsm/errors.hpp"

namespace qhsm {

std::string id_to_hex(const Id16& id) { return to_hex(ByteView(id.data(), id.size())); }

Id16 id_from_hex(const std::string& hex) {
    Bytes b = from_hex(hex);
    if (b.size() != 16) throw EncodingError("id must be 16 bytes");
    Id16 id;
    std::copy(b.begin(), b.end(), id.begin());
    return id;
}

Id16 random_id(RandomSource& rng) {
    Id16 id;
    rng.fill(id);
    return id;
}

const char* opcode_name(OpCode op) {
    switch (op) {
        case OpCode::KeygenInit: return "KEYGEN_INIT";
        case OpCode::KeygenStoreHash: return "KEYGEN_STORE_HASH";
        case OpCode::KeygenStorePubkey: return "KEYGEN_STORE_PUBKEY";
        case OpCode::KeygenFinalize: return "KEYGEN_FINALIZE";
        case OpCode::DecShare: return "DEC_SHARE";
        case OpCode::CacheNonce: return "CACHE_NONCE";
        case OpCode::SigShare: return "SIG_SHARE";
        case OpCode::RngShare: return "RNG_SHARE";
        case OpCode::KeypropInstall: return "KEYPROP_INSTALL";
        case OpCode::KeypropSplit: return "KEYPROP_SPLIT";
        case OpCode::KeypropShare: return "KEYPROP_SHARE";
        case OpCode::KeypropFinalize: return "KEYPROP_FINALIZE";
    }
    return "UNKNOWN";
}

const char* status_name(Status s) {
    switch (s) {
        case Status::Ok: return "OK";
        case Status::AccessDenied: return "ACCESS_DENIED";
        case Status::NonOperational: return "NON_OPERATIONAL";
        case Status::Lifecycle: return "LIFECYCLE";
        case Status::ProtocolOrder: return "PROTOCOL_ORDER";
        case Status::CommitmentFailure: return "COMMITMENT_FAILURE";
        case Status::ReplayRejected: return "REPLAY_REJECTED";
        case Status::UnknownKey: return "UNKNOWN_KEY";
        case Status::UnknownSession: return "UNKNOWN_SESSION";
        case Status::BadRequest: return "BAD_REQUEST";
        case Status::WrongCount: return "WRONG_COUNT";
        case Status::SessionAborted: return "SESSION_ABORTED";
        case Status::BadSignature: return "BAD_SIGNATURE";
        case Status::KeyExists: return "KEY_EXISTS";
    }
    return "UNKNOWN";
}

static bool valid_opcode(uint8_t v) {
    switch (static_cast<OpCode>(v)) {
        case OpCode::KeygenInit:
        case OpCode::KeygenStoreHash:
        case OpCode::KeygenStorePubkey:
        case OpCode::KeygenFinalize:
        case OpCode::DecShare:
        case OpCode::CacheNonce:
        case OpCode::SigShare:
        case OpCode::RngShare:
        case OpCode::KeypropInstall:
        case OpCode::KeypropSplit:
        case OpCode::KeypropShare:
        case OpCode::KeypropFinalize:
            return true;
    }
    return false;
}

Bytes Command::signed_span() const {
    Bytes out;
    out.push_back(static_cast<uint8_t>(opcode));
    append(out, ByteView(id.data(), id.size()));
    append(out, payload);
    return out;
}

Bytes Command::encode() const {
    if (signature.size() != kByteSigSize) throw EncodingError("command signature must be 64 bytes");
    Bytes out;
    uint32_t total = static_cast<uint32_t>(4 + 1 + 16 + payload.size() + kByteSigSize);
    append_u32(out, total);
    out.push_back(static_cast<uint8_t>(opcode));
    append(out, ByteView(id.data(), id.size()));
    append(out, payload);
    append(out, signature);
    return out;
}

Command Command::decode(ByteView data) {
    size_t off = 0;
    uint32_t total = read_u32(data, off);
    if (total != data.size()) throw EncodingError("command length field mismatch");
    if (total < 4 + 1 + 16 + kByteSigSize) throw EncodingError("command too short");
    if (total > kMaxBodyLen) throw EncodingError("command too long");
    Command cmd;
    uint8_t op = data[off++];
    if (!valid_opcode(op)) throw EncodingError("unknown opcode");
    cmd.opcode = static_cast<OpCode>(op);
    Bytes idb = read_exact(data, off, 16);
    std::copy(idb.begin(), idb.end(), cmd.id.begin());
    size_t payload_len = total - (4 + 1 + 16 + kByteSigSize);
    cmd.payload = read_exact(data, off, payload_len);
    cmd.signature = read_exact(data, off, kByteSigSize);
    return cmd;
}

Bytes Response::signed_span() const {
    Bytes out;
    out.push_back(static_cast<uint8_t>(opcode));
    append(out, ByteView(id.data(), id.size()));
    out.push_back(static_cast<uint8_t>(status));
    append(out, payload);
    return out;
}

Bytes Response::encode() const {
    if (signature.size() != kByteSigSize) throw EncodingError("response signature must be 64 bytes");
    Bytes out;
    uint32_t total = static_cast<uint32_t>(4 + 1 + 16 + 1 + payload.size() + kByteSigSize);
    append_u32(out, total);
    out.push_back(static_cast<uint8_t>(opcode));
    append(out, ByteView(id.data(), id.size()));
    out.push_back(static_cast<uint8_t>(status));
    append(out, payload);
    append(out, signature);
    return out;
}

Response Response::decode(ByteView data) {
    size_t off = 0;
    uint32_t total = read_u32(data, off);
    if (total != data.size()) throw EncodingError("response length field mismatch");
    if (total < 4 + 1 + 16 + 1 + kByteSigSize) throw EncodingError("response too short");
    if (total > kMaxBodyLen) throw EncodingError("response too long");
    Response r;
    uint8_t op = data[off++];
    if (!valid_opcode(op)) throw EncodingError("unknown opcode");
    r.opcode = static_cast<OpCode>(op);
    Bytes idb = read_exact(data, off, 16);
    std::copy(idb.begin(), idb.end(), r.id.begin());
    r.status = static_cast<Status>(data[off++]);
    size_t payload_len = total - (4 + 1 + 16 + 1 + kByteSigSize);
    r.payload = read_exact(data, off, payload_len);
    r.signature = read_exact(data, off, kByteSigSize);
    return r;
}

Bytes Envelope::signed_span() const {
    Bytes out;
    append_u16(out, src);
    append_u16(out, dst);
    append_u64(out, seq);
    out.push_back(static_cast<uint8_t>(kind));
    append(out, body);
    return out;
}

Bytes Envelope::encode() const {
    if (signature.size() != kByteSigSize) throw EncodingError("envelope signature must be 64 bytes");
    Bytes out;
    append_u16(out, src);
    append_u16(out, dst);
    append_u64(out, seq);
    out.push_back(static_cast<uint8_t>(kind));
    append_u32(out, static_cast<uint32_t>(body.size()));
    append(out, body);
    append(out, signature);
    return out;
}

Envelope Envelope::decode(ByteView data) {
    size_t off = 0;
    Envelope env;
    env.src = read_u16(data, off);
    env.dst = read_u16(data, off);
    env.seq = read_u64(data, off);
    if (off >= data.size()) throw EncodingError("envelope truncated");
    uint8_t kind = data[off++];
    if (kind > 1) throw EncodingError("bad body kind");
    env.kind = static_cast<BodyKind>(kind);
    uint32_t body_len = read_u32(data, off);
    if (body_len > kMaxBodyLen) throw EncodingError("body too long");
    env.body = read_exact(data, off, body_len);
    env.signature = read_exact(data, off, kByteSigSize);
    if (off != data.size()) throw EncodingError("trailing bytes after envelope");
    return env;
}

}  // namespace qhsm
