#include "qhsm/rng.hpp"

#include <cstring>

#include "qhsm/hash.hpp"

namespace qhsm {

Bytes RandomSource::bytes(size_t n) {
    Bytes out(n);
    fill(out);
    return out;
}

Drbg::Drbg(ByteView seed) : seed_(seed.begin(), seed.end()) {}

Drbg::Drbg(uint64_t seed) { seed_ = be64(seed); }

void Drbg::fill(std::span<uint8_t> out) {
    size_t done = 0;
    while (done < out.size()) {
        if (pos_ >= block_.size()) {
            Bytes in = seed_;
            append_u64(in, counter_++);
            block_ = sha3_256_tagged(HashTag::Drbg, in);
            pos_ = 0;
        }
        size_t take = std::min(block_.size() - pos_, out.size() - done);
        std::memcpy(out.data() + done, block_.data() + pos_, take);
        pos_ += take;
        done += take;
    }
}

Drbg Drbg::fork(const std::string& label) const {
    Bytes child = seed_;
    child.insert(child.end(), label.begin(), label.end());
    return Drbg(ByteView(child));
}

}  // namespace qhsm
