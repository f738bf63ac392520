#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <string>

#include "qhsm/bytes.hpp"

namespace qhsm {

/// Deterministic byte source. Every random draw in the system goes through
/// one of these so that a scenario seed fully determines a run.
class RandomSource {
public:
    virtual ~RandomSource() = default;
    virtual void fill(std::span<uint8_t> out) = 0;

    Bytes bytes(size_t n);
};

/// Hash-counter DRBG: block i = SHA3-256(seed || BE64(i)). Not intended to be
/// a certified DRBG, just a seedable stream with no cross-stream correlation
/// when seeds differ.
class Drbg final : public RandomSource {
public:
    explicit Drbg(ByteView seed);
    explicit Drbg(uint64_t seed);

    void fill(std::span<uint8_t> out) override;

    /// Child stream keyed by (seed || label); used to hand independent
    /// deterministic streams to nodes, host and adversary.
    Drbg fork(const std::string& label) const;

private:
    Bytes seed_;
    uint64_t counter_ = 0;
    Bytes block_;
    size_t pos_ = 0;
};

}  // namespace qhsm
