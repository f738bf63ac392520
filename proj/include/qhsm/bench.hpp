#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace qhsm {

/// Modeled per-primitive costs in milliseconds. The bundled defaults are the
/// reference cost model shipped with the tool; scenario files may override
/// any entry.
struct CostTable {
    double keygen_init_ms = 624.0;
    double store_hash_ms = 45.0;
    double store_pubkey_ms = 45.0;
    double keygen_finalize_ms = 20.0;
    double decrypt_ms = 119.0;
    double sign_ms = 517.0;
    double cache_ms = 169.0;
    double rng_ms = 40.0;
    double keyprop_ms = 60.0;
    double bus_ms = 2.0;  // per hop
};

struct LatencyRow {
    uint16_t t = 0;
    double keygen_ms = 0;
    double decrypt_ms = 0;
    double sign_ms = 0;
    double rng_ms = 0;
    size_t store_hash_msgs = 0;    // delivered commitment-exchange messages
    size_t store_pubkey_msgs = 0;  // delivered reveal-exchange messages
};

struct ThroughputRow {
    unsigned quorums = 0;
    double decrypt_ops_per_sec = 0;
    double sign_ops_per_sec = 0;
};

struct BenchReport {
    std::vector<LatencyRow> latency;
    std::vector<ThroughputRow> throughput;
    double decrypt_latency_spread = 0;   // (max - min) / min across sizes
    double throughput_fit_residual = 0;  // worst relative residual, linear fit
    bool keygen_exchange_quadratic = false;  // counts equal t*(t-1) per round

    std::string text;  // rendered tables
    std::string json;  // machine-readable summary
};

/// Desk-scale model: protocols run on the transparent backend to count
/// messages and rounds; latency and throughput are derived from the cost
/// table. Deterministic for a given seed.
BenchReport run_bench(const std::vector<uint16_t>& quorum_sizes,
                      const std::vector<unsigned>& quorum_counts,
                      const CostTable& costs, uint64_t seed);

}  // namespace qhsm
