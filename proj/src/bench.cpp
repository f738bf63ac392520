#include "qhsm/bench.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <sstream>

#include "qhsm/errors.hpp"
#include "qhsm/scenario.hpp"

namespace qhsm {

namespace {

double op_cost(const CostTable& c, OpCode op) {
    switch (op) {
        case OpCode::KeygenInit: return c.keygen_init_ms;
        case OpCode::KeygenStoreHash: return c.store_hash_ms;
        case OpCode::KeygenStorePubkey: return c.store_pubkey_ms;
        case OpCode::KeygenFinalize: return c.keygen_finalize_ms;
        case OpCode::DecShare: return c.decrypt_ms;
        case OpCode::CacheNonce: return c.cache_ms;
        case OpCode::SigShare: return c.sign_ms;
        case OpCode::RngShare: return c.rng_ms;
        case OpCode::KeypropInstall:
        case OpCode::KeypropSplit:
        case OpCode::KeypropShare:
        case OpCode::KeypropFinalize: return c.keyprop_ms;
    }
    return 0;
}

struct PhaseStats {
    double latency_ms = 0;                   // max per-node busy + bus hops
    std::map<OpCode, size_t> delivered;      // command deliveries by opcode
};

/// Cost-models a transcript slice: every delivered command costs its table
/// entry on the handling node; nodes work in parallel, so phase latency is
/// the busiest node plus the request/response bus hops.
PhaseStats tally(const Transcript& tr, size_t from, const CostTable& costs) {
    PhaseStats st;
    std::map<NodeId, double> busy;
    const auto& recs = tr.records();
    for (size_t i = from; i < recs.size(); ++i) {
        const TranscriptRecord& r = recs[i];
        if (r.action != FabricAction::Delivered || r.handled_by == kHostId) continue;
        Envelope env;
        try {
            env = Envelope::decode(r.envelope);
        } catch (const EncodingError&) {
            continue;
        }
        if (env.kind != BodyKind::Command) continue;
        try {
            Command cmd = Command::decode(env.body);
            busy[r.handled_by] += op_cost(costs, cmd.opcode);
            st.delivered[cmd.opcode]++;
        } catch (const EncodingError&) {
        }
    }
    double max_busy = 0;
    for (auto& [node, ms] : busy) max_busy = std::max(max_busy, ms);
    st.latency_ms = max_busy + 2 * costs.bus_ms;
    return st;
}

Scenario base_scenario(uint64_t seed) {
    Scenario sc;
    sc.backend = Backend::Transparent;
    sc.order = 257;
    sc.seed = seed;
    sc.seal_responses = false;  // cost model covers primitives, not sealing
    return sc;
}

}  // namespace

BenchReport run_bench(const std::vector<uint16_t>& quorum_sizes,
                      const std::vector<unsigned>& quorum_counts,
                      const CostTable& costs, uint64_t seed) {
    BenchReport rep;
    rep.keygen_exchange_quadratic = true;

    // --- latency vs quorum size ---
    for (uint16_t t : quorum_sizes) {
        Scenario sc = base_scenario(seed);
        QuorumSpec qs;
        qs.id = "q";
        for (uint16_t i = 1; i <= t; ++i) qs.members.push_back(i);
        qs.threshold_k = t;
        sc.quorums.push_back(qs);
        auto world = build_world(sc);
        const QuorumConfig& q = world->quorums.at("q");
        const Id16 key = key_handle_id("bench");
        const Transcript& tr = world->fabric->transcript();

        LatencyRow row;
        row.t = t;

        size_t mark = tr.size();
        DkpgResult kg = world->host->dkpg(q, key);
        if (kg.status != OpStatus::Ok) throw Error("bench keygen failed");
        PhaseStats kg_stats = tally(tr, mark, costs);
        row.keygen_ms = kg_stats.latency_ms;
        row.store_hash_msgs = kg_stats.delivered[OpCode::KeygenStoreHash];
        row.store_pubkey_msgs = kg_stats.delivered[OpCode::KeygenStorePubkey];
        size_t expected = static_cast<size_t>(t) * (t - 1);
        if (row.store_hash_msgs != expected || row.store_pubkey_msgs != expected) {
            rep.keygen_exchange_quadratic = false;
        }

        Drbg msg_rng = Drbg(seed).fork("bench-msg");
        Element m = world->group.mul_gen(world->group.scalar_rand(msg_rng));
        Ciphertext ct = encrypt(world->group, m, kg.key.Y_agg, msg_rng);
        mark = tr.size();
        DecryptResult dec = world->host->decrypt(q, key, ct);
        if (dec.status != OpStatus::Ok || !(dec.plaintext == m)) {
            throw Error("bench decrypt failed");
        }
        row.decrypt_ms = tally(tr, mark, costs).latency_ms;

        if (world->host->cache_nonces(q, key, 1, 4) != OpStatus::Ok) {
            throw Error("bench cache failed");
        }
        mark = tr.size();
        Bytes msg = {0x42, 0x42};
        SignResult sg = world->host->sign(q, key, msg);
        if (sg.status != OpStatus::Ok) throw Error("bench sign failed");
        row.sign_ms = tally(tr, mark, costs).latency_ms;

        mark = tr.size();
        RngResult rr = world->host->gen_random(q, 32);
        if (rr.status != OpStatus::Ok) throw Error("bench rng failed");
        row.rng_ms = tally(tr, mark, costs).latency_ms;

        rep.latency.push_back(row);
    }

    double dec_min = 0, dec_max = 0;
    for (size_t i = 0; i < rep.latency.size(); ++i) {
        double v = rep.latency[i].decrypt_ms;
        if (i == 0) dec_min = dec_max = v;
        dec_min = std::min(dec_min, v);
        dec_max = std::max(dec_max, v);
    }
    rep.decrypt_latency_spread = dec_min > 0 ? (dec_max - dec_min) / dec_min : 0;

    // --- throughput vs quorum count (fixed t = 3) ---
    constexpr unsigned kOpsPerQuorum = 4;
    for (unsigned count : quorum_counts) {
        Scenario sc = base_scenario(seed + 1);
        for (unsigned qi = 0; qi < count; ++qi) {
            QuorumSpec qs;
            qs.id = "q" + std::to_string(qi);
            for (uint16_t i = 1; i <= 3; ++i) {
                qs.members.push_back(static_cast<NodeId>(qi * 3 + i));
            }
            qs.threshold_k = 3;
            sc.quorums.push_back(qs);
        }
        auto world = build_world(sc);
        const Id16 key = key_handle_id("bench");
        const Transcript& tr = world->fabric->transcript();

        double dec_makespan = 0, sign_makespan = 0;
        for (unsigned qi = 0; qi < count; ++qi) {
            const QuorumConfig& q = world->quorums.at("q" + std::to_string(qi));
            DkpgResult kg = world->host->dkpg(q, key);
            if (kg.status != OpStatus::Ok) throw Error("bench keygen failed");
            Drbg msg_rng = Drbg(seed).fork("bench-thr");
            Element m = world->group.mul_gen(world->group.scalar_rand(msg_rng));
            Ciphertext ct = encrypt(world->group, m, kg.key.Y_agg, msg_rng);
            size_t mark = tr.size();
            for (unsigned i = 0; i < kOpsPerQuorum; ++i) {
                if (world->host->decrypt(q, key, ct).status != OpStatus::Ok) {
                    throw Error("bench decrypt failed");
                }
            }
            // Quorums serve disjoint request streams in parallel: the
            // makespan is the slowest quorum, not the sum.
            dec_makespan = std::max(dec_makespan, tally(tr, mark, costs).latency_ms);
            if (world->host->cache_nonces(q, key, 1, kOpsPerQuorum) != OpStatus::Ok) {
                throw Error("bench cache failed");
            }
            mark = tr.size();
            for (unsigned i = 0; i < kOpsPerQuorum; ++i) {
                Bytes msg = {static_cast<uint8_t>(i)};
                if (world->host->sign(q, key, msg).status != OpStatus::Ok) {
                    throw Error("bench sign failed");
                }
            }
            sign_makespan = std::max(sign_makespan, tally(tr, mark, costs).latency_ms);
        }
        // The tallies accumulate all kOpsPerQuorum commands of the slowest
        // quorum, which is the parallel makespan.
        ThroughputRow row;
        row.quorums = count;
        row.decrypt_ops_per_sec = 1000.0 * count * kOpsPerQuorum / dec_makespan;
        row.sign_ops_per_sec = 1000.0 * count * kOpsPerQuorum / sign_makespan;
        rep.throughput.push_back(row);
    }

    // Least-squares line through (quorums, ops/sec); report worst relative
    // residual for the decrypt series.
    if (rep.throughput.size() >= 2) {
        double sx = 0, sy = 0, sxx = 0, sxy = 0;
        const double n = static_cast<double>(rep.throughput.size());
        for (const ThroughputRow& r : rep.throughput) {
            sx += r.quorums;
            sy += r.decrypt_ops_per_sec;
            sxx += static_cast<double>(r.quorums) * r.quorums;
            sxy += r.quorums * r.decrypt_ops_per_sec;
        }
        double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
        double intercept = (sy - slope * sx) / n;
        double worst = 0;
        for (const ThroughputRow& r : rep.throughput) {
            double pred = slope * r.quorums + intercept;
            worst = std::max(worst, std::abs(pred - r.decrypt_ops_per_sec) /
                                        r.decrypt_ops_per_sec);
        }
        rep.throughput_fit_residual = worst;
    }

    // --- render ---
    std::ostringstream os;
    os << "latency model (ms), by quorum size\n";
    os << std::left << std::setw(4) << "t" << std::setw(12) << "keygen" << std::setw(12)
       << "decrypt" << std::setw(12) << "sign" << std::setw(12) << "rng" << std::setw(12)
       << "hash msgs" << "pubkey msgs\n";
    for (const LatencyRow& r : rep.latency) {
        os << std::left << std::setw(4) << r.t << std::setw(12) << r.keygen_ms
           << std::setw(12) << r.decrypt_ms << std::setw(12) << r.sign_ms << std::setw(12)
           << r.rng_ms << std::setw(12) << r.store_hash_msgs << r.store_pubkey_msgs << "\n";
    }
    os << "decrypt latency spread: " << rep.decrypt_latency_spread * 100 << "%\n";
    if (!rep.throughput.empty()) {
        os << "\nthroughput model (ops/sec), quorum size 3\n";
        os << std::left << std::setw(9) << "quorums" << std::setw(12) << "decrypt"
           << "sign\n";
        for (const ThroughputRow& r : rep.throughput) {
            os << std::left << std::setw(9) << r.quorums << std::setw(12)
               << r.decrypt_ops_per_sec << r.sign_ops_per_sec << "\n";
        }
        os << "linear fit residual: " << rep.throughput_fit_residual * 100 << "%\n";
    }
    rep.text = os.str();

    nlohmann::json j;
    j["decrypt_latency_spread"] = rep.decrypt_latency_spread;
    j["throughput_fit_residual"] = rep.throughput_fit_residual;
    j["keygen_exchange_quadratic"] = rep.keygen_exchange_quadratic;
    for (const LatencyRow& r : rep.latency) {
        j["latency"].push_back({{"t", r.t},
                                {"keygen_ms", r.keygen_ms},
                                {"decrypt_ms", r.decrypt_ms},
                                {"sign_ms", r.sign_ms},
                                {"rng_ms", r.rng_ms},
                                {"store_hash_msgs", r.store_hash_msgs},
                                {"store_pubkey_msgs", r.store_pubkey_msgs}});
    }
    for (const ThroughputRow& r : rep.throughput) {
        j["throughput"].push_back({{"quorums", r.quorums},
                                   {"decrypt_ops_per_sec", r.decrypt_ops_per_sec},
                                   {"sign_ops_per_sec", r.sign_ops_per_sec}});
    }
    rep.json = j.dump(2);
    return rep;
}

}  // namespace qhsm
