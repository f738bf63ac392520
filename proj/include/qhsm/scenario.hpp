#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "qhsm/bench.hpp"
#include "qhsm/fabric.hpp"
#include "qhsm/host.hpp"

namespace qhsm {

enum class Outcome : uint8_t {
    Success,
    Abort,
    ForgeryDetected,
    SecrecyViolated,
    SetupError,
};

const char* outcome_name(Outcome o);

struct QuorumSpec {
    std::string id;
    std::vector<NodeId> members;
    uint16_t threshold_k = 0;
    std::map<NodeId, std::string> vendors;
};

struct ScriptOp {
    std::string op;  // keygen | encrypt | decrypt | cache | sign | rng | propagate
    std::string quorum;
    std::string to_quorum;      // propagate target
    std::string key = "key";    // key handle, hashed to a key id
    std::string message_hex;    // encrypt / sign input
    size_t length = 32;         // rng output length
    uint64_t j_start = 1;       // cache window
    uint16_t count = 8;
    std::string expect;         // optional expected host status name
};

struct Scenario {
    Backend backend = Backend::Transparent;
    uint64_t order = 257;  // transparent group order
    uint64_t seed = 1;
    bool seal_responses = true;
    bool require_dec_proofs = false;
    std::vector<QuorumSpec> quorums;
    AdversarySpec adversary;
    std::vector<ScriptOp> script;
    CostTable costs;
    // When set, the posterior oracle runs over the transcript after the
    // script: the named node is the honest survivor for the named key.
    std::optional<NodeId> secrecy_honest_node;
    std::string secrecy_key = "key";
};

/// Parses and validates a scenario document; throws Error with the offending
/// field path on schema violations.
Scenario scenario_from_json(const std::string& text);

/// Materialized scenario: provisioned nodes, wired fabric, ready host.
struct World {
    Group group;
    std::unique_ptr<Fabric> fabric;
    std::vector<std::unique_ptr<Node>> node_storage;
    std::map<NodeId, Element> directory;
    HostIdentity host_ident;
    std::unique_ptr<Host> host;
    std::map<std::string, QuorumConfig> quorums;
    Element rogue_target;  // aggregate the rogue-key attacker aims for

    World(Group g) : group(std::move(g)) {}
    IcNode* ic(NodeId id);
    MaliciousNode* malicious(NodeId id);
};

/// Key handles in scripts are hashed to 16-byte key ids.
Id16 key_handle_id(const std::string& handle);

std::unique_ptr<World> build_world(const Scenario& sc);

struct ScenarioResult {
    Outcome outcome = Outcome::SetupError;
    std::string reason;
    std::string summary_json;    // deterministic machine-readable summary
    Bytes transcript_bytes;      // length-prefixed envelope records
    std::string transcript_log;  // human-readable log
};

ScenarioResult run_script(World& world, const Scenario& sc);
ScenarioResult run_scenario(const Scenario& sc);

// --- secrecy posterior oracle (transparent backend) ---

/// A clear-scalar equation visible to the adversary: sigma = r_j - x * eps
/// for the honest node's unknown x and per-index nonce r_j.
struct ScalarObservation {
    uint64_t j = 0;
    mpz_class sigma;
    mpz_class eps;
};

struct SecrecyReport {
    size_t candidate_count = 0;  // consistent values for the honest share
    bool uniform = false;        // every residue is still possible
    bool recovered = false;      // adversary pinned the full secret
    mpz_class recovered_x;
};

/// Enumerates every candidate honest share and keeps those consistent with
/// the observations (group elements are treated as opaque under the
/// discrete-log assumption; only clear scalars constrain the posterior).
SecrecyReport enumerate_posterior(const Group& g,
                                  const std::vector<ScalarObservation>& obs,
                                  const mpz_class& malicious_share_sum,
                                  bool honest_node_exists);

/// Pulls the honest node's signature-share equations out of a transcript.
std::vector<ScalarObservation> extract_sign_observations(const Group& g,
                                                         const Transcript& tr,
                                                         NodeId honest_node);

/// Full posterior check for a world after its script ran.
SecrecyReport secrecy_posterior(World& world, NodeId honest_node, const Id16& key_id);

}  // namespace qhsm
