#pragma once

namespace qhsm {

/// Probability that a quorum assembled from k independently sourced
/// components contains at least one honest member: 1 - p_error^k.
/// Throws std::invalid_argument outside 0 <= p_error <= 1 or k < 1.
double k_tolerance(double p_error, unsigned k);

/// Tolerated counts of malicious/faulty members per abnormal scenario,
/// for a deployment of n identical quorums of size t with secrecy
/// threshold k.
struct ToleranceRow {
    unsigned leakage = 0;      // colluding members before secrets leak
    unsigned denial = 0;       // refusing members before an op halts
    unsigned ic_failures = 0;  // wear failures absorbed via re-sharing
};

ToleranceRow tolerance_single_ic();
ToleranceRow tolerance_k_equals_t(unsigned t, unsigned n_quorums);
ToleranceRow tolerance_k_less_t(unsigned k, unsigned t, unsigned n_quorums);

}  // namespace qhsm
