#include "qhsm/tolerance.hpp"

#include <cmath>
#include <stdexcept>

namespace qhsm {

double k_tolerance(double p_error, unsigned k) {
    if (!(p_error >= 0.0 && p_error <= 1.0)) {
        throw std::invalid_argument("p_error must be in [0, 1]");
    }
    if (k < 1) throw std::invalid_argument("k must be at least 1");
    return 1.0 - std::pow(p_error, static_cast<double>(k));
}

ToleranceRow tolerance_single_ic() { return ToleranceRow{0, 0, 0}; }

ToleranceRow tolerance_k_equals_t(unsigned t, unsigned n_quorums) {
    if (t < 1 || n_quorums < 1) throw std::invalid_argument("t and n must be at least 1");
    return ToleranceRow{t - 1, 0, n_quorums - 1};
}

ToleranceRow tolerance_k_less_t(unsigned k, unsigned t, unsigned n_quorums) {
    if (k < 1 || k >= t || n_quorums < 1) {
        throw std::invalid_argument("need 1 <= k < t and n >= 1");
    }
    return ToleranceRow{k - 1, t - k, (t - k) * n_quorums};
}

}  // namespace qhsm
