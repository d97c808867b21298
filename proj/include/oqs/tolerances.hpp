// tolerances.hpp — the single tolerance record threaded through every
// operation. Call sites never hard-code numerical thresholds.

#pragma once

#include <cstddef>

namespace oqs {

inline constexpr const char* kVersion = "0.1.0";

struct ToleranceConfig {
    // Base round-off scale; most checks use base * dimension.
    double base = 1e-12;
    // Relative Hermiticity defect accepted at HermitianMatrix construction.
    double hermiticity = 1e-12;
    // Trace / normalization defect for states and amplitude vectors.
    double trace = 1e-12;
    // Smallest admissible eigenvalue of a density matrix.
    double psd_floor = -1e-10;
    // Cross-route agreement (supermatrix path vs partial-trace path).
    double map_match = 1e-11;
    // Divisibility verdict threshold; separated from assertion tolerances so
    // round-off and structural violation stay >= 5 orders apart.
    double divisibility_theta = 1e-8;
    // Fock-cutoff stability bound under n_max -> n_max + 4.
    double cutoff_drift = 1e-8;
    // Kraus / projector completeness defect.
    double completeness = 1e-10;
    // Commutator norm below which operators count as commuting.
    double commuting = 1e-10;
    // Hilbert-space dimension cap for the full system (spec: desk scale).
    std::size_t max_dim = 4096;
    // Dimension cap for superoperator-space work (projection module).
    std::size_t max_dim_superop = 16;

    double scaled(std::size_t dim) const { return base * static_cast<double>(dim); }
};

inline const ToleranceConfig& default_tol() {
    static const ToleranceConfig tol{};
    return tol;
}

}  // namespace oqs
