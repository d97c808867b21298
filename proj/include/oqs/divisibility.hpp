// divisibility.hpp — quantifies the semigroup property of the reduced map as
// a composition residual and certifies each sufficient condition: a unique
// occupied environment state, equal-weight (maximally coherent) initial data,
// commuting environment and coupling Hamiltonians, and single-channel
// entangled initial data.

#pragma once

#include <optional>

#include "oqs/map.hpp"

namespace oqs {

enum class ConditionTag : unsigned {
    none = 0,
    single_env_state = 1u << 0,
    equal_weights = 1u << 1,
    commuting_HE_HSE = 1u << 2,
    entangled_reduced = 1u << 3,
};

inline unsigned operator|(ConditionTag a, ConditionTag b) {
    return static_cast<unsigned>(a) | static_cast<unsigned>(b);
}

struct DivisibilityReport {
    double t0 = 0.0;
    double ts = 0.0;
    double t = 0.0;
    double residual = 0.0;      // max-abs entry of C(t,t0) - C(ts,t0)*C(t,ts)
    double residual_fro = 0.0;  // Frobenius norm of the same defect
    bool divisible = false;     // residual <= theta
    unsigned tags = 0;

    bool has(ConditionTag tag) const { return (tags & static_cast<unsigned>(tag)) != 0; }
};

// True iff the weights put all mass on one basis state: a single diagonal
// entry equal to 1 and no off-diagonal mass.
inline bool certify_single_env_state(const Matrix& d, const ToleranceConfig& tol = default_tol()) {
    detail::check_weights(d, static_cast<int>(d.rows()), "divisibility/certify_single_env_state", tol);
    const double eps = 1e3 * tol.trace;
    int ones = 0;
    for (Eigen::Index k = 0; k < d.rows(); ++k) {
        const Complex v = d(k, k);
        if (std::abs(v - Complex(1.0, 0.0)) <= eps)
            ++ones;
        else if (std::abs(v) > eps)
            return false;
    }
    if (ones != 1) return false;
    Matrix offdiag = d;
    offdiag.diagonal().setZero();
    return max_abs(offdiag) <= eps;
}

// True iff |c_i|^2 = 1/n for every i and d = I/N.
inline bool certify_equal_weights(const InitialState& state,
                                  const ToleranceConfig& tol = default_tol()) {
    if (state.kind != StateKind::product)
        throw WrongKindError("divisibility/certify_equal_weights: product-kind state required");
    const double eps = 1e2 * tol.divisibility_theta;  // 1e-10 at defaults
    const int n = static_cast<int>(state.c.size());
    for (int i = 0; i < n; ++i)
        if (std::abs(std::norm(state.c(i)) - 1.0 / n) > eps) return false;
    const int N = static_cast<int>(state.d.rows());
    const Matrix target = Matrix::Identity(N, N) / static_cast<double>(N);
    return max_abs(state.d - target) <= eps;
}

// Commutator norm ||[I (x) H_E, H_SE]||_max and the commuting verdict.
inline std::pair<bool, double> commutation_certificate(const SystemSpec& spec,
                                                       const ToleranceConfig& tol = default_tol()) {
    spec.validate(tol);
    const Matrix he_full = kron(Matrix::Identity(spec.d_S, spec.d_S), spec.H_E.mat(), tol);
    const double nrm = max_abs(comm(he_full, spec.H_SE.mat()));
    return {nrm < tol.commuting, nrm};
}

// Weight family used on the second segment. The primary residual keeps the
// same weights on both segments; the diagnostic variant rebuilds them from
// the evolved environment state at ts.
enum class MidWeights { same_family, evolved_env };

inline DivisibilityReport composition_residual(const SystemSpec& spec, const Matrix& weights,
                                               double t0, double ts, double t,
                                               MidWeights variant = MidWeights::same_family,
                                               const ToleranceConfig& tol = default_tol()) {
    if (!(t0 <= ts && ts <= t))
        throw ContractError("divisibility/composition_residual: need t0 <= ts <= t");
    const SuperMatrix full = compute_supermatrix(spec, weights, t0, t, tol);
    const SuperMatrix seg1 = compute_supermatrix(spec, weights, t0, ts, tol);
    Matrix mid = weights;
    if (variant == MidWeights::evolved_env) {
        const Matrix rho0 = kron(maximally_mixed(spec.d_S), weights, tol);
        const Matrix rho_ts = propagate(rho0, build_total_hamiltonian(spec, tol), t0, ts, tol);
        mid = partial_trace(rho_ts, spec.d_S, spec.d_E, Subsystem::environment);
    }
    const SuperMatrix seg2 = compute_supermatrix(spec, mid, ts, t, tol);

    const Matrix defect = full.C - compose(seg1, seg2).C;
    DivisibilityReport rep;
    rep.t0 = t0;
    rep.ts = ts;
    rep.t = t;
    rep.residual = max_abs(defect);
    rep.residual_fro = fro_norm(defect);
    rep.divisible = rep.residual <= tol.divisibility_theta;
    if (certify_single_env_state(weights, tol)) rep.tags |= static_cast<unsigned>(ConditionTag::single_env_state);
    const Matrix eq = Matrix::Identity(spec.d_E, spec.d_E) / static_cast<double>(spec.d_E);
    if (max_abs(weights - eq) <= 1e2 * tol.divisibility_theta)
        rep.tags |= static_cast<unsigned>(ConditionTag::equal_weights);
    if (commutation_certificate(spec, tol).first)
        rep.tags |= static_cast<unsigned>(ConditionTag::commuting_HE_HSE);
    return rep;
}

// Two-sided evaluation of the equal-weight special case: the image of the
// maximally mixed system state under the map over [t0,t] against the image
// under the composed segment maps, all with weights I/N.
struct EqualWeightsIdentity {
    Matrix lhs;
    Matrix rhs;
    double residual = 0.0;
};

inline EqualWeightsIdentity equal_weights_identity(const SystemSpec& spec, double t0, double ts,
                                                   double t,
                                                   const ToleranceConfig& tol = default_tol()) {
    const Matrix d_eq = Matrix::Identity(spec.d_E, spec.d_E) / static_cast<double>(spec.d_E);
    const Matrix rho_eq = maximally_mixed(spec.d_S);
    EqualWeightsIdentity out;
    out.lhs = apply_map(compute_supermatrix(spec, d_eq, t0, t, tol), rho_eq, tol);
    const Matrix mid = apply_map(compute_supermatrix(spec, d_eq, t0, ts, tol), rho_eq, tol);
    out.rhs = apply_map(compute_supermatrix(spec, d_eq, ts, t, tol), mid, tol);
    out.residual = max_abs(out.lhs - out.rhs);
    return out;
}

// Divisibility check for entangled initial data a_{i,alpha}. The second
// segment's weights are the evolved environment state at ts; when the
// amplitudes occupy a single environment state and the dynamics never leaves
// that channel, the report certifies divisibility and the reduced state
// matches the single-channel expression (checked in the tests).
inline DivisibilityReport entangled_divisibility_check(const SystemSpec& spec, const Matrix& a,
                                                       double t0, double ts, double t,
                                                       const ToleranceConfig& tol = default_tol()) {
    if (!(t0 <= ts && ts <= t))
        throw ContractError("divisibility/entangled_divisibility_check: need t0 <= ts <= t");
    const InitialState initial = InitialState::entangled_state(a);
    initial.validate(spec.d_S, spec.d_E, tol);
    const HermitianMatrix h = build_total_hamiltonian(spec, tol);
    const Matrix rho0 = initial_density(initial, spec.d_S, spec.d_E, tol);
    const Propagator prop(h);

    const Matrix rho_ts_full = prop.evolve(rho0, ts - t0);
    const Matrix rho_t_direct =
        partial_trace(prop.evolve(rho0, t - t0), spec.d_S, spec.d_E, Subsystem::system);
    const Matrix rho_ts = partial_trace(rho_ts_full, spec.d_S, spec.d_E, Subsystem::system);
    const Matrix env_ts = partial_trace(rho_ts_full, spec.d_S, spec.d_E, Subsystem::environment);
    const Matrix rho_t_composed =
        apply_map(compute_supermatrix(spec, env_ts, ts, t, tol), rho_ts, tol);

    const Matrix defect = rho_t_direct - rho_t_composed;
    DivisibilityReport rep;
    rep.t0 = t0;
    rep.ts = ts;
    rep.t = t;
    rep.residual = max_abs(defect);
    rep.residual_fro = fro_norm(defect);
    rep.divisible = rep.residual <= tol.divisibility_theta;

    // Single occupied environment channel?
    std::optional<int> channel;
    bool single = true;
    for (int al = 0; al < spec.d_E && single; ++al) {
        double mass = 0.0;
        for (int i = 0; i < spec.d_S; ++i) mass += std::norm(a(i, al));
        if (mass > tol.trace * 1e3) {
            if (channel) single = false;
            else channel = al;
        }
    }
    if (single && channel) {
        // Channel is dynamically closed iff the evolution never maps it out.
        const Matrix u = prop.unitary(t - t0);
        double leak = 0.0;
        for (int i = 0; i < spec.d_S; ++i)
            for (int j = 0; j < spec.d_S; ++j)
                for (int g = 0; g < spec.d_E; ++g)
                    if (g != *channel)
                        leak = std::max(leak, std::abs(u(j * spec.d_E + g, i * spec.d_E + *channel)));
        if (leak < tol.commuting) rep.tags |= static_cast<unsigned>(ConditionTag::entangled_reduced);
    }
    return rep;
}

// Reduced state predicted when the pair stays in one environment channel.
inline Matrix single_channel_reduced_state(const SystemSpec& spec, const Matrix& a, int channel,
                                           double t0, double t,
                                           const ToleranceConfig& tol = default_tol()) {
    const Matrix u = Propagator(build_total_hamiltonian(spec, tol)).unitary(t - t0);
    Matrix out = Matrix::Zero(spec.d_S, spec.d_S);
    for (int j1 = 0; j1 < spec.d_S; ++j1)
        for (int j2 = 0; j2 < spec.d_S; ++j2) {
            Complex acc = 0.0;
            for (int i1 = 0; i1 < spec.d_S; ++i1)
                for (int i2 = 0; i2 < spec.d_S; ++i2)
                    acc += a(i1, channel) * std::conj(a(i2, channel)) *
                           u(j1 * spec.d_E + channel, i1 * spec.d_E + channel) *
                           std::conj(u(j2 * spec.d_E + channel, i2 * spec.d_E + channel));
            out(j1, j2) = acc;
        }
    return out;
}

}  // namespace oqs
