// diagnostics.hpp — timescale and information diagnostics: environment
// correlation functions, tau_E / tau_S estimates, the factorization defect,
// von Neumann entropy, and the small-incremental-entangling rate bound.

#pragma once

#include <vector>

#include "oqs/model.hpp"

namespace oqs {

// <H_SE(t) H_SE(t')> in the interaction picture with H_0 = H_S + H_E.
inline Complex env_correlation(const SystemSpec& spec, const Matrix& rho0, double t, double tprime,
                               const ToleranceConfig& tol = default_tol()) {
    spec.validate(tol);
    if (rho0.rows() != spec.total_dim())
        throw ShapeError("diagnostics/env_correlation: state dimension mismatch");
    const Matrix h0 = kron(spec.H_S.mat(), Matrix::Identity(spec.d_E, spec.d_E), tol) +
                      kron(Matrix::Identity(spec.d_S, spec.d_S), spec.H_E.mat(), tol);
    const Propagator prop{HermitianMatrix(h0, tol)};
    const auto picture = [&](double s) {
        const Matrix u = prop.unitary(-s);  // e^{+i H_0 s}
        return Matrix(u * spec.H_SE.mat() * u.adjoint());
    };
    return (rho0 * picture(t) * picture(tprime)).trace();
}

struct TauEstimate {
    double tau = 0.0;
    bool decayed = false;
};

// First tau where |C(tau)| falls to e^{-1} |C(0)|, linearly interpolated on
// the sampled grid. Returns the grid maximum with decayed=false if the
// threshold is never reached.
inline TauEstimate estimate_tau_E(const std::vector<double>& taus,
                                  const std::vector<Complex>& samples) {
    if (taus.empty() || taus.size() != samples.size())
        throw EmptyGridError("diagnostics/estimate_tau_E: empty or mismatched grid");
    const double c0 = std::abs(samples.front());
    if (c0 <= 0.0) throw EmptyGridError("diagnostics/estimate_tau_E: |C(0)| vanishes");
    const double threshold = c0 / M_E;
    for (std::size_t k = 1; k < taus.size(); ++k) {
        const double prev = std::abs(samples[k - 1]);
        const double cur = std::abs(samples[k]);
        if (cur <= threshold) {
            const double run = prev - cur;
            const double frac = run > 0.0 ? (prev - threshold) / run : 1.0;
            return {taus[k - 1] + frac * (taus[k] - taus[k - 1]), true};
        }
    }
    return {taus.back(), false};
}

struct TimescaleReport {
    double tau_E = 0.0;
    double tau_S = 0.0;         // 1 / (||H_SE||^2 tau_E)
    double coupling_norm = 0.0;  // ||H_SE||_op
    double markov_ratio = 0.0;   // tau_E / tau_S = tau_E^2 ||H_SE||^2
    bool decayed = false;
};

inline TimescaleReport timescale_report(const SystemSpec& spec, const Matrix& rho0,
                                        const std::vector<double>& tau_grid,
                                        const ToleranceConfig& tol = default_tol()) {
    std::vector<Complex> samples;
    samples.reserve(tau_grid.size());
    for (double tau : tau_grid) samples.push_back(env_correlation(spec, rho0, tau, 0.0, tol));
    const TauEstimate est = estimate_tau_E(tau_grid, samples);
    TimescaleReport rep;
    rep.tau_E = est.tau;
    rep.decayed = est.decayed;
    rep.coupling_norm = op_norm_estimate(spec.H_SE.mat());
    if (rep.coupling_norm > 0.0) {
        rep.tau_S = 1.0 / (rep.coupling_norm * rep.coupling_norm * rep.tau_E);
        rep.markov_ratio = rep.tau_E / rep.tau_S;
    }
    return rep;
}

// ||rho(t) - Tr_E rho(t) (x) Tr_S rho(t)||_max, the deviation of the evolved
// state from its factorized reduction.
inline double factorization_defect(const SystemSpec& spec, const InitialState& initial, double t,
                                   const ToleranceConfig& tol = default_tol()) {
    spec.validate(tol);
    const Matrix rho0 = initial_density(initial, spec.d_S, spec.d_E, tol);
    const Matrix rho_t = propagate(rho0, build_total_hamiltonian(spec, tol), 0.0, t, tol);
    const Matrix rho_S = partial_trace(rho_t, spec.d_S, spec.d_E, Subsystem::system);
    const Matrix rho_E = partial_trace(rho_t, spec.d_S, spec.d_E, Subsystem::environment);
    return max_abs(rho_t - kron(rho_S, rho_E, tol));
}

// -Tr rho log rho in nats; eigenvalues below zero (within the PSD floor) are
// clipped, 0 log 0 = 0.
inline double von_neumann_entropy(const Matrix& rho, const ToleranceConfig& tol = default_tol()) {
    require_square(rho, "diagnostics/von_neumann_entropy");
    if (std::abs(rho.trace().real() - 1.0) > 1e4 * tol.trace || std::abs(rho.trace().imag()) > 1e4 * tol.trace)
        throw NotAStateError("diagnostics/von_neumann_entropy: trace deviates from 1");
    const RealVector ev = hermitian_eigenvalues(rho);
    if (ev.minCoeff() < tol.psd_floor)
        throw NotAStateError("diagnostics/von_neumann_entropy: negative eigenvalue beyond floor");
    double s = 0.0;
    for (Eigen::Index k = 0; k < ev.size(); ++k) {
        const double lam = ev(k);
        if (lam > 0.0) s -= lam * std::log(lam);
    }
    return s;
}

struct SieReport {
    double gamma0 = 0.0;  // finite-difference entropy rate at t = 0
    double bound = 0.0;   // c ||H_SE||_op log min(d_S, d_E)
    bool satisfied = false;
};

// Entropy-rate bound check for a pure product initial state. gamma0 is the
// central difference of Sigma_S at t = h with h = 1e-3 / ||H||_op.
inline SieReport sie_rate_check(const SystemSpec& spec, const InitialState& initial, double c,
                                const ToleranceConfig& tol = default_tol()) {
    spec.validate(tol);
    if (initial.kind != StateKind::product)
        throw NotProductError("diagnostics/sie_rate_check: initial state must be a pure product");
    initial.validate(spec.d_S, spec.d_E, tol);
    if (max_abs(initial.d * initial.d - initial.d) > 1e3 * tol.trace)
        throw NotProductError("diagnostics/sie_rate_check: environment weights not pure");

    const HermitianMatrix h = build_total_hamiltonian(spec, tol);
    const double hnorm = op_norm_estimate(h.mat());
    const double step = hnorm > 0.0 ? 1e-3 / hnorm : 1e-3;
    const Matrix rho0 = initial_density(initial, spec.d_S, spec.d_E, tol);
    const Propagator prop(h);
    const auto entropy_at = [&](double t) {
        const Matrix rho_S = partial_trace(prop.evolve(rho0, t), spec.d_S, spec.d_E, Subsystem::system);
        return von_neumann_entropy(rho_S, tol);
    };
    SieReport rep;
    rep.gamma0 = (entropy_at(2.0 * step) - entropy_at(0.0)) / (2.0 * step);
    const double delta = std::min(spec.d_S, spec.d_E);
    rep.bound = c * op_norm_estimate(spec.H_SE.mat()) * std::log(delta);
    rep.satisfied = rep.gamma0 <= rep.bound + 1e-6;
    return rep;
}

}  // namespace oqs
