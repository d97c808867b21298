// time_local.hpp — the one-time master equation in environment-block form:
// block densities rho_{gb} = <. g|rho|b .> in the H_E eigenbasis, the Omega
// cross terms that quantify divisibility violation, the per-channel
// right-hand side, and an RK4 integrator for the exact block ODE system.

#pragma once

#include <vector>

#include "oqs/model.hpp"

namespace oqs {

// Full state organized as d_S x d_S blocks over environment index pairs,
// expressed in the basis where H_E is diagonal.
struct BlockDensity {
    int d_S = 0;
    int d_E = 0;
    Matrix full;  // (d_S*d_E) x (d_S*d_E)

    static BlockDensity from_full(int d_S, int d_E, Matrix rho) {
        BlockDensity b;
        b.d_S = d_S;
        b.d_E = d_E;
        b.full = std::move(rho);
        if (b.full.rows() != d_S * d_E || b.full.cols() != d_S * d_E)
            throw ShapeError("time_local/BlockDensity: state is not (d_S*d_E)^2 shaped");
        return b;
    }

    // rho_{gb}[i,j] = <i g| rho |j b>
    Matrix block(int g, int b) const {
        Matrix out(d_S, d_S);
        for (int i = 0; i < d_S; ++i)
            for (int j = 0; j < d_S; ++j) out(i, j) = full(i * d_E + g, j * d_E + b);
        return out;
    }

    void validate(const ToleranceConfig& tol = default_tol()) const {
        for (int g = 0; g < d_E; ++g)
            for (int b = g; b < d_E; ++b)
                if (max_abs(block(b, g) - Matrix(block(g, b).adjoint())) >
                    tol.scaled(static_cast<std::size_t>(d_S) * d_E))
                    throw NumericalError("time_local/BlockDensity: block Hermiticity pairing broken");
        Complex tr = 0.0;
        for (int g = 0; g < d_E; ++g) tr += block(g, g).trace();
        if (std::abs(tr - Complex(1.0, 0.0)) > 1e3 * tol.trace)
            throw NormalizationError("time_local/BlockDensity: block traces do not sum to 1");
    }
};

// Channel Hamiltonian H_d^g: the system part plus the environment-diagonal
// part of H_E + H_SE at channel g.
inline Matrix channel_hamiltonian(const SystemSpec& spec, int gamma,
                                  const ToleranceConfig& tol = default_tol()) {
    spec.validate(tol);
    if (gamma < 0 || gamma >= spec.d_E)
        throw ShapeError("time_local/channel_hamiltonian: channel index out of range");
    Matrix h = spec.H_S.mat();
    const Complex e_g = spec.H_E.mat()(gamma, gamma);
    h += e_g * Matrix::Identity(spec.d_S, spec.d_S);
    for (int i = 0; i < spec.d_S; ++i)
        for (int j = 0; j < spec.d_S; ++j)
            h(i, j) += spec.H_SE.mat()(i * spec.d_E + gamma, j * spec.d_E + gamma);
    return h;
}

// The two Omega cross terms feeding channel gamma from the other channels:
//   out[i,k] = sum_{b != g} sum_j <i g|H_SE|j b> rho_{bg}[j,k]
//   in [i,k] = sum_{b != g} sum_j rho_{gb}[i,j] <j b|H_SE|k g>
inline std::pair<Matrix, Matrix> omega_terms(const SystemSpec& spec, const BlockDensity& blocks,
                                             int gamma, const ToleranceConfig& tol = default_tol()) {
    spec.validate(tol);
    if (blocks.d_S != spec.d_S || blocks.d_E != spec.d_E)
        throw ShapeError("time_local/omega_terms: block shape mismatch");
    if (gamma < 0 || gamma >= spec.d_E)
        throw ShapeError("time_local/omega_terms: channel index out of range");
    const int d_S = spec.d_S;
    const int d_E = spec.d_E;
    const Matrix& h_se = spec.H_SE.mat();
    Matrix out = Matrix::Zero(d_S, d_S);
    Matrix in = Matrix::Zero(d_S, d_S);
    for (int b = 0; b < d_E; ++b) {
        if (b == gamma) continue;
        const Matrix rho_bg = blocks.block(b, gamma);
        const Matrix rho_gb = blocks.block(gamma, b);
        for (int i = 0; i < d_S; ++i)
            for (int k = 0; k < d_S; ++k) {
                Complex acc_out = 0.0;
                Complex acc_in = 0.0;
                for (int j = 0; j < d_S; ++j) {
                    acc_out += h_se(i * d_E + gamma, j * d_E + b) * rho_bg(j, k);
                    acc_in += rho_gb(i, j) * h_se(j * d_E + b, k * d_E + gamma);
                }
                out(i, k) += acc_out;
                in(i, k) += acc_in;
            }
    }
    return {out, in};
}

// Right-hand side of the channel-gamma equation:
//   d rho_{gg}/dt = -i [H_d^g, rho_{gg}] - i (Omega_out - Omega_in).
// Equals the (g,g) block of -i [H, rho] on the full space when H_E is
// diagonal in this basis.
inline Matrix master_rhs_gamma(const SystemSpec& spec, const BlockDensity& blocks, int gamma,
                               const ToleranceConfig& tol = default_tol()) {
    const Matrix h_d = channel_hamiltonian(spec, gamma, tol);
    const Matrix rho_gg = blocks.block(gamma, gamma);
    const auto [out, in] = omega_terms(spec, blocks, gamma, tol);
    return -kI * comm(h_d, rho_gg) - kI * (out - in);
}

// The two one-sided derivative contributions to d rho_S/dt:
// (-i Tr_E(H rho), +i Tr_E(rho H)). Their sum is the exact derivative.
inline std::pair<Matrix, Matrix> derivative_split_terms(const SystemSpec& spec,
                                                        const Matrix& rho_full,
                                                        const ToleranceConfig& tol = default_tol()) {
    const Matrix h = build_total_hamiltonian(spec, tol).mat();
    const Matrix term1 = -kI * partial_trace(h * rho_full, spec.d_S, spec.d_E, Subsystem::system);
    const Matrix term2 = kI * partial_trace(rho_full * h, spec.d_S, spec.d_E, Subsystem::system);
    return {term1, term2};
}

// Classical RK4 over the exact block ODE d rho/dt = -i [H, rho], returning
// the trajectory at steps+1 uniformly spaced times including both endpoints.
inline std::vector<BlockDensity> integrate_blocks(const SystemSpec& spec,
                                                  const InitialState& initial, double T, int steps,
                                                  const ToleranceConfig& tol = default_tol()) {
    if (steps < 8) throw StepError("time_local/integrate_blocks: need >= 8 steps");
    spec.validate(tol);
    auto [rotated, v] = rotate_to_env_eigenbasis(spec, tol);
    const Matrix v_full = kron(Matrix::Identity(spec.d_S, spec.d_S), v, tol);
    Matrix rho = v_full.adjoint() * initial_density(initial, spec.d_S, spec.d_E, tol) * v_full;
    const Matrix h = build_total_hamiltonian(rotated, tol).mat();
    const double dt = T / steps;

    const auto rhs = [&h](const Matrix& x) { return Matrix(-kI * (h * x - x * h)); };

    std::vector<BlockDensity> traj;
    traj.reserve(steps + 1);
    traj.push_back(BlockDensity::from_full(spec.d_S, spec.d_E, rho));
    for (int k = 0; k < steps; ++k) {
        const Matrix k1 = rhs(rho);
        const Matrix k2 = rhs(rho + 0.5 * dt * k1);
        const Matrix k3 = rhs(rho + 0.5 * dt * k2);
        const Matrix k4 = rhs(rho + dt * k3);
        rho += (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        if (!all_finite(rho))
            throw StepError("time_local/integrate_blocks: non-finite state at step " +
                            std::to_string(k + 1));
        traj.push_back(BlockDensity::from_full(spec.d_S, spec.d_E, rho));
    }
    return traj;
}

}  // namespace oqs
