#include <gtest/gtest.h>

#include "oqs/spin_boson.hpp"
#include "oqs/time_local.hpp"
#include "support.hpp"

using namespace oqs;

namespace {

// Model with H_E diagonal (the block formalism's basis) and generic coupling.
SystemSpec diagonal_env_spec(std::uint64_t seed, int d_S, int d_E, double coupling,
                             bool commuting = false) {
    return rotate_to_env_eigenbasis(random_model(seed, d_S, d_E, coupling, commuting)).first;
}

BlockDensity random_blocks(Rng& rng, int d_S, int d_E) {
    return BlockDensity::from_full(d_S, d_E, test::random_density(rng, d_S * d_E));
}

}  // namespace

TEST(OmegaTerms, VanishForCommutingCoupling) {
    const SystemSpec spec = diagonal_env_spec(1, 2, 3, 1.0, true);
    Rng rng(1);
    const BlockDensity blocks = random_blocks(rng, 2, 3);
    for (int g = 0; g < 3; ++g) {
        const auto [out, in] = omega_terms(spec, blocks, g);
        EXPECT_LT(max_abs(out), 1e-12);
        EXPECT_LT(max_abs(in), 1e-12);
    }
}

TEST(OmegaTerms, SingleEnvironmentStateEmptySum) {
    const SystemSpec spec = diagonal_env_spec(2, 3, 1, 1.0);
    Rng rng(2);
    const BlockDensity blocks = random_blocks(rng, 3, 1);
    const auto [out, in] = omega_terms(spec, blocks, 0);
    EXPECT_EQ(max_abs(out), 0.0);
    EXPECT_EQ(max_abs(in), 0.0);
}

TEST(OmegaTerms, GrowFromZeroUnderPropagation) {
    // Environment starts in basis state 0: cross blocks rho_{b0} vanish at
    // t = 0 and fill in as the coupling acts.
    const SystemSpec spec = diagonal_env_spec(3, 2, 2, 1.0);
    const InitialState init =
        InitialState::product_state(uniform_amplitudes(2), basis_projector(2, 0));
    const Matrix rho0 = initial_density(init, 2, 2);
    const Propagator prop(build_total_hamiltonian(spec));

    const auto omega_size = [&](double t) {
        const BlockDensity blocks = BlockDensity::from_full(2, 2, prop.evolve(rho0, t));
        const auto [out, in] = omega_terms(spec, blocks, 0);
        return std::max(max_abs(out), max_abs(in));
    };
    EXPECT_LT(omega_size(0.0), 1e-13);
    EXPECT_GT(omega_size(0.7), 1e-3);
}

TEST(MasterRhs, MatchesFullSpaceCommutatorBlock) {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const int d_S = 2 + static_cast<int>(seed % 2);
        const int d_E = 2 + static_cast<int>(seed % 3);
        const SystemSpec spec = diagonal_env_spec(seed + 10, d_S, d_E, 1.0);
        Rng rng(seed);
        const BlockDensity blocks = random_blocks(rng, d_S, d_E);
        const Matrix full_rhs =
            -kI * comm(build_total_hamiltonian(spec).mat(), blocks.full);
        const BlockDensity full_blocks = BlockDensity::from_full(d_S, d_E, full_rhs);
        for (int g = 0; g < d_E; ++g) {
            const Matrix rhs = master_rhs_gamma(spec, blocks, g);
            EXPECT_LE(max_abs(rhs - full_blocks.block(g, g)), 1e-11)
                << "seed " << seed << " gamma " << g;
        }
    }
}

TEST(MasterRhs, CommutingReducesToChannelCommutator) {
    const SystemSpec spec = diagonal_env_spec(30, 2, 2, 1.0, true);
    Rng rng(5);
    const BlockDensity blocks = random_blocks(rng, 2, 2);
    for (int g = 0; g < 2; ++g) {
        const Matrix rhs = master_rhs_gamma(spec, blocks, g);
        const Matrix pure =
            -kI * comm(channel_hamiltonian(spec, g), blocks.block(g, g));
        EXPECT_LE(max_abs(rhs - pure), 1e-12);
    }
}

TEST(MasterRhs, IdentityBlockGivesZero) {
    const SystemSpec spec = diagonal_env_spec(31, 3, 1, 1.0);
    const BlockDensity blocks = BlockDensity::from_full(3, 1, maximally_mixed(3));
    EXPECT_LE(max_abs(master_rhs_gamma(spec, blocks, 0)), 1e-14);
}

TEST(MasterRhs, SymmetrizedFormIdentity) {
    // -i H rho + i rho H = (I - iH) rho (I + iH) - rho - H rho H, exactly.
    Rng rng(44);
    for (int rep = 0; rep < 5; ++rep) {
        const Matrix h = test::random_hermitian(rng, 4);
        const Matrix rho = test::random_density(rng, 4);
        const Matrix eye = Matrix::Identity(4, 4);
        const Matrix lhs = -kI * h * rho + kI * rho * h;
        const Matrix rhs = (eye - kI * h) * rho * (eye + kI * h) - rho - h * rho * h;
        EXPECT_LE(max_abs(lhs - rhs), 1e-14 * std::max(1.0, max_abs(h) * max_abs(h)));
    }
}

TEST(DerivativeSplit, TwoTermsSumToCentralDifference) {
    const SystemSpec spec = diagonal_env_spec(32, 2, 2, 1.0);
    const InitialState init =
        InitialState::product_state(uniform_amplitudes(2), basis_projector(2, 0));
    const Matrix rho0 = initial_density(init, 2, 2);
    const HermitianMatrix h = build_total_hamiltonian(spec);
    const Propagator prop(h);
    const double t = 0.8;
    const double step = 1e-4 / op_norm_estimate(h.mat());

    const auto [term1, term2] = derivative_split_terms(spec, prop.evolve(rho0, t));
    const Matrix fd = (partial_trace(prop.evolve(rho0, t + step), 2, 2, Subsystem::system) -
                       partial_trace(prop.evolve(rho0, t - step), 2, 2, Subsystem::system)) /
                      (2.0 * step);
    EXPECT_LE(max_abs(term1 + term2 - fd), 1e-6);
}

TEST(IntegrateBlocks, FreeEvolutionMatchesExpm) {
    SystemSpec spec;
    spec.d_S = 2;
    spec.d_E = 2;
    Rng rng(7);
    spec.H_S = HermitianMatrix(test::random_hermitian(rng, 2));
    spec.H_E = HermitianMatrix(Matrix::Zero(2, 2));
    spec.H_SE = HermitianMatrix(Matrix::Zero(4, 4));
    const InitialState init =
        InitialState::product_state(uniform_amplitudes(2), basis_projector(2, 0));
    const double T = 1.0;
    const auto traj = integrate_blocks(spec, init, T, 256);
    const Matrix exact = propagate(initial_density(init, 2, 2), build_total_hamiltonian(spec), 0.0, T);
    EXPECT_LE(max_abs(traj.back().full - exact), 1e-10);
}

TEST(IntegrateBlocks, Rk4OrderUnderStepDoubling) {
    const SystemSpec spec = diagonal_env_spec(33, 2, 2, 1.0);
    const InitialState init =
        InitialState::product_state(uniform_amplitudes(2), basis_projector(2, 0));
    const double T = 2.0;
    const Matrix exact = propagate(initial_density(init, 2, 2), build_total_hamiltonian(spec), 0.0, T);
    const double e64 = max_abs(integrate_blocks(spec, init, T, 64).back().full - exact);
    const double e128 = max_abs(integrate_blocks(spec, init, T, 128).back().full - exact);
    ASSERT_GT(e64, 0.0);
    const double ratio = e64 / e128;
    EXPECT_GE(ratio, 10.0);
    EXPECT_LE(ratio, 22.0);
}

TEST(IntegrateBlocks, ZeroHamiltonianConstant) {
    SystemSpec spec;
    spec.d_S = 2;
    spec.d_E = 2;
    spec.H_S = HermitianMatrix(Matrix::Zero(2, 2));
    spec.H_E = HermitianMatrix(Matrix::Zero(2, 2));
    spec.H_SE = HermitianMatrix(Matrix::Zero(4, 4));
    const InitialState init =
        InitialState::product_state(uniform_amplitudes(2), basis_projector(2, 0));
    const auto traj = integrate_blocks(spec, init, 3.0, 16);
    EXPECT_EQ(max_abs(traj.back().full - traj.front().full), 0.0);
}

TEST(IntegrateBlocks, StepErrorOnOverflow) {
    SystemSpec spec;
    spec.d_S = 2;
    spec.d_E = 2;
    spec.H_S = HermitianMatrix(1e160 * test::pauli_z());
    spec.H_E = HermitianMatrix(Matrix::Zero(2, 2));
    spec.H_SE = HermitianMatrix(Matrix::Zero(4, 4));
    const InitialState init =
        InitialState::product_state(uniform_amplitudes(2), basis_projector(2, 0));
    EXPECT_THROW(integrate_blocks(spec, init, 1.0, 8), StepError);
}

TEST(IntegrateBlocks, MinimumSteps) {
    const SystemSpec spec = diagonal_env_spec(34, 2, 2, 1.0);
    const InitialState init =
        InitialState::product_state(uniform_amplitudes(2), basis_projector(2, 0));
    EXPECT_THROW(integrate_blocks(spec, init, 1.0, 4), StepError);
}

TEST(IntegrateBlocks, ProbabilityConservation) {
    const SystemSpec spec = diagonal_env_spec(35, 2, 3, 1.0);
    const InitialState init =
        InitialState::product_state(uniform_amplitudes(2), basis_projector(3, 0));
    const auto traj = integrate_blocks(spec, init, 2.0, 128);
    for (const BlockDensity& b : traj) {
        double tr = 0.0;
        for (int g = 0; g < 3; ++g) tr += b.block(g, g).trace().real();
        EXPECT_NEAR(tr, 1.0, 1e-10);
    }
}

TEST(OmegaTerms, ChannelIndexRangeChecked) {
    const SystemSpec spec = diagonal_env_spec(40, 2, 2, 1.0);
    Rng rng(40);
    const BlockDensity blocks = random_blocks(rng, 2, 2);
    EXPECT_THROW(omega_terms(spec, blocks, 2), ShapeError);
    EXPECT_THROW(master_rhs_gamma(spec, blocks, -1), ShapeError);
}

TEST(BlockDensity, ValidatesPairingAndTrace) {
    Rng rng(9);
    const BlockDensity good = random_blocks(rng, 2, 2);
    EXPECT_NO_THROW(good.validate());
    BlockDensity bad = good;
    bad.full(0, 1) += Complex(0.5, 0.0);  // breaks Hermiticity pairing
    EXPECT_THROW(bad.validate(), NumericalError);
}

TEST(StructuralHandOff, CommutingBlocksStayClosedAndDivisible) {
    // Channel-closed evolution: the commuting model's gamma blocks evolve
    // independently; the divisibility module certifies the reduced dynamics.
    const SystemSpec spec = diagonal_env_spec(36, 2, 2, 1.0, true);
    const Matrix d = basis_projector(2, 0);
    const DivisibilityReport rep = composition_residual(spec, d, 0.0, 0.6, 1.5);
    EXPECT_LT(rep.residual, 1e-9);
    EXPECT_TRUE(rep.has(ConditionTag::commuting_HE_HSE));
}
