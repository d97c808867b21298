#include <gtest/gtest.h>

#include <cstdio>

#include "oqs/divisibility.hpp"
#include "oqs/model.hpp"
#include "oqs/model_io.hpp"
#include "support.hpp"

using namespace oqs;

TEST(TotalHamiltonian, DiagonalSum) {
    SystemSpec spec;
    spec.d_S = 2;
    spec.d_E = 2;
    spec.H_S = HermitianMatrix(test::pauli_z());
    spec.H_E = HermitianMatrix(test::pauli_z());
    spec.H_SE = HermitianMatrix(Matrix::Zero(4, 4));
    Matrix expected = Matrix::Zero(4, 4);
    expected.diagonal() << 2, 0, 0, -2;
    EXPECT_MATRIX_NEAR(build_total_hamiltonian(spec).mat(), expected, 0.0);
}

TEST(TotalHamiltonian, CommutingConstruction) {
    const SystemSpec spec = random_model(1, 2, 3, 1.0, true);
    const Matrix he_full = kron(Matrix::Identity(2, 2), spec.H_E.mat());
    EXPECT_LE(max_abs(comm(he_full, spec.H_SE.mat())), 1e-12);
}

TEST(TotalHamiltonian, HermitianForRandomSpec) {
    const SystemSpec spec = random_model(2, 3, 2, 0.8, false);
    const Matrix h = build_total_hamiltonian(spec).mat();
    EXPECT_MATRIX_NEAR(h, h.adjoint(), 0.0);
}

TEST(InitialDensity, GroundProduct) {
    const InitialState s = InitialState::product_state(basis_vector(2, 0), basis_projector(2, 0));
    const Matrix rho = initial_density(s, 2, 2);
    Matrix expected = Matrix::Zero(4, 4);
    expected(0, 0) = 1.0;
    EXPECT_MATRIX_NEAR(rho, expected, 0.0);
}

TEST(InitialDensity, BellEntangled) {
    Matrix a = Matrix::Zero(2, 2);
    a(0, 0) = M_SQRT1_2;
    a(1, 1) = M_SQRT1_2;
    const Matrix rho = initial_density(InitialState::entangled_state(a), 2, 2);
    EXPECT_MATRIX_NEAR(partial_trace(rho, 2, 2, Subsystem::system), 0.5 * Matrix::Identity(2, 2),
                       1e-15);
    EXPECT_MATRIX_NEAR(partial_trace(rho, 2, 2, Subsystem::environment),
                       0.5 * Matrix::Identity(2, 2), 1e-15);
}

TEST(InitialDensity, EqualWeightState) {
    const int n = 3, N = 2;
    const InitialState s =
        InitialState::product_state(uniform_amplitudes(n), maximally_mixed(N));
    const Matrix rho = initial_density(s, n, N);
    EXPECT_NEAR(rho.trace().real(), 1.0, 1e-12);
}

TEST(InitialDensity, NormalizationError) {
    Vector c(2);
    c << 1.0, 0.5;
    EXPECT_THROW(initial_density(InitialState::product_state(c, basis_projector(2, 0)), 2, 2),
                 NormalizationError);
}

TEST(InitialDensity, StrictProjectorFlag) {
    InitialState s = InitialState::product_state(basis_vector(2, 0), maximally_mixed(2));
    s.strict_env_projector = true;
    EXPECT_THROW(initial_density(s, 2, 2), NormalizationError);
    s.strict_env_projector = false;
    EXPECT_NO_THROW(initial_density(s, 2, 2));
}

TEST(Propagate, IdentityAtEqualTimes) {
    Rng rng(4);
    const Matrix rho0 = test::random_density(rng, 4);
    const HermitianMatrix h(test::random_hermitian(rng, 4));
    EXPECT_MATRIX_NEAR(propagate(rho0, h, 1.0, 1.0), rho0, 0.0);
}

TEST(Propagate, FactorizedEvolutionWithoutCoupling) {
    SystemSpec spec = random_model(5, 2, 2, 0.0, false);
    const InitialState init =
        InitialState::product_state(uniform_amplitudes(2), basis_projector(2, 0));
    const Matrix rho0 = initial_density(init, 2, 2);
    const double t = 0.9;
    const Matrix rho_t = propagate(rho0, build_total_hamiltonian(spec), 0.0, t);
    const Matrix reduced = partial_trace(rho_t, 2, 2, Subsystem::system);

    const Matrix u_s = Propagator(spec.H_S).unitary(t);
    const Matrix rho_s0 = partial_trace(rho0, 2, 2, Subsystem::system);
    EXPECT_MATRIX_NEAR(reduced, u_s * rho_s0 * u_s.adjoint(), 1e-13);
}

TEST(Propagate, RejectsUnnormalizedStates) {
    Rng rng(30);
    const HermitianMatrix h(test::random_hermitian(rng, 4));
    EXPECT_THROW(propagate(Matrix(2.0 * maximally_mixed(4)), h, 0.0, 1.0), NormalizationError);
}

TEST(Propagate, SpectrumPreserved) {
    Rng rng(6);
    const Matrix rho0 = test::random_density(rng, 6);
    const HermitianMatrix h(test::random_hermitian(rng, 6));
    const Matrix rho_t = propagate(rho0, h, 0.0, 2.3);
    const RealVector before = hermitian_eigenvalues(rho0);
    const RealVector after = hermitian_eigenvalues(rho_t);
    EXPECT_LE((before - after).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(RandomModel, Deterministic) {
    const SystemSpec a = random_model(42, 3, 2, 0.7, true);
    const SystemSpec b = random_model(42, 3, 2, 0.7, true);
    EXPECT_EQ(max_abs(a.H_S.mat() - b.H_S.mat()), 0.0);
    EXPECT_EQ(max_abs(a.H_E.mat() - b.H_E.mat()), 0.0);
    EXPECT_EQ(max_abs(a.H_SE.mat() - b.H_SE.mat()), 0.0);
}

TEST(RandomModel, ZeroCoupling) {
    const SystemSpec spec = random_model(3, 2, 2, 0.0, false);
    EXPECT_EQ(max_abs(spec.H_SE.mat()), 0.0);
}

TEST(RandomModel, CouplingSetsOperatorNorm) {
    const SystemSpec spec = random_model(9, 2, 3, 1.7, false);
    EXPECT_NEAR(op_norm_estimate(spec.H_SE.mat()), 1.7, 1e-10);
    const SystemSpec cspec = random_model(9, 2, 3, 0.4, true);
    EXPECT_NEAR(op_norm_estimate(cspec.H_SE.mat()), 0.4, 1e-10);
}

TEST(RandomModel, DensityInvariantsAcrossSeeds) {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        Rng rng(seed);
        const Matrix rho = test::random_density(rng, 4);
        EXPECT_LE(max_abs(rho - rho.adjoint()), 1e-12);
        EXPECT_NEAR(rho.trace().real(), 1.0, 1e-12);
        EXPECT_GE(hermitian_eigenvalues(rho).minCoeff(), -1e-10);
    }
}

TEST(EnvEigenbasis, IdentityWhenDiagonal) {
    Matrix d = Matrix::Zero(3, 3);
    d.diagonal() << 1.0, 2.0, 3.5;
    EXPECT_MATRIX_NEAR(env_eigenbasis(HermitianMatrix(d)), Matrix::Identity(3, 3), 0.0);
}

TEST(EnvEigenbasis, DiagonalizesGeneric) {
    Rng rng(12);
    const HermitianMatrix he(test::random_hermitian(rng, 3));
    const Matrix v = env_eigenbasis(he);
    Matrix rotated = v.adjoint() * he.mat() * v;
    rotated.diagonal().setZero();
    EXPECT_LE(max_abs(rotated), 1e-13);
}

TEST(ModelIO, RoundTripBitExact) {
    const SystemSpec spec = random_model(17, 3, 2, 1.3, false);
    const InitialState init =
        InitialState::product_state(uniform_amplitudes(3), maximally_mixed(2));
    const std::string path = testing::TempDir() + "oqs_model_roundtrip.json";
    save_model(path, spec, &init);
    auto [loaded, loaded_init] = load_model(path);
    EXPECT_EQ(max_abs(loaded.H_S.mat() - spec.H_S.mat()), 0.0);
    EXPECT_EQ(max_abs(loaded.H_E.mat() - spec.H_E.mat()), 0.0);
    EXPECT_EQ(max_abs(loaded.H_SE.mat() - spec.H_SE.mat()), 0.0);
    ASSERT_TRUE(loaded_init.has_value());
    EXPECT_EQ((loaded_init->c - init.c).cwiseAbs().maxCoeff(), 0.0);
    EXPECT_EQ(max_abs(loaded_init->d - init.d), 0.0);
    std::remove(path.c_str());
}
