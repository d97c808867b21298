#include <gtest/gtest.h>

#include "oqs/diagnostics.hpp"
#include "support.hpp"

using namespace oqs;

TEST(EnvCorrelation, EqualTimesRealNonnegative) {
    const SystemSpec spec = random_model(1, 2, 3, 1.0, false);
    const Matrix rho0 = maximally_mixed(6);
    const Complex c = env_correlation(spec, rho0, 0.7, 0.7);
    EXPECT_NEAR(c.imag(), 0.0, 1e-12);
    EXPECT_GE(c.real(), -1e-12);
}

TEST(EnvCorrelation, ConstantForCommutingFreePart) {
    // [H_0, H_SE] = 0 freezes the interaction picture.
    SystemSpec spec;
    spec.d_S = 2;
    spec.d_E = 2;
    spec.H_S = HermitianMatrix(test::pauli_z());
    spec.H_E = HermitianMatrix(test::pauli_z());
    spec.H_SE = HermitianMatrix(0.7 * kron(test::pauli_z(), test::pauli_z()));
    const Matrix rho0 = maximally_mixed(4);
    const Complex base = env_correlation(spec, rho0, 0.0, 0.0);
    for (double t : {0.5, 1.9})
        EXPECT_LT(std::abs(env_correlation(spec, rho0, t, 0.3) - base), 1e-10);
}

TEST(EnvCorrelation, StationaryUnderTimeShift) {
    const SystemSpec spec = random_model(2, 2, 3, 1.0, false);
    const Matrix rho0 = maximally_mixed(6);  // commutes with H_0
    const Complex a = env_correlation(spec, rho0, 0.9, 0.2);
    const Complex b = env_correlation(spec, rho0, 0.9 + 0.6, 0.2 + 0.6);
    EXPECT_LT(std::abs(a - b), 1e-10);
}

TEST(TauEstimate, SyntheticExponential) {
    std::vector<double> taus;
    std::vector<Complex> samples;
    for (int k = 0; k <= 400; ++k) {
        const double tau = 8.0 * k / 400.0;
        taus.push_back(tau);
        samples.emplace_back(std::exp(-tau / 2.0), 0.0);
    }
    const TauEstimate est = estimate_tau_E(taus, samples);
    EXPECT_TRUE(est.decayed);
    EXPECT_NEAR(est.tau, 2.0, 8.0 / 400.0);
}

TEST(TauEstimate, ConstantNeverDecays) {
    std::vector<double> taus{0.0, 1.0, 2.0};
    std::vector<Complex> samples{Complex(1, 0), Complex(1, 0), Complex(1, 0)};
    const TauEstimate est = estimate_tau_E(taus, samples);
    EXPECT_FALSE(est.decayed);
    EXPECT_EQ(est.tau, 2.0);
}

TEST(TauEstimate, EmptyGrid) {
    EXPECT_THROW(estimate_tau_E({}, {}), EmptyGridError);
    EXPECT_THROW(estimate_tau_E({0.0}, {Complex(0.0, 0.0)}), EmptyGridError);
}

TEST(TauEstimate, ShrinksWithEnvironmentBandwidth) {
    // Wider environment spectrum -> faster correlation decay. Monotone trend
    // over spectral-width scalings of one drawn model.
    const int d_S = 2, d_E = 16;
    const SystemSpec base = random_model(5, d_S, d_E, 0.2, false);
    std::vector<double> tau_es;
    for (double width : {1.0, 2.0, 4.0}) {
        SystemSpec spec = base;
        spec.H_E = HermitianMatrix(width * base.H_E.mat());
        const Matrix rho0 = maximally_mixed(spec.total_dim());
        std::vector<double> taus;
        std::vector<Complex> samples;
        for (int k = 0; k <= 240; ++k) {
            const double tau = 3.0 * k / 240.0;
            taus.push_back(tau);
            samples.push_back(env_correlation(spec, rho0, tau, 0.0));
        }
        const TauEstimate est = estimate_tau_E(taus, samples);
        EXPECT_TRUE(est.decayed) << "width " << width;
        tau_es.push_back(est.tau);
    }
    EXPECT_GT(tau_es[0], tau_es[1]);
    EXPECT_GT(tau_es[1], tau_es[2]);
}

TEST(FactorizationDefect, ZeroAtStartForProduct) {
    const SystemSpec spec = random_model(3, 2, 2, 1.0, false);
    const InitialState init =
        InitialState::product_state(uniform_amplitudes(2), basis_projector(2, 0));
    EXPECT_LT(factorization_defect(spec, init, 0.0), 1e-14);
}

TEST(FactorizationDefect, ZeroWithoutCoupling) {
    const SystemSpec spec = random_model(4, 2, 2, 0.0, false);
    const InitialState init =
        InitialState::product_state(uniform_amplitudes(2), basis_projector(2, 0));
    for (double t : {0.5, 1.0, 2.5, 4.0})
        EXPECT_LT(factorization_defect(spec, init, t), 1e-12) << "t=" << t;
}

TEST(FactorizationDefect, QuadraticCouplingScaling) {
    // Frozen coupling-sweep configuration (see the acceptance suite): the
    // half/quarter coupling ratios track lambda^2 within +-30%.
    SystemSpec base = random_model(0, 2, 2, 1.0, false);
    base.H_SE = HermitianMatrix(2.0 * base.H_SE.mat());
    const InitialState init =
        InitialState::product_state(basis_vector(2, 0), basis_projector(2, 0));
    const auto defect_at = [&](double lambda) {
        SystemSpec spec = base;
        spec.H_SE = HermitianMatrix(lambda * base.H_SE.mat());
        return factorization_defect(spec, init, 1.5);
    };
    const double full = defect_at(1.0);
    ASSERT_GT(full, 0.0);
    EXPECT_NEAR(defect_at(0.5) / full, 0.25, 0.25 * 0.3);
    EXPECT_NEAR(defect_at(0.25) / full, 0.0625, 0.0625 * 0.3);
}

TEST(Entropy, PureStateZero) {
    EXPECT_NEAR(von_neumann_entropy(basis_projector(3, 1)), 0.0, 1e-12);
}

TEST(Entropy, MaximallyMixed) {
    for (int d : {2, 3, 5})
        EXPECT_NEAR(von_neumann_entropy(maximally_mixed(d)), std::log(static_cast<double>(d)),
                    1e-12);
}

TEST(Entropy, BellReducedQubit) {
    Vector bell = Vector::Zero(4);
    bell(0) = M_SQRT1_2;
    bell(3) = M_SQRT1_2;
    const Matrix reduced = partial_trace(bell * bell.adjoint(), 2, 2, Subsystem::system);
    EXPECT_NEAR(von_neumann_entropy(reduced), std::log(2.0), 1e-12);
}

TEST(Entropy, RejectsNonStates) {
    EXPECT_THROW(von_neumann_entropy(2.0 * maximally_mixed(2)), NotAStateError);
}

TEST(Entropy, BoundsProperty) {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        Rng rng(seed);
        const int d = 2 + static_cast<int>(seed % 3);
        const Matrix rho = test::random_density(rng, d);
        const double s = von_neumann_entropy(rho);
        EXPECT_GE(s, 0.0);
        EXPECT_LE(s, std::log(static_cast<double>(d)) + 1e-12);
        // Zero entropy only for pure states.
        if (s < 1e-10) {
            EXPECT_GE(hermitian_eigenvalues(rho).maxCoeff(), 1.0 - 1e-10);
        }
    }
}

TEST(TauEstimate, MismatchedGridRejected) {
    EXPECT_THROW(estimate_tau_E({0.0, 1.0}, {Complex(1.0, 0.0)}), EmptyGridError);
}

TEST(Sie, TrivialEnvironmentGivesZeroRate) {
    const SystemSpec spec = random_model(6, 3, 1, 1.0, false);
    const InitialState init =
        InitialState::product_state(basis_vector(3, 0), basis_projector(1, 0));
    const SieReport rep = sie_rate_check(spec, init, 2.0);
    EXPECT_LT(std::abs(rep.gamma0), 1e-8);
    EXPECT_NEAR(rep.bound, 0.0, 1e-12);  // log min(d_S, d_E) = log 1
    EXPECT_TRUE(rep.satisfied);
}

TEST(Sie, ZeroCouplingZeroRate) {
    const SystemSpec spec = random_model(7, 2, 2, 0.0, false);
    const InitialState init =
        InitialState::product_state(basis_vector(2, 0), basis_projector(2, 0));
    const SieReport rep = sie_rate_check(spec, init, 2.0);
    EXPECT_LT(std::abs(rep.gamma0), 1e-10);
    EXPECT_TRUE(rep.satisfied);
}

TEST(Sie, RandomTwoQubitCouplingsSatisfyBound) {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const SystemSpec spec = random_model(seed, 2, 2, 1.0, false);
        const InitialState init =
            InitialState::product_state(basis_vector(2, 0), basis_projector(2, 0));
        const SieReport rep = sie_rate_check(spec, init, 2.0);
        EXPECT_TRUE(rep.satisfied) << "seed " << seed;
        EXPECT_NEAR(rep.bound, 2.0 * std::log(2.0), 1e-9);
    }
}

TEST(Sie, RejectsEntangledInitial) {
    const SystemSpec spec = random_model(8, 2, 2, 1.0, false);
    Matrix a = Matrix::Zero(2, 2);
    a(0, 0) = M_SQRT1_2;
    a(1, 1) = M_SQRT1_2;
    InitialState init = InitialState::entangled_state(a);
    EXPECT_THROW(sie_rate_check(spec, init, 2.0), NotProductError);
}

TEST(Sie, RejectsMixedEnvironment) {
    const SystemSpec spec = random_model(9, 2, 2, 1.0, false);
    const InitialState init =
        InitialState::product_state(basis_vector(2, 0), maximally_mixed(2));
    EXPECT_THROW(sie_rate_check(spec, init, 2.0), NotProductError);
}

TEST(Timescales, ReportFieldsConsistent) {
    const SystemSpec spec = random_model(10, 2, 8, 0.5, false);
    const Matrix rho0 = maximally_mixed(16);
    std::vector<double> taus;
    for (int k = 0; k <= 200; ++k) taus.push_back(4.0 * k / 200.0);
    const TimescaleReport rep = timescale_report(spec, rho0, taus);
    EXPECT_NEAR(rep.coupling_norm, 0.5, 1e-10);
    EXPECT_GT(rep.tau_E, 0.0);
    EXPECT_NEAR(rep.markov_ratio, rep.tau_E * rep.tau_E * 0.25, 1e-10);
    EXPECT_NEAR(rep.tau_S * rep.markov_ratio, rep.tau_E, 1e-9);
}
