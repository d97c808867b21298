// model.hpp — composite system+environment models: Hamiltonian triples,
// product and entangled initial states, exact propagation, seeded random
// model families. hbar = 1 throughout; energies in inverse time.

#pragma once

#include <cstdint>
#include <utility>

#include "oqs/linalg.hpp"
#include "oqs/rng.hpp"

namespace oqs {

struct SystemSpec {
    int d_S = 0;
    int d_E = 0;
    HermitianMatrix H_S;   // d_S x d_S
    HermitianMatrix H_E;   // d_E x d_E
    HermitianMatrix H_SE;  // on the product space; need not factorize

    int total_dim() const { return d_S * d_E; }

    void validate(const ToleranceConfig& tol = default_tol()) const {
        if (d_S < 1 || d_E < 1) throw ShapeError("model/SystemSpec: dimensions must be >= 1");
        if (static_cast<std::size_t>(d_S) * d_E > tol.max_dim)
            throw SizeLimitError("model/SystemSpec: total dimension exceeds cap");
        if (H_S.dim() != d_S || H_E.dim() != d_E || H_SE.dim() != total_dim())
            throw ShapeError("model/SystemSpec: Hamiltonian dimensions inconsistent");
    }
};

enum class StateKind { product, entangled };

// Initial data of the total system. Product kind: system amplitudes c_i and
// environment weight matrix d. Entangled kind: amplitudes a_{i,alpha} of a
// pure state on the product space.
struct InitialState {
    StateKind kind = StateKind::product;
    Vector c;   // product: normalized system amplitudes
    Matrix d;   // product: Hermitian unit-trace environment weights
    Matrix a;   // entangled: d_S x d_E amplitude matrix
    // Environment purity (d.d = d) is demanded only under this flag; mixed
    // weight matrices such as I/N are accepted by default.
    bool strict_env_projector = false;

    static InitialState product_state(Vector c, Matrix d) {
        InitialState s;
        s.kind = StateKind::product;
        s.c = std::move(c);
        s.d = std::move(d);
        return s;
    }

    static InitialState entangled_state(Matrix a) {
        InitialState s;
        s.kind = StateKind::entangled;
        s.a = std::move(a);
        return s;
    }

    void validate(int d_S, int d_E, const ToleranceConfig& tol = default_tol()) const {
        if (kind == StateKind::product) {
            if (c.size() != d_S) throw ShapeError("model/InitialState: amplitude count != d_S");
            if (d.rows() != d_E || d.cols() != d_E)
                throw ShapeError("model/InitialState: weight matrix is not d_E x d_E");
            if (std::abs(c.squaredNorm() - 1.0) > tol.trace)
                throw NormalizationError("model/InitialState: system amplitudes not normalized");
            if (std::abs(d.trace().real() - 1.0) > tol.trace || std::abs(d.trace().imag()) > tol.trace)
                throw NormalizationError("model/InitialState: environment weights not unit trace");
            if (max_abs(d - d.adjoint()) > tol.hermiticity * std::max(max_abs(d), 1.0))
                throw NumericalError("model/InitialState: environment weights not Hermitian");
            if (strict_env_projector && max_abs(d * d - d) > 1e3 * tol.trace)
                throw NormalizationError("model/InitialState: environment weights not idempotent");
        } else {
            if (a.rows() != d_S || a.cols() != d_E)
                throw ShapeError("model/InitialState: amplitude matrix is not d_S x d_E");
            if (std::abs(a.squaredNorm() - 1.0) > tol.trace)
                throw NormalizationError("model/InitialState: entangled amplitudes not normalized");
        }
    }
};

inline HermitianMatrix build_total_hamiltonian(const SystemSpec& spec,
                                               const ToleranceConfig& tol = default_tol()) {
    spec.validate(tol);
    const Matrix eye_S = Matrix::Identity(spec.d_S, spec.d_S);
    const Matrix eye_E = Matrix::Identity(spec.d_E, spec.d_E);
    Matrix h = kron(spec.H_S.mat(), eye_E, tol) + kron(eye_S, spec.H_E.mat(), tol) + spec.H_SE.mat();
    return HermitianMatrix(std::move(h), tol);
}

inline Matrix initial_density(const InitialState& state, int d_S, int d_E,
                              const ToleranceConfig& tol = default_tol()) {
    state.validate(d_S, d_E, tol);
    Matrix rho;
    if (state.kind == StateKind::product) {
        const Matrix rho_S = state.c * state.c.adjoint();
        rho = kron(rho_S, state.d, tol);
    } else {
        Vector psi(d_S * d_E);
        for (int i = 0; i < d_S; ++i)
            for (int a = 0; a < d_E; ++a) psi(i * d_E + a) = state.a(i, a);
        rho = psi * psi.adjoint();
    }
    const RealVector ev = hermitian_eigenvalues(rho);
    if (ev.minCoeff() < tol.psd_floor)
        throw NumericalError("model/initial_density: state not positive semidefinite");
    return rho;
}

inline Matrix propagate(const Matrix& rho0, const HermitianMatrix& h, double t0, double t,
                        const ToleranceConfig& tol = default_tol()) {
    if (rho0.rows() != h.dim() || rho0.cols() != h.dim())
        throw ShapeError("model/propagate: state and Hamiltonian dimensions differ");
    if (std::abs(rho0.trace().real() - 1.0) > 1e3 * tol.trace)
        throw NormalizationError("model/propagate: state not unit trace");
    Matrix rho = Propagator(h).evolve(rho0, t - t0);
    require_finite(rho, "model/propagate");
    return rho;
}

namespace detail {

inline Matrix gue(Rng& rng, int dim) {
    Matrix a(dim, dim);
    for (int i = 0; i < dim; ++i)
        for (int j = 0; j < dim; ++j) a(i, j) = rng.cgaussian();
    return 0.5 * (a + Matrix(a.adjoint()));
}

}  // namespace detail

// Seeded family of composite models. H_S and H_E are GUE-style draws. The
// coupling is scaled to the requested operator norm; the commuting variant
// builds H_SE block diagonal in the H_E eigenbasis so [I (x) H_E, H_SE] = 0.
inline SystemSpec random_model(std::uint64_t seed, int d_S, int d_E, double coupling,
                               bool commuting, const ToleranceConfig& tol = default_tol()) {
    if (coupling < 0.0) throw NormalizationError("model/random_model: coupling must be >= 0");
    Rng rng(seed);
    SystemSpec spec;
    spec.d_S = d_S;
    spec.d_E = d_E;
    spec.H_S = HermitianMatrix(detail::gue(rng, d_S), tol);
    spec.H_E = HermitianMatrix(detail::gue(rng, d_E), tol);

    const int dim = d_S * d_E;
    Matrix h_se = Matrix::Zero(dim, dim);
    if (coupling > 0.0) {
        if (commuting) {
            Eigen::SelfAdjointEigenSolver<Matrix> es(spec.H_E.mat());
            if (es.info() != Eigen::Success)
                throw NumericalError("model/random_model: H_E eigendecomposition failed");
            for (int g = 0; g < d_E; ++g) {
                const Matrix block = detail::gue(rng, d_S);
                const Vector v = es.eigenvectors().col(g);
                h_se += kron(block, Matrix(v * v.adjoint()), tol);
            }
        } else {
            h_se = detail::gue(rng, dim);
        }
        const double nrm = op_norm_estimate(h_se);
        if (nrm > 0.0) h_se *= coupling / nrm;
    }
    spec.H_SE = HermitianMatrix(std::move(h_se), tol);
    spec.validate(tol);
    return spec;
}

// Unitary change of basis that diagonalizes H_E, with phases fixed so the
// output is reproducible. Returns the identity when H_E is already diagonal.
inline Matrix env_eigenbasis(const HermitianMatrix& h_E, const ToleranceConfig& tol = default_tol()) {
    const Eigen::Index d = h_E.dim();
    Matrix offdiag = h_E.mat();
    offdiag.diagonal().setZero();
    if (max_abs(offdiag) <= tol.scaled(static_cast<std::size_t>(d)))
        return Matrix::Identity(d, d);
    Eigen::SelfAdjointEigenSolver<Matrix> es(h_E.mat());
    if (es.info() != Eigen::Success)
        throw NumericalError("model/env_eigenbasis: eigendecomposition failed");
    Matrix v = es.eigenvectors();
    for (Eigen::Index k = 0; k < d; ++k) {
        Eigen::Index imax = 0;
        double best = 0.0;
        for (Eigen::Index i = 0; i < d; ++i) {
            const double m = std::abs(v(i, k));
            if (m > best) {
                best = m;
                imax = i;
            }
        }
        const Complex z = v(imax, k);
        if (std::abs(z) > 0.0) v.col(k) *= std::conj(z) / std::abs(z);
    }
    return v;
}

// Rewrites the model in the basis where H_E is diagonal. Returns the rotated
// spec and the environment rotation V (full-space rotation is I (x) V).
inline std::pair<SystemSpec, Matrix> rotate_to_env_eigenbasis(
    const SystemSpec& spec, const ToleranceConfig& tol = default_tol()) {
    const Matrix v = env_eigenbasis(spec.H_E, tol);
    const Matrix v_full = kron(Matrix::Identity(spec.d_S, spec.d_S), v, tol);
    SystemSpec out = spec;
    out.H_E = HermitianMatrix(v.adjoint() * spec.H_E.mat() * v, tol);
    out.H_SE = HermitianMatrix(v_full.adjoint() * spec.H_SE.mat() * v_full, tol);
    return {out, v};
}

// Convenience states.
inline Matrix maximally_mixed(int dim) { return Matrix::Identity(dim, dim) / static_cast<double>(dim); }

inline Vector uniform_amplitudes(int dim) {
    return Vector::Constant(dim, Complex(1.0 / std::sqrt(static_cast<double>(dim)), 0.0));
}

}  // namespace oqs
