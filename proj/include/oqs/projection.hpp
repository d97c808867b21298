// projection.hpp — P/Q projection split of the total state over environment
// basis indices: projector pairs, the Liouvillian right-hand side, coupling
// term norms between the blocks, and reconstruction of the Q block from its
// variation-of-constants solution over the exactly propagated history.
//
// The block formalism lives in the basis where H_E is diagonal; operations
// taking a raw state assume the caller already rotated, operations taking an
// InitialState rotate internally.
//
// Superoperators act on row-major vectorized states, vec(X)[i*D+j] = X(i,j),
// so vec(A X B) = (A (x) B^T) vec(X).

#pragma once

#include <algorithm>
#include <vector>

#include "oqs/model.hpp"

namespace oqs {

struct ProjectorPair {
    std::vector<int> p_basis;
    std::vector<int> q_basis;
    int d_E = 0;

    // First n environment basis states span P, the rest Q.
    static ProjectorPair first_n(int n, int d_E) {
        if (n < 0 || n > d_E) throw ShapeError("projection/ProjectorPair: need 0 <= n <= d_E");
        ProjectorPair p;
        p.d_E = d_E;
        for (int k = 0; k < n; ++k) p.p_basis.push_back(k);
        for (int k = n; k < d_E; ++k) p.q_basis.push_back(k);
        return p;
    }

    void validate() const {
        std::vector<char> seen(d_E, 0);
        for (int k : p_basis) {
            if (k < 0 || k >= d_E || seen[k]) throw ShapeError("projection/ProjectorPair: bad P index");
            seen[k] = 1;
        }
        for (int k : q_basis) {
            if (k < 0 || k >= d_E || seen[k]) throw ShapeError("projection/ProjectorPair: bad Q index");
            seen[k] = 1;
        }
        if (std::count(seen.begin(), seen.end(), 1) != d_E)
            throw ShapeError("projection/ProjectorPair: P and Q do not cover the basis");
    }

    Matrix env_projector(bool p_side) const {
        Matrix m = Matrix::Zero(d_E, d_E);
        for (int k : (p_side ? p_basis : q_basis)) m(k, k) = 1.0;
        return m;
    }
};

enum class Block { P, Q };

// One-sided action: zeroes every environment-row block outside the selected
// basis set. P rho + Q rho = rho exactly, and the action is idempotent.
inline Matrix apply_projector(const ProjectorPair& pair, Block which, const Matrix& rho) {
    pair.validate();
    require_square(rho, "projection/apply_projector");
    if (rho.rows() % pair.d_E != 0)
        throw ShapeError("projection/apply_projector: state dimension not divisible by d_E");
    const int d_S = static_cast<int>(rho.rows()) / pair.d_E;
    const Matrix p_env = pair.env_projector(which == Block::P);
    return kron(Matrix::Identity(d_S, d_S), p_env) * rho;
}

inline Matrix liouvillian_rhs(const HermitianMatrix& h, const Matrix& rho) {
    if (rho.rows() != h.dim() || rho.cols() != h.dim())
        throw ShapeError("projection/liouvillian_rhs: shape mismatch");
    return -kI * comm(h.mat(), rho);
}

// Norms of the cross terms P L (Q rho) and Q L (P rho) that couple the two
// block equations.
inline std::pair<double, double> coupling_term_norms(const SystemSpec& spec,
                                                     const ProjectorPair& pair, const Matrix& rho_t,
                                                     const ToleranceConfig& tol = default_tol()) {
    spec.validate(tol);
    if (pair.d_E != spec.d_E) throw ShapeError("projection/coupling_term_norms: d_E mismatch");
    const HermitianMatrix h = build_total_hamiltonian(spec, tol);
    const Matrix q_rho = apply_projector(pair, Block::Q, rho_t);
    const Matrix p_rho = apply_projector(pair, Block::P, rho_t);
    const double pq = max_abs(apply_projector(pair, Block::P, liouvillian_rhs(h, q_rho)));
    const double qp = max_abs(apply_projector(pair, Block::Q, liouvillian_rhs(h, p_rho)));
    return {pq, qp};
}

namespace detail {

inline Vector vec_rm(const Matrix& x) {
    const Eigen::Index d = x.rows();
    Vector v(d * x.cols());
    for (Eigen::Index i = 0; i < d; ++i)
        for (Eigen::Index j = 0; j < x.cols(); ++j) v(i * x.cols() + j) = x(i, j);
    return v;
}

inline Matrix unvec_rm(const Vector& v, Eigen::Index d) {
    Matrix x(d, d);
    for (Eigen::Index i = 0; i < d; ++i)
        for (Eigen::Index j = 0; j < d; ++j) x(i, j) = v(i * d + j);
    return x;
}

// Exponential of an anti-Hermitian superoperator K via the Hermitian
// spectrum of iK.
struct AntiHermitianExp {
    Matrix w;
    RealVector lam;  // K = w diag(-i lam) w^dagger

    explicit AntiHermitianExp(const Matrix& k) {
        Matrix g = kI * k;
        g = 0.5 * (g + Matrix(g.adjoint()));
        Eigen::SelfAdjointEigenSolver<Matrix> es(g);
        if (es.info() != Eigen::Success)
            throw NumericalError("projection/AntiHermitianExp: eigensolver failed");
        w = es.eigenvectors();
        lam = es.eigenvalues();
    }

    Vector apply(const Vector& phi, double s) const {
        Vector scaled(phi.size());
        for (Eigen::Index k = 0; k < phi.size(); ++k) scaled(k) = std::exp(-kI * lam(k) * s) * phi(k);
        return w * scaled;
    }

    Vector to_eigenbasis(const Vector& v) const { return w.adjoint() * v; }
};

}  // namespace detail

// Matrix representation of rho -> -i [H, rho] on the D^2 operator space.
inline Matrix liouvillian_superop(const HermitianMatrix& h,
                                  const ToleranceConfig& tol = default_tol()) {
    const Eigen::Index d = h.dim();
    const Matrix eye = Matrix::Identity(d, d);
    return -kI * (kron(h.mat(), eye, tol) - kron(eye, h.mat().transpose(), tol));
}

// Matrix representation of the one-sided block projector.
inline Matrix projector_superop(const ProjectorPair& pair, int d_S, Block which,
                                const ToleranceConfig& tol = default_tol()) {
    const Matrix p_full = kron(Matrix::Identity(d_S, d_S), pair.env_projector(which == Block::P), tol);
    const Eigen::Index d = p_full.rows();
    return kron(p_full, Matrix::Identity(d, d), tol);
}

namespace detail {

struct ProjectedSetup {
    SystemSpec spec;      // rotated so H_E is diagonal
    Matrix rho0;          // rotated initial state
    HermitianMatrix h;    // total Hamiltonian of the rotated spec
    Matrix mp, mq, ml;    // superoperator representations
};

inline ProjectedSetup projected_setup(const SystemSpec& spec, const ProjectorPair& pair,
                                      const InitialState& initial, const ToleranceConfig& tol) {
    spec.validate(tol);
    pair.validate();
    if (pair.d_E != spec.d_E) throw ShapeError("projection: projector d_E != spec d_E");
    if (static_cast<std::size_t>(spec.total_dim()) > tol.max_dim_superop)
        throw SizeLimitError("projection: total dimension exceeds superoperator cap");
    ProjectedSetup s;
    auto [rotated, v] = rotate_to_env_eigenbasis(spec, tol);
    s.spec = rotated;
    const Matrix rho0 = initial_density(initial, spec.d_S, spec.d_E, tol);
    const Matrix v_full = kron(Matrix::Identity(spec.d_S, spec.d_S), v, tol);
    s.rho0 = v_full.adjoint() * rho0 * v_full;
    s.h = build_total_hamiltonian(rotated, tol);
    s.mp = projector_superop(pair, spec.d_S, Block::P, tol);
    s.mq = projector_superop(pair, spec.d_S, Block::Q, tol);
    s.ml = liouvillian_superop(s.h, tol);
    return s;
}

}  // namespace detail

// Reconstructs Q rho(t) = e^{QLQ t} Q rho(0) + int_0^t ds e^{QLQ (t-s)} QLP rho(s)
// by composite trapezoid over the exactly propagated history. Returns the
// deviation from the exact Q block at every interior grid time. Converges at
// order h^2 under refinement.
inline std::vector<double> memory_reconstruction_profile(const SystemSpec& spec,
                                                         const ProjectorPair& pair,
                                                         const InitialState& initial, double T,
                                                         int steps,
                                                         const ToleranceConfig& tol = default_tol()) {
    if (steps < 4) throw QuadratureError("projection/memory_reconstruction_error: need >= 4 steps");
    const auto s = detail::projected_setup(spec, pair, initial, tol);
    if (pair.q_basis.empty()) return std::vector<double>(steps, 0.0);

    const Propagator prop(s.h);
    const double h_step = T / steps;
    const Eigen::Index dim2 = s.ml.rows();

    const Matrix qlq = s.mq * s.ml * s.mq;
    const detail::AntiHermitianExp eqlq(qlq);
    const Matrix qlp = s.mq * s.ml * s.mp;

    std::vector<Vector> history(steps + 1);
    std::vector<Vector> source(steps + 1, Vector(dim2));
    for (int k = 0; k <= steps; ++k) {
        const Matrix rho_k = prop.evolve(s.rho0, k * h_step);
        history[k] = detail::vec_rm(rho_k);
        source[k] = eqlq.to_eigenbasis(qlp * history[k]);
    }
    const Vector q0 = eqlq.to_eigenbasis(s.mq * history[0]);

    std::vector<double> errors(steps, 0.0);
    for (int k = 1; k <= steps; ++k) {
        const double t_k = k * h_step;
        Vector acc = Vector::Zero(dim2);
        for (int m = 0; m <= k; ++m) {
            const double wgt = (m == 0 || m == k) ? 0.5 : 1.0;
            for (Eigen::Index r = 0; r < dim2; ++r)
                acc(r) += wgt * std::exp(-kI * eqlq.lam(r) * (t_k - m * h_step)) * source[m](r);
        }
        Vector recon_eig(dim2);
        for (Eigen::Index r = 0; r < dim2; ++r)
            recon_eig(r) = std::exp(-kI * eqlq.lam(r) * t_k) * q0(r) + h_step * acc(r);
        const Vector recon = eqlq.w * recon_eig;
        const Vector exact = s.mq * history[k];
        errors[k - 1] = (recon - exact).cwiseAbs().maxCoeff();
    }
    return errors;
}

// Largest reconstruction deviation over the grid.
inline double memory_reconstruction_error(const SystemSpec& spec, const ProjectorPair& pair,
                                          const InitialState& initial, double T, int steps,
                                          const ToleranceConfig& tol = default_tol()) {
    const std::vector<double> profile = memory_reconstruction_profile(spec, pair, initial, T, steps, tol);
    double worst = 0.0;
    for (double e : profile) worst = std::max(worst, e);
    return worst;
}

// Deviation of the standalone P-block evolution e^{PLP t} P rho(0) from the
// projected exact evolution, maximized over the grid. Vanishes when the
// blocks decouple.
inline double p_block_closure_error(const SystemSpec& spec, const ProjectorPair& pair,
                                    const InitialState& initial, double T, int steps,
                                    const ToleranceConfig& tol = default_tol()) {
    if (steps < 1) throw QuadratureError("projection/p_block_closure_error: need >= 1 step");
    const auto s = detail::projected_setup(spec, pair, initial, tol);
    const Propagator prop(s.h);
    const Matrix plp = s.mp * s.ml * s.mp;
    const detail::AntiHermitianExp eplp(plp);
    const Vector p0 = eplp.to_eigenbasis(s.mp * detail::vec_rm(s.rho0));
    const double h_step = T / steps;

    double worst = 0.0;
    for (int k = 1; k <= steps; ++k) {
        const Vector standalone = eplp.apply(p0, k * h_step);
        const Vector exact = s.mp * detail::vec_rm(prop.evolve(s.rho0, k * h_step));
        worst = std::max(worst, (standalone - exact).cwiseAbs().maxCoeff());
    }
    return worst;
}

}  // namespace oqs
