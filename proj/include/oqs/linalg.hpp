// linalg.hpp — dense complex linear algebra: Kronecker products, partial
// traces, Hermitian matrix exponentials, norms. Everything downstream builds
// on these kernels.
//
// Composite indices flatten system-major: basis state |i>_S |a>_E sits at
// row i*d_E + a.

#pragma once

#include <Eigen/Dense>
#include <complex>
#include <string>

#include "oqs/errors.hpp"
#include "oqs/tolerances.hpp"

namespace oqs {

using Complex = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;
using RealVector = Eigen::VectorXd;

inline constexpr Complex kI{0.0, 1.0};

inline double max_abs(const Matrix& a) {
    if (a.size() == 0) return 0.0;
    return a.cwiseAbs().maxCoeff();
}

inline double fro_norm(const Matrix& a) { return a.norm(); }

inline bool all_finite(const Matrix& a) { return a.allFinite(); }

inline void require_finite(const Matrix& a, const char* where) {
    if (!all_finite(a)) throw NumericalError(std::string(where) + ": non-finite entries");
}

inline void require_square(const Matrix& a, const char* where) {
    if (a.rows() != a.cols())
        throw ShapeError(std::string(where) + ": matrix is " + std::to_string(a.rows()) + "x" +
                         std::to_string(a.cols()) + ", expected square");
}

// Largest singular value, computed from the spectrum of A^dagger A.
inline double op_norm_estimate(const Matrix& a) {
    if (a.size() == 0) return 0.0;
    Eigen::SelfAdjointEigenSolver<Matrix> es(a.adjoint() * a, Eigen::EigenvaluesOnly);
    if (es.info() != Eigen::Success)
        throw NumericalError("linalg/op_norm_estimate: eigensolver failed");
    const double top = es.eigenvalues().maxCoeff();
    return top > 0.0 ? std::sqrt(top) : 0.0;
}

inline Matrix dagger(const Matrix& a) { return a.adjoint(); }

inline Matrix comm(const Matrix& a, const Matrix& b) { return a * b - b * a; }

inline Matrix kron(const Matrix& a, const Matrix& b, const ToleranceConfig& tol = default_tol()) {
    const std::size_t rows = static_cast<std::size_t>(a.rows()) * static_cast<std::size_t>(b.rows());
    const std::size_t cols = static_cast<std::size_t>(a.cols()) * static_cast<std::size_t>(b.cols());
    if (rows > tol.max_dim || cols > tol.max_dim)
        throw SizeLimitError("linalg/kron: result dimension " + std::to_string(rows) + "x" +
                             std::to_string(cols) + " exceeds cap " + std::to_string(tol.max_dim));
    Matrix out(rows, cols);
    for (Eigen::Index i = 0; i < a.rows(); ++i)
        for (Eigen::Index j = 0; j < a.cols(); ++j)
            out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    return out;
}

enum class Subsystem { system, environment };

// Trace out one factor of a (d_S*d_E)-dimensional bipartite operator.
inline Matrix partial_trace(const Matrix& rho, int d_S, int d_E, Subsystem keep) {
    require_square(rho, "linalg/partial_trace");
    if (rho.rows() != static_cast<Eigen::Index>(d_S) * d_E)
        throw ShapeError("linalg/partial_trace: dimension " + std::to_string(rho.rows()) +
                         " != d_S*d_E = " + std::to_string(d_S * d_E));
    if (keep == Subsystem::system) {
        Matrix out = Matrix::Zero(d_S, d_S);
        for (int i = 0; i < d_S; ++i)
            for (int j = 0; j < d_S; ++j)
                for (int a = 0; a < d_E; ++a) out(i, j) += rho(i * d_E + a, j * d_E + a);
        return out;
    }
    Matrix out = Matrix::Zero(d_E, d_E);
    for (int a = 0; a < d_E; ++a)
        for (int b = 0; b < d_E; ++b)
            for (int i = 0; i < d_S; ++i) out(a, b) += rho(i * d_E + a, i * d_E + b);
    return out;
}

// Hermitian matrix with the defect bound checked at construction; the stored
// matrix is symmetrized so the invariant holds exactly afterwards.
class HermitianMatrix {
  public:
    HermitianMatrix() = default;

    explicit HermitianMatrix(Matrix m, const ToleranceConfig& tol = default_tol()) {
        require_square(m, "linalg/HermitianMatrix");
        require_finite(m, "linalg/HermitianMatrix");
        const double scale = max_abs(m);
        const double defect = max_abs(m - m.adjoint());
        if (defect > tol.hermiticity * std::max(scale, 1.0))
            throw NumericalError("linalg/HermitianMatrix: Hermiticity defect " +
                                 std::to_string(defect) + " exceeds tolerance");
        m_ = 0.5 * (m + m.adjoint());
    }

    const Matrix& mat() const { return m_; }
    Eigen::Index dim() const { return m_.rows(); }

  private:
    Matrix m_;
};

// Eigendecomposition of a Hermitian generator, cached so many evolution times
// reuse one solve. U(dt) = V exp(-i Lambda dt) V^dagger is unitary to
// round-off by construction.
class Propagator {
  public:
    explicit Propagator(const HermitianMatrix& h) : dim_(h.dim()) {
        Eigen::SelfAdjointEigenSolver<Matrix> es(h.mat());
        if (es.info() != Eigen::Success)
            throw NumericalError("linalg/Propagator: eigendecomposition failed");
        evals_ = es.eigenvalues();
        evecs_ = es.eigenvectors();
    }

    Matrix unitary(double dt) const {
        if (dt == 0.0) return Matrix::Identity(dim_, dim_);
        Vector phases(dim_);
        for (Eigen::Index k = 0; k < dim_; ++k) phases(k) = std::exp(-kI * evals_(k) * dt);
        Matrix u = evecs_ * phases.asDiagonal() * evecs_.adjoint();
        require_finite(u, "linalg/Propagator::unitary");
        return u;
    }

    Matrix evolve(const Matrix& rho, double dt) const {
        if (rho.rows() != dim_ || rho.cols() != dim_)
            throw ShapeError("linalg/Propagator::evolve: state dimension mismatch");
        if (dt == 0.0) return rho;
        const Matrix u = unitary(dt);
        return u * rho * u.adjoint();
    }

    const RealVector& eigenvalues() const { return evals_; }
    const Matrix& eigenvectors() const { return evecs_; }
    Eigen::Index dim() const { return dim_; }

  private:
    Eigen::Index dim_ = 0;
    RealVector evals_;
    Matrix evecs_;
};

inline Matrix expm_hermitian(const HermitianMatrix& h, double dt) {
    return Propagator(h).unitary(dt);
}

inline Vector basis_vector(int dim, int k) {
    Vector v = Vector::Zero(dim);
    v(k) = 1.0;
    return v;
}

inline Matrix basis_projector(int dim, int k) {
    Matrix p = Matrix::Zero(dim, dim);
    p(k, k) = 1.0;
    return p;
}

// Sorted eigenvalues of a Hermitian operator (ascending).
inline RealVector hermitian_eigenvalues(const Matrix& a) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (a + a.adjoint()), Eigen::EigenvaluesOnly);
    if (es.info() != Eigen::Success)
        throw NumericalError("linalg/hermitian_eigenvalues: eigensolver failed");
    return es.eigenvalues();
}

}  // namespace oqs
