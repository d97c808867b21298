// map.hpp — the reduced dynamical map as a supermatrix.
//
// Index convention, fixed here and locked by the partial-trace cross-check in
// the tests: C is stored as a d_S^2 x d_S^2 matrix with row (i1*d_S + i2) and
// column (j1*d_S + j2), and
//
//   C[(i1,i2),(j1,j2)] = sum_{a1,a2,g} d(a1,a2) <j1 g|U|i1 a1> conj(<j2 g|U|i2 a2>)
//
// so that rho_S(t)[j1,j2] = sum_{i1,i2} rho_S(t0)[i1,i2] C[(i1,i2),(j1,j2)].
// Two-segment composition is then the plain matrix product
// C(ts,t0) * C(t,ts) in storage order.

#pragma once

#include "oqs/model.hpp"

namespace oqs {

struct SuperMatrix {
    int d_S = 0;
    double t0 = 0.0;
    double t = 0.0;
    Matrix C;  // d_S^2 x d_S^2

    static SuperMatrix identity(int d_S, double t0) {
        SuperMatrix s;
        s.d_S = d_S;
        s.t0 = t0;
        s.t = t0;
        s.C = Matrix::Identity(d_S * d_S, d_S * d_S);
        return s;
    }
};

namespace detail {

inline void check_weights(const Matrix& d, int d_E, const char* where,
                          const ToleranceConfig& tol) {
    if (d.rows() != d_E || d.cols() != d_E)
        throw ShapeError(std::string(where) + ": weight matrix is not d_E x d_E");
    if (max_abs(d - d.adjoint()) > tol.hermiticity * std::max(max_abs(d), 1.0))
        throw NumericalError(std::string(where) + ": weights not Hermitian");
    if (std::abs(d.trace().real() - 1.0) > 1e3 * tol.trace)
        throw NormalizationError(std::string(where) + ": weights not unit trace");
}

}  // namespace detail

// Supermatrix of the reduced map over [t0, t] for environment weights d,
// built from matrix elements of the total evolution operator.
inline SuperMatrix compute_supermatrix(const SystemSpec& spec, const Matrix& weights, double t0,
                                       double t, const ToleranceConfig& tol = default_tol()) {
    spec.validate(tol);
    detail::check_weights(weights, spec.d_E, "map/compute_supermatrix", tol);
    const int d_S = spec.d_S;
    const int d_E = spec.d_E;
    const Matrix u = Propagator(build_total_hamiltonian(spec, tol)).unitary(t - t0);

    SuperMatrix s;
    s.d_S = d_S;
    s.t0 = t0;
    s.t = t;
    s.C = Matrix::Zero(d_S * d_S, d_S * d_S);
    // W[(j,i),(g,a)] = <j g|U|i a>; then C = (W (I (x) d) W^dagger) with rows
    // and columns relabeled to the (i1,i2)/(j1,j2) convention above.
    Matrix w(d_S * d_S, d_E * d_E);
    for (int j = 0; j < d_S; ++j)
        for (int i = 0; i < d_S; ++i)
            for (int g = 0; g < d_E; ++g)
                for (int a = 0; a < d_E; ++a)
                    w(j * d_S + i, g * d_E + a) = u(j * d_E + g, i * d_E + a);
    const Matrix weighted = w * kron(Matrix::Identity(d_E, d_E), weights, tol);
    const Matrix z = weighted * w.adjoint();  // rows (j1,i1), cols (j2,i2)
    for (int i1 = 0; i1 < d_S; ++i1)
        for (int i2 = 0; i2 < d_S; ++i2)
            for (int j1 = 0; j1 < d_S; ++j1)
                for (int j2 = 0; j2 < d_S; ++j2)
                    s.C(i1 * d_S + i2, j1 * d_S + j2) = z(j1 * d_S + i1, j2 * d_S + i2);
    require_finite(s.C, "map/compute_supermatrix");
    return s;
}

inline Matrix apply_map(const SuperMatrix& s, const Matrix& rho_S,
                        const ToleranceConfig& tol = default_tol()) {
    (void)tol;
    if (rho_S.rows() != s.d_S || rho_S.cols() != s.d_S)
        throw ShapeError("map/apply_map: state dimension != d_S");
    const int d_S = s.d_S;
    Matrix out = Matrix::Zero(d_S, d_S);
    for (int j1 = 0; j1 < d_S; ++j1)
        for (int j2 = 0; j2 < d_S; ++j2) {
            Complex acc = 0.0;
            for (int i1 = 0; i1 < d_S; ++i1)
                for (int i2 = 0; i2 < d_S; ++i2)
                    acc += rho_S(i1, i2) * s.C(i1 * d_S + i2, j1 * d_S + j2);
            out(j1, j2) = acc;
        }
    return out;
}

// Composition of the maps over [t0,ts] then [ts,t]; in storage order this is
// the product first.C * second.C.
inline SuperMatrix compose(const SuperMatrix& first, const SuperMatrix& second) {
    if (first.d_S != second.d_S) throw ShapeError("map/compose: dimension mismatch");
    SuperMatrix out;
    out.d_S = first.d_S;
    out.t0 = first.t0;
    out.t = second.t;
    out.C = first.C * second.C;
    return out;
}

// Independent route: build the full initial state, propagate exactly, trace
// out the environment. Serves as the oracle for the supermatrix path.
inline Matrix reduced_density_direct(const SystemSpec& spec, const InitialState& initial, double t0,
                                     double t, const ToleranceConfig& tol = default_tol()) {
    spec.validate(tol);
    const Matrix rho0 = initial_density(initial, spec.d_S, spec.d_E, tol);
    const Matrix rho_t = propagate(rho0, build_total_hamiltonian(spec, tol), t0, t, tol);
    return partial_trace(rho_t, spec.d_S, spec.d_E, Subsystem::system);
}

}  // namespace oqs
