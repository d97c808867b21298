// support.hpp — shared helpers for the test suites.

#pragma once

#include <gtest/gtest.h>

#include "oqs/model.hpp"

namespace oqs::test {

inline Matrix random_hermitian(Rng& rng, int dim) { return detail::gue(rng, dim); }

// Random density matrix: normalized Wishart-style draw, full rank.
inline Matrix random_density(Rng& rng, int dim) {
    Matrix a(dim, dim);
    for (int i = 0; i < dim; ++i)
        for (int j = 0; j < dim; ++j) a(i, j) = rng.cgaussian();
    Matrix rho = a * a.adjoint();
    rho /= rho.trace().real();
    return 0.5 * (rho + Matrix(rho.adjoint()));
}

inline Vector random_state_vector(Rng& rng, int dim) {
    Vector v(dim);
    for (int i = 0; i < dim; ++i) v(i) = rng.cgaussian();
    v.normalize();
    return v;
}

inline Matrix random_unitary(Rng& rng, int dim, double scale = 1.0) {
    return Propagator(HermitianMatrix(random_hermitian(rng, dim))).unitary(scale);
}

// General matrix exponential by scaling and squaring with a Taylor core;
// test-side only (the library exponentiates Hermitian generators).
inline Matrix expm_general(const Matrix& a) {
    const double nrm = max_abs(a) * a.rows();
    int squarings = 0;
    double scale = 1.0;
    while (nrm * scale > 0.25) {
        scale *= 0.5;
        ++squarings;
    }
    const Matrix x = a * scale;
    Matrix term = Matrix::Identity(a.rows(), a.cols());
    Matrix sum = term;
    for (int k = 1; k <= 24; ++k) {
        term = term * x / static_cast<double>(k);
        sum += term;
        if (max_abs(term) < 1e-18) break;
    }
    for (int s = 0; s < squarings; ++s) sum = sum * sum;
    return sum;
}

inline Matrix pauli_x() {
    Matrix m(2, 2);
    m << 0, 1, 1, 0;
    return m;
}

inline Matrix pauli_y() {
    Matrix m(2, 2);
    m << Complex(0, 0), Complex(0, -1), Complex(0, 1), Complex(0, 0);
    return m;
}

inline Matrix pauli_z() {
    Matrix m(2, 2);
    m << 1, 0, 0, -1;
    return m;
}

#define EXPECT_MATRIX_NEAR(a, b, tol) EXPECT_LE(oqs::max_abs((a) - (b)), (tol))

}  // namespace oqs::test
