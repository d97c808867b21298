// spin_boson.hpp — spin multiplets coupled to one truncated bosonic mode
// through J^2: exact Fock-space evolution, the analytic boson factor of the
// pure-dephasing solution, Zassenhaus expansion terms, and the commensurate-
// period semigroup check.
//
// Model: H_S = omega J_z, H_E = beta b'b, H_SE = eta (b' + b) (x) J^2, with
// J^2 = j(j+1) on each multiplet. Every (j,m) sector evolves as a displaced
// oscillator, so the reduced dynamics is pure dephasing: populations frozen,
// coherences scaled by a boson overlap factor.

#pragma once

#include <cmath>
#include <numeric>
#include <optional>
#include <vector>

#include "oqs/divisibility.hpp"
#include "oqs/map.hpp"

namespace oqs {

struct SpinBosonParams {
    double omega = 1.0;              // system rotation frequency
    double beta = 1.0;               // boson quantum of energy
    double eta = 0.1;                // coupling strength
    std::vector<double> multiplets;  // j values (half-integers), in basis order
    int n_max = 16;                  // Fock cutoff; environment dim = n_max + 1

    int system_dim() const {
        int d = 0;
        for (double j : multiplets) d += static_cast<int>(std::lround(2.0 * j)) + 1;
        return d;
    }

    void validate(const ToleranceConfig& tol = default_tol()) const {
        if (omega < 0.0 || beta < 0.0)
            throw NormalizationError("spin_boson/params: omega and beta must be >= 0");
        if (n_max < 1) throw NormalizationError("spin_boson/params: n_max must be >= 1");
        if (multiplets.empty()) throw NormalizationError("spin_boson/params: multiplet list empty");
        for (double j : multiplets) {
            const double tj = 2.0 * j;
            if (j < 0.0 || std::abs(tj - std::lround(tj)) > 1e-9)
                throw NormalizationError("spin_boson/params: j must be a nonnegative half-integer");
        }
        const std::size_t total =
            static_cast<std::size_t>(system_dim()) * static_cast<std::size_t>(n_max + 1);
        if (total > tol.max_dim)
            throw SizeLimitError("spin_boson/params: total dimension exceeds cap");
    }
};

inline double gamma_of_j(const SpinBosonParams& p, double j) { return p.eta * j * (j + 1.0); }

// Basis bookkeeping: states ordered multiplet by multiplet, m descending from
// +j to -j inside each.
struct SpinLevel {
    double j;
    double m;
};

inline std::vector<SpinLevel> system_basis(const SpinBosonParams& p) {
    std::vector<SpinLevel> basis;
    for (double j : p.multiplets) {
        const int dim = static_cast<int>(std::lround(2.0 * j)) + 1;
        for (int k = 0; k < dim; ++k) basis.push_back({j, j - k});
    }
    return basis;
}

inline int state_index(const SpinBosonParams& p, double j, double m) {
    int offset = 0;
    for (double jj : p.multiplets) {
        const int dim = static_cast<int>(std::lround(2.0 * jj)) + 1;
        if (std::abs(jj - j) < 1e-9) {
            const double k = j - m;
            const int ki = static_cast<int>(std::lround(k));
            if (ki < 0 || ki >= dim || std::abs(k - ki) > 1e-9)
                throw ShapeError("spin_boson/state_index: m not in multiplet j");
            return offset + ki;
        }
        offset += dim;
    }
    throw ShapeError("spin_boson/state_index: multiplet j not in model");
}

inline Matrix boson_raising(int n_max) {
    Matrix b = Matrix::Zero(n_max + 1, n_max + 1);
    for (int n = 0; n < n_max; ++n) b(n + 1, n) = std::sqrt(static_cast<double>(n + 1));
    return b;
}

inline SystemSpec build_spinboson(const SpinBosonParams& p,
                                  const ToleranceConfig& tol = default_tol()) {
    p.validate(tol);
    const auto basis = system_basis(p);
    const int d_S = static_cast<int>(basis.size());
    const int d_E = p.n_max + 1;

    Matrix jz = Matrix::Zero(d_S, d_S);
    Matrix j2 = Matrix::Zero(d_S, d_S);
    for (int k = 0; k < d_S; ++k) {
        jz(k, k) = basis[k].m;
        j2(k, k) = basis[k].j * (basis[k].j + 1.0);
    }
    const Matrix bdag = boson_raising(p.n_max);
    const Matrix number = bdag * bdag.adjoint();  // diag(0..n_max)

    SystemSpec spec;
    spec.d_S = d_S;
    spec.d_E = d_E;
    spec.H_S = HermitianMatrix(p.omega * jz, tol);
    spec.H_E = HermitianMatrix(p.beta * number, tol);
    spec.H_SE = HermitianMatrix(kron(p.eta * j2, Matrix(bdag + bdag.adjoint()), tol), tol);
    return spec;
}

inline Matrix vacuum_weights(int n_max) { return basis_projector(n_max + 1, 0); }

// Exact truncated-Fock evolution with a cached eigendecomposition; the boson
// mode starts in the vacuum.
class SpinBosonEvolver {
  public:
    SpinBosonEvolver(const SpinBosonParams& p, Matrix rho_S0,
                     const ToleranceConfig& tol = default_tol())
        : params_(p),
          spec_(build_spinboson(p, tol)),
          prop_(build_total_hamiltonian(spec_, tol)) {
        if (rho_S0.rows() != spec_.d_S || rho_S0.cols() != spec_.d_S)
            throw ShapeError("spin_boson/SpinBosonEvolver: system state dimension mismatch");
        rho0_ = kron(rho_S0, vacuum_weights(p.n_max), tol);
    }

    Matrix reduced_state(double t) const {
        const Matrix rho_t = prop_.evolve(rho0_, t);
        return partial_trace(rho_t, spec_.d_S, spec_.d_E, Subsystem::system);
    }

    const SystemSpec& spec() const { return spec_; }
    const SpinBosonParams& params() const { return params_; }

  private:
    SpinBosonParams params_;
    SystemSpec spec_;
    Propagator prop_;
    Matrix rho0_;
};

// One matrix element of the reduced state from the exact evolution, with the
// Fock cutoff validated by recomputing at n_max + 4.
inline Complex numeric_rho_element(const SpinBosonParams& p, std::optional<Matrix> rho_S0,
                                   double j1, double m1, double j2, double m2, double t,
                                   const ToleranceConfig& tol = default_tol()) {
    p.validate(tol);
    const Matrix rho0 = rho_S0.value_or(maximally_mixed(p.system_dim()));
    const int r = state_index(p, j1, m1);
    const int c = state_index(p, j2, m2);
    const Complex base = SpinBosonEvolver(p, rho0, tol).reduced_state(t)(r, c);
    SpinBosonParams refined = p;
    refined.n_max += 4;
    const Complex check = SpinBosonEvolver(refined, rho0, tol).reduced_state(t)(r, c);
    if (std::abs(base - check) > tol.cutoff_drift)
        throw CutoffError("spin_boson/numeric_rho_element: cutoff drift " +
                          std::to_string(std::abs(base - check)) + " exceeds bound; raise n_max");
    return base;
}

// Oscillatory building blocks of the analytic solution at (j, t). alpha and
// zeta are the quadrature components of the sector's boson displacement,
// psi = -(alpha^2 + zeta^2)/2 its Gaussian weight, and phase the secular
// phase gamma^2 (t - sin(beta t)/beta)/beta. beta -> 0 is taken by series
// limit (zeta -> beta gamma t^2/2 -> 0).
struct AnalyticFactors {
    double alpha = 0.0;
    double zeta = 0.0;
    double gamma = 0.0;
    double psi = 0.0;
    double phase = 0.0;

    Complex displacement() const { return Complex(-zeta, -alpha); }
};

inline AnalyticFactors analytic_factors(const SpinBosonParams& p, double j, double t) {
    AnalyticFactors f;
    f.gamma = gamma_of_j(p, j);
    if (p.beta > 1e-12) {
        f.alpha = f.gamma * std::sin(p.beta * t) / p.beta;
        f.zeta = f.gamma * (1.0 - std::cos(p.beta * t)) / p.beta;
        f.phase = (f.gamma * f.gamma / p.beta) * (t - std::sin(p.beta * t) / p.beta);
    } else {
        f.alpha = f.gamma * t;
        f.zeta = 0.5 * p.beta * f.gamma * t * t;
        f.phase = f.gamma * f.gamma * p.beta * t * t * t / 6.0;
    }
    f.psi = -0.5 * (f.alpha * f.alpha + f.zeta * f.zeta);
    return f;
}

// <n|D(mu)|n'> for the displacement operator, via log-factorials.
inline Complex displacement_matrix_element(Complex mu, int n, int nprime) {
    const double mu_abs = std::abs(mu);
    if (mu_abs == 0.0) return n == nprime ? Complex(1.0, 0.0) : Complex(0.0, 0.0);
    Complex acc = 0.0;
    for (int q = std::max(0, nprime - n); q <= nprime; ++q) {
        const int pw = n - nprime + q;
        const double logmag = 0.5 * (std::lgamma(n + 1.0) + std::lgamma(nprime + 1.0)) -
                              std::lgamma(pw + 1.0) - std::lgamma(q + 1.0) -
                              std::lgamma(nprime - q + 1.0) + (pw + q) * std::log(mu_abs);
        if (logmag > 700.0)
            throw OverflowGuardError("spin_boson/displacement_matrix_element: term overflow");
        const Complex dir_mu = mu / mu_abs;
        const Complex dir_conj = std::conj(-mu) / mu_abs;
        acc += std::exp(logmag) * std::pow(dir_mu, pw) * std::pow(dir_conj, q);
    }
    return std::exp(-0.5 * mu_abs * mu_abs) * acc;
}

// <n|V_j(t)|n'> of the sector evolution V_j(t) = e^{i phase} D(mu_j) e^{-i beta t n'},
// the closed form behind the polynomial expansion.
inline Complex boson_matrix_element(const SpinBosonParams& p, double j, int n, int nprime,
                                    double t) {
    const AnalyticFactors f = analytic_factors(p, j, t);
    const Complex elem = displacement_matrix_element(f.displacement(), n, nprime);
    return std::exp(kI * f.phase) * elem * std::exp(-kI * p.beta * t * static_cast<double>(nprime));
}

// Analytic boson overlap factor Omega_E(j1, j2, t) for the vacuum initial
// state: the Fock sum sum_n (1/n!) E_n(j1) conj(E_n(j2)) with
// E_n(j) = e^{i phase_j + psi_j} mu_j^n,
// accumulated by running products so factorials never overflow. The index
// placement of the conjugated factor is locked against the exact Fock-space
// evolution (see tests).
inline Complex analytic_boson_factor(const SpinBosonParams& p, double j1, double j2, double t,
                                     const ToleranceConfig& tol = default_tol()) {
    p.validate(tol);
    const AnalyticFactors f1 = analytic_factors(p, j1, t);
    const AnalyticFactors f2 = analytic_factors(p, j2, t);
    const Complex cross = f1.displacement() * std::conj(f2.displacement());
    const Complex prefactor = std::exp(Complex(f1.psi + f2.psi, f1.phase - f2.phase));

    Complex sum = 0.0;
    Complex term = 1.0;  // cross^n / n!
    for (int n = 0; n <= p.n_max; ++n) {
        sum += term;
        term *= cross / static_cast<double>(n + 1);
    }
    // Tail guard: four more terms must not move the result.
    Complex tail = 0.0;
    for (int n = p.n_max + 1; n <= p.n_max + 4; ++n) {
        tail += term;
        term *= cross / static_cast<double>(n + 1);
    }
    if (std::abs(prefactor * tail) > tol.cutoff_drift)
        throw CutoffError("spin_boson/analytic_boson_factor: Fock sum not converged at n_max");
    return prefactor * sum;
}

// Zassenhaus coefficients [c2, c3, c4] up to the requested order:
//   c2 = [X,Y], c3 = 2[[X,Y],Y] + [[X,Y],X],
//   c4 = 3[[[X,Y],Y],Y] + 3[[[X,Y],X],Y] + [[[X,Y],X],X].
inline std::vector<Matrix> zassenhaus_terms(const Matrix& x, const Matrix& y, int order) {
    require_square(x, "spin_boson/zassenhaus_terms");
    require_square(y, "spin_boson/zassenhaus_terms");
    if (x.rows() != y.rows())
        throw ShapeError("spin_boson/zassenhaus_terms: operand dimensions differ");
    if (order > 4)
        throw UnsupportedOrderError("spin_boson/zassenhaus_terms: terms beyond c4 not supported");
    std::vector<Matrix> terms;
    if (order < 2) return terms;
    const Matrix c2 = comm(x, y);
    terms.push_back(c2);
    if (order >= 3) terms.push_back(2.0 * comm(c2, y) + comm(c2, x));
    if (order >= 4) {
        const Matrix c2y = comm(c2, y);
        const Matrix c2x = comm(c2, x);
        terms.push_back(3.0 * comm(c2y, y) + 3.0 * comm(c2x, y) + comm(c2x, x));
    }
    return terms;
}

namespace detail {

// Best rational p/q approximation with q <= max_den, by continued fractions.
inline bool rational_approx(double x, int max_den, long& p_out, long& q_out) {
    long p0 = 1, q0 = 0, p1 = static_cast<long>(std::floor(x)), q1 = 1;
    double frac = x - std::floor(x);
    while (true) {
        if (std::abs(x - static_cast<double>(p1) / q1) <= 1e-9 * std::max(1.0, std::abs(x))) break;
        if (frac < 1e-15) break;
        const double inv = 1.0 / frac;
        const long a = static_cast<long>(std::floor(inv));
        frac = inv - std::floor(inv);
        const long p2 = a * p1 + p0;
        const long q2 = a * q1 + q0;
        if (q2 > max_den) break;
        p0 = p1;
        q0 = q1;
        p1 = p2;
        q1 = q2;
    }
    p_out = p1;
    q_out = q1;
    return std::abs(x - static_cast<double>(p1) / q1) <= 1e-9 * std::max(1.0, std::abs(x));
}

}  // namespace detail

struct PeriodicityReport {
    double period = 0.0;
    double composition_residual = 0.0;  // rho_S(2T) vs the [0,T] map applied to rho_S(T)
    double phase_return_residual = 0.0;  // rho_S(T) vs the predicted diagonal-phase return
    bool pass = false;
};

// Semigroup property on the period lattice: with all rates commensurable the
// boson mode returns to the vacuum at T, so the reduced map over [0,T]
// composes exactly on lattice multiples. Rates considered: omega, beta and
// the secular rates gamma(j)^2/beta.
inline PeriodicityReport periodicity_semigroup_check(const SpinBosonParams& p, double tol_check,
                                                     const ToleranceConfig& tol = default_tol()) {
    p.validate(tol);
    std::vector<double> rates;
    if (p.omega > 0.0) rates.push_back(p.omega);
    bool coupled = false;
    for (double j : p.multiplets)
        if (gamma_of_j(p, j) != 0.0) coupled = true;
    if (coupled && p.beta <= 1e-12)
        throw IncommensurableError(
            "spin_boson/periodicity_semigroup_check: coupled mode with beta = 0 never recurs");
    if (p.beta > 0.0 && (coupled || p.omega > 0.0 || p.eta != 0.0)) rates.push_back(p.beta);
    if (coupled)
        for (double j : p.multiplets) {
            const double g = gamma_of_j(p, j);
            if (g != 0.0) rates.push_back(g * g / p.beta);
        }

    double period = 1.0;
    if (!rates.empty()) {
        const double f1 = rates.front() / (2.0 * M_PI);
        std::vector<long> ps, qs;
        for (double r : rates) {
            long pp = 0, qq = 0;
            if (!detail::rational_approx(r / rates.front(), 64, pp, qq))
                throw IncommensurableError(
                    "spin_boson/periodicity_semigroup_check: rate ratio " +
                    std::to_string(r / rates.front()) +
                    " has no rational approximation with denominator <= 64");
            ps.push_back(pp);
            qs.push_back(qq);
        }
        long big_l = 1;
        for (long q : qs) big_l = std::lcm(big_l, q);
        long g = 0;
        for (std::size_t k = 0; k < ps.size(); ++k) g = std::gcd(g, ps[k] * (big_l / qs[k]));
        if (g == 0) g = 1;
        period = static_cast<double>(big_l / g) / f1;
    }

    const int d_S = p.system_dim();
    const Matrix rho_S0 = uniform_amplitudes(d_S) * uniform_amplitudes(d_S).adjoint();
    const SpinBosonEvolver evolver(p, rho_S0, tol);
    const Matrix rho_T = evolver.reduced_state(period);
    const Matrix rho_2T = evolver.reduced_state(2.0 * period);

    // Cutoff adequacy on the longest horizon.
    {
        SpinBosonParams refined = p;
        refined.n_max += 4;
        const Matrix check = SpinBosonEvolver(refined, rho_S0, tol).reduced_state(2.0 * period);
        if (max_abs(rho_2T - check) > tol.cutoff_drift)
            throw CutoffError("spin_boson/periodicity_semigroup_check: cutoff drift exceeds bound");
    }

    const SuperMatrix map_T =
        compute_supermatrix(evolver.spec(), vacuum_weights(p.n_max), 0.0, period, tol);
    const Matrix composed = apply_map(map_T, rho_T, tol);

    PeriodicityReport rep;
    rep.period = period;
    rep.composition_residual = max_abs(rho_2T - composed);

    const auto basis = system_basis(p);
    Vector phases(d_S);
    for (int k = 0; k < d_S; ++k) {
        const AnalyticFactors f = analytic_factors(p, basis[k].j, period);
        phases(k) = std::exp(kI * (f.phase - p.omega * basis[k].m * period));
    }
    const Matrix predicted = phases.asDiagonal() * rho_S0 * phases.asDiagonal().toDenseMatrix().adjoint();
    rep.phase_return_residual = max_abs(rho_T - predicted);
    rep.pass = rep.composition_residual <= tol_check;
    return rep;
}

}  // namespace oqs
