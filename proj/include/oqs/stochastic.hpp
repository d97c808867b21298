// stochastic.hpp — the stochastic-process side: an empirical finite-state
// Markov-order tester for sampled chains, and quantum device sequences with
// causal breaks for the operational Markovianity test. Devices act on the
// system factor only; in dilated mode memory is carried exclusively by a
// persistent environment evolving jointly between steps.

#pragma once

#include <optional>
#include <variant>
#include <vector>

#include "oqs/map.hpp"
#include "oqs/rng.hpp"

namespace oqs {

// ---------------------------------------------------------------------------
// Classical chains

struct ChainSpec {
    int n_states = 2;
    Eigen::MatrixXd transition;   // S x S row-stochastic
    int order = 1;                // 1 or 2
    std::uint64_t seed = 0;
    Eigen::MatrixXd transition2;  // (S*S) x S row-stochastic, used when order == 2

    void validate(const ToleranceConfig& tol = default_tol()) const {
        if (n_states < 1) throw ShapeError("stochastic/ChainSpec: need >= 1 state");
        if (order != 1 && order != 2) throw ShapeError("stochastic/ChainSpec: order must be 1 or 2");
        const auto check_rows = [&](const Eigen::MatrixXd& m, const char* name) {
            if (m.cols() != n_states)
                throw ShapeError(std::string("stochastic/ChainSpec: ") + name + " has wrong width");
            for (Eigen::Index r = 0; r < m.rows(); ++r) {
                double sum = 0.0;
                for (Eigen::Index c = 0; c < m.cols(); ++c) {
                    if (m(r, c) < -tol.trace || m(r, c) > 1.0 + tol.trace)
                        throw NormalizationError(std::string("stochastic/ChainSpec: ") + name +
                                                 " entry outside [0,1]");
                    sum += m(r, c);
                }
                if (std::abs(sum - 1.0) > tol.trace)
                    throw NormalizationError(std::string("stochastic/ChainSpec: ") + name +
                                             " row not stochastic");
            }
        };
        if (transition.rows() != n_states) throw ShapeError("stochastic/ChainSpec: transition not S x S");
        check_rows(transition, "transition");
        if (order == 2) {
            if (transition2.rows() != n_states * n_states)
                throw ShapeError("stochastic/ChainSpec: transition2 not S^2 x S");
            check_rows(transition2, "transition2");
        }
    }
};

inline std::vector<int> simulate_chain(const ChainSpec& chain, int length,
                                       const ToleranceConfig& tol = default_tol()) {
    chain.validate(tol);
    if (length < 3) throw ContractError("stochastic/simulate_chain: need length >= 3");
    Rng rng(chain.seed);
    std::vector<int> traj(length);
    std::vector<double> uniform(chain.n_states, 1.0);
    traj[0] = rng.pick(uniform);
    {
        std::vector<double> row(chain.n_states);
        for (int c = 0; c < chain.n_states; ++c) row[c] = chain.transition(traj[0], c);
        traj[1] = rng.pick(row);
    }
    std::vector<double> row(chain.n_states);
    for (int k = 2; k < length; ++k) {
        if (chain.order == 1) {
            for (int c = 0; c < chain.n_states; ++c) row[c] = chain.transition(traj[k - 1], c);
        } else {
            const int ctx = traj[k - 2] * chain.n_states + traj[k - 1];
            for (int c = 0; c < chain.n_states; ++c) row[c] = chain.transition2(ctx, c);
        }
        traj[k] = rng.pick(row);
    }
    return traj;
}

struct MarkovTestResult {
    bool is_markov = false;
    double max_tv = 0.0;
};

// Compares the empirical P(X_n | X_{n-1}, X_{n-2}) against P(X_n | X_{n-1})
// in total variation, over conditioning pairs with at least `count_floor`
// visits.
inline MarkovTestResult test_markov_order1(const std::vector<int>& traj, int n_states, double alpha,
                                           int count_floor = 50) {
    if (traj.size() < 3)
        throw InsufficientDataError("stochastic/test_markov_order1: trajectory too short");
    const int s = n_states;
    std::vector<long> pair_count(s * s, 0), pair_next(s * s * s, 0);
    std::vector<long> single_count(s, 0), single_next(s * s, 0);
    for (std::size_t k = 2; k < traj.size(); ++k) {
        const int a = traj[k - 2], b = traj[k - 1], c = traj[k];
        pair_count[a * s + b] += 1;
        pair_next[(a * s + b) * s + c] += 1;
    }
    for (std::size_t k = 1; k < traj.size(); ++k) {
        const int b = traj[k - 1], c = traj[k];
        single_count[b] += 1;
        single_next[b * s + c] += 1;
    }
    double max_tv = 0.0;
    bool any = false;
    for (int ab = 0; ab < s * s; ++ab) {
        if (pair_count[ab] < count_floor) continue;
        const int b = ab % s;
        if (single_count[b] == 0) continue;
        any = true;
        double tv = 0.0;
        for (int c = 0; c < s; ++c) {
            const double p2 = static_cast<double>(pair_next[ab * s + c]) / pair_count[ab];
            const double p1 = static_cast<double>(single_next[b * s + c]) / single_count[b];
            tv += std::abs(p2 - p1);
        }
        max_tv = std::max(max_tv, 0.5 * tv);
    }
    if (!any)
        throw InsufficientDataError(
            "stochastic/test_markov_order1: no conditioning pair reaches the count floor");
    return {max_tv <= alpha, max_tv};
}

// ---------------------------------------------------------------------------
// Quantum device sequences

struct UnitaryDevice {
    Matrix u;  // on the system
};

struct KrausDevice {
    std::vector<Matrix> kraus;  // on the system
    bool trace_preserving = true;
};

struct CausalBreak {
    std::vector<Matrix> projectors;      // measurement {Pi_r}, sums to I
    std::vector<Matrix> repreparations;  // density matrices {P_s}
    int outcome = -1;                    // fixed outcome r, or -1 to sample
    int reprep = 0;                      // which P_s to re-prepare
    std::uint64_t seed = 0;              // Born-rule sampling seed
};

using Device = std::variant<UnitaryDevice, KrausDevice, CausalBreak>;

struct ProcessRecord {
    std::vector<Device> steps;
    double dt = 1.0;  // joint evolution time between consecutive devices (dilated mode)
};

namespace detail {

inline void check_device(const Device& dev, int d_S, const ToleranceConfig& tol) {
    if (const auto* u = std::get_if<UnitaryDevice>(&dev)) {
        if (u->u.rows() != d_S || u->u.cols() != d_S)
            throw ShapeError("stochastic/run_process: unitary dimension mismatch");
        return;
    }
    if (const auto* k = std::get_if<KrausDevice>(&dev)) {
        if (k->kraus.empty()) throw CompletenessError("stochastic/run_process: empty Kraus set");
        Matrix sum = Matrix::Zero(d_S, d_S);
        for (const Matrix& op : k->kraus) {
            if (op.rows() != d_S || op.cols() != d_S)
                throw ShapeError("stochastic/run_process: Kraus operator dimension mismatch");
            sum += op.adjoint() * op;
        }
        if (k->trace_preserving) {
            if (max_abs(sum - Matrix::Identity(d_S, d_S)) > tol.completeness)
                throw CompletenessError("stochastic/run_process: Kraus set not complete");
        } else if (hermitian_eigenvalues(sum).maxCoeff() > 1.0 + tol.completeness) {
            throw CompletenessError("stochastic/run_process: Kraus set trace-increasing");
        }
        return;
    }
    const auto& br = std::get<CausalBreak>(dev);
    if (br.projectors.empty() || br.repreparations.empty())
        throw CompletenessError("stochastic/run_process: causal break needs projectors and re-preparations");
    Matrix sum = Matrix::Zero(d_S, d_S);
    for (const Matrix& pi : br.projectors) {
        if (pi.rows() != d_S || pi.cols() != d_S)
            throw ShapeError("stochastic/run_process: projector dimension mismatch");
        sum += pi;
    }
    if (max_abs(sum - Matrix::Identity(d_S, d_S)) > tol.completeness)
        throw CompletenessError("stochastic/run_process: break projectors do not sum to identity");
    if (br.reprep < 0 || br.reprep >= static_cast<int>(br.repreparations.size()))
        throw ShapeError("stochastic/run_process: re-preparation index out of range");
}

// Apply one device to the state; `rho` is the system state alone, or the
// full system (x) environment state in dilated mode.
inline Matrix apply_device(const Device& dev, const Matrix& rho, int d_S, int d_E,
                           const ToleranceConfig& tol) {
    const auto lift = [&](const Matrix& op) {
        return d_E > 1 ? kron(op, Matrix::Identity(d_E, d_E), tol) : op;
    };
    if (const auto* u = std::get_if<UnitaryDevice>(&dev)) {
        const Matrix full = lift(u->u);
        return full * rho * full.adjoint();
    }
    if (const auto* k = std::get_if<KrausDevice>(&dev)) {
        Matrix out = Matrix::Zero(rho.rows(), rho.cols());
        for (const Matrix& op : k->kraus) {
            const Matrix full = lift(op);
            out += full * rho * full.adjoint();
        }
        return out;
    }
    const auto& br = std::get<CausalBreak>(dev);
    int r = br.outcome;
    std::vector<double> probs(br.projectors.size());
    for (std::size_t i = 0; i < br.projectors.size(); ++i)
        probs[i] = std::max(0.0, (lift(br.projectors[i]) * rho).trace().real());
    if (r < 0) {
        Rng rng(br.seed);
        r = rng.pick(probs);
    }
    if (r >= static_cast<int>(br.projectors.size()))
        throw ShapeError("stochastic/run_process: declared outcome out of range");
    if (probs[r] < 1e-12)
        throw NumericalError("stochastic/run_process: conditioning on a zero-probability outcome");
    const Matrix pi = lift(br.projectors[r]);
    const Matrix conditioned = pi * rho * pi / probs[r];
    if (d_E > 1) {
        const Matrix env = partial_trace(conditioned, d_S, d_E, Subsystem::environment);
        return kron(br.repreparations[br.reprep], env, tol);
    }
    return br.repreparations[br.reprep];
}

}  // namespace detail

// System states after each device. In dilated mode `rho0` is the full
// system (x) environment state and the pair evolves jointly for `dt` before
// every device after the first.
inline std::vector<Matrix> process_trajectory(const ProcessRecord& record,
                                              const std::optional<SystemSpec>& env,
                                              const Matrix& rho0,
                                              const ToleranceConfig& tol = default_tol()) {
    int d_S = static_cast<int>(rho0.rows());
    int d_E = 1;
    std::optional<Propagator> joint;
    if (env) {
        env->validate(tol);
        d_S = env->d_S;
        d_E = env->d_E;
        if (rho0.rows() != env->total_dim())
            throw ShapeError("stochastic/run_process: dilated mode expects the full-space state");
        joint.emplace(build_total_hamiltonian(*env, tol));
    }
    for (const Device& dev : record.steps) detail::check_device(dev, d_S, tol);

    std::vector<Matrix> out;
    out.reserve(record.steps.size());
    Matrix rho = rho0;
    for (std::size_t k = 0; k < record.steps.size(); ++k) {
        if (k > 0 && joint) rho = joint->evolve(rho, record.dt);
        rho = detail::apply_device(record.steps[k], rho, d_S, d_E, tol);
        out.push_back(d_E > 1 ? partial_trace(rho, d_S, d_E, Subsystem::system) : rho);
    }
    return out;
}

inline Matrix run_process(const ProcessRecord& record, const std::optional<SystemSpec>& env,
                          const Matrix& rho0, const ToleranceConfig& tol = default_tol()) {
    if (record.steps.empty()) throw ContractError("stochastic/run_process: empty device sequence");
    return process_trajectory(record, env, rho0, tol).back();
}

struct CausalBreakResult {
    bool markovian = false;
    double max_diff = 0.0;
};

// Causal-break Markovianity test: the controls are full device sequences that
// may differ only before the break. For every re-preparation, declared
// outcome, control pair and probe index in (break, probe], the post-break
// system states are compared; the process passes if they all agree.
inline CausalBreakResult causal_break_markov_test(const std::vector<ProcessRecord>& controls,
                                                  int break_index, int probe_index,
                                                  const std::optional<SystemSpec>& env,
                                                  const Matrix& rho0, double tol_verdict,
                                                  const ToleranceConfig& tol = default_tol()) {
    if (controls.size() < 2)
        throw ContractError("stochastic/causal_break_markov_test: need >= 2 control histories");
    const std::size_t n_steps = controls.front().steps.size();
    if (break_index < 0 || probe_index <= break_index ||
        static_cast<std::size_t>(probe_index) >= n_steps)
        throw ContractError("stochastic/causal_break_markov_test: need 0 <= break < probe < steps");
    const auto same_matrix = [](const Matrix& a, const Matrix& b) {
        return a.rows() == b.rows() && a.cols() == b.cols() && max_abs(a - b) <= 1e-12;
    };
    const auto* br0 = std::get_if<CausalBreak>(&controls.front().steps[break_index]);
    if (!br0)
        throw ContractError("stochastic/causal_break_markov_test: no causal break at break_index");
    for (const ProcessRecord& rec : controls) {
        if (rec.steps.size() != n_steps || rec.dt != controls.front().dt)
            throw ContractError("stochastic/causal_break_markov_test: control shapes differ");
        for (std::size_t k = break_index; k < n_steps; ++k) {
            const Device& a = controls.front().steps[k];
            const Device& b = rec.steps[k];
            if (a.index() != b.index())
                throw ContractError(
                    "stochastic/causal_break_markov_test: histories differ at or after the break");
            bool equal = true;
            if (const auto* ua = std::get_if<UnitaryDevice>(&a))
                equal = same_matrix(ua->u, std::get<UnitaryDevice>(b).u);
            else if (const auto* ka = std::get_if<KrausDevice>(&a)) {
                const auto& kb = std::get<KrausDevice>(b);
                equal = ka->kraus.size() == kb.kraus.size();
                for (std::size_t i = 0; equal && i < ka->kraus.size(); ++i)
                    equal = same_matrix(ka->kraus[i], kb.kraus[i]);
            } else {
                const auto& ba = std::get<CausalBreak>(a);
                const auto& bb = std::get<CausalBreak>(b);
                equal = ba.projectors.size() == bb.projectors.size() &&
                        ba.repreparations.size() == bb.repreparations.size();
                for (std::size_t i = 0; equal && i < ba.projectors.size(); ++i)
                    equal = same_matrix(ba.projectors[i], bb.projectors[i]);
                for (std::size_t i = 0; equal && i < ba.repreparations.size(); ++i)
                    equal = same_matrix(ba.repreparations[i], bb.repreparations[i]);
            }
            if (!equal)
                throw ContractError(
                    "stochastic/causal_break_markov_test: histories differ at or after the break");
        }
    }

    CausalBreakResult result;
    for (std::size_t s = 0; s < br0->repreparations.size(); ++s) {
        for (std::size_t r = 0; r < br0->projectors.size(); ++r) {
            std::vector<std::vector<Matrix>> trajs;
            bool feasible = true;
            for (const ProcessRecord& rec : controls) {
                ProcessRecord run = rec;
                auto& br = std::get<CausalBreak>(run.steps[break_index]);
                br.outcome = static_cast<int>(r);
                br.reprep = static_cast<int>(s);
                try {
                    trajs.push_back(process_trajectory(run, env, rho0, tol));
                } catch (const NumericalError&) {
                    feasible = false;  // outcome unreachable on this branch
                    break;
                }
            }
            if (!feasible) continue;
            for (std::size_t a = 0; a < trajs.size(); ++a)
                for (std::size_t b = a + 1; b < trajs.size(); ++b)
                    for (int pidx = break_index + 1; pidx <= probe_index; ++pidx)
                        result.max_diff =
                            std::max(result.max_diff, max_abs(trajs[a][pidx] - trajs[b][pidx]));
        }
    }
    result.markovian = result.max_diff <= tol_verdict;
    return result;
}

// Supermatrix of a unitary or Kraus device in the row-(i1,i2) convention;
// composition of a device segment is then the ordered matrix product.
inline Matrix device_supermatrix(const Device& dev, int d_S,
                                 const ToleranceConfig& tol = default_tol()) {
    detail::check_device(dev, d_S, tol);
    Matrix c = Matrix::Zero(d_S * d_S, d_S * d_S);
    const auto add_kraus = [&](const Matrix& k) {
        for (int i1 = 0; i1 < d_S; ++i1)
            for (int i2 = 0; i2 < d_S; ++i2)
                for (int j1 = 0; j1 < d_S; ++j1)
                    for (int j2 = 0; j2 < d_S; ++j2)
                        c(i1 * d_S + i2, j1 * d_S + j2) += k(j1, i1) * std::conj(k(j2, i2));
    };
    if (const auto* u = std::get_if<UnitaryDevice>(&dev)) {
        add_kraus(u->u);
        return c;
    }
    if (const auto* k = std::get_if<KrausDevice>(&dev)) {
        for (const Matrix& op : k->kraus) add_kraus(op);
        return c;
    }
    throw ContractError("stochastic/device_supermatrix: causal breaks are not linear maps");
}

// Map taking the state after device `from` to the state after device `to`
// (memoryless mode only).
inline Matrix segment_supermatrix(const ProcessRecord& record, int from, int to, int d_S,
                                  const ToleranceConfig& tol = default_tol()) {
    if (from < -1 || to < from || static_cast<std::size_t>(to) >= record.steps.size())
        throw ContractError("stochastic/segment_supermatrix: bad segment indices");
    Matrix c = Matrix::Identity(d_S * d_S, d_S * d_S);
    for (int k = from + 1; k <= to; ++k) c = c * device_supermatrix(record.steps[k], d_S, tol);
    return c;
}

}  // namespace oqs
