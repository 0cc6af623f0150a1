#pragma once

#include "automaton.hpp"
#include "core.hpp"
#include "parallel.hpp"
#include "states.hpp"

#include <gsl/gsl_blas.h>
#include <gsl/gsl_errno.h>
#include <gsl/gsl_multimin.h>

namespace qembed {

struct unsupported_map : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

enum class MapKind { one_qubit, average_spin, correlation };

// Each generator z = 1 .. 4^Q-1 is assigned the classical observable
// prod_{j in masks[z-1]} s_j over n_spins fundamental spins.
struct BitQuantumMap {
    MapKind kind = MapKind::one_qubit;
    int Q = 1;
    int n_spins = 3;
    std::vector<std::uint32_t> masks;

    std::string name() const {
        switch (kind) {
        case MapKind::one_qubit: return "one_qubit";
        case MapKind::average_spin: return "average_spin_Q" + std::to_string(Q);
        default: return "correlation_Q" + std::to_string(Q);
        }
    }

    static BitQuantumMap one_qubit() { return {MapKind::one_qubit, 1, 3, {1u, 2u, 4u}}; }

    // Spin (k, i) with k = 1..3 and particle i = 1..Q sits at index 3(i-1) + k-1.
    static BitQuantumMap correlation(int Q) {
        if (Q < 1 || Q > 3) throw unsupported_map("correlation map supported for Q = 1..3");
        BitQuantumMap m{MapKind::correlation, Q, 3 * Q, {}};
        for (int z = 1; z < pow4(Q); ++z) {
            auto d = generator_digits(z, Q);
            std::uint32_t mask = 0;
            for (int i = 0; i < Q; ++i)
                if (d[i]) mask ^= 1u << (3 * i + d[i] - 1);
            m.masks.push_back(mask);
        }
        return m;
    }

    // One independent spin per generator.
    static BitQuantumMap average_spin(int Q) {
        if (Q < 1 || Q > 2) throw unsupported_map("average spin distributions supported for Q = 1..2");
        BitQuantumMap m{MapKind::average_spin, Q, pow4(Q) - 1, {}};
        for (int z = 1; z < pow4(Q); ++z) m.masks.push_back(1u << (z - 1));
        return m;
    }

    static BitQuantumMap parse(const std::string& s) {
        if (s == "one_qubit") return one_qubit();
        if (s == "correlation_Q2") return correlation(2);
        if (s == "correlation_Q3") return correlation(3);
        if (s == "average_spin_Q1") return average_spin(1);
        if (s == "average_spin_Q2") return average_spin(2);
        throw unsupported_map("unknown map: " + s);
    }

    // +-1 table A(z-1, tau) of the assigned observables.
    RMat observable_table() const {
        std::size_t sz = std::size_t(1) << n_spins;
        RMat a(Eigen::Index(masks.size()), Eigen::Index(sz));
        for (std::size_t t = 0; t < sz; ++t)
            for (std::size_t z = 0; z < masks.size(); ++z) a(Eigen::Index(z), Eigen::Index(t)) = spin_product(Config(t), masks[z], n_spins);
        return a;
    }
};

inline RVec map_expectations(const Distribution& p, const BitQuantumMap& m) {
    if (p.n != m.n_spins) throw dimension_error("distribution does not match map spin count");
    RVec b = RVec::Zero(Eigen::Index(m.masks.size()));
    for (Eigen::Index t = 0; t < p.p.size(); ++t) {
        double w = p.p[t];
        if (w == 0) continue;
        for (std::size_t z = 0; z < m.masks.size(); ++z) b[Eigen::Index(z)] += w * spin_product(Config(t), m.masks[z], p.n);
    }
    return b;
}

inline Density apply_map(const Distribution& p, const BitQuantumMap& m) { return from_bloch(map_expectations(p, m)); }

inline Density one_qubit_map(const Distribution& p) {
    if (p.n != 3) throw dimension_error("one_qubit_map needs 3 spins");
    return apply_map(p, BitQuantumMap::one_qubit());
}

inline Density correlation_map(const Distribution& p, int Q) {
    if (Q < 2 || Q > 3) throw unsupported_map("correlation_map supports Q = 2, 3");
    return apply_map(p, BitQuantumMap::correlation(Q));
}

inline Density average_spin_map(const RVec& expectations, int Q) {
    if (expectations.size() != pow4(Q) - 1) throw dimension_error("average_spin_map: need 4^Q - 1 expectations");
    if (expectations.cwiseAbs().maxCoeff() > 1.0 + 1e-12) throw domain_error("expectation value outside [-1, 1]");
    return from_bloch(expectations);
}

struct ConstraintReport {
    double min_eigenvalue = 0;
    double purity = 0;  // rho_z rho_z
    bool satisfied = false;
    bool pure = false;
};

inline ConstraintReport constraint_report(const Density& rho, double tol = 1e-10) {
    auto pr = check_positive(rho, tol);
    int Q = qubits_of_dim(rho.rows());
    RVec b = bloch_of(rho);
    ConstraintReport r;
    r.min_eigenvalue = pr.min_eigenvalue;
    r.purity = b.squaredNorm();
    r.satisfied = pr.min_eigenvalue >= -tol;
    r.pure = r.satisfied && std::abs(r.purity - double((1 << Q) - 1)) <= 1e-9;
    return r;
}

// Classical pair bound for two Ising spins with means a, b and correlation c.
inline bool pair_inequality_holds(double a, double b, double c, double tol = 1e-12) {
    return c >= -1 + std::abs(a + b) - tol && c <= 1 - std::abs(a - b) + tol;
}

// Six spins (s^(1)_1..3, s^(2)_1..3); weight only on s^(2) = -s^(1).
inline Distribution entangled_family(double delta) {
    if (std::abs(delta) > 0.125 + 1e-15) throw domain_error("entangled_family: |Delta| > 1/8 gives negative probabilities");
    Distribution d{6, RVec::Zero(64)};
    for (Config a = 0; a < 8; ++a) {
        Config b = (~a) & 7u;
        int prod = spin_value(a, 0, 3) * spin_value(a, 1, 3) * spin_value(a, 2, 3);
        d.p[(a << 3) | b] = 0.125 + delta * prod;
    }
    return d;
}

// Classical wave built from three two-spin factors (s_k^(1), s_k^(2)), k = 1..3.
inline ClassicalWave three_particle_wave(double theta) {
    double c = std::cos(theta), s = std::sin(theta);
    double a = 0.5 * (c + s), b = 0.5 * (c - s);
    const double q12[4] = {a, b, b, a};
    const double q3[4] = {0, c, s, 0};
    ClassicalWave w{6, RVec(64)};
    for (Config t = 0; t < 64; ++t) {
        auto pair = [&](int k) {
            int s1 = spin_value(t, k, 6), s2 = spin_value(t, 3 + k, 6);
            return (s1 > 0 ? 0 : 2) + (s2 > 0 ? 0 : 1);
        };
        w.q[t] = q12[pair(0)] * q12[pair(1)] * q3[pair(2)];
    }
    return w;
}

inline Distribution three_particle_product(double theta) { return three_particle_wave(theta).distribution(); }

struct SolveResult {
    ClassicalWave wave;
    double fidelity = 0;
    double residual = 0;  // objective at the optimum
    bool converged = false;
    int restarts_used = 0;
    std::vector<double> restart_fidelities;
};

namespace detail {

struct SolverProblem {
    RMat A;          // observables x configurations
    RVec t;          // target Bloch vector
    bool pure = false;
    double scale = 1;

    RVec probs(const gsl_vector* x) const {
        RVec p(A.cols());
        for (Eigen::Index i = 0; i < p.size(); ++i) p[i] = gsl_vector_get(x, std::size_t(i)) * gsl_vector_get(x, std::size_t(i));
        return p / p.sum();
    }
    // Objective in p and its gradient g = df/dp.
    double eval(const RVec& p, RVec* g) const {
        RVec b = A * p;
        if (pure) {
            if (g) *g = -scale * (A.transpose() * t);
            return -scale * (1.0 + b.dot(t));
        }
        RVec d = b - t;
        if (g) *g = 2.0 * (A.transpose() * d);
        return d.squaredNorm();
    }
};

inline double f_cb(const gsl_vector* x, void* params) {
    auto* pr = static_cast<SolverProblem*>(params);
    return pr->eval(pr->probs(x), nullptr);
}

inline void df_cb(const gsl_vector* x, void* params, gsl_vector* grad) {
    auto* pr = static_cast<SolverProblem*>(params);
    double S = 0;
    for (std::size_t i = 0; i < x->size; ++i) S += gsl_vector_get(x, i) * gsl_vector_get(x, i);
    RVec p = pr->probs(x), g;
    pr->eval(p, &g);
    double pg = p.dot(g);
    for (std::size_t i = 0; i < x->size; ++i) gsl_vector_set(grad, i, 2.0 * gsl_vector_get(x, i) / S * (g[Eigen::Index(i)] - pg));
}

inline void fdf_cb(const gsl_vector* x, void* params, double* f, gsl_vector* grad) {
    *f = f_cb(x, params);
    df_cb(x, params, grad);
}

}  // namespace detail

// Gradient of the solver objective with respect to the wave q (exposed for tests).
inline RVec solver_gradient(const Density& target, const BitQuantumMap& map, const RVec& q, double* value = nullptr) {
    detail::SolverProblem pr{map.observable_table(), bloch_of(target)};
    pr.pure = check_positive(target).pure;
    pr.scale = 1.0 / double(1 << map.Q);
    gsl_vector* x = gsl_vector_alloc(std::size_t(q.size()));
    gsl_vector* g = gsl_vector_alloc(std::size_t(q.size()));
    for (Eigen::Index i = 0; i < q.size(); ++i) gsl_vector_set(x, std::size_t(i), q[i]);
    detail::df_cb(x, &pr, g);
    if (value) *value = detail::f_cb(x, &pr);
    RVec r(q.size());
    for (Eigen::Index i = 0; i < q.size(); ++i) r[i] = gsl_vector_get(g, std::size_t(i));
    gsl_vector_free(x);
    gsl_vector_free(g);
    return r;
}

// Fidelity of a classical image sigma against a target: linear overlap for pure
// targets, Uhlmann fidelity (negative eigenvalues clamped) otherwise.
inline double realization_fidelity(const Density& target, const Density& sigma) {
    auto pr = check_positive(target);
    if (pr.pure) {
        Eigen::SelfAdjointEigenSolver<Operator> es(target);
        CVec psi = es.eigenvectors().col(es.eigenvalues().size() - 1);
        return (psi.adjoint() * sigma * psi)(0, 0).real();
    }
    Operator s = psd_sqrt(target);
    Operator m = s * sigma * s;
    m = (0.5 * (m + m.adjoint())).eval();
    Eigen::SelfAdjointEigenSolver<Operator> es(m, Eigen::EigenvaluesOnly);
    double t = es.eigenvalues().cwiseMax(0.0).cwiseSqrt().sum();
    return t * t;
}

inline SolveResult solve_distribution(const Density& target, const BitQuantumMap& map, int restarts, std::uint64_t seed,
                                      int max_iter = 2000, bool stop_at_convergence = true) {
    if (!is_valid_density(target)) throw contract_violation("solve_distribution: target is not a density matrix");
    if (qubits_of_dim(target.rows()) != map.Q) throw dimension_error("solve_distribution: target/map qubit mismatch");
    gsl_set_error_handler_off();
    detail::SolverProblem pr{map.observable_table(), bloch_of(target)};
    pr.pure = check_positive(target).pure;
    pr.scale = 1.0 / double(1 << map.Q);
    const std::size_t n = std::size_t(pr.A.cols());

    SolveResult best;
    best.fidelity = -1;
    gsl_multimin_function_fdf fn{&detail::f_cb, &detail::df_cb, &detail::fdf_cb, n, &pr};
    gsl_vector* x = gsl_vector_alloc(n);
    gsl_multimin_fdfminimizer* s = gsl_multimin_fdfminimizer_alloc(gsl_multimin_fdfminimizer_vector_bfgs2, n);
    for (int r = 0; r < std::max(1, restarts); ++r) {
        Philox g(derive_seed(seed, std::uint64_t(r)));
        double nrm = 0;
        for (std::size_t i = 0; i < n; ++i) {
            double v = 0.2 + g.uniform();
            gsl_vector_set(x, i, v);
            nrm += v * v;
        }
        gsl_vector_scale(x, 1.0 / std::sqrt(nrm));
        // Several BFGS cycles; restarting the quasi-Newton memory helps on the sphere.
        for (int cycle = 0; cycle < 4; ++cycle) {
            gsl_multimin_fdfminimizer_set(s, &fn, x, 0.05, 0.1);
            for (int it = 0; it < max_iter; ++it) {
                int st = gsl_multimin_fdfminimizer_iterate(s);
                if (st) break;
                if (gsl_multimin_test_gradient(s->gradient, 1e-13) == GSL_SUCCESS) break;
            }
            gsl_vector_memcpy(x, s->x);
            double nx = gsl_blas_dnrm2(x);
            gsl_vector_scale(x, 1.0 / nx);
        }
        RVec q(static_cast<Eigen::Index>(n));
        for (std::size_t i = 0; i < n; ++i) q[Eigen::Index(i)] = gsl_vector_get(x, i);
        q /= q.norm();
        ClassicalWave w{map.n_spins, q};
        Density sigma = apply_map(w.distribution(), map);
        double fid = realization_fidelity(target, sigma);
        best.restart_fidelities.push_back(fid);
        best.restarts_used = r + 1;
        if (fid > best.fidelity) {
            best.fidelity = fid;
            best.wave = w;
            best.residual = pr.eval(w.distribution().p, nullptr);
        }
        if (stop_at_convergence && best.fidelity >= 1 - 1e-6) break;
    }
    gsl_multimin_fdfminimizer_free(s);
    gsl_vector_free(x);
    best.converged = best.fidelity >= 1 - 1e-6;
    return best;
}

}  // namespace qembed
