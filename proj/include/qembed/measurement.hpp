#pragma once

#include "automaton.hpp"
#include "core.hpp"
#include "rng.hpp"

#include <gsl/gsl_multimin.h>

#include <array>
#include <map>
#include <optional>

namespace qembed {

struct infeasible_error : std::domain_error {
    using std::domain_error::domain_error;
};

// Sequence probabilities w^{(AB)}; first index is the later measurement A.
struct JointTable {
    double pp = 0, pm = 0, mp = 0, mm = 0;
    double sum() const { return pp + pm + mp + mm; }
    double mean_B() const { return pp - pm + mp - mm; }
    double mean_A() const { return pp + pm - mp - mm; }
    double correlation() const { return pp - pm - mp + mm; }
};

// (w_a^A)_b^B; absent when w_b^B = 0.
struct ConditionalTable {
    std::optional<double> pp, mp, pm, mm;  // (w_+^A)_+^B, (w_-^A)_+^B, (w_+^A)_-^B, (w_-^A)_-^B
};

inline JointTable joint_from_expectations(double meanA_B, double meanB, double corr) {
    JointTable t{(1 + meanA_B + meanB + corr) / 4, (1 + meanA_B - meanB - corr) / 4, (1 - meanA_B + meanB - corr) / 4,
                 (1 - meanA_B - meanB + corr) / 4};
    const double tol = 1e-12;
    if (t.pp < -tol || t.pm < -tol || t.mp < -tol || t.mm < -tol) throw infeasible_error("joint_from_expectations: negative probability");
    return t;
}

inline double coherent_correlation(const Density& rho, const Operator& A, const Operator& B, const Operator& U) {
    if (A.rows() != rho.rows() || B.rows() != rho.rows() || U.rows() != rho.rows())
        throw dimension_error("coherent_correlation: dimension mismatch");
    Operator ah = U.adjoint() * A * U;
    return 0.5 * (rho * (ah * B + B * ah)).trace().real();
}

struct SpectralProjector {
    double eigenvalue;
    Operator P;
};

// Spectral projectors of a Hermitian operator; eigenvalues closer than gap merge.
inline std::vector<SpectralProjector> spectral_projectors(const Operator& B, double gap = 1e-8) {
    Eigen::SelfAdjointEigenSolver<Operator> es(0.5 * (B + B.adjoint()));
    const auto& ev = es.eigenvalues();
    const auto& V = es.eigenvectors();
    std::vector<SpectralProjector> out;
    Eigen::Index n = ev.size();
    for (Eigen::Index i = 0; i < n;) {
        Eigen::Index j = i + 1;
        while (j < n && ev[j] - ev[j - 1] < gap) ++j;
        Operator P = V.middleCols(i, j - i) * V.middleCols(i, j - i).adjoint();
        out.push_back({ev.segment(i, j - i).mean(), P});
        i = j;
    }
    return out;
}

inline Density reduce(const Density& rho, const Operator& B) {
    if (B.rows() != rho.rows()) throw dimension_error("reduce: dimension mismatch");
    Density r = Density::Zero(rho.rows(), rho.cols());
    for (const auto& sp : spectral_projectors(B)) r += sp.P * rho * sp.P;
    return r;
}

struct DecoherentResult {
    ConditionalTable conditionals;
    double wB_plus = 0, wB_minus = 0;
    double meanA_B = 0;
    double correlation = 0;
    JointTable joint() const {
        auto v = [](const std::optional<double>& o) { return o.value_or(0.0); };
        return {v(conditionals.pp) * wB_plus, v(conditionals.pm) * wB_minus, v(conditionals.mp) * wB_plus, v(conditionals.mm) * wB_minus};
    }
};

namespace detail {

inline std::pair<Operator, Operator> two_level_projectors(const Operator& B) {
    auto sp = spectral_projectors(B);
    if (sp.size() != 2 || std::abs(sp[0].eigenvalue + 1) > 1e-8 || std::abs(sp[1].eigenvalue - 1) > 1e-8)
        throw domain_error("two-level observable with eigenvalues +-1 required");
    return {sp[1].P, sp[0].P};
}

}  // namespace detail

// B measured first on rho (state at t1), A after evolution U from t1 to t2.
inline DecoherentResult decoherent_measure(const Density& rho, const Operator& B, const Operator& A, const Operator& U) {
    if (A.rows() != rho.rows() || B.rows() != rho.rows() || U.rows() != rho.rows())
        throw dimension_error("decoherent_measure: dimension mismatch");
    auto [Pp, Pm] = detail::two_level_projectors(B);
    Operator ah = U.adjoint() * A * U;
    Operator id = Operator::Identity(rho.rows(), rho.cols());
    DecoherentResult r;
    Density rp = Pp * rho * Pp, rm = Pm * rho * Pm;
    r.wB_plus = rp.trace().real();
    r.wB_minus = rm.trace().real();
    const double tol = 1e-14;
    if (r.wB_plus > tol) {
        Density s = rp / r.wB_plus;
        r.conditionals.pp = 0.5 * ((id + ah) * s).trace().real();
        r.conditionals.mp = 0.5 * ((id - ah) * s).trace().real();
    }
    if (r.wB_minus > tol) {
        Density s = rm / r.wB_minus;
        r.conditionals.pm = 0.5 * ((id + ah) * s).trace().real();
        r.conditionals.mm = 0.5 * ((id - ah) * s).trace().real();
    }
    Density rr = rp + rm;
    r.meanA_B = (ah * rr).trace().real();
    r.correlation = (ah * B * rr).trace().real();
    return r;
}

// Conditionals from reduced wave functions: eigenvectors psi_+- of B evolved by U.
inline ConditionalTable wavefunction_reduction(const Density& rho, const Operator& B, const Operator& A, const Operator& U) {
    if (rho.rows() != 2) throw dimension_error("wavefunction_reduction is for one qubit");
    Eigen::SelfAdjointEigenSolver<Operator> es(B);
    ConditionalTable t;
    for (int b = 0; b < 2; ++b) {
        CVec psi = es.eigenvectors().col(b);  // ascending: col 0 is B = -1
        double w = (psi.adjoint() * rho * psi)(0, 0).real();
        if (w <= 1e-14) continue;
        CVec psi2 = U * psi;
        double mean = (psi2.adjoint() * A * psi2)(0, 0).real();
        if (b == 1) {
            t.pp = 0.5 * (1 + mean);
            t.mp = 0.5 * (1 - mean);
        } else {
            t.pm = 0.5 * (1 + mean);
            t.mm = 0.5 * (1 - mean);
        }
    }
    return t;
}

struct SternGerlachResult {
    std::string mode;
    std::map<std::string, double> probabilities;  // labels latest-first
    std::array<double, 3> expectations{};
};

// S_z(0), S_x(pi/w), S_z(2pi/w) with U = exp(i w tau3 t), w = 1, rho(0) = diag(1, 0).
inline SternGerlachResult stern_gerlach(const std::string& mode) {
    const double w = 1;
    const std::array<double, 3> times{0, kPi / w, 2 * kPi / w};
    const std::array<Operator, 3> ops{tau(3), tau(1), tau(3)};
    auto U = [&](double dt) { return expi_hermitian(tau(3), w * dt); };
    Density rho0 = Density::Zero(2, 2);
    rho0(0, 0) = 1;
    SternGerlachResult res;
    res.mode = mode;
    auto label = [](int s1, int s2, int s3) {
        std::string l;
        for (int s : {s3, s2, s1}) l += s > 0 ? '+' : '-';
        return l;
    };
    if (mode == "coherent") {
        std::array<Operator, 3> H;
        for (int i = 0; i < 3; ++i) H[i] = U(times[i]).adjoint() * ops[i] * U(times[i]);
        auto sym = [&](std::vector<int> idx) {
            Operator acc = Operator::Zero(2, 2);
            std::sort(idx.begin(), idx.end());
            int count = 0;
            do {
                Operator p = Operator::Identity(2, 2);
                for (int i : idx) p = p * H[i];
                acc += p;
                ++count;
            } while (std::next_permutation(idx.begin(), idx.end()));
            return (rho0 * acc).trace().real() / count;
        };
        for (int i = 0; i < 3; ++i) res.expectations[i] = sym({i});
        for (int s1 : {1, -1})
            for (int s2 : {1, -1})
                for (int s3 : {1, -1}) {
                    double v = 1 + s1 * sym({0}) + s2 * sym({1}) + s3 * sym({2}) + s1 * s2 * sym({0, 1}) + s1 * s3 * sym({0, 2}) +
                               s2 * s3 * sym({1, 2}) + s1 * s2 * s3 * sym({0, 1, 2});
                    res.probabilities[label(s1, s2, s3)] = v / 8;
                }
        return res;
    }
    if (mode == "decoherent") {
        std::array<std::pair<Operator, Operator>, 3> P;
        for (int i = 0; i < 3; ++i) P[i] = detail::two_level_projectors(ops[i]);
        Density r3 = Density::Zero(2, 2);
        for (int s1 : {1, -1})
            for (int s2 : {1, -1})
                for (int s3 : {1, -1}) {
                    Density r = rho0;
                    double prev = 0;
                    const int s[3] = {s1, s2, s3};
                    for (int i = 0; i < 3; ++i) {
                        r = apply_unitary(r, U(times[i] - prev));
                        prev = times[i];
                        const Operator& p = s[i] > 0 ? P[i].first : P[i].second;
                        r = p * r * p;
                    }
                    res.probabilities[label(s1, s2, s3)] = r.trace().real();
                }
        for (const auto& [l, p] : res.probabilities) {
            res.expectations[0] += (l[2] == '+' ? 1 : -1) * p;
            res.expectations[1] += (l[1] == '+' ? 1 : -1) * p;
            res.expectations[2] += (l[0] == '+' ? 1 : -1) * p;
        }
        return res;
    }
    throw domain_error("stern_gerlach mode must be coherent or decoherent");
}

// ---- CHSH ----

struct ChshResult {
    std::string mode;
    double value = 0;
    bool within_bound = true;
    std::string detail;
};

struct ChshInputs {
    std::optional<Distribution> distribution;  // 6 spins, particle blocks (s1 s2 s3)(s1 s2 s3)
    std::optional<Density> rho;                // two qubits
    std::array<RVec, 4> directions;            // a, a', b, b'
};

namespace detail {

template <class Corr>
inline std::pair<double, std::string> max_chsh_cartesian(Corr&& corr) {
    double best = -1;
    std::string arg;
    for (int k = 1; k <= 3; ++k)
        for (int l = 1; l <= 3; ++l)
            for (int m = 1; m <= 3; ++m)
                for (int n = 1; n <= 3; ++n)
                    for (int sg = 0; sg < 16; ++sg) {
                        int a = sg & 1 ? -1 : 1, a2 = sg & 2 ? -1 : 1, b = sg & 4 ? -1 : 1, b2 = sg & 8 ? -1 : 1;
                        double c = a * b * corr(k, m) + a * b2 * corr(k, n) + a2 * b * corr(l, m) - a2 * b2 * corr(l, n);
                        if (std::abs(c) > best) {
                            best = std::abs(c);
                            arg = "k=" + std::to_string(k) + " l=" + std::to_string(l) + " m=" + std::to_string(m) + " n=" + std::to_string(n);
                        }
                    }
    return {best, arg};
}

inline double two_qubit_corr(const Density& rho, int k, int l) { return expectation(rho, kron(tau(k), tau(l))); }

}  // namespace detail

// Largest violation margin of the pairwise inequalities, from diagonal probabilities
// in the joint eigenbasis of S_k^(1), S_l^(2). Negative margin means violated.
inline double pairwise_bound_margin(const Density& rho) {
    double worst = 1e300;
    std::array<std::pair<Operator, Operator>, 4> proj;
    for (int k = 1; k <= 3; ++k) proj[k] = detail::two_level_projectors(tau(k));
    for (int k = 1; k <= 3; ++k)
        for (int l = 1; l <= 3; ++l) {
            const auto& [Pk, Mk] = proj[k];
            const auto& [Pl, Ml] = proj[l];
            double ppp = expectation(rho, kron(Pk, Pl)), ppm = expectation(rho, kron(Pk, Ml));
            double pmp = expectation(rho, kron(Mk, Pl)), pmm = expectation(rho, kron(Mk, Ml));
            double ck0 = ppp + ppm - pmp - pmm, c0l = ppp - ppm + pmp - pmm, ckl = ppp - ppm - pmp + pmm;
            worst = std::min({worst, ckl - (-1 + std::abs(ck0 + c0l)), 1 - std::abs(ck0 - c0l) - ckl});
        }
    return worst;
}

inline ChshResult chsh(const std::string& mode, const ChshInputs& in) {
    const double tol = 1e-12;
    ChshResult r;
    r.mode = mode;
    if (mode == "classical_distribution") {
        if (!in.distribution || in.distribution->n != 6) throw domain_error("classical mode needs a 6-spin distribution");
        const Distribution& p = *in.distribution;
        RMat T(3, 3);
        for (int k = 1; k <= 3; ++k)
            for (int m = 1; m <= 3; ++m) T(k - 1, m - 1) = spin_expectation(p, (1u << (k - 1)) | (1u << (3 + m - 1)));
        std::tie(r.value, r.detail) = detail::max_chsh_cartesian([&](int k, int m) { return T(k - 1, m - 1); });
        r.within_bound = r.value <= 2 + tol;
    } else if (mode == "cartesian_quantum") {
        if (!in.rho || in.rho->rows() != 4) throw domain_error("cartesian mode needs a two-qubit density matrix");
        RMat T(3, 3);
        for (int k = 1; k <= 3; ++k)
            for (int m = 1; m <= 3; ++m) T(k - 1, m - 1) = detail::two_qubit_corr(*in.rho, k, m);
        std::tie(r.value, r.detail) = detail::max_chsh_cartesian([&](int k, int m) { return T(k - 1, m - 1); });
        r.within_bound = r.value <= 2 + tol;
    } else if (mode == "pairwise_bound") {
        if (!in.rho || in.rho->rows() != 4) throw domain_error("pairwise mode needs a two-qubit density matrix");
        r.value = pairwise_bound_margin(*in.rho);
        r.within_bound = r.value >= -tol;
        r.detail = "minimum margin over (k,l)";
    } else if (mode == "arbitrary_directions") {
        if (!in.rho || in.rho->rows() != 4) throw domain_error("direction mode needs a two-qubit density matrix");
        auto sig = [](const RVec& d) { return Operator(d[0] * tau(1) + d[1] * tau(2) + d[2] * tau(3)); };
        auto E = [&](const RVec& a, const RVec& b) { return expectation(*in.rho, kron(sig(a), sig(b))); };
        const auto& d = in.directions;
        r.value = std::abs(E(d[0], d[2]) + E(d[0], d[3]) + E(d[1], d[2]) - E(d[1], d[3]));
        r.within_bound = r.value <= 2 + tol;
    } else {
        throw domain_error("unknown chsh mode: " + mode);
    }
    return r;
}

struct ChshOptimum {
    double value = 0;
    std::array<RVec, 4> directions;
};

namespace detail {

inline RVec unit_from_angles(double th, double ph) {
    RVec v(3);
    v << std::sin(th) * std::cos(ph), std::sin(th) * std::sin(ph), std::cos(th);
    return v;
}

inline double chsh_neg_value(const gsl_vector* x, void* params) {
    const Density& rho = *static_cast<const Density*>(params);
    ChshInputs in;
    in.rho = rho;
    for (int k = 0; k < 4; ++k) in.directions[k] = unit_from_angles(gsl_vector_get(x, 2 * k), gsl_vector_get(x, 2 * k + 1));
    return -chsh("arbitrary_directions", in).value;
}

}  // namespace detail

// Maximizes the arbitrary-direction CHSH value over the four unit vectors (Nelder-Mead, multistart).
inline ChshOptimum chsh_optimize_directions(const Density& rho, int restarts, std::uint64_t seed) {
    if (rho.rows() != 4) throw dimension_error("chsh_optimize_directions needs a two-qubit state");
    Philox g(seed);
    ChshOptimum best;
    gsl_multimin_function f{&detail::chsh_neg_value, 8, const_cast<Density*>(&rho)};
    for (int r = 0; r < std::max(1, restarts); ++r) {
        gsl_vector* x = gsl_vector_alloc(8);
        gsl_vector* step = gsl_vector_alloc(8);
        for (int i = 0; i < 8; ++i) gsl_vector_set(x, i, 2 * kPi * g.uniform());
        gsl_vector_set_all(step, 0.5);
        gsl_multimin_fminimizer* m = gsl_multimin_fminimizer_alloc(gsl_multimin_fminimizer_nmsimplex2, 8);
        gsl_multimin_fminimizer_set(m, &f, x, step);
        for (int it = 0; it < 20000; ++it) {
            if (gsl_multimin_fminimizer_iterate(m)) break;
            if (gsl_multimin_test_size(gsl_multimin_fminimizer_size(m), 1e-12) == GSL_SUCCESS) break;
        }
        double v = -m->fval;
        if (v > best.value) {
            best.value = v;
            for (int k = 0; k < 4; ++k)
                best.directions[k] = detail::unit_from_angles(gsl_vector_get(m->x, 2 * k), gsl_vector_get(m->x, 2 * k + 1));
        }
        gsl_multimin_fminimizer_free(m);
        gsl_vector_free(x);
        gsl_vector_free(step);
    }
    return best;
}

// ---- Kochen-Specker chains for three qubits ----

struct KochenSpeckerReport {
    bool chains_commute = false;
    double q_equals_fgh = 0;   // max |Q123 - F123 G123 H123|
    double q_plus_c = 0;       // max |Q123 + C123|
    double identities = 0;     // shared-operator identities F2=H2 etc.
    int assignments_checked = 0;
    int assignments_agreeing = 0;
    bool contradiction = false;
    std::string message;
};

inline Operator kron3(int a, int b, int c) { return kron(kron(tau(a), tau(b)), tau(c)); }

inline std::map<std::string, std::array<Operator, 7>> kochen_specker_chains() {
    auto chain = [](const Operator& a, const Operator& b, const Operator& c) {
        return std::array<Operator, 7>{a, b, c, a * b, a * c, b * c, a * b * c};
    };
    std::map<std::string, std::array<Operator, 7>> ch;
    ch["F"] = chain(kron3(3, 0, 0), kron3(0, 1, 0), kron3(0, 0, 1));
    ch["G"] = chain(kron3(1, 0, 0), kron3(0, 3, 0), kron3(0, 0, 1));
    ch["H"] = chain(kron3(1, 0, 0), kron3(0, 1, 0), kron3(0, 0, 3));
    ch["C"] = chain(kron3(3, 0, 0), kron3(0, 3, 0), kron3(0, 0, 3));
    ch["Q"] = {ch["F"][6], ch["G"][6], ch["H"][6], kron3(2, 2, 0), kron3(2, 0, 2), kron3(0, 2, 2), Operator(-kron3(3, 3, 3))};
    return ch;
}

inline KochenSpeckerReport kochen_specker_demo() {
    KochenSpeckerReport r;
    auto ch = kochen_specker_chains();
    auto maxabs = [](const Operator& m) { return m.cwiseAbs().maxCoeff(); };
    r.chains_commute = true;
    for (auto& [name, ops] : ch)
        for (int i = 0; i < 7; ++i)
            for (int j = 0; j < 7; ++j)
                if (maxabs(ops[i] * ops[j] - ops[j] * ops[i]) != 0) r.chains_commute = false;
    const auto &F = ch["F"], &G = ch["G"], &H = ch["H"], &C = ch["C"], &Q = ch["Q"];
    r.q_equals_fgh = maxabs(Q[6] - F[6] * G[6] * H[6]);
    r.q_plus_c = maxabs(Q[6] + C[6]);
    r.identities = std::max({maxabs(F[1] - H[1]), maxabs(F[2] - G[2]), maxabs(G[0] - H[0]), maxabs(F[0] - C[0]),
                             maxabs(G[1] - C[1]), maxabs(H[2] - C[2])});
    // Classical values: C1 C2 C3 and the shared spins F2 = H2, F3 = G3, G1 = H1.
    for (int bits = 0; bits < 64; ++bits) {
        auto v = [&](int i) { return bits >> i & 1 ? -1 : 1; };
        int c1 = v(0), c2 = v(1), c3 = v(2), f2 = v(3), f3 = v(4), g1 = v(5);
        int f123 = c1 * f2 * f3, g123 = g1 * c2 * f3, h123 = g1 * f2 * c3;
        int via_c = -c1 * c2 * c3;
        int via_fgh = f123 * g123 * h123;
        ++r.assignments_checked;
        if (via_c == via_fgh) ++r.assignments_agreeing;
    }
    r.contradiction = r.assignments_agreeing == 0;
    r.message = r.contradiction
                    ? "Q123 = -C123 assigns -C1C2C3 while Q123 = F123 G123 H123 assigns +C1C2C3; no sign assignment satisfies both"
                    : "no contradiction found";
    return r;
}

}  // namespace qembed
