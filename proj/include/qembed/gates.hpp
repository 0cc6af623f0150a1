#pragma once

#include "automaton.hpp"
#include "bitquantum.hpp"
#include "core.hpp"
#include "states.hpp"

#include <Eigen/Eigenvalues>

#include <map>
#include <optional>
#include <regex>

namespace qembed {

struct lookup_error : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct GateSpec {
    std::string name;
    Operator unitary;
    int qubits = 1;
};

namespace detail {

inline Operator mat2(cplx a, cplx b, cplx c, cplx d) {
    Operator m(2, 2);
    m << a, b, c, d;
    return m;
}

inline cplx parse_phase(std::string s) {
    s.erase(std::remove_if(s.begin(), s.end(), ::isspace), s.end());
    if (s == "1" || s == "+1") return 1.0;
    if (s == "-1") return -1.0;
    if (s == "i" || s == "+i") return I1;
    if (s == "-i") return -I1;
    try {
        std::size_t used = 0;
        double ang = std::stod(s, &used);
        if (used == s.size()) return std::exp(I1 * ang);
    } catch (...) {
    }
    throw lookup_error("bad phase token: " + s);
}

}  // namespace detail

// Two-qubit phase family, U^dag = [[0,a,0,0],[0,0,0,b],[c,0,0,0],[0,0,d,0]].
inline Operator phase_family(cplx a, cplx b, cplx c, cplx d) {
    Operator ud = Operator::Zero(4, 4);
    ud(0, 1) = a;
    ud(1, 3) = b;
    ud(2, 0) = c;
    ud(3, 2) = d;
    return ud.adjoint();
}

inline Operator one_qubit_gate(const std::string& n) {
    const double r = 1 / std::sqrt(2.0);
    using detail::mat2;
    if (n == "ID") return Operator::Identity(2, 2);
    if (n == "U31") return r * mat2(1, 1, -1, 1);
    if (n == "U13") return r * mat2(1, -1, 1, 1);
    if (n == "U12") return r * mat2(1.0 + I1, 0, 0, 1.0 - I1);
    if (n == "U21") return r * mat2(1.0 - I1, 0, 0, 1.0 + I1);
    if (n == "U23") return r * mat2(1, I1, I1, 1);
    if (n == "U32") return r * mat2(1, -I1, -I1, 1);
    if (n == "U1") return mat2(0, I1, I1, 0);
    if (n == "U2") return mat2(0, 1, -1, 0);
    if (n == "U3") return mat2(I1, 0, 0, -I1);
    if (n == "UH") return r * mat2(1, 1, 1, -1);
    if (n == "UT") return mat2(1, 0, 0, std::exp(I1 * (kPi / 4)));
    throw lookup_error("unknown gate: " + n);
}

// Names: one-qubit gates, "G:k" for gate G on qubit k of two, CNOT, SWAP, D3,
// Z1, Z2, ZZ, ID2 and PHASE(a,b,c,d) with tokens 1, -1, i, -i or an angle.
inline GateSpec gate(const std::string& name) {
    static const std::regex local(R"(^(\w+):([12])$)");
    static const std::regex phase(R"(^PHASE\(([^,]+),([^,]+),([^,]+),([^,]+)\)$)");
    std::smatch m;
    if (std::regex_match(name, m, local)) {
        Operator g = one_qubit_gate(m[1]);
        Operator id = Operator::Identity(2, 2);
        return {name, m[2] == "1" ? kron(g, id) : kron(id, g), 2};
    }
    if (std::regex_match(name, m, phase))
        return {name, phase_family(detail::parse_phase(m[1]), detail::parse_phase(m[2]), detail::parse_phase(m[3]), detail::parse_phase(m[4])), 2};
    Operator u = Operator::Zero(4, 4);
    if (name == "CNOT") {
        u(0, 0) = u(1, 1) = 1;
        u(2, 3) = u(3, 2) = 1;
    } else if (name == "SWAP") {
        u(0, 0) = u(3, 3) = 1;
        u(1, 2) = u(2, 1) = 1;
    } else if (name == "D3") {
        u.diagonal() << 1, 1, -1, 1;
    } else if (name == "Z1") {
        u = kron(tau(3), tau(0));
    } else if (name == "Z2") {
        u = kron(tau(0), tau(3));
    } else if (name == "ZZ") {
        u = kron(tau(3), tau(3));
    } else if (name == "ID2") {
        u = Operator::Identity(4, 4);
    } else {
        return {name, one_qubit_gate(name), 1};
    }
    return {name, u, 2};
}

inline const std::vector<std::string>& gate_catalog() {
    static const std::vector<std::string> v{"U12", "U23", "U31", "U21", "U1", "U2", "U3", "UH", "UT",
                                            "CNOT", "SWAP", "D3", "Z1", "Z2", "ZZ", "PHASE(1,1,1,1)",
                                            "PHASE(1,i,1,i)", "PHASE(1,1,1,-1)", "UH:1", "UT:2"};
    return v;
}

// Gate realized by a named chain updating: T12 -> U12, ..., TH -> UH.
inline std::string gate_for_transformation(const std::string& t) {
    static const std::map<std::string, std::string> m{{"T12", "U12"}, {"T23", "U23"}, {"T31", "U31"}, {"T1", "U1"},
                                                      {"T2", "U2"},   {"T3", "U3"},   {"TH", "UH"},   {"ID", "ID"}};
    auto it = m.find(t);
    if (it == m.end()) throw lookup_error("no gate for transformation " + t);
    return it->second;
}

inline Operator heisenberg(const Operator& u, const Operator& a) { return u.adjoint() * a * u; }

inline Density apply_sequence(const Density& rho, const std::vector<std::string>& names) {
    Density r = rho;
    for (const auto& n : names) {
        GateSpec g = gate(n);
        if (g.unitary.rows() != r.rows()) throw dimension_error("apply_sequence: gate " + n + " does not fit the register");
        r = apply_unitary(r, g.unitary);
    }
    return r;
}

// Real 8x8 form of a complex 4x4 matrix, [[C_R, -C_I], [C_I, C_R]].
inline RMat real_embedding(const Operator& c) {
    Eigen::Index n = c.rows();
    RMat r(2 * n, 2 * n);
    r << c.real(), -c.imag(), c.imag(), c.real();
    return r;
}

inline Operator from_real_embedding(const RMat& r) {
    Eigen::Index n = r.rows() / 2;
    return r.topLeftCorner(n, n).cast<cplx>() + I1 * r.bottomLeftCorner(n, n).cast<cplx>();
}

struct degenerate_input : std::domain_error {
    using std::domain_error::domain_error;
};

inline Density quantumness_gate(const RMat& a) {
    if (a.rows() != 8 || a.cols() != 8) throw dimension_error("quantumness_gate needs a real 8x8 matrix");
    RMat J = RMat::Zero(8, 8);
    J.topRightCorner(4, 4) = -RMat::Identity(4, 4);
    J.bottomLeftCorner(4, 4) = RMat::Identity(4, 4);
    RMat at = -J * a * J;
    RMat cbar = 0.5 * (a + at);
    Operator c = from_real_embedding(cbar);
    Operator cc = c * c.adjoint();
    double tr = cc.trace().real();
    if (!(tr > 1e-300)) throw degenerate_input("quantumness_gate: tr(C C^dag) = 0");
    Density rho = cc / tr;
    return 0.5 * (rho + rho.adjoint());
}

struct Hamiltonians {
    Operator H, Hbar, Gbar, J;
    bool branch_ambiguous = false;
};

// H = (i/eps) log U with det(U) normalized to 1; Hbar, Gbar, J from U and U(t - eps).
inline Hamiltonians effective_hamiltonian(const Operator& u, double eps, const std::optional<Operator>& u_prev = std::nullopt) {
    if (eps <= 0) throw domain_error("effective_hamiltonian: eps must be positive");
    if (unitarity_error(u) > 1e-12) throw contract_violation("effective_hamiltonian: U is not unitary");
    Eigen::Index n = u.rows();
    cplx det = u.determinant();
    Operator un = u * std::exp(-I1 * (std::arg(det) / double(n)));
    Eigen::ComplexSchur<Operator> schur(un);
    const Operator& T = schur.matrixT();
    const Operator& Z = schur.matrixU();
    Hamiltonians h;
    CVec phi(n);
    for (Eigen::Index k = 0; k < n; ++k) {
        double a = std::arg(T(k, k));
        if (std::abs(std::abs(a) - kPi) < 1e-9) {
            h.branch_ambiguous = true;
            a = kPi;
        }
        phi[k] = -a / eps;
    }
    h.H = Z * phi.asDiagonal() * Z.adjoint();
    h.H = (0.5 * (h.H + h.H.adjoint())).eval();
    Operator up = u_prev.value_or(u);
    h.Gbar = (I1 / (2 * eps)) * (u - up.adjoint());
    h.Hbar = (I1 / (4 * eps)) * (u + up - u.adjoint() - up.adjoint());
    h.J = (1 / (4 * eps)) * (u - up + u.adjoint() - up.adjoint());
    return h;
}

// Error of U = e^{i alpha} exp(-i eps H), minimized over the global phase alpha.
inline double hamiltonian_roundtrip_error(const Operator& u, const Operator& H, double eps) {
    Operator v = expi_hermitian(H, -eps);
    cplx ov = (v.adjoint() * u).trace();
    cplx ph = std::abs(ov) > 0 ? ov / std::abs(ov) : 1.0;
    return (u - ph * v).cwiseAbs().maxCoeff();
}

// Signed generator permutation: U^dag L_z U = sign[z] L_{image[z]}, if U is of that type.
struct GeneratorPermutation {
    std::vector<int> image, sign;
};

inline std::optional<GeneratorPermutation> generator_permutation(const Operator& u) {
    int Q = qubits_of_dim(u.rows());
    const auto& L = generators(Q);
    GeneratorPermutation gp{std::vector<int>(L.size()), std::vector<int>(L.size())};
    double d = double(u.rows());
    for (std::size_t z = 0; z < L.size(); ++z) {
        Operator h = heisenberg(u, L[z]);
        bool found = false;
        for (std::size_t w = 0; w < L.size() && !found; ++w) {
            double c = (h * L[w]).trace().real() / d;
            if (std::abs(std::abs(c) - 1) < 1e-10) {
                gp.image[z] = int(w);
                gp.sign[z] = c > 0 ? 1 : -1;
                found = true;
            }
        }
        if (!found) return std::nullopt;
    }
    return gp;
}

struct Realization {
    enum class Status { realizable, not_realizable, undetermined };
    Status status = Status::undetermined;
    std::optional<SpinMap> step;
    std::string note;
};

namespace detail {

inline bool declared_unrealizable(const std::string& gate_name, const std::string& map_name) {
    if (gate_name == "UT" && map_name == "one_qubit") return true;
    if ((gate_name == "CNOT" || gate_name == "D3") && map_name == "correlation_Q2") return true;
    return false;
}

}  // namespace detail

inline Realization automaton_realization(const std::string& gate_name, const BitQuantumMap& map) {
    GateSpec g = gate(gate_name);
    if (qubits_of_dim(g.unitary.rows()) != map.Q) throw dimension_error("gate and map qubit counts differ");
    Realization r;
    auto fail = [&](const std::string& why) {
        r.status = detail::declared_unrealizable(gate_name, map.name()) ? Realization::Status::not_realizable : Realization::Status::undetermined;
        r.note = why;
        return r;
    };
    auto gp = generator_permutation(g.unitary);
    if (!gp) return fail("Heisenberg images are not single generators");
    SpinMap sm = SpinMap::identity(map.n_spins);
    if (map.kind == MapKind::correlation) {
        // Single-spin generators must map to single spins, particle blocks preserved.
        std::vector<int> owner(map.Q, -1);
        for (int i = 0; i < map.Q; ++i)
            for (int k = 1; k <= 3; ++k) {
                std::vector<int> d(map.Q, 0);
                d[i] = k;
                int z = generator_number(d);
                auto dd = generator_digits(gp->image[z], map.Q);
                int nz = 0, pos = -1;
                for (int j = 0; j < map.Q; ++j)
                    if (dd[j]) ++nz, pos = j;
                if (nz != 1) return fail("a spin is mapped to a correlation");
                if (owner[i] == -1) owner[i] = pos;
                if (owner[i] != pos) return fail("spins of one particle are split");
                sm.sign[3 * i + k - 1] = gp->sign[z];
                sm.mask[3 * i + k - 1] = 1u << (3 * pos + dd[pos] - 1);
            }
    } else {
        for (std::size_t z = 1; z < gp->image.size(); ++z) {
            sm.sign[z - 1] = gp->sign[z];
            sm.mask[z - 1] = 1u << (gp->image[z] - 1);
        }
    }
    // Confirm every assigned observable transforms as the conjugated generator.
    for (std::size_t z = 1; z < gp->image.size(); ++z) {
        int sgn = 1;
        std::uint32_t m = 0;
        for (int j = 0; j < map.n_spins; ++j)
            if (map.masks[z - 1] >> j & 1u) {
                sgn *= sm.sign[j];
                m ^= sm.mask[j];
            }
        if (gp->image[z] == 0 || m != map.masks[gp->image[z] - 1] || sgn != gp->sign[z])
            return fail("composite observable does not follow the generator map");
    }
    r.status = Realization::Status::realizable;
    r.step = sm;
    return r;
}

// Random distribution obeying the quantum constraint for the given map.
inline Distribution random_constrained_distribution(const BitQuantumMap& map, Philox& g) {
    Density rho = random_density(map.Q, g);
    RVec b = bloch_of(rho);
    if (map.kind == MapKind::average_spin) return Distribution::product(std::vector<double>(b.data(), b.data() + b.size()));
    if (map.kind == MapKind::one_qubit) {
        // Product measure plus random higher correlations, scaled to stay nonnegative.
        double c[4] = {g.uniform() * 2 - 1, g.uniform() * 2 - 1, g.uniform() * 2 - 1, g.uniform() * 2 - 1};
        const std::uint32_t cm[4] = {3u, 5u, 6u, 7u};
        Distribution base{3, RVec(8)}, extra{3, RVec(8)};
        for (Config t = 0; t < 8; ++t) {
            base.p[t] = (1 + b[0] * spin_value(t, 0, 3) + b[1] * spin_value(t, 1, 3) + b[2] * spin_value(t, 2, 3)) / 8;
            double e = 0;
            for (int k = 0; k < 4; ++k) e += c[k] * spin_product(t, cm[k], 3);
            extra.p[t] = e / 8;
        }
        double lam = 1;
        for (Config t = 0; t < 8; ++t)
            if (extra.p[t] < 0) lam = std::min(lam, base.p[t] / -extra.p[t]);
        lam *= g.uniform();
        return {3, base.p + lam * extra.p};
    }
    auto res = solve_distribution(rho, map, 10, g.next_u64());
    return res.wave.distribution();
}

// Max deviation of map(step p) from U map(p) U^dag over random constrained p.
inline double verify_realization(const std::string& gate_name, const BitQuantumMap& map, const SpinMap& sm, int cases,
                                 std::uint64_t seed) {
    GateSpec g = gate(gate_name);
    StepOperator st = sm.step();
    double worst = 0;
    Philox rng(seed);
    for (int c = 0; c < cases; ++c) {
        Distribution p = random_constrained_distribution(map, rng);
        Density lhs = apply_map(evolve_distribution(p, st), map);
        Density rhs = apply_unitary(apply_map(p, map), g.unitary);
        worst = std::max(worst, (lhs - rhs).cwiseAbs().maxCoeff());
    }
    return worst;
}

// Icosahedron spin set: S_{1+-} = (a,0,+-b), S_{2+-} = (+-b,a,0), S_{3+-} = (0,+-b,a).
struct Icosahedron {
    static double a() { return std::sqrt((1 + std::sqrt(5.0)) / (2 * std::sqrt(5.0))); }
    static double b() { return std::sqrt(2 / (5 + std::sqrt(5.0))); }
    static std::vector<RVec> directions() {
        double A = a(), B = b();
        std::vector<RVec> d(6, RVec(3));
        d[0] << A, 0, B;
        d[1] << A, 0, -B;
        d[2] << B, A, 0;
        d[3] << -B, A, 0;
        d[4] << 0, B, A;
        d[5] << 0, -B, A;
        return d;
    }
    // <s_{k+-}> for a one-qubit state, ordered 1+, 1-, 2+, 2-, 3+, 3-.
    static RVec expectations(const Density& rho) {
        RVec r = bloch_of(rho), out(6);
        auto d = directions();
        for (int i = 0; i < 6; ++i) out[i] = d[i].dot(r);
        return out;
    }
};

struct LearnerConfig {
    int m = 15;
    int n_train = 256;
    int epochs = 4000;
    double learning_rate = 0.5;
    double momentum = 0.9;
    std::uint64_t seed = 1;
    int batch = 64;
};

struct LearnerResult {
    double final_loss = 0;
    double oracle_floor = 0;
    std::vector<std::pair<int, double>> loss_curve;
};

// Training pairs: vec(rho_bar) -> vec(U_bar rho_bar U_bar^T) for quantumness-gate states.
inline void learner_data(const Operator& u, int n, std::uint64_t seed, RMat& X, RMat& Y) {
    Philox g(seed);
    RMat ub = real_embedding(u);
    X.resize(64, n);
    Y.resize(64, n);
    for (int i = 0; i < n; ++i) {
        RMat a(8, 8);
        for (int r = 0; r < 8; ++r)
            for (int c = 0; c < 8; ++c) a(r, c) = g.normal();
        RMat rb = real_embedding(quantumness_gate(a));
        RMat out = ub * rb * ub.transpose();
        X.col(i) = Eigen::Map<const RVec>(rb.data(), 64);
        Y.col(i) = Eigen::Map<const RVec>(out.data(), 64);
    }
}

// Best affine rank-m fit of the targets: (1/N) sum_{i>m} s_i^2 of centered Y.
inline double learner_oracle_floor(const RMat& Y, int m) {
    RMat yc = Y.colwise() - Y.rowwise().mean();
    Eigen::JacobiSVD<RMat> svd(yc);
    const RVec& s = svd.singularValues();
    double f = 0;
    for (Eigen::Index i = m; i < s.size(); ++i) f += s[i] * s[i];
    return f / double(Y.cols());
}

// Linear 64 -> m -> 64 network with biases acting on mean-shifted inputs;
// full-batch heavy-ball descent, gradient accumulated over 64-sample chunks.
inline LearnerResult train_bottleneck(const std::string& gate_name, const LearnerConfig& cfg) {
    if (cfg.m < 1) throw domain_error("bottleneck m must be >= 1");
    GateSpec gs = gate(gate_name);
    if (gs.qubits != 2) throw domain_error("learner needs a two-qubit gate");
    RMat X, Y;
    learner_data(gs.unitary, cfg.n_train, cfg.seed, X, Y);
    X = X.colwise() - X.rowwise().mean();
    LearnerResult res;
    res.oracle_floor = learner_oracle_floor(Y, cfg.m);

    Philox g(derive_seed(cfg.seed, 99));
    RMat W1(cfg.m, 64), W2(64, cfg.m);
    for (Eigen::Index i = 0; i < W1.size(); ++i) W1.data()[i] = 0.1 * g.normal();
    for (Eigen::Index i = 0; i < W2.size(); ++i) W2.data()[i] = 0.1 * g.normal();
    RVec b1 = RVec::Zero(cfg.m), b2 = RVec::Zero(64);
    RMat vW1 = RMat::Zero(W1.rows(), W1.cols()), vW2 = RMat::Zero(W2.rows(), W2.cols());
    RVec vb1 = RVec::Zero(b1.size()), vb2 = RVec::Zero(b2.size());
    const double N = double(cfg.n_train);
    auto loss_of = [&]() {
        RMat out = (W2 * ((W1 * X).colwise() + b1)).colwise() + b2;
        return (out - Y).squaredNorm() / N;
    };
    for (int ep = 0; ep < cfg.epochs; ++ep) {
        RMat gW1 = RMat::Zero(W1.rows(), W1.cols()), gW2 = RMat::Zero(W2.rows(), W2.cols());
        RVec gb1 = RVec::Zero(b1.size()), gb2 = RVec::Zero(b2.size());
        double loss = 0;
        for (int s = 0; s < cfg.n_train; s += cfg.batch) {
            int nb = std::min(cfg.batch, cfg.n_train - s);
            auto xb = X.middleCols(s, nb);
            RMat h = (W1 * xb).colwise() + b1;
            RMat e = ((W2 * h).colwise() + b2) - Y.middleCols(s, nb);
            loss += e.squaredNorm();
            RMat de = (2.0 / N) * e;
            gW2 += de * h.transpose();
            gb2 += de.rowwise().sum();
            RMat dh = W2.transpose() * de;
            gW1 += dh * xb.transpose();
            gb1 += dh.rowwise().sum();
        }
        loss /= N;
        if (!std::isfinite(loss)) throw numerical_error("learner diverged; lower the learning rate");
        if (ep % 100 == 0) res.loss_curve.push_back({ep, loss});
        vW1 = cfg.momentum * vW1 - cfg.learning_rate * gW1;
        vW2 = cfg.momentum * vW2 - cfg.learning_rate * gW2;
        vb1 = cfg.momentum * vb1 - cfg.learning_rate * gb1;
        vb2 = cfg.momentum * vb2 - cfg.learning_rate * gb2;
        W1 += vW1;
        W2 += vW2;
        b1 += vb1;
        b2 += vb2;
    }
    res.final_loss = loss_of();
    res.loss_curve.push_back({cfg.epochs, res.final_loss});
    return res;
}

}  // namespace qembed
