#pragma once

#include <Eigen/Dense>
#include <algorithm>

#include <cmath>
#include <complex>
#include <stdexcept>
#include <string>
#include <vector>

namespace qembed {

using cplx = std::complex<double>;
using Operator = Eigen::MatrixXcd;
using Density = Eigen::MatrixXcd;
using CVec = Eigen::VectorXcd;
using RVec = Eigen::VectorXd;
using RMat = Eigen::MatrixXd;

inline constexpr cplx I1{0.0, 1.0};
inline constexpr double kPi = 3.14159265358979323846;

struct domain_error : std::domain_error {
    using std::domain_error::domain_error;
};
struct dimension_error : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};
struct contract_violation : std::logic_error {
    using std::logic_error::logic_error;
};
struct numerical_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Pauli matrices, tau_0 = 1.
inline Operator tau(int mu) {
    Operator t(2, 2);
    switch (mu) {
    case 0: t << 1, 0, 0, 1; break;
    case 1: t << 0, 1, 1, 0; break;
    case 2: t << 0, -I1, I1, 0; break;
    case 3: t << 1, 0, 0, -1; break;
    default: throw domain_error("tau index out of range: " + std::to_string(mu));
    }
    return t;
}

inline Operator kron(const Operator& a, const Operator& b) {
    Operator r(a.rows() * b.rows(), a.cols() * b.cols());
    for (Eigen::Index i = 0; i < a.rows(); ++i)
        for (Eigen::Index j = 0; j < a.cols(); ++j)
            r.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    return r;
}

inline Operator tensor_generator(const std::vector<int>& idx) {
    if (idx.empty()) throw domain_error("tensor_generator: empty index string");
    Operator r = tau(idx[0]);
    for (std::size_t k = 1; k < idx.size(); ++k) r = kron(r, tau(idx[k]));
    return r;
}

// Generator number z in [0, 4^Q) <-> digits (mu_1..mu_Q), mu_1 most significant.
inline std::vector<int> generator_digits(int z, int Q) {
    std::vector<int> d(Q);
    for (int k = Q - 1; k >= 0; --k) {
        d[k] = z % 4;
        z /= 4;
    }
    return d;
}

inline int generator_number(const std::vector<int>& d) {
    int z = 0;
    for (int mu : d) z = 4 * z + mu;
    return z;
}

inline std::string generator_label(int z, int Q) {
    std::string s;
    for (int mu : generator_digits(z, Q)) s += char('0' + mu);
    return s;
}

inline int qubits_of_dim(Eigen::Index dim) {
    int q = 0;
    while ((Eigen::Index(1) << q) < dim) ++q;
    if ((Eigen::Index(1) << q) != dim || q == 0) throw dimension_error("dimension is not 2^Q");
    return q;
}

inline int pow4(int Q) { return 1 << (2 * Q); }

// Generators for Q qubits cached per Q; index 0 is the identity.
inline const std::vector<Operator>& generators(int Q) {
    static thread_local std::vector<std::vector<Operator>> cache(7);
    if (Q < 1 || Q > 6) throw domain_error("generators: Q outside 1..6");
    auto& g = cache[Q];
    if (g.empty()) {
        g.reserve(pow4(Q));
        for (int z = 0; z < pow4(Q); ++z) g.push_back(tensor_generator(generator_digits(z, Q)));
    }
    return g;
}

// Bloch vector: components for generators 1 .. 4^Q - 1 in base-4 order.
inline Density from_bloch(const RVec& b) {
    int n = int(b.size()) + 1;
    int Q = 0;
    while (pow4(Q) < n) ++Q;
    if (Q == 0 || pow4(Q) != n) throw dimension_error("from_bloch: component count is not 4^Q - 1");
    const auto& L = generators(Q);
    Density rho = L[0];
    for (int z = 1; z < n; ++z) rho += b[z - 1] * L[z];
    return rho / double(1 << Q);
}

inline RVec bloch_of(const Density& rho) {
    int Q = qubits_of_dim(rho.rows());
    const auto& L = generators(Q);
    RVec b(pow4(Q) - 1);
    for (int z = 1; z < pow4(Q); ++z) b[z - 1] = (rho * L[z]).trace().real();
    return b;
}

inline double hermiticity_error(const Operator& a) { return (a - a.adjoint()).cwiseAbs().maxCoeff(); }

inline double unitarity_error(const Operator& u) {
    return (u.adjoint() * u - Operator::Identity(u.rows(), u.cols())).cwiseAbs().maxCoeff();
}

struct PositivityReport {
    double min_eigenvalue = 0;
    double purity = 0;  // tr rho^2
    bool pure = false;
};

inline PositivityReport check_positive(const Density& rho, double tol = 1e-10) {
    if (rho.rows() != rho.cols()) throw dimension_error("check_positive: not square");
    if (hermiticity_error(rho) > std::max(tol, 1e-12)) throw contract_violation("check_positive: not Hermitian");
    Eigen::SelfAdjointEigenSolver<Operator> es(rho, Eigen::EigenvaluesOnly);
    PositivityReport r;
    r.min_eigenvalue = es.eigenvalues().minCoeff();
    r.purity = (rho * rho).trace().real();
    r.pure = std::abs(r.purity - 1.0) <= tol;
    return r;
}

inline bool is_valid_density(const Density& rho, double tol = 1e-10) {
    if (rho.rows() != rho.cols()) return false;
    if (hermiticity_error(rho) > 1e-12 || std::abs(rho.trace() - 1.0) > 1e-12) return false;
    Eigen::SelfAdjointEigenSolver<Operator> es(rho, Eigen::EigenvaluesOnly);
    return es.eigenvalues().minCoeff() >= -tol;
}

inline double expectation(const Density& rho, const Operator& a) {
    if (rho.rows() != a.rows() || rho.cols() != a.cols()) throw dimension_error("expectation: dimension mismatch");
    return (rho * a).trace().real();
}

inline Density apply_unitary(const Density& rho, const Operator& u) {
    if (rho.rows() != u.rows()) throw dimension_error("apply_unitary: dimension mismatch");
    if (unitarity_error(u) > 1e-12) throw contract_violation("apply_unitary: U is not unitary");
    return u * rho * u.adjoint();
}

// Trace out all factors except `keep` (1-based) of a Q-qubit matrix.
inline Density partial_trace(const Density& rho, int keep) {
    int Q = qubits_of_dim(rho.rows());
    if (keep < 1 || keep > Q) throw domain_error("partial_trace: bad subsystem index");
    int shift = Q - keep;
    Eigen::Index n = rho.rows();
    Density r = Density::Zero(2, 2);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < n; ++j) {
            Eigen::Index mi = i & ~(Eigen::Index(1) << shift), mj = j & ~(Eigen::Index(1) << shift);
            if (mi != mj) continue;
            r((i >> shift) & 1, (j >> shift) & 1) += rho(i, j);
        }
    return r;
}

// Square root of a positive semidefinite Hermitian matrix; negative eigenvalues clamped.
inline Operator psd_sqrt(const Operator& a) {
    Eigen::SelfAdjointEigenSolver<Operator> es(a);
    RVec ev = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
    return es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().adjoint();
}

inline double fidelity(const Density& rho, const Density& sigma, double tol = 1e-10) {
    if (rho.rows() != sigma.rows()) throw dimension_error("fidelity: dimension mismatch");
    for (const Density* m : {&rho, &sigma}) {
        Eigen::SelfAdjointEigenSolver<Operator> es(*m);
        if (es.eigenvalues().minCoeff() < -tol) throw contract_violation("fidelity: negative eigenvalue");
        // Rank-one argument: closed form avoids square roots of rounding noise.
        const Eigen::Index n = m->rows();
        if (n > 1 && std::abs(es.eigenvalues()[n - 2]) < 1e-13) {
            const Density& other = m == &rho ? sigma : rho;
            CVec v = es.eigenvectors().col(n - 1);
            double f = es.eigenvalues()[n - 1] * (v.adjoint() * other * v)(0, 0).real();
            return std::clamp(f, 0.0, 1.0);
        }
    }
    Operator s = psd_sqrt(rho);
    Operator m = s * sigma * s;
    m = (0.5 * (m + m.adjoint())).eval();
    Eigen::SelfAdjointEigenSolver<Operator> es(m, Eigen::EigenvaluesOnly);
    double t = es.eigenvalues().cwiseMax(0.0).cwiseSqrt().sum();
    return std::min(1.0, t * t);
}

inline Density pure_density(const CVec& psi) {
    CVec v = psi / psi.norm();
    return v * v.adjoint();
}

// One-qubit spin operator S_k^{(i)} (1-based i) inside a Q-qubit register.
inline Operator spin_operator(int k, int i, int Q) {
    std::vector<int> d(Q, 0);
    d[i - 1] = k;
    return tensor_generator(d);
}

// Matrix exponential exp(i a H) for Hermitian H via eigendecomposition.
inline Operator expi_hermitian(const Operator& h, double a) {
    Eigen::SelfAdjointEigenSolver<Operator> es(0.5 * (h + h.adjoint()));
    CVec ph(h.rows());
    for (Eigen::Index k = 0; k < h.rows(); ++k) ph[k] = std::exp(I1 * (a * es.eigenvalues()[k]));
    return es.eigenvectors() * ph.asDiagonal() * es.eigenvectors().adjoint();
}

inline double trace_distance(const Density& a, const Density& b) {
    Operator d = a - b;
    d = (0.5 * (d + d.adjoint())).eval();
    Eigen::SelfAdjointEigenSolver<Operator> es(d, Eigen::EigenvaluesOnly);
    return 0.5 * es.eigenvalues().cwiseAbs().sum();
}

}  // namespace qembed
