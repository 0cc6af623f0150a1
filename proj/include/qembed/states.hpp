#pragma once

#include "automaton.hpp"
#include "core.hpp"
#include "rng.hpp"

namespace qembed {

inline Operator ginibre(Eigen::Index n, Philox& g) {
    Operator c(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < n; ++j) c(i, j) = cplx(g.normal(), g.normal());
    return c;
}

// Hilbert-Schmidt random density matrix, rho = C C^dag / tr(C C^dag).
inline Density random_density(int Q, Philox& g) {
    Operator c = ginibre(Eigen::Index(1) << Q, g);
    Density r = c * c.adjoint();
    r /= r.trace().real();
    return 0.5 * (r + r.adjoint());
}

inline CVec random_pure(int Q, Philox& g) {
    CVec v(Eigen::Index(1) << Q);
    for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = cplx(g.normal(), g.normal());
    return v / v.norm();
}

// Haar-random unitary via QR with phase fix.
inline Operator random_unitary(Eigen::Index n, Philox& g) {
    Operator c = ginibre(n, g);
    Eigen::HouseholderQR<Operator> qr(c);
    Operator q = qr.householderQ();
    Operator r = qr.matrixQR().triangularView<Eigen::Upper>();
    for (Eigen::Index k = 0; k < n; ++k) {
        cplx d = r(k, k);
        q.col(k) *= d / std::abs(d);
    }
    return q;
}

inline RVec random_unit3(Philox& g) {
    RVec v(3);
    do {
        v << g.normal(), g.normal(), g.normal();
    } while (v.norm() < 1e-12);
    return v / v.norm();
}

// Basis order up-up, up-down, down-up, down-down.
inline CVec singlet() {
    CVec v(4);
    v << 0, 1, -1, 0;
    return v / std::sqrt(2.0);
}

inline CVec psi_plus() {
    CVec v(4);
    v << 1, 0, 0, 1;
    return v / std::sqrt(2.0);
}

inline CVec ghz3() {
    CVec v = CVec::Zero(8);
    v[0] = v[7] = 1 / std::sqrt(2.0);
    return v;
}

// (1 x exp(i pi tau2 / 8)) applied to (|uu> + |dd>)/sqrt2.
inline CVec rotated_bell() { return kron(Operator::Identity(2, 2), expi_hermitian(tau(2), kPi / 8)) * psi_plus(); }

// Random distribution over n spins: Dirichlet weights sharpened by a random exponent,
// so samples range from near-uniform to near-deterministic.
inline Distribution random_distribution(int n, Philox& g) {
    static const double sharp[3] = {1, 5, 20};
    double a = sharp[g.next_u64() % 3];
    Distribution d{n, RVec(Eigen::Index(std::size_t(1) << n))};
    for (Eigen::Index t = 0; t < d.p.size(); ++t) d.p[t] = std::pow(-std::log(1 - g.uniform()), a);
    d.p /= d.p.sum();
    return d;
}

}  // namespace qembed
