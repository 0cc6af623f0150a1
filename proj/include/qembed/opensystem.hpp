#pragma once

#include "core.hpp"

#include <optional>

namespace qembed {

// T = (1/sqrt2) [[1,0,0,-1],[0,1,0,0],[0,0,1,0],[-1,0,0,-1]]. T^2 = 1 holds on the
// |uu>, |dd> block only; the middle block squares to 1/2.
inline Operator decoherence_T() {
    Operator t = Operator::Zero(4, 4);
    t(0, 0) = 1;
    t(0, 3) = -1;
    t(1, 1) = 1;
    t(2, 2) = 1;
    t(3, 0) = -1;
    t(3, 3) = -1;
    return t / std::sqrt(2.0);
}

// Full Hamiltonian -omega T, plus an optional one-body term h acting on the first qubit.
inline Operator full_hamiltonian(double omega, const std::optional<Operator>& h_extra = std::nullopt) {
    Operator H = -omega * decoherence_T();
    if (h_extra) H += kron(*h_extra, tau(0));
    return H;
}

// exp(i omega t T); equals cos(omega t) + i sin(omega t) T on the |uu>, |dd> block.
inline Operator full_unitary(double t, double omega, const std::optional<Operator>& h_extra = std::nullopt) {
    return expi_hermitian(full_hamiltonian(omega, h_extra), -t);
}

inline Density full_evolution(const Density& rho4, double t, double omega, const std::optional<Operator>& h_extra = std::nullopt) {
    if (rho4.rows() != 4) throw dimension_error("full_evolution needs a two-qubit density matrix");
    return apply_unitary(rho4, full_unitary(t, omega, h_extra));
}

struct SubsystemGenerator {
    Operator Hbar;
    Operator F;
    double A = 0;
    cplx B = 0;
};

// Element rho_{alpha gamma, beta delta} with 1-based labels; row index 2(alpha-1) + (gamma-1).
inline cplx pair_element(const Density& rho4, int a, int g, int b, int d) { return rho4(2 * (a - 1) + (g - 1), 2 * (b - 1) + (d - 1)); }

inline SubsystemGenerator subsystem_generator(const Density& rho4, double omega, const std::optional<Operator>& h_extra = std::nullopt) {
    if (rho4.rows() != 4) throw dimension_error("subsystem_generator needs a two-qubit density matrix");
    SubsystemGenerator g;
    g.Hbar = -(omega / (2 * std::sqrt(2.0))) * tau(3);
    if (h_extra) g.Hbar += *h_extra;
    g.A = -std::sqrt(2.0) * omega * pair_element(rho4, 1, 1, 2, 2).imag();
    g.B = (I1 * omega / std::sqrt(2.0)) *
          (pair_element(rho4, 1, 2, 1, 1) + pair_element(rho4, 1, 2, 2, 2) - pair_element(rho4, 1, 1, 2, 1) - pair_element(rho4, 2, 2, 2, 1));
    g.F.resize(2, 2);
    g.F << g.A, g.B, std::conj(g.B), -g.A;
    return g;
}

inline Density subsystem_rate(const Density& rho_bar, const SubsystemGenerator& g) {
    return -I1 * (g.Hbar * rho_bar - rho_bar * g.Hbar) + g.F;
}

// d(rho_k rho_k)/dt = 4 (rho1 Re B - rho2 Im B + rho3 A).
inline double purity_rate(const Density& rho_bar, double A, cplx B) {
    if (rho_bar.rows() != 2) throw dimension_error("purity_rate needs a one-qubit density matrix");
    double r1 = 2 * rho_bar(0, 1).real(), r2 = -2 * rho_bar(0, 1).imag(), r3 = (rho_bar(0, 0) - rho_bar(1, 1)).real();
    return 4 * (r1 * B.real() - r2 * B.imag() + r3 * A);
}

inline double bloch_purity(const Density& rho_bar) {
    return 4 * std::norm(rho_bar(0, 1)) + std::pow((rho_bar(0, 0) - rho_bar(1, 1)).real(), 2);
}

struct DecoherencePoint {
    double t, P, rho1, rho2, rho3, A, ReB, ImB;
};

inline std::vector<DecoherencePoint> decoherence_trajectory(const Density& rho4_0, double omega, double t_max, int n_points,
                                                           const std::optional<Operator>& h_extra = std::nullopt) {
    if (n_points < 2) throw domain_error("need at least two trajectory points");
    std::vector<DecoherencePoint> out;
    for (int i = 0; i < n_points; ++i) {
        double t = t_max * i / (n_points - 1);
        Density r4 = full_evolution(rho4_0, t, omega, h_extra);
        Density rb = partial_trace(r4, 1);
        auto g = subsystem_generator(r4, omega, h_extra);
        out.push_back({t, bloch_purity(rb), 2 * rb(0, 1).real(), -2 * rb(0, 1).imag(), (rb(0, 0) - rb(1, 1)).real(), g.A, g.B.real(), g.B.imag()});
    }
    return out;
}

}  // namespace qembed
