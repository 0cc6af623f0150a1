#pragma once

#include "core.hpp"
#include "parallel.hpp"
#include "rng.hpp"

#include <gsl/gsl_integration.h>

#include <functional>
#include <map>
#include <memory>

namespace qembed {

namespace detail {

// Fixed n-point Gauss-Legendre rule on [a, b].
template <class F>
double gauss_legendre(F&& f, double a, double b, int n = 256) {
    struct Del {
        void operator()(gsl_integration_glfixed_table* t) const { gsl_integration_glfixed_table_free(t); }
    };
    static thread_local std::map<int, std::unique_ptr<gsl_integration_glfixed_table, Del>> tables;
    auto& t = tables[n];
    if (!t) t.reset(gsl_integration_glfixed_table_alloc(n));
    double s = 0;
    for (int i = 0; i < n; ++i) {
        double x, w;
        gsl_integration_glfixed_point(a, b, std::size_t(i), &x, &w, t.get());
        s += w * f(x);
    }
    return s;
}

}  // namespace detail

// s(e; f) = Theta(e.f) - Theta(-e.f); zero measure boundary counts as +1.
inline int direction_spin(const RVec& e, const RVec& f) {
    if (e.size() != f.size()) throw dimension_error("direction_spin: size mismatch");
    return e.dot(f) >= 0 ? 1 : -1;
}

// Cartesian half-circle spins and the four-bin labels I..IV.
inline int circle_s1(double phi) { return std::cos(phi) >= 0 ? 1 : -1; }
inline int circle_s2(double phi) { return std::sin(phi) >= 0 ? 1 : -1; }
inline int circle_bin(double phi) {
    int s1 = circle_s1(phi), s2 = circle_s2(phi);
    return s1 > 0 ? (s2 > 0 ? 1 : 2) : (s2 > 0 ? 3 : 4);
}

// ---- quantum clock ----

struct ClockState {
    double beta = 0;
    double omega = 1;
};

inline double clock_density(const ClockState& s, double phi) {
    double c = std::cos(phi - s.beta);
    return c > 0 ? 0.5 * c : 0.0;
}

// <s(psi)> = int dphi p_beta(phi) [Theta(cos(phi - psi)) - Theta(-cos(phi - psi))].
inline double clock_expectation(const ClockState& s, double psi) {
    double a = s.beta - kPi / 2, b = s.beta + kPi / 2;
    std::vector<double> cuts{a, b};
    for (int m = -3; m <= 3; ++m)
        for (double off : {kPi / 2, -kPi / 2}) {
            double c = psi + off + 2 * kPi * m;
            if (c > a && c < b) cuts.push_back(c);
        }
    std::sort(cuts.begin(), cuts.end());
    double total = 0;
    for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
        double lo = cuts[i], hi = cuts[i + 1];
        double mid = 0.5 * (lo + hi);
        int sg = std::cos(mid - psi) >= 0 ? 1 : -1;
        total += sg * detail::gauss_legendre([&](double phi) { return clock_density(s, phi); }, lo, hi);
    }
    return total;
}

inline ClockState clock_evolve(const ClockState& s, double dt) { return {s.beta + s.omega * dt, s.omega}; }

// rho = (1 + cos(beta) tau1 + sin(beta) tau3) / 2.
inline Density clock_density_matrix(const ClockState& s) {
    return 0.5 * (Operator::Identity(2, 2) + std::cos(s.beta) * tau(1) + std::sin(s.beta) * tau(3));
}

inline Operator clock_unitary(double omega, double t) { return expi_hermitian(tau(2), omega * t / 2); }

// ---- sphere model ----

struct RadialProfile {
    std::string name;
    bool shell = false;                 // unit-shell delta at r = 1
    std::function<double(double)> w;    // unnormalized weight for continuous profiles
    double rmax = 0;

    static RadialProfile unit_shell() { return {"shell", true, nullptr, 1}; }
    static RadialProfile gaussian() { return {"gaussian", false, [](double r) { return std::exp(-r * r / 2); }, 14}; }
    static RadialProfile parse(const std::string& s) {
        if (s == "shell") return unit_shell();
        if (s == "gaussian") return gaussian();
        throw domain_error("unknown radial profile: " + s);
    }

    // int_0^inf r^3 w(r) dr
    double third_moment() const {
        if (shell) return 1;
        return detail::gauss_legendre([&](double r) { return r * r * r * w(r); }, 0, rmax);
    }
    // c with p_bar = c w normalized to int d^3phi p = 1, i.e. pi c M3 = 1.
    double normalization() const { return 1 / (kPi * third_moment()); }
};

struct SphereState {
    RVec rho;
    RadialProfile profile = RadialProfile::unit_shell();
};

namespace detail {

// Integrand over polar angle theta (axis along rho) after the azimuthal integral
// of sgn(sin(theta) sin(alpha) cos(phi) + cos(theta) cos(alpha)).
inline double sphere_theta_integrand(double theta, double alpha) {
    double st = std::sin(theta), ct = std::cos(theta), sa = std::sin(alpha), ca = std::cos(alpha);
    double az;
    if (std::abs(st * sa) < 1e-300) {
        az = ct * ca >= 0 ? 2 * kPi : -2 * kPi;
    } else {
        double c = -ct * ca / (st * sa);
        if (c <= -1) az = 2 * kPi;
        else if (c >= 1) az = -2 * kPi;
        else az = 4 * std::acos(c) - 2 * kPi;
    }
    return ct * st * az;
}

}  // namespace detail

inline double sphere_expectation_quadrature(const SphereState& s, const RVec& e) {
    if (std::abs(e.norm() - 1) > 1e-12 || e.size() != 3) throw domain_error("e must be a 3d unit vector");
    if (std::abs(s.rho.norm() - 1) > 1e-12) throw domain_error("rho must be a unit vector");
    double alpha = std::acos(std::clamp(s.rho.dot(e), -1.0, 1.0));
    double kink = std::abs(kPi / 2 - alpha);
    auto f = [&](double th) { return detail::sphere_theta_integrand(th, alpha); };
    double ang = 0;
    if (kink > 0 && kink < kPi / 2) {
        // u^2 substitution on both sides of the kink removes the square-root behaviour.
        ang += detail::gauss_legendre([&](double u) { return f(kink - kink * u * u) * 2 * kink * u; }, 0, 1);
        double L = kPi / 2 - kink;
        ang += detail::gauss_legendre([&](double u) { return f(kink + L * u * u) * 2 * L * u; }, 0, 1);
    } else {
        ang = detail::gauss_legendre(f, 0, kPi / 2);
    }
    return s.profile.normalization() * s.profile.third_moment() * ang;
}

struct MonteCarloEstimate {
    double mean = 0, stderr_ = 0;
    std::size_t n = 0;
};

// Samples phi from p(rho; phi): cos(theta) = sqrt(U) about rho, uniform azimuth,
// radius from r^3 p_bar(r).
inline MonteCarloEstimate sphere_expectation_mc(const SphereState& s, const RVec& e, std::size_t n, std::uint64_t seed) {
    if (std::abs(e.norm() - 1) > 1e-12 || e.size() != 3) throw domain_error("e must be a 3d unit vector");
    RVec z = s.rho / s.rho.norm();
    RVec tmp = std::abs(z[0]) < 0.9 ? RVec::Unit(3, 0) : RVec::Unit(3, 1);
    RVec x = (tmp - tmp.dot(z) * z).normalized();
    RVec y(3);
    y << z[1] * x[2] - z[2] * x[1], z[2] * x[0] - z[0] * x[2], z[0] * x[1] - z[1] * x[0];
    const std::size_t chunk = 1 << 16;
    std::size_t nchunks = (n + chunk - 1) / chunk;
    std::vector<double> sums(nchunks), sq(nchunks);
    parallel_for(nchunks, [&](std::size_t c) {
        Philox g(derive_seed(seed, c));
        std::size_t m = std::min(chunk, n - c * chunk);
        double a = 0, b = 0;
        for (std::size_t i = 0; i < m; ++i) {
            double ct = std::sqrt(g.uniform()), st = std::sqrt(1 - ct * ct), ph = 2 * kPi * g.uniform();
            double r = s.profile.shell ? 1.0 : std::sqrt(-2 * std::log(g.uniform() * g.uniform()));
            RVec f = r * (st * std::cos(ph) * x + st * std::sin(ph) * y + ct * z);
            double v = direction_spin(e, f);
            a += v;
            b += v * v;
        }
        sums[c] = a;
        sq[c] = b;
    });
    double a = 0, b = 0;
    for (std::size_t c = 0; c < nchunks; ++c) a += sums[c], b += sq[c];
    MonteCarloEstimate est;
    est.n = n;
    est.mean = a / double(n);
    double var = std::max(0.0, b / double(n) - est.mean * est.mean);
    est.stderr_ = std::sqrt(var / double(n));
    return est;
}

// Rotation matrix with from_bloch(R rho) = U from_bloch(rho) U^dag, U = exp(i gamma tau.b / 2).
inline RMat rotation_matrix(const RVec& b, double gamma) {
    if (std::abs(b.norm() - 1) > 1e-12 || b.size() != 3) throw domain_error("axis must be a 3d unit vector");
    RMat K(3, 3);
    K << 0, -b[2], b[1], b[2], 0, -b[0], -b[1], b[0], 0;
    double a = -gamma;
    return RMat::Identity(3, 3) + std::sin(a) * K + (1 - std::cos(a)) * K * K;
}

inline Operator rotation_unitary(const RVec& b, double gamma) {
    Operator h = b[0] * tau(1) + b[1] * tau(2) + b[2] * tau(3);
    return expi_hermitian(h, gamma / 2);
}

struct RotateResult {
    SphereState state;
    double unitary_mismatch = 0;
};

inline RotateResult rotate_update(const SphereState& s, const RVec& b, double gamma) {
    RotateResult r{s, 0};
    r.state.rho = rotation_matrix(b, gamma) * s.rho;
    Density lhs = from_bloch(r.state.rho);
    Density rhs = apply_unitary(from_bloch(s.rho), rotation_unitary(b, gamma));
    r.unitary_mismatch = (lhs - rhs).cwiseAbs().maxCoeff();
    return r;
}

// ---- continuous-time evolution ----

struct step_size_error : numerical_error {
    using numerical_error::numerical_error;
};

using HamiltonianFn = std::function<Operator(double)>;

inline HamiltonianFn rotation_hamiltonian(std::function<double(double)> omega, std::function<RVec(double)> b) {
    return [omega, b](double t) {
        RVec v = b(t);
        return Operator(-(omega(t) / 2) * (v[0] * tau(1) + v[1] * tau(2) + v[2] * tau(3)));
    };
}

// RK4 for i d rho/dt = [H, rho].
inline Density von_neumann_rk4(const Density& rho0, const HamiltonianFn& H, double t0, double t1, double dt) {
    if (!(dt > 0)) throw domain_error("dt must be positive");
    auto rhs = [&](double t, const Density& r) {
        Operator h = H(t);
        return Density(-I1 * (h * r - r * h));
    };
    double dur = t1 - t0;
    long steps = std::max(1L, long(std::ceil(std::abs(dur) / dt - 1e-9)));
    double h = dur / double(steps);
    Density r = rho0;
    double p0 = (rho0 * rho0).trace().real();
    for (long k = 0; k < steps; ++k) {
        double t = t0 + double(k) * h;
        Density k1 = rhs(t, r);
        Density k2 = rhs(t + h / 2, r + (h / 2) * k1);
        Density k3 = rhs(t + h / 2, r + (h / 2) * k2);
        Density k4 = rhs(t + h, r + h * k3);
        r += (h / 6) * (k1 + 2 * k2 + 2 * k3 + k4);
        if (std::abs((r * r).trace().real() - p0) > 1e-6) throw step_size_error("purity drift exceeds 1e-6; reduce dt");
    }
    return r;
}

inline Density schrodinger_integrate(const Density& rho0, std::function<double(double)> omega, std::function<RVec(double)> b,
                                     double t_final, double dt) {
    return von_neumann_rk4(rho0, rotation_hamiltonian(std::move(omega), std::move(b)), 0, t_final, dt);
}

struct RotationSegment {
    double omega;
    RVec b;
    double duration;
};

// Piecewise-constant rotation Hamiltonians, each segment integrated separately.
inline Density schrodinger_piecewise(const Density& rho0, const std::vector<RotationSegment>& segs, double dt) {
    Density r = rho0;
    for (const auto& s : segs) {
        if (std::abs(s.b.norm() - 1) > 1e-12) throw domain_error("axis must be a unit vector");
        r = schrodinger_integrate(r, [w = s.omega](double) { return w; }, [b = s.b](double) { return b; }, s.duration, dt);
    }
    return r;
}

inline double default_dt(double max_abs_omega) { return 1e-3 / std::max(max_abs_omega, 1e-300); }

// Evolve rho0 to rho(T) under H; then evolve rho(T)^* backwards in time under
// H^*(T - s). Returns max |result - rho0^*|.
inline double cpt_check(const Density& rho0, const HamiltonianFn& H, double T, double dt) {
    Density rT = von_neumann_rk4(rho0, H, 0, T, dt);
    HamiltonianFn Hr = [&](double s) { return Operator(H(T - s).conjugate()); };
    Density back = von_neumann_rk4(rT.conjugate(), Hr, 0, T, dt);
    return (back - rho0.conjugate()).cwiseAbs().maxCoeff();
}

struct FermionObservables {
    double n = 0, a_plus_adag = 0, i_a_minus_adag = 0;
    double anticommutator_error = 0;
};

inline Operator fermion_annihilator() {
    Operator a = Operator::Zero(2, 2);
    a(1, 0) = 1;
    return a;
}

inline Operator fermion_number() {
    Operator n = Operator::Zero(2, 2);
    n(0, 0) = 1;
    return n;
}

inline FermionObservables fermion_observables(const Density& rho) {
    if (rho.rows() != 2) throw dimension_error("fermion_observables is for a single mode");
    Operator a = fermion_annihilator(), ad = a.adjoint();
    FermionObservables f;
    f.n = expectation(rho, fermion_number());
    f.a_plus_adag = expectation(rho, a + ad);
    f.i_a_minus_adag = expectation(rho, I1 * (a - ad));
    f.anticommutator_error = (ad * a + a * ad - Operator::Identity(2, 2)).cwiseAbs().maxCoeff();
    return f;
}

inline Operator fermion_hamiltonian(double omega) { return omega * (fermion_number() - 0.5 * Operator::Identity(2, 2)); }

}  // namespace qembed
