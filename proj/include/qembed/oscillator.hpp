#pragma once

#include "core.hpp"

#include <unsupported/Eigen/FFT>

namespace qembed {

struct resolution_error : std::domain_error {
    using std::domain_error::domain_error;
};

struct PhaseGrid {
    int nz = 128, np = 128;
    double zmax = 8, pmax = 8;  // periodic box [-zmax, zmax) x [-pmax, pmax)
    double dz() const { return 2 * zmax / nz; }
    double dp() const { return 2 * pmax / np; }
    double z(int i) const { return -zmax + i * dz(); }
    double p(int j) const { return -pmax + j * dp(); }
};

struct PhaseSpaceWave {
    PhaseGrid grid;
    Operator phi;  // phi(i, j) = phi_c(z_i, p_j); real part green, imaginary part red
    double norm() const { return phi.squaredNorm() * grid.dz() * grid.dp(); }
};

struct ModePair {
    int n = 0, n2 = 0;
    double m = 1, c = 1;
    double omega() const { return std::sqrt(c / m); }
};

inline constexpr int kModeCutoff = 6;

// Normalized Hermite function psi_n(x) for mass m and frequency omega.
inline double hermite_function(int n, double m, double omega, double x) {
    double a = std::sqrt(m * omega);
    double xi = a * x;
    double h0 = std::pow(m * omega / kPi, 0.25) * std::exp(-xi * xi / 2);
    if (n == 0) return h0;
    double h1 = std::sqrt(2.0) * xi * h0;
    for (int k = 2; k <= n; ++k) {
        double h2 = std::sqrt(2.0 / k) * xi * h1 - std::sqrt((k - 1.0) / k) * h0;
        h0 = h1;
        h1 = h2;
    }
    return h1;
}

inline RVec hermite_mode(int n, double m, double omega, const RVec& x) {
    if (n < 0 || n > kModeCutoff) throw domain_error("mode index outside cutoff");
    double turning = std::sqrt((2 * n + 1) / (m * omega));
    if (x.minCoeff() > -4 * turning || x.maxCoeff() < 4 * turning) throw resolution_error("grid does not cover the mode");
    RVec v(x.size());
    for (Eigen::Index i = 0; i < x.size(); ++i) v[i] = hermite_function(n, m, omega, x[i]);
    return v;
}

// H_Q psi on a uniform grid by second-order finite differences.
inline RVec apply_quantum_hamiltonian(const RVec& psi, double dx, double m, double c, const RVec& x) {
    RVec out(psi.size());
    for (Eigen::Index i = 0; i < psi.size(); ++i) {
        double l = i > 0 ? psi[i - 1] : 0, r = i + 1 < psi.size() ? psi[i + 1] : 0;
        out[i] = -(l - 2 * psi[i] + r) / (2 * m * dx * dx) + 0.5 * c * x[i] * x[i] * psi[i];
    }
    return out;
}

namespace detail {

// Spectral derivative of order k along the columns of a (columns are periodic samples with spacing h).
inline Operator spectral_derivative_cols(const Operator& a, double h, int order) {
    static thread_local Eigen::FFT<double> fft;
    Eigen::Index n = a.rows();
    Operator out(a.rows(), a.cols());
    CVec spec(n), col(n), res(n);
    for (Eigen::Index j = 0; j < a.cols(); ++j) {
        col = a.col(j);
        fft.fwd(spec, col);
        for (Eigen::Index k = 0; k < n; ++k) {
            Eigen::Index kk = k <= n / 2 ? k : k - n;
            double w = 2 * kPi * double(kk) / (double(n) * h);
            cplx f = order == 1 ? I1 * w : cplx(-w * w, 0);
            if (order == 1 && n % 2 == 0 && k == n / 2) f = 0;
            spec[k] *= f;
        }
        fft.inv(res, spec);
        out.col(j) = res;
    }
    return out;
}

inline Operator d_dz(const Operator& a, const PhaseGrid& g, int order = 1) { return spectral_derivative_cols(a, g.dz(), order); }
inline Operator d_dp(const Operator& a, const PhaseGrid& g, int order = 1) {
    return spectral_derivative_cols(a.transpose(), g.dp(), order).transpose();
}

}  // namespace detail

// phi_c(z,p) = (2 pi)^{-1/2} int dr e^{-ipr} psi_n(z + r/2) psi_n'(z - r/2), renormalized on the grid.
inline PhaseSpaceWave wave_from_modes(const ModePair& mp, const PhaseGrid& g = {}) {
    if (mp.n < 0 || mp.n2 < 0 || mp.n > kModeCutoff || mp.n2 > kModeCutoff) throw domain_error("mode index outside cutoff");
    const double w = mp.omega();
    const double rmax = 2 * g.zmax, dr = g.dz() / 2;
    const int nr = int(std::round(2 * rmax / dr)) + 1;
    PhaseSpaceWave wave{g, Operator::Zero(g.nz, g.np)};
    Operator phase(nr, g.np);
    for (int k = 0; k < nr; ++k)
        for (int j = 0; j < g.np; ++j) phase(k, j) = std::exp(-I1 * (g.p(j) * (-rmax + k * dr)));
    RVec prod(nr);
    for (int i = 0; i < g.nz; ++i) {
        double z = g.z(i);
        for (int k = 0; k < nr; ++k) {
            double r = -rmax + k * dr;
            prod[k] = hermite_function(mp.n, mp.m, w, z + r / 2) * hermite_function(mp.n2, mp.m, w, z - r / 2);
        }
        wave.phi.row(i) = (dr / std::sqrt(2 * kPi)) * (prod.transpose().cast<cplx>() * phase);
    }
    // Aliasing guard: weight in the outermost p band.
    int band = std::max(1, g.np / 16);
    double outer = (wave.phi.leftCols(band).squaredNorm() + wave.phi.rightCols(band).squaredNorm()) / wave.phi.squaredNorm();
    if (outer > 1e-6) throw resolution_error("phase-space wave reaches the p boundary; enlarge the grid");
    wave.phi /= std::sqrt(wave.norm());
    return wave;
}

// Right-hand side of d phi/dt = -(p/m) d_z phi + c z d_p phi.
inline Operator liouville_rhs(const Operator& phi, const PhaseGrid& g, double m, double c) {
    Operator dz = detail::d_dz(phi, g), dp = detail::d_dp(phi, g);
    Operator out(phi.rows(), phi.cols());
    for (int j = 0; j < g.np; ++j)
        for (int i = 0; i < g.nz; ++i) out(i, j) = -(g.p(j) / m) * dz(i, j) + c * g.z(i) * dp(i, j);
    return out;
}

inline double liouville_default_dt(const PhaseGrid& g, double m, double c) {
    return std::min(g.dz() * m / g.pmax, g.dp() / (c * g.zmax)) / 4;
}

struct step_instability : numerical_error {
    using numerical_error::numerical_error;
};

// RK4 with spectral derivatives; observer(t, wave) is called after every step when given.
inline PhaseSpaceWave liouville_evolve(const PhaseSpaceWave& w0, double m, double c, double t_final, double dt = 0,
                                       const std::function<void(double, const PhaseSpaceWave&)>& observer = nullptr) {
    if (dt <= 0) dt = liouville_default_dt(w0.grid, m, c);
    long steps = std::max(1L, long(std::ceil(t_final / dt - 1e-9)));
    double h = t_final / double(steps);
    PhaseSpaceWave w = w0;
    const auto& g = w.grid;
    double n0 = w0.norm();
    for (long s = 0; s < steps; ++s) {
        Operator k1 = liouville_rhs(w.phi, g, m, c);
        Operator k2 = liouville_rhs(w.phi + (h / 2) * k1, g, m, c);
        Operator k3 = liouville_rhs(w.phi + (h / 2) * k2, g, m, c);
        Operator k4 = liouville_rhs(w.phi + h * k3, g, m, c);
        w.phi += (h / 6) * (k1 + 2 * k2 + 2 * k3 + k4);
        if (std::abs(w.norm() - n0) > 1e-3 * n0) throw step_instability("Liouville norm drift exceeds 1e-3");
        if (observer) observer(h * double(s + 1), w);
    }
    return w;
}

// <H_Q> = int phi^* H_Q phi with the phase-space form of the quantum energy operator.
inline double quantum_energy_expectation(const PhaseSpaceWave& w, double m, double c) {
    const auto& g = w.grid;
    const Operator& f = w.phi;
    Operator dz = detail::d_dz(f, g), dzz = detail::d_dz(f, g, 2), dp = detail::d_dp(f, g), dpp = detail::d_dp(f, g, 2);
    cplx acc = 0;
    for (int j = 0; j < g.np; ++j)
        for (int i = 0; i < g.nz; ++i) {
            double z = g.z(i), p = g.p(j);
            cplx hf = (p * p * f(i, j) - 0.25 * dzz(i, j) - I1 * p * dz(i, j)) / (2 * m) +
                      (c / 2) * (z * z * f(i, j) - 0.25 * dpp(i, j) + I1 * z * dp(i, j));
            acc += std::conj(f(i, j)) * hf;
        }
    return (acc * g.dz() * g.dp()).real() / w.norm();
}

// <X_Q> = int phi^* (z + (i/2) d_p) phi.
inline double quantum_position_expectation(const PhaseSpaceWave& w) {
    const auto& g = w.grid;
    Operator dp = detail::d_dp(w.phi, g);
    cplx acc = 0;
    for (int j = 0; j < g.np; ++j)
        for (int i = 0; i < g.nz; ++i) acc += std::conj(w.phi(i, j)) * (g.z(i) * w.phi(i, j) + 0.5 * I1 * dp(i, j));
    return (acc * g.dz() * g.dp()).real() / w.norm();
}

struct DoublePositionDensity {
    RVec x;        // spacing 2 dz
    Density rho;   // rho(a, b) = dx rho_Q(x_a, x_b), unit trace
};

// psi~(x,y) = (2 pi)^{-1/2} sum_p dp e^{ip(x-y)} phi((x+y)/2, p); rho_Q(x,x') = int dy psi~(x,y) psi~^*(x',y).
inline DoublePositionDensity double_position_density(const PhaseSpaceWave& w) {
    const auto& g = w.grid;
    const int nx = g.nz / 2;
    const double dx = 2 * g.dz();
    DoublePositionDensity out;
    out.x.resize(nx);
    for (int a = 0; a < nx; ++a) out.x[a] = -g.zmax + a * dx;
    Operator psi(nx, nx);
    for (int a = 0; a < nx; ++a)
        for (int b = 0; b < nx; ++b) {
            int iz = a + b;  // (x_a + x_b)/2 = -zmax + (a + b) dz
            double r = out.x[a] - out.x[b];
            cplx s = 0;
            for (int j = 0; j < g.np; ++j) s += std::exp(I1 * (g.p(j) * r)) * w.phi(iz % g.nz, j);
            psi(a, b) = s * g.dp() / std::sqrt(2 * kPi);
        }
    out.rho = dx * dx * psi * psi.adjoint();
    double tr = out.rho.trace().real();
    out.rho /= tr;
    out.rho = (0.5 * (out.rho + out.rho.adjoint())).eval();
    return out;
}

struct SpectrumPeak {
    ModePair pair;
    double expected = 0;         // omega (n - n')
    double green_peak = 0;       // |frequency| from the green-channel overlap
    double signed_peak = 0;      // from the complex overlap int phi0^* phi(t)
    double bin = 0;
};

// Dominant frequency of sampled data by a direct DFT on a fine frequency grid limited by f_max.
inline double dominant_frequency(const std::vector<cplx>& s, double dt, double f_max, double df, bool remove_mean) {
    cplx mean = 0;
    for (auto v : s) mean += v;
    mean /= double(s.size());
    double best = -1, arg = 0;
    for (double f = -f_max; f <= f_max + 1e-12; f += df) {
        cplx acc = 0;
        for (std::size_t k = 0; k < s.size(); ++k) acc += (remove_mean ? s[k] - mean : s[k]) * std::exp(I1 * (f * dt * double(k)));
        if (std::abs(acc) > best + 1e-12 * std::abs(best)) {
            best = std::abs(acc);
            arg = f;
        }
    }
    // Constant signals have no oscillating component.
    if (remove_mean) {
        double var = 0;
        for (auto v : s) var += std::norm(v - mean);
        if (var < 1e-12 * double(s.size())) return 0;
    }
    return arg;
}

inline SpectrumPeak oscillation_spectrum_one(const ModePair& mp, const PhaseGrid& g, double periods = 2, int samples_per_period = 32) {
    if (periods < 2) throw resolution_error("need at least two periods of evolution");
    double w = mp.omega();
    double T = periods * 2 * kPi / w;
    PhaseSpaceWave w0 = wave_from_modes(mp, g);
    RMat re0 = w0.phi.real();
    double dt = liouville_default_dt(g, mp.m, mp.c);
    double sample_dt = 2 * kPi / w / samples_per_period;
    int stride = std::max(1, int(std::round(sample_dt / dt)));
    dt = sample_dt / stride;
    std::vector<cplx> green{cplx(re0.squaredNorm(), 0)}, overlap{(w0.phi.conjugate().cwiseProduct(w0.phi)).sum()};
    long step = 0;
    liouville_evolve(w0, mp.m, mp.c, T, dt, [&](double, const PhaseSpaceWave& wt) {
        if (++step % stride) return;
        green.push_back(cplx((re0.cwiseProduct(wt.phi.real())).sum(), 0));
        overlap.push_back((w0.phi.conjugate().cwiseProduct(wt.phi)).sum());
    });
    SpectrumPeak pk;
    pk.pair = mp;
    pk.expected = w * (mp.n - mp.n2);
    pk.bin = 2 * kPi / T;
    double fmax = w * samples_per_period / 2.0;
    double df = pk.bin / 8;
    // exp(i f t) correlates with e^{-i Delta t} at f = Delta.
    pk.green_peak = std::abs(dominant_frequency(green, sample_dt, std::min(fmax, 2.0 * kModeCutoff * w), df, true));
    pk.signed_peak = dominant_frequency(overlap, sample_dt, std::min(fmax, 2.0 * kModeCutoff * w), df, false);
    return pk;
}

inline std::vector<SpectrumPeak> oscillation_spectrum(const std::vector<ModePair>& pairs, const PhaseGrid& g = {64, 64, 8, 8},
                                                      double periods = 2) {
    std::vector<SpectrumPeak> out;
    for (const auto& mp : pairs) out.push_back(oscillation_spectrum_one(mp, g, periods));
    return out;
}

}  // namespace qembed
