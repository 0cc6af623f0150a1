#include "qembed/oscillator.hpp"

#include <gtest/gtest.h>

using namespace qembed;

namespace {

const PhaseGrid kGrid{64, 64, 8, 8};

RVec linspace(double a, double b, int n) { return RVec::LinSpaced(n, a, b); }

double purity(const Density& r) { return (r * r).trace().real(); }

}  // namespace

TEST(Hermite, ExplicitLowModes) {
    double m = 1.5, w = 0.8, a = std::sqrt(m * w), c = std::pow(m * w / kPi, 0.25);
    for (double x : {-2.0, -0.3, 0.0, 1.1}) {
        double xi = a * x, g = std::exp(-xi * xi / 2);
        EXPECT_NEAR(hermite_function(0, m, w, x), c * g, 1e-15);
        EXPECT_NEAR(hermite_function(1, m, w, x), c * std::sqrt(2.0) * xi * g, 1e-15);
        EXPECT_NEAR(hermite_function(2, m, w, x), c * (4 * xi * xi - 2) / std::sqrt(8.0) * g, 1e-15);
    }
}

TEST(Hermite, OrthonormalAndEigenvalues) {
    const int n = 4001;
    RVec x = linspace(-16, 16, n);
    double dx = x[1] - x[0];
    for (int i = 0; i <= kModeCutoff; ++i) {
        RVec a = hermite_mode(i, 1, 1, x);
        for (int j = 0; j <= i; ++j) EXPECT_NEAR(a.dot(hermite_mode(j, 1, 1, x)) * dx, i == j ? 1 : 0, 1e-12);
        RVec h = apply_quantum_hamiltonian(a, dx, 1, 1, x);
        EXPECT_NEAR(a.dot(h) * dx, i + 0.5, 1e-3);
    }
    EXPECT_THROW(hermite_mode(kModeCutoff + 1, 1, 1, x), domain_error);
    EXPECT_THROW(hermite_mode(6, 1, 1, linspace(-2, 2, 10)), resolution_error);
}

TEST(PhaseSpace, GroundStateRealPositiveNormalized) {
    auto w = wave_from_modes({0, 0}, kGrid);
    EXPECT_NEAR(w.norm(), 1, 1e-12);
    EXPECT_LT(w.phi.imag().cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_GT(w.phi.real().minCoeff(), -1e-12);
    EXPECT_NEAR(quantum_position_expectation(w), 0, 1e-12);
}

TEST(PhaseSpace, SwappedPairIsConjugate) {
    for (auto [n, n2] : {std::pair{1, 0}, std::pair{3, 1}, std::pair{2, 5}}) {
        auto a = wave_from_modes({n, n2}, kGrid), b = wave_from_modes({n2, n, 1, 1}, kGrid);
        EXPECT_LT((a.phi - b.phi.conjugate()).cwiseAbs().maxCoeff(), 1e-12) << n << "," << n2;
    }
}

TEST(PhaseSpace, EnergyExpectation) {
    for (int n = 0; n <= 3; ++n) EXPECT_NEAR(quantum_energy_expectation(wave_from_modes({n, n}, kGrid), 1, 1), n + 0.5, 1e-6) << n;
    ModePair heavy{1, 1, 2.0, 0.5};
    EXPECT_NEAR(quantum_energy_expectation(wave_from_modes(heavy, kGrid), 2.0, 0.5), 1.5 * heavy.omega(), 1e-6);
}

TEST(PhaseSpace, CoarseGridRejected) {
    EXPECT_THROW(wave_from_modes({6, 6}, PhaseGrid{16, 16, 3, 3}), resolution_error);
    EXPECT_THROW(wave_from_modes({7, 0}, kGrid), domain_error);
}

TEST(Liouville, GroundStateStationaryAndNormConserved) {
    auto w0 = wave_from_modes({0, 0}, kGrid);
    auto w1 = liouville_evolve(w0, 1, 1, 1.0);
    EXPECT_LT((w1.phi - w0.phi).cwiseAbs().maxCoeff(), 1e-6);
    EXPECT_NEAR(w1.norm(), 1, 1e-9);
}

TEST(Liouville, ExcitedPairReturnsAfterPeriod) {
    auto w0 = wave_from_modes({1, 0}, kGrid);
    auto w1 = liouville_evolve(w0, 1, 1, 2 * kPi);
    EXPECT_LT((w1.phi - w0.phi).cwiseAbs().maxCoeff(), 1e-6);
    auto half = liouville_evolve(w0, 1, 1, kPi);
    EXPECT_GT((half.phi - w0.phi).cwiseAbs().maxCoeff(), 1e-2);
    double e0 = quantum_energy_expectation(wave_from_modes({2, 2}, kGrid), 1, 1);
    EXPECT_NEAR(quantum_energy_expectation(liouville_evolve(wave_from_modes({2, 2}, kGrid), 1, 1, 1.0), 1, 1), e0, 1e-6);
}

TEST(DoublePosition, PureModeFidelity) {
    for (int n = 0; n <= 2; ++n) {
        auto d = double_position_density(wave_from_modes({n, n}, kGrid));
        double dx = d.x[1] - d.x[0];
        CVec v(d.x.size());
        for (Eigen::Index a = 0; a < d.x.size(); ++a) v[a] = hermite_function(n, 1, 1, d.x[a]) * std::sqrt(dx);
        v /= v.norm();
        EXPECT_GE((v.adjoint() * d.rho * v)(0, 0).real(), 1 - 1e-4) << n;
        EXPECT_NEAR(purity(d.rho), 1, 1e-4);
    }
}

TEST(DoublePosition, MixtureAndInvariantSpectrum) {
    PhaseSpaceWave w = wave_from_modes({0, 0}, kGrid);
    w.phi = (w.phi + wave_from_modes({1, 1}, kGrid).phi) / std::sqrt(2.0);
    auto d0 = double_position_density(w);
    EXPECT_NEAR(purity(d0.rho), 0.5, 1e-3);
    auto d1 = double_position_density(liouville_evolve(w, 1, 1, 0.9));
    Eigen::SelfAdjointEigenSolver<Operator> a(d0.rho, Eigen::EigenvaluesOnly), b(d1.rho, Eigen::EigenvaluesOnly);
    EXPECT_LT((a.eigenvalues() - b.eigenvalues()).cwiseAbs().maxCoeff(), 1e-4);
}

TEST(Spectrum, DominantFrequencies) {
    auto peaks = oscillation_spectrum({{1, 0}, {3, 1}, {2, 2}, {0, 2, 2.0, 0.5}}, kGrid);
    ASSERT_EQ(peaks.size(), 4u);
    for (const auto& p : peaks) {
        EXPECT_LE(std::abs(p.green_peak - std::abs(p.expected)), p.bin / 2) << p.pair.n << "," << p.pair.n2;
        EXPECT_LE(std::abs(p.signed_peak - p.expected), p.bin / 2) << p.pair.n << "," << p.pair.n2;
    }
    EXPECT_NEAR(peaks[1].expected, 2, 1e-15);
    EXPECT_EQ(peaks[2].green_peak, 0);
    EXPECT_NEAR(peaks[3].expected, -1, 1e-15);
    EXPECT_THROW(oscillation_spectrum_one({1, 0}, kGrid, 1), resolution_error);
}

TEST(Spectrum, DominantFrequencyOfPureTone) {
    std::vector<cplx> s;
    double dt = 0.05, f = 1.7;
    for (int k = 0; k < 400; ++k) s.push_back(std::exp(-I1 * (f * dt * k)));
    EXPECT_NEAR(dominant_frequency(s, dt, 10, 0.01, false), f, 0.01);
    EXPECT_EQ(dominant_frequency(std::vector<cplx>(50, 1.0), dt, 10, 0.01, true), 0);
}
