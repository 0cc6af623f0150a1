#include "qembed/automaton.hpp"
#include "qembed/bitquantum.hpp"
#include "qembed/states.hpp"

#include <gtest/gtest.h>

using namespace qembed;

namespace {

Config cfg(std::initializer_list<int> s) { return config_from_spins(std::vector<int>(s)); }

Distribution random_p(int n, Philox& g) { return random_distribution(n, g); }

}  // namespace

TEST(Config, BigEndianSpinLabels) {
    // (- - -), (- - +), ... : spin k is +1 iff bit N-1-k is set.
    EXPECT_EQ(cfg({-1, -1, -1}), 0u);
    EXPECT_EQ(cfg({-1, -1, 1}), 1u);
    EXPECT_EQ(cfg({1, -1, -1}), 4u);
    for (Config t = 0; t < 8; ++t)
        for (int k = 0; k < 3; ++k) EXPECT_EQ(spin_value(t, k, 3), (t >> (2 - k) & 1u) ? 1 : -1);
}

TEST(UniqueJump, IdentityIsIdentityMatrix) {
    auto s = unique_jump(3, [](Config t) { return t; });
    EXPECT_EQ((s.dense() - RMat::Identity(8, 8)).cwiseAbs().maxCoeff(), 0.0);
}

TEST(UniqueJump, RejectsNonBijection) {
    EXPECT_THROW(unique_jump(3, [](Config) { return Config(0); }), invalid_automaton);
}

TEST(UniqueJump, NamedExamples) {
    EXPECT_EQ(named_transformation("T12").apply(cfg({1, -1, 1})), cfg({-1, -1, 1}));
    EXPECT_EQ(named_transformation("TH").apply(cfg({1, 1, -1})), cfg({-1, -1, 1}));
}

TEST(Evolve, UniformAndDelta) {
    auto s = named_transformation("T23").step();
    auto u = evolve_distribution(Distribution::uniform(3), s);
    EXPECT_LT((u.p - Distribution::uniform(3).p).cwiseAbs().maxCoeff(), 1e-15);
    for (Config t = 0; t < 8; ++t) {
        auto d = evolve_distribution(Distribution::delta(3, t), s);
        EXPECT_EQ(d.p[s(t)], 1.0);
        EXPECT_EQ(d.p.sum(), 1.0);
    }
}

TEST(Evolve, T31ActsOnMeans) {
    Philox g(1);
    for (int i = 0; i < 20; ++i) {
        Distribution p = random_p(3, g);
        Distribution q = evolve_distribution(p, named_transformation("T31").step());
        EXPECT_NEAR(spin_expectation(q, spin_mask({2})), spin_expectation(p, spin_mask({0})), 1e-15);
        EXPECT_NEAR(spin_expectation(q, spin_mask({0})), -spin_expectation(p, spin_mask({2})), 1e-15);
        EXPECT_NEAR(spin_expectation(q, spin_mask({1})), spin_expectation(p, spin_mask({1})), 1e-15);
    }
}

TEST(Evolve, WaveSquaringCommutes) {
    Philox g(2);
    for (const auto& name : chain_updatings()) {
        Distribution p = random_p(3, g);
        auto s = named_transformation(name).step();
        ClassicalWave q = evolve_wave(ClassicalWave::from_distribution(p), s);
        EXPECT_LT((q.distribution().p - evolve_distribution(p, s).p).cwiseAbs().maxCoeff(), 1e-15);
    }
}

TEST(Evolve, OrthogonalWaveNormAndBilinear) {
    RMat m = RMat::Identity(8, 8);
    double th = 0.37;
    m(2, 2) = m(5, 5) = std::cos(th);
    m(2, 5) = -std::sin(th);
    m(5, 2) = std::sin(th);
    auto s = general_orthogonal(3, m);
    Philox g(3);
    ClassicalWave q{3, RVec(8)};
    for (int i = 0; i < 8; ++i) q.q[i] = g.normal();
    q.q /= q.q.norm();
    RVec cur = q.q;
    for (int k = 0; k < 1000; ++k) {
        ClassicalWave w = evolve_wave({3, cur}, s);
        cur = w.q;
    }
    EXPECT_NEAR(cur.squaredNorm(), 1.0, 1e-12);
    ClassicalWave w = evolve_wave(q, s);
    RMat rho = q.q * q.q.transpose(), rho2 = w.q * w.q.transpose();
    EXPECT_LT((rho2 - m * rho * m.transpose()).cwiseAbs().maxCoeff(), 1e-15);
    EXPECT_THROW(evolve_distribution(Distribution::uniform(3), s), contract_violation);
    EXPECT_THROW(general_orthogonal(3, 2 * RMat::Identity(8, 8)), invalid_automaton);
}

TEST(Expectation, BruteForceCorrelation) {
    Philox g(4);
    Distribution p = random_p(3, g);
    double ref = 0;
    for (Config t = 0; t < 8; ++t) ref += p.p[t] * spin_value(t, 0, 3) * spin_value(t, 1, 3);
    EXPECT_NEAR(spin_expectation(p, spin_mask({0, 1})), ref, 1e-15);
    EXPECT_NEAR(classical_expectation(p, spin_observable(3, spin_mask({0, 1}))), ref, 1e-15);
    EXPECT_NEAR(spin_expectation(Distribution::uniform(3), spin_mask({2})), 0.0, 1e-15);
}

TEST(Expectation, EntangledFamilyAnticorrelation) {
    auto p = entangled_family(0);
    for (int k = 0; k < 3; ++k) EXPECT_NEAR(spin_expectation(p, spin_mask({k, 3 + k})), -1.0, 1e-15);
}

TEST(Trajectory, HorizonZeroAndComposition) {
    Philox g(5);
    Distribution p = random_p(3, g);
    auto t0 = trajectory_probabilities(p, {}, 0);
    for (std::size_t i = 0; i < t0.size(); ++i) EXPECT_EQ(t0[i].weight, p.p[Eigen::Index(i)]);

    auto a = named_transformation("T12"), b = named_transformation("T31");
    auto tr = trajectory_probabilities(p, {a.step(), b.step()}, 4);
    Config start = cfg({1, 1, 1});
    Config c = start;
    std::vector<Config> ref{c};
    for (int k = 0; k < 4; ++k) ref.push_back(c = (k % 2 ? b : a).apply(c));
    EXPECT_EQ(tr[start].path, ref);

    auto tr100 = trajectory_probabilities(p, {a.step(), b.step()}, 100);
    double w = 0;
    for (auto& x : tr100) w += x.weight;
    EXPECT_NEAR(w, 1.0, 1e-15);
}

TEST(Trajectory, RejectsGeneralOrthogonal) {
    auto s = general_orthogonal(3, RMat::Identity(8, 8));
    EXPECT_THROW(trajectory_probabilities(Distribution::uniform(3), {s}, 3), unsupported_overall_distribution);
}

TEST(Sampling, DeltaHasZeroVariance) {
    Config t = cfg({1, -1, 1});
    auto est = sample_estimator(Distribution::delta(3, t), 1000, 1, {spin_mask({0}), spin_mask({1}), spin_mask({0, 1})});
    EXPECT_EQ(est[0].mean, 1);
    EXPECT_EQ(est[1].mean, -1);
    EXPECT_EQ(est[2].mean, -1);
    for (auto& e : est) EXPECT_EQ(e.stderr_, 0);
}

TEST(Sampling, EntangledFamilyMillionSamples) {
    auto est = sample_estimator(entangled_family(0), 1000000, 2, {spin_mask({0, 3})});
    EXPECT_EQ(est[0].mean, -1);
    EXPECT_EQ(est[0].stderr_, 0);
}

TEST(Sampling, WithinFourSigmaOfExactSum) {
    Philox g(6);
    Distribution p = random_p(3, g);
    std::vector<std::uint32_t> masks{spin_mask({0}), spin_mask({1}), spin_mask({2}), spin_mask({0, 2}), spin_mask({0, 1, 2})};
    auto est = sample_estimator(p, 200000, 7, masks);
    for (std::size_t m = 0; m < masks.size(); ++m) EXPECT_LE(std::abs(est[m].mean - spin_expectation(p, masks[m])), 4 * est[m].stderr_);
}

TEST(Sampling, IndependentOfWorkerCount) {
    Philox g(8);
    Distribution p = random_p(3, g);
    setenv("QEMBED_THREADS", "1", 1);
    auto a = sample_estimator(p, 300000, 9, {spin_mask({0, 1})});
    setenv("QEMBED_THREADS", "4", 1);
    auto b = sample_estimator(p, 300000, 9, {spin_mask({0, 1})});
    unsetenv("QEMBED_THREADS");
    EXPECT_EQ(a[0].mean, b[0].mean);
    EXPECT_EQ(a[0].stderr_, b[0].stderr_);
}

TEST(Automaton, ConditionalFlipNotExpressibleInMeans) {
    // Same (rho1, rho2, rho3) = 0, different <s1 s2>.
    Distribution a = Distribution::uniform(3);
    Distribution b{3, RVec::Zero(8)};
    for (auto c : {cfg({1, 1, 1}), cfg({-1, -1, 1}), cfg({1, 1, -1}), cfg({-1, -1, -1})}) b.p[c] = 0.25;
    for (int k = 0; k < 3; ++k) EXPECT_EQ(spin_expectation(a, spin_mask({k})), spin_expectation(b, spin_mask({k})));
    auto s = named_transformation("CFLIP").step();
    double ra = spin_expectation(evolve_distribution(a, s), spin_mask({1}));
    double rb = spin_expectation(evolve_distribution(b, s), spin_mask({1}));
    EXPECT_NE(ra, rb);
}

TEST(Automaton, SingleReflectionConjugates) {
    Philox g(10);
    auto m = BitQuantumMap::one_qubit();
    for (int i = 0; i < 10; ++i) {
        Distribution p = random_p(3, g);
        Density r = apply_map(p, m), r2 = apply_map(evolve_distribution(p, named_transformation("R2").step()), m);
        EXPECT_LT((r2 - r.conjugate()).cwiseAbs().maxCoeff(), 1e-15);
    }
}

TEST(Automaton, SpinMapComposition) {
    auto a = named_transformation("T12"), b = named_transformation("TH");
    auto ab = b.after(a);
    for (Config t = 0; t < 8; ++t) EXPECT_EQ(ab.apply(t), b.apply(a.apply(t)));
}

TEST(Automaton, SequenceParsing) {
    EXPECT_EQ(parse_sequence("T12; T31 ;T1"), (std::vector<std::string>{"T12", "T31", "T1"}));
    EXPECT_THROW(named_transformation("T99"), domain_error);
}
