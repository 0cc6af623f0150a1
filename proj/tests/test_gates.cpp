#include "qembed/bitquantum.hpp"
#include "qembed/gates.hpp"
#include "qembed/states.hpp"

#include <gtest/gtest.h>

using namespace qembed;

namespace {

Operator S1(int k) { return kron(tau(k), tau(0)); }
Operator S2(int k) { return kron(tau(0), tau(k)); }
double maxabs(const Operator& a) { return a.cwiseAbs().maxCoeff(); }

RVec bloch_after(const std::string& g, const RVec& b) { return bloch_of(apply_unitary(from_bloch(b), gate(g).unitary)); }

}  // namespace

TEST(Catalog, AllUnitary) {
    for (const auto& n : gate_catalog()) EXPECT_LT(unitarity_error(gate(n).unitary), 1e-14) << n;
    EXPECT_EQ(gate_catalog().size(), 20u);
    EXPECT_THROW(gate("NOPE"), lookup_error);
    EXPECT_THROW(gate("PHASE(1,2x,1,1)"), lookup_error);
}

TEST(Catalog, OneQubitBlochActions) {
    RVec b(3);
    b << 0.2, -0.5, 0.7;
    RVec r = bloch_after("U31", b);
    EXPECT_NEAR(r[0], -b[2], 1e-15);
    EXPECT_NEAR(r[1], b[1], 1e-15);
    EXPECT_NEAR(r[2], b[0], 1e-15);
    r = bloch_after("UH", b);
    EXPECT_NEAR(r[0], b[2], 1e-15);
    EXPECT_NEAR(r[1], -b[1], 1e-15);
    EXPECT_NEAR(r[2], b[0], 1e-15);
    r = bloch_after("UT", b);
    double c = std::cos(kPi / 4), s = std::sin(kPi / 4);
    EXPECT_NEAR(r[0], c * b[0] - s * b[1], 1e-15);
    EXPECT_NEAR(r[1], s * b[0] + c * b[1], 1e-15);
    EXPECT_NEAR(r[2], b[2], 1e-15);
}

TEST(Catalog, GroupIdentities) {
    Philox g(1);
    Density rho = random_density(1, g);
    EXPECT_LT(maxabs(apply_sequence(rho, {"U31", "U31"}) - apply_sequence(rho, {"U2"})), 1e-15);
    EXPECT_LT(maxabs(apply_sequence(rho, {}) - rho), 0.5e-300);
    EXPECT_THROW(apply_sequence(rho, {"CNOT"}), dimension_error);
}

TEST(Catalog, CnotEntanglesProductState) {
    // |u d> - |d d> goes to the singlet.
    CVec psi(4);
    psi << 0, 1, 0, -1;
    psi /= std::sqrt(2.0);
    CVec out = gate("CNOT").unitary * psi;
    CVec ref(4);
    ref << 0, 1, -1, 0;
    ref /= std::sqrt(2.0);
    EXPECT_LT((out - ref).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(Catalog, TransformationMatchesGate) {
    for (const auto& t : chain_updatings()) {
        auto r = automaton_realization(gate_for_transformation(t), BitQuantumMap::one_qubit());
        ASSERT_TRUE(r.step);
        auto n = named_transformation(t);
        EXPECT_EQ(r.step->sign, n.sign) << t;
        EXPECT_EQ(r.step->mask, n.mask) << t;
    }
}

TEST(Sequence, AlternatingCnotProductPowers) {
    Operator U = gate("CNOT").unitary * gate("UH:1").unitary * gate("UT:2").unitary;
    Philox g(2);
    Density rho0 = random_density(2, g);
    Density rho = rho0;
    int done = 0;
    for (int k = 0; k <= 10; ++k) {
        int n = 1 << k;
        for (; done < n; ++done) rho = apply_sequence(rho, {"UT:2", "UH:1", "CNOT"});
        Operator Un = Operator::Identity(4, 4), base = U;
        for (int e = n; e; e >>= 1, base = base * base)
            if (e & 1) Un = Un * base;
        EXPECT_LT(maxabs(rho - Un * rho0 * Un.adjoint()), 1e-9) << "n = " << n;
    }
}

TEST(Realization, DeclaredResults) {
    EXPECT_EQ(automaton_realization("CNOT", BitQuantumMap::correlation(2)).status, Realization::Status::not_realizable);
    EXPECT_EQ(automaton_realization("D3", BitQuantumMap::correlation(2)).status, Realization::Status::not_realizable);
    EXPECT_EQ(automaton_realization("UT", BitQuantumMap::one_qubit()).status, Realization::Status::not_realizable);
    EXPECT_EQ(automaton_realization("CNOT", BitQuantumMap::average_spin(2)).status, Realization::Status::realizable);
    EXPECT_EQ(automaton_realization("D3", BitQuantumMap::average_spin(2)).status, Realization::Status::realizable);
    EXPECT_EQ(automaton_realization("SWAP", BitQuantumMap::correlation(2)).status, Realization::Status::realizable);
}

TEST(Realization, CommutingSquareOverCatalog) {
    std::vector<BitQuantumMap> maps1{BitQuantumMap::one_qubit()};
    std::vector<BitQuantumMap> maps2{BitQuantumMap::correlation(2), BitQuantumMap::average_spin(2)};
    int checked = 0;
    for (const auto& n : gate_catalog()) {
        GateSpec g = gate(n);
        for (const auto& m : g.qubits == 1 ? maps1 : maps2) {
            auto r = automaton_realization(n, m);
            if (r.status != Realization::Status::realizable) continue;
            EXPECT_LT(verify_realization(n, m, *r.step, 200, 3), 1e-10) << n << " / " << m.name();
            ++checked;
        }
    }
    EXPECT_GE(checked, 10);
}

TEST(PhaseFamily, FourthPowerIsPhase) {
    cplx a = std::exp(I1 * 0.3), b = std::exp(I1 * 1.1), c = -1.0, d = I1;
    Operator ud = phase_family(a, b, c, d).adjoint();
    Operator u4 = ud * ud * ud * ud;
    EXPECT_LT(maxabs(u4 - a * b * c * d * Operator::Identity(4, 4)), 1e-14);
    Operator U = phase_family(a, b, c, d);
    EXPECT_LT(maxabs(heisenberg(U, S1(3)) - S2(3)), 1e-15);
    EXPECT_LT(maxabs(heisenberg(U, S2(3)) + S1(3)), 1e-15);
}

TEST(PhaseFamily, ListedTransforms) {
    Operator u = gate("PHASE(1,1,1,1)").unitary;
    EXPECT_LT(maxabs(heisenberg(u, S1(1)) - S2(1)), 1e-15);
    EXPECT_LT(maxabs(heisenberg(u, S1(2)) - S2(2)), 1e-15);
    EXPECT_LT(maxabs(heisenberg(u, S2(1)) - S1(1)), 1e-15);
    EXPECT_LT(maxabs(heisenberg(u, S2(2)) + S1(2)), 1e-15);

    u = gate("PHASE(1,i,1,i)").unitary;
    EXPECT_LT(maxabs(heisenberg(u, S1(1)) - S2(2)), 1e-15);
    EXPECT_LT(maxabs(heisenberg(u, S1(2)) + S2(1)), 1e-15);
    EXPECT_LT(maxabs(heisenberg(u, S2(1)) - S1(1)), 1e-15);
    EXPECT_LT(maxabs(heisenberg(u, S2(2)) + S1(2)), 1e-15);

    u = gate("PHASE(1,1,1,-1)").unitary;
    EXPECT_LT(maxabs(heisenberg(u, S1(1)) - S2(1) * S1(3)), 1e-15);
    EXPECT_LT(maxabs(heisenberg(u, S1(2)) - S2(2) * S1(3)), 1e-15);
    EXPECT_LT(maxabs(heisenberg(u, S2(1)) - S1(1) * S2(3)), 1e-15);
    EXPECT_LT(maxabs(heisenberg(u, S2(2)) + S1(2) * S2(3)), 1e-15);
    EXPECT_LT(maxabs(heisenberg(u, S2(1) * S1(3)) - S1(1)), 1e-15);
    EXPECT_LT(maxabs(heisenberg(u, S2(2) * S1(3)) + S1(2)), 1e-15);
}

TEST(D3, SpinTransforms) {
    Operator u = gate("D3").unitary;
    EXPECT_LT(maxabs(u * u - Operator::Identity(4, 4)), 0.5e-300);
    EXPECT_LT(maxabs(heisenberg(u, S1(3)) - S1(3)), 1e-15);
    EXPECT_LT(maxabs(heisenberg(u, S2(3)) - S2(3)), 1e-15);
    EXPECT_LT(maxabs(heisenberg(u, S1(1)) + S1(1) * S2(3)), 1e-15);
    EXPECT_LT(maxabs(heisenberg(u, S1(2)) + S1(2) * S2(3)), 1e-15);
    EXPECT_LT(maxabs(heisenberg(u, S2(1)) - S2(1) * S1(3)), 1e-15);
    EXPECT_LT(maxabs(heisenberg(u, S2(2)) - S2(2) * S1(3)), 1e-15);
    EXPECT_LT(maxabs(heisenberg(u, S1(1) * S2(1)) + S1(2) * S2(2)), 1e-15);
    EXPECT_LT(maxabs(heisenberg(u, S1(1) * S2(2)) - S1(2) * S2(1)), 1e-15);
}

TEST(D3, ExpectationMap) {
    Philox g(4);
    Density rho = random_density(2, g);
    RVec b = bloch_of(rho), c = bloch_of(apply_unitary(rho, gate("D3").unitary));
    auto at = [](const RVec& v, int k, int l) { return v[4 * k + l - 1]; };
    EXPECT_NEAR(at(c, 1, 0), -at(b, 1, 3), 1e-14);
    EXPECT_NEAR(at(c, 1, 3), -at(b, 1, 0), 1e-14);
    EXPECT_NEAR(at(c, 0, 1), at(b, 3, 1), 1e-14);
    EXPECT_NEAR(at(c, 1, 1), -at(b, 2, 2), 1e-14);
    EXPECT_NEAR(at(c, 1, 2), at(b, 2, 1), 1e-14);
    EXPECT_NEAR(at(c, 3, 3), at(b, 3, 3), 1e-14);
}

TEST(Diagonal, PiRotations) {
    EXPECT_LT(maxabs(gate("Z1").unitary + I1 * gate("U3:1").unitary), 1e-15);
    EXPECT_LT(maxabs(gate("Z2").unitary + I1 * gate("U3:2").unitary), 1e-15);
    Operator zz = gate("ZZ").unitary;
    RVec d = zz.diagonal().real();
    EXPECT_EQ(d, (RVec(4) << 1, -1, -1, 1).finished());
}

TEST(Hamiltonian, Examples) {
    auto h = effective_hamiltonian(gate("U31").unitary, 1.0);
    EXPECT_LT(maxabs(h.H + (kPi / 4) * tau(2)), 1e-12);
    double w = 0.8, t = 1.7;
    auto h2 = effective_hamiltonian(expi_hermitian(tau(2), w * t / 2), t);
    EXPECT_LT(maxabs(h2.H + (w / 2) * tau(2)), 1e-12);
    auto h3 = effective_hamiltonian(Operator::Identity(2, 2), 0.1);
    EXPECT_LT(maxabs(h3.H), 1e-15);
    EXPECT_LT(maxabs(h3.J), 1e-15);
    EXPECT_THROW(effective_hamiltonian(2.0 * Operator::Identity(2, 2), 0.1), contract_violation);
}

TEST(Hamiltonian, RoundTripCatalog) {
    for (const auto& n : gate_catalog())
        for (double eps : {0.05, 1.0}) {
            Operator u = gate(n).unitary;
            auto h = effective_hamiltonian(u, eps, u);
            EXPECT_LT(hamiltonian_roundtrip_error(u, h.H, eps), 1e-12) << n;
            EXPECT_EQ(maxabs(h.J), 0.0) << n;
            EXPECT_LT(hermiticity_error(h.H), 1e-15);
        }
}

TEST(Hamiltonian, BranchFlagAtMinusOne) {
    EXPECT_TRUE(effective_hamiltonian(gate("Z1").unitary, 0.1).branch_ambiguous);
    EXPECT_FALSE(effective_hamiltonian(gate("U12").unitary, 0.1).branch_ambiguous);
}

TEST(Hamiltonian, TimeDependentJ) {
    // J = (1/4eps)(U - U' + U^dag - U'^dag) from a slowly changing U.
    Operator u0 = expi_hermitian(tau(1), 0.2), u1 = expi_hermitian(tau(1), 0.25);
    auto h = effective_hamiltonian(u1, 0.1, u0);
    Operator ref = (1 / 0.4) * (u1 - u0 + u1.adjoint() - u0.adjoint());
    EXPECT_LT(maxabs(h.J - ref), 1e-15);
    EXPECT_GT(maxabs(h.J), 1e-3);
}

TEST(Quantumness, Examples) {
    EXPECT_LT(maxabs(quantumness_gate(real_embedding(Operator::Identity(4, 4))) - 0.25 * Operator::Identity(4, 4)), 1e-15);
    Philox g(5);
    Operator c = random_unitary(4, g);
    EXPECT_LT(maxabs(quantumness_gate(real_embedding(c)) - 0.25 * Operator::Identity(4, 4)), 1e-14);
    EXPECT_THROW(quantumness_gate(RMat::Zero(8, 8)), degenerate_input);
    EXPECT_THROW(quantumness_gate(RMat::Zero(4, 4)), dimension_error);
}

TEST(Quantumness, RandomInputsValid) {
    Philox g(6);
    for (int i = 0; i < 1000; ++i) {
        RMat a(8, 8);
        for (Eigen::Index k = 0; k < a.size(); ++k) a.data()[k] = g.normal();
        EXPECT_TRUE(is_valid_density(quantumness_gate(a)));
    }
}

TEST(Quantumness, RealEmbeddingRoundTrip) {
    Philox g(7);
    Operator c = random_unitary(4, g);
    EXPECT_EQ(maxabs(from_real_embedding(real_embedding(c)) - c), 0.0);
    Operator d = random_unitary(4, g);
    EXPECT_LT((real_embedding(c * d) - real_embedding(c) * real_embedding(d)).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(Icosahedron, Constants) {
    double a = Icosahedron::a(), b = Icosahedron::b();
    EXPECT_NEAR(a * a + b * b, 1.0, 1e-15);
    EXPECT_NEAR(b, 2 * a / (1 + std::sqrt(5.0)), 1e-15);
    auto d = Icosahedron::directions();
    for (int i = 0; i < 6; ++i)
        for (int j = i + 1; j < 6; ++j) EXPECT_NEAR(std::abs(d[i].dot(d[j])), 1 / std::sqrt(5.0), 1e-15);
}

TEST(Icosahedron, ConstraintHolds) {
    Philox g(8);
    for (int i = 0; i < 50; ++i) {
        RVec s = Icosahedron::expectations(random_density(1, g));
        // ordering 1+, 1-, 2+, 2-, 3+, 3-
        EXPECT_NEAR(s[2] - s[3], 2 / (1 + std::sqrt(5.0)) * (s[0] + s[1]), 1e-14);
    }
}

TEST(Learner, OracleFloorRank) {
    RMat X, Y;
    learner_data(gate("CNOT").unitary, 256, 1, X, Y);
    EXPECT_LT(learner_oracle_floor(Y, 15), 1e-20);
    EXPECT_GT(learner_oracle_floor(Y, 14), 1e-3);
}

TEST(Learner, IdentityGateExact) {
    LearnerConfig c;
    auto r = train_bottleneck("ID2", c);
    EXPECT_LT(r.final_loss, 1e-8);
    EXPECT_FALSE(r.loss_curve.empty());
}

TEST(Learner, RejectsBadConfig) {
    LearnerConfig c;
    c.m = 0;
    EXPECT_THROW(train_bottleneck("CNOT", c), domain_error);
    c.m = 15;
    EXPECT_THROW(train_bottleneck("UH", c), domain_error);
    c.learning_rate = 5;
    c.epochs = 300;
    EXPECT_THROW(train_bottleneck("CNOT", c), numerical_error);
}
