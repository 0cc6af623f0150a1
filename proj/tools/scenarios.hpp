#pragma once

#include "qembed/bitquantum.hpp"
#include "qembed/continuum.hpp"
#include "qembed/gates.hpp"
#include "qembed/io.hpp"
#include "qembed/measurement.hpp"
#include "qembed/opensystem.hpp"
#include "qembed/oscillator.hpp"
#include "qembed/parallel.hpp"
#include "qembed/states.hpp"

#include <algorithm>
#include <functional>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace qembed::cli {

inline constexpr const char* kVersion = "0.1.0";

struct config_error : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct Param {
    std::string key, def, help;
    bool flag = false;
};

class Params {
  public:
    std::map<std::string, std::string> values;

    const std::string& str(const std::string& k) const {
        auto it = values.find(k);
        if (it == values.end()) throw config_error("missing parameter --" + k);
        return it->second;
    }
    double num(const std::string& k) const {
        const std::string& s = str(k);
        std::size_t pos = 0;
        double v = 0;
        try {
            v = std::stod(s, &pos);
        } catch (const std::exception&) {
            pos = 0;
        }
        if (pos != s.size() || s.empty()) throw config_error("--" + k + " expects a number, got '" + s + "'");
        return v;
    }
    long integer(const std::string& k) const {
        double v = num(k);
        if (v != std::floor(v)) throw config_error("--" + k + " expects an integer, got '" + str(k) + "'");
        return long(v);
    }
    long positive(const std::string& k) const {
        long v = integer(k);
        if (v < 1) throw config_error("--" + k + " must be >= 1");
        return v;
    }
    bool flag(const std::string& k) const {
        const std::string& s = str(k);
        if (s == "true" || s == "1") return true;
        if (s == "false" || s == "0") return false;
        throw config_error("--" + k + " expects true/false, got '" + s + "'");
    }
    std::vector<double> list(const std::string& k) const {
        std::vector<double> out;
        std::stringstream ss(str(k));
        std::string tok;
        while (std::getline(ss, tok, ',')) {
            Params p;
            p.values[k] = tok;
            out.push_back(p.num(k));
        }
        if (out.empty()) throw config_error("--" + k + " expects a comma separated list");
        return out;
    }
    RVec vec3(const std::string& k) const {
        auto v = list(k);
        if (v.size() != 3) throw config_error("--" + k + " expects three comma separated numbers");
        return Eigen::Map<RVec>(v.data(), 3);
    }
};

struct Output {
    json result = json::object();
    std::optional<Table> table;
};

struct Scenario {
    std::string name, doc;
    std::vector<Param> params;
    std::function<bool(const Params&)> needs_seed;
    std::function<Output(const Params&, std::uint64_t seed)> run;
};

inline json matrix_json(const Operator& m) {
    json re = json::array(), im = json::array();
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        json a = json::array(), b = json::array();
        for (Eigen::Index c = 0; c < m.cols(); ++c) {
            a.push_back(m(r, c).real());
            b.push_back(m(r, c).imag());
        }
        re.push_back(a);
        im.push_back(b);
    }
    return json{{"re", re}, {"im", im}};
}

inline json vec_json(const RVec& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

inline Density named_two_qubit_state(const std::string& s) {
    if (s == "singlet") return pure_density(singlet());
    if (s == "psi_plus") return pure_density(psi_plus());
    if (s == "rotated_bell") return pure_density(rotated_bell());
    throw config_error("unknown state: " + s);
}

namespace scen {

inline Output chsh(const Params& p, std::uint64_t seed) {
    Output o;
    const std::string mode = p.str("mode"), state = p.str("state");
    static const std::map<std::string, std::string> modes{
        {"classical", "classical_distribution"}, {"cartesian", "cartesian_quantum"}, {"pairwise", "pairwise_bound"}, {"arbitrary", "arbitrary_directions"}};
    auto mit = modes.find(mode);
    if (mit == modes.end()) throw config_error("unknown chsh mode: " + mode);
    o.result["mode"] = mode;
    if (mode == "classical" || state == "random") {
        // Sweep: classical fuzz over 6-spin distributions, or random two-qubit states.
        long n = p.positive("n");
        Philox g(seed);
        double worst = mode == "pairwise" ? 1e300 : 0;
        long violations = 0;
        Table t{{"index", "value", "within_bound"}, {}};
        for (long i = 0; i < n; ++i) {
            ChshInputs in;
            if (mode == "classical") in.distribution = random_distribution(6, g);
            else in.rho = random_density(2, g);
            if (mode == "arbitrary") {
                if (!p.flag("optimize")) throw config_error("arbitrary mode on random states needs --optimize");
                auto opt = chsh_optimize_directions(*in.rho, int(p.positive("restarts")), derive_seed(seed, std::uint64_t(i)));
                in.directions = opt.directions;
            }
            auto r = qembed::chsh(mit->second, in);
            worst = mode == "pairwise" ? std::min(worst, r.value) : std::max(worst, r.value);
            violations += !r.within_bound;
            t.rows.push_back({double(i), r.value, double(r.within_bound)});
        }
        o.result["samples"] = n;
        o.result[mode == "pairwise" ? "min_margin" : "max_value"] = worst;
        o.result["violations"] = violations;
        o.table = t;
        return o;
    }
    ChshInputs in;
    in.rho = named_two_qubit_state(state);
    o.result["state"] = state;
    if (mode == "arbitrary") {
        if (p.flag("optimize")) {
            auto opt = chsh_optimize_directions(*in.rho, int(p.positive("restarts")), seed);
            in.directions = opt.directions;
        } else {
            RVec a(3), a2(3), b(3), b2(3);
            a << 0, 0, 1;
            a2 << 1, 0, 0;
            b << -1 / std::sqrt(2.0), 0, -1 / std::sqrt(2.0);
            b2 << 1 / std::sqrt(2.0), 0, -1 / std::sqrt(2.0);
            in.directions = {a, a2, b, b2};
        }
        json d = json::array();
        for (const auto& v : in.directions) d.push_back(vec_json(v));
        o.result["directions"] = d;
    }
    auto r = qembed::chsh(mit->second, in);
    o.result["value"] = r.value;
    o.result["within_bound"] = r.within_bound;
    o.result["detail"] = r.detail;
    return o;
}

inline Output clock(const Params& p, std::uint64_t) {
    Output o;
    ClockState s0{p.num("beta0"), p.num("omega")};
    double tmax = p.num("tmax"), dt = p.num("dt");
    if (dt <= 0 || tmax < 0) throw config_error("--dt must be > 0 and --tmax >= 0");
    auto psis = p.list("psi-list");
    Table t{{"t", "psi", "expectation", "reference"}, {}};
    double worst = 0, worst_u = 0;
    long steps = long(std::floor(tmax / dt + 1e-9));
    for (long k = 0; k <= steps; ++k) {
        double tk = dt * double(k);
        ClockState s = clock_evolve(s0, tk);
        for (double psi : psis) {
            double e = clock_expectation(s, psi), ref = std::cos(psi - s.beta);
            worst = std::max(worst, std::abs(e - ref));
            t.rows.push_back({tk, psi, e, ref});
        }
        Density ev = apply_unitary(clock_density_matrix(s0), clock_unitary(s0.omega, tk));
        worst_u = std::max(worst_u, (ev - clock_density_matrix(s)).cwiseAbs().maxCoeff());
    }
    o.result["max_expectation_error"] = worst;
    o.result["max_unitary_error"] = worst_u;
    o.table = t;
    return o;
}

inline Output completeness(const Params& p, std::uint64_t seed) {
    Output o;
    BitQuantumMap map = BitQuantumMap::parse(p.str("map"));
    long n = p.positive("n");
    int restarts = int(p.positive("restarts"));
    double tol = p.num("tol");
    std::vector<double> fid(std::size_t(n), 0);
    std::vector<int> ok(std::size_t(n), 0);
    parallel_for(std::size_t(n), [&](std::size_t i) {
        Philox g(derive_seed(seed, i));
        Density rho = random_density(map.Q, g);
        auto r = solve_distribution(rho, map, restarts, g.next_u64());
        fid[i] = r.fidelity;
        ok[i] = r.fidelity >= 1 - tol;
    });
    Table t{{"index", "fidelity", "success"}, {}};
    long succ = 0;
    for (long i = 0; i < n; ++i) {
        succ += ok[std::size_t(i)];
        t.rows.push_back({double(i), fid[std::size_t(i)], double(ok[std::size_t(i)])});
    }
    o.result["map"] = map.name();
    o.result["n"] = n;
    o.result["successes"] = succ;
    o.result["worst_fidelity"] = *std::min_element(fid.begin(), fid.end());
    o.table = t;
    return o;
}

inline Output decoherence(const Params& p, std::uint64_t) {
    Output o;
    double w = p.num("omega");
    long pts = p.positive("points");
    if (pts < 2) throw config_error("--points must be >= 2");
    CVec psi = CVec::Zero(4);
    const std::string init = p.str("initial");
    if (init == "uu") psi[0] = 1;
    else if (init == "ud") psi[1] = 1;
    else if (init == "du") psi[2] = 1;
    else if (init == "dd") psi[3] = 1;
    else throw config_error("unknown initial state: " + init);
    auto traj = decoherence_trajectory(pure_density(psi), w, p.num("tmax"), int(pts));
    Table t{{"t", "P", "rho1", "rho2", "rho3", "A", "ReB", "ImB", "dPdt"}, {}};
    for (const auto& d : traj) {
        Density r{from_bloch((RVec(3) << d.rho1, d.rho2, d.rho3).finished())};
        t.rows.push_back({d.t, d.P, d.rho1, d.rho2, d.rho3, d.A, d.ReB, d.ImB, purity_rate(r, d.A, cplx(d.ReB, d.ImB))});
    }
    double pmin = 1;
    for (const auto& d : traj) pmin = std::min(pmin, d.P);
    o.result["initial"] = init;
    o.result["min_purity"] = pmin;
    o.result["final_purity"] = traj.back().P;
    o.table = t;
    return o;
}

inline Output gates(const Params& p, std::uint64_t seed) {
    Output o;
    const std::string name = p.str("gate");
    double eps = p.num("eps");
    if (name == "all") {
        Table t{{"index", "qubits", "roundtrip_error", "J_norm", "branch_ambiguous"}, {}};
        json names = json::array();
        for (std::size_t i = 0; i < gate_catalog().size(); ++i) {
            GateSpec g = gate(gate_catalog()[i]);
            auto h = effective_hamiltonian(g.unitary, eps);
            names.push_back(g.name);
            t.rows.push_back({double(i), double(g.qubits), hamiltonian_roundtrip_error(g.unitary, h.H, eps), h.J.norm(), double(h.branch_ambiguous)});
        }
        o.result["catalog"] = names;
        o.table = t;
        return o;
    }
    GateSpec g = gate(name);
    auto h = effective_hamiltonian(g.unitary, eps);
    o.result["gate"] = g.name;
    o.result["unitary"] = matrix_json(g.unitary);
    o.result["hamiltonian"] = matrix_json(h.H);
    o.result["roundtrip_error"] = hamiltonian_roundtrip_error(g.unitary, h.H, eps);
    o.result["J_norm"] = h.J.norm();
    o.result["branch_ambiguous"] = h.branch_ambiguous;
    BitQuantumMap map = BitQuantumMap::parse(p.str("map"));
    if (qubits_of_dim(g.unitary.rows()) != map.Q) throw config_error("gate and map act on different qubit numbers");
    auto r = automaton_realization(name, map);
    static const char* st[] = {"realizable", "not_realizable", "undetermined"};
    json rj{{"map", map.name()}, {"status", st[int(r.status)]}, {"note", r.note}};
    if (r.step) {
        rj["signs"] = r.step->sign;
        rj["masks"] = r.step->mask;
        long cases = p.integer("cases");
        if (cases > 0) rj["verify_max_error"] = verify_realization(name, map, *r.step, int(cases), seed);
    }
    o.result["realization"] = rj;
    return o;
}

inline Output ghz(const Params& p, std::uint64_t seed) {
    Output o;
    int restarts = int(p.positive("restarts"));
    auto r = solve_distribution(pure_density(ghz3()), BitQuantumMap::correlation(3), restarts, seed, 2000, false);
    Table t{{"restart", "fidelity"}, {}};
    for (std::size_t i = 0; i < r.restart_fidelities.size(); ++i) t.rows.push_back({double(i), r.restart_fidelities[i]});
    o.result["best_fidelity"] = r.fidelity;
    o.result["gap"] = 1 - r.fidelity;
    o.result["restarts"] = restarts;
    o.table = t;
    return o;
}

inline Output kochen_specker(const Params&, std::uint64_t) {
    Output o;
    auto r = kochen_specker_demo();
    o.result = json{{"chains_commute", r.chains_commute}, {"q_equals_fgh_error", r.q_equals_fgh}, {"q_plus_c_error", r.q_plus_c},
                    {"identities_error", r.identities}, {"assignments_checked", r.assignments_checked},
                    {"assignments_agreeing", r.assignments_agreeing}, {"contradiction", r.contradiction}, {"message", r.message}};
    return o;
}

inline Output learner(const Params& p, std::uint64_t seed) {
    Output o;
    LearnerConfig c;
    c.m = int(p.positive("m"));
    c.epochs = int(p.positive("epochs"));
    c.n_train = int(p.positive("n-train"));
    c.learning_rate = p.num("lr");
    c.momentum = p.num("momentum");
    c.seed = seed;
    auto r = train_bottleneck(p.str("gate"), c);
    Table t{{"epoch", "loss"}, {}};
    for (auto& [e, l] : r.loss_curve) t.rows.push_back({double(e), l});
    o.result["final_loss"] = r.final_loss;
    o.result["oracle_floor"] = r.oracle_floor;
    o.result["m"] = c.m;
    o.table = t;
    return o;
}

inline Output oscillator(const Params& p, std::uint64_t) {
    Output o;
    auto modes = p.list("modes");
    if (modes.size() != 2 || modes[0] < 0 || modes[1] < 0 || modes[0] != std::floor(modes[0]) || modes[1] != std::floor(modes[1]))
        throw config_error("--modes expects two nonnegative integers n,n'");
    ModePair mp{int(modes[0]), int(modes[1]), p.num("m"), p.num("c")};
    long n = p.positive("grid");
    double L = p.num("box");
    PhaseGrid g{int(n), int(n), L, L};
    double tmax = p.str("tmax") == "period" ? 2 * kPi / mp.omega() : p.num("tmax");
    long samples = p.positive("samples");
    PhaseSpaceWave w0 = wave_from_modes(mp, g);
    double e0 = quantum_energy_expectation(w0, mp.m, mp.c);
    Table t{{"t", "norm", "energy", "position", "overlap_re", "overlap_im"}, {}};
    auto row = [&](double tt, const PhaseSpaceWave& w) {
        cplx ov = (w0.phi.conjugate().cwiseProduct(w.phi)).sum() * g.dz() * g.dp();
        t.rows.push_back({tt, w.norm(), quantum_energy_expectation(w, mp.m, mp.c), quantum_position_expectation(w), ov.real(), ov.imag()});
    };
    row(0, w0);
    double dt = liouville_default_dt(g, mp.m, mp.c);
    long steps = std::max(1L, long(std::ceil(tmax / dt - 1e-9)));
    long stride = std::max(1L, steps / samples);
    long k = 0;
    PhaseSpaceWave wf = liouville_evolve(w0, mp.m, mp.c, tmax, tmax / double(steps), [&](double tt, const PhaseSpaceWave& w) {
        if (++k % stride == 0 || k == steps) row(tt, w);
    });
    double ef = quantum_energy_expectation(wf, mp.m, mp.c);
    o.result["initial_energy"] = e0;
    o.result["energy_drift"] = std::abs(ef - e0) / std::max(std::abs(e0), 1e-300);
    o.result["relative_l2_change"] = (wf.phi - w0.phi).norm() / w0.phi.norm();
    o.result["omega"] = mp.omega();
    if (p.flag("spectrum")) {
        auto pk = oscillation_spectrum_one(mp, g);
        o.result["spectrum"] = json{{"expected", pk.expected}, {"green_peak", pk.green_peak}, {"signed_peak", pk.signed_peak}, {"bin", pk.bin}};
    }
    o.table = t;
    return o;
}

inline Output qubit_chain(const Params& p, std::uint64_t seed) {
    Output o;
    Philox g(seed);
    std::vector<std::string> seq;
    if (p.str("sequence") == "random") {
        long len = p.positive("length");
        const auto& ups = chain_updatings();
        for (long i = 0; i < len; ++i) seq.push_back(ups[g.next_u64() % ups.size()]);
    } else {
        seq = parse_sequence(p.str("sequence"));
    }
    BitQuantumMap map = BitQuantumMap::one_qubit();
    Distribution d = random_constrained_distribution(map, g);
    Density rho0 = apply_map(d, map), rhoU = rho0;
    Table t{{"step", "rho1", "rho2", "rho3", "purity", "deviation"}, {}};
    auto add = [&](int k) {
        Density r = apply_map(d, map);
        RVec b = bloch_of(r);
        t.rows.push_back({double(k), b[0], b[1], b[2], b.squaredNorm(), (r - rhoU).cwiseAbs().maxCoeff()});
    };
    add(0);
    for (std::size_t k = 0; k < seq.size(); ++k) {
        d = evolve_distribution(d, named_transformation(seq[k]).step());
        rhoU = apply_unitary(rhoU, gate(gate_for_transformation(seq[k])).unitary);
        add(int(k + 1));
    }
    double dev = 0;
    for (auto& r : t.rows) dev = std::max(dev, r[5]);
    o.result["sequence"] = seq;
    o.result["max_deviation"] = dev;
    o.result["purity_change"] = std::abs(t.rows.back()[4] - t.rows.front()[4]);
    o.table = t;
    return o;
}

inline Output sphere(const Params& p, std::uint64_t seed) {
    Output o;
    SphereState s{p.vec3("rho"), RadialProfile::parse(p.str("profile"))};
    if (std::abs(s.rho.norm() - 1) > 1e-12) throw config_error("--rho must be a unit vector");
    RVec e = p.vec3("e");
    if (e.norm() == 0) throw config_error("--e must be nonzero");
    e /= e.norm();
    double exact = e.dot(s.rho);
    o.result["expected"] = exact;
    o.result["profile"] = s.profile.name;
    if (p.str("method") == "quadrature") {
        double v = sphere_expectation_quadrature(s, e);
        o.result["value"] = v;
        o.result["error"] = std::abs(v - exact);
    } else if (p.str("method") == "mc") {
        auto m = sphere_expectation_mc(s, e, std::size_t(p.positive("n")), seed);
        o.result["value"] = m.mean;
        o.result["stderr"] = m.stderr_;
        o.result["z"] = (m.mean - exact) / m.stderr_;
        o.result["samples"] = m.n;
    } else {
        throw config_error("unknown method: " + p.str("method"));
    }
    return o;
}

inline Output stern_gerlach(const Params& p, std::uint64_t) {
    Output o;
    const std::string mode = p.str("mode");
    if (mode != "coherent" && mode != "decoherent") throw config_error("--mode must be coherent or decoherent");
    auto r = qembed::stern_gerlach(mode);
    o.result["mode"] = r.mode;
    o.result["probabilities"] = r.probabilities;
    o.result["expectations"] = std::vector<double>(r.expectations.begin(), r.expectations.end());
    return o;
}

}  // namespace scen

inline const std::vector<Scenario>& scenarios() {
    auto never = [](const Params&) { return false; };
    auto always = [](const Params&) { return true; };
    static const std::vector<Scenario> s{
        {"chsh",
         "CHSH combinations: classical fuzz, Cartesian quantum bound, pairwise bounds, arbitrary directions",
         {{"state", "singlet", "singlet | psi_plus | rotated_bell | random"},
          {"mode", "arbitrary", "classical | cartesian | pairwise | arbitrary"},
          {"optimize", "false", "maximize over measurement directions", true},
          {"restarts", "8", "optimizer restarts"},
          {"n", "1000", "samples for classical or random-state sweeps"}},
         [](const Params& p) { return p.str("mode") == "classical" || p.str("state") == "random"; },
         scen::chsh},
        {"clock",
         "Classical clock on a circle: <s(psi)> = cos(psi - beta) and the induced rotation",
         {{"beta0", "0", "initial angle"},
          {"omega", "1", "angular velocity"},
          {"tmax", "3.141592653589793", "final time"},
          {"dt", "0.19634954084936207", "output time step"},
          {"psi-list", "0,0.78539816339744828,1.5707963267948966,3.1415926535897931", "comma separated observation angles"}},
         never, scen::clock},
        {"completeness",
         "Solve for classical distributions reproducing random density matrices",
         {{"map", "correlation_Q2", "one_qubit | correlation_Q2 | correlation_Q3 | average_spin_Q1 | average_spin_Q2"},
          {"n", "100", "number of random density matrices"},
          {"restarts", "10", "solver restarts per matrix"},
          {"tol", "1e-6", "success threshold 1 - fidelity"}},
         always, scen::completeness},
        {"decoherence",
         "Two-qubit unitary evolution and the purity of the reduced qubit",
         {{"omega", "1", "coupling"},
          {"tmax", "3.141592653589793", "final time"},
          {"points", "33", "trajectory points"},
          {"initial", "uu", "initial product basis state uu | ud | du | dd"}},
         never, scen::decoherence},
        {"gates",
         "Gate catalog: effective Hamiltonians and automaton realizations",
         {{"gate", "all", "gate name or 'all' for the catalog table"},
          {"map", "one_qubit", "bit-quantum map for the realization search"},
          {"eps", "0.1", "time step for the effective Hamiltonian"},
          {"cases", "0", "random cases for realization verification"}},
         [](const Params& p) { return p.str("gate") != "all" && p.integer("cases") > 0; },
         scen::gates},
        {"ghz",
         "Best classical realization of the GHZ state under the Q=3 correlation map",
         {{"restarts", "50", "solver restarts"}},
         always, scen::ghz},
        {"kochen-specker",
         "Three-qubit operator chains and the sign assignment contradiction",
         {},
         never, scen::kochen_specker},
        {"learner",
         "Linear bottleneck network learning a two-qubit gate on real embeddings",
         {{"gate", "CNOT", "two-qubit gate"},
          {"m", "15", "bottleneck width"},
          {"epochs", "4000", "training epochs"},
          {"n-train", "256", "training samples"},
          {"lr", "0.5", "learning rate"},
          {"momentum", "0.9", "heavy-ball momentum"}},
         always, scen::learner},
        {"oscillator",
         "Phase-space wave of a harmonic oscillator mode pair under Liouville flow",
         {{"modes", "1,0", "mode pair n,n'"},
          {"grid", "64", "points per phase-space axis"},
          {"box", "8", "half width of the periodic box"},
          {"tmax", "period", "final time or 'period' for 2 pi / omega"},
          {"m", "1", "mass"},
          {"c", "1", "spring constant"},
          {"samples", "32", "output rows"},
          {"spectrum", "false", "also estimate the oscillation frequency", true}},
         never, scen::oscillator},
        {"qubit-chain",
         "Three-spin automaton updatings compared with the matching qubit gates",
         {{"sequence", "random", "semicolon separated updatings (T12;T23;...) or 'random'"},
          {"length", "20", "length of a random sequence"}},
         always, scen::qubit_chain},
        {"sphere",
         "Spin expectations of a sphere distribution: quadrature or Monte Carlo",
         {{"profile", "shell", "shell | gaussian"},
          {"method", "quadrature", "quadrature | mc"},
          {"rho", "0.6,0,0.8", "unit Bloch vector"},
          {"e", "0,0,1", "spin direction"},
          {"n", "1000000", "Monte Carlo samples"}},
         [](const Params& p) { return p.str("method") == "mc"; },
         scen::sphere},
        {"stern-gerlach",
         "Three sequential spin measurements, coherent or decoherent",
         {{"mode", "coherent", "coherent | decoherent"}},
         never, scen::stern_gerlach},
    };
    return s;
}

inline const Scenario* find_scenario(const std::string& name) {
    for (const auto& s : scenarios())
        if (s.name == name) return &s;
    return nullptr;
}

struct Request {
    std::string scenario;
    std::map<std::string, std::string> params;
    std::optional<std::uint64_t> seed;
    std::string format = "json";
    std::string out;
};

inline std::string param_string(const json& v) {
    if (v.is_string()) return v.get<std::string>();
    if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
    if (v.is_number_integer()) return std::to_string(v.get<long long>());
    if (v.is_number_float()) return format_double(v.get<double>());
    throw config_error("parameter values must be strings, numbers or booleans");
}

// Config file: {"scenario", "seed", "format", "out", "params": {...}}.
inline Request request_from_json(const json& j) {
    if (!j.is_object()) throw config_error("config file must hold a JSON object");
    Request r;
    for (auto it = j.begin(); it != j.end(); ++it) {
        const std::string& k = it.key();
        if (k == "scenario") r.scenario = it->get<std::string>();
        else if (k == "seed") {
            if (!it->is_number_unsigned()) throw config_error("seed must be a nonnegative integer");
            r.seed = it->get<std::uint64_t>();
        } else if (k == "format") r.format = it->get<std::string>();
        else if (k == "out") r.out = it->get<std::string>();
        else if (k == "params") {
            if (!it->is_object()) throw config_error("params must be an object");
            for (auto pit = it->begin(); pit != it->end(); ++pit) r.params[pit.key()] = param_string(*pit);
        } else throw config_error("unknown config key: " + k);
    }
    return r;
}

struct Resolved {
    const Scenario* scenario = nullptr;
    Params params;
    std::optional<std::uint64_t> seed;
};

inline Resolved resolve(const Request& r) {
    Resolved out;
    out.scenario = find_scenario(r.scenario);
    if (!out.scenario) throw config_error("unknown scenario: '" + r.scenario + "' (see 'qembed list')");
    for (const auto& p : out.scenario->params) out.params.values[p.key] = p.def;
    for (const auto& [k, v] : r.params) {
        if (!out.params.values.count(k)) throw config_error("unknown parameter for " + r.scenario + ": --" + k);
        out.params.values[k] = v;
    }
    for (const auto& p : out.scenario->params)
        if (p.flag) out.params.flag(p.key);
    if (r.format != "json" && r.format != "csv") throw config_error("--format must be json or csv");
    out.seed = r.seed;
    if (out.scenario->needs_seed(out.params) && !out.seed) throw config_error(r.scenario + " is stochastic with these parameters; --seed is required");
    return out;
}

inline json envelope(const Resolved& rs, const Output& o) {
    json j{{"scenario", rs.scenario->name}, {"params", rs.params.values}, {"result", o.result}, {"version", kVersion}};
    j["seed"] = rs.seed ? json(*rs.seed) : json(nullptr);
    if (o.table) j["table"] = o.table->to_json();
    return j;
}

inline std::string render(const json& env, const Output& o, const std::string& format) {
    if (format == "json") return dump_json(env);
    return o.table ? to_csv(*o.table) : flat_csv(o.result);
}

inline std::string scenario_help(const Scenario& s) {
    std::ostringstream os;
    os << "qembed run " << s.name << " [--seed N] [--config FILE] [--out DIR] [--format json|csv] [parameters]\n\n" << s.doc << "\n";
    if (!s.params.empty()) os << "\nParameters:\n";
    for (const auto& p : s.params) {
        std::string k = "  --" + p.key + (p.flag ? "" : " VALUE");
        os << k << std::string(k.size() < 24 ? 24 - k.size() : 1, ' ') << p.help << " (default: " << p.def << ")\n";
    }
    return os.str();
}

}  // namespace qembed::cli
