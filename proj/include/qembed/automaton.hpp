#pragma once

#include "core.hpp"
#include "parallel.hpp"
#include "rng.hpp"

#include <cstdint>
#include <functional>
#include <map>
#include <sstream>

namespace qembed {

struct invalid_automaton : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};
struct unsupported_overall_distribution : std::logic_error {
    using std::logic_error::logic_error;
};

using Config = std::uint32_t;

// Spin k (0-based) of configuration tau is +1 iff bit (N-1-k) is set.
inline int spin_value(Config tau, int k, int n) { return ((tau >> (n - 1 - k)) & 1u) ? 1 : -1; }

inline Config config_from_spins(const std::vector<int>& s) {
    Config tau = 0;
    int n = int(s.size());
    for (int k = 0; k < n; ++k)
        if (s[k] > 0) tau |= Config(1) << (n - 1 - k);
    return tau;
}

inline std::string config_string(Config tau, int n) {
    std::string s;
    for (int k = 0; k < n; ++k) s += spin_value(tau, k, n) > 0 ? '+' : '-';
    return s;
}

struct ConfigSpace {
    int n_spins = 0;
    std::size_t size() const { return std::size_t(1) << n_spins; }
};

struct Distribution {
    int n = 0;
    RVec p;

    static Distribution uniform(int n) {
        std::size_t m = std::size_t(1) << n;
        return {n, RVec::Constant(Eigen::Index(m), 1.0 / double(m))};
    }
    static Distribution delta(int n, Config tau) {
        Distribution d{n, RVec::Zero(Eigen::Index(std::size_t(1) << n))};
        d.p[tau] = 1.0;
        return d;
    }
    // Independent spins with the given means.
    static Distribution product(const std::vector<double>& means) {
        int n = int(means.size());
        Distribution d{n, RVec(Eigen::Index(std::size_t(1) << n))};
        for (Eigen::Index t = 0; t < d.p.size(); ++t) {
            double w = 1;
            for (int k = 0; k < n; ++k) w *= 0.5 * (1 + spin_value(Config(t), k, n) * means[k]);
            d.p[t] = w;
        }
        return d;
    }
    void validate(double tol = 1e-12) const {
        if (p.size() != Eigen::Index(std::size_t(1) << n)) throw dimension_error("distribution size is not 2^N");
        if (p.minCoeff() < -tol) throw domain_error("negative probability");
        if (std::abs(p.sum() - 1.0) > tol) throw domain_error("probabilities do not sum to one");
    }
};

struct ClassicalWave {
    int n = 0;
    RVec q;

    static ClassicalWave from_distribution(const Distribution& d) { return {d.n, d.p.cwiseMax(0.0).cwiseSqrt()}; }
    Distribution distribution() const { return {n, q.cwiseAbs2()}; }
};

// Orthogonal step operator. Unique jumps are stored as signed permutations:
// configuration tau goes to target[tau] with amplitude sign[tau].
struct StepOperator {
    enum class Kind { unique_jump, general_orthogonal };
    Kind kind = Kind::unique_jump;
    int n = 0;
    std::vector<Config> target;
    std::vector<signed char> sign;
    RMat matrix;  // general_orthogonal only

    std::size_t size() const { return std::size_t(1) << n; }

    RMat dense() const {
        if (kind == Kind::general_orthogonal) return matrix;
        RMat m = RMat::Zero(Eigen::Index(size()), Eigen::Index(size()));
        for (std::size_t t = 0; t < size(); ++t) m(target[t], t) = sign[t];
        return m;
    }
    Config operator()(Config tau) const { return target[tau]; }
};

inline StepOperator unique_jump(int n, const std::function<Config(Config)>& f) {
    StepOperator s;
    s.n = n;
    s.target.resize(s.size());
    s.sign.assign(s.size(), 1);
    std::vector<char> hit(s.size(), 0);
    for (std::size_t t = 0; t < s.size(); ++t) {
        Config u = f(Config(t));
        if (u >= s.size() || hit[u]) throw invalid_automaton("unique_jump: map is not a bijection");
        hit[u] = 1;
        s.target[t] = u;
    }
    return s;
}

inline StepOperator general_orthogonal(int n, const RMat& m) {
    std::size_t sz = std::size_t(1) << n;
    if (m.rows() != Eigen::Index(sz) || m.cols() != Eigen::Index(sz)) throw dimension_error("step operator size");
    if ((m.transpose() * m - RMat::Identity(m.rows(), m.cols())).cwiseAbs().maxCoeff() > 1e-12)
        throw invalid_automaton("step operator is not orthogonal");
    StepOperator s;
    s.kind = StepOperator::Kind::general_orthogonal;
    s.n = n;
    s.matrix = m;
    return s;
}

// s'_k = sign_k * prod_{j in mask_k} s_j  (mask bit j <-> spin j, 0-based).
struct SpinMap {
    int n = 0;
    std::vector<int> sign;
    std::vector<std::uint32_t> mask;

    static SpinMap identity(int n) {
        SpinMap m{n, std::vector<int>(n, 1), std::vector<std::uint32_t>(n)};
        for (int k = 0; k < n; ++k) m.mask[k] = 1u << k;
        return m;
    }
    SpinMap& set(int k, int sgn, std::initializer_list<int> from) {
        sign[k] = sgn;
        mask[k] = 0;
        for (int j : from) mask[k] ^= 1u << j;
        return *this;
    }
    Config apply(Config tau) const {
        std::vector<int> s(n);
        for (int k = 0; k < n; ++k) {
            int v = sign[k];
            for (int j = 0; j < n; ++j)
                if (mask[k] >> j & 1u) v *= spin_value(tau, j, n);
            s[k] = v;
        }
        return config_from_spins(s);
    }
    // Composition: (this after other).
    SpinMap after(const SpinMap& o) const {
        SpinMap r{n, std::vector<int>(n), std::vector<std::uint32_t>(n)};
        for (int k = 0; k < n; ++k) {
            int sg = sign[k];
            std::uint32_t m = 0;
            for (int j = 0; j < n; ++j)
                if (mask[k] >> j & 1u) {
                    sg *= o.sign[j];
                    m ^= o.mask[j];
                }
            r.sign[k] = sg;
            r.mask[k] = m;
        }
        return r;
    }
    StepOperator step() const {
        SpinMap self = *this;
        return unique_jump(n, [self](Config t) { return self.apply(t); });
    }
};

// Six updatings of a three-spin qubit chain, the Hadamard map, and the identity.
inline SpinMap named_transformation(const std::string& name) {
    SpinMap m = SpinMap::identity(3);
    if (name == "T12") m.set(0, 1, {1}).set(1, -1, {0});
    else if (name == "T23") m.set(1, 1, {2}).set(2, -1, {1});
    else if (name == "T31") m.set(2, 1, {0}).set(0, -1, {2});
    else if (name == "T1") m.set(1, -1, {1}).set(2, -1, {2});
    else if (name == "T2") m.set(0, -1, {0}).set(2, -1, {2});
    else if (name == "T3") m.set(0, -1, {0}).set(1, -1, {1});
    else if (name == "TH") m.set(0, 1, {2}).set(2, 1, {0}).set(1, -1, {1});
    else if (name == "ID") {}
    else if (name == "CFLIP") m.set(1, 1, {0, 1});  // s2 flips when s1 = -1
    else if (name == "R2") m.set(1, -1, {1});        // single reflection s2 -> -s2
    else throw domain_error("unknown transformation: " + name);
    return m;
}

inline const std::vector<std::string>& chain_updatings() {
    static const std::vector<std::string> v{"T12", "T23", "T31", "T1", "T2", "T3"};
    return v;
}

// "T12;T31;T1" -> names in time order.
inline std::vector<std::string> parse_sequence(const std::string& s) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string tok;
    while (std::getline(ss, tok, ';')) {
        auto b = tok.find_first_not_of(" \t"), e = tok.find_last_not_of(" \t");
        if (b == std::string::npos) continue;
        out.push_back(tok.substr(b, e - b + 1));
    }
    return out;
}

inline Distribution evolve_distribution(const Distribution& p, const StepOperator& s) {
    if (s.kind != StepOperator::Kind::unique_jump)
        throw contract_violation("evolve_distribution needs a unique jump step; use evolve_wave");
    if (s.n != p.n) throw dimension_error("evolve_distribution: size mismatch");
    Distribution r{p.n, RVec(p.p.size())};
    for (std::size_t t = 0; t < s.size(); ++t) r.p[s.target[t]] = p.p[Eigen::Index(t)];
    return r;
}

inline ClassicalWave evolve_wave(const ClassicalWave& q, const StepOperator& s) {
    if (s.n != q.n) throw dimension_error("evolve_wave: size mismatch");
    if (s.kind == StepOperator::Kind::general_orthogonal) return {q.n, s.matrix * q.q};
    ClassicalWave r{q.n, RVec(q.q.size())};
    for (std::size_t t = 0; t < s.size(); ++t) r.q[s.target[t]] = s.sign[t] * q.q[Eigen::Index(t)];
    return r;
}

inline double classical_expectation(const Distribution& p, const RVec& observable) {
    if (observable.size() != p.p.size()) throw dimension_error("observable size");
    return p.p.dot(observable);
}

// Product of the spins selected by mask (bit j <-> spin j).
inline int spin_product(Config tau, std::uint32_t mask, int n) {
    int v = 1;
    for (int j = 0; j < n; ++j)
        if (mask >> j & 1u) v *= spin_value(tau, j, n);
    return v;
}

inline RVec spin_observable(int n, std::uint32_t mask) {
    RVec a(Eigen::Index(std::size_t(1) << n));
    for (Eigen::Index t = 0; t < a.size(); ++t) a[t] = spin_product(Config(t), mask, n);
    return a;
}

inline double spin_expectation(const Distribution& p, std::uint32_t mask) {
    double s = 0;
    for (Eigen::Index t = 0; t < p.p.size(); ++t)
        if (p.p[t] != 0) s += p.p[t] * spin_product(Config(t), mask, p.n);
    return s;
}

struct Trajectory {
    std::vector<Config> path;
    double weight = 0;
};

// One trajectory per initial configuration; steps are cycled up to horizon T.
inline std::vector<Trajectory> trajectory_probabilities(const Distribution& p0, const std::vector<StepOperator>& steps, int T) {
    for (const auto& s : steps)
        if (s.kind != StepOperator::Kind::unique_jump)
            throw unsupported_overall_distribution("overall distribution is only guaranteed for unique jump automata");
    if (T > 0 && steps.empty()) throw domain_error("trajectory_probabilities: no steps for positive horizon");
    std::vector<Trajectory> out(std::size_t(p0.p.size()));
    for (std::size_t t0 = 0; t0 < out.size(); ++t0) {
        auto& tr = out[t0];
        tr.weight = p0.p[Eigen::Index(t0)];
        tr.path.push_back(Config(t0));
        Config c = Config(t0);
        for (int t = 0; t < T; ++t) {
            c = steps[std::size_t(t) % steps.size()](c);
            tr.path.push_back(c);
        }
    }
    return out;
}

struct Estimate {
    std::uint32_t mask = 0;
    double mean = 0;
    double stderr_ = 0;
};

// Monte-Carlo estimates of <prod_{mask} s>. Samples are drawn in fixed chunks
// with derived seeds, so results do not depend on the worker count.
inline std::vector<Estimate> sample_estimator(const Distribution& p, std::size_t n_samples, std::uint64_t seed,
                                              const std::vector<std::uint32_t>& masks) {
    if (n_samples < 1) throw domain_error("sample_estimator: n_samples must be >= 1");
    RVec cdf(p.p.size());
    double acc = 0;
    for (Eigen::Index t = 0; t < p.p.size(); ++t) cdf[t] = (acc += p.p[t]);
    const std::size_t chunk = 1 << 16;
    std::size_t nchunks = (n_samples + chunk - 1) / chunk;
    std::vector<std::vector<double>> s1(nchunks, std::vector<double>(masks.size())), s2 = s1;
    parallel_for(nchunks, [&](std::size_t c) {
        Philox g(derive_seed(seed, c));
        std::size_t cnt = std::min(chunk, n_samples - c * chunk);
        for (std::size_t i = 0; i < cnt; ++i) {
            double u = g.uniform() * acc;
            auto it = std::upper_bound(cdf.data(), cdf.data() + cdf.size(), u);
            Config tau = Config(std::min<std::ptrdiff_t>(it - cdf.data(), cdf.size() - 1));
            for (std::size_t m = 0; m < masks.size(); ++m) {
                double v = spin_product(tau, masks[m], p.n);
                s1[c][m] += v;
                s2[c][m] += v * v;
            }
        }
    });
    std::vector<Estimate> out(masks.size());
    for (std::size_t m = 0; m < masks.size(); ++m) {
        double a = 0, b = 0;
        for (std::size_t c = 0; c < nchunks; ++c) {
            a += s1[c][m];
            b += s2[c][m];
        }
        double n = double(n_samples), mean = a / n;
        double var = n > 1 ? std::max(0.0, (b - n * mean * mean) / (n - 1)) : 0.0;
        out[m] = {masks[m], mean, std::sqrt(var / n)};
    }
    return out;
}

inline std::uint32_t spin_mask(std::initializer_list<int> spins) {
    std::uint32_t m = 0;
    for (int j : spins) m ^= 1u << j;
    return m;
}

}  // namespace qembed
