// Copyright 2026 The duom Authors.
//
//    Licensed under the Apache License, Version 2.0 (the "License");
//    you may not use this file except in compliance with the License.
//    You may obtain a copy of the License at
//
//        http://www.apache.org/licenses/LICENSE-2.0
//
//    Unless required by applicable law or agreed to in writing, software
//    distributed under the License is distributed on an "AS IS" BASIS,
//    WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
//    See the License for the specific language governing permissions and
//    limitations under the License.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "duom/error.hpp"
#include "duom/problem.hpp"
#include "duom/rng.hpp"

namespace duom {

enum class SamplerKind { mh, sqa, exact, remote };

inline std::string_view to_string(SamplerKind kind) {
    switch (kind) {
        case SamplerKind::mh: return "mh";
        case SamplerKind::sqa: return "sqa";
        case SamplerKind::exact: return "exact";
        case SamplerKind::remote: return "remote";
    }
    return "unknown";
}

inline SamplerKind parse_sampler_kind(std::string_view name) {
    if (name == "mh") return SamplerKind::mh;
    if (name == "sqa") return SamplerKind::sqa;
    if (name == "exact") return SamplerKind::exact;
    if (name == "remote") return SamplerKind::remote;
    throw InvalidArgument("unknown sampler kind '" + std::string(name) + "'");
}

struct SamplerConfig {
    double beta = 1.0;
    std::size_t num_reads = 100;
    std::size_t sweeps_per_read = 1000;
    std::size_t trotter = 4;       // SQA only
    double gamma_start = 10.0;     // SQA only
    double gamma_end = 0.1;        // SQA only
    std::uint64_t seed = 0;

    /// beta = 0 (uniform limit) is accepted for MH and exact; SQA needs beta > 0.
    void validate(SamplerKind kind) const {
        if (!std::isfinite(beta) || beta < 0.0) throw InvalidArgument("beta must be finite and non-negative");
        if (num_reads == 0) throw InvalidArgument("num_reads must be positive");
        if (sweeps_per_read == 0) throw InvalidArgument("sweeps_per_read must be positive");
        if (kind == SamplerKind::sqa) {
            if (!(beta > 0.0)) throw InvalidArgument("SQA needs beta > 0");
            if (trotter == 0) throw InvalidArgument("trotter must be at least 1");
            if (!(gamma_end > 0.0) || !(gamma_start >= gamma_end) || !std::isfinite(gamma_start)) {
                throw InvalidArgument("SQA schedule needs gamma_start >= gamma_end > 0");
            }
        }
    }

    friend bool operator==(const SamplerConfig&, const SamplerConfig&) = default;
};

/// Multiset of configurations. Weights are occurrence counts for stochastic
/// samplers and Boltzmann probabilities for the exact sampler.
struct SampleSet {
    std::vector<BinaryVector> samples;
    std::vector<double> energies;
    std::vector<double> weights;

    std::size_t size() const noexcept { return samples.size(); }
    bool empty() const noexcept { return samples.empty(); }

    void push_back(BinaryVector x, double e, double w = 1.0) {
        samples.push_back(std::move(x));
        energies.push_back(e);
        weights.push_back(w);
    }

    friend bool operator==(const SampleSet&, const SampleSet&) = default;
};

/// Full Boltzmann distribution over {0,1}^N; state index bit i is x_i.
struct ExactDistribution {
    std::size_t n_vars = 0;
    std::vector<double> probabilities;
    double beta = 0.0;
    double log_partition = 0.0;
};

struct ExpectationEstimate {
    std::vector<double> mean;
    std::vector<double> variance;

    friend bool operator==(const ExpectationEstimate&, const ExpectationEstimate&) = default;
};

inline constexpr std::size_t kMaxExactVars = 20;

inline BinaryVector state_from_index(std::uint64_t index, std::size_t n) {
    BinaryVector x(n);
    for (std::size_t i = 0; i < n; ++i) x[i] = static_cast<std::uint8_t>((index >> i) & 1U);
    return x;
}

namespace detail {

/// Compressed neighbour lists of the off-diagonal couplings.
struct Adjacency {
    std::vector<std::size_t> offsets;
    std::vector<std::size_t> neighbors;
    std::vector<double> weights;

    Adjacency(std::size_t n, std::span<const QuadraticTerm> terms) : offsets(n + 1, 0) {
        for (const auto& t : terms) {
            ++offsets[t.i + 1];
            ++offsets[t.j + 1];
        }
        for (std::size_t i = 0; i < n; ++i) offsets[i + 1] += offsets[i];
        neighbors.resize(offsets[n]);
        weights.resize(offsets[n]);
        std::vector<std::size_t> fill(offsets.begin(), offsets.end() - 1);
        for (const auto& t : terms) {
            neighbors[fill[t.i]] = t.j;
            weights[fill[t.i]++] = t.weight;
            neighbors[fill[t.j]] = t.i;
            weights[fill[t.j]++] = t.weight;
        }
    }
};

inline double weighted_total(std::span<const double> w) {
    double s = 0.0;
    for (double x : w) s += x;
    return s;
}

}  // namespace detail

/// Metropolis acceptance probability min(1, exp(-beta * delta)).
inline double metropolis_acceptance(double delta, double beta) {
    if (delta <= 0.0) return 1.0;
    return std::exp(-beta * delta);
}

/// Single-bit-flip Metropolis on the QUBO energy. One independent chain per read,
/// seeded from (cfg.seed, read), started from a uniform random state and run for
/// sweeps_per_read systematic sweeps.
inline SampleSet mh_sample(const EffectiveQubo& q, const SamplerConfig& cfg) {
    cfg.validate(SamplerKind::mh);
    const std::size_t n = q.n_vars();
    const detail::Adjacency adj(n, q.quadratic());
    SampleSet out;
    out.samples.reserve(cfg.num_reads);
    for (std::size_t read = 0; read < cfg.num_reads; ++read) {
        CounterRng rng(derive_seed(cfg.seed, read));
        BinaryVector x(n);
        for (auto& bit : x) bit = static_cast<std::uint8_t>(rng() >> 63);
        for (std::size_t sweep = 0; sweep < cfg.sweeps_per_read; ++sweep) {
            for (std::size_t i = 0; i < n; ++i) {
                double field = q.linear()[i];
                for (std::size_t e = adj.offsets[i]; e < adj.offsets[i + 1]; ++e) {
                    if (x[adj.neighbors[e]]) field += adj.weights[e];
                }
                const double delta = x[i] ? -field : field;
                if (delta <= 0.0 || rng.uniform() < std::exp(-cfg.beta * delta)) x[i] ^= 1U;
            }
        }
        const double e = energy(q, x);
        out.push_back(std::move(x), e);
    }
    return out;
}

/// Inter-slice coupling -(1 / 2 beta) ln tanh(beta gamma / trotter).
inline double trotter_coupling(double beta, double gamma, std::size_t trotter) {
    const double arg = beta * gamma / static_cast<double>(trotter);
    const double j_perp = -0.5 / beta * std::log(std::tanh(arg));
    if (!std::isfinite(j_perp) || !(arg > 0.0)) {
        throw InvalidArgument("transverse-field schedule gives a non-finite Trotter coupling at beta*gamma/trotter = " +
                              std::to_string(arg));
    }
    return j_perp;
}

/// Path-integral Monte Carlo on `trotter` coupled replicas of the Ising form.
///
/// Slice energies are scaled by 1/trotter and coupled ferromagnetically along the
/// periodic imaginary-time axis with trotter_coupling(beta, gamma, trotter); gamma
/// moves linearly from gamma_start to gamma_end over the sweeps. Each read yields
/// all `trotter` final slices, stored consecutively.
inline SampleSet sqa_sample(const EffectiveQubo& q, const SamplerConfig& cfg) {
    cfg.validate(SamplerKind::sqa);
    const std::size_t n = q.n_vars();
    const std::size_t tau = cfg.trotter;
    const IsingModel ising = ising_view(q);
    const detail::Adjacency adj(n, ising.couplings);
    const double slice_scale = 1.0 / static_cast<double>(tau);

    // Validate the whole schedule up front so no partial output is produced.
    std::vector<double> j_perp(cfg.sweeps_per_read, 0.0);
    for (std::size_t sweep = 0; sweep < cfg.sweeps_per_read; ++sweep) {
        const double frac = cfg.sweeps_per_read > 1
                                    ? static_cast<double>(sweep) / static_cast<double>(cfg.sweeps_per_read - 1)
                                    : 1.0;
        const double gamma = cfg.gamma_start + (cfg.gamma_end - cfg.gamma_start) * frac;
        if (tau > 1) j_perp[sweep] = trotter_coupling(cfg.beta, gamma, tau);
    }

    SampleSet out;
    out.samples.reserve(cfg.num_reads * tau);
    std::vector<std::int8_t> spins(n * tau);  // slice-major
    for (std::size_t read = 0; read < cfg.num_reads; ++read) {
        CounterRng rng(derive_seed(cfg.seed, read));
        for (auto& s : spins) s = (rng() >> 63) ? 1 : -1;
        for (std::size_t sweep = 0; sweep < cfg.sweeps_per_read; ++sweep) {
            const double jp = j_perp[sweep];
            for (std::size_t slice = 0; slice < tau; ++slice) {
                std::int8_t* s = spins.data() + slice * n;
                const std::int8_t* up = spins.data() + ((slice + 1) % tau) * n;
                const std::int8_t* down = spins.data() + ((slice + tau - 1) % tau) * n;
                for (std::size_t i = 0; i < n; ++i) {
                    double field = ising.h[i];
                    for (std::size_t e = adj.offsets[i]; e < adj.offsets[i + 1]; ++e) {
                        field += adj.weights[e] * s[adj.neighbors[e]];
                    }
                    // Flipping s_i changes the slice energy by -2 s_i field.
                    double delta = -2.0 * s[i] * field * slice_scale;
                    if (tau > 1) delta += 2.0 * jp * s[i] * (up[i] + down[i]);
                    if (delta <= 0.0 || rng.uniform() < std::exp(-cfg.beta * delta)) s[i] = -s[i];
                }
            }
        }
        for (std::size_t slice = 0; slice < tau; ++slice) {
            BinaryVector x = to_binary(std::span<const std::int8_t>(spins.data() + slice * n, n));
            const double e = energy(q, x);
            out.push_back(std::move(x), e);
        }
    }
    return out;
}

/// Boltzmann distribution exp(-beta E(x)) / Z by full enumeration.
inline ExactDistribution exact_boltzmann(const EffectiveQubo& q, double beta) {
    const std::size_t n = q.n_vars();
    if (n > kMaxExactVars) {
        throw InvalidArgument("exact enumeration limited to " + std::to_string(kMaxExactVars) + " variables, got " +
                              std::to_string(n));
    }
    if (!std::isfinite(beta) || beta < 0.0) throw InvalidArgument("beta must be finite and non-negative");
    const std::size_t states = std::size_t{1} << n;
    ExactDistribution d;
    d.n_vars = n;
    d.beta = beta;
    d.probabilities.resize(states);
    double max_log = -std::numeric_limits<double>::infinity();
    BinaryVector x(n, 0);
    for (std::size_t idx = 0; idx < states; ++idx) {
        for (std::size_t i = 0; i < n; ++i) x[i] = static_cast<std::uint8_t>((idx >> i) & 1U);
        const double lw = -beta * energy(q, x);
        d.probabilities[idx] = lw;
        max_log = std::max(max_log, lw);
    }
    double total = 0.0;
    for (auto& p : d.probabilities) {
        p = std::exp(p - max_log);
        total += p;
    }
    for (auto& p : d.probabilities) p /= total;
    d.log_partition = max_log + std::log(total);
    return d;
}

/// Every state with nonzero probability, weighted by that probability.
inline SampleSet exact_sample(const EffectiveQubo& q, const SamplerConfig& cfg) {
    const auto d = exact_boltzmann(q, cfg.beta);
    SampleSet out;
    for (std::size_t idx = 0; idx < d.probabilities.size(); ++idx) {
        if (d.probabilities[idx] <= 0.0) continue;
        auto x = state_from_index(idx, d.n_vars);
        const double e = energy(q, x);
        out.push_back(std::move(x), e, d.probabilities[idx]);
    }
    return out;
}

/// i.i.d. draws from an exact distribution (inverse-CDF), one weight per draw.
inline SampleSet draw_exact(const EffectiveQubo& q, const ExactDistribution& d, std::size_t reads, std::uint64_t seed) {
    std::vector<double> cdf(d.probabilities.size());
    double acc = 0.0;
    for (std::size_t i = 0; i < cdf.size(); ++i) cdf[i] = (acc += d.probabilities[i]);
    SampleSet out;
    out.samples.reserve(reads);
    for (std::size_t r = 0; r < reads; ++r) {
        CounterRng rng(derive_seed(seed, r));
        const double u = rng.uniform() * acc;
        auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
        const auto idx = static_cast<std::size_t>(std::min<std::ptrdiff_t>(it - cdf.begin(), cdf.size() - 1));
        auto x = state_from_index(idx, d.n_vars);
        const double e = energy(q, x);
        out.push_back(std::move(x), e);
    }
    return out;
}

namespace detail {

/// Weighted two-pass mean and population variance of each f_k.
template <class StateAt>
ExpectationEstimate weighted_moments(const ConstrainedProblem& p, std::size_t count, std::span<const double> w,
                                     StateAt&& state_at) {
    const std::size_t m = p.n_constraints();
    ExpectationEstimate est{std::vector<double>(m, 0.0), std::vector<double>(m, 0.0)};
    if (m == 0) return est;
    const double total = weighted_total(w);
    if (!(total > 0.0)) throw InvalidArgument("sample weights must have positive total");
    std::vector<double> values(count * m);
    for (std::size_t s = 0; s < count; ++s) {
        const auto& x = state_at(s);
        for (std::size_t k = 0; k < m; ++k) {
            values[s * m + k] = dot(p.constraints()[k].coeffs(), x);
            est.mean[k] += w[s] * values[s * m + k];
        }
    }
    for (auto& mu : est.mean) mu /= total;
    for (std::size_t s = 0; s < count; ++s) {
        for (std::size_t k = 0; k < m; ++k) {
            const double d = values[s * m + k] - est.mean[k];
            est.variance[k] += w[s] * d * d;
        }
    }
    for (auto& var : est.variance) var = std::max(0.0, var / total);
    return est;
}

}  // namespace detail

inline ExpectationEstimate exact_expectations(const ConstrainedProblem& p, const ExactDistribution& d) {
    detail::require_length(d.n_vars, p.n_vars(), "exact distribution");
    BinaryVector x(d.n_vars, 0);
    return detail::weighted_moments(p, d.probabilities.size(), d.probabilities, [&](std::size_t idx) -> const BinaryVector& {
        for (std::size_t i = 0; i < x.size(); ++i) x[i] = static_cast<std::uint8_t>((idx >> i) & 1U);
        return x;
    });
}

/// Weighted sample mean and population variance (no Bessel correction) of each f_k.
inline ExpectationEstimate estimate_expectations(const SampleSet& s, const ConstrainedProblem& p) {
    if (s.empty()) throw InvalidArgument("cannot estimate expectations from an empty sample set");
    detail::require_length(s.weights.size(), s.samples.size(), "sample weights");
    for (const auto& x : s.samples) detail::require_binary(x, p.n_vars());
    return detail::weighted_moments(p, s.size(), s.weights,
                                    [&](std::size_t i) -> const BinaryVector& { return s.samples[i]; });
}

/// A sampler bound to its configuration. `draw` receives the stream seed for one
/// sampling call and must be a pure function of (qubo, seed).
struct Sampler {
    std::string id;
    SamplerConfig config;
    std::function<SampleSet(const EffectiveQubo&, std::uint64_t)> draw;

    SampleSet operator()(const EffectiveQubo& q, std::uint64_t stream_seed) const { return draw(q, stream_seed); }
};

/// Local samplers (mh, sqa, exact). Remote samplers come from make_remote_sampler.
inline Sampler make_sampler(SamplerKind kind, const SamplerConfig& cfg) {
    cfg.validate(kind);
    auto with_seed = [cfg](std::uint64_t seed) {
        auto c = cfg;
        c.seed = seed;
        return c;
    };
    switch (kind) {
        case SamplerKind::mh:
            return {"mh", cfg, [with_seed](const EffectiveQubo& q, std::uint64_t s) { return mh_sample(q, with_seed(s)); }};
        case SamplerKind::sqa:
            return {"sqa", cfg,
                    [with_seed](const EffectiveQubo& q, std::uint64_t s) { return sqa_sample(q, with_seed(s)); }};
        case SamplerKind::exact:
            return {"exact", cfg, [cfg](const EffectiveQubo& q, std::uint64_t) { return exact_sample(q, cfg); }};
        case SamplerKind::remote:
            break;
    }
    throw InvalidArgument("remote samplers need an endpoint; use make_remote_sampler");
}

}  // namespace duom
