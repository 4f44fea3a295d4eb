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
#include <chrono>
#include <cmath>
#include <cstdint>
#include <exception>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "duom/error.hpp"
#include "duom/metrics.hpp"
#include "duom/problem.hpp"
#include "duom/rng.hpp"
#include "duom/samplers.hpp"

namespace duom {

enum class ScheduleKind { constant, learned };

/// Step sizes eta_0 .. eta_{T-1} of the auxiliary-variable update.
struct StepSchedule {
    std::vector<double> etas;
    ScheduleKind kind = ScheduleKind::constant;

    static StepSchedule constant(std::size_t T, double eta) { return {std::vector<double>(T, eta), ScheduleKind::constant}; }
    static StepSchedule learned(std::vector<double> etas) { return {std::move(etas), ScheduleKind::learned}; }

    std::size_t length() const noexcept { return etas.size(); }
};

/// One sampling round. Iterations 0..T-1 are followed by an update with `eta`;
/// the terminal record (iteration T) samples v^(T) and has no eta.
struct TraceRecord {
    std::size_t iteration = 0;
    std::vector<double> v;
    ExpectationEstimate estimate;
    std::vector<double> residuals;  // C_k - <f_k>
    BinaryVector best_x;            // running best over every sample so far
    double best_loss = std::numeric_limits<double>::infinity();
    std::optional<double> best_mse;  // best MSE among this round's samples
    std::optional<double> eta;
    double sample_seconds = 0.0;
    double update_seconds = 0.0;

    double residual_l2() const {
        double s = 0.0;
        for (double r : residuals) s += r * r;
        return std::sqrt(s);
    }
};

struct SolverTrace {
    std::vector<TraceRecord> records;
};

struct SolveResult {
    BinaryVector best_x;
    double best_loss = std::numeric_limits<double>::infinity();
    AuxiliaryState final_v;
    SolverTrace trace;
};

struct RunOptions {
    std::uint64_t seed = 0;
    std::optional<BinaryVector> ground_truth;
};

/// |v_k| beyond this aborts a run.
inline constexpr double kDivergenceBound = 1e12;

/// v'_k = v_k + eta (C_k - <f_k>).
inline AuxiliaryState ohzeki_step(const AuxiliaryState& v, const ExpectationEstimate& est, std::span<const double> targets,
                                  double eta) {
    detail::require_length(est.mean.size(), v.v.size(), "expectation estimate");
    detail::require_length(targets.size(), v.v.size(), "targets");
    AuxiliaryState next{v.v, v.iteration + 1};
    for (std::size_t k = 0; k < next.v.size(); ++k) next.v[k] += eta * (targets[k] - est.mean[k]);
    return next;
}

namespace detail {

struct Candidate {
    const BinaryVector* x;
    double loss;
    double f0;
};

/// Strict "a is better than b": lower loss, then lower f0, then lexicographically smaller.
inline bool better(const Candidate& a, const Candidate& b) {
    if (a.loss != b.loss) return a.loss < b.loss;
    if (a.f0 != b.f0) return a.f0 < b.f0;
    return *a.x < *b.x;
}

}  // namespace detail

/// Sample minimizing the penalty loss, ties broken by f0 then lexicographic order.
inline std::pair<BinaryVector, double> best_feasible(const SampleSet& s, const ConstrainedProblem& p, double lambda) {
    if (s.empty()) throw InvalidArgument("best_feasible needs a nonempty sample set");
    std::optional<detail::Candidate> best;
    for (const auto& x : s.samples) {
        detail::Candidate c{&x, penalty_loss(x, p, lambda), p.objective().evaluate(x)};
        if (!best || detail::better(c, *best)) best = c;
    }
    return {*best->x, best->loss};
}

/// Output of a run including the samples drawn at v^(T).
struct RunOutput {
    SolveResult result;
    SampleSet final_samples;
};

namespace detail {

inline void check_divergence(const AuxiliaryState& v) {
    for (std::size_t k = 0; k < v.v.size(); ++k) {
        if (!std::isfinite(v.v[k]) || std::abs(v.v[k]) > kDivergenceBound) {
            throw DivergenceError(v.iteration, "v[" + std::to_string(k) + "] = " + std::to_string(v.v[k]));
        }
    }
}

/// The solver loop. `observe(t, samples, estimate)` is called after each sampling round.
template <class Observer>
RunOutput run_loop(const ConstrainedProblem& p, const Sampler& sampler, std::span<const double> etas,
                   const PenaltyParams& params, const AuxiliaryState& v0, const RunOptions& options, Observer&& observe) {
    require_length(v0.v.size(), p.n_constraints(), "initial auxiliary variables");
    if (options.ground_truth) require_binary(*options.ground_truth, p.n_vars());
    const auto targets = p.targets();
    const std::size_t T = etas.size();
    using clock = std::chrono::steady_clock;

    RunOutput out;
    out.result.trace.records.reserve(T + 1);
    AuxiliaryState v = v0;
    BinaryVector best_x;
    double best_loss = std::numeric_limits<double>::infinity();
    double best_f0 = std::numeric_limits<double>::infinity();

    for (std::size_t t = 0; t <= T; ++t) {
        const auto t0 = clock::now();
        SampleSet samples;
        try {
            samples = sampler(effective_qubo(p, v), derive_seed(options.seed, t));
        } catch (const std::exception& e) {
            std::throw_with_nested(SolverError(t, std::string("sampler '") + sampler.id + "' failed: " + e.what()));
        }
        if (samples.empty()) throw SolverError(t, "sampler '" + sampler.id + "' returned no samples");
        const auto t1 = clock::now();

        TraceRecord rec;
        rec.iteration = t;
        rec.v = v.v;
        rec.estimate = estimate_expectations(samples, p);
        rec.residuals.resize(targets.size());
        for (std::size_t k = 0; k < targets.size(); ++k) rec.residuals[k] = targets[k] - rec.estimate.mean[k];

        for (const auto& x : samples.samples) {
            const Candidate c{&x, penalty_loss(x, p, params.lambda), p.objective().evaluate(x)};
            if (best_x.empty() || better(c, Candidate{&best_x, best_loss, best_f0})) {
                best_x = x;
                best_loss = c.loss;
                best_f0 = c.f0;
            }
            if (options.ground_truth) {
                const double e = mse(x, *options.ground_truth);
                if (!rec.best_mse || e < *rec.best_mse) rec.best_mse = e;
            }
        }
        rec.best_x = best_x;
        rec.best_loss = best_loss;
        rec.sample_seconds = std::chrono::duration<double>(t1 - t0).count();

        observe(t, samples, rec.estimate);

        if (t < T) {
            const auto t2 = clock::now();
            rec.eta = etas[t];
            v = ohzeki_step(v, rec.estimate, targets, etas[t]);
            check_divergence(v);
            rec.update_seconds = std::chrono::duration<double>(clock::now() - t2).count();
        } else {
            out.final_samples = std::move(samples);
        }
        out.result.trace.records.push_back(std::move(rec));
    }
    out.result.best_x = std::move(best_x);
    out.result.best_loss = best_loss;
    out.result.final_v = std::move(v);
    return out;
}

}  // namespace detail

/// Runs T = schedule.length() auxiliary-variable iterations followed by a final
/// sampling round at v^(T). The returned best_x is the penalty-loss minimizer over
/// every sample drawn in the run. Sampling round t uses stream seed
/// derive_seed(options.seed, t).
inline SolveResult ohzeki_run(const ConstrainedProblem& p, const Sampler& sampler, const StepSchedule& schedule,
                              const PenaltyParams& params, const AuxiliaryState& v0, const RunOptions& options = {}) {
    return detail::run_loop(p, sampler, schedule.etas, params, v0, options, [](auto&&...) {})
            .result;
}

inline SolveResult ohzeki_run(const ConstrainedProblem& p, const Sampler& sampler, const StepSchedule& schedule,
                              const PenaltyParams& params, const RunOptions& options = {}) {
    return ohzeki_run(p, sampler, schedule, params, AuxiliaryState::zeros(p.n_constraints()), options);
}

/// First iteration whose sampling round contains the ground truth, if any.
inline std::optional<std::size_t> iterations_to_zero(const SolverTrace& trace) {
    for (const auto& r : trace.records) {
        if (r.best_mse && *r.best_mse == 0.0) return r.iteration;
    }
    return std::nullopt;
}

/// A problem together with its known optimum, when one exists.
struct LabeledProblem {
    ConstrainedProblem problem;
    std::optional<BinaryVector> ground_truth;
};

struct GridSearchRow {
    double eta = 0.0;
    double mean_final_mse = 0.0;
    double mean_iterations_to_zero = 0.0;  // unsolved runs count as T + 1
    std::size_t diverged = 0;
    std::vector<double> final_mse;
};

struct GridSearchResult {
    double best_eta = 0.0;
    std::vector<GridSearchRow> table;
};

/// Picks the constant step size with the lowest mean final best-MSE; ties go to
/// fewer mean iterations-to-zero, then to the smaller eta. Instance i always runs
/// with seed derive_seed(seed, i), so candidates see common random numbers.
/// A diverged run scores final MSE = +inf.
inline GridSearchResult grid_search_step(std::span<const LabeledProblem> instances, std::span<const double> candidates,
                                         const PenaltyParams& params, const Sampler& sampler, std::size_t T,
                                         std::uint64_t seed = 0) {
    if (instances.empty()) throw InvalidArgument("grid search needs at least one instance");
    if (candidates.empty()) throw InvalidArgument("grid search needs at least one candidate step size");
    GridSearchResult out;
    for (double eta : candidates) {
        GridSearchRow row;
        row.eta = eta;
        for (std::size_t i = 0; i < instances.size(); ++i) {
            const auto& inst = instances[i];
            if (!inst.ground_truth) throw InvalidArgument("grid search instances need a ground truth");
            RunOptions opts{derive_seed(seed, i), inst.ground_truth};
            double final_mse = std::numeric_limits<double>::infinity();
            double iters = static_cast<double>(T + 1);
            try {
                const auto res = ohzeki_run(inst.problem, sampler, StepSchedule::constant(T, eta), params, opts);
                final_mse = res.trace.records.back().best_mse.value();
                if (auto hit = iterations_to_zero(res.trace)) iters = static_cast<double>(*hit);
            } catch (const DivergenceError&) {
                ++row.diverged;
            }
            row.final_mse.push_back(final_mse);
            row.mean_final_mse += final_mse;
            row.mean_iterations_to_zero += iters;
        }
        row.mean_final_mse /= static_cast<double>(instances.size());
        row.mean_iterations_to_zero /= static_cast<double>(instances.size());
        out.table.push_back(std::move(row));
    }
    const auto best = std::min_element(out.table.begin(), out.table.end(), [](const auto& a, const auto& b) {
        if (a.mean_final_mse != b.mean_final_mse) return a.mean_final_mse < b.mean_final_mse;
        if (a.mean_iterations_to_zero != b.mean_iterations_to_zero) {
            return a.mean_iterations_to_zero < b.mean_iterations_to_zero;
        }
        return a.eta < b.eta;
    });
    out.best_eta = best->eta;
    return out;
}

}  // namespace duom
