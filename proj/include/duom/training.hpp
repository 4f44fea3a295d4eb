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
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "duom/error.hpp"
#include "duom/problem.hpp"
#include "duom/rng.hpp"
#include "duom/samplers.hpp"
#include "duom/solver.hpp"

namespace duom {

/// Quantities recorded during an unfolded forward pass that the analytic
/// backward pass needs: residual C_k - <f_k>_t and Var_t(f_k) for t < T, plus
/// the samples drawn at v^(T).
struct UnfoldTape {
    std::vector<std::vector<double>> residuals;
    std::vector<std::vector<double>> variances;
    SampleSet final_samples;

    std::size_t depth() const noexcept { return residuals.size(); }
};

inline std::pair<UnfoldTape, SolveResult> forward_unfolded(const ConstrainedProblem& p, const Sampler& sampler,
                                                           std::span<const double> etas, const PenaltyParams& params,
                                                           const RunOptions& options = {}) {
    UnfoldTape tape;
    const auto targets = p.targets();
    const std::size_t T = etas.size();
    auto out = detail::run_loop(p, sampler, etas, params, AuxiliaryState::zeros(p.n_constraints()), options,
                                [&](std::size_t t, const SampleSet&, const ExpectationEstimate& est) {
                                    if (t == T) return;
                                    std::vector<double> r(targets.size());
                                    for (std::size_t k = 0; k < r.size(); ++k) r[k] = targets[k] - est.mean[k];
                                    tape.residuals.push_back(std::move(r));
                                    tape.variances.push_back(est.variance);
                                });
    tape.final_samples = std::move(out.final_samples);
    return {std::move(tape), std::move(out.result)};
}

/// Training loss: weighted mean of the penalty loss over the final samples.
inline double unfolded_loss(const SampleSet& final, const ConstrainedProblem& p, double lambda) {
    if (final.empty()) throw InvalidArgument("loss needs a nonempty sample set");
    double total = 0.0;
    double acc = 0.0;
    for (std::size_t s = 0; s < final.size(); ++s) {
        acc += final.weights[s] * penalty_loss(final.samples[s], p, lambda);
        total += final.weights[s];
    }
    return acc / total;
}

/// d<L>/dv_k = beta Cov(L, f_k) over the final distribution.
inline std::vector<double> grad_v_final(const SampleSet& final, const ConstrainedProblem& p, double lambda, double beta) {
    if (final.empty()) throw InvalidArgument("gradient needs a nonempty sample set");
    const std::size_t m = p.n_constraints();
    std::vector<double> g(m, 0.0);
    if (m == 0) return g;
    const std::size_t n = final.size();
    std::vector<double> loss(n);
    std::vector<std::vector<double>> f(n);
    double total = 0.0;
    double loss_mean = 0.0;
    std::vector<double> f_mean(m, 0.0);
    for (std::size_t s = 0; s < n; ++s) {
        const double w = final.weights[s];
        loss[s] = penalty_loss(final.samples[s], p, lambda);
        f[s] = p.constraint_values(final.samples[s]);
        total += w;
        loss_mean += w * loss[s];
        for (std::size_t k = 0; k < m; ++k) f_mean[k] += w * f[s][k];
    }
    loss_mean /= total;
    for (auto& fm : f_mean) fm /= total;
    for (std::size_t s = 0; s < n; ++s) {
        const double dl = final.weights[s] * (loss[s] - loss_mean);
        for (std::size_t k = 0; k < m; ++k) g[k] += dl * (f[s][k] - f_mean[k]);
    }
    for (auto& gk : g) gk *= beta / total;
    return g;
}

/// dL/deta_t = sum_k gT_k prod_{u=t+1}^{T-1} (1 - eta_u beta Var_u(f_k)) (C_k - <f_k>_t).
///
/// Cross-constraint terms d<f_k>/dv_j, j != k, are not part of the Jacobian. The
/// product is accumulated backwards, so the cost is O(T m).
inline std::vector<double> grad_eta(const UnfoldTape& tape, std::span<const double> g_final, std::span<const double> etas,
                                    double beta) {
    const std::size_t T = tape.depth();
    detail::require_length(etas.size(), T, "step sizes");
    detail::require_length(tape.variances.size(), T, "tape variances");
    std::vector<double> carry(g_final.begin(), g_final.end());
    std::vector<double> grad(T, 0.0);
    for (std::size_t t = T; t-- > 0;) {
        detail::require_length(tape.residuals[t].size(), carry.size(), "tape residuals");
        detail::require_length(tape.variances[t].size(), carry.size(), "tape variances");
        double s = 0.0;
        for (std::size_t k = 0; k < carry.size(); ++k) s += carry[k] * tape.residuals[t][k];
        grad[t] = s;
        for (std::size_t k = 0; k < carry.size(); ++k) carry[k] *= 1.0 - etas[t] * beta * tape.variances[t][k];
    }
    return grad;
}

struct AdamState {
    std::vector<double> first_moment;
    std::vector<double> second_moment;
    std::size_t step = 0;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;

    static AdamState fresh(std::size_t n) { return {std::vector<double>(n, 0.0), std::vector<double>(n, 0.0)}; }
};

/// One bias-corrected Adam step; `params` and `state` are updated in place.
inline void adam_update(std::vector<double>& params, std::span<const double> grads, AdamState& state, double lr) {
    detail::require_length(grads.size(), params.size(), "adam gradients");
    detail::require_length(state.first_moment.size(), params.size(), "adam first moment");
    detail::require_length(state.second_moment.size(), params.size(), "adam second moment");
    ++state.step;
    const double c1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
    const double c2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));
    for (std::size_t i = 0; i < params.size(); ++i) {
        state.first_moment[i] = state.beta1 * state.first_moment[i] + (1.0 - state.beta1) * grads[i];
        state.second_moment[i] = state.beta2 * state.second_moment[i] + (1.0 - state.beta2) * grads[i] * grads[i];
        const double m_hat = state.first_moment[i] / c1;
        const double v_hat = state.second_moment[i] / c2;
        params[i] -= lr * m_hat / (std::sqrt(v_hat) + state.epsilon);
    }
}

struct TrainConfig {
    std::size_t T = 30;
    double eta_init = 1e-2;
    double lambda = 1.0;
    double beta = 1.0;  // inverse temperature used in the variance-based gradient
    std::size_t epochs = 10;
    std::size_t minibatches_per_epoch = 20;
    std::size_t minibatch_size = 4;
    double lr_init = 5e-2;
    double lr_decay = 0.8;
    bool incremental = true;
    std::uint64_t seed = 0;

    void validate() const {
        if (minibatches_per_epoch == 0 || minibatch_size == 0) throw InvalidArgument("batch counts must be positive");
        if (!(lr_decay > 0.0 && lr_decay <= 1.0)) throw InvalidArgument("lr_decay must lie in (0, 1]");
        if (!std::isfinite(eta_init) || !std::isfinite(lr_init) || lr_init < 0.0) {
            throw InvalidArgument("eta_init and lr_init must be finite, lr_init non-negative");
        }
        PenaltyParams{lambda, beta}.validate();
    }
};

/// Depth trained during each epoch. Incremental training exposes 5 more
/// iterations per stage: stage s trains min(T, 5 s) iterations for
/// epochs / ceil(T / 5) epochs; leftover epochs go to the last stages.
inline std::vector<std::size_t> depth_per_epoch(const TrainConfig& cfg) {
    std::vector<std::size_t> depth(cfg.epochs, cfg.T);
    if (!cfg.incremental || cfg.T == 0) return depth;
    constexpr std::size_t kStageWidth = 5;
    const std::size_t stages = (cfg.T + kStageWidth - 1) / kStageWidth;
    const std::size_t base = cfg.epochs / stages;
    const std::size_t extra = cfg.epochs % stages;
    std::size_t e = 0;
    for (std::size_t s = 1; s <= stages; ++s) {
        const std::size_t count = base + (s > stages - extra ? 1 : 0);
        for (std::size_t i = 0; i < count; ++i) depth[e++] = std::min(cfg.T, kStageWidth * s);
    }
    return depth;
}

struct TrainingProvenance {
    std::string sampler;
    std::optional<std::size_t> trotter;
    double beta = 1.0;

    friend bool operator==(const TrainingProvenance&, const TrainingProvenance&) = default;
};

/// Trained step sizes plus everything needed to trace where they came from.
struct LearnedSchedule {
    std::vector<double> etas;
    TrainingProvenance trained_with;
    double lambda = 1.0;
    std::uint64_t seed = 0;
    std::string dataset_digest;
    std::vector<double> loss_curve;

    std::size_t T() const noexcept { return etas.size(); }
    StepSchedule schedule() const { return StepSchedule::learned(etas); }

    friend bool operator==(const LearnedSchedule&, const LearnedSchedule&) = default;
};

/// FNV-1a over the numeric content of every problem, as 16 hex digits.
inline std::string dataset_digest(std::span<const ConstrainedProblem> dataset) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    auto feed = [&h](std::uint64_t word) {
        for (int b = 0; b < 8; ++b) {
            h ^= (word >> (8 * b)) & 0xffU;
            h *= 0x100000001b3ULL;
        }
    };
    auto feed_double = [&](double d) { feed(std::bit_cast<std::uint64_t>(d)); };
    for (const auto& p : dataset) {
        feed(p.n_vars());
        for (const auto& t : p.objective().terms()) {
            feed(t.i);
            feed(t.j);
            feed_double(t.weight);
        }
        feed(p.n_constraints());
        for (const auto& c : p.constraints()) {
            for (double a : c.coeffs()) feed_double(a);
            feed_double(c.target());
        }
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

/// Unsupervised training of the step sizes.
///
/// Each epoch shuffles the dataset and performs minibatches_per_epoch Adam
/// updates, each on minibatch_size instances taken cyclically from the shuffled
/// order. A batch gradient is the mean of grad_eta over its instances; the loss
/// curve holds the mean pre-update loss per epoch. The learning rate is
/// lr_init * lr_decay^epoch. Sampler seeds come from (seed, epoch, batch, slot).
inline LearnedSchedule train(std::span<const ConstrainedProblem> dataset, const TrainConfig& cfg, const Sampler& sampler) {
    if (dataset.empty()) throw InvalidArgument("training needs a nonempty dataset");
    cfg.validate();
    LearnedSchedule out;
    out.etas.assign(cfg.T, cfg.eta_init);
    out.trained_with.sampler = sampler.id;
    if (sampler.id == "sqa") out.trained_with.trotter = sampler.config.trotter;
    out.trained_with.beta = cfg.beta;
    out.lambda = cfg.lambda;
    out.seed = cfg.seed;
    out.dataset_digest = dataset_digest(dataset);

    const PenaltyParams params{cfg.lambda, cfg.beta};
    const auto depths = depth_per_epoch(cfg);
    AdamState adam = AdamState::fresh(cfg.T);
    std::vector<std::size_t> order(dataset.size());

    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        const std::size_t depth = depths[epoch];
        const double lr = cfg.lr_init * std::pow(cfg.lr_decay, static_cast<double>(epoch));
        std::iota(order.begin(), order.end(), std::size_t{0});
        CounterRng shuffle_rng(derive_seed(cfg.seed, {0xe90cULL, epoch}));
        for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[shuffle_rng.below(i)]);

        double epoch_loss = 0.0;
        std::size_t evaluated = 0;
        std::size_t cursor = 0;
        for (std::size_t batch = 0; batch < cfg.minibatches_per_epoch; ++batch) {
            std::vector<double> grad(cfg.T, 0.0);
            for (std::size_t slot = 0; slot < cfg.minibatch_size; ++slot) {
                const std::size_t idx = order[cursor++ % order.size()];
                const auto& p = dataset[idx];
                const std::span<const double> active(out.etas.data(), depth);
                RunOptions opts{derive_seed(cfg.seed, {epoch, batch, slot}), std::nullopt};
                std::pair<UnfoldTape, SolveResult> fwd;
                try {
                    fwd = forward_unfolded(p, sampler, active, params, opts);
                } catch (const std::exception& e) {
                    std::throw_with_nested(Error("training instance " + std::to_string(idx) + ": " + e.what()));
                }
                const auto& tape = fwd.first;
                epoch_loss += unfolded_loss(tape.final_samples, p, cfg.lambda);
                ++evaluated;
                const auto g_final = grad_v_final(tape.final_samples, p, cfg.lambda, cfg.beta);
                const auto g = grad_eta(tape, g_final, active, cfg.beta);
                for (std::size_t t = 0; t < depth; ++t) grad[t] += g[t];
            }
            for (auto& g : grad) g /= static_cast<double>(cfg.minibatch_size);
            adam_update(out.etas, grad, adam, lr);
        }
        out.loss_curve.push_back(epoch_loss / static_cast<double>(evaluated));
    }
    return out;
}

/// Display name of a sampler in method labels; the hardware-style remote backend is "QA".
inline std::string sampler_label(const std::string& id) {
    if (id == "mh") return "MH";
    if (id == "sqa") return "SQA";
    if (id == "remote") return "QA";
    if (id == "exact") return "EXACT";
    return id;
}

/// "<trained>-<executed>", e.g. SQA-QA.
inline std::string transfer_label(const std::string& trained_with, const std::string& executed_with) {
    return sampler_label(trained_with) + "-" + sampler_label(executed_with);
}

struct TransferResult {
    SolveResult result;
    std::string trained_with;
    std::string executed_with;
    std::string label;
};

/// Runs the solver with a learned schedule under a possibly different sampler.
inline TransferResult transfer_execute(const LearnedSchedule& sched, const ConstrainedProblem& p,
                                       const Sampler& execution_sampler, const PenaltyParams& params,
                                       const RunOptions& options = {}, std::optional<std::size_t> expected_T = {}) {
    if (expected_T && *expected_T != sched.T()) {
        throw DimensionError("schedule has T = " + std::to_string(sched.T()) + ", expected " +
                             std::to_string(*expected_T));
    }
    TransferResult out;
    out.result = ohzeki_run(p, execution_sampler, sched.schedule(), params, options);
    out.trained_with = sched.trained_with.sampler;
    out.executed_with = execution_sampler.id;
    out.label = transfer_label(out.trained_with, out.executed_with);
    return out;
}

}  // namespace duom
