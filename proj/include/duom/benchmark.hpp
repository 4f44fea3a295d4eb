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
#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "duom/error.hpp"
#include "duom/metrics.hpp"
#include "duom/problem.hpp"
#include "duom/rng.hpp"
#include "duom/samplers.hpp"
#include "duom/solver.hpp"
#include "duom/training.hpp"

namespace duom {

/// M/N above which noiseless binary reconstruction is typically easy.
inline constexpr double kReconstructionThreshold = 0.633;

/// f0(x) = -sum over horizontally and vertically adjacent pixels x_i x_j on an
/// open (non-periodic) width x height grid, pixel (r, c) at index r * width + c.
inline QuadraticObjective lattice_objective(std::size_t width, std::size_t height) {
    if (width == 0 || height == 0) throw InvalidArgument("lattice dimensions must be positive");
    std::vector<QuadraticTerm> terms;
    terms.reserve(2 * width * height);
    for (std::size_t r = 0; r < height; ++r) {
        for (std::size_t c = 0; c < width; ++c) {
            const std::size_t i = r * width + c;
            if (c + 1 < width) terms.push_back({i, i + 1, -1.0});
            if (r + 1 < height) terms.push_back({i, i + width, -1.0});
        }
    }
    return QuadraticObjective(width * height, std::move(terms));
}

/// Centered square of side ceil(width / 3) set to one.
inline BinaryVector default_ground_truth(std::size_t width, std::size_t height) {
    if (width < 3 || height < 3) throw InvalidArgument("default ground truth needs at least a 3x3 image");
    const std::size_t side = (width + 2) / 3;
    if (side > height) throw InvalidArgument("image too short for the default ground truth");
    const std::size_t c0 = (width - side) / 2;
    const std::size_t r0 = (height - side) / 2;
    BinaryVector x(width * height, 0);
    for (std::size_t r = r0; r < r0 + side; ++r) {
        for (std::size_t c = c0; c < c0 + side; ++c) x[r * width + c] = 1;
    }
    return x;
}

struct DatasetSpec {
    std::size_t width = 15;
    std::size_t height = 15;
    double m_ratio = 0.6;
    std::size_t count = 50;
    std::uint64_t seed = 0;
    std::optional<BinaryVector> ground_truth;  // default_ground_truth when empty

    std::size_t n_vars() const noexcept { return width * height; }
    std::size_t n_measurements() const { return static_cast<std::size_t>(std::lround(m_ratio * static_cast<double>(n_vars()))); }

    void validate() const {
        if (width == 0 || height == 0) throw InvalidArgument("image dimensions must be positive");
        if (!(m_ratio > 0.0 && m_ratio < 1.0)) throw InvalidArgument("m_ratio must lie in (0, 1)");
        if (count == 0) throw InvalidArgument("dataset count must be at least 1");
        if (ground_truth) detail::require_binary(*ground_truth, n_vars());
    }

    /// Non-fatal remarks about the configuration.
    std::vector<std::string> warnings() const {
        std::vector<std::string> w;
        if (m_ratio >= kReconstructionThreshold) {
            w.push_back("m_ratio " + std::to_string(m_ratio) + " is at or above the typical-hardness threshold " +
                        std::to_string(kReconstructionThreshold));
        }
        return w;
    }

    BinaryVector resolved_ground_truth() const {
        return ground_truth ? *ground_truth : default_ground_truth(width, height);
    }
};

/// Noiseless reconstruction instance y = A x*, carried as a constrained problem
/// whose k-th constraint is (row k of A, y_k).
struct ImageInstance {
    std::size_t width = 0;
    std::size_t height = 0;
    std::size_t index = 0;
    std::uint64_t seed = 0;
    BinaryVector x_star;
    ConstrainedProblem problem;

    std::size_t n_measurements() const noexcept { return problem.n_constraints(); }
    const std::vector<double>& row(std::size_t k) const { return problem.constraints().at(k).coeffs(); }
    std::vector<double> observations() const { return problem.targets(); }

    LabeledProblem labeled() const { return {problem, x_star}; }
};

/// Instance `index` of the dataset. A is i.i.d. standard normal, drawn row-major
/// from the stream derive_seed(spec.seed, index).
inline ImageInstance generate_instance(const DatasetSpec& spec, std::size_t index) {
    spec.validate();
    const std::size_t n = spec.n_vars();
    const std::size_t m = spec.n_measurements();
    ImageInstance inst;
    inst.width = spec.width;
    inst.height = spec.height;
    inst.index = index;
    inst.seed = derive_seed(spec.seed, index);
    inst.x_star = spec.resolved_ground_truth();

    CounterRng rng(inst.seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::vector<LinearConstraint> constraints;
    constraints.reserve(m);
    for (std::size_t k = 0; k < m; ++k) {
        std::vector<double> a(n);
        for (auto& v : a) v = normal(rng);
        const double y = detail::dot(a, inst.x_star);
        constraints.emplace_back(std::move(a), y);
    }
    inst.problem = ConstrainedProblem(lattice_objective(spec.width, spec.height), std::move(constraints));
    return inst;
}

inline std::vector<ImageInstance> generate_dataset(const DatasetSpec& spec) {
    std::vector<ImageInstance> out;
    out.reserve(spec.count);
    for (std::size_t i = 0; i < spec.count; ++i) out.push_back(generate_instance(spec, i));
    return out;
}

inline std::vector<ConstrainedProblem> problems_of(std::span<const ImageInstance> instances) {
    std::vector<ConstrainedProblem> out;
    out.reserve(instances.size());
    for (const auto& inst : instances) out.push_back(inst.problem);
    return out;
}

struct ConfidenceInterval {
    double mean = 0.0;
    double half_width = 0.0;
};

/// mean +- 1.96 s / sqrt(n), s the sample standard deviation.
inline ConfidenceInterval confidence_interval(std::span<const double> values) {
    if (values.size() < 2) throw InvalidArgument("confidence interval needs at least two values");
    const double n = static_cast<double>(values.size());
    double mean = 0.0;
    for (double v : values) mean += v;
    mean /= n;
    double ss = 0.0;
    for (double v : values) ss += (v - mean) * (v - mean);
    const double s = std::sqrt(ss / (n - 1.0));
    return {mean, 1.96 * s / std::sqrt(n)};
}

/// Median; +inf entries (unsolved runs) sort last.
inline double median(std::vector<double> values) {
    if (values.empty()) throw InvalidArgument("median of an empty list");
    std::sort(values.begin(), values.end());
    const std::size_t n = values.size();
    if (n % 2 == 1) return values[n / 2];
    const double a = values[n / 2 - 1];
    const double b = values[n / 2];
    if (std::isinf(a) || std::isinf(b)) return std::isinf(a) ? a : b;
    return 0.5 * (a + b);
}

/// Per-iteration aggregate of the best MSE over instances. half_width is NaN when
/// only one instance contributes.
struct MetricSeries {
    std::vector<double> mean_best_mse;
    std::vector<double> ci_half_width;
    std::vector<double> frac_solved;

    std::size_t length() const noexcept { return mean_best_mse.size(); }
};

struct Method {
    std::string label;
    StepSchedule schedule;
    Sampler sampler;
};

struct MethodEvaluation {
    std::string label;
    MetricSeries series;
    /// First iteration reaching MSE 0 per instance, +inf when never reached.
    std::vector<double> iterations_to_zero;
    std::vector<SolveResult> results;

    double median_iterations_to_zero() const { return median(iterations_to_zero); }
    double solved_fraction() const {
        if (iterations_to_zero.empty()) return 0.0;
        return static_cast<double>(std::count_if(iterations_to_zero.begin(), iterations_to_zero.end(),
                                                 [](double v) { return std::isfinite(v); })) /
               static_cast<double>(iterations_to_zero.size());
    }
};

inline MetricSeries aggregate_series(std::span<const SolveResult> results) {
    MetricSeries series;
    if (results.empty()) return series;
    const std::size_t len = results.front().trace.records.size();
    for (const auto& r : results) {
        if (r.trace.records.size() != len) throw DimensionError("traces of different lengths cannot be aggregated");
    }
    for (std::size_t t = 0; t < len; ++t) {
        std::vector<double> values;
        values.reserve(results.size());
        for (const auto& r : results) {
            const auto& rec = r.trace.records[t];
            if (!rec.best_mse) throw InvalidArgument("trace lacks best-MSE values; run with a ground truth");
            values.push_back(*rec.best_mse);
        }
        double mean = 0.0;
        for (double v : values) mean += v;
        mean /= static_cast<double>(values.size());
        series.mean_best_mse.push_back(mean);
        series.ci_half_width.push_back(values.size() >= 2 ? confidence_interval(values).half_width
                                                          : std::numeric_limits<double>::quiet_NaN());
        series.frac_solved.push_back(static_cast<double>(std::count(values.begin(), values.end(), 0.0)) /
                                     static_cast<double>(values.size()));
    }
    return series;
}

/// Runs every method on every instance. Instance i uses run seed
/// derive_seed(seed, i) for all methods.
inline std::vector<MethodEvaluation> evaluate_methods(std::span<const ImageInstance> instances,
                                                      std::span<const Method> methods, const PenaltyParams& params,
                                                      std::uint64_t seed = 0) {
    if (instances.empty()) throw InvalidArgument("evaluation needs at least one instance");
    if (methods.empty()) throw InvalidArgument("evaluation needs at least one method");
    std::set<std::string> labels;
    for (const auto& m : methods) {
        if (!labels.insert(m.label).second) throw InvalidArgument("duplicate method label '" + m.label + "'");
    }
    std::vector<MethodEvaluation> out;
    for (const auto& method : methods) {
        MethodEvaluation eval;
        eval.label = method.label;
        for (std::size_t i = 0; i < instances.size(); ++i) {
            RunOptions opts{derive_seed(seed, i), instances[i].x_star};
            try {
                eval.results.push_back(ohzeki_run(instances[i].problem, method.sampler, method.schedule, params, opts));
            } catch (const std::exception& e) {
                std::throw_with_nested(
                        Error("method '" + method.label + "', instance " + std::to_string(i) + ": " + e.what()));
            }
            const auto hit = iterations_to_zero(eval.results.back().trace);
            eval.iterations_to_zero.push_back(hit ? static_cast<double>(*hit)
                                                  : std::numeric_limits<double>::infinity());
        }
        eval.series = aggregate_series(eval.results);
        out.push_back(std::move(eval));
    }
    return out;
}

}  // namespace duom
