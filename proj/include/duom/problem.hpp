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
#include <span>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "duom/error.hpp"

namespace duom {

/// Assignment of N binary variables, one byte per variable, each 0 or 1.
using BinaryVector = std::vector<std::uint8_t>;

/// Spin assignment, each entry -1 or +1.
using SpinVector = std::vector<std::int8_t>;

struct QuadraticTerm {
    std::size_t i;
    std::size_t j;
    double weight;

    friend bool operator==(const QuadraticTerm&, const QuadraticTerm&) = default;
};

namespace detail {

inline void require_finite(double value, const char* what) {
    if (!std::isfinite(value)) throw InvalidArgument(std::string(what) + " must be finite");
}

inline void require_length(std::size_t got, std::size_t want, const char* what) {
    if (got != want) {
        throw DimensionError(std::string(what) + ": expected length " + std::to_string(want) + ", got " +
                             std::to_string(got));
    }
}

inline void require_binary(std::span<const std::uint8_t> x, std::size_t n) {
    require_length(x.size(), n, "binary vector");
    for (auto bit : x) {
        if (bit > 1) throw InvalidArgument("binary vector entries must be 0 or 1");
    }
}

inline double dot(std::span<const double> a, std::span<const std::uint8_t> x) {
    double s = 0.0;
    for (std::size_t l = 0; l < a.size(); ++l) {
        if (x[l]) s += a[l];
    }
    return s;
}

}  // namespace detail

/// Sparse binary quadratic polynomial sum_{(i,j)} w_ij x_i x_j with i <= j.
///
/// Diagonal terms (i, i) are linear because x_i^2 = x_i. Terms are kept sorted by
/// (i, j); a pair given twice, in either orientation, is rejected.
class QuadraticObjective {
 public:
    QuadraticObjective() = default;

    QuadraticObjective(std::size_t n_vars, std::vector<QuadraticTerm> terms)
            : n_vars_(n_vars), terms_(std::move(terms)) {
        for (auto& t : terms_) {
            if (t.i > t.j) std::swap(t.i, t.j);
            if (t.j >= n_vars_) {
                throw DimensionError("term index " + std::to_string(t.j) + " out of range for " +
                                     std::to_string(n_vars_) + " variables");
            }
            detail::require_finite(t.weight, "term weight");
        }
        std::sort(terms_.begin(), terms_.end(),
                  [](const auto& a, const auto& b) { return std::tie(a.i, a.j) < std::tie(b.i, b.j); });
        auto dup = std::adjacent_find(terms_.begin(), terms_.end(),
                                      [](const auto& a, const auto& b) { return a.i == b.i && a.j == b.j; });
        if (dup != terms_.end()) {
            throw InvalidArgument("duplicate quadratic term (" + std::to_string(dup->i) + ", " +
                                  std::to_string(dup->j) + ")");
        }
    }

    std::size_t n_vars() const noexcept { return n_vars_; }
    const std::vector<QuadraticTerm>& terms() const noexcept { return terms_; }

    double evaluate(std::span<const std::uint8_t> x) const {
        detail::require_binary(x, n_vars_);
        double s = 0.0;
        for (const auto& t : terms_) {
            if (x[t.i] && x[t.j]) s += t.weight;
        }
        return s;
    }

    friend bool operator==(const QuadraticObjective&, const QuadraticObjective&) = default;

 private:
    std::size_t n_vars_ = 0;
    std::vector<QuadraticTerm> terms_;
};

/// Affine equality a . x = target.
class LinearConstraint {
 public:
    LinearConstraint() = default;

    LinearConstraint(std::vector<double> coeffs, double target) : coeffs_(std::move(coeffs)), target_(target) {
        for (double a : coeffs_) detail::require_finite(a, "constraint coefficient");
        detail::require_finite(target_, "constraint target");
    }

    const std::vector<double>& coeffs() const noexcept { return coeffs_; }
    double target() const noexcept { return target_; }

    /// f_k(x) = a . x, without the target.
    double value(std::span<const std::uint8_t> x) const {
        detail::require_length(x.size(), coeffs_.size(), "constraint value");
        return detail::dot(coeffs_, x);
    }

    friend bool operator==(const LinearConstraint&, const LinearConstraint&) = default;

 private:
    std::vector<double> coeffs_;
    double target_ = 0.0;
};

/// min f0(x) subject to f_k(x) = C_k, k = 1..m, over x in {0,1}^N.
class ConstrainedProblem {
 public:
    ConstrainedProblem() = default;

    ConstrainedProblem(QuadraticObjective objective, std::vector<LinearConstraint> constraints)
            : objective_(std::move(objective)), constraints_(std::move(constraints)) {
        for (const auto& c : constraints_) {
            detail::require_length(c.coeffs().size(), objective_.n_vars(), "constraint coefficients");
        }
    }

    std::size_t n_vars() const noexcept { return objective_.n_vars(); }
    std::size_t n_constraints() const noexcept { return constraints_.size(); }
    const QuadraticObjective& objective() const noexcept { return objective_; }
    const std::vector<LinearConstraint>& constraints() const noexcept { return constraints_; }

    std::vector<double> targets() const {
        std::vector<double> c(constraints_.size());
        for (std::size_t k = 0; k < c.size(); ++k) c[k] = constraints_[k].target();
        return c;
    }

    /// (f_1(x), ..., f_m(x)).
    std::vector<double> constraint_values(std::span<const std::uint8_t> x) const {
        detail::require_binary(x, n_vars());
        std::vector<double> f(constraints_.size());
        for (std::size_t k = 0; k < f.size(); ++k) f[k] = detail::dot(constraints_[k].coeffs(), x);
        return f;
    }

    friend bool operator==(const ConstrainedProblem&, const ConstrainedProblem&) = default;

 private:
    QuadraticObjective objective_;
    std::vector<LinearConstraint> constraints_;
};

struct PenaltyParams {
    double lambda = 1.0;
    double beta = 1.0;

    void validate() const {
        if (!(lambda > 0.0) || !std::isfinite(lambda)) throw InvalidArgument("lambda must be positive");
        if (!(beta > 0.0) || !std::isfinite(beta)) throw InvalidArgument("beta must be positive");
    }
};

/// Auxiliary field v^(t) together with the iteration that produced it.
struct AuxiliaryState {
    std::vector<double> v;
    std::size_t iteration = 0;

    static AuxiliaryState zeros(std::size_t m) { return {std::vector<double>(m, 0.0), 0}; }

    friend bool operator==(const AuxiliaryState&, const AuxiliaryState&) = default;
};

/// f_k(x) - C_k for every constraint.
inline std::vector<double> constraint_residuals(std::span<const std::uint8_t> x, const ConstrainedProblem& p) {
    auto r = p.constraint_values(x);
    for (std::size_t k = 0; k < r.size(); ++k) r[k] -= p.constraints()[k].target();
    return r;
}

/// Penalty loss f0(x) + lambda * sum_k (f_k(x) - C_k)^2.
inline double penalty_loss(std::span<const std::uint8_t> x, const ConstrainedProblem& p, double lambda) {
    double penalty = 0.0;
    for (double r : constraint_residuals(x, p)) penalty += r * r;
    return p.objective().evaluate(x) + lambda * penalty;
}

/// QUBO energy offset + sum_i linear_i x_i + sum_{i<j} w_ij x_i x_j.
class EffectiveQubo {
 public:
    EffectiveQubo() = default;

    EffectiveQubo(std::vector<double> linear, std::vector<QuadraticTerm> quadratic, double offset = 0.0)
            : linear_(std::move(linear)), offset_(offset) {
        for (double h : linear_) detail::require_finite(h, "linear coefficient");
        detail::require_finite(offset_, "offset");
        // Reuse the objective's validation, then fold diagonal terms into the linear part.
        QuadraticObjective checked(linear_.size(), std::move(quadratic));
        for (const auto& t : checked.terms()) {
            if (t.i == t.j) {
                linear_[t.i] += t.weight;
            } else {
                quadratic_.push_back(t);
            }
        }
    }

    std::size_t n_vars() const noexcept { return linear_.size(); }
    const std::vector<double>& linear() const noexcept { return linear_; }
    /// Off-diagonal terms only, i < j, sorted.
    const std::vector<QuadraticTerm>& quadratic() const noexcept { return quadratic_; }
    double offset() const noexcept { return offset_; }

    friend bool operator==(const EffectiveQubo&, const EffectiveQubo&) = default;

 private:
    std::vector<double> linear_;
    std::vector<QuadraticTerm> quadratic_;
    double offset_ = 0.0;
};

inline double energy(const EffectiveQubo& q, std::span<const std::uint8_t> x) {
    detail::require_binary(x, q.n_vars());
    double e = q.offset();
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (x[i]) e += q.linear()[i];
    }
    for (const auto& t : q.quadratic()) {
        if (x[t.i] && x[t.j]) e += t.weight;
    }
    return e;
}

/// Energy f0(x) - sum_k v_k f_k(x) whose Boltzmann distribution is the
/// auxiliary-field distribution sampled by the solver.
inline EffectiveQubo effective_qubo(const ConstrainedProblem& p, std::span<const double> v) {
    detail::require_length(v.size(), p.n_constraints(), "auxiliary variables");
    std::vector<double> linear(p.n_vars(), 0.0);
    std::vector<QuadraticTerm> quadratic;
    quadratic.reserve(p.objective().terms().size());
    for (const auto& t : p.objective().terms()) {
        if (t.i == t.j) {
            linear[t.i] += t.weight;
        } else {
            quadratic.push_back(t);
        }
    }
    for (std::size_t k = 0; k < v.size(); ++k) {
        detail::require_finite(v[k], "auxiliary variable");
        if (v[k] == 0.0) continue;
        const auto& a = p.constraints()[k].coeffs();
        for (std::size_t l = 0; l < linear.size(); ++l) linear[l] -= v[k] * a[l];
    }
    // f_k carry no constant part, so the offset stays zero.
    return EffectiveQubo(std::move(linear), std::move(quadratic), 0.0);
}

inline EffectiveQubo effective_qubo(const ConstrainedProblem& p, const AuxiliaryState& state) {
    return effective_qubo(p, std::span<const double>(state.v));
}

/// Spin form offset + sum_i h_i s_i + sum_{i<j} J_ij s_i s_j with s = 2x - 1.
struct IsingModel {
    std::vector<double> h;
    std::vector<QuadraticTerm> couplings;
    double offset = 0.0;

    std::size_t n_vars() const noexcept { return h.size(); }

    double energy(std::span<const std::int8_t> s) const {
        detail::require_length(s.size(), h.size(), "spin vector");
        double e = offset;
        for (std::size_t i = 0; i < s.size(); ++i) e += h[i] * s[i];
        for (const auto& c : couplings) e += c.weight * s[c.i] * s[c.j];
        return e;
    }
};

inline IsingModel ising_view(const EffectiveQubo& q) {
    IsingModel m;
    m.h.assign(q.n_vars(), 0.0);
    m.offset = q.offset();
    for (std::size_t i = 0; i < q.n_vars(); ++i) {
        const double b = q.linear()[i];
        m.h[i] += b / 2.0;
        m.offset += b / 2.0;
    }
    m.couplings.reserve(q.quadratic().size());
    for (const auto& t : q.quadratic()) {
        const double w = t.weight / 4.0;
        m.couplings.push_back({t.i, t.j, w});
        m.h[t.i] += w;
        m.h[t.j] += w;
        m.offset += w;
    }
    return m;
}

inline SpinVector to_spins(std::span<const std::uint8_t> x) {
    SpinVector s(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) s[i] = x[i] ? 1 : -1;
    return s;
}

inline BinaryVector to_binary(std::span<const std::int8_t> s) {
    BinaryVector x(s.size());
    for (std::size_t i = 0; i < s.size(); ++i) x[i] = s[i] > 0 ? 1 : 0;
    return x;
}

}  // namespace duom
