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

// File formats: problem/instance/schedule/result JSON, trace and benchmark CSV,
// plain PBM (P1) images.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "duom/benchmark.hpp"
#include "duom/error.hpp"
#include "duom/problem.hpp"
#include "duom/solver.hpp"
#include "duom/training.hpp"

namespace duom::io {

using nlohmann::json;

inline std::string read_text(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + path.string());
    out << text;
    if (!out) throw Error("write failed for " + path.string());
}

inline json read_json(const std::filesystem::path& path) {
    try {
        return json::parse(read_text(path));
    } catch (const json::exception& e) {
        throw InvalidArgument(path.string() + ": " + e.what());
    }
}

inline void write_json(const std::filesystem::path& path, const json& j) { write_text(path, j.dump(2) + "\n"); }

/// Shortest text that parses back to the same double; empty for NaN.
inline std::string format_real(double v) {
    if (std::isnan(v)) return "";
    return json(v).dump();
}

// -- problems ---------------------------------------------------------------

inline json problem_to_json(const ConstrainedProblem& p) {
    json terms = json::array();
    for (const auto& t : p.objective().terms()) terms.push_back({t.i, t.j, t.weight});
    json constraints = json::array();
    for (const auto& c : p.constraints()) constraints.push_back({{"coeffs", c.coeffs()}, {"target", c.target()}});
    return {{"n_vars", p.n_vars()}, {"objective", {{"terms", terms}}}, {"constraints", constraints}};
}

inline ConstrainedProblem problem_from_json(const json& j) {
    try {
        const auto n = j.at("n_vars").get<std::size_t>();
        std::vector<QuadraticTerm> terms;
        for (const auto& t : j.at("objective").at("terms")) {
            if (!t.is_array() || t.size() != 3) throw InvalidArgument("objective terms must be [i, j, w]");
            terms.push_back({t[0].get<std::size_t>(), t[1].get<std::size_t>(), t[2].get<double>()});
        }
        std::vector<LinearConstraint> constraints;
        for (const auto& c : j.value("constraints", json::array())) {
            constraints.emplace_back(c.at("coeffs").get<std::vector<double>>(), c.at("target").get<double>());
        }
        return ConstrainedProblem(QuadraticObjective(n, std::move(terms)), std::move(constraints));
    } catch (const json::exception& e) {
        throw InvalidArgument(std::string("malformed problem: ") + e.what());
    }
}

inline json instance_to_json(const ImageInstance& inst) {
    auto j = problem_to_json(inst.problem);
    j["x_star"] = inst.x_star;
    j["width"] = inst.width;
    j["height"] = inst.height;
    j["index"] = inst.index;
    j["seed"] = inst.seed;
    return j;
}

/// Reads an instance file, or a bare problem file when no x_star is present.
inline LabeledProblem labeled_from_json(const json& j) {
    LabeledProblem lp{problem_from_json(j), std::nullopt};
    if (j.contains("x_star")) {
        auto x = j["x_star"].get<BinaryVector>();
        detail::require_binary(x, lp.problem.n_vars());
        lp.ground_truth = std::move(x);
    }
    return lp;
}

inline ImageInstance instance_from_json(const json& j) {
    ImageInstance inst;
    auto lp = labeled_from_json(j);
    if (!lp.ground_truth) throw InvalidArgument("instance file lacks x_star");
    inst.problem = std::move(lp.problem);
    inst.x_star = std::move(*lp.ground_truth);
    inst.width = j.at("width").get<std::size_t>();
    inst.height = j.at("height").get<std::size_t>();
    inst.index = j.value("index", std::size_t{0});
    inst.seed = j.value("seed", std::uint64_t{0});
    detail::require_length(inst.width * inst.height, inst.problem.n_vars(), "instance width * height");
    return inst;
}

// -- schedules --------------------------------------------------------------

inline json schedule_to_json(const LearnedSchedule& s) {
    json trained{{"sampler", s.trained_with.sampler}, {"beta", s.trained_with.beta}};
    if (s.trained_with.trotter) trained["trotter"] = *s.trained_with.trotter;
    return {{"T", s.T()},           {"etas", s.etas},     {"trained_with", trained},
            {"lambda", s.lambda},   {"seed", s.seed},     {"dataset_digest", s.dataset_digest},
            {"loss_curve", s.loss_curve}};
}

inline LearnedSchedule schedule_from_json(const json& j) {
    try {
        LearnedSchedule s;
        s.etas = j.at("etas").get<std::vector<double>>();
        if (j.at("T").get<std::size_t>() != s.etas.size()) throw DimensionError("schedule T does not match etas");
        for (double e : s.etas) detail::require_finite(e, "step size");
        const auto& tw = j.at("trained_with");
        s.trained_with.sampler = tw.at("sampler").get<std::string>();
        parse_sampler_kind(s.trained_with.sampler);
        s.trained_with.beta = tw.at("beta").get<double>();
        if (tw.contains("trotter") && !tw["trotter"].is_null()) s.trained_with.trotter = tw["trotter"].get<std::size_t>();
        s.lambda = j.at("lambda").get<double>();
        s.seed = j.at("seed").get<std::uint64_t>();
        s.dataset_digest = j.at("dataset_digest").get<std::string>();
        s.loss_curve = j.value("loss_curve", std::vector<double>{});
        return s;
    } catch (const json::exception& e) {
        throw InvalidArgument(std::string("malformed schedule: ") + e.what());
    }
}

// -- results and traces -----------------------------------------------------

inline json result_to_json(const SolveResult& r, const std::optional<BinaryVector>& ground_truth,
                           const std::string& label = "") {
    json j{{"best_x", r.best_x},
           {"best_loss", r.best_loss},
           {"final_v", r.final_v.v},
           {"iterations", r.final_v.iteration}};
    if (!label.empty()) j["method"] = label;
    if (ground_truth) {
        j["final_mse"] = mse(r.best_x, *ground_truth);
        const auto hit = iterations_to_zero(r.trace);
        j["iterations_to_zero"] = hit ? json(*hit) : json(nullptr);
    }
    return j;
}

inline constexpr std::size_t kMaxTraceVColumns = 32;

/// iteration,residual_l2,best_loss,best_mse,eta,v_0..v_{m-1}. At most 32 v
/// columns are written; best_mse and eta are empty when absent.
inline void write_trace_csv(std::ostream& out, const SolverTrace& trace) {
    const std::size_t m = trace.records.empty() ? 0 : trace.records.front().v.size();
    const std::size_t cols = std::min(m, kMaxTraceVColumns);
    out << "iteration,residual_l2,best_loss,best_mse,eta";
    for (std::size_t k = 0; k < cols; ++k) out << ",v_" << k;
    out << '\n';
    for (const auto& r : trace.records) {
        out << r.iteration << ',' << format_real(r.residual_l2()) << ',' << format_real(r.best_loss) << ','
            << (r.best_mse ? format_real(*r.best_mse) : "") << ',' << (r.eta ? format_real(*r.eta) : "");
        for (std::size_t k = 0; k < cols; ++k) out << ',' << format_real(r.v[k]);
        out << '\n';
    }
}

/// Wall-clock time of the sampling and update phases per iteration.
inline void write_timing_csv(std::ostream& out, const SolverTrace& trace) {
    out << "iteration,sample_seconds,update_seconds\n";
    for (const auto& r : trace.records) {
        out << r.iteration << ',' << format_real(r.sample_seconds) << ',' << format_real(r.update_seconds) << '\n';
    }
}

inline void write_benchmark_csv(std::ostream& out, std::span<const MethodEvaluation> evals) {
    out << "method,iteration,mean_best_mse,ci_halfwidth,frac_solved\n";
    for (const auto& e : evals) {
        for (std::size_t t = 0; t < e.series.length(); ++t) {
            out << e.label << ',' << t << ',' << format_real(e.series.mean_best_mse[t]) << ','
                << format_real(e.series.ci_half_width[t]) << ',' << format_real(e.series.frac_solved[t]) << '\n';
        }
    }
}

// -- PBM --------------------------------------------------------------------

struct Bitmap {
    std::size_t width = 0;
    std::size_t height = 0;
    BinaryVector pixels;  // row-major, 1 = set
};

inline Bitmap parse_pbm(const std::string& text) {
    std::istringstream in(text);
    std::vector<std::string> tokens;
    std::string line;
    while (std::getline(in, line)) {
        if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        std::istringstream ls(line);
        std::string tok;
        while (ls >> tok) tokens.push_back(tok);
    }
    if (tokens.size() < 3 || tokens[0] != "P1") throw InvalidArgument("not a plain PBM (P1) image");
    Bitmap bm;
    try {
        bm.width = std::stoul(tokens[1]);
        bm.height = std::stoul(tokens[2]);
    } catch (const std::exception&) {
        throw InvalidArgument("bad PBM dimensions");
    }
    // Pixels may be written without separators.
    for (std::size_t t = 3; t < tokens.size(); ++t) {
        for (char ch : tokens[t]) {
            if (ch != '0' && ch != '1') throw InvalidArgument("PBM pixels must be 0 or 1");
            bm.pixels.push_back(static_cast<std::uint8_t>(ch - '0'));
        }
    }
    if (bm.pixels.size() != bm.width * bm.height) throw DimensionError("PBM pixel count does not match its header");
    return bm;
}

inline std::string format_pbm(const Bitmap& bm) {
    detail::require_length(bm.pixels.size(), bm.width * bm.height, "bitmap");
    std::ostringstream out;
    out << "P1\n" << bm.width << ' ' << bm.height << '\n';
    for (std::size_t r = 0; r < bm.height; ++r) {
        for (std::size_t c = 0; c < bm.width; ++c) out << (c ? " " : "") << int(bm.pixels[r * bm.width + c]);
        out << '\n';
    }
    return out.str();
}

}  // namespace duom::io
