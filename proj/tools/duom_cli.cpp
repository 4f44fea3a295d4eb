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

// duom: command-line front end.
//
//   duom <command> --config run.toml [--seed N] [--out DIR] [--sampler.kind K] ...
//
// Commands: gen-data, train, solve, transfer, gridsearch, benchmark, serve-mock.
// Exit codes: 0 success, 1 usage or config error, 2 runtime failure.

#include <algorithm>
#include <chrono>
#include <csignal>
#include <ctime>
#include <filesystem>
#include <iomanip>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "duom/benchmark.hpp"
#include "duom/config.hpp"
#include "duom/io.hpp"
#include "duom/mock_server.hpp"
#include "duom/remote.hpp"
#include "duom/samplers.hpp"
#include "duom/solver.hpp"
#include "duom/training.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kVersion = "duom 0.3.0";

class UsageError : public std::runtime_error {
 public:
    using std::runtime_error::runtime_error;
};

std::string utc_now() {
    const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    std::ostringstream ss;
    ss << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
    return ss.str();
}

struct Context {
    std::string command;
    duom::config::Json raw;
    duom::config::RunConfig cfg;
    fs::path out;
    std::vector<std::string> produced;
    std::string started = utc_now();

    void write(const fs::path& path, const std::string& text) {
        duom::io::write_text(path, text);
        produced.push_back(fs::relative(path, out).generic_string());
    }

    void write_json(const fs::path& path, const json& j) { write(path, j.dump(2) + "\n"); }

    /// Records this command in out/manifest.json, keeping entries of other commands.
    void finish() {
        const fs::path path = out / "manifest.json";
        json manifest = json::object();
        if (fs::exists(path)) {
            try {
                manifest = duom::io::read_json(path);
            } catch (const std::exception&) {
                manifest = json::object();
            }
        }
        std::sort(produced.begin(), produced.end());
        manifest[command] = {{"config_digest", duom::config::digest(raw)},
                             {"config", duom::config::to_toml(raw)},
                             {"version", kVersion},
                             {"seed", cfg.seed},
                             {"started", started},
                             {"finished", utc_now()},
                             {"files", produced}};
        duom::io::write_json(path, manifest);
    }
};

duom::Sampler build_sampler(const duom::config::SamplerSection& s) {
    if (s.kind == duom::SamplerKind::remote) {
        return duom::make_remote_sampler(s.endpoint, s.config,
                                         duom::RemoteOptions{std::chrono::milliseconds(s.timeout_ms)});
    }
    return duom::make_sampler(s.kind, s.config);
}

duom::PenaltyParams penalty(const duom::config::RunConfig& cfg) {
    const double beta = cfg.sampler.config.beta > 0.0 ? cfg.sampler.config.beta : 1.0;
    return {cfg.lambda, beta};
}

std::vector<fs::path> instance_files(const fs::path& dir) {
    if (!fs::is_directory(dir)) throw duom::Error("instance directory not found: " + dir.string());
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(dir)) {
        if (e.is_regular_file() && e.path().extension() == ".json") files.push_back(e.path());
    }
    std::sort(files.begin(), files.end());
    if (files.empty()) throw duom::Error("no instance files in " + dir.string());
    return files;
}

std::vector<duom::ImageInstance> load_instances(const fs::path& dir) {
    std::vector<duom::ImageInstance> out;
    for (const auto& f : instance_files(dir)) out.push_back(duom::io::instance_from_json(duom::io::read_json(f)));
    return out;
}

duom::LearnedSchedule load_schedule(const fs::path& path) {
    return duom::io::schedule_from_json(duom::io::read_json(path));
}

std::string summary_line(const std::string& label, double median, double solved) {
    std::ostringstream ss;
    ss << std::left << std::setw(16) << label << std::right << std::setw(12)
       << (std::isinf(median) ? std::string("never") : duom::io::format_real(median)) << std::setw(12)
       << std::fixed << std::setprecision(3) << solved << '\n';
    return ss.str();
}

// -- commands -----------------------------------------------------------------

void cmd_gen_data(Context& ctx) {
    auto spec = ctx.cfg.dataset;
    if (ctx.cfg.ground_truth_pbm) {
        const auto bm = duom::io::parse_pbm(duom::io::read_text(*ctx.cfg.ground_truth_pbm));
        if (bm.width != spec.width || bm.height != spec.height) {
            throw duom::DimensionError("ground-truth image size does not match dataset width/height");
        }
        spec.ground_truth = bm.pixels;
    }
    for (const auto& w : spec.warnings()) std::cerr << "warning: " << w << '\n';
    for (std::size_t i = 0; i < spec.count; ++i) {
        std::ostringstream name;
        name << "instance_" << std::setw(4) << std::setfill('0') << i << ".json";
        ctx.write_json(ctx.out / "instances" / name.str(), duom::io::instance_to_json(duom::generate_instance(spec, i)));
    }
    std::cout << "wrote " << spec.count << " instances to " << (ctx.out / "instances").string() << '\n';
}

void cmd_train(Context& ctx) {
    const auto instances = load_instances(ctx.cfg.training_dataset);
    const auto problems = duom::problems_of(instances);
    const auto sampler = build_sampler(ctx.cfg.sampler);
    const auto sched = duom::train(problems, ctx.cfg.training, sampler);
    ctx.write_json(ctx.out / "schedules" / (ctx.cfg.schedule_name + ".json"), duom::io::schedule_to_json(sched));
    std::ostringstream csv;
    csv << "epoch,mean_loss\n";
    for (std::size_t e = 0; e < sched.loss_curve.size(); ++e) {
        csv << e << ',' << duom::io::format_real(sched.loss_curve[e]) << '\n';
    }
    ctx.write(ctx.out / "schedules" / (ctx.cfg.schedule_name + "_loss.csv"), csv.str());
    std::cout << "trained " << sched.T() << " step sizes with " << sampler.id << " on " << problems.size()
              << " instances\n";
}

duom::LabeledProblem load_problem(const Context& ctx) {
    if (!ctx.cfg.instance) throw UsageError("no problem given; set problem.instance or pass --instance");
    return duom::io::labeled_from_json(duom::io::read_json(*ctx.cfg.instance));
}

void write_run(Context& ctx, const std::string& name, const duom::SolveResult& r,
               const std::optional<duom::BinaryVector>& truth, const std::string& label) {
    ctx.write_json(ctx.out / "traces" / (name + ".json"), duom::io::result_to_json(r, truth, label));
    std::ostringstream trace;
    duom::io::write_trace_csv(trace, r.trace);
    ctx.write(ctx.out / "traces" / (name + ".csv"), trace.str());
    std::ostringstream timing;
    duom::io::write_timing_csv(timing, r.trace);
    ctx.write(ctx.out / "traces" / (name + "_timing.csv"), timing.str());
    std::cout << (label.empty() ? name : label) << ": best_loss " << duom::io::format_real(r.best_loss);
    if (truth) std::cout << ", mse " << duom::io::format_real(duom::mse(r.best_x, *truth));
    std::cout << '\n';
}

void cmd_solve(Context& ctx, const std::optional<std::string>& schedule_file) {
    const auto lp = load_problem(ctx);
    const auto sampler = build_sampler(ctx.cfg.sampler);
    duom::StepSchedule schedule = duom::StepSchedule::constant(ctx.cfg.T, ctx.cfg.eta);
    if (schedule_file) schedule = load_schedule(*schedule_file).schedule();
    const auto r = duom::ohzeki_run(lp.problem, sampler, schedule, penalty(ctx.cfg),
                                    duom::RunOptions{ctx.cfg.seed, lp.ground_truth});
    write_run(ctx, "solve", r, lp.ground_truth, "");
}

void cmd_transfer(Context& ctx, const std::optional<std::string>& schedule_file) {
    if (!schedule_file) throw UsageError("transfer needs --schedule");
    const auto sched = load_schedule(*schedule_file);
    const auto lp = load_problem(ctx);
    const auto sampler = build_sampler(ctx.cfg.sampler);
    const auto tr = duom::transfer_execute(sched, lp.problem, sampler, penalty(ctx.cfg),
                                           duom::RunOptions{ctx.cfg.seed, lp.ground_truth});
    write_run(ctx, "transfer_" + tr.label, tr.result, lp.ground_truth, tr.label);
}

void cmd_gridsearch(Context& ctx) {
    const auto instances = load_instances(ctx.cfg.benchmark_instances);
    std::vector<duom::LabeledProblem> labeled;
    for (const auto& inst : instances) labeled.push_back(inst.labeled());
    const auto sampler = build_sampler(ctx.cfg.sampler);
    const auto res = duom::grid_search_step(labeled, ctx.cfg.grid_candidates, penalty(ctx.cfg), sampler, ctx.cfg.T,
                                            ctx.cfg.seed);
    std::ostringstream csv;
    csv << "eta,mean_final_mse,mean_iterations_to_zero,diverged\n";
    for (const auto& row : res.table) {
        csv << duom::io::format_real(row.eta) << ',' << duom::io::format_real(row.mean_final_mse) << ','
            << duom::io::format_real(row.mean_iterations_to_zero) << ',' << row.diverged << '\n';
    }
    ctx.write(ctx.out / "gridsearch.csv", csv.str());
    ctx.write_json(ctx.out / "gridsearch.json", {{"best_eta", res.best_eta}, {"T", ctx.cfg.T}});
    std::cout << "best constant eta: " << duom::io::format_real(res.best_eta) << '\n';
}

void cmd_benchmark(Context& ctx) {
    if (ctx.cfg.methods.empty()) throw UsageError("benchmark needs at least one [[benchmark.methods]] entry");
    const auto instances = load_instances(ctx.cfg.benchmark_instances);
    std::vector<duom::Method> methods;
    for (const auto& spec : ctx.cfg.methods) {
        duom::StepSchedule schedule;
        if (spec.schedule) {
            schedule = load_schedule(*spec.schedule).schedule();
        } else {
            schedule = duom::StepSchedule::constant(ctx.cfg.T, *spec.eta);
        }
        methods.push_back({spec.label, schedule, build_sampler(spec.sampler)});
    }
    const auto evals = duom::evaluate_methods(instances, methods, penalty(ctx.cfg), ctx.cfg.seed);
    std::ostringstream csv;
    duom::io::write_benchmark_csv(csv, evals);
    ctx.write(ctx.out / "benchmark.csv", csv.str());

    std::ostringstream summary;
    summary << std::left << std::setw(16) << "method" << std::right << std::setw(12) << "median_t0" << std::setw(12)
            << "solved" << '\n';
    for (const auto& e : evals) summary << summary_line(e.label, e.median_iterations_to_zero(), e.solved_fraction());
    ctx.write(ctx.out / "benchmark_summary.txt", summary.str());
    for (std::size_t m = 0; m < evals.size(); ++m) {
        for (std::size_t i = 0; i < instances.size(); ++i) {
            std::ostringstream trace;
            duom::io::write_trace_csv(trace, evals[m].results[i].trace);
            ctx.write(ctx.out / "traces" / (evals[m].label + "_" + std::to_string(i) + ".csv"), trace.str());
        }
    }
    std::cout << summary.str();
}

duom::MockServer* g_server = nullptr;

void cmd_serve_mock(Context& ctx, const std::optional<std::string>& fixture_flag) {
    const auto& cfg = ctx.cfg;
    std::optional<duom::MockAnnealer> annealer;
    if (cfg.serve_mode == "fixed") {
        const auto fixture = fixture_flag ? fixture_flag : cfg.serve_fixture;
        if (!fixture) throw UsageError("fixed mode needs a fixture file (--fixture or serve.fixture)");
        annealer = duom::MockAnnealer::fixed(duom::io::read_json(*fixture));
    } else {
        annealer = duom::MockAnnealer::proxy_mh(cfg.sampler.config);
    }
    duom::MockServer server(std::move(*annealer));
    g_server = &server;
    std::signal(SIGINT, [](int) { if (g_server) g_server->stop(); });
    std::signal(SIGTERM, [](int) { if (g_server) g_server->stop(); });
    std::cout << "serving " << cfg.serve_mode << " on http://" << cfg.serve_host << ':' << cfg.serve_port << std::endl;
    ctx.finish();
    server.listen_blocking(cfg.serve_host, cfg.serve_port);
    g_server = nullptr;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Deep-unfolded auxiliary-variable solver for constrained binary quadratic problems"};
    app.set_version_flag("--version", kVersion);
    app.require_subcommand(1);

    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> out;
    std::optional<std::string> sampler_kind;
    std::optional<std::string> schedule;
    std::optional<std::string> instance;
    std::optional<std::string> fixture;
    std::optional<std::string> mode;
    std::optional<int> port;
    std::vector<std::string> sets;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("-c,--config", config_path, "run configuration (TOML)")->required()->check(CLI::ExistingFile);
        sub->add_option("--seed", seed, "master seed override");
        sub->add_option("--out", out, "output directory override");
        sub->add_option("--sampler.kind", sampler_kind, "sampler override: mh, sqa, exact, remote");
        sub->add_option("--set", sets, "generic override key=value (e.g. training.epochs=3)");
    };
    auto* gen = app.add_subcommand("gen-data", "generate reconstruction instances");
    auto* tr = app.add_subcommand("train", "learn step sizes on a dataset");
    auto* solve = app.add_subcommand("solve", "solve one instance");
    auto* transfer = app.add_subcommand("transfer", "execute a learned schedule with another sampler");
    auto* grid = app.add_subcommand("gridsearch", "grid-search a constant step size");
    auto* bench = app.add_subcommand("benchmark", "compare methods over an instance set");
    auto* serve = app.add_subcommand("serve-mock", "run the mock annealer service");
    for (auto* sub : {gen, tr, solve, transfer, grid, bench, serve}) add_common(sub);
    for (auto* sub : {solve, transfer}) {
        sub->add_option("--schedule", schedule, "learned schedule file")->check(CLI::ExistingFile);
        sub->add_option("--instance", instance, "problem or instance file")->check(CLI::ExistingFile);
    }
    serve->add_option("--fixture", fixture, "fixture response for fixed mode")->check(CLI::ExistingFile);
    serve->add_option("--mode", mode, "fixed or proxy-mh");
    serve->add_option("--port", port, "listen port");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    Context ctx;
    ctx.command = app.get_subcommands().front()->get_name();
    try {
        ctx.raw = duom::config::parse_toml(duom::io::read_text(config_path));
        if (seed) duom::config::set_path(ctx.raw, "seed", *seed);
        if (out) duom::config::set_path(ctx.raw, "output.directory", *out);
        if (sampler_kind) duom::config::set_path(ctx.raw, "sampler.kind", *sampler_kind);
        if (instance) duom::config::set_path(ctx.raw, "problem.instance", *instance);
        if (mode) duom::config::set_path(ctx.raw, "serve.mode", *mode);
        if (port) duom::config::set_path(ctx.raw, "serve.port", *port);
        for (const auto& s : sets) {
            const auto eq = s.find('=');
            if (eq == std::string::npos) throw UsageError("--set expects key=value, got '" + s + "'");
            const auto parsed = duom::config::parse_toml("v = " + s.substr(eq + 1));
            duom::config::set_path(ctx.raw, s.substr(0, eq), parsed.at("v"));
        }
        ctx.cfg = duom::config::parse_run_config(ctx.raw);
        ctx.out = ctx.cfg.out;
    } catch (const std::exception& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 1;
    }

    try {
        fs::create_directories(ctx.out);
        if (ctx.command == "gen-data") {
            cmd_gen_data(ctx);
        } else if (ctx.command == "train") {
            cmd_train(ctx);
        } else if (ctx.command == "solve") {
            cmd_solve(ctx, schedule);
        } else if (ctx.command == "transfer") {
            cmd_transfer(ctx, schedule);
        } else if (ctx.command == "gridsearch") {
            cmd_gridsearch(ctx);
        } else if (ctx.command == "benchmark") {
            cmd_benchmark(ctx);
        } else if (ctx.command == "serve-mock") {
            cmd_serve_mock(ctx, fixture);
            return 0;
        }
        ctx.finish();
    } catch (const UsageError& e) {
        std::cerr << "usage error: " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        try {
            std::rethrow_if_nested(e);
        } catch (const std::exception& inner) {
            std::cerr << "  caused by: " << inner.what() << '\n';
        }
        return 2;
    }
    return 0;
}
