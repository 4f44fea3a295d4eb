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

// Run configuration: a TOML subset parsed into JSON, plus the typed view used by
// the command-line front end.
//
// Supported syntax: comments, [table] and [a.b] headers, [[array.of.tables]],
// key = value with strings, integers, floats, booleans and single-line arrays.

#include <bit>
#include <cctype>
#include <cstdint>
#include <cstdio>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "duom/benchmark.hpp"
#include "duom/error.hpp"
#include "duom/samplers.hpp"
#include "duom/training.hpp"

namespace duom::config {

using Json = nlohmann::ordered_json;

class ConfigError : public InvalidArgument {
 public:
    using InvalidArgument::InvalidArgument;
};

namespace detail {

inline std::string_view trim(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    return s;
}

/// Drops a trailing comment that is not inside a string.
inline std::string_view strip_comment(std::string_view s) {
    bool in_str = false;
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (s[i] == '"' && (i == 0 || s[i - 1] != '\\')) in_str = !in_str;
        if (s[i] == '#' && !in_str) return s.substr(0, i);
    }
    return s;
}

class ValueParser {
 public:
    ValueParser(std::string_view text, std::size_t line) : s_(text), line_(line) {}

    Json parse_all() {
        auto v = parse_value();
        skip_ws();
        if (pos_ != s_.size()) fail("trailing characters after value");
        return v;
    }

 private:
    [[noreturn]] void fail(const std::string& msg) const {
        throw ConfigError("config line " + std::to_string(line_) + ": " + msg);
    }

    void skip_ws() {
        while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
    }

    Json parse_value() {
        skip_ws();
        if (pos_ >= s_.size()) fail("missing value");
        const char c = s_[pos_];
        if (c == '"') return parse_string();
        if (c == '[') return parse_array();
        return parse_bare();
    }

    Json parse_string() {
        std::string out;
        ++pos_;
        while (pos_ < s_.size() && s_[pos_] != '"') {
            char ch = s_[pos_++];
            if (ch == '\\' && pos_ < s_.size()) {
                const char esc = s_[pos_++];
                switch (esc) {
                    case 'n': ch = '\n'; break;
                    case 't': ch = '\t'; break;
                    case '"': ch = '"'; break;
                    case '\\': ch = '\\'; break;
                    default: fail(std::string("unsupported escape \\") + esc);
                }
            }
            out.push_back(ch);
        }
        if (pos_ >= s_.size()) fail("unterminated string");
        ++pos_;
        return out;
    }

    Json parse_array() {
        Json arr = Json::array();
        ++pos_;
        skip_ws();
        if (pos_ < s_.size() && s_[pos_] == ']') {
            ++pos_;
            return arr;
        }
        while (true) {
            arr.push_back(parse_value());
            skip_ws();
            if (pos_ >= s_.size()) fail("unterminated array");
            if (s_[pos_] == ',') {
                ++pos_;
                skip_ws();
                if (pos_ < s_.size() && s_[pos_] == ']') {
                    ++pos_;
                    return arr;
                }
                continue;
            }
            if (s_[pos_] == ']') {
                ++pos_;
                return arr;
            }
            fail("expected ',' or ']' in array");
        }
    }

    Json parse_bare() {
        const std::size_t start = pos_;
        while (pos_ < s_.size() && s_[pos_] != ',' && s_[pos_] != ']' &&
               !std::isspace(static_cast<unsigned char>(s_[pos_]))) {
            ++pos_;
        }
        std::string tok(s_.substr(start, pos_ - start));
        if (tok == "true") return true;
        if (tok == "false") return false;
        std::string digits;
        for (char ch : tok) {
            if (ch != '_') digits.push_back(ch);
        }
        const bool is_float = digits.find_first_of(".eE") != std::string::npos || digits == "inf" || digits == "nan";
        try {
            std::size_t used = 0;
            if (is_float) {
                const double d = std::stod(digits, &used);
                if (used == digits.size()) return d;
            } else if (!digits.empty() && digits[0] == '-') {
                const long long v = std::stoll(digits, &used);
                if (used == digits.size()) return v;
            } else {
                const unsigned long long v = std::stoull(digits, &used);
                if (used == digits.size()) return v;
            }
        } catch (const std::exception&) {
        }
        fail("cannot parse value '" + tok + "'");
    }

    std::string_view s_;
    std::size_t pos_ = 0;
    std::size_t line_;
};

inline std::vector<std::string> split_key(std::string_view key, std::size_t line) {
    std::vector<std::string> parts;
    std::string cur;
    for (char ch : key) {
        if (ch == '.') {
            parts.emplace_back(trim(cur));
            cur.clear();
        } else {
            cur.push_back(ch);
        }
    }
    parts.emplace_back(trim(cur));
    for (const auto& p : parts) {
        if (p.empty()) throw ConfigError("config line " + std::to_string(line) + ": empty key");
        for (char ch : p) {
            if (!std::isalnum(static_cast<unsigned char>(ch)) && ch != '_' && ch != '-') {
                throw ConfigError("config line " + std::to_string(line) + ": bad key '" + p + "'");
            }
        }
    }
    return parts;
}

inline Json* descend(Json& root, const std::vector<std::string>& path, std::size_t line) {
    Json* node = &root;
    for (const auto& part : path) {
        Json& next = (*node)[part];
        if (next.is_null()) next = Json::object();
        if (next.is_array() && !next.empty() && next.back().is_object()) {
            node = &next.back();
        } else if (next.is_object()) {
            node = &next;
        } else {
            throw ConfigError("config line " + std::to_string(line) + ": '" + part + "' is not a table");
        }
    }
    return node;
}

inline bool is_bare_key(const std::string& key) {
    if (key.empty()) return false;
    for (char ch : key) {
        if (!std::isalnum(static_cast<unsigned char>(ch)) && ch != '_' && ch != '-') return false;
    }
    return true;
}

inline std::string format_scalar(const Json& v) {
    if (v.is_string()) {
        std::string out = "\"";
        for (char ch : v.get<std::string>()) {
            if (ch == '"' || ch == '\\') out.push_back('\\');
            if (ch == '\n') {
                out += "\\n";
                continue;
            }
            if (ch == '\t') {
                out += "\\t";
                continue;
            }
            out.push_back(ch);
        }
        return out + "\"";
    }
    if (v.is_array()) {
        std::string out = "[";
        for (std::size_t i = 0; i < v.size(); ++i) out += (i ? ", " : "") + format_scalar(v[i]);
        return out + "]";
    }
    if (v.is_number_float()) {
        std::string s = v.dump();
        if (s.find_first_of(".eE") == std::string::npos && s.find("inf") == std::string::npos) s += ".0";
        return s;
    }
    return v.dump();
}

inline bool is_table_array(const Json& v) {
    return v.is_array() && !v.empty() && std::all_of(v.begin(), v.end(), [](const Json& e) { return e.is_object(); });
}

inline void emit_table(std::ostringstream& out, const Json& table, const std::string& prefix, bool header,
                       bool array_entry) {
    if (header) out << (array_entry ? "[[" : "[") << prefix << (array_entry ? "]]" : "]") << '\n';
    for (const auto& [k, v] : table.items()) {
        if (!v.is_object() && !is_table_array(v)) out << k << " = " << format_scalar(v) << '\n';
    }
    for (const auto& [k, v] : table.items()) {
        const std::string name = prefix.empty() ? k : prefix + "." + k;
        if (v.is_object()) {
            out << '\n';
            emit_table(out, v, name, true, false);
        } else if (is_table_array(v)) {
            for (const auto& entry : v) {
                out << '\n';
                emit_table(out, entry, name, true, true);
            }
        }
    }
}

}  // namespace detail

inline Json parse_toml(std::string_view text) {
    Json root = Json::object();
    Json* current = &root;
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        const auto nl = text.find('\n', pos);
        const auto raw = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
        pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
        ++line_no;
        const auto line = detail::trim(detail::strip_comment(raw));
        if (line.empty()) continue;
        if (line.starts_with("[[")) {
            if (!line.ends_with("]]")) throw ConfigError("config line " + std::to_string(line_no) + ": bad header");
            auto path = detail::split_key(line.substr(2, line.size() - 4), line_no);
            const std::string last = path.back();
            path.pop_back();
            Json* parent = detail::descend(root, path, line_no);
            Json& arr = (*parent)[last];
            if (arr.is_null()) arr = Json::array();
            if (!arr.is_array()) {
                throw ConfigError("config line " + std::to_string(line_no) + ": '" + last + "' is not an array");
            }
            arr.push_back(Json::object());
            current = &arr.back();
        } else if (line.starts_with("[")) {
            if (!line.ends_with("]")) throw ConfigError("config line " + std::to_string(line_no) + ": bad header");
            current = detail::descend(root, detail::split_key(line.substr(1, line.size() - 2), line_no), line_no);
        } else {
            const auto eq = line.find('=');
            if (eq == std::string_view::npos) {
                throw ConfigError("config line " + std::to_string(line_no) + ": expected key = value");
            }
            auto path = detail::split_key(detail::trim(line.substr(0, eq)), line_no);
            const std::string last = path.back();
            path.pop_back();
            Json* target = detail::descend(*current, path, line_no);
            if (target->contains(last)) {
                throw ConfigError("config line " + std::to_string(line_no) + ": duplicate key '" + last + "'");
            }
            (*target)[last] = detail::ValueParser(line.substr(eq + 1), line_no).parse_all();
        }
    }
    return root;
}

inline std::string to_toml(const Json& root) {
    std::ostringstream out;
    detail::emit_table(out, root, "", false, false);
    auto s = out.str();
    if (!s.empty() && s.front() == '\n') s.erase(0, 1);
    return s;
}

/// Applies "a.b.c" = value, creating tables as needed.
inline void set_path(Json& root, const std::string& dotted, Json value) {
    auto path = detail::split_key(dotted, 0);
    const std::string last = path.back();
    path.pop_back();
    (*detail::descend(root, path, 0))[last] = std::move(value);
}

/// FNV-1a of the canonical TOML text, 16 hex digits.
inline std::string digest(const Json& root) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char ch : to_toml(root)) {
        h ^= ch;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

// -- typed view ---------------------------------------------------------------

namespace detail {

template <class T>
T get_or(const Json& table, const char* key, T fallback) {
    if (!table.is_object() || !table.contains(key)) return fallback;
    try {
        return table.at(key).get<T>();
    } catch (const Json::exception& e) {
        throw ConfigError(std::string("config key '") + key + "': " + e.what());
    }
}

inline const Json& section(const Json& root, const char* name) {
    static const Json empty = Json::object();
    if (!root.contains(name)) return empty;
    if (!root.at(name).is_object()) throw ConfigError(std::string("config section '") + name + "' must be a table");
    return root.at(name);
}

}  // namespace detail

struct SamplerSection {
    SamplerKind kind = SamplerKind::mh;
    SamplerConfig config;
    std::string endpoint;
    std::int64_t timeout_ms = 60'000;
};

struct MethodSpec {
    std::string label;
    std::optional<std::string> schedule;  // learned schedule file
    std::optional<double> eta;            // constant step size
    SamplerSection sampler;
};

struct RunConfig {
    std::uint64_t seed = 0;
    std::string out = "out";
    std::optional<std::string> instance;  // problem or instance file for solve/transfer
    SamplerSection sampler;
    std::size_t T = 30;
    double eta = 1e-2;  // constant step for solve
    double lambda = 1.0;
    TrainConfig training;
    std::string training_dataset;  // directory of instance files
    std::string schedule_name = "schedule";
    DatasetSpec dataset;
    std::optional<std::string> ground_truth_pbm;
    std::string benchmark_instances;
    std::vector<MethodSpec> methods;
    std::vector<double> grid_candidates{1e-3, 3e-3, 1e-2, 3e-2, 1e-1};
    std::string serve_mode = "proxy-mh";
    std::string serve_host = "127.0.0.1";
    int serve_port = 8765;
    std::optional<std::string> serve_fixture;
};

inline SamplerSection parse_sampler(const Json& s, const SamplerSection& base) {
    SamplerSection out = base;
    out.kind = parse_sampler_kind(detail::get_or<std::string>(s, "kind", std::string(to_string(base.kind))));
    auto& c = out.config;
    c.beta = detail::get_or<double>(s, "beta", c.beta);
    c.num_reads = detail::get_or<std::size_t>(s, "num_reads", c.num_reads);
    c.sweeps_per_read = detail::get_or<std::size_t>(s, "sweeps", c.sweeps_per_read);
    c.trotter = detail::get_or<std::size_t>(s, "trotter", c.trotter);
    c.gamma_start = detail::get_or<double>(s, "gamma_start", c.gamma_start);
    c.gamma_end = detail::get_or<double>(s, "gamma_end", c.gamma_end);
    out.endpoint = detail::get_or<std::string>(s, "endpoint", out.endpoint);
    out.timeout_ms = detail::get_or<std::int64_t>(s, "timeout_ms", out.timeout_ms);
    try {
        c.validate(out.kind);
    } catch (const InvalidArgument& e) {
        throw ConfigError(std::string("sampler: ") + e.what());
    }
    if (out.kind == SamplerKind::remote && out.endpoint.empty()) {
        throw ConfigError("sampler kind 'remote' requires an endpoint");
    }
    if (out.timeout_ms <= 0) throw ConfigError("sampler timeout_ms must be positive");
    return out;
}

inline RunConfig parse_run_config(const Json& root) {
    if (!root.is_object()) throw ConfigError("config root must be a table");
    RunConfig rc;
    rc.seed = detail::get_or<std::uint64_t>(root, "seed", rc.seed);

    const auto& output = detail::section(root, "output");
    rc.out = detail::get_or<std::string>(output, "directory", rc.out);

    const auto& problem = detail::section(root, "problem");
    if (problem.contains("instance")) rc.instance = detail::get_or<std::string>(problem, "instance", "");

    rc.sampler.config.seed = rc.seed;
    if (!detail::section(root, "sampler").contains("beta")) {
        throw ConfigError("sampler.beta must be set explicitly");
    }
    rc.sampler = parse_sampler(detail::section(root, "sampler"), rc.sampler);

    const auto& solver = detail::section(root, "solver");
    rc.T = detail::get_or<std::size_t>(solver, "T", rc.T);
    rc.eta = detail::get_or<double>(solver, "eta", rc.eta);
    rc.lambda = detail::get_or<double>(solver, "lambda", rc.lambda);
    if (!(rc.lambda > 0.0)) throw ConfigError("solver.lambda must be positive");

    const auto& tr = detail::section(root, "training");
    auto& tc = rc.training;
    tc.T = detail::get_or<std::size_t>(tr, "T", rc.T);
    tc.eta_init = detail::get_or<double>(tr, "eta_init", tc.eta_init);
    tc.lambda = detail::get_or<double>(tr, "lambda", rc.lambda);
    tc.beta = rc.sampler.config.beta;
    tc.epochs = detail::get_or<std::size_t>(tr, "epochs", tc.epochs);
    tc.minibatches_per_epoch = detail::get_or<std::size_t>(tr, "minibatches_per_epoch", tc.minibatches_per_epoch);
    tc.minibatch_size = detail::get_or<std::size_t>(tr, "minibatch_size", tc.minibatch_size);
    tc.lr_init = detail::get_or<double>(tr, "lr_init", tc.lr_init);
    tc.lr_decay = detail::get_or<double>(tr, "lr_decay", tc.lr_decay);
    tc.incremental = detail::get_or<bool>(tr, "incremental", tc.incremental);
    tc.seed = rc.seed;
    rc.training_dataset = detail::get_or<std::string>(tr, "dataset", rc.out + "/instances");
    rc.schedule_name = detail::get_or<std::string>(tr, "name", rc.schedule_name);
    if (tc.beta > 0.0) {
        try {
            tc.validate();
        } catch (const InvalidArgument& e) {
            throw ConfigError(std::string("training: ") + e.what());
        }
    }

    const auto& ds = detail::section(root, "dataset");
    auto& spec = rc.dataset;
    spec.width = detail::get_or<std::size_t>(ds, "width", spec.width);
    spec.height = detail::get_or<std::size_t>(ds, "height", spec.height);
    spec.m_ratio = detail::get_or<double>(ds, "m_ratio", spec.m_ratio);
    spec.count = detail::get_or<std::size_t>(ds, "count", spec.count);
    spec.seed = detail::get_or<std::uint64_t>(ds, "seed", rc.seed);
    if (ds.contains("image")) rc.ground_truth_pbm = detail::get_or<std::string>(ds, "image", "");
    try {
        DatasetSpec probe = spec;
        probe.ground_truth.reset();
        probe.validate();
    } catch (const InvalidArgument& e) {
        throw ConfigError(std::string("dataset: ") + e.what());
    }

    const auto& bench = detail::section(root, "benchmark");
    rc.benchmark_instances = detail::get_or<std::string>(bench, "instances", rc.out + "/instances");
    if (bench.contains("methods")) {
        if (!bench.at("methods").is_array()) throw ConfigError("benchmark.methods must be an array of tables");
        for (const auto& m : bench.at("methods")) {
            MethodSpec ms;
            ms.label = detail::get_or<std::string>(m, "label", "");
            if (ms.label.empty()) throw ConfigError("every benchmark method needs a label");
            if (m.contains("schedule")) ms.schedule = detail::get_or<std::string>(m, "schedule", "");
            if (m.contains("eta")) ms.eta = detail::get_or<double>(m, "eta", 0.0);
            if (ms.schedule.has_value() == ms.eta.has_value()) {
                throw ConfigError("method '" + ms.label + "' needs exactly one of 'schedule' or 'eta'");
            }
            Json overrides = Json::object();
            for (const char* key : {"sampler", "beta", "trotter", "num_reads", "sweeps", "endpoint"}) {
                if (m.contains(key)) overrides[key == std::string("sampler") ? "kind" : key] = m.at(key);
            }
            ms.sampler = parse_sampler(overrides, rc.sampler);
            rc.methods.push_back(std::move(ms));
        }
    }
    const auto& grid = detail::section(root, "gridsearch");
    rc.grid_candidates = detail::get_or<std::vector<double>>(grid, "candidates", rc.grid_candidates);
    if (rc.grid_candidates.empty()) throw ConfigError("gridsearch.candidates must not be empty");

    const auto& serve = detail::section(root, "serve");
    rc.serve_mode = detail::get_or<std::string>(serve, "mode", rc.serve_mode);
    rc.serve_host = detail::get_or<std::string>(serve, "host", rc.serve_host);
    rc.serve_port = detail::get_or<int>(serve, "port", rc.serve_port);
    if (serve.contains("fixture")) rc.serve_fixture = detail::get_or<std::string>(serve, "fixture", "");
    if (rc.serve_mode != "fixed" && rc.serve_mode != "proxy-mh") {
        throw ConfigError("serve.mode must be 'fixed' or 'proxy-mh'");
    }
    return rc;
}

}  // namespace duom::config
