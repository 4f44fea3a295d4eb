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

// Client for the remote annealer wire protocol.
//
//   POST {endpoint}/v1/sample
//   {"qubo": {"n_vars", "linear", "quadratic": [[i, j, w], ...], "offset"},
//    "num_reads": int, "seed"?: uint, "beta"?: real, "sweeps_per_read"?: int}
//   200 -> {"samples": [[0|1, ...], ...], "energies": [...], "occurrences"?: [...]}
//   otherwise -> {"error": string}
//
// seed, beta and sweeps_per_read are optional hints. A hardware backend ignores
// them; the mock service uses them to reproduce a local MH run.

#include <chrono>
#include <cstdint>
#include <string>
#include <utility>

#include "httplib.h"
#include "json.hpp"

#include "duom/error.hpp"
#include "duom/problem.hpp"
#include "duom/samplers.hpp"

namespace duom {

namespace wire {

using nlohmann::json;

inline json encode_qubo(const EffectiveQubo& q) {
    json quad = json::array();
    for (const auto& t : q.quadratic()) quad.push_back({t.i, t.j, t.weight});
    return {{"n_vars", q.n_vars()}, {"linear", q.linear()}, {"quadratic", quad}, {"offset", q.offset()}};
}

inline EffectiveQubo decode_qubo(const json& j) {
    const auto n = j.at("n_vars").get<std::size_t>();
    auto linear = j.at("linear").get<std::vector<double>>();
    detail::require_length(linear.size(), n, "qubo linear");
    std::vector<QuadraticTerm> quad;
    for (const auto& t : j.at("quadratic")) {
        if (!t.is_array() || t.size() != 3) throw InvalidArgument("quadratic entries must be [i, j, w]");
        quad.push_back({t[0].get<std::size_t>(), t[1].get<std::size_t>(), t[2].get<double>()});
    }
    return EffectiveQubo(std::move(linear), std::move(quad), j.value("offset", 0.0));
}

inline json encode_request(const EffectiveQubo& q, const SamplerConfig& cfg) {
    return {{"qubo", encode_qubo(q)},
            {"num_reads", cfg.num_reads},
            {"seed", cfg.seed},
            {"beta", cfg.beta},
            {"sweeps_per_read", cfg.sweeps_per_read}};
}

inline json encode_response(const SampleSet& s) {
    json samples = json::array();
    json occurrences = json::array();
    for (std::size_t i = 0; i < s.size(); ++i) {
        samples.push_back(s.samples[i]);
        occurrences.push_back(static_cast<std::int64_t>(std::llround(s.weights[i])));
    }
    return {{"samples", samples}, {"energies", s.energies}, {"occurrences", occurrences}};
}

/// Parse a success body. Energies are recomputed against `q`; reported values are
/// only checked for presence and length.
inline SampleSet decode_response(const json& body, const EffectiveQubo& q) {
    if (!body.is_object() || !body.contains("samples") || !body["samples"].is_array()) {
        throw RemoteProtocolError("response lacks a 'samples' array");
    }
    const auto& samples = body["samples"];
    if (body.contains("energies") && (!body["energies"].is_array() || body["energies"].size() != samples.size())) {
        throw RemoteProtocolError("'energies' must parallel 'samples'");
    }
    const bool has_occ = body.contains("occurrences");
    if (has_occ && (!body["occurrences"].is_array() || body["occurrences"].size() != samples.size())) {
        throw RemoteProtocolError("'occurrences' must parallel 'samples'");
    }
    SampleSet out;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        const auto& row = samples[i];
        if (!row.is_array() || row.size() != q.n_vars()) {
            throw RemoteProtocolError("sample " + std::to_string(i) + " has wrong length");
        }
        BinaryVector x(q.n_vars());
        for (std::size_t l = 0; l < x.size(); ++l) {
            if (!row[l].is_number_integer()) throw RemoteProtocolError("sample entries must be integers");
            const auto bit = row[l].get<std::int64_t>();
            if (bit != 0 && bit != 1) throw RemoteProtocolError("sample entries must be 0 or 1");
            x[l] = static_cast<std::uint8_t>(bit);
        }
        double w = 1.0;
        if (has_occ) {
            const auto& o = body["occurrences"][i];
            if (!o.is_number_integer() || o.get<std::int64_t>() < 1) {
                throw RemoteProtocolError("occurrences must be positive integers");
            }
            w = static_cast<double>(o.get<std::int64_t>());
        }
        const double e = energy(q, x);
        out.push_back(std::move(x), e, w);
    }
    return out;
}

}  // namespace wire

/// Scheme, host and port of an endpoint plus any path prefix.
struct Endpoint {
    std::string origin;
    std::string prefix;

    static Endpoint parse(const std::string& url) {
        const auto scheme = url.find("://");
        if (scheme == std::string::npos) throw InvalidArgument("endpoint must be an http:// URL: " + url);
        const auto path = url.find('/', scheme + 3);
        Endpoint e;
        e.origin = url.substr(0, path);
        if (path != std::string::npos) e.prefix = url.substr(path);
        while (!e.prefix.empty() && e.prefix.back() == '/') e.prefix.pop_back();
        return e;
    }
};

struct RemoteOptions {
    std::chrono::milliseconds timeout{60'000};
};

inline SampleSet remote_sample(const std::string& endpoint, const EffectiveQubo& q, const SamplerConfig& cfg,
                               const RemoteOptions& options = {}) {
    const auto ep = Endpoint::parse(endpoint);
    httplib::Client client(ep.origin);
    const auto secs = std::chrono::duration_cast<std::chrono::seconds>(options.timeout);
    const auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(options.timeout - secs);
    client.set_connection_timeout(secs.count(), usecs.count());
    client.set_read_timeout(secs.count(), usecs.count());
    client.set_write_timeout(secs.count(), usecs.count());

    const auto started = std::chrono::steady_clock::now();
    auto res = client.Post(ep.prefix + "/v1/sample", wire::encode_request(q, cfg).dump(), "application/json");
    if (!res) {
        const auto err = res.error();
        const auto elapsed = std::chrono::steady_clock::now() - started;
        if (err == httplib::Error::ConnectionTimeout || (err == httplib::Error::Read && elapsed >= options.timeout)) {
            throw RemoteTimeoutError("no response from " + endpoint + " within " +
                                     std::to_string(options.timeout.count()) + " ms");
        }
        throw RemoteConnectionError("request to " + endpoint + " failed: " + httplib::to_string(err));
    }
    nlohmann::json body;
    try {
        body = nlohmann::json::parse(res->body);
    } catch (const nlohmann::json::exception& e) {
        if (res->status != 200) throw RemoteServerError(res->status, res->body);
        throw RemoteProtocolError(std::string("response is not JSON: ") + e.what());
    }
    if (res->status != 200) {
        std::string message = body.is_object() && body.contains("error") && body["error"].is_string()
                                      ? body["error"].get<std::string>()
                                      : res->body;
        throw RemoteServerError(res->status, message);
    }
    return wire::decode_response(body, q);
}

inline Sampler make_remote_sampler(std::string endpoint, const SamplerConfig& cfg, RemoteOptions options = {}) {
    cfg.validate(SamplerKind::remote);
    return {"remote", cfg, [endpoint = std::move(endpoint), cfg, options](const EffectiveQubo& q, std::uint64_t s) {
                auto c = cfg;
                c.seed = s;
                return remote_sample(endpoint, q, c, options);
            }};
}

}  // namespace duom
