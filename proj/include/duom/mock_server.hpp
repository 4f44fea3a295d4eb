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

#include <atomic>
#include <memory>
#include <string>
#include <thread>
#include <utility>

#include "httplib.h"
#include "json.hpp"

#include "duom/remote.hpp"
#include "duom/samplers.hpp"

namespace duom {

/// Test double for the remote annealer. In fixed mode every valid request gets
/// the fixture body verbatim; in proxy-mh mode requests are answered by mh_sample
/// using the request's num_reads and hints over the configured defaults.
class MockAnnealer {
 public:
    enum class Mode { fixed, proxy_mh };

    static MockAnnealer fixed(nlohmann::json fixture) {
        MockAnnealer m;
        m.mode_ = Mode::fixed;
        m.fixture_ = std::move(fixture);
        return m;
    }

    static MockAnnealer proxy_mh(SamplerConfig defaults) {
        defaults.validate(SamplerKind::mh);
        MockAnnealer m;
        m.mode_ = Mode::proxy_mh;
        m.defaults_ = defaults;
        return m;
    }

    Mode mode() const noexcept { return mode_; }

    /// (status, body) for one POST /v1/sample request body.
    std::pair<int, std::string> handle(const std::string& body) const {
        EffectiveQubo q;
        SamplerConfig cfg = defaults_;
        try {
            const auto req = nlohmann::json::parse(body);
            q = wire::decode_qubo(req.at("qubo"));
            cfg.num_reads = req.at("num_reads").get<std::size_t>();
            if (req.contains("seed")) cfg.seed = req["seed"].get<std::uint64_t>();
            if (req.contains("beta")) cfg.beta = req["beta"].get<double>();
            if (req.contains("sweeps_per_read")) cfg.sweeps_per_read = req["sweeps_per_read"].get<std::size_t>();
            cfg.validate(SamplerKind::mh);
        } catch (const std::exception& e) {
            return {400, nlohmann::json{{"error", std::string("malformed request: ") + e.what()}}.dump()};
        }
        if (mode_ == Mode::fixed) return {200, fixture_.dump()};
        try {
            return {200, wire::encode_response(mh_sample(q, cfg)).dump()};
        } catch (const std::exception& e) {
            return {500, nlohmann::json{{"error", e.what()}}.dump()};
        }
    }

 private:
    MockAnnealer() = default;

    Mode mode_ = Mode::fixed;
    nlohmann::json fixture_;
    SamplerConfig defaults_;
};

/// Runs a MockAnnealer behind an HTTP listener on a background thread.
class MockServer {
 public:
    explicit MockServer(MockAnnealer annealer) : annealer_(std::move(annealer)) {
        server_.Post("/v1/sample", [this](const httplib::Request& req, httplib::Response& res) {
            auto [status, body] = annealer_.handle(req.body);
            res.status = status;
            res.set_content(body, "application/json");
        });
    }

    MockServer(const MockServer&) = delete;
    MockServer& operator=(const MockServer&) = delete;

    ~MockServer() { stop(); }

    /// Bind (port 0 picks a free port) and start serving. Throws if the port is taken.
    int start(const std::string& host = "127.0.0.1", int port = 0) {
        if (port == 0) {
            port_ = server_.bind_to_any_port(host);
        } else {
            port_ = server_.bind_to_port(host, port) ? port : -1;
        }
        if (port_ < 0) throw Error("cannot bind " + host + ":" + std::to_string(port));
        thread_ = std::thread([this] { server_.listen_after_bind(); });
        server_.wait_until_ready();
        return port_;
    }

    /// Serve on the calling thread until stop() is called elsewhere.
    void listen_blocking(const std::string& host, int port) {
        if (!server_.bind_to_port(host, port)) throw Error("cannot bind " + host + ":" + std::to_string(port));
        port_ = port;
        server_.listen_after_bind();
    }

    void stop() {
        server_.stop();
        if (thread_.joinable()) thread_.join();
    }

    int port() const noexcept { return port_; }
    std::string url() const { return "http://127.0.0.1:" + std::to_string(port_); }

 private:
    MockAnnealer annealer_;
    httplib::Server server_;
    std::thread thread_;
    int port_ = -1;
};

}  // namespace duom
