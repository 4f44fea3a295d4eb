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

#include <cstddef>
#include <stdexcept>
#include <string>

namespace duom {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
    using std::runtime_error::runtime_error;
};

/// Vector lengths or variable counts that do not agree.
class DimensionError : public Error {
 public:
    using Error::Error;
};

/// A value outside its documented domain (non-finite coefficient, bad config).
class InvalidArgument : public Error {
 public:
    using Error::Error;
};

/// The auxiliary variables left the finite range during a solve.
class DivergenceError : public Error {
 public:
    DivergenceError(std::size_t iteration, const std::string& what)
            : Error("diverged at iteration " + std::to_string(iteration) + ": " + what),
              iteration_(iteration) {}

    std::size_t iteration() const noexcept { return iteration_; }

 private:
    std::size_t iteration_;
};

/// A sampler failed inside a solver iteration. The original exception is nested.
class SolverError : public Error {
 public:
    SolverError(std::size_t iteration, const std::string& what)
            : Error("iteration " + std::to_string(iteration) + ": " + what), iteration_(iteration) {}

    std::size_t iteration() const noexcept { return iteration_; }

 private:
    std::size_t iteration_;
};

// Remote sampler failures. Each failure class is reported separately so callers
// can decide whether a retry makes sense.

class RemoteError : public Error {
 public:
    using Error::Error;
};

class RemoteConnectionError : public RemoteError {
 public:
    using RemoteError::RemoteError;
};

class RemoteTimeoutError : public RemoteError {
 public:
    using RemoteError::RemoteError;
};

class RemoteProtocolError : public RemoteError {
 public:
    using RemoteError::RemoteError;
};

class RemoteServerError : public RemoteError {
 public:
    RemoteServerError(int status, const std::string& message)
            : RemoteError("server returned " + std::to_string(status) + ": " + message), status_(status) {}

    int status() const noexcept { return status_; }

 private:
    int status_;
};

}  // namespace duom
