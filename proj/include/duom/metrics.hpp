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

#include <span>
#include <cstdint>

#include "duom/error.hpp"
#include "duom/problem.hpp"

namespace duom {

/// Per-pixel mean squared error (1/N) sum_i (x_i - x*_i)^2.
inline double mse(std::span<const std::uint8_t> x, std::span<const std::uint8_t> x_star) {
    detail::require_length(x.size(), x_star.size(), "mse");
    if (x.empty()) return 0.0;
    std::size_t diff = 0;
    for (std::size_t i = 0; i < x.size(); ++i) diff += x[i] != x_star[i];
    return static_cast<double>(diff) / static_cast<double>(x.size());
}

}  // namespace duom
