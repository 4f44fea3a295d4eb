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

// Reconstruct a 4x4 binary image from 10 random projections: train step sizes
// with MH on a small dataset, then run them with SQA.

#include <cstdio>

#include "duom/benchmark.hpp"

int main() {
    using namespace duom;

    DatasetSpec train_spec{4, 4, 0.6, 16, 11, {}};
    DatasetSpec test_spec{4, 4, 0.6, 4, 12, {}};
    const auto train_set = problems_of(generate_dataset(train_spec));
    const auto test_set = generate_dataset(test_spec);

    SamplerConfig cfg;
    cfg.beta = 4.0;
    cfg.num_reads = 20;
    cfg.sweeps_per_read = 50;
    const auto mh = make_sampler(SamplerKind::mh, cfg);
    const auto sqa = make_sampler(SamplerKind::sqa, cfg);

    TrainConfig tc;
    tc.T = 10;
    tc.beta = cfg.beta;
    tc.epochs = 4;
    tc.minibatches_per_epoch = 4;
    const auto sched = train(train_set, tc, mh);

    std::printf("learned step sizes:");
    for (double eta : sched.etas) std::printf(" %.4f", eta);
    std::printf("\n");

    for (const auto& inst : test_set) {
        const auto res = transfer_execute(sched, inst.problem, sqa, {1.0, cfg.beta}, {inst.index, inst.x_star});
        const auto hit = iterations_to_zero(res.result.trace);
        std::printf("%s instance %zu: mse %.4f, solved at %s\n", res.label.c_str(), inst.index,
                    mse(res.result.best_x, inst.x_star), hit ? std::to_string(*hit).c_str() : "never");
    }
}
