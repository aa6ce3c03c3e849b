// Copyright 2026 The lsopt Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <benchmark/benchmark.h>

#include <memory>

#include "lsopt/data.hpp"
#include "lsopt/models.hpp"
#include "lsopt/optimizers.hpp"

namespace {

struct TrainingFixture {
  lsopt::Dataset data;
  std::unique_ptr<lsopt::Model> model;
  lsopt::Batch batch;

  TrainingFixture() {
    data = lsopt::make_majority_token_task(64, 16, 64, 42);
    model = std::make_unique<lsopt::Encoder>(64, 16, 32, 4, 2, 7);
    std::vector<std::size_t> idx(32);
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    batch = data.gather(idx);
  }

  lsopt::BatchLoss loss() {
    return lsopt::BatchLoss(
        [this]() { return lsopt::batch_loss(*model, batch).item(); },
        [this]() {
          lsopt::zero_grads(model->parameters());
          lsopt::Tape tape;
          const lsopt::Tensor l = lsopt::batch_loss(*model, batch);
          tape.backward(l);
          return l.item();
        });
  }

  lsopt::LineSearchConfig ls_config() const {
    lsopt::LineSearchConfig ls;
    ls.batch_size = 32;
    ls.samples_per_doubling = 512;
    return ls;
  }
};

void BM_EncoderForward(benchmark::State& state) {
  TrainingFixture fx;
  for (auto _ : state) {
    benchmark::DoNotOptimize(lsopt::batch_loss(*fx.model, fx.batch).item());
  }
}
BENCHMARK(BM_EncoderForward);

void BM_EncoderBackward(benchmark::State& state) {
  TrainingFixture fx;
  const lsopt::BatchLoss loss = fx.loss();
  for (auto _ : state) {
    benchmark::DoNotOptimize(loss.value_and_grad());
  }
}
BENCHMARK(BM_EncoderBackward);

void BM_StepAdamBaseline(benchmark::State& state) {
  TrainingFixture fx;
  lsopt::WarmupCosineSchedule schedule;
  schedule.peak_lr = 2e-5;
  schedule.total_steps = 1 << 20;
  lsopt::ScheduledAdam opt(fx.model->parameters(), schedule);
  const lsopt::BatchLoss loss = fx.loss();
  for (auto _ : state) {
    benchmark::DoNotOptimize(opt.step(loss));
  }
}
BENCHMARK(BM_StepAdamBaseline);

void BM_StepAdamLineSearch(benchmark::State& state) {
  TrainingFixture fx;
  lsopt::AdamLineSearch opt(fx.model->parameters(), fx.ls_config());
  const lsopt::BatchLoss loss = fx.loss();
  for (auto _ : state) {
    benchmark::DoNotOptimize(opt.step(loss));
  }
}
BENCHMARK(BM_StepAdamLineSearch);

void BM_StepUnitwiseLineSearch(benchmark::State& state) {
  TrainingFixture fx;
  lsopt::Partition partition =
      lsopt::partition_model(*fx.model, lsopt::SplitScheme::per_layer(6));
  lsopt::UnitwiseAdamLineSearch opt(fx.model->parameters(), std::move(partition), fx.ls_config());
  const lsopt::BatchLoss loss = fx.loss();
  for (auto _ : state) {
    benchmark::DoNotOptimize(opt.step(loss));
  }
}
BENCHMARK(BM_StepUnitwiseLineSearch);

}  // namespace
