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

#include "lsopt/ops.hpp"
#include "lsopt/rng.hpp"

namespace {

lsopt::Tensor random_tensor(std::vector<std::size_t> shape, lsopt::Rng& rng) {
  std::vector<double> v(lsopt::shape_size(shape));
  for (double& x : v) x = rng.uniform(-1.0, 1.0);
  return lsopt::Tensor(std::move(shape), std::move(v));
}

void BM_MatmulForward(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  lsopt::Rng rng(1);
  const lsopt::Tensor a = random_tensor({n, n}, rng);
  const lsopt::Tensor b = random_tensor({n, n}, rng);
  for (auto _ : state) {
    benchmark::DoNotOptimize(lsopt::matmul(a, b));
  }
  state.SetItemsProcessed(state.iterations() * static_cast<long>(n * n * n));
}
BENCHMARK(BM_MatmulForward)->Arg(16)->Arg(32)->Arg(64)->Arg(128);

void BM_MatmulBackward(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  lsopt::Rng rng(2);
  lsopt::Tensor a = random_tensor({n, n}, rng);
  lsopt::Tensor b = random_tensor({n, n}, rng);
  a.set_requires_grad(true);
  b.set_requires_grad(true);
  for (auto _ : state) {
    lsopt::Tape tape;
    tape.backward(lsopt::sum(lsopt::matmul(a, b)));
    benchmark::DoNotOptimize(a.grad().data());
  }
}
BENCHMARK(BM_MatmulBackward)->Arg(16)->Arg(32)->Arg(64);

void BM_LayerNormForward(benchmark::State& state) {
  const auto rows = static_cast<std::size_t>(state.range(0));
  lsopt::Rng rng(3);
  const lsopt::Tensor x = random_tensor({rows, 64}, rng);
  const lsopt::Tensor gain({64}, 1.0);
  const lsopt::Tensor bias({64}, 0.0);
  for (auto _ : state) {
    benchmark::DoNotOptimize(lsopt::layernorm(x, gain, bias));
  }
}
BENCHMARK(BM_LayerNormForward)->Arg(64)->Arg(512);

}  // namespace
