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

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "lsopt/ops.hpp"
#include "lsopt/param.hpp"
#include "lsopt/rng.hpp"
#include "support/gradcheck.hpp"

using namespace lsopt;
using lsopt::testing::check_input_gradient;
using lsopt::testing::check_gradients;
using lsopt::testing::rel_err;

namespace {

Tensor random_tensor(std::vector<std::size_t> shape, Rng& rng, double lo = -2.0,
                     double hi = 2.0) {
  std::vector<double> v(shape_size(shape));
  for (double& x : v) x = rng.uniform(lo, hi);
  return Tensor(std::move(shape), std::move(v));
}

}  // namespace

TEST_SUITE("matmul") {
  TEST_CASE("identity") {
    const Tensor eye({2, 2}, {1, 0, 0, 1});
    const Tensor v({2, 1}, {2, 3});
    const Tensor out = matmul(eye, v);
    CHECK(out.values() == std::vector<double>{2, 3});
  }

  TEST_CASE("1x2 times 2x1") {
    const Tensor a({1, 2}, {1, 2});
    const Tensor b({2, 1}, {3, 4});
    CHECK(matmul(a, b).item() == 11.0);
  }

  TEST_CASE("shape mismatch reports both shapes") {
    const Tensor a({2, 3});
    const Tensor b({2, 3});
    CHECK_THROWS_WITH_AS(matmul(a, b), doctest::Contains("[2x3]"), ShapeError);
  }

  TEST_CASE("gradient of sum(A*B) matches finite differences") {
    Rng rng(7);
    Tensor a = random_tensor({3, 3}, rng);
    Tensor b = random_tensor({3, 3}, rng);
    a.set_requires_grad(true);
    b.set_requires_grad(true);
    {
      Tape tape;
      tape.backward(sum(matmul(a, b)));
    }
    auto loss = [&]() { return sum(matmul(a, b)).item(); };
    CHECK(check_input_gradient(loss, a, 1e-6).ok);
    CHECK(check_input_gradient(loss, b, 1e-6).ok);
  }

  TEST_CASE("batched matmul gradient") {
    Rng rng(9);
    Tensor a = random_tensor({2, 3, 4}, rng);
    Tensor b = random_tensor({2, 4, 2}, rng);
    a.set_requires_grad(true);
    b.set_requires_grad(true);
    {
      Tape tape;
      tape.backward(sum(matmul(a, b)));
    }
    auto loss = [&]() { return sum(matmul(a, b)).item(); };
    CHECK(check_input_gradient(loss, a, 1e-6).ok);
    CHECK(check_input_gradient(loss, b, 1e-6).ok);
  }
}

TEST_SUITE("elementwise") {
  TEST_CASE("relu clamps negatives") {
    const Tensor x({2}, {-1, 2});
    CHECK(relu(x).values() == std::vector<double>{0, 2});
  }

  TEST_CASE("scale by zero") {
    const Tensor x({3}, {1, 2, 3});
    CHECK(scale(x, 0.0).values() == std::vector<double>{0, 0, 0});
  }

  TEST_CASE("log rejects non-positive input") {
    const Tensor x({2}, {1.0, -0.5});
    CHECK_THROWS_AS(log(x), std::domain_error);
  }

  TEST_CASE("gelu gradient matches finite differences on 100 points") {
    Rng rng(11);
    Tensor x = random_tensor({100}, rng);
    x.set_requires_grad(true);
    {
      Tape tape;
      tape.backward(sum(gelu(x)));
    }
    auto loss = [&]() { return sum(gelu(x)).item(); };
    const auto result = check_input_gradient(loss, x, 1e-5);
    CHECK_MESSAGE(result.ok, result.worst_location, " rel err ", result.worst_rel_err);
  }

  TEST_CASE("binary op gradients, including trailing broadcast") {
    Rng rng(13);
    for (int variant = 0; variant < 3; ++variant) {
      Tensor a = random_tensor({4, 3}, rng);
      Tensor b = variant == 2 ? random_tensor({3}, rng) : random_tensor({4, 3}, rng);
      a.set_requires_grad(true);
      b.set_requires_grad(true);
      auto make = [&]() {
        switch (variant) {
          case 0: return sub(a, b);
          case 1: return mul(a, b);
          default: return add(a, b);
        }
      };
      {
        Tape tape;
        tape.backward(sum(make()));
      }
      auto loss = [&]() { return sum(make()).item(); };
      CHECK(check_input_gradient(loss, a, 1e-6).ok);
      CHECK(check_input_gradient(loss, b, 1e-6).ok);
    }
  }

  TEST_CASE("scalar broadcast") {
    const Tensor x({2, 2}, {1, 2, 3, 4});
    const Tensor s = Tensor::scalar(10.0);
    CHECK(add(x, s).values() == std::vector<double>{11, 12, 13, 14});
    CHECK(sub(s, x).values() == std::vector<double>{9, 8, 7, 6});
  }

  TEST_CASE("incompatible shapes throw") {
    CHECK_THROWS_AS(add(Tensor({2, 3}), Tensor({2})), ShapeError);
  }

  TEST_CASE("exp and log gradients") {
    Rng rng(15);
    Tensor x = random_tensor({20}, rng, 0.1, 2.0);
    x.set_requires_grad(true);
    {
      Tape tape;
      tape.backward(sum(mul(exp(x), log(x))));
    }
    auto loss = [&]() { return sum(mul(exp(x), log(x))).item(); };
    CHECK(check_input_gradient(loss, x, 1e-5).ok);
  }
}

TEST_SUITE("softmax_cross_entropy") {
  TEST_CASE("uniform logits give ln(classes)") {
    const Tensor logits({3, 2}, {0.4, 0.4, -1.0, -1.0, 7.0, 7.0});
    const std::vector<int> labels = {0, 1, 0};
    CHECK(softmax_cross_entropy(logits, labels).item() ==
          doctest::Approx(std::log(2.0)).epsilon(1e-12));
  }

  TEST_CASE("confident correct logit gives near-zero loss") {
    const Tensor logits({1, 2}, {10.0, -10.0});
    const std::vector<int> labels = {0};
    CHECK(softmax_cross_entropy(logits, labels).item() < 1e-4);
  }

  TEST_CASE("label out of range") {
    const Tensor logits({1, 2}, {0.0, 0.0});
    const std::vector<int> bad = {2};
    CHECK_THROWS_AS(softmax_cross_entropy(logits, bad), std::out_of_range);
  }

  TEST_CASE("gradient matches finite differences on random 4x3 logits") {
    Rng rng(17);
    Tensor logits = random_tensor({4, 3}, rng);
    logits.set_requires_grad(true);
    const std::vector<int> labels = {2, 0, 1, 1};
    {
      Tape tape;
      tape.backward(softmax_cross_entropy(logits, labels));
    }
    auto loss = [&]() { return softmax_cross_entropy(logits, labels).item(); };
    const auto result = check_input_gradient(loss, logits, 1e-5);
    CHECK_MESSAGE(result.ok, result.worst_location, " rel err ", result.worst_rel_err);
  }
}

TEST_SUITE("layernorm") {
  TEST_CASE("constant row maps to zeros") {
    const Tensor x({1, 4}, {3.5, 3.5, 3.5, 3.5});
    const Tensor gain({4}, 1.0);
    const Tensor bias({4}, 0.0);
    const Tensor out = layernorm(x, gain, bias);
    for (double v : out.values()) CHECK(v == 0.0);
  }

  TEST_CASE("unit gain output has zero mean and unit variance") {
    Rng rng(19);
    const Tensor x = random_tensor({3, 16}, rng);
    const Tensor gain({16}, 1.0);
    const Tensor bias({16}, 0.0);
    const Tensor out = layernorm(x, gain, bias);
    for (std::size_t r = 0; r < 3; ++r) {
      double mean = 0.0, var = 0.0;
      for (std::size_t j = 0; j < 16; ++j) mean += out.values()[r * 16 + j];
      mean /= 16.0;
      for (std::size_t j = 0; j < 16; ++j) {
        const double c = out.values()[r * 16 + j] - mean;
        var += c * c;
      }
      var /= 16.0;
      CHECK(std::abs(mean) < 1e-6);
      CHECK(std::abs(var - 1.0) < 1e-3);  // off by eps/(var+eps)
    }
  }

  TEST_CASE("gradient matches finite differences") {
    Rng rng(21);
    Tensor x = random_tensor({3, 8}, rng);
    Tensor gain = random_tensor({8}, rng, 0.5, 1.5);
    Tensor bias = random_tensor({8}, rng, -0.5, 0.5);
    x.set_requires_grad(true);
    gain.set_requires_grad(true);
    bias.set_requires_grad(true);
    const std::vector<int> labels = {0, 1, 0};
    auto make = [&]() {
      return softmax_cross_entropy(reshape(layernorm(x, gain, bias), {3, 8}), labels);
    };
    {
      Tape tape;
      tape.backward(make());
    }
    auto loss = [&]() { return make().item(); };
    CHECK(check_input_gradient(loss, x, 1e-4).ok);
    CHECK(check_input_gradient(loss, gain, 1e-4).ok);
    CHECK(check_input_gradient(loss, bias, 1e-4).ok);
  }
}

TEST_SUITE("structural ops") {
  TEST_CASE("embedding gathers and scatters") {
    Tensor table({3, 2}, {1, 2, 3, 4, 5, 6});
    table.set_requires_grad(true);
    const std::vector<int> ids = {2, 0, 2};
    Tensor out;
    {
      Tape tape;
      out = embedding(table, ids);
      tape.backward(sum(out));
    }
    CHECK(out.values() == std::vector<double>{5, 6, 1, 2, 5, 6});
    CHECK(table.grad() == std::vector<double>{1, 1, 0, 0, 2, 2});
    const std::vector<int> bad = {3};
    CHECK_THROWS_AS(embedding(table, bad), std::out_of_range);
  }

  TEST_CASE("transpose, reshape, take_position gradients") {
    Rng rng(23);
    Tensor x = random_tensor({2, 3, 4}, rng);
    x.set_requires_grad(true);
    auto make = [&]() {
      const Tensor t = transpose_last(x);              // [2,4,3]
      const Tensor r = reshape(t, {2, 3, 4});          // reshuffled view copy
      return sum(mul(take_position(r, 1), take_position(r, 1)));
    };
    {
      Tape tape;
      tape.backward(make());
    }
    auto loss = [&]() { return make().item(); };
    CHECK(check_input_gradient(loss, x, 1e-6).ok);
  }

  TEST_CASE("softmax_last rows sum to one and gradient checks") {
    Rng rng(25);
    Tensor x = random_tensor({4, 5}, rng);
    x.set_requires_grad(true);
    const Tensor w = random_tensor({4, 5}, rng);
    auto make = [&]() { return sum(mul(softmax_last(x), w)); };
    {
      Tape tape;
      tape.backward(make());
    }
    const Tensor probs = softmax_last(x);
    for (std::size_t r = 0; r < 4; ++r) {
      double s = 0.0;
      for (std::size_t j = 0; j < 5; ++j) s += probs.values()[r * 5 + j];
      CHECK(s == doctest::Approx(1.0).epsilon(1e-12));
    }
    auto loss = [&]() { return make().item(); };
    CHECK(check_input_gradient(loss, x, 1e-5).ok);
  }
}

TEST_SUITE("backward") {
  TEST_CASE("sum gradient is all ones") {
    Tensor w({3}, {1, 2, 3});
    w.set_requires_grad(true);
    Tape tape;
    tape.backward(sum(w));
    CHECK(w.grad() == std::vector<double>{1, 1, 1});
  }

  TEST_CASE("gradient of half squared norm is the point itself") {
    Tensor w({2}, {3, 4});
    w.set_requires_grad(true);
    Tape tape;
    tape.backward(scale(sum(mul(w, w)), 0.5));
    CHECK(w.grad() == std::vector<double>{3, 4});
  }

  TEST_CASE("non-scalar loss is rejected") {
    Tensor w({2}, {1, 2});
    w.set_requires_grad(true);
    Tape tape;
    const Tensor y = mul(w, w);
    CHECK_THROWS_AS(tape.backward(y), std::invalid_argument);
  }

  TEST_CASE("a tape cannot be consumed twice") {
    Tensor w({2}, {1, 2});
    w.set_requires_grad(true);
    Tape tape;
    const Tensor y = sum(w);
    tape.backward(y);
    CHECK_THROWS_AS(tape.backward(y), std::logic_error);
  }

  TEST_CASE("loss from another tape is rejected") {
    Tensor w({2}, {1, 2});
    w.set_requires_grad(true);
    Tensor y;
    {
      Tape inner;
      y = sum(w);
    }
    Tape outer;
    CHECK_THROWS_AS(outer.backward(y), std::logic_error);
  }

  TEST_CASE("parameters that do not feed the loss keep zero gradients") {
    Tensor used({2}, {1, 2});
    Tensor unused({2}, {5, 5});
    used.set_requires_grad(true);
    unused.set_requires_grad(true);
    Tape tape;
    tape.backward(sum(used));
    CHECK(unused.grad() == std::vector<double>{0, 0});
  }

  TEST_CASE("ops do not mutate their inputs") {
    Rng rng(27);
    const Tensor a = random_tensor({3, 3}, rng);
    const Tensor b = random_tensor({3, 3}, rng);
    const std::vector<double> a_before = a.values();
    const std::vector<double> b_before = b.values();
    (void)matmul(a, b);
    (void)add(a, b);
    (void)gelu(a);
    (void)softmax_last(b);
    CHECK(a.values() == a_before);
    CHECK(b.values() == b_before);
  }

  TEST_CASE("forward evaluation is deterministic") {
    Rng rng1(31), rng2(31);
    const Tensor a1 = random_tensor({4, 4}, rng1);
    const Tensor a2 = random_tensor({4, 4}, rng2);
    CHECK(matmul(a1, a1).values() == matmul(a2, a2).values());
    CHECK(gelu(a1).values() == gelu(a2).values());
  }

  TEST_CASE("composite two-layer loss matches finite differences") {
    Rng rng(33);
    std::vector<Parameter> params;
    params.emplace_back("w1", random_tensor({5, 8}, rng));
    params.emplace_back("b1", random_tensor({8}, rng, -0.1, 0.1));
    params.emplace_back("w2", random_tensor({8, 3}, rng));
    params.emplace_back("b2", random_tensor({3}, rng, -0.1, 0.1));
    const Tensor x = random_tensor({6, 5}, rng);
    const std::vector<int> labels = {0, 1, 2, 0, 1, 2};
    auto make = [&]() {
      const Tensor h = relu(add(matmul(x, params[0].value), params[1].value));
      const Tensor logits = add(matmul(h, params[2].value), params[3].value);
      return softmax_cross_entropy(logits, labels);
    };
    {
      Tape tape;
      tape.backward(make());
    }
    auto loss = [&]() { return make().item(); };
    const auto result = check_gradients(loss, params, 1e-4);
    CHECK_MESSAGE(result.ok, result.worst_location, " rel err ", result.worst_rel_err);
  }

  TEST_CASE("analytic vs finite differences over random op chains, 100 trials") {
    Rng rng(35);
    for (int trial = 0; trial < 100; ++trial) {
      Tensor x = random_tensor({6}, rng);
      x.set_requires_grad(true);
      const int pick = trial % 4;
      auto make = [&]() {
        switch (pick) {
          case 0: return sum(gelu(scale(x, 0.7)));
          case 1: return sum(mul(relu(x), x));
          case 2: return scale(sum(exp(scale(x, 0.3))), 0.5);
          default: return sum(softmax_last(reshape(x, {2, 3})));
        }
      };
      {
        Tape tape;
        tape.backward(make());
      }
      auto loss = [&]() { return make().item(); };
      const auto result = check_input_gradient(loss, x, 1e-4);
      CHECK_MESSAGE(result.ok, "trial ", trial, ": ", result.worst_location, " rel err ",
                    result.worst_rel_err);
    }
  }
}

TEST_SUITE("grad_sq_norm") {
  TEST_CASE("hand-checked values") {
    std::vector<Parameter> params;
    params.emplace_back("a", Tensor({2}, {0.0, 0.0}));
    params.emplace_back("b", Tensor({1}, {0.0}));
    params[0].value.grad() = {1.0, 2.0};
    params[1].value.grad() = {2.0};
    CHECK(grad_sq_norm(params) == 9.0);

    params[0].value.grad() = {0.0, 0.0};
    params[1].value.grad() = {0.0};
    CHECK(grad_sq_norm(params) == 0.0);
  }

  TEST_CASE("matches a brute-force flattened dot product") {
    Rng rng(37);
    std::vector<Parameter> params;
    params.emplace_back("a", Tensor({3, 4}));
    params.emplace_back("b", Tensor({7}));
    std::vector<double> flat;
    for (Parameter& p : params) {
      for (double& g : p.value.grad()) {
        g = rng.uniform(-3.0, 3.0);
        flat.push_back(g);
      }
    }
    double expected = 0.0;
    for (double g : flat) expected += g * g;
    CHECK(grad_sq_norm(params) == expected);
  }

  TEST_CASE("missing gradient is a state error") {
    Tensor t({2}, {1, 2});  // requires_grad never set
    std::vector<Parameter> params(1);
    params[0].name = "w";
    params[0].value = t;
    CHECK_THROWS_AS(grad_sq_norm(params), std::logic_error);
  }
}
