// Copyright 2026 The textsr Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <cmath>
#include <filesystem>

#include <doctest.h>

#include "textsr/errors.hpp"
#include "textsr/generator.hpp"
#include "textsr/rng.hpp"

using namespace textsr;
using ag::Var;

namespace {

GeneratorConfig tiny_config() {
  GeneratorConfig cfg;
  cfg.base_channels = 8;
  cfg.residual_blocks = 1;
  return cfg;
}

Tensor random_batch(int n, int h, int w, std::uint64_t seed) {
  Rng rng(seed);
  Tensor t({n, 3, h, w});
  for (std::int64_t i = 0; i < t.numel(); ++i) t[i] = rng.uniform();
  return t;
}

}  // namespace

TEST_CASE("init statistics: gaussian kernels, zero biases, unit norm scales") {
  GeneratorConfig cfg;  // default desk scale
  Generator g(cfg, 123);
  double sum = 0.0, sq = 0.0;
  std::int64_t n = 0;
  for (const auto& name : g.params().param_names()) {
    const Tensor& t = g.params().param(name).value();
    if (name.ends_with(".w")) {
      for (std::int64_t i = 0; i < t.numel(); ++i) {
        sum += t[i];
        sq += t[i] * t[i];
        ++n;
      }
    } else if (name.ends_with(".b")) {
      for (std::int64_t i = 0; i < t.numel(); ++i) CHECK(t[i] == 0.0);
    } else if (name.ends_with(".gamma")) {
      for (std::int64_t i = 0; i < t.numel(); ++i) CHECK(t[i] == 1.0);
    } else if (name.ends_with(".beta")) {
      for (std::int64_t i = 0; i < t.numel(); ++i) CHECK(t[i] == 0.0);
    }
  }
  REQUIRE(n > 100000);  // enough entries for tight statistics
  const double mean = sum / static_cast<double>(n);
  const double std = std::sqrt(sq / static_cast<double>(n) - mean * mean);
  CHECK(std::fabs(mean) < 0.005);
  CHECK(std == doctest::Approx(0.02).epsilon(0.10));
}

TEST_CASE("forward maps every Table-1 bucket to exactly 4x dimensions") {
  Generator g(tiny_config(), 7);
  for (auto [h, w] : {std::pair{8, 32}, {6, 24}, {5, 20}, {16, 64}}) {
    ag::NoGradGuard guard;
    const auto out = g.forward(Var::leaf(random_batch(2, h, w, 11)), false);
    CHECK(out.sr.value().shape() == std::vector<int>({2, 3, 4 * h, 4 * w}));
    for (std::int64_t i = 0; i < out.sr.value().numel(); ++i) {
      CHECK(out.sr.value()[i] >= 0.0);
      CHECK(out.sr.value()[i] <= 1.0);
    }
  }
  CHECK_THROWS_AS(g.forward(Var::leaf(random_batch(1, 3, 20, 1)), false),
                  InputTooSmallError);
}

TEST_CASE("all-zero parameters force a constant 0.5 output") {
  Generator g(tiny_config(), 7);
  for (const auto& name : g.params().param_names())
    g.params().param(name).mutable_value().zero();
  const TextImage lr(8, 32, 3);
  const TextImage sr = g.apply(lr);
  for (double v : sr.pixels()) CHECK(v == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("determinism: same params and input give bit-identical output") {
  Generator g(tiny_config(), 9);
  const Tensor in = random_batch(2, 8, 32, 5);
  ag::NoGradGuard guard;
  const auto a = g.forward(Var::leaf(in), false);
  const auto b = g.forward(Var::leaf(in), false);
  for (std::int64_t i = 0; i < a.sr.value().numel(); ++i)
    CHECK(a.sr.value()[i] == b.sr.value()[i]);
}

TEST_CASE("gradient flows into every parameter group") {
  Generator g(tiny_config(), 13);
  Var in = Var::leaf(random_batch(2, 6, 12, 3));
  auto out = g.forward(in, true);
  ag::backward(ag::mean_all(out.sr));
  for (const auto& name : g.params().param_names()) {
    Var p = g.params().param(name);
    INFO("param ", name);
    REQUIRE(p.has_grad());
    CHECK(p.grad().max_abs() > 0.0);
  }
}

TEST_CASE("analytic gradients match central differences on a tiny config") {
  Generator g(tiny_config(), 17);
  const Tensor in = random_batch(1, 5, 10, 19);
  Rng target_rng(23);
  Tensor target({1, 3, 20, 40});
  for (std::int64_t i = 0; i < target.numel(); ++i) target[i] = target_rng.uniform();

  auto loss_value = [&]() {
    ag::NoGradGuard guard;
    auto out = g.forward(Var::leaf(in), true);
    Var diff = ag::sub(out.sr, Var::leaf(target));
    return ag::mean_all(ag::mul(diff, diff)).scalar();
  };

  g.params().zero_grads();
  auto out = g.forward(Var::leaf(in), true);
  Var diff = ag::sub(out.sr, Var::leaf(target));
  ag::backward(ag::mean_all(ag::mul(diff, diff)));

  Rng pick(29);
  const auto names = g.params().param_names();
  int checked = 0;
  const double h = 1e-5;
  while (checked < 24) {
    const auto& name = names[pick.uniform_index(names.size())];
    Var p = g.params().param(name);
    Tensor& value = p.mutable_value();
    const auto idx =
        static_cast<std::int64_t>(pick.uniform_index(static_cast<std::uint64_t>(value.numel())));
    const double analytic = p.has_grad() ? p.grad()[idx] : 0.0;
    if (std::fabs(analytic) < 1e-7) continue;  // relative error undefined near zero

    const double saved = value[idx];
    value[idx] = saved + h;
    const double fp = loss_value();
    value[idx] = saved - h;
    const double fm = loss_value();
    value[idx] = saved;
    const double numeric = (fp - fm) / (2 * h);
    const double err = std::fabs(analytic - numeric) /
                       std::max({std::fabs(analytic), std::fabs(numeric), 1e-12});
    INFO("param ", name, "[", idx, "] analytic ", analytic, " numeric ", numeric);
    CHECK(err < 1e-4);
    ++checked;
  }
}

TEST_CASE("activation heatmap contracts") {
  // constant features normalize to all zeros
  const Tensor flat = Tensor::full({4, 3, 5}, 0.7);
  const TextImage zero = activation_heatmap(flat, 6, 10);
  for (double v : zero.pixels()) CHECK(v == 0.0);

  // a single hot region dominates the map
  Tensor hot({2, 4, 6});
  hot[(1 * 4 + 2) * 6 + 3] = 5.0;  // channel 1, y=2, x=3
  const TextImage heat = activation_heatmap(hot, 4, 6);
  double best = -1.0;
  int by = -1, bx = -1;
  for (int y = 0; y < 4; ++y)
    for (int x = 0; x < 6; ++x)
      if (heat.at(y, x, 0) > best) {
        best = heat.at(y, x, 0);
        by = y;
        bx = x;
      }
  CHECK(by == 2);
  CHECK(bx == 3);
  for (double v : heat.pixels()) {
    CHECK(v >= 0.0);
    CHECK(v <= 1.0);
  }
}

TEST_CASE("checkpoint save/load round trip preserves output") {
  Generator g(tiny_config(), 31);
  const std::string path =
      (std::filesystem::temp_directory_path() / "textsr_gen_test.tsra").string();
  g.save(path);
  auto loaded = Generator::load(path);
  CHECK(loaded->config().base_channels == 8);
  CHECK(loaded->config().residual_blocks == 1);
  CHECK(loaded->params().state_hash() == g.params().state_hash());

  Rng rng(33);
  TextImage lr(8, 32, 3);
  for (double& v : lr.pixels()) v = rng.uniform();
  const TextImage a = g.apply(lr);
  const TextImage b = loaded->apply(lr);
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(a.pixels()[i] == b.pixels()[i]);
  std::filesystem::remove(path);
}
