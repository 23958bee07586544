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

#include <benchmark/benchmark.h>

#include "textsr/autograd.hpp"
#include "textsr/charset.hpp"
#include "textsr/generator.hpp"
#include "textsr/metrics.hpp"
#include "textsr/recognizer.hpp"
#include "textsr/resize.hpp"
#include "textsr/rng.hpp"

namespace {

using namespace textsr;

TextImage random_image(int h, int w, std::uint64_t seed) {
  Rng rng(seed);
  TextImage img(h, w, 3);
  for (double& v : img.pixels()) v = rng.uniform();
  return img;
}

void BM_BicubicDown4x(benchmark::State& state) {
  const TextImage hr = random_image(32, 128, 1);
  for (auto _ : state) benchmark::DoNotOptimize(bicubic_resize(hr, 8, 32));
}
BENCHMARK(BM_BicubicDown4x);

void BM_Psnr(benchmark::State& state) {
  const TextImage a = random_image(32, 128, 2);
  const TextImage b = random_image(32, 128, 3);
  for (auto _ : state) benchmark::DoNotOptimize(psnr(a, b));
}
BENCHMARK(BM_Psnr);

void BM_Ssim(benchmark::State& state) {
  const TextImage a = random_image(32, 128, 4);
  const TextImage b = random_image(32, 128, 5);
  for (auto _ : state) benchmark::DoNotOptimize(ssim(a, b));
}
BENCHMARK(BM_Ssim);

void BM_EditDistance(benchmark::State& state) {
  for (auto _ : state)
    benchmark::DoNotOptimize(edit_distance("RONALDO", "handmade"));
}
BENCHMARK(BM_EditDistance);

void BM_Conv2d(benchmark::State& state) {
  Rng rng(6);
  nn::Init init{&rng};
  Tensor x({8, 16, 8, 32});
  for (std::int64_t i = 0; i < x.numel(); ++i) x[i] = rng.uniform();
  Tensor w = init.gaussian({16, 16, 3, 3});
  ag::NoGradGuard guard;
  ag::Var vx = ag::Var::leaf(x);
  ag::Var vw = ag::Var::leaf(w);
  for (auto _ : state) benchmark::DoNotOptimize(ag::conv2d(vx, vw, 1, 1, 1, 1));
}
BENCHMARK(BM_Conv2d);

void BM_GeneratorForward8x32(benchmark::State& state) {
  GeneratorConfig cfg;
  cfg.base_channels = 16;
  cfg.residual_blocks = 2;
  Generator g(cfg, 7);
  const TextImage lr = random_image(8, 32, 8);
  for (auto _ : state) benchmark::DoNotOptimize(g.apply(lr));
}
BENCHMARK(BM_GeneratorForward8x32);

void BM_RecognizerSmall32x128(benchmark::State& state) {
  Recognizer r(RecognizerConfig::small(), Charset(), 9);
  const TextImage img = random_image(32, 128, 10);
  for (auto _ : state) benchmark::DoNotOptimize(r.recognize(img));
}
BENCHMARK(BM_RecognizerSmall32x128);

}  // namespace

BENCHMARK_MAIN();
