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

#include <doctest.h>

#include "textsr/discriminator.hpp"
#include "textsr/errors.hpp"
#include "textsr/rng.hpp"

using namespace textsr;
using ag::Var;

namespace {

DiscriminatorConfig tiny_config() {
  DiscriminatorConfig cfg;
  cfg.base_channels = 4;
  return cfg;
}

Tensor random_batch(int n, int h, int w, std::uint64_t seed) {
  Rng rng(seed);
  Tensor t({n, 3, h, w});
  for (std::int64_t i = 0; i < t.numel(); ++i) t[i] = rng.uniform();
  return t;
}

// scalar-loop oracle for the adversarial losses
double d_loss_oracle(const std::vector<double>& pr, const std::vector<double>& pf) {
  auto clamp = [](double p) { return std::min(std::max(p, kAdvEps), 1.0); };
  double sr = 0.0, sf = 0.0;
  for (double p : pr) sr += std::log(clamp(p));
  for (double p : pf) sf += std::log(std::max(1.0 - p, kAdvEps));
  return -(sr / pr.size()) - (sf / pf.size());
}

}  // namespace

TEST_CASE("all-zero parameters output exactly 0.5") {
  Discriminator d(tiny_config(), 3);
  for (const auto& name : d.params().param_names())
    d.params().param(name).mutable_value().zero();
  ag::NoGradGuard guard;
  const Var p = d.forward(Var::leaf(random_batch(3, 32, 128, 1)), false);
  for (std::int64_t i = 0; i < p.value().numel(); ++i)
    CHECK(p.value()[i] == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("batch of 4 HR images yields 4 probabilities strictly inside (0,1)") {
  Discriminator d(tiny_config(), 5);
  ag::NoGradGuard guard;
  const Var p = d.forward(Var::leaf(random_batch(4, 32, 128, 2)), true);
  REQUIRE(p.value().shape() == std::vector<int>({4, 1}));
  for (std::int64_t i = 0; i < 4; ++i) {
    CHECK(p.value()[i] > 0.0);
    CHECK(p.value()[i] < 1.0);
  }
  CHECK_THROWS_AS(d.forward(Var::leaf(random_batch(1, 16, 128, 3)), false),
                  InputTooSmallError);
}

TEST_CASE("d_loss analytic anchors and limits") {
  auto probs = [](std::vector<double> v) {
    Tensor t({static_cast<int>(v.size()), 1});
    for (std::size_t i = 0; i < v.size(); ++i) t[static_cast<std::int64_t>(i)] = v[i];
    return Var::leaf(t);
  };
  ag::NoGradGuard guard;

  // uninformative point: 2 ln 2
  const double v = d_loss(probs({0.5, 0.5}), probs({0.5, 0.5})).scalar();
  CHECK(v == doctest::Approx(2.0 * std::log(2.0)).epsilon(1e-12));

  // perfect discriminator limit
  const double lim =
      d_loss(probs({1.0 - kAdvEps}), probs({kAdvEps})).scalar();
  CHECK(lim < 1e-5);
  CHECK(lim >= 0.0);

  // random batches against the scalar oracle
  Rng rng(7);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> pr(4), pf(4);
    for (auto& p : pr) p = rng.uniform(0.01, 0.99);
    for (auto& p : pf) p = rng.uniform(0.01, 0.99);
    const double got = d_loss(probs(pr), probs(pf)).scalar();
    CHECK(std::fabs(got - d_loss_oracle(pr, pf)) < 1e-9);
    CHECK(got >= 0.0);
  }
}

TEST_CASE("g_adversarial_loss anchors and monotonicity") {
  auto probs = [](std::vector<double> v) {
    Tensor t({static_cast<int>(v.size()), 1});
    for (std::size_t i = 0; i < v.size(); ++i) t[static_cast<std::int64_t>(i)] = v[i];
    return Var::leaf(t);
  };
  ag::NoGradGuard guard;
  CHECK(g_adversarial_loss(probs({0.5})).scalar() ==
        doctest::Approx(std::log(2.0)).epsilon(1e-12));
  CHECK(g_adversarial_loss(probs({1.0 - kAdvEps})).scalar() < 1e-6);

  Rng rng(11);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> p(3), q(3);
    for (std::size_t i = 0; i < 3; ++i) {
      p[i] = rng.uniform(0.01, 0.90);
      q[i] = p[i] + rng.uniform(0.01, 0.09);  // strictly larger everywhere
    }
    CHECK(g_adversarial_loss(probs(q)).scalar() < g_adversarial_loss(probs(p)).scalar());
  }
}

TEST_CASE("d_loss gradient reaches discriminator parameters") {
  Discriminator d(tiny_config(), 13);
  Var real = Var::leaf(random_batch(2, 32, 32, 17));
  Var fake = Var::leaf(random_batch(2, 32, 32, 19));
  Var loss = d_loss(d.forward(real, true), d.forward(fake, true));
  ag::backward(loss);
  int nonzero_groups = 0;
  for (const auto& name : d.params().param_names()) {
    Var p = d.params().param(name);
    if (p.has_grad() && p.grad().max_abs() > 0.0) ++nonzero_groups;
  }
  CHECK(nonzero_groups == static_cast<int>(d.params().param_names().size()));
}
