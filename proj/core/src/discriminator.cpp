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

#include "textsr/discriminator.hpp"

#include <nlohmann/json.hpp>

#include "textsr/checkpoint.hpp"
#include "textsr/errors.hpp"

namespace textsr {

void DiscriminatorConfig::validate() const {
  if (base_channels < 4) throw ParseError("discriminator: base_channels must be >= 4");
}

Discriminator::Discriminator(const DiscriminatorConfig& cfg, std::uint64_t seed)
    : cfg_(cfg) {
  cfg_.validate();
  Rng rng(seed, /*stream=*/0x444953ULL);
  nn::Init init{&rng};
  const int c = cfg_.base_channels;
  const int widths[8] = {c, c, 2 * c, 2 * c, 4 * c, 4 * c, 8 * c, 8 * c};

  int cin = 3;
  for (int i = 0; i < 8; ++i) {
    const std::string p = "stage" + std::to_string(i);
    Stage s;
    s.conv = nn::Conv2d(params_, p + ".conv", cin, widths[i], 3, (i % 2 == 0) ? 1 : 2, 1,
                        init);
    s.has_bn = i > 0;
    if (s.has_bn) s.bn = nn::BatchNorm2d(params_, p + ".bn", widths[i]);
    stages_.push_back(std::move(s));
    cin = widths[i];
  }
  fc1_ = nn::Linear(params_, "head.fc1", 8 * c, 16 * c, init);
  fc2_ = nn::Linear(params_, "head.fc2", 16 * c, 1, init);
}

ag::Var Discriminator::forward(const ag::Var& img, bool training) {
  using namespace ag;
  const Tensor& v = img.value();
  if (v.rank() != 4 || v.dim(1) != 3)
    throw ShapeMismatchError("discriminator: input must be (N,3,H,W)");
  if (v.dim(2) < 32 || v.dim(3) < 32)
    throw InputTooSmallError("discriminator: input must be at least 32x32, got " +
                             v.shape_str());

  Var h = img;
  for (const Stage& s : stages_) {
    h = s.conv.forward(h);
    if (s.has_bn) h = s.bn.forward(h, training);
    h = leaky_relu(h, 0.2);
  }
  Var pooled = spatial_mean(h);  // (N, 8c)
  Var z = leaky_relu(fc1_.forward(pooled), 0.2);
  return sigmoid(fc2_.forward(z));  // (N,1)
}

void Discriminator::save(const std::string& path) const {
  CheckpointArchive arc;
  arc.kind = "discriminator";
  nlohmann::json h;
  h["base_channels"] = cfg_.base_channels;
  arc.set_header(h);
  params_.collect(arc.tensors, "");
  arc.save(path);
}

std::unique_ptr<Discriminator> Discriminator::load(const std::string& path) {
  CheckpointArchive arc = CheckpointArchive::open(path);
  arc.expect_kind("discriminator");
  DiscriminatorConfig cfg;
  cfg.base_channels = arc.header().at("base_channels").get<int>();
  auto d = std::make_unique<Discriminator>(cfg, /*seed=*/0);
  d->params_.load(arc.tensors, "");
  return d;
}

namespace {
ag::Var clamp01_log(const ag::Var& p) {
  // probabilities are sigmoid outputs already in (0,1); the eps clamp
  // only guards the log at the extremes
  return ag::log_clamped(p, kAdvEps);
}
}  // namespace

ag::Var d_loss(const ag::Var& p_real, const ag::Var& p_fake) {
  using namespace ag;
  if (p_real.value().numel() != p_fake.value().numel())
    throw ShapeMismatchError("d_loss: batch sizes differ");
  Var real_term = mean_all(clamp01_log(p_real));
  Var one_minus_fake = add_scalar(mul_scalar(p_fake, -1.0), 1.0);
  Var fake_term = mean_all(clamp01_log(one_minus_fake));
  return mul_scalar(add(real_term, fake_term), -1.0);
}

ag::Var g_adversarial_loss(const ag::Var& p_fake) {
  return ag::mul_scalar(ag::mean_all(clamp01_log(p_fake)), -1.0);
}

}  // namespace textsr
