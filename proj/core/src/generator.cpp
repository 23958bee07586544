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

#include "textsr/generator.hpp"

#include <cmath>

#include <nlohmann/json.hpp>

#include "textsr/checkpoint.hpp"
#include "textsr/errors.hpp"
#include "textsr/resize.hpp"

namespace textsr {

void GeneratorConfig::validate() const {
  if (residual_blocks < 1) throw ParseError("generator: residual_blocks must be >= 1");
  if (base_channels < 8) throw ParseError("generator: base_channels must be >= 8");
}

Generator::Generator(const GeneratorConfig& cfg, std::uint64_t seed) : cfg_(cfg) {
  cfg_.validate();
  Rng rng(seed, /*stream=*/0x47454eULL);
  nn::Init init{&rng};
  const int c = cfg_.base_channels;

  head_ = nn::Conv2d(params_, "head.conv", 3, c, 9, 1, 4, init);
  head_bn_ = nn::BatchNorm2d(params_, "head.bn", c);
  blocks_.reserve(static_cast<std::size_t>(cfg_.residual_blocks));
  for (int b = 0; b < cfg_.residual_blocks; ++b) {
    const std::string p = "block" + std::to_string(b);
    Block blk;
    blk.conv1 = nn::Conv2d(params_, p + ".conv1", c, c, 3, 1, 1, init);
    blk.bn1 = nn::BatchNorm2d(params_, p + ".bn1", c);
    blk.conv2 = nn::Conv2d(params_, p + ".conv2", c, c, 3, 1, 1, init);
    blk.bn2 = nn::BatchNorm2d(params_, p + ".bn2", c);
    blocks_.push_back(std::move(blk));
  }
  up1_ = nn::ConvTranspose2d(params_, "up1.deconv", c, c, 4, 2, 1, init);
  up1_bn_ = nn::BatchNorm2d(params_, "up1.bn", c);
  up2_ = nn::ConvTranspose2d(params_, "up2.deconv", c, c, 4, 2, 1, init);
  up2_bn_ = nn::BatchNorm2d(params_, "up2.bn", c);
  tail_ = nn::Conv2d(params_, "tail.conv", c, GeneratorConfig::kOutputChannels, 9, 1, 4,
                     init);
}

Generator::Forward Generator::forward(const ag::Var& lr, bool training) {
  using namespace ag;
  const Tensor& v = lr.value();
  if (v.rank() != 4 || v.dim(1) != 3)
    throw ShapeMismatchError("generator: input must be (N,3,H,W)");
  if (v.dim(2) < 4 || v.dim(3) < 4)
    throw InputTooSmallError("generator: input must be at least 4x4, got " +
                             v.shape_str());

  Var h = relu(head_bn_.forward(head_.forward(lr), training));
  Var skip = h;
  for (const Block& blk : blocks_) {
    Var y = relu(blk.bn1.forward(blk.conv1.forward(h), training));
    y = blk.bn2.forward(blk.conv2.forward(y), training);
    h = add(h, y);
  }
  h = add(h, skip);
  h = relu(up1_bn_.forward(up1_.forward(h), training));
  h = relu(up2_bn_.forward(up2_.forward(h), training));
  Var penultimate = h;
  Var sr = mul_scalar(add_scalar(tanh_op(tail_.forward(h)), 1.0), 0.5);
  return {sr, penultimate};
}

TextImage Generator::apply(const TextImage& lr, Tensor* penultimate) {
  ag::NoGradGuard guard;
  ag::Var in = ag::Var::leaf(to_batch(lr));
  Forward out = forward(in, /*training=*/false);
  if (penultimate) {
    const Tensor& p = out.penultimate.value();
    *penultimate = p.reshaped({p.dim(1), p.dim(2), p.dim(3)});
  }
  return image_from_batch(out.sr.value(), 0, ImageRole::kSR);
}

void Generator::save(const std::string& path) const {
  CheckpointArchive arc;
  arc.kind = "generator";
  nlohmann::json h;
  h["base_channels"] = cfg_.base_channels;
  h["residual_blocks"] = cfg_.residual_blocks;
  h["upsample_stages"] = GeneratorConfig::kUpsampleStages;
  arc.set_header(h);
  params_.collect(arc.tensors, "");
  arc.save(path);
}

std::unique_ptr<Generator> Generator::load(const std::string& path) {
  CheckpointArchive arc = CheckpointArchive::open(path);
  arc.expect_kind("generator");
  const auto h = arc.header();
  GeneratorConfig cfg;
  cfg.base_channels = h.at("base_channels").get<int>();
  cfg.residual_blocks = h.at("residual_blocks").get<int>();
  auto g = std::make_unique<Generator>(cfg, /*seed=*/0);
  g->params_.load(arc.tensors, "");
  return g;
}

TextImage activation_heatmap(const Tensor& features, int target_h, int target_w) {
  if (features.rank() != 3) throw ShapeMismatchError("activation_heatmap: expected (C,H,W)");
  const int c = features.dim(0), h = features.dim(1), w = features.dim(2);
  TextImage heat(h, w, 1);
  const std::int64_t area = static_cast<std::int64_t>(h) * w;
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (std::int64_t p = 0; p < area; ++p) {
    double s = 0.0;
    for (int j = 0; j < c; ++j) s += std::fabs(features[j * area + p]);
    s /= c;
    heat.pixels()[static_cast<std::size_t>(p)] = s;
    lo = std::min(lo, s);
    hi = std::max(hi, s);
  }
  const double range = hi - lo;
  if (range < 1e-12) {
    for (double& v : heat.pixels()) v = 0.0;
  } else {
    for (double& v : heat.pixels()) v = (v - lo) / range;
  }
  heat.clamp();
  return bilinear_resize(heat, target_h, target_w);
}

}  // namespace textsr
