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

#ifndef TEXTSR_GENERATOR_HPP_
#define TEXTSR_GENERATOR_HPP_

#include <memory>
#include <string>
#include <vector>

#include "textsr/batch.hpp"
#include "textsr/image.hpp"
#include "textsr/nn.hpp"

namespace textsr {

struct GeneratorConfig {
  int base_channels = 64;
  int residual_blocks = 8;  // 16 reproduces the cited full-scale design
  static constexpr int kUpsampleStages = 2;
  static constexpr int kOutputChannels = 3;

  void validate() const;
};

// 4x super-resolution network: 9x9 head conv (BN+ReLU), B residual blocks
// (conv3-BN-ReLU-conv3-BN + skip), long skip over the blocks, two x2
// transposed-conv stages (kernel 4, stride 2, pad 1, BN+ReLU), 9x9 tail
// conv, output mapped to [0,1] by (tanh+1)/2.
class Generator {
 public:
  Generator(const GeneratorConfig& cfg, std::uint64_t seed);

  struct Forward {
    ag::Var sr;           // (N,3,4H,4W) in [0,1]
    ag::Var penultimate;  // input features of the final convolution
  };
  // training=true uses batch statistics in the norm layers.
  Forward forward(const ag::Var& lr, bool training);

  // Inference on one image (eval mode, no graph). Optionally exports the
  // penultimate feature map (C,4H,4W) for heatmaps.
  TextImage apply(const TextImage& lr, Tensor* penultimate = nullptr);

  nn::ParamSet& params() { return params_; }
  const nn::ParamSet& params() const { return params_; }
  const GeneratorConfig& config() const { return cfg_; }

  void save(const std::string& path) const;
  static std::unique_ptr<Generator> load(const std::string& path);

 private:
  GeneratorConfig cfg_;
  nn::ParamSet params_;
  nn::Conv2d head_;
  nn::BatchNorm2d head_bn_;
  struct Block {
    nn::Conv2d conv1, conv2;
    nn::BatchNorm2d bn1, bn2;
  };
  std::vector<Block> blocks_;
  nn::ConvTranspose2d up1_, up2_;
  nn::BatchNorm2d up1_bn_, up2_bn_;
  nn::Conv2d tail_;
};

// Channel-wise mean of absolute activations, min-max normalized to [0,1]
// (a degenerate range maps to all zeros), bilinearly resized to the target
// size. features is (C,H,W).
TextImage activation_heatmap(const Tensor& features, int target_h, int target_w);

}  // namespace textsr

#endif  // TEXTSR_GENERATOR_HPP_
