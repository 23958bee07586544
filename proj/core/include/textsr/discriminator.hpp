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

#ifndef TEXTSR_DISCRIMINATOR_HPP_
#define TEXTSR_DISCRIMINATOR_HPP_

#include <memory>
#include <string>

#include "textsr/nn.hpp"

namespace textsr {

struct DiscriminatorConfig {
  int base_channels = 64;
  void validate() const;
};

// Real/generated classifier: eight 3x3 convs with channels
// (c,c,2c,2c,4c,4c,8c,8c) and strides alternating 1,2, LeakyReLU 0.2, batch
// norm on all but the first, global average pooling, dense-16c, LeakyReLU,
// dense-1, sigmoid. The adaptive pooling lets the same head score any
// input at least 32x32.
class Discriminator {
 public:
  Discriminator(const DiscriminatorConfig& cfg, std::uint64_t seed);

  // One probability per image, strictly inside (0,1).
  ag::Var forward(const ag::Var& img, bool training);

  nn::ParamSet& params() { return params_; }
  const nn::ParamSet& params() const { return params_; }
  const DiscriminatorConfig& config() const { return cfg_; }

  void save(const std::string& path) const;
  static std::unique_ptr<Discriminator> load(const std::string& path);

 private:
  DiscriminatorConfig cfg_;
  nn::ParamSet params_;
  struct Stage {
    nn::Conv2d conv;
    nn::BatchNorm2d bn;
    bool has_bn = true;
  };
  std::vector<Stage> stages_;
  nn::Linear fc1_, fc2_;
};

// -mean(log p_real) - mean(log(1 - p_fake)), probabilities clamped to
// [eps, 1-eps] with eps = 1e-7. Always >= 0; equals 2 ln 2 at (0.5, 0.5).
ag::Var d_loss(const ag::Var& p_real, const ag::Var& p_fake);

// Non-saturating generator objective -mean(log p_fake), same clamping.
ag::Var g_adversarial_loss(const ag::Var& p_fake);

inline constexpr double kAdvEps = 1e-7;

}  // namespace textsr

#endif  // TEXTSR_DISCRIMINATOR_HPP_
