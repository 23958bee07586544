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

#ifndef TEXTSR_RECOGNIZER_HPP_
#define TEXTSR_RECOGNIZER_HPP_

#include <memory>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "textsr/batch.hpp"
#include "textsr/charset.hpp"
#include "textsr/image.hpp"
#include "textsr/nn.hpp"

namespace textsr {

struct RecognizerConfig {
  // rectification: K control points split between the top and bottom text
  // boundary, canonical fiducials inset by the margin
  int control_points = 20;
  int rect_h = 32;
  int rect_w = 100;
  double fiducial_margin = 0.05;
  int loc_input_h = 32;
  int loc_input_w = 64;
  int loc_base_channels = 16;
  int loc_fc = 128;

  // encoder: stem conv then residual blocks; the first two blocks stride
  // (2,2), later blocks (2,1), so the sequence length is rect_w/4
  int enc_stem_channels = 32;
  std::vector<int> enc_block_channels = {64, 128, 256, 512, 512};

  int lstm_hidden = 256;  // per direction
  int proj_dim = 256;     // projection after each BLSTM layer
  int attn_dim = 256;
  int dec_hidden = 256;
  int emb_dim = 64;
  int t_max = 32;

  int seq_len() const { return rect_w / 4; }
  int feature_dim() const { return enc_block_channels.back(); }

  void validate() const;

  static RecognizerConfig desk_default() { return RecognizerConfig{}; }
  // scaled-down presets for commodity-CPU training and gradient checks
  static RecognizerConfig small();
  static RecognizerConfig tiny();
  static RecognizerConfig from_name(const std::string& name);
};

nlohmann::json recognizer_config_to_json(const RecognizerConfig& cfg);
RecognizerConfig recognizer_config_from_json(const nlohmann::json& j);

// One decode pass. Teacher mode emits exactly len(transcript)+1 step
// distributions per sample (characters then the EOS target step); greedy
// mode argmaxes each step and stops at EOS or t_max.
struct DecoderOutput {
  bool teacher = false;
  int steps = 0;                            // padded step count of the batch
  std::vector<ag::Var> step_probs;          // steps x (N,95), rows sum to 1
  std::vector<std::vector<int>> predicted;  // per-sample argmax labels (no EOS)
  std::vector<Tensor> attention;            // steps x (N,L)
  std::vector<int> valid_steps;             // per-sample T+1 (teacher mode)
};

// ASTER-style recognizer: thin-plate-spline rectification, residual CNN
// encoder split along the row axis, two BLSTM layers with linear
// projections, additive-attention LSTM decoder over 94 symbols + EOS.
class Recognizer {
 public:
  Recognizer(const RecognizerConfig& cfg, const Charset& charset, std::uint64_t seed);

  // Rectifies a batch of any spatial size to (N,3,rect_h,rect_w).
  // Differentiable through both the sampling grid and the image.
  ag::Var tps_rectify(const ag::Var& imgs, bool training);

  // (N,3,rect_h,rect_w) -> feature sequence (N,L,D); the CNN collapses
  // height to one and width to L = rect_w/4.
  ag::Var encode_sequence(const ag::Var& rect, bool training);

  // (N,L,D) -> contextual sequence (N,L,proj_dim)
  ag::Var blstm_stack(const ag::Var& seq);

  DecoderOutput attention_decode_teacher(const ag::Var& ctx,
                                         const std::vector<Transcript>& transcripts);
  DecoderOutput attention_decode_greedy(const ag::Var& ctx);

  // -sum_{t=1..T+1} log p(y_t) with the EOS target at step T+1, averaged
  // over the batch; logs are eps-clamped.
  ag::Var recognition_loss(const DecoderOutput& out,
                           const std::vector<Transcript>& targets) const;

  // Full differentiable pipeline to the teacher-forced loss; the TPL path
  // backpropagates through this into the generator.
  ag::Var image_loss(const ag::Var& imgs, const std::vector<Transcript>& transcripts,
                     bool training);

  std::string recognize(const TextImage& img);
  std::vector<std::string> recognize_batch(const std::vector<TextImage>& imgs);

  nn::ParamSet& params() { return params_; }
  const nn::ParamSet& params() const { return params_; }
  const RecognizerConfig& config() const { return cfg_; }
  const Charset& charset() const { return charset_; }

  void save(const std::string& path) const;
  static std::unique_ptr<Recognizer> load(const std::string& path);

  static constexpr double kLogEps = 1e-12;

 private:
  ag::Var localize(const ag::Var& imgs, bool training);  // (N,2K) control points
  DecoderOutput decode(const ag::Var& ctx, const std::vector<Transcript>* transcripts);

  RecognizerConfig cfg_;
  Charset charset_;
  nn::ParamSet params_;

  // localization
  struct LocBlock {
    nn::Conv2d conv;
    nn::BatchNorm2d bn;
    int pool_h = 2, pool_w = 2;
  };
  std::vector<LocBlock> loc_blocks_;
  nn::Linear loc_fc1_, loc_fc2_;
  Tensor tps_matrix_;  // (rect_h*rect_w, K): grid = M x predicted points

  // encoder
  nn::Conv2d stem_;
  nn::BatchNorm2d stem_bn_;
  struct EncBlock {
    nn::Conv2d down, conv1, conv2;
    nn::BatchNorm2d down_bn, bn1, bn2;
  };
  std::vector<EncBlock> enc_blocks_;

  // BLSTM stack
  struct BlstmLayer {
    nn::LSTMCell fwd, bwd;
    nn::Linear proj;
  };
  std::vector<BlstmLayer> blstm_;

  // attention decoder
  ag::Var emb_table_;  // (96, emb), index 95 = GO
  nn::Linear enc_proj_, dec_proj_, out_proj_;
  ag::Var attn_v_;
  nn::LSTMCell dec_cell_;

  static constexpr int kGoIndex = 95;
};

}  // namespace textsr

#endif  // TEXTSR_RECOGNIZER_HPP_
