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

#ifndef TEXTSR_TRAINING_HPP_
#define TEXTSR_TRAINING_HPP_

#include <array>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "textsr/dataset.hpp"
#include "textsr/discriminator.hpp"
#include "textsr/generator.hpp"
#include "textsr/recognizer.hpp"

namespace textsr {

// The three supervision regimes; C (train the recognizer first, then train
// the generator with the recognizer frozen) is the reported default.
enum class Strategy { kJointFromScratch, kPretrainThenJoint, kPretrainThenFreeze };

enum class ContentMode { kPixelMse, kFeature };

struct TrainingConfig {
  Strategy strategy = Strategy::kPretrainThenFreeze;
  double w_content = 1.0;
  double w_adv = 1.0;
  double w_tpl = 1.0;
  ContentMode content_mode = ContentMode::kPixelMse;
  std::string feature_extractor;  // required in feature mode

  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;

  // schedule multiplier over a configurable base rate; the decay points
  // sit at fixed fractions of the run (0.6 and 0.8 of total_iters)
  double base_lr = 1e-4;
  std::array<double, 3> lr_multipliers = {1.0, 0.1, 0.01};
  std::array<double, 3> lr_fractions = {0.0, 0.6, 0.8};

  int batch_size = 16;
  std::int64_t total_iters = 2000;
  std::uint64_t seed = 0;
  std::int64_t checkpoint_every = 500;
  HrSize hr_size{};

  int g_base_channels = 64;
  int g_blocks = 8;
  int d_base_channels = 64;
  std::string recognizer_preset = "default";

  // empty: plain 4x pairs at hr/4. Non-empty: one bucket is drawn per
  // iteration and the whole batch uses that LR size (the SR output is
  // bilinearly aligned to HR before the content and adversarial terms).
  std::vector<Bucket> train_buckets;

  std::int64_t pretrain_iters = 3000;
  double pretrain_lr = 1e-3;

  void validate() const;

  // flat `key = value` round trip; unknown keys raise ParseError
  void set(const std::string& key, const std::string& value);
  std::vector<std::pair<std::string, std::string>> items() const;
  std::uint64_t hash() const;

  static TrainingConfig from_file(const std::string& path);
  void apply_file(const std::string& path);
};

std::string strategy_to_string(Strategy s);
Strategy strategy_from_string(const std::string& s);

// base_lr x staged multiplier; thresholds at floor(fraction * total).
double lr_at(std::int64_t iter, const TrainingConfig& cfg);

// Inference-time gate deciding whether an image goes through the
// generator. Default OR predicate: width < max_w OR height < max_h.
struct GateConfig {
  enum class Mode { kOr, kAnd, kOff };
  Mode mode = Mode::kOr;
  int max_w = 128;
  int max_h = 32;
  static Mode mode_from_string(const std::string& s);
};

bool sr_gate(const TextImage& img, const GateConfig& cfg);

// Frozen convolutional feature stack supplied as a checkpoint asset; used
// by the optional feature-space content loss.
class FeatureExtractor {
 public:
  static std::unique_ptr<FeatureExtractor> load(const std::string& path);
  ag::Var forward(const ag::Var& x) const;

  // Builds a random frozen extractor and writes it; test/asset helper.
  static void write_random(const std::string& path, int channels, std::uint64_t seed);

 private:
  struct Layer {
    std::string type;  // conv | relu | maxpool
    ag::Var w, b;
    int stride = 1, pad = 0, k = 2;
  };
  std::vector<Layer> layers_;
};

// Pixel-MSE (default) or feature-space MSE against a frozen extractor.
// Feature mode without an extractor raises FeatureExtractorUnavailable.
ag::Var content_loss(const ag::Var& sr, const ag::Var& hr, ContentMode mode,
                     const FeatureExtractor* extractor = nullptr);

struct LossBreakdown {
  double d_loss = 0.0;
  double g_content = 0.0;
  double g_adv = 0.0;
  double g_tpl = 0.0;
  double g_total = 0.0;
  double lr = 0.0;
};

// Mutable training state: models, optimizer moments, RNG, data-stream
// cursor. Restoring a checkpoint and resuming reproduces the exact loss
// trajectory.
struct TrainState {
  TrainingConfig cfg;
  std::int64_t iter = 0;
  std::unique_ptr<Generator> g;
  std::unique_ptr<Discriminator> d;
  std::unique_ptr<Recognizer> r;
  nn::Adam adam_g, adam_d, adam_r;
  Rng rng;
  BatchStream::State stream;
  std::unique_ptr<FeatureExtractor> extractor;

  // Fresh state; recognizer comes from `recognizer_path` for strategies
  // B/C (frozen under C) and is randomly initialized under strategy A.
  static std::unique_ptr<TrainState> fresh(const TrainingConfig& cfg,
                                           const Charset& charset,
                                           const std::string& recognizer_path = "");

  void save(const std::string& path) const;
  static std::unique_ptr<TrainState> load(const std::string& path);
};

// One alternating optimization step: a discriminator Adam step on d_loss
// with detached generator outputs, then a generator Adam step on the
// weighted total; the recognizer steps only under strategies A/B.
LossBreakdown train_step(TrainState& state, const std::vector<LRHRPair>& batch);

// Weighted total with per-component breakdown. Zero-weight components are
// still evaluated (outside the graph) so the breakdown stays complete.
ag::Var generator_total_loss(TrainState& state, const ag::Var& lr, const ag::Var& hr,
                             const std::vector<Transcript>& transcripts,
                             LossBreakdown* breakdown);

// Recognition-loss-only training on HR images; returns the recognizer.
std::unique_ptr<Recognizer> pretrain_recognizer(
    const DatasetManifest& manifest, const TrainingConfig& cfg, const Charset& charset,
    const std::function<void(std::int64_t, double)>& progress = nullptr);

// Full TextSR loop driving train_step over manifest batches with CSV
// logging (`iter,lr,d_loss,g_content,g_adv,g_tpl,g_total`) and periodic
// atomic checkpoints.
void run_training(TrainState& state, const DatasetManifest& manifest,
                  const std::string& log_path, const std::string& checkpoint_path,
                  const std::function<void(std::int64_t, const LossBreakdown&)>&
                      progress = nullptr);

}  // namespace textsr

#endif  // TEXTSR_TRAINING_HPP_
