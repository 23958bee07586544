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

#include "textsr/training.hpp"

#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "textsr/checkpoint.hpp"
#include "textsr/errors.hpp"

namespace textsr {

namespace {

std::uint64_t double_bits(double d) {
  std::uint64_t u;
  std::memcpy(&u, &d, sizeof(u));
  return u;
}

double bits_double(std::uint64_t u) {
  double d;
  std::memcpy(&d, &u, sizeof(d));
  return d;
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, sep)) out.push_back(item);
  return out;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

double staged_multiplier(std::int64_t iter, std::int64_t total,
                         const std::array<double, 3>& multipliers,
                         const std::array<double, 3>& fractions) {
  const auto t1 = static_cast<std::int64_t>(fractions[1] * static_cast<double>(total));
  const auto t2 = static_cast<std::int64_t>(fractions[2] * static_cast<double>(total));
  if (iter >= t2) return multipliers[2];
  if (iter >= t1) return multipliers[1];
  return multipliers[0];
}

HrSize parse_hr_size(const std::string& s) {
  const auto parts = split(s, 'x');
  if (parts.size() != 2) throw ParseError("hr_size must look like 32x128 (HxW)");
  HrSize hs;
  hs.h = std::stoi(parts[0]);
  hs.w = std::stoi(parts[1]);
  if (hs.h % 4 != 0 || hs.w % 4 != 0 || hs.h < 8 || hs.w < 8)
    throw ParseError("hr_size dimensions must be multiples of 4 and >= 8");
  return hs;
}

}  // namespace

std::string strategy_to_string(Strategy s) {
  switch (s) {
    case Strategy::kJointFromScratch: return "a";
    case Strategy::kPretrainThenJoint: return "b";
    case Strategy::kPretrainThenFreeze: return "c";
  }
  throw ParseError("bad strategy enum");
}

Strategy strategy_from_string(const std::string& s) {
  if (s == "a" || s == "A") return Strategy::kJointFromScratch;
  if (s == "b" || s == "B") return Strategy::kPretrainThenJoint;
  if (s == "c" || s == "C") return Strategy::kPretrainThenFreeze;
  throw ParseError("unknown strategy '" + s + "' (expected a, b or c)");
}

void TrainingConfig::validate() const {
  if (w_content < 0 || w_adv < 0 || w_tpl < 0)
    throw ParseError("loss weights must be >= 0");
  if (!(lr_fractions[0] < lr_fractions[1] && lr_fractions[1] < lr_fractions[2] &&
        lr_fractions[0] >= 0.0 && lr_fractions[2] < 1.0))
    throw ParseError("lr_fractions must be increasing within [0,1)");
  if (batch_size < 1) throw ParseError("batch_size must be >= 1");
  if (total_iters < 1) throw ParseError("total_iters must be >= 1");
  if (base_lr <= 0 || pretrain_lr <= 0) throw ParseError("learning rates must be > 0");
  if (content_mode == ContentMode::kFeature && feature_extractor.empty())
    throw FeatureExtractorUnavailableError(
        "content_mode=feature requires feature_extractor=<checkpoint>");
  RecognizerConfig::from_name(recognizer_preset);
}

void TrainingConfig::set(const std::string& key, const std::string& value) {
  if (key == "strategy") strategy = strategy_from_string(value);
  else if (key == "w_content") w_content = std::stod(value);
  else if (key == "w_adv") w_adv = std::stod(value);
  else if (key == "w_tpl") w_tpl = std::stod(value);
  else if (key == "content_mode") {
    if (value == "pixel-mse") content_mode = ContentMode::kPixelMse;
    else if (value == "feature") content_mode = ContentMode::kFeature;
    else throw ParseError("content_mode must be pixel-mse or feature");
  } else if (key == "feature_extractor") feature_extractor = value;
  else if (key == "adam_beta1") adam_beta1 = std::stod(value);
  else if (key == "adam_beta2") adam_beta2 = std::stod(value);
  else if (key == "adam_eps") adam_eps = std::stod(value);
  else if (key == "base_lr") base_lr = std::stod(value);
  else if (key == "lr_multipliers") {
    const auto parts = split(value, ',');
    if (parts.size() != 3) throw ParseError("lr_multipliers needs 3 values");
    for (int i = 0; i < 3; ++i) lr_multipliers[static_cast<std::size_t>(i)] = std::stod(parts[static_cast<std::size_t>(i)]);
  } else if (key == "lr_fractions") {
    const auto parts = split(value, ',');
    if (parts.size() != 3) throw ParseError("lr_fractions needs 3 values");
    for (int i = 0; i < 3; ++i) lr_fractions[static_cast<std::size_t>(i)] = std::stod(parts[static_cast<std::size_t>(i)]);
  } else if (key == "batch_size") batch_size = std::stoi(value);
  else if (key == "total_iters") total_iters = std::stoll(value);
  else if (key == "seed") seed = std::stoull(value);
  else if (key == "checkpoint_every") checkpoint_every = std::stoll(value);
  else if (key == "hr_size") hr_size = parse_hr_size(value);
  else if (key == "g_base_channels") g_base_channels = std::stoi(value);
  else if (key == "g_blocks") g_blocks = std::stoi(value);
  else if (key == "d_base_channels") d_base_channels = std::stoi(value);
  else if (key == "recognizer_preset") recognizer_preset = value;
  else if (key == "train_buckets") {
    train_buckets.clear();
    if (!trim(value).empty())
      for (const auto& b : split(value, ',')) train_buckets.push_back(bucket_from_string(trim(b)));
  } else if (key == "pretrain_iters") pretrain_iters = std::stoll(value);
  else if (key == "pretrain_lr") pretrain_lr = std::stod(value);
  else throw ParseError("unknown config key: " + key);
}

std::vector<std::pair<std::string, std::string>> TrainingConfig::items() const {
  auto fmt = [](double v) {
    std::ostringstream os;
    os.precision(17);
    os << v;
    return os.str();
  };
  std::string buckets;
  for (std::size_t i = 0; i < train_buckets.size(); ++i) {
    if (i) buckets += ",";
    buckets += bucket_to_string(train_buckets[i]);
  }
  return {
      {"strategy", strategy_to_string(strategy)},
      {"w_content", fmt(w_content)},
      {"w_adv", fmt(w_adv)},
      {"w_tpl", fmt(w_tpl)},
      {"content_mode", content_mode == ContentMode::kPixelMse ? "pixel-mse" : "feature"},
      {"feature_extractor", feature_extractor},
      {"adam_beta1", fmt(adam_beta1)},
      {"adam_beta2", fmt(adam_beta2)},
      {"adam_eps", fmt(adam_eps)},
      {"base_lr", fmt(base_lr)},
      {"lr_multipliers", fmt(lr_multipliers[0]) + "," + fmt(lr_multipliers[1]) + "," + fmt(lr_multipliers[2])},
      {"lr_fractions", fmt(lr_fractions[0]) + "," + fmt(lr_fractions[1]) + "," + fmt(lr_fractions[2])},
      {"batch_size", std::to_string(batch_size)},
      {"total_iters", std::to_string(total_iters)},
      {"seed", std::to_string(seed)},
      {"checkpoint_every", std::to_string(checkpoint_every)},
      {"hr_size", std::to_string(hr_size.h) + "x" + std::to_string(hr_size.w)},
      {"g_base_channels", std::to_string(g_base_channels)},
      {"g_blocks", std::to_string(g_blocks)},
      {"d_base_channels", std::to_string(d_base_channels)},
      {"recognizer_preset", recognizer_preset},
      {"train_buckets", buckets},
      {"pretrain_iters", std::to_string(pretrain_iters)},
      {"pretrain_lr", fmt(pretrain_lr)},
  };
}

std::uint64_t TrainingConfig::hash() const {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const auto& [k, v] : items()) {
    for (char c : k + "=" + v + "\n") {
      h ^= static_cast<unsigned char>(c);
      h *= 0x100000001b3ULL;
    }
  }
  return h;
}

TrainingConfig TrainingConfig::from_file(const std::string& path) {
  TrainingConfig cfg;
  cfg.apply_file(path);
  return cfg;
}

void TrainingConfig::apply_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file: " + path);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string stripped = trim(line);
    if (stripped.empty() || stripped[0] == '#') continue;
    const auto eq = stripped.find('=');
    if (eq == std::string::npos)
      throw ParseError(path + ":" + std::to_string(lineno) + ": expected key = value");
    set(trim(stripped.substr(0, eq)), trim(stripped.substr(eq + 1)));
  }
}

double lr_at(std::int64_t iter, const TrainingConfig& cfg) {
  if (iter < 0 || iter >= cfg.total_iters)
    throw ParseError("lr_at: iteration out of range");
  return cfg.base_lr *
         staged_multiplier(iter, cfg.total_iters, cfg.lr_multipliers, cfg.lr_fractions);
}

GateConfig::Mode GateConfig::mode_from_string(const std::string& s) {
  if (s == "or") return Mode::kOr;
  if (s == "and") return Mode::kAnd;
  if (s == "off") return Mode::kOff;
  throw ParseError("gate mode must be or, and or off");
}

bool sr_gate(const TextImage& img, const GateConfig& cfg) {
  switch (cfg.mode) {
    case GateConfig::Mode::kOff: return true;
    case GateConfig::Mode::kOr: return img.width() < cfg.max_w || img.height() < cfg.max_h;
    case GateConfig::Mode::kAnd: return img.width() < cfg.max_w && img.height() < cfg.max_h;
  }
  return false;
}

// ---------------------------------------------------------------------------
// feature extractor

std::unique_ptr<FeatureExtractor> FeatureExtractor::load(const std::string& path) {
  CheckpointArchive arc = CheckpointArchive::open(path);
  arc.expect_kind("feature_extractor");
  auto fx = std::make_unique<FeatureExtractor>();
  const auto header = arc.header();
  int idx = 0;
  for (const auto& lj : header.at("layers")) {
    Layer layer;
    layer.type = lj.at("type").get<std::string>();
    if (layer.type == "conv") {
      const std::string name = "layer" + std::to_string(idx);
      layer.w = ag::Var::leaf(arc.tensors.at(name + ".w"), /*requires_grad=*/false);
      layer.b = ag::Var::leaf(arc.tensors.at(name + ".b"), /*requires_grad=*/false);
      layer.stride = lj.at("stride").get<int>();
      layer.pad = lj.at("pad").get<int>();
    } else if (layer.type == "maxpool") {
      layer.k = lj.at("k").get<int>();
      layer.stride = lj.at("s").get<int>();
    } else if (layer.type != "relu") {
      throw CheckpointMismatchError("unknown feature extractor layer: " + layer.type);
    }
    fx->layers_.push_back(std::move(layer));
    ++idx;
  }
  return fx;
}

ag::Var FeatureExtractor::forward(const ag::Var& x) const {
  ag::Var h = x;
  for (const Layer& layer : layers_) {
    if (layer.type == "conv")
      h = ag::add_channel_bias(
          ag::conv2d(h, layer.w, layer.stride, layer.stride, layer.pad, layer.pad),
          layer.b);
    else if (layer.type == "relu")
      h = ag::relu(h);
    else
      h = ag::maxpool2d(h, layer.k, layer.k, layer.stride, layer.stride);
  }
  return h;
}

void FeatureExtractor::write_random(const std::string& path, int channels,
                                    std::uint64_t seed) {
  Rng rng(seed, 0x464545ULL);
  nn::Init init{&rng, 0.1};
  CheckpointArchive arc;
  arc.kind = "feature_extractor";
  nlohmann::json layers = nlohmann::json::array();
  layers.push_back({{"type", "conv"}, {"stride", 1}, {"pad", 1}});
  layers.push_back({{"type", "relu"}});
  layers.push_back({{"type", "conv"}, {"stride", 2}, {"pad", 1}});
  layers.push_back({{"type", "relu"}});
  nlohmann::json h;
  h["layers"] = layers;
  arc.set_header(h);
  arc.tensors["layer0.w"] = init.gaussian({channels, 3, 3, 3});
  arc.tensors["layer0.b"] = Tensor::zeros({channels});
  arc.tensors["layer2.w"] = init.gaussian({channels, channels, 3, 3});
  arc.tensors["layer2.b"] = Tensor::zeros({channels});
  arc.save(path);
}

ag::Var content_loss(const ag::Var& sr, const ag::Var& hr, ContentMode mode,
                     const FeatureExtractor* extractor) {
  using namespace ag;
  if (!sr.value().same_shape(hr.value()))
    throw ShapeMismatchError("content_loss: shapes differ");
  if (mode == ContentMode::kFeature) {
    if (!extractor)
      throw FeatureExtractorUnavailableError(
          "feature content loss requested without an extractor asset");
    Var fs = extractor->forward(sr);
    Var fh = extractor->forward(hr);
    Var diff = sub(fs, fh);
    return mean_all(mul(diff, diff));
  }
  Var diff = sub(sr, hr);
  return mean_all(mul(diff, diff));
}

// ---------------------------------------------------------------------------
// train state

std::unique_ptr<TrainState> TrainState::fresh(const TrainingConfig& cfg,
                                              const Charset& charset,
                                              const std::string& recognizer_path) {
  cfg.validate();
  auto st = std::make_unique<TrainState>();
  st->cfg = cfg;
  GeneratorConfig gcfg;
  gcfg.base_channels = cfg.g_base_channels;
  gcfg.residual_blocks = cfg.g_blocks;
  st->g = std::make_unique<Generator>(gcfg, cfg.seed);
  DiscriminatorConfig dcfg;
  dcfg.base_channels = cfg.d_base_channels;
  st->d = std::make_unique<Discriminator>(dcfg, cfg.seed + 1);
  if (recognizer_path.empty()) {
    st->r = std::make_unique<Recognizer>(RecognizerConfig::from_name(cfg.recognizer_preset),
                                         charset, cfg.seed + 2);
  } else {
    st->r = Recognizer::load(recognizer_path);
  }
  if (cfg.strategy == Strategy::kPretrainThenFreeze) st->r->params().set_trainable(false);
  st->adam_g = nn::Adam(cfg.adam_beta1, cfg.adam_beta2, cfg.adam_eps);
  st->adam_d = nn::Adam(cfg.adam_beta1, cfg.adam_beta2, cfg.adam_eps);
  st->adam_r = nn::Adam(cfg.adam_beta1, cfg.adam_beta2, cfg.adam_eps);
  st->rng = Rng(cfg.seed, 0x545241ULL);
  if (cfg.content_mode == ContentMode::kFeature)
    st->extractor = FeatureExtractor::load(cfg.feature_extractor);
  return st;
}

void TrainState::save(const std::string& path) const {
  CheckpointArchive arc;
  arc.kind = "train_state";
  nlohmann::json h;
  h["iter"] = iter;
  h["config_hash"] = cfg.hash();
  nlohmann::json kv;
  for (const auto& [k, v] : cfg.items()) kv[k] = v;
  h["config"] = kv;
  h["charset"] = r->charset().symbols();
  h["recognizer"] = recognizer_config_to_json(r->config());
  arc.set_header(h);

  g->params().collect(arc.tensors, "g.");
  d->params().collect(arc.tensors, "d.");
  r->params().collect(arc.tensors, "r.");
  adam_g.collect(arc.tensors, "adam_g.");
  adam_d.collect(arc.tensors, "adam_d.");
  adam_r.collect(arc.tensors, "adam_r.");

  const auto rs = rng.state();
  Tensor rng_t({4});
  for (int i = 0; i < 4; ++i) rng_t[i] = bits_double(rs[static_cast<std::size_t>(i)]);
  arc.tensors["rng.state"] = rng_t;
  Tensor stream_t({2});
  stream_t[0] = bits_double(stream.epoch);
  stream_t[1] = bits_double(stream.cursor);
  arc.tensors["stream.state"] = stream_t;
  arc.save(path);
}

std::unique_ptr<TrainState> TrainState::load(const std::string& path) {
  CheckpointArchive arc = CheckpointArchive::open(path);
  arc.expect_kind("train_state");
  const auto h = arc.header();

  TrainingConfig cfg;
  for (const auto& [k, v] : h.at("config").items()) cfg.set(k, v.get<std::string>());
  cfg.validate();

  auto st = std::make_unique<TrainState>();
  st->cfg = cfg;
  st->iter = h.at("iter").get<std::int64_t>();

  GeneratorConfig gcfg;
  gcfg.base_channels = cfg.g_base_channels;
  gcfg.residual_blocks = cfg.g_blocks;
  st->g = std::make_unique<Generator>(gcfg, 0);
  DiscriminatorConfig dcfg;
  dcfg.base_channels = cfg.d_base_channels;
  st->d = std::make_unique<Discriminator>(dcfg, 0);
  const Charset charset(h.at("charset").get<std::string>());
  st->r = std::make_unique<Recognizer>(
      recognizer_config_from_json(h.at("recognizer")), charset, 0);

  st->g->params().load(arc.tensors, "g.");
  st->d->params().load(arc.tensors, "d.");
  st->r->params().load(arc.tensors, "r.");
  if (cfg.strategy == Strategy::kPretrainThenFreeze) st->r->params().set_trainable(false);

  st->adam_g = nn::Adam(cfg.adam_beta1, cfg.adam_beta2, cfg.adam_eps);
  st->adam_d = nn::Adam(cfg.adam_beta1, cfg.adam_beta2, cfg.adam_eps);
  st->adam_r = nn::Adam(cfg.adam_beta1, cfg.adam_beta2, cfg.adam_eps);
  st->adam_g.load(arc.tensors, "adam_g.");
  st->adam_d.load(arc.tensors, "adam_d.");
  st->adam_r.load(arc.tensors, "adam_r.");

  const Tensor& rng_t = arc.tensors.at("rng.state");
  std::array<std::uint64_t, 4> rs;
  for (int i = 0; i < 4; ++i) rs[static_cast<std::size_t>(i)] = double_bits(rng_t[i]);
  st->rng.set_state(rs);
  const Tensor& stream_t = arc.tensors.at("stream.state");
  st->stream.epoch = double_bits(stream_t[0]);
  st->stream.cursor = double_bits(stream_t[1]);

  if (cfg.content_mode == ContentMode::kFeature)
    st->extractor = FeatureExtractor::load(cfg.feature_extractor);
  return st;
}

// ---------------------------------------------------------------------------
// losses and steps

namespace {

void check_finite(const ag::Var& v, const char* component) {
  if (!v.value().all_finite()) throw NonFiniteLossError(component);
}

// Bilinearly aligns sr to hr's spatial size inside the graph (identity when
// shapes already match).
ag::Var align_to(const ag::Var& sr, int h, int w) {
  const Tensor& v = sr.value();
  if (v.dim(2) == h && v.dim(3) == w) return sr;
  ag::Var grid =
      ag::Var::leaf(ag::make_resize_grid(v.dim(0), v.dim(2), v.dim(3), h, w));
  return ag::grid_sample(sr, grid);
}

double eval_detached_scalar(const std::function<ag::Var()>& fn) {
  ag::NoGradGuard guard;
  return fn().scalar();
}

ag::Var compose_generator_loss(TrainState& state, const ag::Var& sr_raw,
                               const ag::Var& sr_full, const ag::Var& hr,
                               const std::vector<Transcript>& transcripts,
                               LossBreakdown* bd) {
  using namespace ag;
  const TrainingConfig& cfg = state.cfg;
  const bool r_training = cfg.strategy != Strategy::kPretrainThenFreeze;

  Var total = Var::leaf(Tensor::scalar(0.0));

  if (cfg.w_content > 0) {
    Var c = content_loss(sr_full, hr, cfg.content_mode, state.extractor.get());
    check_finite(c, "content");
    bd->g_content = c.scalar();
    total = add(total, mul_scalar(c, cfg.w_content));
  } else {
    bd->g_content = eval_detached_scalar([&] {
      return content_loss(sr_full.detach(), hr, cfg.content_mode, state.extractor.get());
    });
  }

  if (cfg.w_adv > 0) {
    Var p_fake = state.d->forward(sr_full, /*training=*/true);
    Var a = g_adversarial_loss(p_fake);
    check_finite(a, "adversarial");
    bd->g_adv = a.scalar();
    total = add(total, mul_scalar(a, cfg.w_adv));
  } else {
    bd->g_adv = eval_detached_scalar([&] {
      return g_adversarial_loss(state.d->forward(sr_full.detach(), /*training=*/false));
    });
  }

  if (cfg.w_tpl > 0) {
    Var t = state.r->image_loss(sr_raw, transcripts, r_training);
    check_finite(t, "tpl");
    bd->g_tpl = t.scalar();
    total = add(total, mul_scalar(t, cfg.w_tpl));
  } else {
    bd->g_tpl = eval_detached_scalar([&] {
      return state.r->image_loss(sr_raw.detach(), transcripts, /*training=*/false);
    });
  }

  check_finite(total, "total");
  bd->g_total = total.scalar();
  return total;
}

}  // namespace

ag::Var generator_total_loss(TrainState& state, const ag::Var& lr, const ag::Var& hr,
                             const std::vector<Transcript>& transcripts,
                             LossBreakdown* breakdown) {
  LossBreakdown local;
  LossBreakdown* bd = breakdown ? breakdown : &local;
  auto fwd = state.g->forward(lr, /*training=*/true);
  ag::Var sr_full = align_to(fwd.sr, hr.value().dim(2), hr.value().dim(3));
  return compose_generator_loss(state, fwd.sr, sr_full, hr, transcripts, bd);
}

LossBreakdown train_step(TrainState& state, const std::vector<LRHRPair>& batch) {
  using namespace ag;
  if (batch.empty()) throw EmptyManifestError("train_step: empty batch");

  std::vector<TextImage> lrs, hrs;
  std::vector<Transcript> transcripts;
  lrs.reserve(batch.size());
  hrs.reserve(batch.size());
  transcripts.reserve(batch.size());
  for (const auto& p : batch) {
    lrs.push_back(p.lr);
    hrs.push_back(p.hr);
    transcripts.push_back(p.transcript);
  }
  Var lr_var = Var::leaf(to_batch(lrs));
  Var hr_var = Var::leaf(to_batch(hrs));

  LossBreakdown bd;
  bd.lr = lr_at(state.iter, state.cfg);

  // one generator forward feeds both phases
  auto fwd = state.g->forward(lr_var, /*training=*/true);
  Var sr_full = align_to(fwd.sr, hr_var.value().dim(2), hr_var.value().dim(3));

  // discriminator phase: detached generator outputs
  state.d->params().zero_grads();
  Var p_real = state.d->forward(hr_var, /*training=*/true);
  Var p_fake = state.d->forward(sr_full.detach(), /*training=*/true);
  Var dl = d_loss(p_real, p_fake);
  check_finite(dl, "d_loss");
  bd.d_loss = dl.scalar();
  ag::backward(dl);
  state.adam_d.step(state.d->params(), bd.lr);

  // generator phase: gradients may reach theta_D here but are cleared, not
  // applied; the recognizer steps only under joint strategies
  state.g->params().zero_grads();
  state.d->params().zero_grads();
  state.r->params().zero_grads();
  Var total = compose_generator_loss(state, fwd.sr, sr_full, hr_var, transcripts, &bd);
  ag::backward(total);
  state.adam_g.step(state.g->params(), bd.lr);
  if (state.cfg.strategy != Strategy::kPretrainThenFreeze)
    state.adam_r.step(state.r->params(), bd.lr);

  ++state.iter;
  return bd;
}

std::unique_ptr<Recognizer> pretrain_recognizer(
    const DatasetManifest& manifest, const TrainingConfig& cfg, const Charset& charset,
    const std::function<void(std::int64_t, double)>& progress) {
  if (manifest.empty()) throw EmptyManifestError("pretrain_recognizer: empty manifest");
  cfg.validate();

  auto r = std::make_unique<Recognizer>(RecognizerConfig::from_name(cfg.recognizer_preset),
                                        charset, cfg.seed + 2);
  nn::Adam adam(cfg.adam_beta1, cfg.adam_beta2, cfg.adam_eps);
  BatchStream stream(static_cast<int>(manifest.size()), cfg.batch_size, cfg.seed);
  ImageCache cache;

  for (std::int64_t it = 0; it < cfg.pretrain_iters; ++it) {
    const auto idxs = stream.next();
    std::vector<TextImage> hrs;
    std::vector<Transcript> ts;
    hrs.reserve(idxs.size());
    ts.reserve(idxs.size());
    for (int idx : idxs) {
      const ManifestEntry& e = manifest.entries[static_cast<std::size_t>(idx)];
      hrs.push_back(cache.get(manifest.resolve(e)));
      ts.push_back(encode_transcript(e.text, charset));
    }
    ag::Var hr_var = ag::Var::leaf(to_batch(hrs));
    ag::Var loss = r->image_loss(hr_var, ts, /*training=*/true);
    check_finite(loss, "recognition");
    r->params().zero_grads();
    ag::backward(loss);
    const double lr = cfg.pretrain_lr * staged_multiplier(it, cfg.pretrain_iters,
                                                          cfg.lr_multipliers,
                                                          cfg.lr_fractions);
    adam.step(r->params(), lr);
    if (progress) progress(it, loss.scalar());
  }
  return r;
}

void run_training(TrainState& state, const DatasetManifest& manifest,
                  const std::string& log_path, const std::string& checkpoint_path,
                  const std::function<void(std::int64_t, const LossBreakdown&)>& progress) {
  if (manifest.empty()) throw EmptyManifestError("run_training: empty manifest");

  BatchStream stream(static_cast<int>(manifest.size()), state.cfg.batch_size,
                     state.cfg.seed);
  stream.restore(state.stream);
  ImageCache cache;
  const Charset& charset = state.r->charset();

  std::ofstream log;
  if (!log_path.empty()) {
    const bool fresh_file = !std::filesystem::exists(log_path) || state.iter == 0;
    log.open(log_path, fresh_file ? std::ios::trunc : std::ios::app);
    if (!log) throw IoError("cannot open training log: " + log_path);
    if (fresh_file) log << "iter,lr,d_loss,g_content,g_adv,g_tpl,g_total\n";
  }

  while (state.iter < state.cfg.total_iters) {
    const auto idxs = stream.next();
    state.stream = stream.state();

    std::optional<Bucket> bucket;
    if (!state.cfg.train_buckets.empty())
      bucket = state.cfg.train_buckets[static_cast<std::size_t>(
          state.rng.uniform_index(state.cfg.train_buckets.size()))];

    std::vector<LRHRPair> batch;
    batch.reserve(idxs.size());
    for (int idx : idxs) {
      const ManifestEntry& e = manifest.entries[static_cast<std::size_t>(idx)];
      LRHRPair pair = build_pair(cache.get(manifest.resolve(e)),
                                 encode_transcript(e.text, charset), state.cfg.hr_size);
      if (bucket) pair = bucket_resize(pair, *bucket);
      batch.push_back(std::move(pair));
    }

    const std::int64_t it = state.iter;
    const LossBreakdown bd = train_step(state, batch);

    if (log.is_open()) {
      log.precision(10);
      log << it << ',' << bd.lr << ',' << bd.d_loss << ',' << bd.g_content << ','
          << bd.g_adv << ',' << bd.g_tpl << ',' << bd.g_total << '\n';
      log.flush();
    }
    if (progress) progress(it, bd);
    if (!checkpoint_path.empty() && state.cfg.checkpoint_every > 0 &&
        state.iter % state.cfg.checkpoint_every == 0)
      state.save(checkpoint_path);
  }
  if (!checkpoint_path.empty()) state.save(checkpoint_path);
}

}  // namespace textsr
