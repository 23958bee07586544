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

#include "textsr/recognizer.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "textsr/checkpoint.hpp"
#include "textsr/errors.hpp"

namespace textsr {

using ag::Var;

void RecognizerConfig::validate() const {
  if (control_points < 6 || control_points % 2 != 0)
    throw ParseError("recognizer: control_points must be even and >= 6");
  if (rect_w % 4 != 0) throw ParseError("recognizer: rect_w must be divisible by 4");
  if (enc_block_channels.size() < 2)
    throw ParseError("recognizer: need at least two encoder blocks");
  if (t_max < 2) throw ParseError("recognizer: t_max must be >= 2");
  // 0.5 collapses the two fiducial rows onto each other; the TPS builder
  // reports that as a degenerate system rather than a config error
  if (fiducial_margin <= 0.0 || fiducial_margin > 0.5)
    throw ParseError("recognizer: fiducial_margin must be in (0, 0.5]");
}

RecognizerConfig RecognizerConfig::small() {
  RecognizerConfig c;
  c.loc_base_channels = 8;
  c.loc_fc = 64;
  c.enc_stem_channels = 8;
  c.enc_block_channels = {16, 32, 64};
  c.lstm_hidden = 48;
  c.proj_dim = 64;
  c.attn_dim = 64;
  c.dec_hidden = 64;
  c.emb_dim = 32;
  return c;
}

RecognizerConfig RecognizerConfig::tiny() {
  RecognizerConfig c;
  c.control_points = 6;
  c.rect_h = 16;
  c.rect_w = 40;
  c.loc_input_h = 16;
  c.loc_input_w = 32;
  c.loc_base_channels = 4;
  c.loc_fc = 32;
  c.enc_stem_channels = 8;
  c.enc_block_channels = {16, 32};
  c.lstm_hidden = 32;
  c.proj_dim = 32;
  c.attn_dim = 32;
  c.dec_hidden = 32;
  c.emb_dim = 16;
  c.t_max = 16;
  return c;
}

RecognizerConfig RecognizerConfig::from_name(const std::string& name) {
  if (name == "default") return desk_default();
  if (name == "small") return small();
  if (name == "tiny") return tiny();
  throw ParseError("unknown recognizer preset: " + name);
}

namespace {

// Canonical fiducials: K/2 points along the top margin, K/2 along the
// bottom, evenly spaced in x.
std::vector<std::pair<double, double>> canonical_fiducials(int k, double margin) {
  std::vector<std::pair<double, double>> pts;
  pts.reserve(static_cast<std::size_t>(k));
  const int half = k / 2;
  for (int row = 0; row < 2; ++row) {
    const double y = row == 0 ? margin : 1.0 - margin;
    for (int i = 0; i < half; ++i) {
      const double x = margin + i * (1.0 - 2.0 * margin) / (half - 1);
      pts.emplace_back(x, y);
    }
  }
  return pts;
}

inline double tps_kernel(double d2) { return d2 > 0.0 ? d2 * std::log(d2) : 0.0; }

// grid = M x predicted control points, built once: M = A * L^-1[:, :K]
// where A evaluates the kernel at every rectified grid point and L is the
// TPS interpolation system on the canonical fiducials.
Tensor build_tps_matrix(const std::vector<std::pair<double, double>>& pts, int rect_h,
                        int rect_w) {
  const int k = static_cast<int>(pts.size());
  Eigen::MatrixXd l = Eigen::MatrixXd::Zero(k + 3, k + 3);
  for (int i = 0; i < k; ++i) {
    for (int j = 0; j < k; ++j) {
      const double dx = pts[static_cast<std::size_t>(i)].first - pts[static_cast<std::size_t>(j)].first;
      const double dy = pts[static_cast<std::size_t>(i)].second - pts[static_cast<std::size_t>(j)].second;
      l(i, j) = tps_kernel(dx * dx + dy * dy);
    }
    l(i, k) = 1.0;
    l(i, k + 1) = pts[static_cast<std::size_t>(i)].first;
    l(i, k + 2) = pts[static_cast<std::size_t>(i)].second;
    l(k, i) = 1.0;
    l(k + 1, i) = pts[static_cast<std::size_t>(i)].first;
    l(k + 2, i) = pts[static_cast<std::size_t>(i)].second;
  }
  Eigen::FullPivLU<Eigen::MatrixXd> lu(l);
  if (!lu.isInvertible())
    throw DegenerateControlPointsError("TPS kernel system is singular");
  const Eigen::MatrixXd l_inv_k = lu.inverse().leftCols(k);  // (K+3, K)

  const int hw = rect_h * rect_w;
  Eigen::MatrixXd a(hw, k + 3);
  for (int y = 0; y < rect_h; ++y) {
    const double qy = rect_h > 1 ? static_cast<double>(y) / (rect_h - 1) : 0.0;
    for (int x = 0; x < rect_w; ++x) {
      const double qx = rect_w > 1 ? static_cast<double>(x) / (rect_w - 1) : 0.0;
      const int row = y * rect_w + x;
      for (int j = 0; j < k; ++j) {
        const double dx = qx - pts[static_cast<std::size_t>(j)].first;
        const double dy = qy - pts[static_cast<std::size_t>(j)].second;
        a(row, j) = tps_kernel(dx * dx + dy * dy);
      }
      a(row, k) = 1.0;
      a(row, k + 1) = qx;
      a(row, k + 2) = qy;
    }
  }
  const Eigen::MatrixXd m = a * l_inv_k;  // (HW, K)

  Tensor out({hw, k});
  for (int r = 0; r < hw; ++r)
    for (int j = 0; j < k; ++j) out[static_cast<std::int64_t>(r) * k + j] = m(r, j);
  return out;
}

// pred (N,2K) interleaved (x,y) pairs -> sampling grid (N,H,W,2)
Var tps_grid(const Var& pred, const Tensor& m, int rect_h, int rect_w) {
  const int n = pred.value().dim(0);
  const int k = m.dim(1);
  const int hw = m.dim(0);
  Tensor grid({n, rect_h, rect_w, 2});
  for (int i = 0; i < n; ++i) {
    const double* p = pred.value().data() + static_cast<std::int64_t>(i) * 2 * k;
    double* g = grid.data() + static_cast<std::int64_t>(i) * hw * 2;
    for (int r = 0; r < hw; ++r) {
      const double* mrow = m.data() + static_cast<std::int64_t>(r) * k;
      double gx = 0.0, gy = 0.0;
      for (int j = 0; j < k; ++j) {
        gx += mrow[j] * p[2 * j];
        gy += mrow[j] * p[2 * j + 1];
      }
      g[2 * r] = gx;
      g[2 * r + 1] = gy;
    }
  }
  auto m_shared = std::make_shared<Tensor>(m);
  return ag::custom_op(
      std::move(grid), {pred.node()}, [m_shared, n, k, hw](ag::Node& nd) {
        if (!nd.inputs[0]->requires_grad) return;
        Tensor& gp = nd.inputs[0]->ensure_grad();
        for (int i = 0; i < n; ++i) {
          const double* dg = nd.grad.data() + static_cast<std::int64_t>(i) * hw * 2;
          double* out = gp.data() + static_cast<std::int64_t>(i) * 2 * k;
          for (int r = 0; r < hw; ++r) {
            const double* mrow = m_shared->data() + static_cast<std::int64_t>(r) * k;
            for (int j = 0; j < k; ++j) {
              out[2 * j] += mrow[j] * dg[2 * r];
              out[2 * j + 1] += mrow[j] * dg[2 * r + 1];
            }
          }
        }
      });
}

}  // namespace

Recognizer::Recognizer(const RecognizerConfig& cfg, const Charset& charset,
                       std::uint64_t seed)
    : cfg_(cfg), charset_(charset) {
  cfg_.validate();
  Rng rng(seed, /*stream=*/0x524543ULL);
  nn::Init init{&rng};

  // localization network: 6 conv-pool blocks, global mean, 2 dense layers
  {
    const int b = cfg_.loc_base_channels;
    const int widths[6] = {b, 2 * b, 4 * b, 4 * b, 4 * b, 4 * b};
    int h = cfg_.loc_input_h, w = cfg_.loc_input_w;
    int cin = 3;
    for (int i = 0; i < 6; ++i) {
      LocBlock blk;
      const std::string p = "loc.block" + std::to_string(i);
      blk.conv = nn::Conv2d(params_, p + ".conv", cin, widths[i], 3, 1, 1, init);
      blk.bn = nn::BatchNorm2d(params_, p + ".bn", widths[i]);
      blk.pool_h = h > 1 ? 2 : 1;
      blk.pool_w = w > 1 ? 2 : 1;
      h /= blk.pool_h;
      w /= blk.pool_w;
      cin = widths[i];
      loc_blocks_.push_back(std::move(blk));
    }
    loc_fc1_ = nn::Linear(params_, "loc.fc1", cin, cfg_.loc_fc, init);
    loc_fc2_ = nn::Linear(params_, "loc.fc2", cfg_.loc_fc, 2 * cfg_.control_points, init);

    // start at the identity warp: zero weights, fiducial bias
    const auto fiducials = canonical_fiducials(cfg_.control_points, cfg_.fiducial_margin);
    loc_fc2_.weight().mutable_value().zero();
    Tensor& bias = loc_fc2_.bias().mutable_value();
    for (int i = 0; i < cfg_.control_points; ++i) {
      bias[2 * i] = fiducials[static_cast<std::size_t>(i)].first;
      bias[2 * i + 1] = fiducials[static_cast<std::size_t>(i)].second;
    }
    tps_matrix_ = build_tps_matrix(fiducials, cfg_.rect_h, cfg_.rect_w);
  }

  // encoder
  {
    stem_ = nn::Conv2d(params_, "enc.stem.conv", 3, cfg_.enc_stem_channels, 3, 1, 1,
                       init);
    stem_bn_ = nn::BatchNorm2d(params_, "enc.stem.bn", cfg_.enc_stem_channels);
    int cin = cfg_.enc_stem_channels;
    for (std::size_t i = 0; i < cfg_.enc_block_channels.size(); ++i) {
      const int cout = cfg_.enc_block_channels[i];
      const int sw = i < 2 ? 2 : 1;
      const std::string p = "enc.block" + std::to_string(i);
      EncBlock blk;
      blk.down = nn::Conv2d(params_, p + ".down", cin, cout, 3, 3, 2, sw, 1, 1, init);
      blk.down_bn = nn::BatchNorm2d(params_, p + ".down_bn", cout);
      blk.conv1 = nn::Conv2d(params_, p + ".conv1", cout, cout, 3, 1, 1, init);
      blk.bn1 = nn::BatchNorm2d(params_, p + ".bn1", cout);
      blk.conv2 = nn::Conv2d(params_, p + ".conv2", cout, cout, 3, 1, 1, init);
      blk.bn2 = nn::BatchNorm2d(params_, p + ".bn2", cout);
      enc_blocks_.push_back(std::move(blk));
      cin = cout;
    }
  }

  // BLSTM stack
  {
    int din = cfg_.feature_dim();
    for (int layer = 0; layer < 2; ++layer) {
      const std::string p = "seq.layer" + std::to_string(layer);
      BlstmLayer bl;
      bl.fwd = nn::LSTMCell(params_, p + ".fwd", din, cfg_.lstm_hidden, init);
      bl.bwd = nn::LSTMCell(params_, p + ".bwd", din, cfg_.lstm_hidden, init);
      bl.proj = nn::Linear(params_, p + ".proj", 2 * cfg_.lstm_hidden, cfg_.proj_dim,
                           init);
      blstm_.push_back(std::move(bl));
      din = cfg_.proj_dim;
    }
  }

  // attention decoder
  {
    emb_table_ = params_.create("dec.embedding",
                                init.gaussian({Charset::kNumClasses + 1, cfg_.emb_dim}));
    enc_proj_ = nn::Linear(params_, "dec.enc_proj", cfg_.proj_dim, cfg_.attn_dim, init);
    dec_proj_ = nn::Linear(params_, "dec.dec_proj", cfg_.dec_hidden, cfg_.attn_dim, init);
    attn_v_ = params_.create("dec.attn_v", init.gaussian({cfg_.attn_dim}));
    dec_cell_ = nn::LSTMCell(params_, "dec.cell", cfg_.emb_dim + cfg_.proj_dim,
                             cfg_.dec_hidden, init);
    out_proj_ = nn::Linear(params_, "dec.out", cfg_.dec_hidden + cfg_.proj_dim,
                           Charset::kNumClasses, init);
  }
}

Var Recognizer::localize(const Var& imgs, bool training) {
  using namespace ag;
  const int n = imgs.value().dim(0);
  Var grid = Var::leaf(make_resize_grid(n, imgs.value().dim(2), imgs.value().dim(3),
                                        cfg_.loc_input_h, cfg_.loc_input_w));
  Var h = grid_sample(imgs, grid);
  for (const LocBlock& blk : loc_blocks_) {
    h = relu(blk.bn.forward(blk.conv.forward(h), training));
    if (blk.pool_h > 1 || blk.pool_w > 1)
      h = maxpool2d(h, blk.pool_h, blk.pool_w, blk.pool_h, blk.pool_w);
  }
  Var pooled = spatial_mean(h);
  return loc_fc2_.forward(relu(loc_fc1_.forward(pooled)));
}

Var Recognizer::tps_rectify(const Var& imgs, bool training) {
  const Tensor& v = imgs.value();
  if (v.rank() != 4 || v.dim(1) != 3)
    throw ShapeMismatchError("tps_rectify: input must be (N,3,H,W)");
  Var points = localize(imgs, training);
  Var grid = tps_grid(points, tps_matrix_, cfg_.rect_h, cfg_.rect_w);
  return ag::grid_sample(imgs, grid);
}

Var Recognizer::encode_sequence(const Var& rect, bool training) {
  using namespace ag;
  const Tensor& v = rect.value();
  if (v.rank() != 4 || v.dim(2) != cfg_.rect_h || v.dim(3) != cfg_.rect_w)
    throw ShapeMismatchError("encode_sequence: expected rectified input " +
                             std::to_string(cfg_.rect_h) + "x" +
                             std::to_string(cfg_.rect_w) + ", got " + v.shape_str());
  Var h = relu(stem_bn_.forward(stem_.forward(rect), training));
  for (const EncBlock& blk : enc_blocks_) {
    h = relu(blk.down_bn.forward(blk.down.forward(h), training));
    Var y = relu(blk.bn1.forward(blk.conv1.forward(h), training));
    y = blk.bn2.forward(blk.conv2.forward(y), training);
    h = relu(add(h, y));
  }
  h = height_mean(h);
  return feature_map_to_seq(h);  // (N, L, D)
}

Var Recognizer::blstm_stack(const Var& seq) {
  using namespace ag;
  const Tensor& v = seq.value();
  if (v.rank() != 3) throw ShapeMismatchError("blstm_stack: input must be (N,L,D)");
  const int n = v.dim(0), l = v.dim(1);

  Var in = seq;
  for (const BlstmLayer& layer : blstm_) {
    std::vector<Var> fwd_h(static_cast<std::size_t>(l)), bwd_h(static_cast<std::size_t>(l));
    Var h = Var::leaf(Tensor::zeros({n, cfg_.lstm_hidden}));
    Var c = Var::leaf(Tensor::zeros({n, cfg_.lstm_hidden}));
    for (int t = 0; t < l; ++t) {
      auto [nh, nc] = layer.fwd.step(seq_step(in, t), h, c);
      h = nh;
      c = nc;
      fwd_h[static_cast<std::size_t>(t)] = h;
    }
    h = Var::leaf(Tensor::zeros({n, cfg_.lstm_hidden}));
    c = Var::leaf(Tensor::zeros({n, cfg_.lstm_hidden}));
    for (int t = l - 1; t >= 0; --t) {
      auto [nh, nc] = layer.bwd.step(seq_step(in, t), h, c);
      h = nh;
      c = nc;
      bwd_h[static_cast<std::size_t>(t)] = h;
    }
    std::vector<Var> joined(static_cast<std::size_t>(l));
    for (int t = 0; t < l; ++t)
      joined[static_cast<std::size_t>(t)] =
          concat_cols(fwd_h[static_cast<std::size_t>(t)], bwd_h[static_cast<std::size_t>(t)]);
    Var stacked = stack_steps(joined);  // (N,L,2H)
    Var flat = reshape(stacked, {n * l, 2 * cfg_.lstm_hidden});
    in = reshape(layer.proj.forward(flat), {n, l, cfg_.proj_dim});
  }
  return in;
}

DecoderOutput Recognizer::decode(const Var& ctx, const std::vector<Transcript>* transcripts) {
  using namespace ag;
  const Tensor& v = ctx.value();
  if (v.rank() != 3 || v.dim(2) != cfg_.proj_dim)
    throw ShapeMismatchError("attention_decode: context must be (N,L,proj_dim)");
  const int n = v.dim(0), l = v.dim(1);
  const bool teacher = transcripts != nullptr;

  int steps = cfg_.t_max;
  DecoderOutput out;
  out.teacher = teacher;
  out.valid_steps.assign(static_cast<std::size_t>(n), 0);
  if (teacher) {
    if (static_cast<int>(transcripts->size()) != n)
      throw AlignmentMismatchError("attention_decode: transcript count != batch size");
    int max_t = 0;
    for (int i = 0; i < n; ++i) {
      const int t = (*transcripts)[static_cast<std::size_t>(i)].length();
      if (t > cfg_.t_max)
        throw TranscriptTooLongError("transcript length " + std::to_string(t) +
                                     " exceeds t_max " + std::to_string(cfg_.t_max));
      out.valid_steps[static_cast<std::size_t>(i)] = t + 1;
      max_t = std::max(max_t, t);
    }
    steps = max_t + 1;
  }

  Var e_flat = enc_proj_.forward(reshape(ctx, {n * l, cfg_.proj_dim}));
  Var e = reshape(e_flat, {n, l, cfg_.attn_dim});

  Var h = Var::leaf(Tensor::zeros({n, cfg_.dec_hidden}));
  Var c = Var::leaf(Tensor::zeros({n, cfg_.dec_hidden}));
  std::vector<int> prev(static_cast<std::size_t>(n), kGoIndex);
  std::vector<bool> done(static_cast<std::size_t>(n), false);
  out.predicted.assign(static_cast<std::size_t>(n), {});

  for (int s = 0; s < steps; ++s) {
    Var q = dec_proj_.forward(h);
    Var scores = seq_inner(tanh_op(broadcast_add_seq(e, q)), attn_v_);
    Var alpha = softmax_rows(scores);
    Var att = weighted_sum_seq(ctx, alpha);
    Var x = concat_cols(embedding_lookup(emb_table_, prev), att);
    auto [nh, nc] = dec_cell_.step(x, h, c);
    h = nh;
    c = nc;
    Var probs = softmax_rows(out_proj_.forward(concat_cols(h, att)));

    out.step_probs.push_back(probs);
    out.attention.push_back(alpha.value());

    // argmax per sample
    std::vector<int> top(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
      const double* row = probs.value().data() +
                          static_cast<std::int64_t>(i) * Charset::kNumClasses;
      top[static_cast<std::size_t>(i)] = static_cast<int>(
          std::max_element(row, row + Charset::kNumClasses) - row);
    }

    if (teacher) {
      for (int i = 0; i < n; ++i) {
        const Transcript& tr = (*transcripts)[static_cast<std::size_t>(i)];
        if (!done[static_cast<std::size_t>(i)] && top[static_cast<std::size_t>(i)] != Charset::kEosIndex &&
            s < tr.length())
          out.predicted[static_cast<std::size_t>(i)].push_back(top[static_cast<std::size_t>(i)]);
        if (top[static_cast<std::size_t>(i)] == Charset::kEosIndex) done[static_cast<std::size_t>(i)] = true;
        prev[static_cast<std::size_t>(i)] =
            s < tr.length() ? tr.labels[static_cast<std::size_t>(s)] : Charset::kEosIndex;
      }
    } else {
      bool all_done = true;
      for (int i = 0; i < n; ++i) {
        if (!done[static_cast<std::size_t>(i)]) {
          if (top[static_cast<std::size_t>(i)] == Charset::kEosIndex) {
            done[static_cast<std::size_t>(i)] = true;
            out.valid_steps[static_cast<std::size_t>(i)] = s + 1;
          } else {
            out.predicted[static_cast<std::size_t>(i)].push_back(top[static_cast<std::size_t>(i)]);
          }
        }
        prev[static_cast<std::size_t>(i)] =
            done[static_cast<std::size_t>(i)] ? Charset::kEosIndex : top[static_cast<std::size_t>(i)];
        all_done = all_done && done[static_cast<std::size_t>(i)];
      }
      out.steps = s + 1;
      if (all_done) break;
    }
  }
  if (teacher) out.steps = steps;
  for (int i = 0; i < n; ++i)
    if (out.valid_steps[static_cast<std::size_t>(i)] == 0)
      out.valid_steps[static_cast<std::size_t>(i)] = out.steps;
  return out;
}

DecoderOutput Recognizer::attention_decode_teacher(const Var& ctx,
                                                   const std::vector<Transcript>& transcripts) {
  return decode(ctx, &transcripts);
}

DecoderOutput Recognizer::attention_decode_greedy(const Var& ctx) {
  return decode(ctx, nullptr);
}

Var Recognizer::recognition_loss(const DecoderOutput& out,
                                 const std::vector<Transcript>& targets) const {
  using namespace ag;
  if (!out.teacher)
    throw AlignmentMismatchError("recognition_loss: needs a teacher-mode decode");
  const int n = static_cast<int>(targets.size());
  if (out.step_probs.empty() ||
      out.step_probs[0].value().dim(0) != n)
    throw AlignmentMismatchError("recognition_loss: batch size mismatch");
  for (int i = 0; i < n; ++i)
    if (targets[static_cast<std::size_t>(i)].length() + 1 > out.steps)
      throw AlignmentMismatchError("recognition_loss: decode is shorter than target");

  Var total = Var::leaf(Tensor::scalar(0.0));
  for (int s = 0; s < out.steps; ++s) {
    std::vector<int> ids(static_cast<std::size_t>(n));
    Tensor mask({n});
    for (int i = 0; i < n; ++i) {
      const Transcript& tr = targets[static_cast<std::size_t>(i)];
      if (s < tr.length()) {
        ids[static_cast<std::size_t>(i)] = tr.labels[static_cast<std::size_t>(s)];
        mask[i] = 1.0;
      } else if (s == tr.length()) {
        ids[static_cast<std::size_t>(i)] = Charset::kEosIndex;
        mask[i] = 1.0;
      } else {
        ids[static_cast<std::size_t>(i)] = Charset::kEosIndex;
        mask[i] = 0.0;
      }
    }
    Var picked = gather_cols(log_clamped(out.step_probs[static_cast<std::size_t>(s)], kLogEps),
                             std::move(ids));
    total = add(total, sum_all(mul(picked, Var::leaf(std::move(mask)))));
  }
  return mul_scalar(total, -1.0 / n);
}

Var Recognizer::image_loss(const Var& imgs, const std::vector<Transcript>& transcripts,
                           bool training) {
  Var rect = tps_rectify(imgs, training);
  Var seq = encode_sequence(rect, training);
  Var ctx = blstm_stack(seq);
  DecoderOutput out = attention_decode_teacher(ctx, transcripts);
  return recognition_loss(out, transcripts);
}

std::string Recognizer::recognize(const TextImage& img) {
  return recognize_batch({img})[0];
}

std::vector<std::string> Recognizer::recognize_batch(const std::vector<TextImage>& imgs) {
  ag::NoGradGuard guard;
  Var in = Var::leaf(to_batch(imgs));
  Var rect = tps_rectify(in, /*training=*/false);
  Var seq = encode_sequence(rect, /*training=*/false);
  Var ctx = blstm_stack(seq);
  DecoderOutput out = attention_decode_greedy(ctx);
  std::vector<std::string> results;
  results.reserve(imgs.size());
  for (const auto& labels : out.predicted)
    results.push_back(decode_labels(labels, charset_));
  return results;
}

nlohmann::json recognizer_config_to_json(const RecognizerConfig& cfg) {
  nlohmann::json h;
  h["control_points"] = cfg.control_points;
  h["rect_h"] = cfg.rect_h;
  h["rect_w"] = cfg.rect_w;
  h["fiducial_margin"] = cfg.fiducial_margin;
  h["loc_input_h"] = cfg.loc_input_h;
  h["loc_input_w"] = cfg.loc_input_w;
  h["loc_base_channels"] = cfg.loc_base_channels;
  h["loc_fc"] = cfg.loc_fc;
  h["enc_stem_channels"] = cfg.enc_stem_channels;
  h["enc_block_channels"] = cfg.enc_block_channels;
  h["lstm_hidden"] = cfg.lstm_hidden;
  h["proj_dim"] = cfg.proj_dim;
  h["attn_dim"] = cfg.attn_dim;
  h["dec_hidden"] = cfg.dec_hidden;
  h["emb_dim"] = cfg.emb_dim;
  h["t_max"] = cfg.t_max;
  return h;
}

RecognizerConfig recognizer_config_from_json(const nlohmann::json& h) {
  RecognizerConfig cfg;
  cfg.control_points = h.at("control_points").get<int>();
  cfg.rect_h = h.at("rect_h").get<int>();
  cfg.rect_w = h.at("rect_w").get<int>();
  cfg.fiducial_margin = h.at("fiducial_margin").get<double>();
  cfg.loc_input_h = h.at("loc_input_h").get<int>();
  cfg.loc_input_w = h.at("loc_input_w").get<int>();
  cfg.loc_base_channels = h.at("loc_base_channels").get<int>();
  cfg.loc_fc = h.at("loc_fc").get<int>();
  cfg.enc_stem_channels = h.at("enc_stem_channels").get<int>();
  cfg.enc_block_channels = h.at("enc_block_channels").get<std::vector<int>>();
  cfg.lstm_hidden = h.at("lstm_hidden").get<int>();
  cfg.proj_dim = h.at("proj_dim").get<int>();
  cfg.attn_dim = h.at("attn_dim").get<int>();
  cfg.dec_hidden = h.at("dec_hidden").get<int>();
  cfg.emb_dim = h.at("emb_dim").get<int>();
  cfg.t_max = h.at("t_max").get<int>();
  return cfg;
}

void Recognizer::save(const std::string& path) const {
  CheckpointArchive arc;
  arc.kind = "recognizer";
  nlohmann::json h = recognizer_config_to_json(cfg_);
  h["charset"] = charset_.symbols();
  arc.set_header(h);
  params_.collect(arc.tensors, "");
  arc.save(path);
}

std::unique_ptr<Recognizer> Recognizer::load(const std::string& path) {
  CheckpointArchive arc = CheckpointArchive::open(path);
  arc.expect_kind("recognizer");
  const auto h = arc.header();
  const RecognizerConfig cfg = recognizer_config_from_json(h);
  Charset charset(h.at("charset").get<std::string>());
  auto r = std::make_unique<Recognizer>(cfg, charset, /*seed=*/0);
  r->params_.load(arc.tensors, "");
  return r;
}

}  // namespace textsr
