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

#include "textsr/render.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>

#include <opencv2/core.hpp>
#include <opencv2/imgproc.hpp>

#include "textsr/errors.hpp"
#include "textsr/rng.hpp"

namespace textsr {

namespace {

struct FontSpec {
  int face;
  int thickness;
  bool monospace;
};

FontSpec font_by_name(const std::string& name) {
  if (name == "builtin-sans") return {cv::FONT_HERSHEY_SIMPLEX, 1, false};
  if (name == "builtin-mono") return {cv::FONT_HERSHEY_SIMPLEX, 1, true};
  if (name == "builtin-duplex") return {cv::FONT_HERSHEY_DUPLEX, 1, false};
  throw FontLoadFailureError("unknown font: " + name);
}

std::string charset_subset_chars(const Charset& cs, const std::string& subset) {
  std::string out;
  for (int i = 0; i < Charset::kNumSymbols; ++i) {
    const char c = cs.symbol(i);
    const bool alnum = std::isalnum(static_cast<unsigned char>(c));
    const bool upperish = std::isupper(static_cast<unsigned char>(c)) ||
                          std::isdigit(static_cast<unsigned char>(c));
    if (subset == "full" || (subset == "alnum" && alnum) || (subset == "upper" && upperish))
      out.push_back(c);
  }
  if (out.empty()) throw ParseError("charset subset '" + subset + "' is empty");
  return out;
}

cv::Mat make_background(const RenderConfig& cfg, Rng& rng) {
  const int h = cfg.canvas_h, w = cfg.canvas_w;
  auto mode = cfg.background;
  if (mode == RenderConfig::Background::kMix) {
    const auto pick = rng.uniform_index(3);
    mode = pick == 0 ? RenderConfig::Background::kSolid
           : pick == 1 ? RenderConfig::Background::kGradient
                       : RenderConfig::Background::kCropPool;
  }
  cv::Mat bg(h, w, CV_64FC3);
  switch (mode) {
    case RenderConfig::Background::kSolid: {
      const cv::Vec3d color(rng.uniform(), rng.uniform(), rng.uniform());
      bg.setTo(color);
      break;
    }
    case RenderConfig::Background::kGradient: {
      const cv::Vec3d c0(rng.uniform(), rng.uniform(), rng.uniform());
      const cv::Vec3d c1(rng.uniform(), rng.uniform(), rng.uniform());
      const double theta = rng.uniform(0.0, 2.0 * M_PI);
      const double dx = std::cos(theta), dy = std::sin(theta);
      for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
          double t = ((x - w / 2.0) * dx + (y - h / 2.0) * dy) /
                     std::sqrt(static_cast<double>(w * w + h * h));
          t = std::clamp(t + 0.5, 0.0, 1.0);
          bg.at<cv::Vec3d>(y, x) = c0 * (1.0 - t) + c1 * t;
        }
      break;
    }
    default: {
      // crop-pool stand-in: smooth random blobs from an upsampled
      // low-frequency noise tile
      cv::Mat lowres(4, 16, CV_64FC3);
      for (int y = 0; y < lowres.rows; ++y)
        for (int x = 0; x < lowres.cols; ++x)
          lowres.at<cv::Vec3d>(y, x) =
              cv::Vec3d(rng.uniform(0.1, 0.9), rng.uniform(0.1, 0.9), rng.uniform(0.1, 0.9));
      cv::resize(lowres, bg, bg.size(), 0, 0, cv::INTER_CUBIC);
      break;
    }
  }
  return bg;
}

double mean_luminance(const cv::Mat& bg) {
  const cv::Scalar m = cv::mean(bg);
  return 0.299 * m[0] + 0.587 * m[1] + 0.114 * m[2];
}

}  // namespace

void RenderConfig::validate() const {
  if (fonts.empty()) throw FontLoadFailureError("render config lists no fonts");
  for (const auto& f : fonts) font_by_name(f);
  if (canvas_h < 8 || canvas_w < 8) throw ParseError("render canvas too small");
  if (max_rotation_deg < 0 || blur_sigma_min < 0 || blur_sigma_max < blur_sigma_min ||
      noise_sigma < 0)
    throw ParseError("render augmentation ranges must be non-negative");
  if (min_len < 1 || max_len < min_len) throw ParseError("bad word length range");
}

RenderConfig::Background RenderConfig::background_from_name(const std::string& name) {
  if (name == "solid") return Background::kSolid;
  if (name == "gradient") return Background::kGradient;
  if (name == "crop-pool") return Background::kCropPool;
  if (name == "mix") return Background::kMix;
  throw ParseError("unknown background mode: " + name);
}

RenderedSample render_sample(const RenderConfig& cfg, std::uint64_t index,
                             const Charset& charset) {
  cfg.validate();
  Rng rng(cfg.seed, 0x52454e44ULL + index);
  const int h = cfg.canvas_h, w = cfg.canvas_w;

  // word
  std::string word;
  if (!cfg.word_list.empty()) {
    word = cfg.word_list[static_cast<std::size_t>(rng.uniform_index(cfg.word_list.size()))];
  } else {
    const std::string chars = charset_subset_chars(charset, cfg.charset_subset);
    const int len = cfg.min_len +
                    static_cast<int>(rng.uniform_index(
                        static_cast<std::uint64_t>(cfg.max_len - cfg.min_len + 1)));
    for (int i = 0; i < len; ++i)
      word.push_back(chars[static_cast<std::size_t>(rng.uniform_index(chars.size()))]);
  }
  Transcript transcript = encode_transcript(word, charset);

  const FontSpec font =
      font_by_name(cfg.fonts[static_cast<std::size_t>(rng.uniform_index(cfg.fonts.size()))]);

  // margins keep the ink inside the canvas under the worst-case rotation
  const double rot_rad = cfg.max_rotation_deg * M_PI / 180.0;
  const double radius = 0.5 * std::sqrt(static_cast<double>(w) * w + h * h);
  const int margin = static_cast<int>(std::ceil(radius * rot_rad)) + 1;
  const int avail_w = std::max(8, w - 2 * margin);
  const int avail_h = std::max(6, h - 2 * margin);

  cv::Mat bg = make_background(cfg, rng);
  const double bg_lum = mean_luminance(bg);
  cv::Vec3d fg;
  {
    bool found = false;
    for (int attempt = 0; attempt < 8 && !found; ++attempt) {
      fg = cv::Vec3d(rng.uniform(), rng.uniform(), rng.uniform());
      const double lum = 0.299 * fg[0] + 0.587 * fg[1] + 0.114 * fg[2];
      found = std::fabs(lum - bg_lum) >= 0.35;
    }
    if (!found) fg = bg_lum > 0.5 ? cv::Vec3d(0, 0, 0) : cv::Vec3d(1, 1, 1);
  }

  const double scale_jitter = rng.uniform(0.8, 1.0);
  const double theta_deg = rng.uniform(-cfg.max_rotation_deg, cfg.max_rotation_deg);
  const double blur_sigma = rng.uniform(cfg.blur_sigma_min, cfg.blur_sigma_max);
  const double noise_sigma = rng.uniform(0.0, cfg.noise_sigma);
  const double jx = rng.uniform(), jy = rng.uniform();

  cv::Mat mask;
  double shrink = 1.0;
  for (int attempt = 0; attempt < 4; ++attempt) {
    mask = cv::Mat::zeros(h, w, CV_8UC1);

    int baseline = 0;
    double scale;
    int text_w;
    const cv::Size unit = cv::getTextSize(word, font.face, 1.0, font.thickness, &baseline);
    if (font.monospace) {
      int max_cw = 1;
      for (char c : word) {
        const cv::Size cu =
            cv::getTextSize(std::string(1, c), font.face, 1.0, font.thickness, &baseline);
        max_cw = std::max(max_cw, cu.width);
      }
      const int total = max_cw * static_cast<int>(word.size());
      scale = std::min(static_cast<double>(avail_w) / total,
                       static_cast<double>(avail_h) / (unit.height + baseline));
      scale *= scale_jitter * shrink;
      text_w = static_cast<int>(total * scale);
    } else {
      scale = std::min(static_cast<double>(avail_w) / unit.width,
                       static_cast<double>(avail_h) / (unit.height + baseline));
      scale *= scale_jitter * shrink;
      text_w = static_cast<int>(unit.width * scale);
    }
    const int text_h = static_cast<int>(unit.height * scale);
    const int base_off = static_cast<int>(baseline * scale);

    const int slack_x = std::max(0, w - 2 * margin - text_w);
    const int slack_y = std::max(0, h - 2 * margin - (text_h + base_off));
    const int x0 = margin + static_cast<int>(jx * slack_x);
    const int y_baseline = margin + text_h + static_cast<int>(jy * slack_y);

    if (font.monospace) {
      int max_cw = 1;
      for (char c : word) {
        const cv::Size cu =
            cv::getTextSize(std::string(1, c), font.face, 1.0, font.thickness, &baseline);
        max_cw = std::max(max_cw, cu.width);
      }
      const double advance = max_cw * scale;
      for (std::size_t i = 0; i < word.size(); ++i)
        cv::putText(mask, std::string(1, word[i]),
                    {x0 + static_cast<int>(i * advance), y_baseline}, font.face, scale,
                    cv::Scalar(255), font.thickness, cv::LINE_AA);
    } else {
      cv::putText(mask, word, {x0, y_baseline}, font.face, scale, cv::Scalar(255),
                  font.thickness, cv::LINE_AA);
    }

    if (std::fabs(theta_deg) > 1e-9) {
      const cv::Mat rot = cv::getRotationMatrix2D(cv::Point2f(w / 2.0f, h / 2.0f),
                                                  theta_deg, 1.0);
      cv::warpAffine(mask, mask, rot, mask.size(), cv::INTER_LINEAR,
                     cv::BORDER_CONSTANT, cv::Scalar(0));
    }

    // ink must be strictly inside the canvas border
    bool clipped = false;
    for (int x = 0; x < w && !clipped; ++x)
      clipped = mask.at<uchar>(0, x) != 0 || mask.at<uchar>(h - 1, x) != 0;
    for (int y = 0; y < h && !clipped; ++y)
      clipped = clipped || mask.at<uchar>(y, 0) != 0 || mask.at<uchar>(y, w - 1) != 0;
    if (!clipped) break;
    shrink *= 0.85;
  }

  cv::Mat img(h, w, CV_64FC3);
  double ink_pixels = 0.0;
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const double a = mask.at<uchar>(y, x) / 255.0;
      if (a > 0.0) ink_pixels += 1.0;
      img.at<cv::Vec3d>(y, x) = bg.at<cv::Vec3d>(y, x) * (1.0 - a) + fg * a;
    }

  if (blur_sigma > 1e-9) {
    const int k = std::max(3, 2 * static_cast<int>(std::ceil(2.0 * blur_sigma)) + 1);
    cv::GaussianBlur(img, img, {k, k}, blur_sigma, blur_sigma, cv::BORDER_REPLICATE);
  }

  TextImage out(h, w, 3, ImageRole::kHR);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const cv::Vec3d& v = img.at<cv::Vec3d>(y, x);
      for (int c = 0; c < 3; ++c) {
        double value = v[c];
        if (noise_sigma > 0.0) value += rng.normal(0.0, noise_sigma);
        out.at(y, x, c) = std::clamp(value, 0.0, 1.0);
      }
    }

  RenderedSample sample;
  sample.image = std::move(out);
  sample.transcript = std::move(transcript);
  sample.ink_fraction = ink_pixels / (static_cast<double>(h) * w);
  return sample;
}

}  // namespace textsr
