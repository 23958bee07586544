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

#ifndef TEXTSR_RENDER_HPP_
#define TEXTSR_RENDER_HPP_

#include <cstdint>
#include <string>
#include <vector>

#include "textsr/charset.hpp"
#include "textsr/image.hpp"

namespace textsr {

// Word-image synthesis config. Rendering is a pure function of
// (seed, sample index); the built-in fonts ("builtin-sans" proportional,
// "builtin-mono" fixed-advance, "builtin-duplex" heavier strokes) are
// vector stroke fonts compiled into the rasterizer, so generation needs no
// external assets.
struct RenderConfig {
  std::vector<std::string> fonts = {"builtin-sans", "builtin-mono"};
  int canvas_h = 32;
  int canvas_w = 128;

  double max_rotation_deg = 5.0;
  double blur_sigma_min = 0.0;
  double blur_sigma_max = 1.5;
  double noise_sigma = 0.02;  // upper bound of the per-sample noise std

  enum class Background { kSolid, kGradient, kCropPool, kMix };
  Background background = Background::kSolid;

  // Random words over a charset subset, or lines from a word list.
  int min_len = 3;
  int max_len = 10;
  std::string charset_subset = "full";  // full | alnum | upper
  std::vector<std::string> word_list;

  std::uint64_t seed = 0;

  void validate() const;
  static Background background_from_name(const std::string& name);
};

struct RenderedSample {
  TextImage image;  // canvas_h x canvas_w x 3, role HR
  Transcript transcript;
  double ink_fraction = 0.0;  // fraction of canvas covered by glyph strokes
};

// Deterministic given (cfg.seed, index); the transcript matches the
// rendered glyphs exactly and the text lies fully inside the canvas.
RenderedSample render_sample(const RenderConfig& cfg, std::uint64_t index,
                             const Charset& charset);

}  // namespace textsr

#endif  // TEXTSR_RENDER_HPP_
