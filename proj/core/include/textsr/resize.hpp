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

#ifndef TEXTSR_RESIZE_HPP_
#define TEXTSR_RESIZE_HPP_

#include "textsr/image.hpp"

namespace textsr {

// Catmull-Rom bicubic (a = -0.5), half-pixel-centered coordinate mapping,
// edge-clamped sampling, output clamped to [0,1]. The BICUBIC baseline and
// all LR pair construction go through this kernel so results are
// reproducible bit-for-bit.
TextImage bicubic_resize(const TextImage& img, int out_h, int out_w);

// Bilinear resize with align-corners mapping (x_src = x_dst*(W-1)/(Wo-1)).
// Matches the sampling convention of the differentiable grid sampler; used
// for heatmaps and identity-warp checks, not for LR synthesis.
TextImage bilinear_resize(const TextImage& img, int out_h, int out_w);

}  // namespace textsr

#endif  // TEXTSR_RESIZE_HPP_
