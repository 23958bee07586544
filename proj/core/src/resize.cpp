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

#include "textsr/resize.hpp"

#include <algorithm>
#include <cmath>

#include "textsr/errors.hpp"

namespace textsr {

namespace {

// Catmull-Rom weight, a = -0.5.
inline double cubic_weight(double t) {
  constexpr double a = -0.5;
  t = std::fabs(t);
  if (t <= 1.0) return ((a + 2.0) * t - (a + 3.0)) * t * t + 1.0;
  if (t < 2.0) return ((a * t - 5.0 * a) * t + 8.0 * a) * t - 4.0 * a;
  return 0.0;
}

inline int clamp_coord(int v, int n) { return std::clamp(v, 0, n - 1); }

}  // namespace

TextImage bicubic_resize(const TextImage& img, int out_h, int out_w) {
  if (out_h < 1 || out_w < 1)
    throw ShapeMismatchError("bicubic_resize: output dimensions must be >= 1");
  const int ih = img.height(), iw = img.width(), ch = img.channels();
  TextImage out(out_h, out_w, ch, img.role());

  const double sy = static_cast<double>(ih) / out_h;
  const double sx = static_cast<double>(iw) / out_w;

  std::vector<double> wx(4), wy(4);
  for (int oy = 0; oy < out_h; ++oy) {
    const double fy = (oy + 0.5) * sy - 0.5;
    const int y0 = static_cast<int>(std::floor(fy)) - 1;
    for (int k = 0; k < 4; ++k) wy[k] = cubic_weight(fy - (y0 + k));
    for (int ox = 0; ox < out_w; ++ox) {
      const double fx = (ox + 0.5) * sx - 0.5;
      const int x0 = static_cast<int>(std::floor(fx)) - 1;
      for (int k = 0; k < 4; ++k) wx[k] = cubic_weight(fx - (x0 + k));
      for (int c = 0; c < ch; ++c) {
        double acc = 0.0;
        for (int ky = 0; ky < 4; ++ky) {
          const int yy = clamp_coord(y0 + ky, ih);
          double row = 0.0;
          for (int kx = 0; kx < 4; ++kx)
            row += wx[kx] * img.at(yy, clamp_coord(x0 + kx, iw), c);
          acc += wy[ky] * row;
        }
        out.at(oy, ox, c) = std::clamp(acc, 0.0, 1.0);
      }
    }
  }
  return out;
}

TextImage bilinear_resize(const TextImage& img, int out_h, int out_w) {
  if (out_h < 1 || out_w < 1)
    throw ShapeMismatchError("bilinear_resize: output dimensions must be >= 1");
  const int ih = img.height(), iw = img.width(), ch = img.channels();
  TextImage out(out_h, out_w, ch, img.role());

  const double sy = out_h > 1 ? static_cast<double>(ih - 1) / (out_h - 1) : 0.0;
  const double sx = out_w > 1 ? static_cast<double>(iw - 1) / (out_w - 1) : 0.0;

  for (int oy = 0; oy < out_h; ++oy) {
    const double fy = oy * sy;
    const int y0 = std::min(static_cast<int>(std::floor(fy)), ih - 1);
    const int y1 = std::min(y0 + 1, ih - 1);
    const double ty = fy - y0;
    for (int ox = 0; ox < out_w; ++ox) {
      const double fx = ox * sx;
      const int x0 = std::min(static_cast<int>(std::floor(fx)), iw - 1);
      const int x1 = std::min(x0 + 1, iw - 1);
      const double tx = fx - x0;
      for (int c = 0; c < ch; ++c) {
        const double top = (1.0 - tx) * img.at(y0, x0, c) + tx * img.at(y0, x1, c);
        const double bot = (1.0 - tx) * img.at(y1, x0, c) + tx * img.at(y1, x1, c);
        out.at(oy, ox, c) = std::clamp((1.0 - ty) * top + ty * bot, 0.0, 1.0);
      }
    }
  }
  return out;
}

}  // namespace textsr
