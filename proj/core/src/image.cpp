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

#include "textsr/image.hpp"

#include <algorithm>

#include "textsr/errors.hpp"

namespace textsr {

namespace {
void check_dims(int height, int width, int channels) {
  if (height < 1 || width < 1)
    throw ShapeMismatchError("image dimensions must be >= 1");
  if (channels != 1 && channels != 3)
    throw ShapeMismatchError("image must have 1 or 3 channels");
}
}  // namespace

TextImage::TextImage(int height, int width, int channels, ImageRole role)
    : height_(height), width_(width), channels_(channels), role_(role) {
  check_dims(height, width, channels);
  pixels_.assign(static_cast<std::size_t>(height) * width * channels, 0.0);
}

TextImage::TextImage(int height, int width, int channels, std::vector<double> pixels,
                     ImageRole role)
    : height_(height), width_(width), channels_(channels), role_(role),
      pixels_(std::move(pixels)) {
  check_dims(height, width, channels);
  if (pixels_.size() != static_cast<std::size_t>(height) * width * channels)
    throw ShapeMismatchError("pixel buffer size does not match dimensions");
  clamp();
}

TextImage TextImage::constant(int height, int width, int channels, double value,
                              ImageRole role) {
  TextImage img(height, width, channels, role);
  std::fill(img.pixels_.begin(), img.pixels_.end(), std::clamp(value, 0.0, 1.0));
  return img;
}

void TextImage::clamp() {
  for (double& v : pixels_) v = std::clamp(v, 0.0, 1.0);
}

TextImage luminance(const TextImage& img) {
  if (img.channels() != 3)
    throw ShapeMismatchError("luminance expects a 3-channel image");
  TextImage out(img.height(), img.width(), 1, img.role());
  for (int y = 0; y < img.height(); ++y)
    for (int x = 0; x < img.width(); ++x)
      out.at(y, x, 0) =
          0.299 * img.at(y, x, 0) + 0.587 * img.at(y, x, 1) + 0.114 * img.at(y, x, 2);
  return out;
}

TextImage to_gray(const TextImage& img) {
  return img.channels() == 1 ? img : luminance(img);
}

}  // namespace textsr
