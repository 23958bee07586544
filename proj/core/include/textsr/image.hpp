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

#ifndef TEXTSR_IMAGE_HPP_
#define TEXTSR_IMAGE_HPP_

#include <cstdint>
#include <vector>

namespace textsr {

enum class ImageRole : std::uint8_t { kPlain, kLR, kHR, kSR };

// H x W x C raster with values in [0,1], C in {1,3}. Row-major, channel
// interleaved: pixels[(y*width + x)*channels + c]. Values are clamped at
// construction and after every mutating helper.
class TextImage {
 public:
  TextImage() = default;
  TextImage(int height, int width, int channels, ImageRole role = ImageRole::kPlain);
  TextImage(int height, int width, int channels, std::vector<double> pixels,
            ImageRole role = ImageRole::kPlain);

  static TextImage constant(int height, int width, int channels, double value,
                            ImageRole role = ImageRole::kPlain);

  int height() const { return height_; }
  int width() const { return width_; }
  int channels() const { return channels_; }
  ImageRole role() const { return role_; }
  void set_role(ImageRole r) { role_ = r; }

  double at(int y, int x, int c) const {
    return pixels_[(static_cast<std::size_t>(y) * width_ + x) * channels_ + c];
  }
  double& at(int y, int x, int c) {
    return pixels_[(static_cast<std::size_t>(y) * width_ + x) * channels_ + c];
  }

  const std::vector<double>& pixels() const { return pixels_; }
  std::vector<double>& pixels() { return pixels_; }
  std::size_t size() const { return pixels_.size(); }

  bool same_shape(const TextImage& other) const {
    return height_ == other.height_ && width_ == other.width_ &&
           channels_ == other.channels_;
  }

  // Re-clamps every value into [0,1] after external mutation.
  void clamp();

 private:
  int height_ = 0;
  int width_ = 0;
  int channels_ = 0;
  ImageRole role_ = ImageRole::kPlain;
  std::vector<double> pixels_;
};

// Rec.601 luminance; 3-channel input required, returns 1 channel.
TextImage luminance(const TextImage& img);

// 1-channel helper used before SSIM; passes single-channel images through.
TextImage to_gray(const TextImage& img);

}  // namespace textsr

#endif  // TEXTSR_IMAGE_HPP_
