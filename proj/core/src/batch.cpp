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

#include "textsr/batch.hpp"

#include "textsr/errors.hpp"

namespace textsr {

Tensor to_batch(const std::vector<TextImage>& images) {
  if (images.empty()) throw ShapeMismatchError("to_batch: empty image list");
  const int h = images[0].height(), w = images[0].width();
  const int n = static_cast<int>(images.size());
  Tensor out({n, 3, h, w});
  for (int i = 0; i < n; ++i) {
    const TextImage& img = images[static_cast<std::size_t>(i)];
    if (img.height() != h || img.width() != w)
      throw ShapeMismatchError("to_batch: images differ in size");
    const bool gray = img.channels() == 1;
    for (int c = 0; c < 3; ++c)
      for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
          out[((static_cast<std::int64_t>(i) * 3 + c) * h + y) * w + x] =
              img.at(y, x, gray ? 0 : c);
  }
  return out;
}

Tensor to_batch(const TextImage& image) {
  return to_batch(std::vector<TextImage>{image});
}

TextImage image_from_batch(const Tensor& batch, int index, ImageRole role) {
  if (batch.rank() != 4 || index < 0 || index >= batch.dim(0))
    throw ShapeMismatchError("image_from_batch: bad index or rank");
  const int c = batch.dim(1), h = batch.dim(2), w = batch.dim(3);
  if (c != 1 && c != 3) throw ShapeMismatchError("image_from_batch: channels must be 1 or 3");
  TextImage img(h, w, c, role);
  for (int ch = 0; ch < c; ++ch)
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x)
        img.at(y, x, ch) = std::min(
            1.0, std::max(0.0, batch[((static_cast<std::int64_t>(index) * c + ch) * h + y) * w + x]));
  return img;
}

std::vector<TextImage> from_batch(const Tensor& batch, ImageRole role) {
  std::vector<TextImage> out;
  out.reserve(static_cast<std::size_t>(batch.dim(0)));
  for (int i = 0; i < batch.dim(0); ++i) out.push_back(image_from_batch(batch, i, role));
  return out;
}

}  // namespace textsr
