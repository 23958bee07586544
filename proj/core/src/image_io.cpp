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

#include "textsr/image_io.hpp"

#include <cmath>

#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

#include "textsr/errors.hpp"

namespace textsr {

TextImage load_png(const std::string& path) {
  cv::Mat m = cv::imread(path, cv::IMREAD_UNCHANGED);
  if (m.empty()) throw IoError("cannot read image: " + path);
  if (m.channels() == 4) cv::cvtColor(m, m, cv::COLOR_BGRA2BGR);
  if (m.depth() != CV_8U) m.convertTo(m, CV_8U);

  const int ch = m.channels() == 1 ? 1 : 3;
  TextImage img(m.rows, m.cols, ch);
  for (int y = 0; y < m.rows; ++y) {
    const uchar* row = m.ptr<uchar>(y);
    for (int x = 0; x < m.cols; ++x) {
      if (ch == 1) {
        img.at(y, x, 0) = row[x] / 255.0;
      } else {
        // OpenCV stores BGR
        img.at(y, x, 0) = row[x * 3 + 2] / 255.0;
        img.at(y, x, 1) = row[x * 3 + 1] / 255.0;
        img.at(y, x, 2) = row[x * 3 + 0] / 255.0;
      }
    }
  }
  return img;
}

void save_png(const TextImage& img, const std::string& path) {
  const int ch = img.channels();
  cv::Mat m(img.height(), img.width(), ch == 1 ? CV_8UC1 : CV_8UC3);
  auto quantize = [](double v) {
    const int q = static_cast<int>(std::lround(v * 255.0));
    return static_cast<uchar>(std::clamp(q, 0, 255));
  };
  for (int y = 0; y < img.height(); ++y) {
    uchar* row = m.ptr<uchar>(y);
    for (int x = 0; x < img.width(); ++x) {
      if (ch == 1) {
        row[x] = quantize(img.at(y, x, 0));
      } else {
        row[x * 3 + 0] = quantize(img.at(y, x, 2));
        row[x * 3 + 1] = quantize(img.at(y, x, 1));
        row[x * 3 + 2] = quantize(img.at(y, x, 0));
      }
    }
  }
  if (!cv::imwrite(path, m)) throw IoError("cannot write image: " + path);
}

}  // namespace textsr
