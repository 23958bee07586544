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

#ifndef TEXTSR_IMAGE_IO_HPP_
#define TEXTSR_IMAGE_IO_HPP_

#include <string>

#include "textsr/image.hpp"

namespace textsr {

// 8-bit PNG in, [0,1] out (divide by 255). Grayscale files load as one
// channel, everything else as RGB.
TextImage load_png(const std::string& path);

// round(v*255) with clamp. Channel count decides gray vs RGB output.
void save_png(const TextImage& img, const std::string& path);

}  // namespace textsr

#endif  // TEXTSR_IMAGE_IO_HPP_
