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

#ifndef TEXTSR_BATCH_HPP_
#define TEXTSR_BATCH_HPP_

#include <vector>

#include "textsr/image.hpp"
#include "textsr/tensor.hpp"

namespace textsr {

// (N,3,H,W) from same-sized images; grayscale inputs are replicated to
// three channels since every network in the pipeline consumes RGB.
Tensor to_batch(const std::vector<TextImage>& images);
Tensor to_batch(const TextImage& image);

std::vector<TextImage> from_batch(const Tensor& batch, ImageRole role);
TextImage image_from_batch(const Tensor& batch, int index, ImageRole role);

}  // namespace textsr

#endif  // TEXTSR_BATCH_HPP_
