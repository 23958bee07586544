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

#ifndef TEXTSR_METRICS_HPP_
#define TEXTSR_METRICS_HPP_

#include <limits>

#include "textsr/image.hpp"

namespace textsr {

// Identical pairs have zero MSE; PSNR is reported as this sentinel and
// excluded from dataset averages (the excluded count is surfaced).
inline constexpr double kPsnrInfinity = std::numeric_limits<double>::infinity();

inline bool is_psnr_sentinel(double v) { return v == kPsnrInfinity; }

// 10*log10(1/MSE) with MSE over all channels jointly, peak 1.0.
double psnr(const TextImage& a, const TextImage& b);

// Mean local SSIM on luminance: 11x11 Gaussian window sigma 1.5, K1=0.01,
// K2=0.03, dynamic range 1.0, valid-window coverage (hence the min
// dimension >= 11 precondition).
double ssim(const TextImage& a, const TextImage& b);

// Accumulates PSNR values, counting and excluding infinity sentinels.
class PsnrAccumulator {
 public:
  void add(double value) {
    if (is_psnr_sentinel(value)) {
      ++excluded_;
    } else {
      sum_ += value;
      ++count_;
    }
  }
  // NaN when every pair was identical.
  double mean() const {
    return count_ > 0 ? sum_ / count_ : std::numeric_limits<double>::quiet_NaN();
  }
  int excluded() const { return excluded_; }
  int counted() const { return count_; }

 private:
  double sum_ = 0.0;
  int count_ = 0;
  int excluded_ = 0;
};

}  // namespace textsr

#endif  // TEXTSR_METRICS_HPP_
