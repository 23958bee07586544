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

#include "textsr/metrics.hpp"

#include <cmath>
#include <vector>

#include "textsr/errors.hpp"

namespace textsr {

double psnr(const TextImage& a, const TextImage& b) {
  if (!a.same_shape(b)) throw ShapeMismatchError("psnr: images differ in shape");
  double mse = 0.0;
  const auto& pa = a.pixels();
  const auto& pb = b.pixels();
  for (std::size_t i = 0; i < pa.size(); ++i) {
    const double d = pa[i] - pb[i];
    mse += d * d;
  }
  mse /= static_cast<double>(pa.size());
  if (mse == 0.0) return kPsnrInfinity;
  return 10.0 * std::log10(1.0 / mse);
}

namespace {

constexpr int kWindow = 11;
constexpr double kSigma = 1.5;
constexpr double kK1 = 0.01;
constexpr double kK2 = 0.03;

std::vector<double> gaussian_window() {
  std::vector<double> w(kWindow * kWindow);
  const int half = kWindow / 2;
  double sum = 0.0;
  for (int y = 0; y < kWindow; ++y)
    for (int x = 0; x < kWindow; ++x) {
      const double dy = y - half, dx = x - half;
      const double v = std::exp(-(dx * dx + dy * dy) / (2.0 * kSigma * kSigma));
      w[y * kWindow + x] = v;
      sum += v;
    }
  for (double& v : w) v /= sum;
  return w;
}

}  // namespace

double ssim(const TextImage& a, const TextImage& b) {
  if (a.height() != b.height() || a.width() != b.width())
    throw ShapeMismatchError("ssim: images differ in shape");
  if (std::min(a.height(), a.width()) < kWindow)
    throw TooSmallError("ssim: min dimension must be >= 11");

  const TextImage ga = to_gray(a);
  const TextImage gb = to_gray(b);

  static const std::vector<double> win = gaussian_window();
  const double c1 = kK1 * kK1;  // L = 1
  const double c2 = kK2 * kK2;

  const int oh = a.height() - kWindow + 1;
  const int ow = a.width() - kWindow + 1;
  double total = 0.0;
  for (int oy = 0; oy < oh; ++oy) {
    for (int ox = 0; ox < ow; ++ox) {
      double mu_a = 0, mu_b = 0, aa = 0, bb = 0, ab = 0;
      for (int wy = 0; wy < kWindow; ++wy) {
        for (int wx = 0; wx < kWindow; ++wx) {
          const double w = win[wy * kWindow + wx];
          const double va = ga.at(oy + wy, ox + wx, 0);
          const double vb = gb.at(oy + wy, ox + wx, 0);
          mu_a += w * va;
          mu_b += w * vb;
          aa += w * va * va;
          bb += w * vb * vb;
          ab += w * va * vb;
        }
      }
      const double var_a = aa - mu_a * mu_a;
      const double var_b = bb - mu_b * mu_b;
      const double cov = ab - mu_a * mu_b;
      total += ((2.0 * mu_a * mu_b + c1) * (2.0 * cov + c2)) /
               ((mu_a * mu_a + mu_b * mu_b + c1) * (var_a + var_b + c2));
    }
  }
  return total / (static_cast<double>(oh) * ow);
}

}  // namespace textsr
