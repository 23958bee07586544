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

#include <cmath>

#include <doctest.h>

#include "textsr/errors.hpp"
#include "textsr/image.hpp"
#include "textsr/image_io.hpp"
#include "textsr/metrics.hpp"
#include "textsr/resize.hpp"
#include "textsr/rng.hpp"

using namespace textsr;

namespace {

TextImage random_image(int h, int w, int c, std::uint64_t seed) {
  Rng rng(seed);
  TextImage img(h, w, c);
  for (double& v : img.pixels()) v = rng.uniform();
  return img;
}

// scalar-loop double-precision PSNR oracle, kept independent of psnr()
double psnr_oracle(const TextImage& a, const TextImage& b) {
  double mse = 0.0;
  std::size_t n = 0;
  for (int y = 0; y < a.height(); ++y)
    for (int x = 0; x < a.width(); ++x)
      for (int c = 0; c < a.channels(); ++c) {
        const double d = a.at(y, x, c) - b.at(y, x, c);
        mse += d * d;
        ++n;
      }
  mse /= static_cast<double>(n);
  return 10.0 * std::log10(1.0 / mse);
}

// Catmull-Rom kernel evaluated directly per output pixel; mirrors the
// contract, not the implementation
double catmull_rom(double t) {
  constexpr double a = -0.5;
  t = std::fabs(t);
  if (t <= 1.0) return ((a + 2.0) * t - (a + 3.0)) * t * t + 1.0;
  if (t < 2.0) return ((a * t - 5.0 * a) * t + 8.0 * a) * t - 4.0 * a;
  return 0.0;
}

double bicubic_oracle_at(const TextImage& img, int oy, int ox, int c, int out_h,
                         int out_w) {
  const double sy = static_cast<double>(img.height()) / out_h;
  const double sx = static_cast<double>(img.width()) / out_w;
  const double fy = (oy + 0.5) * sy - 0.5;
  const double fx = (ox + 0.5) * sx - 0.5;
  double acc = 0.0;
  for (int ky = -1; ky <= 2; ++ky)
    for (int kx = -1; kx <= 2; ++kx) {
      const int yy = std::clamp(static_cast<int>(std::floor(fy)) + ky, 0, img.height() - 1);
      const int xx = std::clamp(static_cast<int>(std::floor(fx)) + kx, 0, img.width() - 1);
      acc += catmull_rom(fy - (std::floor(fy) + ky)) * catmull_rom(fx - (std::floor(fx) + kx)) *
             img.at(yy, xx, c);
    }
  return std::clamp(acc, 0.0, 1.0);
}

}  // namespace

TEST_CASE("psnr: identical images give the infinity sentinel") {
  const TextImage a = random_image(16, 20, 3, 1);
  const double v = psnr(a, a);
  CHECK(is_psnr_sentinel(v));
}

TEST_CASE("psnr: constant +0.1 offset gives exactly 20 dB") {
  TextImage a = TextImage::constant(16, 24, 3, 0.3);
  TextImage b = a;
  for (double& v : b.pixels()) v += 0.1;
  CHECK(psnr(a, b) == doctest::Approx(20.0).epsilon(1e-12));
}

TEST_CASE("psnr matches the scalar oracle and is symmetric") {
  for (int i = 0; i < 20; ++i) {
    const TextImage a = random_image(13, 17, 3, 100 + i);
    const TextImage b = random_image(13, 17, 3, 200 + i);
    CHECK(std::fabs(psnr(a, b) - psnr_oracle(a, b)) < 1e-9);
    CHECK(psnr(a, b) == psnr(b, a));
  }
}

TEST_CASE("psnr rejects mismatched shapes") {
  CHECK_THROWS_AS(psnr(random_image(8, 8, 3, 1), random_image(8, 9, 3, 1)),
                  ShapeMismatchError);
}

TEST_CASE("ssim: self similarity is one") {
  const TextImage a = random_image(16, 32, 3, 5);
  CHECK(ssim(a, a) == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("ssim is symmetric") {
  const TextImage a = random_image(16, 24, 3, 6);
  const TextImage b = random_image(16, 24, 3, 7);
  CHECK(ssim(a, b) == doctest::Approx(ssim(b, a)).epsilon(1e-12));
}

TEST_CASE("ssim on constant patches matches the closed form") {
  const TextImage a = TextImage::constant(16, 16, 1, 0.2);
  const TextImage b = TextImage::constant(16, 16, 1, 0.8);
  // mu_a=0.2, mu_b=0.8, all variances zero:
  // (2*0.2*0.8 + C1) * C2 / ((0.04 + 0.64 + C1) * C2)
  const double c1 = 0.01 * 0.01;
  const double expected = (2.0 * 0.2 * 0.8 + c1) / (0.2 * 0.2 + 0.8 * 0.8 + c1);
  CHECK(ssim(a, b) == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("ssim enforces the minimum window size") {
  CHECK_THROWS_AS(ssim(random_image(10, 64, 3, 8), random_image(10, 64, 3, 9)),
                  TooSmallError);
}

TEST_CASE("luminance weights") {
  TextImage gray = TextImage::constant(4, 4, 3, 0.37);
  CHECK(luminance(gray).at(1, 2, 0) == doctest::Approx(0.37).epsilon(1e-12));

  TextImage red(4, 4, 3);
  for (int y = 0; y < 4; ++y)
    for (int x = 0; x < 4; ++x) red.at(y, x, 0) = 1.0;
  CHECK(luminance(red).at(0, 0, 0) == doctest::Approx(0.299).epsilon(1e-12));

  const TextImage img = random_image(6, 7, 3, 10);
  const TextImage lum = luminance(img);
  for (int y = 0; y < 6; ++y)
    for (int x = 0; x < 7; ++x)
      CHECK(lum.at(y, x, 0) == doctest::Approx(0.299 * img.at(y, x, 0) +
                                               0.587 * img.at(y, x, 1) +
                                               0.114 * img.at(y, x, 2))
                                   .epsilon(1e-12));
}

TEST_CASE("bicubic resize: identity and constant invariance") {
  const TextImage a = random_image(12, 20, 3, 11);
  const TextImage same = bicubic_resize(a, 12, 20);
  double max_diff = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i)
    max_diff = std::max(max_diff, std::fabs(a.pixels()[i] - same.pixels()[i]));
  CHECK(max_diff < 1e-6);

  const TextImage c = TextImage::constant(9, 33, 3, 0.5);
  for (auto [h, w] : {std::pair{4, 4}, {17, 3}, {40, 90}}) {
    const TextImage r = bicubic_resize(c, h, w);
    for (double v : r.pixels()) CHECK(v == doctest::Approx(0.5).epsilon(1e-12));
  }
}

TEST_CASE("bicubic resize matches the per-pixel kernel oracle") {
  // 8x8 ramp downsampled to 2x2, plus random images at odd sizes
  TextImage ramp(8, 8, 1);
  for (int y = 0; y < 8; ++y)
    for (int x = 0; x < 8; ++x) ramp.at(y, x, 0) = (y * 8 + x) / 63.0;
  const TextImage down = bicubic_resize(ramp, 2, 2);
  for (int y = 0; y < 2; ++y)
    for (int x = 0; x < 2; ++x)
      CHECK(down.at(y, x, 0) ==
            doctest::Approx(bicubic_oracle_at(ramp, y, x, 0, 2, 2)).epsilon(1e-12));

  const TextImage img = random_image(11, 23, 3, 12);
  const TextImage up = bicubic_resize(img, 17, 40);
  for (int y = 0; y < 17; y += 3)
    for (int x = 0; x < 40; x += 7)
      for (int c = 0; c < 3; ++c)
        CHECK(up.at(y, x, c) ==
              doctest::Approx(bicubic_oracle_at(img, y, x, c, 17, 40)).epsilon(1e-12));
}

TEST_CASE("downsample-then-upsample keeps PSNR finite for varying images") {
  const TextImage hr = random_image(32, 128, 3, 13);
  const TextImage lr = bicubic_resize(hr, 8, 32);
  const TextImage up = bicubic_resize(lr, 32, 128);
  const double v = psnr(up, hr);
  CHECK(!is_psnr_sentinel(v));
  CHECK(v > 0.0);
}

TEST_CASE("psnr accumulator excludes sentinels and counts them") {
  PsnrAccumulator acc;
  acc.add(20.0);
  acc.add(kPsnrInfinity);
  acc.add(30.0);
  CHECK(acc.mean() == doctest::Approx(25.0));
  CHECK(acc.excluded() == 1);
  CHECK(acc.counted() == 2);
}

TEST_CASE("png round trip preserves 8-bit quantized values") {
  const TextImage img = random_image(9, 14, 3, 14);
  const std::string path = "test_roundtrip.png";
  save_png(img, path);
  const TextImage back = load_png(path);
  REQUIRE(back.same_shape(img));
  for (std::size_t i = 0; i < img.size(); ++i) {
    const double q = std::round(img.pixels()[i] * 255.0) / 255.0;
    CHECK(back.pixels()[i] == doctest::Approx(q).epsilon(1e-9));
  }
  std::remove(path.c_str());
}
