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
#include <filesystem>
#include <map>
#include <set>

#include <doctest.h>

#include "textsr/dataset.hpp"
#include "textsr/errors.hpp"
#include "textsr/image_io.hpp"
#include "textsr/render.hpp"
#include "textsr/resize.hpp"

using namespace textsr;
namespace fs = std::filesystem;

namespace {

RenderConfig plain_config() {
  RenderConfig cfg;
  cfg.background = RenderConfig::Background::kSolid;
  cfg.max_rotation_deg = 0.0;
  cfg.blur_sigma_max = 0.0;
  cfg.noise_sigma = 0.0;
  return cfg;
}

}  // namespace

TEST_CASE("render_sample is bit-identical for the same seed and index") {
  RenderConfig cfg;
  cfg.background = RenderConfig::Background::kMix;
  cfg.seed = 42;
  const RenderedSample a = render_sample(cfg, 7, Charset());
  const RenderedSample b = render_sample(cfg, 7, Charset());
  REQUIRE(a.image.same_shape(b.image));
  CHECK(a.transcript.text == b.transcript.text);
  for (std::size_t i = 0; i < a.image.size(); ++i)
    CHECK(a.image.pixels()[i] == b.image.pixels()[i]);

  const RenderedSample c = render_sample(cfg, 8, Charset());
  CHECK((c.transcript.text != a.transcript.text ||
         c.image.pixels() != a.image.pixels()));
}

TEST_CASE("zeroed augmentations leave crisp ink covering > 1% of the canvas") {
  RenderConfig cfg = plain_config();
  cfg.seed = 3;
  for (std::uint64_t i = 0; i < 10; ++i) {
    const RenderedSample s = render_sample(cfg, i, Charset());
    CHECK(s.ink_fraction > 0.01);
    // every ink pixel sits strictly inside the canvas
    CHECK(s.image.height() == 32);
    CHECK(s.image.width() == 128);
  }
}

TEST_CASE("every built-in font renders visible ink for every charset symbol") {
  const Charset cs;
  for (const char* font : {"builtin-sans", "builtin-mono", "builtin-duplex"}) {
    RenderConfig cfg = plain_config();
    cfg.fonts = {font};
    cfg.min_len = 4;
    cfg.max_len = 4;
    // force each symbol through the word list path
    for (int i = 0; i < Charset::kNumSymbols; ++i) {
      cfg.word_list = {std::string(4, cs.symbol(i))};
      const RenderedSample s = render_sample(cfg, static_cast<std::uint64_t>(i), cs);
      INFO("font ", font, " symbol ", cs.symbol(i));
      CHECK(s.ink_fraction > 0.001);
    }
  }
}

TEST_CASE("word lengths stay inside the configured range over 1000 samples") {
  RenderConfig cfg;
  cfg.seed = 9;
  cfg.background = RenderConfig::Background::kSolid;
  std::map<int, int> hist;
  for (int i = 0; i < 1000; ++i) {
    const RenderedSample s = render_sample(cfg, static_cast<std::uint64_t>(i), Charset());
    ++hist[static_cast<int>(s.transcript.text.size())];
  }
  for (const auto& [len, count] : hist) {
    CHECK(len >= 3);
    CHECK(len <= 10);
  }
  CHECK(hist.size() == 8);  // all lengths show up at this sample count
}

TEST_CASE("unknown fonts are rejected") {
  RenderConfig cfg;
  cfg.fonts = {"comic-sans"};
  CHECK_THROWS_AS(render_sample(cfg, 0, Charset()), FontLoadFailureError);
  cfg.fonts.clear();
  CHECK_THROWS_AS(cfg.validate(), FontLoadFailureError);
}

TEST_CASE("build_pair produces an exact 4x relation") {
  const Charset cs;
  RenderConfig cfg = plain_config();
  const RenderedSample s = render_sample(cfg, 0, cs);
  const LRHRPair pair = build_pair(s.image, s.transcript);
  CHECK(pair.lr.height() == 8);
  CHECK(pair.lr.width() == 32);
  CHECK(pair.hr.height() == 4 * pair.lr.height());
  CHECK(pair.hr.width() == 4 * pair.lr.width());
  CHECK(pair.transcript.text == s.transcript.text);

  const TextImage constant = TextImage::constant(32, 128, 3, 0.42);
  const LRHRPair cpair = build_pair(constant, s.transcript);
  for (double v : cpair.lr.pixels()) CHECK(v == doctest::Approx(0.42).epsilon(1e-9));

  CHECK_THROWS_AS(build_pair(TextImage::constant(30, 128, 3, 0.5), s.transcript),
                  WrongHRSizeError);
}

TEST_CASE("filter_by_size keeps entries meeting both minima and is idempotent") {
  DatasetManifest m;
  m.root = ".";
  auto add = [&](int w, int h) {
    ManifestEntry e;
    e.path = std::to_string(w) + "x" + std::to_string(h);
    e.width = w;
    e.height = h;
    m.entries.push_back(e);
  };
  add(128, 32);
  add(127, 32);
  add(128, 31);
  const DatasetManifest f = filter_by_size(m, 128, 32);
  REQUIRE(f.entries.size() == 1);
  CHECK(f.entries[0].width == 128);

  const DatasetManifest empty = filter_by_size(DatasetManifest{}, 10, 10);
  CHECK(empty.empty());

  // random manifest vs linear scan, then idempotence
  Rng rng(5);
  DatasetManifest big;
  for (int i = 0; i < 200; ++i) {
    ManifestEntry e;
    e.path = "r" + std::to_string(i);
    e.width = static_cast<int>(rng.uniform_index(200));
    e.height = static_cast<int>(rng.uniform_index(60));
    big.entries.push_back(e);
  }
  const DatasetManifest kept = filter_by_size(big, 100, 30);
  int expect = 0;
  for (const auto& e : big.entries)
    if (e.width >= 100 && e.height >= 30) ++expect;
  CHECK(static_cast<int>(kept.entries.size()) == expect);
  const DatasetManifest again = filter_by_size(kept, 100, 30);
  CHECK(again.entries.size() == kept.entries.size());
}

TEST_CASE("make_batches: sizes, determinism, exact cover") {
  DatasetManifest m;
  for (int i = 0; i < 10; ++i) {
    ManifestEntry e;
    e.path = std::to_string(i);
    m.entries.push_back(e);
  }
  const auto batches = make_batches(m, 4, 1234);
  REQUIRE(batches.size() == 3);
  CHECK(batches[0].size() == 4);
  CHECK(batches[1].size() == 4);
  CHECK(batches[2].size() == 2);

  const auto batches2 = make_batches(m, 4, 1234);
  CHECK(batches == batches2);
  const auto batches3 = make_batches(m, 4, 99);
  CHECK(batches != batches3);

  std::multiset<int> seen;
  for (const auto& b : batches)
    for (int idx : b) seen.insert(idx);
  std::multiset<int> expect;
  for (int i = 0; i < 10; ++i) expect.insert(i);
  CHECK(seen == expect);
}

TEST_CASE("bucket_resize covers all five Table-1 sizes") {
  const Charset cs;
  const RenderedSample s = render_sample(plain_config(), 1, cs);
  const LRHRPair pair = build_pair(s.image, s.transcript);

  const LRHRPair tiny = bucket_resize(pair, Bucket::k20x5);
  CHECK(tiny.lr.height() == 5);
  CHECK(tiny.lr.width() == 20);

  const LRHRPair identity = bucket_resize(pair, Bucket::k128x32);
  CHECK(identity.lr.height() == 32);
  CHECK(identity.lr.width() == 128);
  double max_diff = 0.0;
  for (std::size_t i = 0; i < identity.lr.size(); ++i)
    max_diff = std::max(max_diff,
                        std::fabs(identity.lr.pixels()[i] - pair.hr.pixels()[i]));
  CHECK(max_diff < 1e-6);  // identity bucket resample

  for (Bucket b : all_buckets()) {
    const LRHRPair p = bucket_resize(pair, b);
    CHECK(p.transcript.text == pair.transcript.text);
    CHECK(p.hr.same_shape(pair.hr));
  }
  CHECK_THROWS_AS(bucket_from_string("30x7"), UnknownBucketError);
}

TEST_CASE("manifest json-lines round trip and validation") {
  const fs::path dir = fs::temp_directory_path() / "textsr_manifest_test";
  fs::create_directories(dir / "images");
  const Charset cs;
  DatasetManifest m;
  m.root = dir.string();
  for (int i = 0; i < 3; ++i) {
    const RenderedSample s = render_sample(plain_config(), static_cast<std::uint64_t>(i), cs);
    const std::string rel = "images/" + std::to_string(i) + ".png";
    save_png(s.image, (dir / rel).string());
    ManifestEntry e;
    e.path = rel;
    e.text = s.transcript.text;
    e.width = s.image.width();
    e.height = s.image.height();
    if (i == 0) e.lexicon = "lexicon.txt";
    m.entries.push_back(e);
  }
  const std::string mpath = (dir / "manifest.jsonl").string();
  m.save(mpath);

  const DatasetManifest loaded = DatasetManifest::load(mpath);
  REQUIRE(loaded.size() == 3);
  CHECK(loaded.entries[0].lexicon.has_value());
  CHECK(!loaded.entries[1].lexicon.has_value());
  CHECK(loaded.entries[1].text == m.entries[1].text);
  loaded.validate();

  // size mismatch must be caught
  DatasetManifest bad = loaded;
  bad.entries[2].width += 1;
  bad.save(mpath);
  const DatasetManifest reloaded = DatasetManifest::load(mpath);
  CHECK_THROWS_AS(reloaded.validate(), ParseError);

  fs::remove_all(dir);
}

TEST_CASE("batch stream resumes exactly from serialized state") {
  BatchStream a(23, 4, 77);
  std::vector<std::vector<int>> first;
  for (int i = 0; i < 9; ++i) first.push_back(a.next());

  BatchStream b(23, 4, 77);
  for (int i = 0; i < 4; ++i) b.next();
  const BatchStream::State mid = b.state();

  BatchStream c(23, 4, 77);
  c.restore(mid);
  for (int i = 4; i < 9; ++i) CHECK(c.next() == first[static_cast<std::size_t>(i)]);

  // each epoch covers the dataset exactly once
  BatchStream d(10, 3, 5);
  std::multiset<int> seen;
  for (int i = 0; i < 4; ++i)
    for (int idx : d.next()) seen.insert(idx);
  std::multiset<int> expect;
  for (int i = 0; i < 10; ++i) expect.insert(i);
  CHECK(seen == expect);
}
