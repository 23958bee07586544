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

#include <filesystem>
#include <fstream>
#include <set>

#include <doctest.h>
#include <nlohmann/json.hpp>

#include "textsr/cli.hpp"
#include "textsr/errors.hpp"
#include "textsr/eval.hpp"
#include "textsr/image_io.hpp"
#include "textsr/render.hpp"
#include "textsr/resize.hpp"

using namespace textsr;
namespace fs = std::filesystem;

namespace {

struct Fixture {
  fs::path dir;
  DatasetManifest manifest;
  std::unique_ptr<Recognizer> recognizer;
  std::unique_ptr<Generator> generator;

  explicit Fixture(const std::string& tag, int n_samples = 6, bool lexicon = false) {
    dir = fs::temp_directory_path() / ("textsr_eval_" + tag);
    fs::create_directories(dir / "images");
    RenderConfig rc;
    rc.background = RenderConfig::Background::kSolid;
    rc.charset_subset = "upper";
    rc.min_len = 3;
    rc.max_len = 5;
    rc.max_rotation_deg = 0;
    rc.blur_sigma_max = 0;
    rc.noise_sigma = 0;
    rc.seed = 1234;
    const Charset cs;
    manifest.root = dir.string();
    std::set<std::string> vocab;
    for (int i = 0; i < n_samples; ++i) {
      const RenderedSample s = render_sample(rc, static_cast<std::uint64_t>(i), cs);
      const std::string rel = "images/" + std::to_string(i) + ".png";
      save_png(s.image, (dir / rel).string());
      ManifestEntry e;
      e.path = rel;
      e.text = s.transcript.text;
      e.width = s.image.width();
      e.height = s.image.height();
      if (lexicon) e.lexicon = "lexicon.txt";
      manifest.entries.push_back(std::move(e));
      vocab.insert(s.transcript.text);
    }
    if (lexicon) {
      std::ofstream lex(dir / "lexicon.txt", std::ios::trunc);
      for (const auto& w : vocab) lex << w << "\n";
    }
    manifest.save((dir / "manifest.jsonl").string());

    recognizer = std::make_unique<Recognizer>(RecognizerConfig::tiny(), cs, 7);
    GeneratorConfig gc;
    gc.base_channels = 8;
    gc.residual_blocks = 1;
    generator = std::make_unique<Generator>(gc, 9);
  }
  ~Fixture() { fs::remove_all(dir); }
};

}  // namespace

TEST_CASE("normalize_text default protocol") {
  CHECK(normalize_text("Ho-USE!", false, false) == "house");
  CHECK(normalize_text("Ho-USE!", true, false) == "HoUSE");
  CHECK(normalize_text("Ho-USE!", false, true) == "ho-use!");
  CHECK(normalize_text("Ho-USE!", true, true) == "Ho-USE!");
}

TEST_CASE("report JSON round-trips losslessly") {
  MetricReport rep;
  rep.meta["recognizer_hash"] = "abc";
  rep.meta["case_sensitive"] = "false";
  ReportRow r1;
  r1.method = "bicubic";
  r1.bucket = "32x8";
  r1.psnr_mean_db = 21.5;
  r1.psnr_excluded = 2;
  r1.ssim_mean = 0.83;
  r1.accuracy_pct = 62.5;
  r1.n_samples = 8;
  ReportRow r2;
  r2.method = "none";
  r2.bucket = "20x5";
  r2.accuracy_pct = 0.0;
  r2.lexicon_accuracy_pct = 12.5;
  r2.n_samples = 8;
  rep.rows = {r1, r2};

  const auto j1 = rep.to_json();
  const MetricReport back = MetricReport::from_json(j1);
  const auto j2 = back.to_json();
  CHECK(j1 == j2);  // parse -> serialize -> parse fixpoint
  CHECK(back.rows[0].psnr_mean_db.has_value());
  CHECK(!back.rows[1].psnr_mean_db.has_value());
  CHECK(back.rows[1].lexicon_accuracy_pct.has_value());
}

TEST_CASE("compare_methods: zero, subtraction, antisymmetry, mismatch") {
  auto make = [](double acc32, double acc20, double psnr32) {
    MetricReport rep;
    ReportRow a;
    a.method = "bicubic";
    a.bucket = "32x8";
    a.accuracy_pct = acc32;
    a.psnr_mean_db = psnr32;
    a.ssim_mean = 0.5;
    a.n_samples = 10;
    ReportRow b;
    b.method = "bicubic";
    b.bucket = "20x5";
    b.accuracy_pct = acc20;
    b.n_samples = 10;
    rep.rows = {a, b};
    return rep;
  };
  const MetricReport ra = make(50, 10, 20.0);
  const MetricReport rb = make(60, 35, 22.5);

  const auto zero = compare_methods(ra, ra);
  for (const auto& d : zero) {
    CHECK(d.d_accuracy_pct == 0.0);
    if (d.d_psnr_db) CHECK(*d.d_psnr_db == 0.0);
  }

  const auto ab = compare_methods(ra, rb);
  const auto ba = compare_methods(rb, ra);
  REQUIRE(ab.size() == 2);
  for (std::size_t i = 0; i < ab.size(); ++i) {
    CHECK(ab[i].d_accuracy_pct == doctest::Approx(-ba[i].d_accuracy_pct));
    if (ab[i].bucket == "32x8") {
      CHECK(ab[i].d_accuracy_pct == doctest::Approx(10.0));
      REQUIRE(ab[i].d_psnr_db.has_value());
      CHECK(*ab[i].d_psnr_db == doctest::Approx(2.5));
    } else {
      CHECK(ab[i].d_accuracy_pct == doctest::Approx(25.0));
    }
  }

  MetricReport missing = ra;
  missing.rows.pop_back();
  CHECK_THROWS_AS(compare_methods(ra, missing), BucketMismatchError);
  MetricReport dup = ra;
  dup.rows.push_back(ra.rows[0]);
  CHECK_THROWS_AS(compare_methods(dup, dup), BucketMismatchError);
}

TEST_CASE("evaluate: identity bucket semantics and hand-counted accuracy") {
  Fixture fx("identity");
  EvalOptions opts;
  opts.buckets = {Bucket::k128x32, Bucket::k32x8};
  opts.methods = {"bicubic", "textsr", "none"};
  const MetricReport rep = evaluate(fx.manifest, *fx.recognizer, fx.generator.get(), opts);
  REQUIRE(rep.rows.size() == 6);

  // identity bucket: every PSNR pair is the infinity sentinel and excluded
  const ReportRow& bic_id = rep.rows[0];
  CHECK(bic_id.method == "bicubic");
  CHECK(bic_id.bucket == "128x32");
  CHECK(!bic_id.psnr_mean_db.has_value());
  CHECK(bic_id.psnr_excluded == static_cast<int>(fx.manifest.size()));
  REQUIRE(bic_id.ssim_mean.has_value());
  CHECK(*bic_id.ssim_mean == doctest::Approx(1.0).epsilon(1e-9));

  // all three methods coincide on the identity bucket (the gate keeps the
  // generator out of 128x32 inputs)
  const ReportRow& tex_id = rep.rows[1];
  const ReportRow& none_id = rep.rows[2];
  CHECK(tex_id.accuracy_pct == bic_id.accuracy_pct);
  CHECK(none_id.accuracy_pct == bic_id.accuracy_pct);
  CHECK(!tex_id.psnr_mean_db.has_value());
  CHECK(tex_id.psnr_excluded == static_cast<int>(fx.manifest.size()));

  // hand count with an independent per-sample loop
  ImageCache cache;
  int expect_correct = 0;
  for (const auto& e : fx.manifest.entries) {
    const TextImage hr = cache.get(fx.manifest.resolve(e));
    const TextImage lr = bicubic_resize(hr, 8, 32);
    const TextImage up = bicubic_resize(lr, 32, 128);
    const std::string pred = fx.recognizer->recognize(up);
    if (normalize_text(pred, false, false) == normalize_text(e.text, false, false))
      ++expect_correct;
  }
  const ReportRow& bic32 = rep.rows[3];
  CHECK(bic32.bucket == "32x8");
  CHECK(bic32.accuracy_pct ==
        doctest::Approx(100.0 * expect_correct / static_cast<double>(fx.manifest.size())));
  REQUIRE(bic32.psnr_mean_db.has_value());
  CHECK(*bic32.psnr_mean_db > 0.0);

  CHECK_THROWS_AS(evaluate(DatasetManifest{}, *fx.recognizer, nullptr, opts),
                  EmptyManifestError);
  EvalOptions need_g = opts;
  need_g.methods = {"textsr"};
  CHECK_THROWS_AS(evaluate(fx.manifest, *fx.recognizer, nullptr, need_g),
                  CheckpointMismatchError);
}

TEST_CASE("evaluate reports lexicon accuracy when lexicons are present") {
  Fixture fx("lexicon", 5, /*lexicon=*/true);
  EvalOptions opts;
  opts.buckets = {Bucket::k128x32};
  opts.methods = {"none"};
  const MetricReport rep = evaluate(fx.manifest, *fx.recognizer, nullptr, opts);
  REQUIRE(rep.rows.size() == 1);
  REQUIRE(rep.rows[0].lexicon_accuracy_pct.has_value());
  CHECK(*rep.rows[0].lexicon_accuracy_pct >= 0.0);
  CHECK(*rep.rows[0].lexicon_accuracy_pct <= 100.0);
  // lexicon matching can only help a prediction that is close to a word
  CHECK(*rep.rows[0].lexicon_accuracy_pct >= rep.rows[0].accuracy_pct - 1e-9);
}

TEST_CASE("cli: usage errors exit 1, runtime errors exit 2") {
  CHECK(cli_dispatch({"no-such-command"}) == 1);
  CHECK(cli_dispatch({"eval", "--definitely-not-a-flag"}) == 1);
  CHECK(cli_dispatch({}) == 1);
  // missing checkpoint file is a runtime failure
  CHECK(cli_dispatch({"recognize", "nonexistent.png", "--recognizer", "missing.tsra"}) == 2);
}

TEST_CASE("cli: sr gate passthrough and 4x output") {
  Fixture fx("cli_sr", 2);
  const std::string gen_path = (fx.dir / "generator.tsra").string();
  fx.generator->save(gen_path);

  const std::string hr_in = (fx.dir / fx.manifest.entries[0].path).string();
  const std::string out = (fx.dir / "sr_out.png").string();

  // 128x32 with --gate and: not smaller than 128x32, passthrough copy
  REQUIRE(cli_dispatch({"sr", hr_in, out, "--gate", "and", "--generator", gen_path}) == 0);
  const TextImage a = load_png(hr_in);
  const TextImage b = load_png(out);
  REQUIRE(a.same_shape(b));
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(a.pixels()[i] == b.pixels()[i]);

  // small input goes through the generator at 4x
  const TextImage lr = bicubic_resize(a, 8, 32);
  const std::string lr_path = (fx.dir / "lr.png").string();
  save_png(lr, lr_path);
  REQUIRE(cli_dispatch({"sr", lr_path, out, "--generator", gen_path}) == 0);
  const TextImage sr = load_png(out);
  CHECK(sr.height() == 32);
  CHECK(sr.width() == 128);
}

TEST_CASE("cli: recognize, eval and heatmap run end to end") {
  Fixture fx("cli_eval", 4);
  const std::string gen_path = (fx.dir / "generator.tsra").string();
  const std::string rec_path = (fx.dir / "recognizer.tsra").string();
  fx.generator->save(gen_path);
  fx.recognizer->save(rec_path);
  const std::string manifest_path = (fx.dir / "manifest.jsonl").string();
  const std::string report_path = (fx.dir / "report.json").string();
  const std::string csv_path = (fx.dir / "report.csv").string();

  REQUIRE(cli_dispatch({"recognize", (fx.dir / fx.manifest.entries[0].path).string(),
                        "--recognizer", rec_path}) == 0);

  REQUIRE(cli_dispatch({"eval", "--manifest", manifest_path, "--buckets", "32x8",
                        "--methods", "bicubic,textsr,none", "--report", report_path,
                        "--csv", csv_path, "--recognizer", rec_path, "--generator",
                        gen_path}) == 0);
  const MetricReport rep = MetricReport::load_json(report_path);
  CHECK(rep.rows.size() == 3);
  CHECK(rep.meta.count("recognizer_hash") == 1);
  std::ifstream csv(csv_path);
  std::string header;
  std::getline(csv, header);
  CHECK(header == "method,bucket,psnr_db,psnr_excluded,ssim,acc,lex_acc,n");

  const std::string heat_path = (fx.dir / "heat.png").string();
  REQUIRE(cli_dispatch({"heatmap", (fx.dir / fx.manifest.entries[0].path).string(),
                        heat_path, "--generator", gen_path}) == 0);
  CHECK(fs::exists(heat_path));
  CHECK(fs::exists(fx.dir / "heat_overlay.png"));
  const TextImage heat = load_png(heat_path);
  CHECK(heat.height() == 32);
  CHECK(heat.width() == 128);
}

TEST_CASE("cli: gen-data writes a loadable dataset with a lexicon") {
  const fs::path dir = fs::temp_directory_path() / "textsr_cli_gen";
  fs::remove_all(dir);
  REQUIRE(cli_dispatch({"gen-data", "--out", dir.string(), "--count", "5", "--seed", "3",
                        "--charset", "upper", "--lexicon"}) == 0);
  const DatasetManifest m = DatasetManifest::load((dir / "manifest.jsonl").string());
  REQUIRE(m.size() == 5);
  m.validate();
  CHECK(m.entries[0].lexicon.has_value());
  const auto words = load_lexicon((dir / "lexicon.txt").string());
  CHECK(!words.empty());
  fs::remove_all(dir);
}
