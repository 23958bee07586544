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

#include "textsr/cli.hpp"

#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>

#include <CLI11.hpp>

#include "textsr/dataset.hpp"
#include "textsr/errors.hpp"
#include "textsr/eval.hpp"
#include "textsr/image_io.hpp"
#include "textsr/render.hpp"
#include "textsr/resize.hpp"
#include "textsr/training.hpp"

namespace textsr {

namespace fs = std::filesystem;

namespace {

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ','))
    if (!item.empty()) out.push_back(item);
  return out;
}

void apply_overrides(TrainingConfig& cfg, const std::vector<std::string>& sets) {
  for (const auto& kv : sets) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos)
      throw ParseError("--set expects key=value, got: " + kv);
    cfg.set(kv.substr(0, eq), kv.substr(eq + 1));
  }
}

struct GenDataArgs {
  std::string out;
  int count = 1000;
  std::uint64_t seed = 0;
  std::string hr_size = "32x128";
  std::string fonts = "builtin-sans,builtin-mono";
  std::string background = "mix";
  int min_len = 3, max_len = 10;
  std::string charset_subset = "full";
  std::string word_list;
  double rotate = 5.0, blur_max = 1.5, noise = 0.02;
  bool lexicon = false;
};

int run_gen_data(const GenDataArgs& a) {
  RenderConfig cfg;
  {
    const auto parts = split_list(a.hr_size.find('x') != std::string::npos
                                      ? a.hr_size.substr(0, a.hr_size.find('x')) + "," +
                                            a.hr_size.substr(a.hr_size.find('x') + 1)
                                      : a.hr_size);
    if (parts.size() != 2) throw ParseError("--hr-size must look like 32x128 (HxW)");
    cfg.canvas_h = std::stoi(parts[0]);
    cfg.canvas_w = std::stoi(parts[1]);
  }
  cfg.fonts = split_list(a.fonts);
  cfg.background = RenderConfig::background_from_name(a.background);
  cfg.min_len = a.min_len;
  cfg.max_len = a.max_len;
  cfg.charset_subset = a.charset_subset;
  cfg.max_rotation_deg = a.rotate;
  cfg.blur_sigma_max = a.blur_max;
  cfg.noise_sigma = a.noise;
  cfg.seed = a.seed;
  if (!a.word_list.empty()) cfg.word_list = load_lexicon(a.word_list);
  cfg.validate();

  const Charset charset;
  fs::create_directories(fs::path(a.out) / "images");

  DatasetManifest manifest;
  manifest.root = a.out;
  std::set<std::string> vocab;
  for (int i = 0; i < a.count; ++i) {
    const RenderedSample sample = render_sample(cfg, static_cast<std::uint64_t>(i), charset);
    char name[32];
    std::snprintf(name, sizeof(name), "images/%06d.png", i);
    save_png(sample.image, (fs::path(a.out) / name).string());
    ManifestEntry e;
    e.path = name;
    e.text = sample.transcript.text;
    e.width = sample.image.width();
    e.height = sample.image.height();
    if (a.lexicon) e.lexicon = "lexicon.txt";
    manifest.entries.push_back(std::move(e));
    vocab.insert(sample.transcript.text);
    if ((i + 1) % 1000 == 0)
      std::cout << "rendered " << (i + 1) << "/" << a.count << "\n";
  }
  if (a.lexicon) {
    std::ofstream lex(fs::path(a.out) / "lexicon.txt", std::ios::trunc);
    for (const auto& w : vocab) lex << w << "\n";
  }
  manifest.save((fs::path(a.out) / "manifest.jsonl").string());
  std::cout << "wrote " << manifest.size() << " samples to " << a.out << "\n";
  return 0;
}

int run_pretrain(const std::string& manifest_path, const std::string& out,
                 const std::string& config_file, const std::vector<std::string>& sets,
                 const std::string& log_path) {
  TrainingConfig cfg;
  if (!config_file.empty()) cfg.apply_file(config_file);
  apply_overrides(cfg, sets);
  const DatasetManifest manifest = DatasetManifest::load(manifest_path);
  const Charset charset;

  std::ofstream log;
  if (!log_path.empty()) {
    log.open(log_path, std::ios::trunc);
    log << "iter,loss\n";
  }
  auto r = pretrain_recognizer(manifest, cfg, charset,
                               [&](std::int64_t it, double loss) {
                                 if (log.is_open()) log << it << ',' << loss << '\n';
                                 if ((it + 1) % 50 == 0)
                                   std::cout << "pretrain iter " << (it + 1) << "/"
                                             << cfg.pretrain_iters << " loss " << loss
                                             << std::endl;
                               });
  r->save(out);
  std::cout << "saved recognizer to " << out << "\n";
  return 0;
}

int run_train(const std::string& manifest_path, const std::string& out_dir,
              const std::string& recognizer_path, const std::string& config_file,
              const std::vector<std::string>& sets, bool resume) {
  fs::create_directories(out_dir);
  const std::string state_path = (fs::path(out_dir) / "train_state.tsra").string();
  const std::string log_path = (fs::path(out_dir) / "train_log.csv").string();

  std::unique_ptr<TrainState> state;
  if (resume) {
    state = TrainState::load(state_path);
  } else {
    TrainingConfig cfg;
    if (!config_file.empty()) cfg.apply_file(config_file);
    apply_overrides(cfg, sets);
    if (recognizer_path.empty() && cfg.strategy != Strategy::kJointFromScratch)
      throw ParseError("strategies b/c need --recognizer CKPT (run pretrain-rec first)");
    state = TrainState::fresh(cfg, Charset(), recognizer_path);
  }

  const DatasetManifest manifest = DatasetManifest::load(manifest_path);
  run_training(*state, manifest, log_path, state_path,
               [&](std::int64_t it, const LossBreakdown& bd) {
                 if ((it + 1) % 50 == 0)
                   std::cout << "iter " << (it + 1) << "/" << state->cfg.total_iters
                             << " d " << bd.d_loss << " content " << bd.g_content
                             << " adv " << bd.g_adv << " tpl " << bd.g_tpl << " total "
                             << bd.g_total << std::endl;
               });

  state->g->save((fs::path(out_dir) / "generator.tsra").string());
  state->d->save((fs::path(out_dir) / "discriminator.tsra").string());
  state->r->save((fs::path(out_dir) / "recognizer.tsra").string());
  std::cout << "training complete; checkpoints in " << out_dir << "\n";
  return 0;
}

int run_sr(const std::string& in, const std::string& out, const std::string& gate_mode,
           const std::string& generator_path) {
  GateConfig gate;
  gate.mode = GateConfig::mode_from_string(gate_mode);
  const TextImage img = load_png(in);
  if (!sr_gate(img, gate)) {
    save_png(img, out);  // passthrough copy, gate rejected the image
    std::cout << "gate: passthrough (" << img.width() << "x" << img.height() << ")\n";
    return 0;
  }
  auto g = Generator::load(generator_path);
  const TextImage sr = g->apply(img);
  save_png(sr, out);
  std::cout << "sr: " << img.width() << "x" << img.height() << " -> " << sr.width()
            << "x" << sr.height() << "\n";
  return 0;
}

int run_recognize(const std::string& in, const std::string& recognizer_path) {
  auto r = Recognizer::load(recognizer_path);
  std::cout << r->recognize(load_png(in)) << "\n";
  return 0;
}

int run_eval(const std::string& manifest_path, const std::string& buckets,
             const std::string& methods, const std::string& report_path,
             const std::string& csv_path, const std::string& recognizer_path,
             const std::string& generator_path, bool case_sensitive, bool keep_punct,
             const std::string& gate_mode, int batch) {
  EvalOptions opts;
  opts.buckets.clear();
  for (const auto& b : split_list(buckets)) opts.buckets.push_back(bucket_from_string(b));
  opts.methods = split_list(methods);
  opts.case_sensitive = case_sensitive;
  opts.keep_punct = keep_punct;
  opts.gate.mode = GateConfig::mode_from_string(gate_mode);
  opts.recognize_batch = batch;

  auto r = Recognizer::load(recognizer_path);
  std::unique_ptr<Generator> g;
  if (!generator_path.empty()) g = Generator::load(generator_path);

  const DatasetManifest manifest = DatasetManifest::load(manifest_path);
  const MetricReport report = evaluate(manifest, *r, g.get(), opts);
  report.save_json(report_path);
  if (!csv_path.empty()) {
    std::ofstream csv(csv_path, std::ios::trunc);
    if (!csv) throw IoError("cannot write csv: " + csv_path);
    csv << report.to_csv();
  }
  std::cout << report.to_csv();
  return 0;
}

int run_heatmap(const std::string& in, const std::string& out,
                const std::string& generator_path) {
  auto g = Generator::load(generator_path);
  const TextImage img = load_png(in);
  Tensor penultimate;
  g->apply(img, &penultimate);
  const TextImage heat = activation_heatmap(penultimate, img.height(), img.width());
  save_png(heat, out);

  // 0.5 alpha blend over the input
  TextImage overlay(img.height(), img.width(), 3);
  for (int y = 0; y < img.height(); ++y)
    for (int x = 0; x < img.width(); ++x)
      for (int c = 0; c < 3; ++c)
        overlay.at(y, x, c) =
            0.5 * img.at(y, x, img.channels() == 1 ? 0 : c) + 0.5 * heat.at(y, x, 0);
  const fs::path p(out);
  const std::string overlay_path =
      (p.parent_path() / (p.stem().string() + "_overlay" + p.extension().string()))
          .string();
  save_png(overlay, overlay_path);
  std::cout << "wrote " << out << " and " << overlay_path << "\n";
  return 0;
}

}  // namespace

int cli_dispatch(const std::vector<std::string>& args) {
  CLI::App app{"content-aware 4x text super-resolution toolkit"};
  app.require_subcommand(1);

  GenDataArgs gen;
  auto* gen_cmd = app.add_subcommand("gen-data", "render a synthetic text dataset");
  gen_cmd->add_option("--out", gen.out, "output directory")->required();
  gen_cmd->add_option("--count", gen.count, "number of samples");
  gen_cmd->add_option("--seed", gen.seed, "render seed");
  gen_cmd->add_option("--hr-size", gen.hr_size, "HR canvas, HxW (default 32x128)");
  gen_cmd->add_option("--fonts", gen.fonts, "comma list of built-in fonts");
  gen_cmd->add_option("--background", gen.background, "solid|gradient|crop-pool|mix");
  gen_cmd->add_option("--min-len", gen.min_len, "min word length");
  gen_cmd->add_option("--max-len", gen.max_len, "max word length");
  gen_cmd->add_option("--charset", gen.charset_subset, "full|alnum|upper");
  gen_cmd->add_option("--word-list", gen.word_list, "word list file (one per line)");
  gen_cmd->add_option("--rotate", gen.rotate, "max rotation in degrees");
  gen_cmd->add_option("--blur-max", gen.blur_max, "max gaussian blur sigma");
  gen_cmd->add_option("--noise", gen.noise, "max additive noise sigma");
  gen_cmd->add_flag("--lexicon", gen.lexicon, "emit lexicon.txt and tag entries");

  std::string pre_manifest, pre_out, pre_config, pre_log;
  std::vector<std::string> pre_sets;
  auto* pre_cmd = app.add_subcommand("pretrain-rec", "train the recognizer on HR images");
  pre_cmd->add_option("--manifest", pre_manifest, "dataset manifest")->required();
  pre_cmd->add_option("--out", pre_out, "output recognizer checkpoint")->required();
  pre_cmd->add_option("--config", pre_config, "key = value config file");
  pre_cmd->add_option("--set", pre_sets, "config override key=value");
  pre_cmd->add_option("--log", pre_log, "CSV loss log");

  std::string tr_manifest, tr_out, tr_rec, tr_config;
  std::vector<std::string> tr_sets;
  bool tr_resume = false;
  auto* tr_cmd = app.add_subcommand("train", "adversarial + TPL generator training");
  tr_cmd->add_option("--manifest", tr_manifest, "dataset manifest")->required();
  tr_cmd->add_option("--out-dir", tr_out, "output directory")->required();
  tr_cmd->add_option("--recognizer", tr_rec, "pretrained recognizer (strategies b/c)");
  tr_cmd->add_option("--config", tr_config, "key = value config file");
  tr_cmd->add_option("--set", tr_sets, "config override key=value");
  tr_cmd->add_flag("--resume", tr_resume, "resume from out-dir/train_state.tsra");

  std::string sr_in, sr_out, sr_gate_mode = "or", sr_gen;
  auto* sr_cmd = app.add_subcommand("sr", "super-resolve one image");
  sr_cmd->add_option("input", sr_in, "input PNG")->required();
  sr_cmd->add_option("output", sr_out, "output PNG")->required();
  sr_cmd->add_option("--gate", sr_gate_mode, "or|and|off (default or)");
  sr_cmd->add_option("--generator", sr_gen, "generator checkpoint")->required();

  std::string rec_in, rec_ckpt;
  auto* rec_cmd = app.add_subcommand("recognize", "read the text in an image");
  rec_cmd->add_option("input", rec_in, "input PNG")->required();
  rec_cmd->add_option("--recognizer", rec_ckpt, "recognizer checkpoint")->required();

  std::string ev_manifest, ev_buckets = "128x32,64x16,32x8,24x6,20x5";
  std::string ev_methods = "bicubic,textsr,none", ev_report, ev_csv, ev_rec, ev_gen;
  std::string ev_gate = "or";
  bool ev_case = false, ev_punct = false;
  int ev_batch = 16;
  auto* ev_cmd = app.add_subcommand("eval", "size-bucketed metric report");
  ev_cmd->add_option("--manifest", ev_manifest, "dataset manifest")->required();
  ev_cmd->add_option("--buckets", ev_buckets, "comma list of WxH buckets");
  ev_cmd->add_option("--methods", ev_methods, "comma list of bicubic,textsr,none");
  ev_cmd->add_option("--report", ev_report, "output JSON report")->required();
  ev_cmd->add_option("--csv", ev_csv, "also write rows as CSV");
  ev_cmd->add_option("--recognizer", ev_rec, "recognizer checkpoint")->required();
  ev_cmd->add_option("--generator", ev_gen, "generator checkpoint (for textsr)");
  ev_cmd->add_flag("--case-sensitive", ev_case, "case-sensitive matching");
  ev_cmd->add_flag("--keep-punct", ev_punct, "keep punctuation when matching");
  ev_cmd->add_option("--gate", ev_gate, "textsr gate: or|and|off");
  ev_cmd->add_option("--batch", ev_batch, "recognition batch size");

  std::string hm_in, hm_out, hm_gen;
  auto* hm_cmd = app.add_subcommand("heatmap", "penultimate-activation heatmap");
  hm_cmd->add_option("input", hm_in, "input PNG")->required();
  hm_cmd->add_option("output", hm_out, "output grayscale PNG")->required();
  hm_cmd->add_option("--generator", hm_gen, "generator checkpoint")->required();

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    std::cout << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    std::cerr << "usage error: " << e.what() << std::endl;
    return 1;
  }

  try {
    if (gen_cmd->parsed()) return run_gen_data(gen);
    if (pre_cmd->parsed())
      return run_pretrain(pre_manifest, pre_out, pre_config, pre_sets, pre_log);
    if (tr_cmd->parsed())
      return run_train(tr_manifest, tr_out, tr_rec, tr_config, tr_sets, tr_resume);
    if (sr_cmd->parsed()) return run_sr(sr_in, sr_out, sr_gate_mode, sr_gen);
    if (rec_cmd->parsed()) return run_recognize(rec_in, rec_ckpt);
    if (ev_cmd->parsed())
      return run_eval(ev_manifest, ev_buckets, ev_methods, ev_report, ev_csv, ev_rec,
                      ev_gen, ev_case, ev_punct, ev_gate, ev_batch);
    if (hm_cmd->parsed()) return run_heatmap(hm_in, hm_out, hm_gen);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << std::endl;
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << std::endl;
    return 2;
  }
  return 1;
}

}  // namespace textsr
