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

#ifndef TEXTSR_EVAL_HPP_
#define TEXTSR_EVAL_HPP_

#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "textsr/dataset.hpp"
#include "textsr/generator.hpp"
#include "textsr/recognizer.hpp"
#include "textsr/training.hpp"

namespace textsr {

struct ReportRow {
  std::string method;  // bicubic | textsr | none
  std::string bucket;  // Table-1 size tag, width x height
  // none rows carry no image-quality numbers; identity buckets can have
  // every pair excluded as the infinity sentinel
  std::optional<double> psnr_mean_db;
  int psnr_excluded = 0;
  std::optional<double> ssim_mean;
  double accuracy_pct = 0.0;
  std::optional<double> lexicon_accuracy_pct;
  int n_samples = 0;
};

struct MetricReport {
  std::map<std::string, std::string> meta;
  std::vector<ReportRow> rows;

  nlohmann::json to_json() const;
  static MetricReport from_json(const nlohmann::json& j);
  void save_json(const std::string& path) const;
  static MetricReport load_json(const std::string& path);

  // header: method,bucket,psnr_db,psnr_excluded,ssim,acc,lex_acc,n
  std::string to_csv() const;
};

struct EvalOptions {
  std::vector<Bucket> buckets = all_buckets();
  std::vector<std::string> methods = {"bicubic", "textsr", "none"};
  bool case_sensitive = false;
  bool keep_punct = false;
  GateConfig gate;  // textsr method applies the generator through this gate
  int recognize_batch = 16;
};

// Scene-text match normalization: lower-cases unless case_sensitive and
// strips the 32 punctuation marks unless keep_punct.
std::string normalize_text(const std::string& s, bool case_sensitive, bool keep_punct);

// For every bucket: LR by bicubic downsample of HR, up-sampling per method
// (bicubic kernel, the generator behind the SR gate, or none = recognize
// the raw LR), PSNR/SSIM against HR and exact-match recognition accuracy
// after normalization. Lexicon accuracy is reported for entries that carry
// a lexicon.
MetricReport evaluate(const DatasetManifest& manifest, Recognizer& recognizer,
                      Generator* generator, const EvalOptions& opts);

struct MethodDelta {
  std::string bucket;
  double d_accuracy_pct = 0.0;
  std::optional<double> d_psnr_db;
  std::optional<double> d_ssim;
};

// Per-bucket deltas (b - a). Each report must contain exactly one row per
// bucket and the bucket sets must match.
std::vector<MethodDelta> compare_methods(const MetricReport& a, const MetricReport& b);

}  // namespace textsr

#endif  // TEXTSR_EVAL_HPP_
