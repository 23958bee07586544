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

#include "textsr/eval.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "textsr/errors.hpp"
#include "textsr/image_io.hpp"
#include "textsr/metrics.hpp"
#include "textsr/resize.hpp"

namespace textsr {

namespace {

nlohmann::json opt_to_json(const std::optional<double>& v) {
  if (!v || !std::isfinite(*v)) return nullptr;
  return *v;
}

std::optional<double> opt_from_json(const nlohmann::json& j) {
  if (j.is_null()) return std::nullopt;
  return j.get<double>();
}

std::string fmt_opt(const std::optional<double>& v) {
  if (!v || !std::isfinite(*v)) return "";
  std::ostringstream os;
  os.precision(10);
  os << *v;
  return os.str();
}

}  // namespace

nlohmann::json MetricReport::to_json() const {
  nlohmann::json j;
  j["meta"] = meta;
  nlohmann::json rows_j = nlohmann::json::array();
  for (const ReportRow& r : rows) {
    nlohmann::json rj;
    rj["method"] = r.method;
    rj["bucket"] = r.bucket;
    rj["psnr_db"] = opt_to_json(r.psnr_mean_db);
    rj["psnr_excluded"] = r.psnr_excluded;
    rj["ssim"] = opt_to_json(r.ssim_mean);
    rj["acc"] = r.accuracy_pct;
    rj["lex_acc"] = opt_to_json(r.lexicon_accuracy_pct);
    rj["n"] = r.n_samples;
    rows_j.push_back(std::move(rj));
  }
  j["rows"] = std::move(rows_j);
  return j;
}

MetricReport MetricReport::from_json(const nlohmann::json& j) {
  MetricReport rep;
  for (const auto& [k, v] : j.at("meta").items()) rep.meta[k] = v.get<std::string>();
  for (const auto& rj : j.at("rows")) {
    ReportRow r;
    r.method = rj.at("method").get<std::string>();
    r.bucket = rj.at("bucket").get<std::string>();
    r.psnr_mean_db = opt_from_json(rj.at("psnr_db"));
    r.psnr_excluded = rj.at("psnr_excluded").get<int>();
    r.ssim_mean = opt_from_json(rj.at("ssim"));
    r.accuracy_pct = rj.at("acc").get<double>();
    r.lexicon_accuracy_pct = opt_from_json(rj.at("lex_acc"));
    r.n_samples = rj.at("n").get<int>();
    rep.rows.push_back(std::move(r));
  }
  return rep;
}

void MetricReport::save_json(const std::string& path) const {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot write report: " + path);
  out << to_json().dump(2) << "\n";
}

MetricReport MetricReport::load_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open report: " + path);
  nlohmann::json j;
  in >> j;
  return from_json(j);
}

std::string MetricReport::to_csv() const {
  std::ostringstream os;
  os << "method,bucket,psnr_db,psnr_excluded,ssim,acc,lex_acc,n\n";
  for (const ReportRow& r : rows) {
    os << r.method << ',' << r.bucket << ',' << fmt_opt(r.psnr_mean_db) << ','
       << r.psnr_excluded << ',' << fmt_opt(r.ssim_mean) << ',';
    os.precision(10);
    os << r.accuracy_pct << ',' << fmt_opt(r.lexicon_accuracy_pct) << ',' << r.n_samples
       << '\n';
  }
  return os.str();
}

std::string normalize_text(const std::string& s, bool case_sensitive, bool keep_punct) {
  std::string out;
  out.reserve(s.size());
  for (char c : s) {
    const auto uc = static_cast<unsigned char>(c);
    if (!keep_punct && std::ispunct(uc)) continue;
    out.push_back(case_sensitive ? c : static_cast<char>(std::tolower(uc)));
  }
  return out;
}

namespace {

struct MethodStats {
  PsnrAccumulator psnr;
  double ssim_sum = 0.0;
  int ssim_count = 0;
  int correct = 0;
  int lex_correct = 0;
  int lex_total = 0;
  int n = 0;
};

}  // namespace

MetricReport evaluate(const DatasetManifest& manifest, Recognizer& recognizer,
                      Generator* generator, const EvalOptions& opts) {
  if (manifest.empty()) throw EmptyManifestError("evaluate: empty manifest");
  for (const auto& m : opts.methods) {
    if (m != "bicubic" && m != "textsr" && m != "none")
      throw ParseError("unknown method: " + m);
    if (m == "textsr" && generator == nullptr)
      throw CheckpointMismatchError("method textsr requires a generator checkpoint");
  }

  ImageCache cache;
  std::map<std::string, std::vector<std::string>> lexicons;

  MetricReport report;
  for (Bucket bucket : opts.buckets) {
    const auto [bh, bw] = bucket_lr_size(bucket);
    for (const std::string& method : opts.methods) {
      MethodStats stats;
      std::vector<TextImage> pending;     // images awaiting recognition
      std::vector<std::size_t> pending_entry;

      auto flush = [&]() {
        if (pending.empty()) return;
        const auto preds = recognizer.recognize_batch(pending);
        for (std::size_t i = 0; i < preds.size(); ++i) {
          const ManifestEntry& e = manifest.entries[pending_entry[i]];
          const std::string truth =
              normalize_text(e.text, opts.case_sensitive, opts.keep_punct);
          if (normalize_text(preds[i], opts.case_sensitive, opts.keep_punct) == truth)
            ++stats.correct;
          if (e.lexicon) {
            auto it = lexicons.find(*e.lexicon);
            if (it == lexicons.end())
              it = lexicons
                       .emplace(*e.lexicon,
                                load_lexicon((std::filesystem::path(manifest.root) /
                                              *e.lexicon)
                                                 .string()))
                       .first;
            const std::string lex_pred = lexicon_match(preds[i], it->second);
            if (normalize_text(lex_pred, opts.case_sensitive, opts.keep_punct) == truth)
              ++stats.lex_correct;
            ++stats.lex_total;
          }
        }
        pending.clear();
        pending_entry.clear();
      };

      for (std::size_t ei = 0; ei < manifest.entries.size(); ++ei) {
        const ManifestEntry& entry = manifest.entries[ei];
        const TextImage hr = cache.get(manifest.resolve(entry));
        const TextImage lr = bicubic_resize(hr, bh, bw);

        TextImage candidate;
        bool score_quality = false;
        if (method == "none") {
          candidate = lr;
        } else if (method == "bicubic") {
          candidate = bicubic_resize(lr, hr.height(), hr.width());
          score_quality = true;
        } else {  // textsr
          candidate = sr_gate(lr, opts.gate) ? generator->apply(lr) : lr;
          if (candidate.height() != hr.height() || candidate.width() != hr.width())
            candidate = bicubic_resize(candidate, hr.height(), hr.width());
          score_quality = true;
        }
        if (score_quality) {
          stats.psnr.add(psnr(candidate, hr));
          stats.ssim_sum += ssim(candidate, hr);
          ++stats.ssim_count;
        }
        ++stats.n;
        pending.push_back(std::move(candidate));
        pending_entry.push_back(ei);
        if (static_cast<int>(pending.size()) >= opts.recognize_batch) flush();
      }
      flush();

      ReportRow row;
      row.method = method;
      row.bucket = bucket_to_string(bucket);
      row.n_samples = stats.n;
      row.accuracy_pct = stats.n > 0 ? 100.0 * stats.correct / stats.n : 0.0;
      if (method != "none") {
        if (stats.psnr.counted() > 0) row.psnr_mean_db = stats.psnr.mean();
        row.psnr_excluded = stats.psnr.excluded();
        if (stats.ssim_count > 0) row.ssim_mean = stats.ssim_sum / stats.ssim_count;
      }
      if (stats.lex_total > 0)
        row.lexicon_accuracy_pct = 100.0 * stats.lex_correct / stats.lex_total;
      report.rows.push_back(std::move(row));
    }
  }

  std::ostringstream rhash, ghash;
  rhash << std::hex << recognizer.params().state_hash();
  report.meta["recognizer_hash"] = rhash.str();
  if (generator) {
    ghash << std::hex << generator->params().state_hash();
    report.meta["generator_hash"] = ghash.str();
  } else {
    report.meta["generator_hash"] = "none";
  }
  report.meta["case_sensitive"] = opts.case_sensitive ? "true" : "false";
  report.meta["keep_punct"] = opts.keep_punct ? "true" : "false";
  report.meta["psnr_mode"] = "rgb-joint-peak1";
  report.meta["ssim_mode"] = "luminance-11x11-sigma1.5";
  report.meta["sr_alignment"] = "bicubic-to-hr-when-needed";
  report.meta["buckets_fixed"] = "true";
  return report;
}

std::vector<MethodDelta> compare_methods(const MetricReport& a, const MetricReport& b) {
  auto index = [](const MetricReport& r) {
    std::map<std::string, const ReportRow*> m;
    for (const ReportRow& row : r.rows) {
      if (m.count(row.bucket))
        throw BucketMismatchError(
            "report has multiple rows for bucket " + row.bucket +
            "; filter to a single method before comparing");
      m[row.bucket] = &row;
    }
    return m;
  };
  const auto ma = index(a);
  const auto mb = index(b);
  if (ma.size() != mb.size())
    throw BucketMismatchError("reports cover different bucket sets");

  std::vector<MethodDelta> deltas;
  for (const auto& [bucket, row_a] : ma) {
    auto it = mb.find(bucket);
    if (it == mb.end()) throw BucketMismatchError("bucket missing from second report: " + bucket);
    const ReportRow* row_b = it->second;
    MethodDelta d;
    d.bucket = bucket;
    d.d_accuracy_pct = row_b->accuracy_pct - row_a->accuracy_pct;
    if (row_a->psnr_mean_db && row_b->psnr_mean_db)
      d.d_psnr_db = *row_b->psnr_mean_db - *row_a->psnr_mean_db;
    if (row_a->ssim_mean && row_b->ssim_mean)
      d.d_ssim = *row_b->ssim_mean - *row_a->ssim_mean;
    deltas.push_back(std::move(d));
  }
  return deltas;
}

}  // namespace textsr
