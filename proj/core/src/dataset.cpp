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

#include "textsr/dataset.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>

#include <nlohmann/json.hpp>

#include "textsr/errors.hpp"
#include "textsr/image_io.hpp"
#include "textsr/resize.hpp"

namespace textsr {

namespace fs = std::filesystem;

DatasetManifest DatasetManifest::load(const std::string& manifest_path) {
  std::ifstream in(manifest_path);
  if (!in) throw IoError("cannot open manifest: " + manifest_path);
  DatasetManifest m;
  m.root = fs::path(manifest_path).parent_path().string();
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      ManifestEntry e;
      e.path = j.at("path").get<std::string>();
      e.text = j.at("text").get<std::string>();
      e.width = j.at("w").get<int>();
      e.height = j.at("h").get<int>();
      if (j.contains("lexicon")) e.lexicon = j.at("lexicon").get<std::string>();
      m.entries.push_back(std::move(e));
    } catch (const nlohmann::json::exception& ex) {
      throw ParseError("manifest line " + std::to_string(lineno) + ": " + ex.what());
    }
  }
  return m;
}

void DatasetManifest::save(const std::string& manifest_path) const {
  std::ofstream out(manifest_path, std::ios::trunc);
  if (!out) throw IoError("cannot write manifest: " + manifest_path);
  for (const auto& e : entries) {
    nlohmann::json j;
    j["path"] = e.path;
    j["text"] = e.text;
    j["w"] = e.width;
    j["h"] = e.height;
    if (e.lexicon) j["lexicon"] = *e.lexicon;
    out << j.dump() << "\n";
  }
}

std::string DatasetManifest::resolve(const ManifestEntry& e) const {
  return (fs::path(root) / e.path).string();
}

void DatasetManifest::validate() const {
  for (const auto& e : entries) {
    const TextImage img = load_png(resolve(e));
    if (img.width() != e.width || img.height() != e.height)
      throw ParseError("manifest size mismatch for " + e.path + ": file is " +
                       std::to_string(img.width()) + "x" + std::to_string(img.height()) +
                       ", manifest says " + std::to_string(e.width) + "x" +
                       std::to_string(e.height));
  }
}

LRHRPair build_pair(const TextImage& hr, const Transcript& t, HrSize size) {
  if (hr.height() != size.h || hr.width() != size.w)
    throw WrongHRSizeError("build_pair: expected " + std::to_string(size.h) + "x" +
                           std::to_string(size.w) + " hr image, got " +
                           std::to_string(hr.height()) + "x" + std::to_string(hr.width()));
  LRHRPair pair;
  pair.hr = hr;
  pair.hr.set_role(ImageRole::kHR);
  pair.lr = bicubic_resize(hr, size.h / 4, size.w / 4);
  pair.lr.set_role(ImageRole::kLR);
  pair.transcript = t;
  return pair;
}

DatasetManifest filter_by_size(const DatasetManifest& m, int min_w, int min_h) {
  DatasetManifest out;
  out.root = m.root;
  for (const auto& e : m.entries)
    if (e.width >= min_w && e.height >= min_h) out.entries.push_back(e);
  return out;
}

Bucket bucket_from_string(const std::string& s) {
  if (s == "128x32") return Bucket::k128x32;
  if (s == "64x16") return Bucket::k64x16;
  if (s == "32x8") return Bucket::k32x8;
  if (s == "24x6") return Bucket::k24x6;
  if (s == "20x5") return Bucket::k20x5;
  throw UnknownBucketError("unknown bucket: " + s +
                           " (expected one of 128x32, 64x16, 32x8, 24x6, 20x5)");
}

std::string bucket_to_string(Bucket b) {
  switch (b) {
    case Bucket::k128x32: return "128x32";
    case Bucket::k64x16: return "64x16";
    case Bucket::k32x8: return "32x8";
    case Bucket::k24x6: return "24x6";
    case Bucket::k20x5: return "20x5";
  }
  throw UnknownBucketError("bad bucket enum");
}

std::pair<int, int> bucket_lr_size(Bucket b) {
  switch (b) {
    case Bucket::k128x32: return {32, 128};
    case Bucket::k64x16: return {16, 64};
    case Bucket::k32x8: return {8, 32};
    case Bucket::k24x6: return {6, 24};
    case Bucket::k20x5: return {5, 20};
  }
  throw UnknownBucketError("bad bucket enum");
}

const std::vector<Bucket>& all_buckets() {
  static const std::vector<Bucket> buckets = {Bucket::k128x32, Bucket::k64x16,
                                              Bucket::k32x8, Bucket::k24x6,
                                              Bucket::k20x5};
  return buckets;
}

LRHRPair bucket_resize(const LRHRPair& pair, Bucket bucket) {
  const auto [h, w] = bucket_lr_size(bucket);
  LRHRPair out;
  out.hr = pair.hr;
  out.transcript = pair.transcript;
  out.lr = bicubic_resize(pair.hr, h, w);
  out.lr.set_role(ImageRole::kLR);
  return out;
}

std::vector<std::vector<int>> make_batches(const DatasetManifest& m, int batch_size,
                                           std::uint64_t shuffle_seed) {
  if (batch_size < 1) throw ParseError("make_batches: batch_size must be >= 1");
  std::vector<int> perm(m.size());
  for (std::size_t i = 0; i < perm.size(); ++i) perm[i] = static_cast<int>(i);
  Rng rng(shuffle_seed, 0x424154ULL);
  rng.shuffle(perm);
  std::vector<std::vector<int>> batches;
  for (std::size_t off = 0; off < perm.size(); off += static_cast<std::size_t>(batch_size)) {
    const std::size_t end = std::min(perm.size(), off + static_cast<std::size_t>(batch_size));
    batches.emplace_back(perm.begin() + static_cast<std::ptrdiff_t>(off),
                         perm.begin() + static_cast<std::ptrdiff_t>(end));
  }
  return batches;
}

BatchStream::BatchStream(int dataset_size, int batch_size, std::uint64_t seed)
    : dataset_size_(dataset_size), batch_size_(batch_size), seed_(seed) {
  if (dataset_size < 1) throw EmptyManifestError("batch stream over empty dataset");
  if (batch_size < 1) throw ParseError("batch_size must be >= 1");
  shuffle_epoch();
}

void BatchStream::shuffle_epoch() {
  perm_.resize(static_cast<std::size_t>(dataset_size_));
  for (int i = 0; i < dataset_size_; ++i) perm_[static_cast<std::size_t>(i)] = i;
  Rng rng(seed_, 0x45504fULL + state_.epoch);
  rng.shuffle(perm_);
}

std::vector<int> BatchStream::next() {
  if (state_.cursor >= static_cast<std::uint64_t>(dataset_size_)) {
    ++state_.epoch;
    state_.cursor = 0;
    shuffle_epoch();
  }
  const std::uint64_t end = std::min<std::uint64_t>(
      state_.cursor + static_cast<std::uint64_t>(batch_size_),
      static_cast<std::uint64_t>(dataset_size_));
  std::vector<int> batch(perm_.begin() + static_cast<std::ptrdiff_t>(state_.cursor),
                         perm_.begin() + static_cast<std::ptrdiff_t>(end));
  state_.cursor = end;
  return batch;
}

void BatchStream::restore(const State& s) {
  state_ = s;
  shuffle_epoch();
}

TextImage ImageCache::get(const std::string& path) {
  auto it = cache_.find(path);
  if (it == cache_.end()) {
    const TextImage img = load_png(path);
    Entry e;
    e.h = img.height();
    e.w = img.width();
    e.c = img.channels();
    e.pixels.resize(img.size());
    for (std::size_t i = 0; i < img.size(); ++i)
      e.pixels[i] = static_cast<std::uint8_t>(
          std::lround(std::clamp(img.pixels()[i], 0.0, 1.0) * 255.0));
    it = cache_.emplace(path, std::move(e)).first;
  }
  const Entry& e = it->second;
  TextImage img(e.h, e.w, e.c);
  for (std::size_t i = 0; i < e.pixels.size(); ++i)
    img.pixels()[i] = e.pixels[i] / 255.0;
  return img;
}

}  // namespace textsr
