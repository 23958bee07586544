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

#ifndef TEXTSR_DATASET_HPP_
#define TEXTSR_DATASET_HPP_

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "textsr/charset.hpp"
#include "textsr/image.hpp"
#include "textsr/rng.hpp"

namespace textsr {

// Aligned training triple; hr is exactly 4x the lr dimensions.
struct LRHRPair {
  TextImage lr;
  TextImage hr;
  Transcript transcript;
};

struct ManifestEntry {
  std::string path;  // relative to the manifest root
  std::string text;
  int width = 0;
  int height = 0;
  std::optional<std::string> lexicon;  // relative path of a lexicon file
};

// JSON-lines manifest (`path`, `text`, `w`, `h`, optional `lexicon`), one
// object per entry, images stored as PNG under the root.
struct DatasetManifest {
  std::string root;
  std::vector<ManifestEntry> entries;

  static DatasetManifest load(const std::string& manifest_path);
  void save(const std::string& manifest_path) const;

  // Checks that every path resolves to a readable image whose stored size
  // matches the manifest.
  void validate() const;

  std::string resolve(const ManifestEntry& e) const;
  bool empty() const { return entries.empty(); }
  std::size_t size() const { return entries.size(); }
};

struct HrSize {
  int h = 32;
  int w = 128;
};

// lr = bicubic downsample of hr by exactly 4x. Throws WrongHRSize when hr
// does not match the configured training size.
LRHRPair build_pair(const TextImage& hr, const Transcript& t, HrSize size = {});

// Keeps entries with width >= min_w AND height >= min_h. Idempotent.
DatasetManifest filter_by_size(const DatasetManifest& m, int min_w, int min_h);

// Table-1 evaluation sizes, written width x height.
enum class Bucket { k128x32, k64x16, k32x8, k24x6, k20x5 };

Bucket bucket_from_string(const std::string& s);  // e.g. "32x8"
std::string bucket_to_string(Bucket b);
// bucket LR size as (h, w)
std::pair<int, int> bucket_lr_size(Bucket b);
const std::vector<Bucket>& all_buckets();

// Replaces lr with a bicubic downsample of hr at the bucket size; hr and
// transcript are unchanged. Used for size-bucketed evaluation.
LRHRPair bucket_resize(const LRHRPair& pair, Bucket bucket);

// One epoch of index batches: seeded permutation, final short batch kept.
std::vector<std::vector<int>> make_batches(const DatasetManifest& m, int batch_size,
                                           std::uint64_t shuffle_seed);

// Resumable epoch iterator over manifest indices; state serializes into
// training checkpoints.
class BatchStream {
 public:
  BatchStream(int dataset_size, int batch_size, std::uint64_t seed);

  std::vector<int> next();

  struct State {
    std::uint64_t epoch = 0;
    std::uint64_t cursor = 0;
  };
  State state() const { return state_; }
  void restore(const State& s);

 private:
  void shuffle_epoch();
  int dataset_size_;
  int batch_size_;
  std::uint64_t seed_;
  State state_;
  std::vector<int> perm_;
};

// Decoded-image cache keyed by path; stores 8-bit pixels to keep resident
// memory small and re-expands to [0,1] doubles on fetch.
class ImageCache {
 public:
  TextImage get(const std::string& path);
  void clear() { cache_.clear(); }

 private:
  struct Entry {
    int h, w, c;
    std::vector<std::uint8_t> pixels;
  };
  std::map<std::string, Entry> cache_;
};

}  // namespace textsr

#endif  // TEXTSR_DATASET_HPP_
