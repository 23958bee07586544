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

#ifndef TEXTSR_CHECKPOINT_HPP_
#define TEXTSR_CHECKPOINT_HPP_

#include <map>
#include <string>

#include <nlohmann/json_fwd.hpp>

#include "textsr/tensor.hpp"

namespace textsr {

// Named-parameter archive: magic, format version, JSON config header, then
// raw little-endian doubles per tensor. One format serves model
// checkpoints, optimizer state and the feature-extractor asset; the header
// "kind" field tells them apart.
struct CheckpointArchive {
  static constexpr int kFormatVersion = 1;

  std::string kind;
  nlohmann::json header() const;
  void set_header(const nlohmann::json& j);

  std::map<std::string, Tensor> tensors;

  // Atomic write: temp file in the same directory, then rename.
  void save(const std::string& path) const;
  static CheckpointArchive open(const std::string& path);

  // Raised as CheckpointMismatch when the archive kind differs.
  void expect_kind(const std::string& kind) const;

  std::string header_json;  // serialized header including "kind"
};

}  // namespace textsr

#endif  // TEXTSR_CHECKPOINT_HPP_
