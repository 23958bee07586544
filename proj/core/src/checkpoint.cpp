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

#include "textsr/checkpoint.hpp"

#include <cstdint>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>

#include <nlohmann/json.hpp>

#include "textsr/errors.hpp"

namespace textsr {

namespace {

constexpr char kMagic[4] = {'T', 'S', 'R', 'A'};

template <typename T>
void write_pod(std::ostream& out, T v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_pod(std::istream& in) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!in) throw IoError("checkpoint truncated");
  return v;
}

}  // namespace

nlohmann::json CheckpointArchive::header() const {
  if (header_json.empty()) return nlohmann::json::object();
  return nlohmann::json::parse(header_json);
}

void CheckpointArchive::set_header(const nlohmann::json& j) {
  nlohmann::json h = j;
  h["kind"] = kind;
  h["format_version"] = kFormatVersion;
  header_json = h.dump();
}

void CheckpointArchive::save(const std::string& path) const {
  namespace fs = std::filesystem;
  const fs::path target(path);
  if (target.has_parent_path()) fs::create_directories(target.parent_path());
  const fs::path tmp = target.parent_path() / (target.filename().string() + ".tmp");

  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write checkpoint: " + tmp.string());
    out.write(kMagic, 4);
    write_pod<std::uint32_t>(out, kFormatVersion);

    std::string hdr = header_json;
    if (hdr.empty()) {
      nlohmann::json h;
      h["kind"] = kind;
      h["format_version"] = kFormatVersion;
      hdr = h.dump();
    }
    write_pod<std::uint64_t>(out, hdr.size());
    out.write(hdr.data(), static_cast<std::streamsize>(hdr.size()));

    write_pod<std::uint64_t>(out, tensors.size());
    for (const auto& [name, tensor] : tensors) {
      write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(name.size()));
      out.write(name.data(), static_cast<std::streamsize>(name.size()));
      write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(tensor.rank()));
      for (int d : tensor.shape()) write_pod<std::int64_t>(out, d);
      out.write(reinterpret_cast<const char*>(tensor.data()),
                static_cast<std::streamsize>(tensor.numel() * sizeof(double)));
    }
    if (!out) throw IoError("write failed: " + tmp.string());
  }
  fs::rename(tmp, target);
}

CheckpointArchive CheckpointArchive::open(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open checkpoint: " + path);

  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, kMagic, 4) != 0)
    throw CheckpointMismatchError("not a checkpoint archive: " + path);
  const auto version = read_pod<std::uint32_t>(in);
  if (version != kFormatVersion)
    throw CheckpointMismatchError("unsupported checkpoint format version " +
                                  std::to_string(version));

  CheckpointArchive arc;
  const auto hdr_len = read_pod<std::uint64_t>(in);
  arc.header_json.resize(hdr_len);
  in.read(arc.header_json.data(), static_cast<std::streamsize>(hdr_len));
  if (!in) throw IoError("checkpoint truncated");
  try {
    arc.kind = nlohmann::json::parse(arc.header_json).value("kind", "");
  } catch (const nlohmann::json::exception& e) {
    throw CheckpointMismatchError(std::string("bad checkpoint header: ") + e.what());
  }

  const auto count = read_pod<std::uint64_t>(in);
  for (std::uint64_t i = 0; i < count; ++i) {
    const auto name_len = read_pod<std::uint32_t>(in);
    std::string name(name_len, '\0');
    in.read(name.data(), name_len);
    const auto rank = read_pod<std::uint32_t>(in);
    std::vector<int> shape(rank);
    for (auto& d : shape) d = static_cast<int>(read_pod<std::int64_t>(in));
    Tensor t(shape);
    in.read(reinterpret_cast<char*>(t.data()),
            static_cast<std::streamsize>(t.numel() * sizeof(double)));
    if (!in) throw IoError("checkpoint truncated");
    arc.tensors.emplace(std::move(name), std::move(t));
  }
  return arc;
}

void CheckpointArchive::expect_kind(const std::string& expected) const {
  if (kind != expected)
    throw CheckpointMismatchError("checkpoint kind is '" + kind + "', expected '" +
                                  expected + "'");
}

}  // namespace textsr
