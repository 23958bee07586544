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

#include "textsr/charset.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>

#include "textsr/errors.hpp"

namespace textsr {

namespace {

std::string default_symbols() {
  std::string s;
  s.reserve(Charset::kNumSymbols);
  for (char c = '0'; c <= '9'; ++c) s.push_back(c);
  for (char c = 'A'; c <= 'Z'; ++c) s.push_back(c);
  for (char c = 'a'; c <= 'z'; ++c) s.push_back(c);
  // ASCII printable punctuation: 33-47, 58-64, 91-96, 123-126 (32 marks)
  for (int c = 33; c <= 47; ++c) s.push_back(static_cast<char>(c));
  for (int c = 58; c <= 64; ++c) s.push_back(static_cast<char>(c));
  for (int c = 91; c <= 96; ++c) s.push_back(static_cast<char>(c));
  for (int c = 123; c <= 126; ++c) s.push_back(static_cast<char>(c));
  return s;
}

}  // namespace

Charset::Charset() : Charset(default_symbols()) {}

Charset::Charset(const std::string& symbols) : symbols_(symbols) {
  if (symbols_.size() != kNumSymbols)
    throw ParseError("charset must contain exactly 94 symbols, got " +
                     std::to_string(symbols_.size()));
  index_.fill(-1);
  for (int i = 0; i < kNumSymbols; ++i) {
    auto& slot = index_[static_cast<unsigned char>(symbols_[static_cast<std::size_t>(i)])];
    if (slot != -1) throw ParseError("charset contains duplicate symbols");
    slot = i;
  }
}

int Charset::index_of(char c) const {
  return index_[static_cast<unsigned char>(c)];
}

Transcript encode_transcript(const std::string& text, const Charset& cs) {
  Transcript t;
  t.text = text;
  t.labels.reserve(text.size());
  for (std::size_t i = 0; i < text.size(); ++i) {
    const int idx = cs.index_of(text[i]);
    if (idx < 0)
      throw UnknownCharacterError(i, static_cast<char32_t>(static_cast<unsigned char>(text[i])));
    t.labels.push_back(idx);
  }
  return t;
}

std::string decode_labels(const std::vector<int>& labels_with_eos, const Charset& cs) {
  std::string out;
  for (int label : labels_with_eos) {
    if (label == Charset::kEosIndex) break;
    out.push_back(cs.symbol(label));
  }
  return out;
}

int edit_distance(const std::string& a, const std::string& b) {
  const std::size_t n = a.size(), m = b.size();
  if (n == 0) return static_cast<int>(m);
  if (m == 0) return static_cast<int>(n);
  std::vector<int> prev(m + 1), cur(m + 1);
  for (std::size_t j = 0; j <= m; ++j) prev[j] = static_cast<int>(j);
  for (std::size_t i = 1; i <= n; ++i) {
    cur[0] = static_cast<int>(i);
    for (std::size_t j = 1; j <= m; ++j) {
      const int sub = prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
      cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, sub});
    }
    std::swap(prev, cur);
  }
  return prev[m];
}

namespace {
std::string to_lower(const std::string& s) {
  std::string out = s;
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}
}  // namespace

std::string lexicon_match(const std::string& predicted,
                          const std::vector<std::string>& lexicon) {
  if (lexicon.empty()) throw EmptyLexiconError();
  const std::string p = to_lower(predicted);
  int best = -1;
  std::size_t best_idx = 0;
  for (std::size_t i = 0; i < lexicon.size(); ++i) {
    const int d = edit_distance(p, to_lower(lexicon[i]));
    if (best < 0 || d < best) {
      best = d;
      best_idx = i;
    }
  }
  return lexicon[best_idx];
}

std::vector<std::string> load_lexicon(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open lexicon file: " + path);
  std::vector<std::string> words;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!line.empty()) words.push_back(line);
  }
  return words;
}

}  // namespace textsr
