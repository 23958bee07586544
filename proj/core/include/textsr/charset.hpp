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

#ifndef TEXTSR_CHARSET_HPP_
#define TEXTSR_CHARSET_HPP_

#include <array>
#include <string>
#include <vector>

namespace textsr {

// Recognition alphabet: 94 printable characters (10 digits, 26 upper-case,
// 26 lower-case, 32 ASCII punctuation marks) plus an end-of-sequence class.
class Charset {
 public:
  static constexpr int kNumSymbols = 94;
  static constexpr int kEosIndex = 94;
  static constexpr int kNumClasses = 95;  // symbols + EOS

  Charset();

  // Construct from an explicit symbol string, e.g. when loading a
  // recognizer checkpoint. Must contain exactly 94 distinct characters.
  explicit Charset(const std::string& symbols);

  char symbol(int index) const { return symbols_[static_cast<std::size_t>(index)]; }
  // Returns -1 when the character is not in the alphabet.
  int index_of(char c) const;
  bool contains(char c) const { return index_of(c) >= 0; }
  const std::string& symbols() const { return symbols_; }

 private:
  std::string symbols_;
  std::array<int, 256> index_;
};

// Ground-truth character sequence y_1..y_T; labels exclude EOS.
struct Transcript {
  std::string text;
  std::vector<int> labels;

  int length() const { return static_cast<int>(labels.size()); }
};

// Maps text to label indices. Throws UnknownCharacterError for characters
// outside the alphabet. No EOS is appended; EOS is a decoder-side target.
Transcript encode_transcript(const std::string& text, const Charset& cs);

// Concatenates symbols up to but excluding the first EOS; anything after
// the first EOS is ignored. EOS-free sequences decode in full.
std::string decode_labels(const std::vector<int>& labels_with_eos, const Charset& cs);

// Unit-cost Levenshtein distance.
int edit_distance(const std::string& a, const std::string& b);

// Nearest lexicon word under case-insensitive edit distance; ties broken
// by lowest lexicon index. Throws EmptyLexiconError.
std::string lexicon_match(const std::string& predicted,
                          const std::vector<std::string>& lexicon);

// One word per line, UTF-8, blank lines ignored.
std::vector<std::string> load_lexicon(const std::string& path);

}  // namespace textsr

#endif  // TEXTSR_CHARSET_HPP_
