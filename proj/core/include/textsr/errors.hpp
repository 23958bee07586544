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

#ifndef TEXTSR_ERRORS_HPP_
#define TEXTSR_ERRORS_HPP_

#include <stdexcept>
#include <string>

namespace textsr {

// Base class for every error raised by the library. CLI maps these to
// exit code 2, usage problems are handled by the argument parser.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

class UnknownCharacterError : public Error {
 public:
  UnknownCharacterError(std::size_t position, char32_t ch)
      : Error("unknown character at position " + std::to_string(position)),
        position(position),
        character(ch) {}
  std::size_t position;
  char32_t character;
};

class EmptyLexiconError : public Error {
 public:
  EmptyLexiconError() : Error("lexicon is empty") {}
};

class ShapeMismatchError : public Error {
 public:
  explicit ShapeMismatchError(const std::string& what) : Error(what) {}
};

class TooSmallError : public Error {
 public:
  explicit TooSmallError(const std::string& what) : Error(what) {}
};

class FontLoadFailureError : public Error {
 public:
  explicit FontLoadFailureError(const std::string& what) : Error(what) {}
};

class WrongHRSizeError : public Error {
 public:
  explicit WrongHRSizeError(const std::string& what) : Error(what) {}
};

class UnknownBucketError : public Error {
 public:
  explicit UnknownBucketError(const std::string& what) : Error(what) {}
};

class InputTooSmallError : public Error {
 public:
  explicit InputTooSmallError(const std::string& what) : Error(what) {}
};

class DegenerateControlPointsError : public Error {
 public:
  explicit DegenerateControlPointsError(const std::string& what) : Error(what) {}
};

class TranscriptTooLongError : public Error {
 public:
  explicit TranscriptTooLongError(const std::string& what) : Error(what) {}
};

class AlignmentMismatchError : public Error {
 public:
  explicit AlignmentMismatchError(const std::string& what) : Error(what) {}
};

class NonFiniteLossError : public Error {
 public:
  explicit NonFiniteLossError(const std::string& component)
      : Error("non-finite loss in component: " + component), component(component) {}
  std::string component;
};

class FeatureExtractorUnavailableError : public Error {
 public:
  explicit FeatureExtractorUnavailableError(const std::string& what) : Error(what) {}
};

class CheckpointMismatchError : public Error {
 public:
  explicit CheckpointMismatchError(const std::string& what) : Error(what) {}
};

class EmptyManifestError : public Error {
 public:
  explicit EmptyManifestError(const std::string& what) : Error(what) {}
};

class BucketMismatchError : public Error {
 public:
  explicit BucketMismatchError(const std::string& what) : Error(what) {}
};

class IoError : public Error {
 public:
  explicit IoError(const std::string& what) : Error(what) {}
};

class ParseError : public Error {
 public:
  explicit ParseError(const std::string& what) : Error(what) {}
};

}  // namespace textsr

#endif  // TEXTSR_ERRORS_HPP_
