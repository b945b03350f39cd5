// include/xpress/error.hpp

// Copyright 2026  Xpress Authors

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#ifndef XPRESS_ERROR_HPP
#define XPRESS_ERROR_HPP

#include <stdexcept>
#include <string>

namespace xpress {

enum class ErrorCode {
  NotWav,
  UnsupportedEncoding,
  TruncatedFile,
  AudioTooShort,
  BadFilterbank,
  FrameCountMismatch,
  WrongKind,
  TooFewFrames,
  EmptyDataset,
  ShapeMismatch,
  WrongModelKind,
  TooFewQueries,
  DegenerateVariance,
  DimMismatch,
  EmptySequence,
  NumericalDivergence,
  BadVoteCount,
  BadVoteValue,
  InsufficientData,
  IoError,
  OneClassOnly,
  LengthMismatch,
  TooShort,
  SourceListMismatch,
  EmptyVocabulary,
  BadConfig,
};

const char *error_code_name(ErrorCode code);

// All recoverable failures in the library throw this. The code is a stable
// machine-parseable tag; what() carries the human-readable detail.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string &msg)
      : std::runtime_error(msg), code_(code) {}
  ErrorCode code() const { return code_; }
  const char *code_name() const { return error_code_name(code_); }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void Throw(ErrorCode code, const std::string &msg) {
  throw Error(code, msg);
}

}  // namespace xpress

#endif  // XPRESS_ERROR_HPP
