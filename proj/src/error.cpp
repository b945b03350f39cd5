// src/error.cpp

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

#include "xpress/error.hpp"

namespace xpress {

const char *error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::NotWav: return "NotWav";
    case ErrorCode::UnsupportedEncoding: return "UnsupportedEncoding";
    case ErrorCode::TruncatedFile: return "TruncatedFile";
    case ErrorCode::AudioTooShort: return "AudioTooShort";
    case ErrorCode::BadFilterbank: return "BadFilterbank";
    case ErrorCode::FrameCountMismatch: return "FrameCountMismatch";
    case ErrorCode::WrongKind: return "WrongKind";
    case ErrorCode::TooFewFrames: return "TooFewFrames";
    case ErrorCode::EmptyDataset: return "EmptyDataset";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::WrongModelKind: return "WrongModelKind";
    case ErrorCode::TooFewQueries: return "TooFewQueries";
    case ErrorCode::DegenerateVariance: return "DegenerateVariance";
    case ErrorCode::DimMismatch: return "DimMismatch";
    case ErrorCode::EmptySequence: return "EmptySequence";
    case ErrorCode::NumericalDivergence: return "NumericalDivergence";
    case ErrorCode::BadVoteCount: return "BadVoteCount";
    case ErrorCode::BadVoteValue: return "BadVoteValue";
    case ErrorCode::InsufficientData: return "InsufficientData";
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::OneClassOnly: return "OneClassOnly";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::TooShort: return "TooShort";
    case ErrorCode::SourceListMismatch: return "SourceListMismatch";
    case ErrorCode::EmptyVocabulary: return "EmptyVocabulary";
    case ErrorCode::BadConfig: return "BadConfig";
  }
  return "Unknown";
}

}  // namespace xpress
