// include/xpress/feature_matrix.hpp

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

#ifndef XPRESS_FEATURE_MATRIX_HPP
#define XPRESS_FEATURE_MATRIX_HPP

#include <cstdint>
#include <map>
#include <string>

#include "xpress/matrix.hpp"

namespace xpress {

enum class FeatureKind : uint8_t {
  Custom = 0,
  MFCC20 = 1,
  GCC20 = 2,
  NMCC20 = 3,
  F0V3 = 4,
  MFCC39 = 5,
  Concat23 = 6,
  Spliced429 = 7,
  TV8 = 8,
};

// Expected column count for a kind, or -1 when unconstrained (Custom).
int feature_kind_dim(FeatureKind kind);

const char *feature_kind_name(FeatureKind kind);
FeatureKind feature_kind_from_code(uint8_t code);

// Frames-by-dims feature block, the interchange unit between the DSP front
// end and the models. meta carries extraction parameters as strings.
struct FeatureMatrix {
  Matrix data;
  FeatureKind kind = FeatureKind::Custom;
  std::map<std::string, std::string> meta;

  int frames() const { return data.rows; }
  int dims() const { return data.cols; }
};

// Validates the dimensional contract and finiteness; throws WrongKind /
// NumericalDivergence on violation. Every extractor calls this on its output.
void validate_feature(const FeatureMatrix &f);

// FEAT container: "FEAT" magic, u8 version, u8 kind code, u32 rows, u32 cols,
// rows*cols f32 little-endian row-major, u32 meta length, UTF-8 JSON meta.
void save_feat(const std::string &path, const FeatureMatrix &f);
FeatureMatrix load_feat(const std::string &path);

}  // namespace xpress

#endif  // XPRESS_FEATURE_MATRIX_HPP
