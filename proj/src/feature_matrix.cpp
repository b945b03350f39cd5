// src/feature_matrix.cpp

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

#include <cstring>
#include <fstream>

#include "json.hpp"
#include "xpress/error.hpp"
#include "xpress/feature_matrix.hpp"

namespace xpress {

int feature_kind_dim(FeatureKind kind) {
  switch (kind) {
    case FeatureKind::Custom: return -1;
    case FeatureKind::MFCC20: return 20;
    case FeatureKind::GCC20: return 20;
    case FeatureKind::NMCC20: return 20;
    case FeatureKind::F0V3: return 3;
    case FeatureKind::MFCC39: return 39;
    case FeatureKind::Concat23: return 23;
    case FeatureKind::Spliced429: return 429;
    case FeatureKind::TV8: return 8;
  }
  return -1;
}

const char *feature_kind_name(FeatureKind kind) {
  switch (kind) {
    case FeatureKind::Custom: return "custom";
    case FeatureKind::MFCC20: return "mfcc20";
    case FeatureKind::GCC20: return "gcc20";
    case FeatureKind::NMCC20: return "nmcc20";
    case FeatureKind::F0V3: return "f0v3";
    case FeatureKind::MFCC39: return "mfcc39";
    case FeatureKind::Concat23: return "concat23";
    case FeatureKind::Spliced429: return "spliced429";
    case FeatureKind::TV8: return "tv8";
  }
  return "custom";
}

FeatureKind feature_kind_from_code(uint8_t code) {
  if (code > 8) Throw(ErrorCode::WrongKind, "unknown feature kind code");
  return static_cast<FeatureKind>(code);
}

void validate_feature(const FeatureMatrix &f) {
  int want = feature_kind_dim(f.kind);
  if (want >= 0 && f.data.cols != want)
    Throw(ErrorCode::WrongKind,
          std::string("feature kind ") + feature_kind_name(f.kind) +
              " requires " + std::to_string(want) + " columns, got " +
              std::to_string(f.data.cols));
  if (!f.data.all_finite())
    Throw(ErrorCode::NumericalDivergence, "non-finite feature values");
}

namespace {

void put_u32le(std::string &out, uint32_t v) {
  out.push_back(static_cast<char>(v & 0xff));
  out.push_back(static_cast<char>((v >> 8) & 0xff));
  out.push_back(static_cast<char>((v >> 16) & 0xff));
  out.push_back(static_cast<char>((v >> 24) & 0xff));
}

uint32_t get_u32le(const uint8_t *p) {
  return static_cast<uint32_t>(p[0]) | (static_cast<uint32_t>(p[1]) << 8) |
         (static_cast<uint32_t>(p[2]) << 16) |
         (static_cast<uint32_t>(p[3]) << 24);
}

}  // namespace

void save_feat(const std::string &path, const FeatureMatrix &f) {
  validate_feature(f);
  std::string out;
  out.append("FEAT");
  out.push_back(1);  // version
  out.push_back(static_cast<char>(f.kind));
  put_u32le(out, static_cast<uint32_t>(f.data.rows));
  put_u32le(out, static_cast<uint32_t>(f.data.cols));
  for (double v : f.data.data) {
    float fv = static_cast<float>(v);
    char buf[4];
    std::memcpy(buf, &fv, 4);
    out.append(buf, 4);
  }
  nlohmann::json meta(f.meta);
  std::string meta_str = meta.dump();
  put_u32le(out, static_cast<uint32_t>(meta_str.size()));
  out.append(meta_str);

  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) Throw(ErrorCode::IoError, "cannot write " + path);
  os.write(out.data(), static_cast<std::streamsize>(out.size()));
  if (!os) Throw(ErrorCode::IoError, "short write to " + path);
}

FeatureMatrix load_feat(const std::string &path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) Throw(ErrorCode::IoError, "cannot open " + path);
  std::string bytes((std::istreambuf_iterator<char>(is)),
                    std::istreambuf_iterator<char>());
  const uint8_t *p = reinterpret_cast<const uint8_t *>(bytes.data());
  size_t n = bytes.size();
  if (n < 14 || std::memcmp(p, "FEAT", 4) != 0)
    Throw(ErrorCode::IoError, path + " is not a FEAT file");
  if (p[4] != 1) Throw(ErrorCode::IoError, "unsupported FEAT version");

  FeatureMatrix f;
  f.kind = feature_kind_from_code(p[5]);
  uint32_t rows = get_u32le(p + 6);
  uint32_t cols = get_u32le(p + 10);
  size_t need = 14 + static_cast<size_t>(rows) * cols * 4 + 4;
  if (n < need) Throw(ErrorCode::TruncatedFile, path + " is truncated");

  f.data = Matrix(static_cast<int>(rows), static_cast<int>(cols));
  const uint8_t *d = p + 14;
  for (size_t i = 0; i < static_cast<size_t>(rows) * cols; ++i) {
    float fv;
    std::memcpy(&fv, d + i * 4, 4);
    f.data.data[i] = static_cast<double>(fv);
  }
  size_t meta_off = 14 + static_cast<size_t>(rows) * cols * 4;
  uint32_t meta_len = get_u32le(p + meta_off);
  if (meta_off + 4 + meta_len > n)
    Throw(ErrorCode::TruncatedFile, path + " meta is truncated");
  std::string meta_str(bytes.data() + meta_off + 4, meta_len);
  auto meta = nlohmann::json::parse(meta_str);
  for (auto it = meta.begin(); it != meta.end(); ++it)
    f.meta[it.key()] = it.value().get<std::string>();
  validate_feature(f);
  return f;
}

}  // namespace xpress
