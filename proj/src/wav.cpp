// src/wav.cpp

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

#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>

#include "xpress/dsp.hpp"
#include "xpress/error.hpp"

namespace xpress {

namespace {

uint32_t read_u32le(const uint8_t *p) {
  return static_cast<uint32_t>(p[0]) | (static_cast<uint32_t>(p[1]) << 8) |
         (static_cast<uint32_t>(p[2]) << 16) |
         (static_cast<uint32_t>(p[3]) << 24);
}

uint16_t read_u16le(const uint8_t *p) {
  return static_cast<uint16_t>(p[0] | (p[1] << 8));
}

void put_u32le(std::string &out, uint32_t v) {
  out.push_back(static_cast<char>(v & 0xff));
  out.push_back(static_cast<char>((v >> 8) & 0xff));
  out.push_back(static_cast<char>((v >> 16) & 0xff));
  out.push_back(static_cast<char>((v >> 24) & 0xff));
}

void put_u16le(std::string &out, uint16_t v) {
  out.push_back(static_cast<char>(v & 0xff));
  out.push_back(static_cast<char>((v >> 8) & 0xff));
}

}  // namespace

AudioBuffer load_wav(const std::string &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) Throw(ErrorCode::IoError, "cannot open " + path);
  std::string bytes((std::istreambuf_iterator<char>(in)),
                    std::istreambuf_iterator<char>());
  const uint8_t *p = reinterpret_cast<const uint8_t *>(bytes.data());
  size_t n = bytes.size();

  if (n < 12 || std::memcmp(p, "RIFF", 4) != 0 ||
      std::memcmp(p + 8, "WAVE", 4) != 0)
    Throw(ErrorCode::NotWav, path + " is not a RIFF/WAVE file");

  bool have_fmt = false;
  uint16_t format = 0, channels = 0, bits = 0;
  uint32_t rate = 0;
  size_t data_off = 0;
  uint32_t data_len = 0;
  bool have_data = false;

  size_t off = 12;
  while (off + 8 <= n) {
    const uint8_t *ch = p + off;
    uint32_t ch_len = read_u32le(ch + 4);
    size_t body = off + 8;
    if (std::memcmp(ch, "fmt ", 4) == 0) {
      if (body + 16 > n) Throw(ErrorCode::TruncatedFile, "truncated fmt chunk");
      format = read_u16le(ch + 8);
      channels = read_u16le(ch + 10);
      rate = read_u32le(ch + 12);
      bits = read_u16le(ch + 22);
      have_fmt = true;
    } else if (std::memcmp(ch, "data", 4) == 0) {
      data_off = body;
      data_len = ch_len;
      have_data = true;
    }
    off = body + ch_len + (ch_len & 1);  // chunks are word-aligned
  }

  if (!have_fmt || !have_data)
    Throw(ErrorCode::NotWav, path + " lacks fmt/data chunks");
  if (format != 1 || bits != 16)
    Throw(ErrorCode::UnsupportedEncoding,
          "only 16-bit PCM is supported (" + path + ")");
  if (channels != 1)
    Throw(ErrorCode::UnsupportedEncoding, "only mono is supported (" + path + ")");
  if (rate != 16000)
    Throw(ErrorCode::UnsupportedEncoding,
          "only 16 kHz is supported, got " + std::to_string(rate) +
              " Hz; resample before ingestion (" + path + ")");
  if (data_off + data_len > n)
    Throw(ErrorCode::TruncatedFile, "data chunk exceeds file size in " + path);
  if (data_len == 0 || data_len % 2 != 0)
    Throw(ErrorCode::TruncatedFile, "empty or odd-sized data chunk in " + path);

  AudioBuffer out;
  out.sample_rate_hz = 16000;
  size_t count = data_len / 2;
  out.samples.resize(count);
  const uint8_t *d = p + data_off;
  for (size_t i = 0; i < count; ++i) {
    int16_t v = static_cast<int16_t>(d[2 * i] | (d[2 * i + 1] << 8));
    out.samples[i] = static_cast<double>(v) / 32768.0;
  }
  return out;
}

void write_wav(const std::string &path, const std::vector<double> &samples,
               int sample_rate_hz) {
  std::string body;
  body.reserve(44 + samples.size() * 2);
  uint32_t data_len = static_cast<uint32_t>(samples.size() * 2);
  body.append("RIFF");
  put_u32le(body, 36 + data_len);
  body.append("WAVE");
  body.append("fmt ");
  put_u32le(body, 16);
  put_u16le(body, 1);  // PCM
  put_u16le(body, 1);  // mono
  put_u32le(body, static_cast<uint32_t>(sample_rate_hz));
  put_u32le(body, static_cast<uint32_t>(sample_rate_hz) * 2);
  put_u16le(body, 2);
  put_u16le(body, 16);
  body.append("data");
  put_u32le(body, data_len);
  for (double s : samples) {
    double scaled = std::lrint(s * 32768.0);
    if (scaled > 32767.0) scaled = 32767.0;
    if (scaled < -32768.0) scaled = -32768.0;
    put_u16le(body, static_cast<uint16_t>(static_cast<int16_t>(scaled)));
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) Throw(ErrorCode::IoError, "cannot write " + path);
  out.write(body.data(), static_cast<std::streamsize>(body.size()));
  if (!out) Throw(ErrorCode::IoError, "short write to " + path);
}

}  // namespace xpress
