// include/xpress/dsp.hpp

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

#ifndef XPRESS_DSP_HPP
#define XPRESS_DSP_HPP

#include <complex>
#include <string>
#include <vector>

#include "xpress/matrix.hpp"

namespace xpress {

// Mono PCM audio, normalized to [-1, 1). Ingestion only accepts 16 kHz;
// callers must resample beforehand.
struct AudioBuffer {
  std::vector<double> samples;
  int sample_rate_hz = 16000;
};

// Reads a RIFF/WAVE file. Accepts 16-bit signed PCM, mono, 16 kHz only;
// anything else is rejected rather than converted.
AudioBuffer load_wav(const std::string &path);

// Writes samples as 16-bit PCM, rounding and clipping to the int16 range.
void write_wav(const std::string &path, const std::vector<double> &samples,
               int sample_rate_hz);

struct FrameSpec {
  double window_ms = 25.0;
  double hop_ms = 10.0;
  double preemphasis = 0.97;  // in [0, 1)
  int fft_size = 512;         // power of two >= window length

  int window_samples(int sample_rate_hz) const;
  int hop_samples(int sample_rate_hz) const;
};

struct PowerSpectrogram {
  Matrix frames;  // T x (fft_size/2 + 1), nonnegative
  FrameSpec spec;
  int sample_rate_hz = 16000;
};

// floor((n - win)/hop) + 1 for n >= win, else 0.
int frame_count(int n_samples, int win, int hop);

// Pre-emphasis, Hamming window, zero-pad to fft_size, |DFT|^2 on bins
// 0..fft_size/2. Throws AudioTooShort if the signal is shorter than one
// window.
PowerSpectrogram frame_power_spectrum(const AudioBuffer &audio,
                                      const FrameSpec &spec);

// One-shot real FFT, length padded to n. Used by the extractors for
// filtering; wraps FFTW behind a plan cache safe for concurrent callers.
std::vector<std::complex<double>> real_fft(const std::vector<double> &x, int n);
std::vector<double> real_ifft(const std::vector<std::complex<double>> &spec,
                              int n);

}  // namespace xpress

#endif  // XPRESS_DSP_HPP
