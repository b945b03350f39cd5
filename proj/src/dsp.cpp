// src/dsp.cpp

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

#include <fftw3.h>

#include <cmath>
#include <mutex>

#include "xpress/dsp.hpp"
#include "xpress/error.hpp"

namespace xpress {

namespace {

// FFTW plan creation is not thread-safe; execution on private buffers is.
std::mutex &planner_mutex() {
  static std::mutex m;
  return m;
}

// Forward/inverse real FFT of one size with its own aligned buffers.
class RealFftPlan {
 public:
  explicit RealFftPlan(int n) : n_(n) {
    in_ = fftw_alloc_real(n);
    out_ = fftw_alloc_complex(n / 2 + 1);
    std::lock_guard<std::mutex> lock(planner_mutex());
    fwd_ = fftw_plan_dft_r2c_1d(n, in_, out_, FFTW_ESTIMATE);
    inv_ = fftw_plan_dft_c2r_1d(n, out_, in_, FFTW_ESTIMATE);
  }
  ~RealFftPlan() {
    std::lock_guard<std::mutex> lock(planner_mutex());
    fftw_destroy_plan(fwd_);
    fftw_destroy_plan(inv_);
    fftw_free(in_);
    fftw_free(out_);
  }
  RealFftPlan(const RealFftPlan &) = delete;
  RealFftPlan &operator=(const RealFftPlan &) = delete;

  void forward(const double *x, int len, std::complex<double> *spec) {
    for (int i = 0; i < n_; ++i) in_[i] = i < len ? x[i] : 0.0;
    fftw_execute(fwd_);
    for (int i = 0; i <= n_ / 2; ++i)
      spec[i] = std::complex<double>(out_[i][0], out_[i][1]);
  }

  void inverse(const std::complex<double> *spec, double *x) {
    for (int i = 0; i <= n_ / 2; ++i) {
      out_[i][0] = spec[i].real();
      out_[i][1] = spec[i].imag();
    }
    fftw_execute(inv_);
    double scale = 1.0 / n_;
    for (int i = 0; i < n_; ++i) x[i] = in_[i] * scale;
  }

  int size() const { return n_; }

 private:
  int n_;
  double *in_;
  fftw_complex *out_;
  fftw_plan fwd_;
  fftw_plan inv_;
};

}  // namespace

int FrameSpec::window_samples(int sample_rate_hz) const {
  return static_cast<int>(std::lround(window_ms * sample_rate_hz / 1000.0));
}

int FrameSpec::hop_samples(int sample_rate_hz) const {
  return static_cast<int>(std::lround(hop_ms * sample_rate_hz / 1000.0));
}

int frame_count(int n_samples, int win, int hop) {
  if (n_samples < win) return 0;
  return (n_samples - win) / hop + 1;
}

PowerSpectrogram frame_power_spectrum(const AudioBuffer &audio,
                                      const FrameSpec &spec) {
  int sr = audio.sample_rate_hz;
  int win = spec.window_samples(sr);
  int hop = spec.hop_samples(sr);
  int n = static_cast<int>(audio.samples.size());
  if (n < win)
    Throw(ErrorCode::AudioTooShort,
          "need at least " + std::to_string(win) + " samples, got " +
              std::to_string(n));
  if (hop <= 0 || win <= 0 || spec.fft_size < win)
    Throw(ErrorCode::BadConfig, "invalid frame spec");

  int n_frames = frame_count(n, win, hop);
  int n_bins = spec.fft_size / 2 + 1;

  std::vector<double> window(win);
  for (int i = 0; i < win; ++i)
    window[i] = 0.54 - 0.46 * std::cos(2.0 * M_PI * i / (win - 1));

  PowerSpectrogram out;
  out.frames = Matrix(n_frames, n_bins);
  out.spec = spec;
  out.sample_rate_hz = sr;

  RealFftPlan fft(spec.fft_size);
  std::vector<double> frame(win);
  std::vector<std::complex<double>> bins(n_bins);
  const double pre = spec.preemphasis;
  for (int t = 0; t < n_frames; ++t) {
    int start = t * hop;
    for (int i = 0; i < win; ++i) {
      int idx = start + i;
      double prev = idx > 0 ? audio.samples[idx - 1] : 0.0;
      frame[i] = (audio.samples[idx] - pre * prev) * window[i];
    }
    fft.forward(frame.data(), win, bins.data());
    double *row = out.frames.row(t);
    for (int b = 0; b < n_bins; ++b) row[b] = std::norm(bins[b]);
  }
  return out;
}

std::vector<std::complex<double>> real_fft(const std::vector<double> &x,
                                           int n) {
  RealFftPlan fft(n);
  std::vector<std::complex<double>> spec(n / 2 + 1);
  fft.forward(x.data(), static_cast<int>(x.size()), spec.data());
  return spec;
}

std::vector<double> real_ifft(const std::vector<std::complex<double>> &spec,
                              int n) {
  RealFftPlan fft(n);
  std::vector<double> x(n);
  fft.inverse(spec.data(), x.data());
  return x;
}

}  // namespace xpress
