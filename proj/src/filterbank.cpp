// src/filterbank.cpp

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

#include "xpress/dsp.hpp"
#include "xpress/error.hpp"
#include "xpress/filterbank.hpp"

namespace xpress {

double hz_to_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }

double mel_to_hz(double mel) {
  return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0);
}

double hz_to_erb_rate(double hz) {
  return 21.4 * std::log10(1.0 + 0.00437 * hz);
}

double erb_rate_to_hz(double erb) {
  return (std::pow(10.0, erb / 21.4) - 1.0) / 0.00437;
}

double erb_bandwidth(double hz) { return 24.7 * (0.00437 * hz + 1.0); }

namespace {

void check_spec(const FilterbankSpec &spec, int sample_rate_hz) {
  if (spec.n_filters < 20)
    Throw(ErrorCode::BadFilterbank,
          "need at least 20 filters, got " + std::to_string(spec.n_filters));
  if (!(spec.f_lo_hz < spec.f_hi_hz) ||
      spec.f_hi_hz > sample_rate_hz / 2.0 + 1e-9)
    Throw(ErrorCode::BadFilterbank, "invalid filterbank frequency range");
}

}  // namespace

std::vector<double> gammatone_center_frequencies(const FilterbankSpec &spec) {
  double lo = hz_to_erb_rate(spec.f_lo_hz);
  double hi = hz_to_erb_rate(spec.f_hi_hz);
  std::vector<double> centers(spec.n_filters);
  for (int i = 0; i < spec.n_filters; ++i) {
    double e = lo + (hi - lo) * i / (spec.n_filters - 1);
    centers[i] = erb_rate_to_hz(e);
  }
  return centers;
}

Matrix mel_filter_weights(const FilterbankSpec &spec, int fft_size,
                          int sample_rate_hz) {
  check_spec(spec, sample_rate_hz);
  int n_bins = fft_size / 2 + 1;
  Matrix w(spec.n_filters, n_bins);

  double mel_lo = hz_to_mel(spec.f_lo_hz);
  double mel_hi = hz_to_mel(spec.f_hi_hz);
  std::vector<double> edges(spec.n_filters + 2);
  for (int i = 0; i < spec.n_filters + 2; ++i)
    edges[i] = mel_to_hz(mel_lo + (mel_hi - mel_lo) * i / (spec.n_filters + 1));

  double bin_hz = static_cast<double>(sample_rate_hz) / fft_size;
  for (int m = 0; m < spec.n_filters; ++m) {
    double left = edges[m], center = edges[m + 1], right = edges[m + 2];
    for (int b = 0; b < n_bins; ++b) {
      double f = b * bin_hz;
      double v = 0.0;
      if (f > left && f < center)
        v = (f - left) / (center - left);
      else if (f >= center && f < right)
        v = (right - f) / (right - center);
      w.at(m, b) = v;
    }
  }
  return w;
}

std::vector<std::vector<double>> gammatone_impulse_responses(
    const FilterbankSpec &spec, int sample_rate_hz, int length) {
  check_spec(spec, sample_rate_hz);
  std::vector<double> centers = gammatone_center_frequencies(spec);
  std::vector<std::vector<double>> irs(spec.n_filters);
  const double b_factor = 1.019;  // bandwidth correction for 4th order
  const int order = 4;
  for (int m = 0; m < spec.n_filters; ++m) {
    double fc = centers[m];
    double bw = b_factor * erb_bandwidth(fc);
    std::vector<double> h(length);
    for (int n = 0; n < length; ++n) {
      double t = static_cast<double>(n) / sample_rate_hz;
      h[n] = std::pow(t, order - 1) * std::exp(-2.0 * M_PI * bw * t) *
             std::cos(2.0 * M_PI * fc * t);
    }
    // Scale so the peak magnitude response is 1.
    int fft_n = 1;
    while (fft_n < 2 * length) fft_n <<= 1;
    auto resp = real_fft(h, fft_n);
    double peak = 0.0;
    for (const auto &c : resp) peak = std::max(peak, std::abs(c));
    if (peak > 0.0)
      for (double &v : h) v /= peak;
    irs[m] = std::move(h);
  }
  return irs;
}

Matrix gammatone_filter_weights(const FilterbankSpec &spec, int fft_size,
                                int sample_rate_hz) {
  check_spec(spec, sample_rate_hz);
  // Long enough for the slow low-frequency envelopes to decay.
  int ir_len = sample_rate_hz / 16;  // 62.5 ms
  auto irs = gammatone_impulse_responses(spec, sample_rate_hz, ir_len);
  int n_bins = fft_size / 2 + 1;
  Matrix w(spec.n_filters, n_bins);
  for (int m = 0; m < spec.n_filters; ++m) {
    // Response sampled on the analysis grid; |H|^2 weights for power input.
    int fft_n = fft_size;
    while (fft_n < ir_len) fft_n <<= 1;
    auto resp = real_fft(irs[m], fft_n);
    int stride = fft_n / fft_size;
    double peak2 = 0.0;
    std::vector<double> mag2(n_bins);
    for (int b = 0; b < n_bins; ++b) {
      mag2[b] = std::norm(resp[static_cast<size_t>(b) * stride]);
      peak2 = std::max(peak2, mag2[b]);
    }
    for (int b = 0; b < n_bins; ++b)
      w.at(m, b) = peak2 > 0.0 ? mag2[b] / peak2 : 0.0;
  }
  return w;
}

Matrix dct_matrix(int n_out, int n_in) {
  Matrix d(n_out, n_in);
  for (int k = 0; k < n_out; ++k) {
    double scale = std::sqrt((k == 0 ? 1.0 : 2.0) / n_in);
    for (int n = 0; n < n_in; ++n)
      d.at(k, n) = scale * std::cos(M_PI * k * (2 * n + 1) / (2.0 * n_in));
  }
  return d;
}

}  // namespace xpress
