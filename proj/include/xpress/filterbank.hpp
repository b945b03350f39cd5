// include/xpress/filterbank.hpp

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

#ifndef XPRESS_FILTERBANK_HPP
#define XPRESS_FILTERBANK_HPP

#include <vector>

#include "xpress/matrix.hpp"

namespace xpress {

enum class FilterbankKind { MelTriangular, GammatoneERB };

struct FilterbankSpec {
  FilterbankKind kind = FilterbankKind::MelTriangular;
  int n_filters = 40;
  double f_lo_hz = 50.0;
  double f_hi_hz = 7600.0;
};

// HTK mel scale.
double hz_to_mel(double hz);
double mel_to_hz(double mel);

// ERB-rate scale (Glasberg & Moore).
double hz_to_erb_rate(double hz);
double erb_rate_to_hz(double erb);
double erb_bandwidth(double hz);

// Center frequencies equally spaced on the ERB-rate scale over
// [f_lo, f_hi], endpoints included. Strictly increasing.
std::vector<double> gammatone_center_frequencies(const FilterbankSpec &spec);

// Triangular mel weights, n_filters x (fft_size/2 + 1), applied to power.
Matrix mel_filter_weights(const FilterbankSpec &spec, int fft_size,
                          int sample_rate_hz);

// Squared-magnitude frequency responses of 4th-order gammatone filters,
// peak-normalized to 1, n_filters x (fft_size/2 + 1).
Matrix gammatone_filter_weights(const FilterbankSpec &spec, int fft_size,
                                int sample_rate_hz);

// FIR impulse responses of the same filters for time-domain analysis,
// scaled so the peak frequency-domain magnitude is 1.
std::vector<std::vector<double>> gammatone_impulse_responses(
    const FilterbankSpec &spec, int sample_rate_hz, int length);

// Orthonormal DCT-II matrix, n_out x n_in (D D^T = I for n_out == n_in).
Matrix dct_matrix(int n_out, int n_in);

}  // namespace xpress

#endif  // XPRESS_FILTERBANK_HPP
