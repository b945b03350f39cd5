// include/xpress/features.hpp

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

#ifndef XPRESS_FEATURES_HPP
#define XPRESS_FEATURES_HPP

#include "xpress/dsp.hpp"
#include "xpress/feature_matrix.hpp"
#include "xpress/filterbank.hpp"

namespace xpress {

// Mel cepstra: filterbank energies -> log(max(e, 1e-10)) -> orthonormal
// DCT-II, keeping coefficients 0..n_ceps-1. Kind is MFCC20 for n_ceps == 20,
// Custom otherwise (13 statics feed add_deltas).
FeatureMatrix mfcc(const PowerSpectrogram &ps, const FilterbankSpec &fb,
                   int n_ceps = 20);

// Gammatone cepstra: power spectrum weighted by squared-magnitude gammatone
// responses, log compression, DCT-II, 20 coefficients.
FeatureMatrix gcc(const PowerSpectrogram &ps, const FilterbankSpec &fb);

// Modulation cepstra: per-band time-domain gammatone filtering, AM envelope
// via the discrete energy separation algorithm, frame-averaged envelope
// power, 1/15 power-law compression, DCT-II, 20 coefficients.
FeatureMatrix nmcc(const AudioBuffer &audio, const FilterbankSpec &fb,
                   const FrameSpec &spec);

// Per-band frame-averaged envelope power before compression/DCT (T x
// n_filters). Exposed for analysis.
Matrix nmcc_band_envelope_power(const AudioBuffer &audio,
                                const FilterbankSpec &fb,
                                const FrameSpec &spec);

struct PitchSpec {
  double f_min_hz = 60.0;
  double f_max_hz = 400.0;
  double voicing_threshold = 0.3;
};

// Pitch, pitch-delta and voicing, columns (f0, delta f0, v). Voicing is the
// clamped NCC peak; unvoiced f0 is filled by linear interpolation between
// voiced neighbors with held edges.
FeatureMatrix f0v(const AudioBuffer &audio, const FrameSpec &spec,
                  const PitchSpec &pitch = PitchSpec());

// Column-wise concatenation; kind Concat23 when the result is 20+3 wide.
// meta["segments"] records the per-block kinds, e.g. "mfcc20+f0v3".
FeatureMatrix concat(const FeatureMatrix &a, const FeatureMatrix &b);

// 13 static cepstra -> [static, delta, delta-delta], regression window +-2
// with edge frames repeated.
FeatureMatrix add_deltas(const FeatureMatrix &f);

// Each output row is rows t-context..t+context concatenated, boundaries
// repeated. 39-dim input with context 5 gives Spliced429.
FeatureMatrix splice(const FeatureMatrix &f, int context);

// Per-utterance, per-dimension mean/variance normalization. Dimensions whose
// variance is at the 1e-8 floor are centered only.
FeatureMatrix cmvn(const FeatureMatrix &f);

// 13 statics + deltas + delta-deltas from the same mel pipeline.
FeatureMatrix mfcc39(const AudioBuffer &audio, const FrameSpec &spec,
                     const FilterbankSpec &fb);

}  // namespace xpress

#endif  // XPRESS_FEATURES_HPP
