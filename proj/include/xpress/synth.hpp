// include/xpress/synth.hpp

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

#ifndef XPRESS_SYNTH_HPP
#define XPRESS_SYNTH_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "xpress/data.hpp"

namespace xpress {

// Desk-scale synthetic corpus: harmonic-plus-noise utterances where the
// expressive class carries wide, modulated f0 contours and (for a subset)
// amplitude modulation, while the calm class stays flat. Arousal votes track
// the f0-variation quantile, valence votes the spectral-tilt quantile (tilt
// co-varies with pitch level through a shared brightness latent). Transcripts
// come from one class-independent pool, so lexical content carries no label
// information.
struct SynthConfig {
  int n = 2000;
  uint64_t seed = 1;
  std::string out_dir = "synth_corpus";

  double min_dur_s = 1.0;
  double max_dur_s = 3.0;
  double p_expressive = 0.35;

  // Expressive subtypes: with probability p_both the pitch movement comes
  // with strong amplitude modulation; otherwise the cue is pitch-only.
  double p_both = 0.55;
  double expr_pitch_lo = 0.10, expr_pitch_hi = 0.30;  // relative f0 range
  double calm_pitch_lo = 0.00, calm_pitch_hi = 0.03;
  double expr_am_lo = 0.45, expr_am_hi = 0.85;  // AM depth
  double calm_am_lo = 0.00, calm_am_hi = 0.18;

  // Grader simulation.
  double vote_sigma = 0.13;  // noise on the 0..1 emotion latents
  double p_yes_given_expr = 0.78, p_ns_given_expr = 0.15;
  double p_yes_given_calm = 0.06, p_ns_given_calm = 0.17;
};

struct SynthResult {
  std::string manifest_path;
  std::vector<GradedQuery> queries;
};

// Writes out_dir/wav/<id>.wav for every query plus out_dir/manifest.jsonl.
// Identical (config, seed) produce bitwise-identical audio and manifest.
// Requires n >= 100.
SynthResult synth_corpus(const SynthConfig &config);

// Joins a manifest-relative audio path with the manifest's directory.
std::string resolve_audio_path(const std::string &manifest_path,
                               const std::string &audio_field);

}  // namespace xpress

#endif  // XPRESS_SYNTH_HPP
