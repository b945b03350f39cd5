// src/synth.cpp

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

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <random>

#include "xpress/dsp.hpp"
#include "xpress/error.hpp"
#include "xpress/synth.hpp"

namespace xpress {

namespace {

constexpr int kSampleRate = 16000;

// Shared class-independent transcript pool, assembled deterministically.
std::vector<std::string> transcript_pool() {
  static const char *kActions[] = {"turn on", "turn off", "dim", "play"};
  static const char *kThings[] = {"the lights", "the music", "the fan",
                                  "the heater", "the alarm"};
  static const char *kPlaces[] = {"portland", "austin", "denver", "oakland",
                                  "madrid", "tokyo"};
  static const char *kAsks[] = {"what's the weather in", "how far is",
                                "what time is it in",
                                "find a coffee shop near"};
  static const char *kMisc[] = {
      "set a timer for ten minutes",
      "remind me to call mom tomorrow",
      "add milk to my shopping list",
      "how many ounces in a pound",
      "tell me a joke",
      "what's on my calendar today",
      "send a message to alex",
      "navigate to the nearest gas station",
      "who sings this song",
      "flip a coin",
      "roll a dice",
      "what's the score of the game",
      "is it going to rain tonight",
      "call the dentist office",
      "when is sunset today",
      "convert five miles to kilometers",
      "read my latest email",
      "skip this track",
      "turn up the volume a little",
      "what day is thanksgiving this year",
  };
  std::vector<std::string> pool;
  for (const char *a : kActions)
    for (const char *t : kThings) pool.push_back(std::string(a) + " " + t);
  for (const char *a : kAsks)
    for (const char *p : kPlaces) pool.push_back(std::string(a) + " " + p);
  for (const char *m : kMisc) pool.push_back(m);
  return pool;
}

struct UtterancePlan {
  bool expressive = false;
  double duration_s = 0.0;
  double brightness = 0.0;   // shared latent: tilt and pitch level
  double f0_base = 0.0;
  double pitch_range = 0.0;  // relative contour range r
  double pitch_mod_hz = 0.0;
  double am_depth = 0.0;
  double am_hz = 0.0;
  double tilt_q = 0.0;       // power-law exponent, monotone in brightness
  double f0_spread = 0.0;    // planned contour std in Hz (arousal driver)
  double noise_floor = 0.0;
  double peak_amp = 0.0;
  int transcript_idx = 0;
  std::string intent;
};

int quantize_vote(double latent, double sigma, std::mt19937_64 &rng) {
  std::normal_distribution<double> noise(0.0, sigma);
  double v = latent + noise(rng);
  if (v < 1.0 / 3.0) return 1;
  if (v < 2.0 / 3.0) return 2;
  return 3;
}

ExprVote draw_expr_vote(double p_yes, double p_ns, std::mt19937_64 &rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double r = u(rng);
  if (r < p_yes) return ExprVote::Yes;
  if (r < p_yes + p_ns) return ExprVote::NotSure;
  return ExprVote::No;
}

// Rank of v among all values, mapped to [0, 1].
double quantile_of(const std::vector<double> &sorted, double v) {
  auto it = std::lower_bound(sorted.begin(), sorted.end(), v);
  size_t rank = static_cast<size_t>(it - sorted.begin());
  return sorted.size() > 1
             ? static_cast<double>(rank) / static_cast<double>(sorted.size() - 1)
             : 0.5;
}

std::vector<double> synthesize(const UtterancePlan &plan, uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> uphase(0.0, 2.0 * M_PI);
  std::normal_distribution<double> gauss(0.0, 1.0);

  int n = static_cast<int>(std::lround(plan.duration_s * kSampleRate));
  std::vector<double> x(n, 0.0);

  // Harmonic amplitudes with a power-law tilt; content capped near 4 kHz.
  int h_max = std::min(24, static_cast<int>(4000.0 / plan.f0_base));
  h_max = std::max(h_max, 3);
  std::vector<double> h_amp(h_max), h_phase(h_max);
  double q = 0.5 + 1.7 * plan.tilt_q;
  for (int h = 0; h < h_max; ++h) {
    h_amp[h] = std::pow(static_cast<double>(h + 1), -q);
    h_phase[h] = uphase(rng);
  }

  double pitch_phase0 = uphase(rng);
  double am_phase = uphase(rng);
  double dip_center = -1.0, dip_width = 0.06;
  if (plan.duration_s > 1.8) {
    std::uniform_real_distribution<double> upos(0.35, 0.65);
    dip_center = upos(rng) * plan.duration_s;
  }

  double phase = 0.0;
  double jitter = 0.0;
  std::normal_distribution<double> jstep(0.0, 0.0012);
  for (int i = 0; i < n; ++i) {
    double t = static_cast<double>(i) / kSampleRate;
    jitter = 0.995 * jitter + jstep(rng);
    double f0 = plan.f0_base *
                (1.0 + plan.pitch_range *
                           std::sin(2.0 * M_PI * plan.pitch_mod_hz * t +
                                    pitch_phase0) +
                 jitter);
    f0 = std::clamp(f0, 70.0, 380.0);
    phase += 2.0 * M_PI * f0 / kSampleRate;

    double s = 0.0;
    for (int h = 0; h < h_max; ++h) {
      if ((h + 1) * f0 > 7200.0) break;
      s += h_amp[h] * std::sin((h + 1) * phase + h_phase[h]);
    }

    double env = 1.0;
    double m = plan.am_depth;
    env *= 1.0 - m + m * (0.5 + 0.5 * std::sin(2.0 * M_PI * plan.am_hz * t +
                                               am_phase));
    // Onset/offset ramps.
    double edge = 0.05;
    if (t < edge) env *= 0.5 - 0.5 * std::cos(M_PI * t / edge);
    double tail = plan.duration_s - t;
    if (tail < 0.08) env *= 0.5 - 0.5 * std::cos(M_PI * tail / 0.08);
    if (dip_center > 0.0) {
      double d = (t - dip_center) / dip_width;
      env *= 1.0 - 0.8 * std::exp(-0.5 * d * d);
    }

    x[i] = s * env + plan.noise_floor * gauss(rng);
  }

  double peak = 1e-9;
  for (double v : x) peak = std::max(peak, std::abs(v));
  double scale = plan.peak_amp / peak;
  for (double &v : x) v *= scale;
  return x;
}

}  // namespace

std::string resolve_audio_path(const std::string &manifest_path,
                               const std::string &audio_field) {
  std::filesystem::path audio(audio_field);
  if (audio.is_absolute()) return audio_field;
  return (std::filesystem::path(manifest_path).parent_path() / audio).string();
}

SynthResult synth_corpus(const SynthConfig &config) {
  if (config.n < 100)
    Throw(ErrorCode::BadConfig, "corpus needs at least 100 queries");
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(fs::path(config.out_dir) / "wav", ec);
  if (ec) Throw(ErrorCode::IoError, "cannot create " + config.out_dir);

  auto pool = transcript_pool();
  static const char *kIntents[] = {"resource", "accident", "prank"};

  // Pass 1: draw every per-utterance parameter.
  std::vector<UtterancePlan> plans(config.n);
  for (int i = 0; i < config.n; ++i) {
    std::mt19937_64 rng(config.seed + 0x9E3779B97F4A7C15ULL * (i + 1));
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    std::normal_distribution<double> gauss(0.0, 1.0);
    UtterancePlan &p = plans[i];
    p.expressive = u01(rng) < config.p_expressive;
    p.duration_s = config.min_dur_s +
                   (config.max_dur_s - config.min_dur_s) * u01(rng);
    p.brightness = u01(rng);
    p.f0_base =
        110.0 + 170.0 * std::clamp(p.brightness + 0.08 * gauss(rng), 0.0, 1.0);
    bool both = u01(rng) < config.p_both;
    if (p.expressive) {
      p.pitch_range = config.expr_pitch_lo +
                      (config.expr_pitch_hi - config.expr_pitch_lo) * u01(rng);
      p.am_depth = both ? config.expr_am_lo + (config.expr_am_hi -
                                               config.expr_am_lo) *
                                                  u01(rng)
                        : config.calm_am_lo + (config.calm_am_hi -
                                               config.calm_am_lo) *
                                                  u01(rng);
      p.pitch_mod_hz = 1.5 + 2.5 * u01(rng);
    } else {
      p.pitch_range = config.calm_pitch_lo +
                      (config.calm_pitch_hi - config.calm_pitch_lo) * u01(rng);
      p.am_depth = config.calm_am_lo +
                   (config.calm_am_hi - config.calm_am_lo) * u01(rng);
      p.pitch_mod_hz = 1.5 + 2.5 * u01(rng);
    }
    p.am_hz = 2.5 + 3.5 * u01(rng);
    p.tilt_q = p.brightness;
    p.f0_spread = p.f0_base * p.pitch_range / std::sqrt(2.0);
    p.noise_floor = 0.01 + 0.02 * u01(rng);
    p.peak_amp = 0.25 + 0.25 * u01(rng);
    p.transcript_idx = static_cast<int>(u01(rng) * pool.size()) %
                       static_cast<int>(pool.size());
    double ir = u01(rng);
    p.intent = ir < 0.8 ? kIntents[0] : ir < 0.95 ? kIntents[1] : kIntents[2];
  }

  // Corpus-level quantiles for the emotion latents.
  std::vector<double> spreads, tilts;
  spreads.reserve(config.n);
  tilts.reserve(config.n);
  for (const auto &p : plans) {
    spreads.push_back(p.f0_spread);
    tilts.push_back(p.tilt_q);
  }
  std::sort(spreads.begin(), spreads.end());
  std::sort(tilts.begin(), tilts.end());

  // Pass 2: votes, audio, manifest.
  SynthResult result;
  result.queries.reserve(config.n);
  for (int i = 0; i < config.n; ++i) {
    const UtterancePlan &p = plans[i];
    std::mt19937_64 vote_rng(config.seed ^ 0xC2B2AE3D27D4EB4FULL ^
                             (0x165667B19E3779F9ULL * (i + 1)));
    GradedQuery q;
    char idbuf[16];
    std::snprintf(idbuf, sizeof(idbuf), "q%05d", i);
    q.id = idbuf;
    q.audio_path = std::string("wav/") + idbuf + ".wav";
    q.transcript = pool[p.transcript_idx];
    q.intent_type = p.intent;

    double p_yes = p.expressive ? config.p_yes_given_expr
                                : config.p_yes_given_calm;
    double p_ns = p.expressive ? config.p_ns_given_expr
                               : config.p_ns_given_calm;
    for (int g = 0; g < 4; ++g)
      q.expr_votes[g] = draw_expr_vote(p_yes, p_ns, vote_rng);

    double arousal_latent = quantile_of(spreads, p.f0_spread);
    double valence_latent = quantile_of(tilts, p.tilt_q);
    for (int g = 0; g < 4; ++g)
      q.arousal_votes[g] =
          quantize_vote(arousal_latent, config.vote_sigma, vote_rng);
    for (int g = 0; g < 4; ++g)
      q.valence_votes[g] =
          quantize_vote(valence_latent, config.vote_sigma, vote_rng);

    std::vector<double> audio =
        synthesize(p, config.seed ^ (0xD6E8FEB86659FD93ULL * (i + 1)));
    write_wav((fs::path(config.out_dir) / q.audio_path).string(), audio,
              kSampleRate);
    result.queries.push_back(std::move(q));
  }

  result.manifest_path =
      (fs::path(config.out_dir) / "manifest.jsonl").string();
  save_manifest(result.manifest_path, result.queries);
  return result;
}

}  // namespace xpress
