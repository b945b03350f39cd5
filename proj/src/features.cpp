// src/features.cpp

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

#include "xpress/error.hpp"
#include "xpress/features.hpp"

namespace xpress {

namespace {

constexpr double kLogFloor = 1e-10;

// energies -> log -> DCT rows kept in out (T x n_ceps).
Matrix log_dct(const Matrix &energies, int n_ceps) {
  Matrix d = dct_matrix(n_ceps, energies.cols);
  Matrix out(energies.rows, n_ceps);
  std::vector<double> logs(energies.cols);
  for (int t = 0; t < energies.rows; ++t) {
    const double *e = energies.row(t);
    for (int b = 0; b < energies.cols; ++b)
      logs[b] = std::log(std::max(e[b], kLogFloor));
    double *o = out.row(t);
    for (int k = 0; k < n_ceps; ++k) o[k] = dot(d.row(k), logs.data(), d.cols);
  }
  return out;
}

Matrix apply_filterbank(const Matrix &power, const Matrix &weights) {
  Matrix e(power.rows, weights.rows);
  for (int t = 0; t < power.rows; ++t) {
    const double *p = power.row(t);
    double *row = e.row(t);
    for (int m = 0; m < weights.rows; ++m)
      row[m] = dot(weights.row(m), p, weights.cols);
  }
  return e;
}

}  // namespace

FeatureMatrix mfcc(const PowerSpectrogram &ps, const FilterbankSpec &fb,
                   int n_ceps) {
  if (fb.kind != FilterbankKind::MelTriangular)
    Throw(ErrorCode::BadFilterbank, "mfcc requires a mel triangular filterbank");
  if (fb.n_filters < n_ceps)
    Throw(ErrorCode::BadFilterbank, "fewer filters than cepstra");
  Matrix weights = mel_filter_weights(fb, ps.spec.fft_size, ps.sample_rate_hz);
  FeatureMatrix out;
  out.data = log_dct(apply_filterbank(ps.frames, weights), n_ceps);
  out.kind = n_ceps == 20 ? FeatureKind::MFCC20 : FeatureKind::Custom;
  out.meta["feature"] = "mfcc";
  out.meta["n_ceps"] = std::to_string(n_ceps);
  out.meta["n_filters"] = std::to_string(fb.n_filters);
  validate_feature(out);
  return out;
}

FeatureMatrix gcc(const PowerSpectrogram &ps, const FilterbankSpec &fb) {
  if (fb.kind != FilterbankKind::GammatoneERB)
    Throw(ErrorCode::BadFilterbank, "gcc requires a gammatone filterbank");
  if (fb.n_filters < 20)
    Throw(ErrorCode::BadFilterbank, "fewer filters than cepstra");
  Matrix weights =
      gammatone_filter_weights(fb, ps.spec.fft_size, ps.sample_rate_hz);
  FeatureMatrix out;
  out.data = log_dct(apply_filterbank(ps.frames, weights), 20);
  out.kind = FeatureKind::GCC20;
  out.meta["feature"] = "gcc";
  out.meta["n_filters"] = std::to_string(fb.n_filters);
  validate_feature(out);
  return out;
}

Matrix nmcc_band_envelope_power(const AudioBuffer &audio,
                                const FilterbankSpec &fb,
                                const FrameSpec &spec) {
  int sr = audio.sample_rate_hz;
  int win = spec.window_samples(sr);
  int hop = spec.hop_samples(sr);
  int n = static_cast<int>(audio.samples.size());
  if (n < win) Throw(ErrorCode::AudioTooShort, "audio shorter than one window");

  int ir_len = sr / 16;
  auto irs = gammatone_impulse_responses(fb, sr, ir_len);
  int n_frames = frame_count(n, win, hop);
  Matrix env_power(n_frames, fb.n_filters);

  // Fast convolution: one forward FFT of the signal, one product + inverse
  // per band.
  int conv_len = n + ir_len - 1;
  int fft_n = 1;
  while (fft_n < conv_len) fft_n <<= 1;
  auto sig_spec = real_fft(audio.samples, fft_n);

  std::vector<double> banded(n);
  for (int m = 0; m < fb.n_filters; ++m) {
    auto ir_spec = real_fft(irs[m], fft_n);
    std::vector<std::complex<double>> prod(sig_spec.size());
    for (size_t i = 0; i < sig_spec.size(); ++i)
      prod[i] = sig_spec[i] * ir_spec[i];
    std::vector<double> full = real_ifft(prod, fft_n);
    std::copy(full.begin(), full.begin() + n, banded.begin());

    // DESA-2 amplitude envelope with Teager operator, negatives clamped.
    // psi[x] on the band signal and on its symmetric difference give
    // a[n] = 2 psi_x / sqrt(psi_y).
    std::vector<double> env(n, 0.0);
    for (int i = 1; i + 1 < n; ++i) {
      double psi_x =
          banded[i] * banded[i] - banded[i - 1] * banded[i + 1];
      if (psi_x < 0.0) psi_x = 0.0;
      double psi_y = 0.0;
      if (i >= 2 && i + 2 < n) {
        double y0 = banded[i] - banded[i - 2];
        double y1 = banded[i + 1] - banded[i - 1];
        double y2 = banded[i + 2] - banded[i];
        psi_y = y1 * y1 - y0 * y2;
      } else {
        double y1 = banded[i + 1] - banded[i - 1];
        psi_y = y1 * y1;
      }
      if (psi_y < 0.0) psi_y = 0.0;
      env[i] = psi_y > 1e-300 ? 2.0 * psi_x / std::sqrt(psi_y) : 0.0;
    }
    if (n >= 2) {
      env[0] = env[1];
      env[n - 1] = env[n - 2];
    }

    for (int t = 0; t < n_frames; ++t) {
      int start = t * hop;
      double acc = 0.0;
      for (int i = 0; i < win; ++i) acc += env[start + i] * env[start + i];
      env_power.at(t, m) = acc / win;
    }
  }
  return env_power;
}

FeatureMatrix nmcc(const AudioBuffer &audio, const FilterbankSpec &fb,
                   const FrameSpec &spec) {
  if (fb.kind != FilterbankKind::GammatoneERB)
    Throw(ErrorCode::BadFilterbank, "nmcc requires a gammatone filterbank");
  if (fb.n_filters < 20)
    Throw(ErrorCode::BadFilterbank, "fewer filters than cepstra");
  Matrix env_power = nmcc_band_envelope_power(audio, fb, spec);

  // 1/15 power-law compression, then DCT straight on the compressed values
  // (zero envelopes map to zero, keeping silent frames at exactly zero).
  Matrix compressed(env_power.rows, env_power.cols);
  for (size_t i = 0; i < env_power.data.size(); ++i)
    compressed.data[i] = std::pow(std::max(env_power.data[i], 0.0), 1.0 / 15.0);

  Matrix d = dct_matrix(20, fb.n_filters);
  FeatureMatrix out;
  out.data = Matrix(compressed.rows, 20);
  for (int t = 0; t < compressed.rows; ++t)
    for (int k = 0; k < 20; ++k)
      out.data.at(t, k) = dot(d.row(k), compressed.row(t), d.cols);
  out.kind = FeatureKind::NMCC20;
  out.meta["feature"] = "nmcc";
  out.meta["compression"] = "pow1/15";
  validate_feature(out);
  return out;
}

FeatureMatrix f0v(const AudioBuffer &audio, const FrameSpec &spec,
                  const PitchSpec &pitch) {
  int sr = audio.sample_rate_hz;
  int win = spec.window_samples(sr);
  int hop = spec.hop_samples(sr);
  int n = static_cast<int>(audio.samples.size());
  if (n < win) Throw(ErrorCode::AudioTooShort, "audio shorter than one window");

  int lag_min = static_cast<int>(std::floor(sr / pitch.f_max_hz));
  int lag_max = static_cast<int>(std::ceil(sr / pitch.f_min_hz));
  lag_max = std::min(lag_max, win - 1);
  int n_frames = frame_count(n, win, hop);

  std::vector<double> f0(n_frames, 0.0), voicing(n_frames, 0.0);
  std::vector<bool> voiced(n_frames, false);
  std::vector<double> frame(win);

  for (int t = 0; t < n_frames; ++t) {
    int start = t * hop;
    double mean = 0.0;
    for (int i = 0; i < win; ++i) mean += audio.samples[start + i];
    mean /= win;
    for (int i = 0; i < win; ++i) frame[i] = audio.samples[start + i] - mean;

    std::vector<double> ncc(lag_max + 1, 0.0);
    double best = 0.0;
    for (int lag = lag_min; lag <= lag_max; ++lag) {
      int len = win - lag;
      double xy = 0.0, xx = 0.0, yy = 0.0;
      const double *a = frame.data();
      const double *b = frame.data() + lag;
      for (int i = 0; i < len; ++i) {
        xy += a[i] * b[i];
        xx += a[i] * a[i];
        yy += b[i] * b[i];
      }
      double denom = std::sqrt(xx * yy);
      ncc[lag] = denom > 1e-300 ? xy / denom : 0.0;
      best = std::max(best, ncc[lag]);
    }
    // Smallest lag close to the global peak, to dodge subharmonic picks.
    int best_lag = 0;
    for (int lag = lag_min; lag <= lag_max; ++lag) {
      if (ncc[lag] >= 0.95 * best) {
        best_lag = lag;
        break;
      }
    }
    voicing[t] = std::clamp(best, 0.0, 1.0);
    if (voicing[t] >= pitch.voicing_threshold && best_lag > 0) {
      voiced[t] = true;
      // Parabolic refinement of the peak position.
      double delta = 0.0;
      if (best_lag > lag_min && best_lag < lag_max) {
        double y0 = ncc[best_lag - 1], y1 = ncc[best_lag], y2 = ncc[best_lag + 1];
        double denom = y0 - 2.0 * y1 + y2;
        if (std::abs(denom) > 1e-12) {
          delta = 0.5 * (y0 - y2) / denom;
          delta = std::clamp(delta, -0.5, 0.5);
        }
      }
      f0[t] = static_cast<double>(sr) / (best_lag + delta);
    }
  }

  // Fill unvoiced gaps by linear interpolation between voiced neighbors;
  // edges hold the nearest voiced value.
  int first = -1, last = -1;
  for (int t = 0; t < n_frames; ++t)
    if (voiced[t]) {
      if (first < 0) first = t;
      last = t;
    }
  if (first >= 0) {
    for (int t = 0; t < first; ++t) f0[t] = f0[first];
    for (int t = last + 1; t < n_frames; ++t) f0[t] = f0[last];
    int prev = first;
    for (int t = first + 1; t <= last; ++t) {
      if (!voiced[t]) continue;
      for (int u = prev + 1; u < t; ++u) {
        double alpha = static_cast<double>(u - prev) / (t - prev);
        f0[u] = f0[prev] + alpha * (f0[t] - f0[prev]);
      }
      prev = t;
    }
  }

  FeatureMatrix out;
  out.data = Matrix(n_frames, 3);
  for (int t = 0; t < n_frames; ++t) {
    int tp = std::max(t - 1, 0);
    int tn = std::min(t + 1, n_frames - 1);
    out.data.at(t, 0) = f0[t];
    out.data.at(t, 1) = (f0[tn] - f0[tp]) / 2.0;
    out.data.at(t, 2) = voicing[t];
  }
  out.kind = FeatureKind::F0V3;
  out.meta["feature"] = "f0v";
  out.meta["f_min_hz"] = std::to_string(pitch.f_min_hz);
  out.meta["f_max_hz"] = std::to_string(pitch.f_max_hz);
  out.meta["voicing_threshold"] = std::to_string(pitch.voicing_threshold);
  validate_feature(out);
  return out;
}

FeatureMatrix concat(const FeatureMatrix &a, const FeatureMatrix &b) {
  if (a.data.rows != b.data.rows)
    Throw(ErrorCode::FrameCountMismatch,
          "frame counts differ: " + std::to_string(a.data.rows) + " vs " +
              std::to_string(b.data.rows));
  if (b.data.cols == 0) return a;
  if (a.data.cols == 0) return b;
  FeatureMatrix out;
  out.data = Matrix(a.data.rows, a.data.cols + b.data.cols);
  for (int t = 0; t < a.data.rows; ++t) {
    double *o = out.data.row(t);
    std::copy(a.data.row(t), a.data.row(t) + a.data.cols, o);
    std::copy(b.data.row(t), b.data.row(t) + b.data.cols, o + a.data.cols);
  }
  out.kind = (a.data.cols == 20 && b.data.cols == 3) ? FeatureKind::Concat23
                                                     : FeatureKind::Custom;
  auto segments = [](const FeatureMatrix &f) {
    auto it = f.meta.find("segments");
    return it != f.meta.end() ? it->second
                              : std::string(feature_kind_name(f.kind));
  };
  out.meta["segments"] = segments(a) + "+" + segments(b);
  validate_feature(out);
  return out;
}

FeatureMatrix add_deltas(const FeatureMatrix &f) {
  if (f.data.cols != 13)
    Throw(ErrorCode::WrongKind, "add_deltas expects 13 static cepstra, got " +
                                    std::to_string(f.data.cols) + " columns");
  int t_count = f.data.rows;
  int d = f.data.cols;

  // Regression deltas over +-2 with edge repetition:
  // delta_t = sum_n n*(c[t+n]-c[t-n]) / (2*sum n^2).
  auto regress = [&](const Matrix &src) {
    Matrix out(src.rows, src.cols);
    const double denom = 2.0 * (1.0 + 4.0);
    for (int t = 0; t < src.rows; ++t) {
      for (int c = 0; c < src.cols; ++c) {
        double acc = 0.0;
        for (int n = 1; n <= 2; ++n) {
          int hi = std::min(t + n, src.rows - 1);
          int lo = std::max(t - n, 0);
          acc += n * (src.at(hi, c) - src.at(lo, c));
        }
        out.at(t, c) = acc / denom;
      }
    }
    return out;
  };

  Matrix delta = regress(f.data);
  Matrix delta2 = regress(delta);

  FeatureMatrix out;
  out.data = Matrix(t_count, 3 * d);
  for (int t = 0; t < t_count; ++t) {
    double *o = out.data.row(t);
    std::copy(f.data.row(t), f.data.row(t) + d, o);
    std::copy(delta.row(t), delta.row(t) + d, o + d);
    std::copy(delta2.row(t), delta2.row(t) + d, o + 2 * d);
  }
  out.kind = FeatureKind::MFCC39;
  out.meta = f.meta;
  out.meta["deltas"] = "static+d+dd";
  validate_feature(out);
  return out;
}

FeatureMatrix splice(const FeatureMatrix &f, int context) {
  if (context < 0) Throw(ErrorCode::BadConfig, "negative splice context");
  int t_count = f.data.rows;
  int d = f.data.cols;
  int width = 2 * context + 1;
  FeatureMatrix out;
  out.data = Matrix(t_count, d * width);
  for (int t = 0; t < t_count; ++t) {
    double *o = out.data.row(t);
    for (int k = -context; k <= context; ++k) {
      int src = std::clamp(t + k, 0, t_count - 1);
      std::copy(f.data.row(src), f.data.row(src) + d, o + (k + context) * d);
    }
  }
  out.kind = (d == 39 && context == 5) ? FeatureKind::Spliced429
             : context == 0            ? f.kind
                                       : FeatureKind::Custom;
  out.meta = f.meta;
  out.meta["splice_context"] = std::to_string(context);
  validate_feature(out);
  return out;
}

FeatureMatrix cmvn(const FeatureMatrix &f) {
  if (f.data.rows < 2)
    Throw(ErrorCode::TooFewFrames, "cmvn needs at least 2 frames");
  constexpr double kVarFloor = 1e-8;
  FeatureMatrix out = f;
  int t_count = f.data.rows;
  for (int c = 0; c < f.data.cols; ++c) {
    double mean = 0.0;
    for (int t = 0; t < t_count; ++t) mean += f.data.at(t, c);
    mean /= t_count;
    double var = 0.0;
    for (int t = 0; t < t_count; ++t) {
      double d = f.data.at(t, c) - mean;
      var += d * d;
    }
    var /= t_count;
    double scale = var > kVarFloor ? 1.0 / std::sqrt(var) : 1.0;
    for (int t = 0; t < t_count; ++t)
      out.data.at(t, c) = (f.data.at(t, c) - mean) * scale;
  }
  out.meta["cmvn"] = "utt";
  validate_feature(out);
  return out;
}

FeatureMatrix mfcc39(const AudioBuffer &audio, const FrameSpec &spec,
                     const FilterbankSpec &fb) {
  PowerSpectrogram ps = frame_power_spectrum(audio, spec);
  return add_deltas(mfcc(ps, fb, 13));
}

}  // namespace xpress
